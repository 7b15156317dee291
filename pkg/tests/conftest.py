import numpy as np
import pytest

from ecgalign import SynthSpec, design_template, generate_ecg


@pytest.fixture(scope="session")
def template():
    return design_template(10.0, 500.0, 60.0)


@pytest.fixture(scope="session")
def on_grid(template):
    """Noise-free 60 bpm record whose R-peaks sit exactly on the default template grid."""
    return generate_ecg(SynthSpec(bpm=60.0, first_r=template.initial_offset), "grid")


def synth(bpm, seed=0, jitter=0.0, snr=None, **kw):
    return generate_ecg(SynthSpec(bpm=bpm, rr_jitter=jitter, noise_snr_db=snr, seed=seed, **kw),
                        f"s{seed}")


def interior(peaks, n, margin):
    peaks = np.asarray(peaks)
    return peaks[(peaks >= margin) & (peaks < n - margin)]


_ACCEPTANCE = {}


@pytest.fixture
def verdict():
    """Record one acceptance line: ``verdict(key, title, passed, detail)``."""
    def record(key, title, passed, detail=""):
        _ACCEPTANCE[key] = (title, bool(passed), detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=str):
        title, ok, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}. {title}: {detail}")
