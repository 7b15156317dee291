"""Synthetic ECGs built from Gaussian bumps, with exact ground truth."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dsp import STANDARD_LEADS, EcgRecord
from .errors import ParameterError

#: amplitude (mV), center offset as a fraction of RR, width (Gaussian sigma, s)
DEFAULT_WAVES = {
    "P": (0.15, -0.28, 0.040),
    "Q": (-0.10, -0.03, 0.010),
    "R": (1.00, 0.00, 0.012),
    "S": (-0.20, 0.03, 0.012),
    "T": (0.30, 0.32, 0.070),
}

#: per-lead multiples of lead II; aVR is inverted
LEAD_GAINS = (0.6, 1.0, 0.4, -0.8, 0.1, 0.7, 0.35, 0.8, 1.1, 1.3, 1.2, 0.9)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic recording.

    ``first_r`` is the sample index of the first R-peak; ``None`` places it
    at 35% of the nominal RR interval. ``noise_snr_db=None`` disables noise.
    """

    fs: float = 500.0
    duration_s: float = 10.0
    bpm: float = 60.0
    wave_params: dict = field(default_factory=lambda: dict(DEFAULT_WAVES))
    rr_jitter: float = 0.0
    noise_snr_db: float | None = None
    seed: int = 0
    first_r: int | None = None
    n_leads: int = 12

    def __post_init__(self):
        if self.fs <= 0 or self.duration_s <= 0 or self.bpm <= 0:
            raise ParameterError("fs, duration_s and bpm must be positive")
        if self.rr_jitter < 0:
            raise ParameterError("rr_jitter must be non-negative")
        if not 1 <= self.n_leads <= len(LEAD_GAINS):
            raise ParameterError(f"n_leads must be in [1, {len(LEAD_GAINS)}]")
        missing = set("PQRST") - set(self.wave_params)
        if missing:
            raise ParameterError(f"wave_params lacks {sorted(missing)}")
        r_amp = abs(self.wave_params["R"][0])
        for name, (amp, _, width) in self.wave_params.items():
            if width <= 0:
                raise ParameterError(f"width of {name} must be positive")
            if name != "R" and abs(amp) >= r_amp:
                raise ParameterError("R must have the largest amplitude magnitude")

    @property
    def n_samples(self):
        return int(round(self.duration_s * self.fs))

    @property
    def rr_samples(self):
        return 60.0 * self.fs / self.bpm

    def scaled(self, c):
        """Same spec with every wave amplitude multiplied by ``c``."""
        waves = {k: (a * c, o, w) for k, (a, o, w) in self.wave_params.items()}
        return replace(self, wave_params=waves)


@dataclass(frozen=True)
class GroundTruth:
    """Exact fiducials of the beats whose R-peak lies inside the record.

    P-onsets and T-offsets are rounded sample positions and may fall outside
    ``[0, n_samples)`` for the first and last beat.
    """

    r_peaks: np.ndarray
    p_onsets: np.ndarray
    t_offsets: np.ndarray
    rr: np.ndarray


def _r_positions(spec, rng):
    n = spec.n_samples
    rr_mean = spec.rr_samples
    first = int(round(0.35 * rr_mean)) if spec.first_r is None else int(spec.first_r)
    # one beat before the record and enough after it to fill the edges
    count = int(np.ceil((n - first) / rr_mean)) + 3
    if spec.rr_jitter > 0:
        rr = rng.normal(rr_mean, spec.rr_jitter * rr_mean, size=count)
        rr = np.maximum(rr, 0.25 * rr_mean)
    else:
        rr = np.full(count, rr_mean)
    pos = first + np.concatenate(([-rr[0], 0.0], np.cumsum(rr[1:-1])))
    return np.round(pos).astype(np.int64)


def _beat_waves(spec, r, rr_prev, rr_next):
    """Yield (center, sigma_samples, amplitude) for each wave of one beat."""
    for name in "PQRST":
        amp, offset, width = spec.wave_params[name]
        rr = rr_prev if offset < 0 else rr_next
        yield name, r + offset * rr, width * spec.fs, amp


def generate_ecg(spec: SynthSpec, record_id="synthetic"):
    """Render a multi-lead synthetic ECG and its ground truth.

    Returns
    -------
    record : EcgRecord
    truth : GroundTruth
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_samples
    t = np.arange(n, dtype=np.float64)
    r_pos = _r_positions(spec, rng)

    lead2 = np.zeros(n)
    r_in, p_on, t_off, rr_list = [], [], [], []
    for k in range(len(r_pos)):
        r = r_pos[k]
        rr_prev = float(r - r_pos[k - 1]) if k > 0 else float(r_pos[1] - r)
        rr_next = float(r_pos[k + 1] - r) if k + 1 < len(r_pos) else rr_prev
        waves = {}
        for name, center, sigma, amp in _beat_waves(spec, r, rr_prev, rr_next):
            waves[name] = (center, sigma)
            lo = max(0, int(center - 6 * sigma))
            hi = min(n, int(center + 6 * sigma) + 2)
            if lo < hi:
                lead2[lo:hi] += amp * np.exp(-0.5 * ((t[lo:hi] - center) / sigma) ** 2)
        if 0 <= r < n:
            r_in.append(r)
            p_on.append(int(np.round(waves["P"][0] - 3 * waves["P"][1])))
            t_off.append(int(np.round(waves["T"][0] + 3 * waves["T"][1])))
            rr_list.append(rr_next)

    gains = np.asarray(LEAD_GAINS[:spec.n_leads] if spec.n_leads > 1 else (1.0,))[:, np.newaxis]
    signal = gains * lead2
    if spec.noise_snr_db is not None:
        power = np.mean(signal ** 2, axis=1, keepdims=True)
        sigma = np.sqrt(power / 10.0 ** (spec.noise_snr_db / 10.0))
        signal = signal + sigma * rng.standard_normal(signal.shape)

    names = STANDARD_LEADS[:spec.n_leads] if spec.n_leads > 1 else ("II",)
    record = EcgRecord(signal, spec.fs, names, record_id)
    truth = GroundTruth(np.asarray(r_in, dtype=np.int64), np.asarray(p_on, dtype=np.int64),
                        np.asarray(t_off, dtype=np.int64), np.asarray(rr_list))
    return record, truth
