"""R-peak detection from the steepness of the absolute gradient."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps
from scipy.ndimage import uniform_filter1d

from .dsp import DEFAULT_CLEANING, EcgRecord
from .errors import DetectionError, InputError, LeadNotFoundError


@dataclass(frozen=True)
class RPeakAnnotation:
    """Detected R-peak sample indices and the mean heart rate of a record."""

    peaks: np.ndarray
    heart_rate_bpm: float
    lead_used: str = ""

    def __post_init__(self):
        peaks = np.asarray(self.peaks, dtype=np.int64).ravel()
        if peaks.size > 1 and np.any(np.diff(peaks) <= 0):
            raise InputError("peaks must be strictly increasing")
        object.__setattr__(self, "peaks", peaks)
        object.__setattr__(self, "heart_rate_bpm", float(self.heart_rate_bpm))

    @classmethod
    def from_peaks(cls, peaks, fs, lead_used="", method="mean"):
        """Build an annotation from known peaks, deriving the heart rate."""
        peaks = np.asarray(peaks, dtype=np.int64)
        return cls(peaks, estimate_heart_rate(peaks, fs, method), lead_used)


@dataclass(frozen=True)
class DetectorConfig:
    """Window lengths (seconds) and gains of the gradient detector."""

    smooth_window: float = 0.10
    average_window: float = 0.75
    threshold_gain: float = 1.5
    min_qrs_width: float = 0.04
    refractory: float = 0.3
    edge_margin: float = 0.05
    hr_method: str = "mean"
    #: zero-phase low-pass (Hz) applied before locating the maximum; None disables
    localize_lowpass: float | None = 40.0
    #: candidates below this fraction of the median candidate |amplitude| are
    #: dropped; None disables
    min_relative_amplitude: float | None = 0.4


def clean_lead(record: EcgRecord, lead="II", filters=DEFAULT_CLEANING):
    """Select one lead and run it through the cleaning filters.

    Without lead names a string lead falls back to row 1 (lead II in the
    standard 12-lead order), or row 0 for a single-lead record.
    """
    if isinstance(lead, str) and not record.lead_names:
        idx = min(1, record.n_leads - 1)
    else:
        try:
            idx = record.lead_index(lead)
        except (KeyError, IndexError):
            raise LeadNotFoundError(f"lead {lead!r} not in record {record.record_id!r} "
                                    f"(leads: {list(record.lead_names)})") from None
    x = record.signal[idx]
    for spec in filters:
        x = spec.apply(x, record.fs)
    return x


def _lead_label(record, lead):
    if isinstance(lead, str) and not record.lead_names:
        return str(min(1, record.n_leads - 1))
    idx = record.lead_index(lead)
    return record.lead_names[idx] if record.lead_names else str(idx)


def estimate_heart_rate(peaks, fs, method="mean"):
    """Heart rate in bpm from R-peak indices.

    ``method="mean"`` uses the span between first and last peak,
    ``method="median"`` the median RR interval (robust to ectopic beats).
    """
    peaks = np.asarray(getattr(peaks, "peaks", peaks), dtype=np.int64)
    if peaks.size < 2:
        raise InputError("heart rate needs at least 2 peaks")
    if method == "mean":
        return 60.0 * fs * (peaks.size - 1) / float(peaks[-1] - peaks[0])
    if method == "median":
        return 60.0 * fs / float(np.median(np.diff(peaks)))
    raise InputError(f"unknown heart-rate method {method!r}")


def _qrs_regions(x, fs, cfg):
    grad = np.abs(np.gradient(x))
    smooth = uniform_filter1d(grad, max(1, int(round(cfg.smooth_window * fs))), mode="reflect")
    slow = uniform_filter1d(smooth, max(1, int(round(cfg.average_window * fs))), mode="reflect")
    active = np.concatenate(([False], smooth > cfg.threshold_gain * slow, [False]))
    edges = np.flatnonzero(np.diff(active.astype(np.int8)))
    return edges[0::2], edges[1::2]  # [start, end)


def detect_r_peaks(x_clean, fs, config=None, lead_used=""):
    """Locate R-peaks in a cleaned single-lead ECG.

    QRS regions are the stretches where the smoothed absolute gradient exceeds
    ``threshold_gain`` times its slower moving average. Regions narrower than
    ``min_qrs_width`` or touching the first/last ``edge_margin`` seconds are
    dropped. Each remaining region contributes the sample of largest absolute
    amplitude; candidates closer than ``refractory`` keep the larger one.
    Amplitudes are compared after a ``localize_lowpass`` smoothing, which keeps
    broadband noise from moving the maximum by several samples. Finally,
    candidates smaller than ``min_relative_amplitude`` times the median
    candidate amplitude are dropped. When the RR interval exceeds the slow
    averaging window, its average between beats only sees noise and T-wave
    slope, and the ratio test alone lets such stretches through.

    Raises
    ------
    DetectionError
        Fewer than two peaks were found. ``err.partial`` holds what was found.
    """
    cfg = config or DetectorConfig()
    x = np.asarray(x_clean, dtype=np.float64).ravel()
    n = x.size
    if n < fs:
        raise InputError(f"need at least 1 s of signal ({int(np.ceil(fs))} samples), got {n}")

    starts, ends = _qrs_regions(x, fs, cfg)
    y = x
    if cfg.localize_lowpass is not None and cfg.localize_lowpass < fs / 2:
        sos = sps.butter(4, cfg.localize_lowpass, fs=fs, output="sos")
        y = sps.sosfiltfilt(sos, x)
    min_width = cfg.min_qrs_width * fs
    margin = int(round(cfg.edge_margin * fs))
    refractory = cfg.refractory * fs

    peaks = []
    for s, e in zip(starts, ends):
        if e - s < min_width or s < margin or e > n - margin:
            continue
        p = s + int(np.argmax(np.abs(y[s:e])))
        if peaks and p - peaks[-1] < refractory:
            if abs(y[p]) > abs(y[peaks[-1]]):
                peaks[-1] = p
            continue
        peaks.append(p)

    peaks = np.asarray(peaks, dtype=np.int64)
    if cfg.min_relative_amplitude is not None and peaks.size:
        amp = np.abs(y[peaks])
        peaks = peaks[amp >= cfg.min_relative_amplitude * np.median(amp)]
    if peaks.size < 2:
        raise DetectionError(f"found {peaks.size} R-peak(s), need at least 2",
                             partial=RPeakAnnotation(peaks, 0.0, lead_used))
    hr = estimate_heart_rate(peaks, fs, cfg.hr_method)
    return RPeakAnnotation(peaks, hr, lead_used)


def annotate(record: EcgRecord, lead="II", config=None, filters=DEFAULT_CLEANING):
    """Clean ``lead`` of ``record`` and detect its R-peaks."""
    x = clean_lead(record, lead, filters)
    return detect_r_peaks(x, record.fs, config, lead_used=_lead_label(record, lead))
