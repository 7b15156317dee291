"""Numeric primitives: records, zero-phase IIR filters, spectral resampling and scaling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import InputError, ParameterError

STANDARD_LEADS = ("I", "II", "III", "aVR", "aVL", "aVF",
                  "V1", "V2", "V3", "V4", "V5", "V6")


@dataclass(frozen=True)
class EcgRecord:
    """A multi-lead sampled ECG.

    Parameters
    ----------
    signal : ndarray, shape (n_leads, n_samples)
        Amplitudes in millivolts. A 1-d input is promoted to a single lead.
    fs : float
        Sampling rate in Hz.
    lead_names : sequence of str, optional
        One name per lead, or empty when the source carries no names.
    record_id : str, optional
        Opaque identifier, used to name output artifacts.
    """

    signal: np.ndarray
    fs: float
    lead_names: tuple = ()
    record_id: str = ""

    def __post_init__(self):
        sig = np.asarray(self.signal, dtype=np.float64)
        if sig.ndim == 1:
            sig = sig[np.newaxis, :]
        if sig.ndim != 2 or sig.shape[0] < 1 or sig.shape[1] < 1:
            raise InputError(f"signal must be a non-empty (n_leads, n_samples) matrix, got shape {sig.shape}")
        if not np.isfinite(self.fs) or self.fs <= 0:
            raise InputError(f"fs must be positive, got {self.fs}")
        names = tuple(str(n) for n in self.lead_names)
        if names and len(names) != sig.shape[0]:
            raise InputError(f"{len(names)} lead names for {sig.shape[0]} leads")
        object.__setattr__(self, "signal", sig)
        object.__setattr__(self, "fs", float(self.fs))
        object.__setattr__(self, "lead_names", names)

    @property
    def n_leads(self):
        return self.signal.shape[0]

    @property
    def n_samples(self):
        return self.signal.shape[1]

    def lead_index(self, lead):
        """Resolve a lead name or integer index to a row index."""
        if isinstance(lead, (int, np.integer)):
            if not -self.n_leads <= lead < self.n_leads:
                raise IndexError(f"lead index {lead} out of range for {self.n_leads} leads")
            return int(lead) % self.n_leads
        try:
            return self.lead_names.index(lead)
        except ValueError:
            raise KeyError(lead) from None


@dataclass(frozen=True)
class FilterSpec:
    """Description of one preprocessing filter stage."""

    kind: str
    cutoff_hz: float = 0.5
    order: int = 5
    notch_hz: float = 50.0
    quality: float = 30.0

    def __post_init__(self):
        if self.kind not in ("highpass", "powerline-notch"):
            raise ParameterError(f"unknown filter kind {self.kind!r}")
        if self.order < 1:
            raise ParameterError("filter order must be positive")

    def apply(self, x, fs):
        if self.kind == "highpass":
            return butterworth_highpass(x, fs, self.cutoff_hz, self.order)
        return powerline_notch(x, fs, self.notch_hz, self.quality)


DEFAULT_CLEANING = (FilterSpec("highpass", cutoff_hz=0.5, order=5),
                    FilterSpec("powerline-notch", notch_hz=50.0))


def _check_band(freq, fs, what):
    if not (np.isfinite(freq) and 0 < freq < fs / 2):
        raise ParameterError(f"{what} must lie in (0, fs/2) = (0, {fs / 2}), got {freq}")


def butterworth_highpass(x, fs, cutoff=0.5, order=5):
    """Zero-phase Butterworth high-pass filter.

    The filter is realized as cascaded second-order sections and run
    forward and backward, so the effective magnitude response is the square
    of the designed one and the phase is zero.

    Parameters
    ----------
    x : array_like
        Input samples. For 2-d input the last axis is filtered.
    fs : float
        Sampling rate in Hz.
    cutoff : float
        -3 dB frequency of the single-pass design, in Hz.
    order : int
        Filter order.

    Returns
    -------
    ndarray
        Filtered samples, same shape as ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    if int(order) != order or order < 1:
        raise ParameterError(f"order must be a positive integer, got {order}")
    _check_band(cutoff, fs, "cutoff")
    if x.shape[-1] < 3 * order:
        raise InputError(f"need at least {3 * order} samples, got {x.shape[-1]}")
    sos = sps.butter(int(order), cutoff, btype="highpass", fs=fs, output="sos")
    return _sosfiltfilt(sos, x)


def powerline_notch(x, fs, notch_hz=50.0, quality=30.0):
    """Remove a narrow band around the mains frequency with a zero-phase notch."""
    x = np.asarray(x, dtype=np.float64)
    _check_band(notch_hz, fs, "notch_hz")
    if quality <= 0:
        raise ParameterError("quality factor must be positive")
    b, a = sps.iirnotch(notch_hz, quality, fs=fs)
    return _sosfiltfilt(sps.tf2sos(b, a), x)


def _sosfiltfilt(sos, x):
    # default padding is ~6 samples per section; shrink it for short inputs
    padlen = min(3 * (2 * len(sos) + 1), x.shape[-1] - 1)
    return sps.sosfiltfilt(sos, x, axis=-1, padlen=padlen)


def fft_resample(x, num, axis=-1):
    """Resample ``x`` to ``num`` samples along ``axis`` in the Fourier domain.

    The real spectrum is truncated or zero-padded to ``num`` bins. An even
    length Nyquist bin is halved when upsampling (its energy is split between
    the two new mirror bins) and doubled when downsampling (the two mirror
    bins fold into one). The result is scaled by ``num / n`` so amplitudes are
    preserved.

    Examples
    --------
    >>> y = fft_resample(np.ones(100), 50)
    >>> bool(np.allclose(y, 1.0))
    True
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[axis]
    num = int(num)
    if n < 2 or num < 2:
        raise InputError(f"fft_resample needs at least 2 input and output samples, got {n} -> {num}")
    if num == n:
        return x.copy()

    spec = np.fft.rfft(x, axis=axis)
    out_shape = list(spec.shape)
    out_shape[axis] = num // 2 + 1
    out = np.zeros(out_shape, dtype=spec.dtype)

    keep = min(n, num)
    idx = [slice(None)] * x.ndim
    idx[axis] = slice(0, keep // 2 + 1)
    out[tuple(idx)] = spec[tuple(idx)]
    if keep % 2 == 0:
        idx[axis] = slice(keep // 2, keep // 2 + 1)
        out[tuple(idx)] *= 2.0 if num < n else 0.5

    y = np.fft.irfft(out, num, axis=axis)
    y *= num / n
    return y


def standard_scale(X):
    """Standardize columns to zero mean and unit population variance.

    Constant columns are centered and left unscaled.

    Returns
    -------
    scaled : ndarray
    means : ndarray
    stds : ndarray
        Per-column divisors actually used (1.0 for constant columns).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    if X.shape[0] < 2:
        raise InputError("standard_scale needs at least 2 samples")
    means = X.mean(axis=0)
    centered = X - means
    stds = np.sqrt(np.mean(centered ** 2, axis=0))
    # rounding leaves ~eps-sized spread on constant float columns
    constant = stds <= 16 * np.finfo(np.float64).eps * np.maximum(np.abs(means), 1.0)
    stds = np.where(constant, 1.0, stds)
    return centered / stds, means, stds
