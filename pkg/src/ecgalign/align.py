"""Map ECGs onto a uniform R-peak template and compute median beats.

Every detected R-to-R cycle is cut at identical sample positions in all
leads and resampled in the Fourier domain so that its starting R-peak lands
on a template R-peak. Two per-cycle maps are available:

``linear``
    the whole cycle is stretched to the template RR length.
``hrc``
    the cycle is split at the estimated T-offset and P-onset, and the
    R->T-offset, T-offset->P-onset and P-onset->R pieces are stretched
    independently, with boundaries predicted from the measured and the
    template heart rate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import EcgRecord, fft_resample
from .errors import AlignmentError, DetectionError, InputError, ParameterError
from .rpeak import RPeakAnnotation, annotate

STRATEGIES = ("none", "linear", "hrc")
OUTPUT_KINDS = ("full", "median")
MIN_RR = 20


def round_half_away(x):
    """Round to the nearest integer, ties away from zero (``np.round`` rounds ties to even)."""
    return int(np.sign(x) * np.floor(abs(x) + 0.5))


@dataclass(frozen=True)
class Template:
    """Target grid of R-peak positions.

    Use :func:`design_template` to build one; the constructor does not
    validate.
    """

    duration_s: float
    fs: float
    target_bpm: float
    initial_offset: int
    r_peak_positions: np.ndarray
    rr_samples: int

    @property
    def n_samples(self):
        return int(round(self.duration_s * self.fs))

    @property
    def n_beats(self):
        return len(self.r_peak_positions)


def design_template(duration_s=10.0, fs=500.0, target_bpm=60.0, initial_offset=None):
    """Build the R-peak grid for the given duration, rate and offset.

    ``initial_offset=None`` places the first R-peak at 35% of the RR length,
    which leaves room for the P-wave before it.

    Examples
    --------
    >>> t = design_template(10, 500, 60, 250)
    >>> t.rr_samples, t.r_peak_positions[:3].tolist(), t.n_beats
    (500, [250, 750, 1250], 10)
    """
    if duration_s <= 0 or fs <= 0 or target_bpm <= 0:
        raise ParameterError("duration_s, fs and target_bpm must be positive")
    total = duration_s * fs
    if abs(total - round(total)) > 1e-9 * max(1.0, total):
        raise ParameterError(f"duration_s * fs must be an integer, got {total}")
    n = int(round(total))
    rr = round_half_away(60.0 * fs / target_bpm)
    if rr < MIN_RR:
        raise ParameterError(f"target_bpm {target_bpm} gives {rr} samples per beat; need >= {MIN_RR}")
    if initial_offset is None:
        initial_offset = round_half_away(0.35 * rr)
    if int(initial_offset) != initial_offset or not 0 <= initial_offset < rr:
        raise ParameterError(f"initial_offset must be an integer in [0, {rr}), got {initial_offset}")
    offset = int(initial_offset)
    if offset >= n:
        raise ParameterError("initial_offset lies beyond the template duration")
    positions = np.arange(offset, n, rr, dtype=np.int64)
    return Template(float(duration_s), float(fs), float(target_bpm), offset, positions, rr)


@dataclass(frozen=True)
class HrcCoefficients:
    """Linear heart-rate models of the P-onset->R and R->T-offset fractions of RR.

    ``f_p = hr * a_p + b_p`` and ``f_t = hr * a_t + b_t``; when their sum
    exceeds ``f_max`` both are shrunk proportionally so the sum equals it.
    """

    a_p: float = 1 / 280
    b_p: float = 0.14
    a_t: float = 1 / 330
    b_t: float = 0.96
    f_max: float = 0.9

    def __post_init__(self):
        if min(self.a_p, self.b_p, self.a_t, self.b_t) < 0:
            raise ParameterError("hrc coefficients must be non-negative")
        if not 0 < self.f_max < 1:
            raise ParameterError(f"f_max must lie in (0, 1), got {self.f_max}")

    def fractions(self, hr):
        f_p = hr * self.a_p + self.b_p
        f_t = hr * self.a_t + self.b_t
        total = f_p + f_t
        if total > self.f_max:
            f_p, f_t = f_p * self.f_max / total, f_t * self.f_max / total
        return f_p, f_t


def hrc_segment_bounds(hr, rr, coeffs=None):
    """Lengths in samples of the P-onset->R and R->T-offset segments.

    Parameters
    ----------
    hr : float
        Heart rate in bpm.
    rr : int
        RR interval in samples.
    coeffs : HrcCoefficients, optional

    Returns
    -------
    p_len, t_len : int

    Examples
    --------
    >>> hrc_segment_bounds(60, 500)
    (107, 343)
    """
    coeffs = coeffs or HrcCoefficients()
    if not np.isfinite(hr) or hr <= 0:
        raise ParameterError(f"heart rate must be positive, got {hr}")
    if rr < MIN_RR:
        raise ParameterError(f"RR interval of {rr} samples is below {MIN_RR}")
    f_p, f_t = coeffs.fractions(hr)
    return round_half_away(f_p * rr), round_half_away(f_t * rr)


@dataclass(frozen=True)
class AlignedEcg:
    """Output of an alignment.

    ``signal`` is ``(n_leads, template.n_samples)`` for ``output_kind="full"``
    and ``(n_leads, beat_length)`` for medians. For medians ``r_column`` is the
    column holding the R-peak. ``template`` is ``None`` for the native-rate
    ``strategy="none"`` median.
    """

    signal: np.ndarray
    strategy: str
    output_kind: str
    template: Template | None
    source_annotation: RPeakAnnotation
    lead_names: tuple = ()
    record_id: str = ""
    r_column: int | None = None


def _stretch(seg, m, end=None):
    """Resample each row of ``seg`` to ``m`` samples.

    ``end`` is the sample that follows the segment in the source. The ramp
    from ``seg[:, 0]`` to ``end`` is removed before the spectral resampling
    and added back afterwards, so the periodic extension seen by the FFT has
    no jump at the cut points.
    """
    n = seg.shape[1]
    if m == 0:
        return seg[:, :0]
    if n == m:
        return seg.copy()
    if n == 0:
        raise AlignmentError("empty source segment")
    if end is None:
        end = seg[:, -1]
    start = seg[:, :1]
    slope = (end[:, np.newaxis] - start)
    if n >= 2 and m >= 2:
        resid = seg - start - slope * (np.arange(n) / n)
        return fft_resample(resid, m, axis=1) + start + slope * (np.arange(m) / m)
    return start + slope * (np.arange(m) / m)


class _CycleMap:
    """Piecewise-linear map between one source cycle and one template cycle.

    Knots are integer offsets from the starting R-peak; consecutive pieces are
    resampled independently.
    """

    def __init__(self, src_knots, tgt_knots):
        self.src = src_knots
        self.tgt = tgt_knots

    def source_pos(self, u):
        return round_half_away(np.interp(u, self.tgt, self.src))

    def render(self, sig, src_start, lo, hi, out, out_start):
        """Write target offsets [lo, hi) of this cycle into ``out`` at ``out_start``."""
        for k in range(len(self.tgt) - 1):
            u0, u1 = max(lo, self.tgt[k]), min(hi, self.tgt[k + 1])
            if u0 >= u1:
                continue
            if u0 == self.tgt[k] and u1 == self.tgt[k + 1]:
                s0, s1 = self.src[k], self.src[k + 1]
            else:
                s0, s1 = self.source_pos(u0), self.source_pos(u1)
            a, b = src_start + s0, src_start + s1
            end = sig[:, b] if b < sig.shape[1] else None
            out[:, out_start + u0 - lo:out_start + u1 - lo] = _stretch(sig[:, a:b], u1 - u0, end)


def _cycle_map(strategy, length, template, hr_source, coeffs, cycle):
    rr = template.rr_samples
    if strategy == "linear":
        return _CycleMap([0, length], [0, rr])
    try:
        p_src, t_src = hrc_segment_bounds(hr_source, length, coeffs)
        p_tgt, t_tgt = hrc_segment_bounds(template.target_bpm, rr, coeffs)
    except ParameterError as exc:
        raise AlignmentError(f"cycle {cycle}: {exc}") from None
    src = [0, t_src, length - p_src, length]
    tgt = [0, t_tgt, rr - p_tgt, rr]
    if min(np.diff(src)) < 2 or min(np.diff(tgt)) < 2:
        raise AlignmentError(f"cycle {cycle}: degenerate hrc segment (source knots {src}, target knots {tgt})")
    return _CycleMap(src, tgt)


def _check_inputs(record, ann, template):
    if abs(record.fs - template.fs) > 1e-9:
        raise AlignmentError(f"record fs {record.fs} differs from template fs {template.fs}")
    peaks = ann.peaks
    if peaks.size < 2:
        raise AlignmentError(f"need at least 2 R-peaks, got {peaks.size}")
    if peaks[0] < 0 or peaks[-1] >= record.n_samples:
        raise AlignmentError("R-peak index outside the record")
    return peaks


def _align_full(record, ann, template, strategy, coeffs):
    peaks = _check_inputs(record, ann, template)
    sig = record.signal
    n_src = record.n_samples
    hr_source = ann.heart_rate_bpm
    if not hr_source > 0:
        hr_source = 60.0 * record.fs * (peaks.size - 1) / float(peaks[-1] - peaks[0])
    lengths = np.diff(peaks)
    last = len(lengths) - 1  # index of the last complete source cycle
    maps = {}

    def cycle(i):
        if i not in maps:
            maps[i] = _cycle_map(strategy, int(lengths[i]), template, hr_source, coeffs, i)
        return maps[i]

    rr = template.rr_samples
    n_out = template.n_samples
    slots = template.r_peak_positions
    out = np.empty((record.n_leads, n_out))

    # full template cycles; missing source cycles repeat the last complete one
    for j in range(len(slots) - 1):
        i = min(j, last)
        cycle(i).render(sig, peaks[i], 0, rr, out, slots[j])

    # partial cycle after the last template R-peak
    j = len(slots) - 1
    tail = n_out - slots[j]
    if j <= last:
        cycle(j).render(sig, peaks[j], 0, tail, out, slots[j])
    else:
        cmap = cycle(last)
        start = peaks[last + 1] if j == last + 1 else peaks[last]
        if start + cmap.source_pos(tail) > n_src:
            start = peaks[last]
        cmap.render(sig, start, 0, tail, out, slots[j])

    # partial cycle before the first template R-peak, borrowed from the
    # stretch ending at the first detected R-peak
    lead_in = slots[0]
    if lead_in > 0:
        cmap = cycle(0)
        start = peaks[0] - int(lengths[0])
        if start + cmap.source_pos(rr - lead_in) < 0:
            start = peaks[0]
        cmap.render(sig, start, rr - lead_in, rr, out, 0)

    return AlignedEcg(out, strategy, "full", template, ann, record.lead_names, record.record_id)


def align_linear(record: EcgRecord, ann: RPeakAnnotation, template: Template):
    """Stretch every R-to-R cycle to the template RR length."""
    return _align_full(record, ann, template, "linear", None)


def align_hrc(record: EcgRecord, ann: RPeakAnnotation, template: Template, coeffs=None):
    """Heart-rate-corrected three-piece alignment of every cycle."""
    return _align_full(record, ann, template, "hrc", coeffs or HrcCoefficients())


def _stack_median(windows):
    # np.median averages the two central values for even counts
    return np.median(np.stack(windows), axis=0)


def median_beat(aligned: AlignedEcg, r_column=None):
    """Pointwise median over all complete template cycles.

    Each cycle window starts ``r_column`` samples before a template R-peak
    (default: the template's initial offset) and spans ``rr_samples``.
    """
    if aligned.output_kind != "full":
        raise InputError("median_beat expects a full aligned signal")
    template = aligned.template
    rr = template.rr_samples
    r_col = template.initial_offset if r_column is None else int(r_column)
    if not 0 <= r_col < rr:
        raise ParameterError(f"r_column must lie in [0, {rr})")
    n = aligned.signal.shape[1]
    windows = [aligned.signal[:, p - r_col:p - r_col + rr]
               for p in template.r_peak_positions if p - r_col >= 0 and p - r_col + rr <= n]
    if not windows:
        raise InputError("no complete template cycle for the median beat")
    return AlignedEcg(_stack_median(windows), aligned.strategy, "median", template,
                      aligned.source_annotation, aligned.lead_names, aligned.record_id, r_col)


def align_none_median(record: EcgRecord, ann: RPeakAnnotation):
    """Median beat at the native sampling rate, without resampling.

    Windows are centered on the detected R-peaks with half-width equal to
    half the median RR interval; windows crossing the record bounds are
    dropped.
    """
    peaks = ann.peaks
    if peaks.size < 2:
        raise InputError(f"need at least 2 R-peaks, got {peaks.size}")
    half = round_half_away(0.5 * float(np.median(np.diff(peaks))))
    n = record.n_samples
    windows = [record.signal[:, p - half:p + half] for p in peaks if p - half >= 0 and p + half <= n]
    if not windows:
        raise InputError("no complete beat window inside the record")
    return AlignedEcg(_stack_median(windows), "none", "median", None, ann,
                      record.lead_names, record.record_id, half)


def align(record, ann, template=None, strategy="linear", output_kind="full", coeffs=None,
          r_column=None):
    """Dispatch on ``strategy`` and ``output_kind``."""
    if strategy not in STRATEGIES:
        raise ParameterError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    if output_kind not in OUTPUT_KINDS:
        raise ParameterError(f"output_kind must be one of {OUTPUT_KINDS}, got {output_kind!r}")
    if strategy == "none":
        if output_kind == "full":
            raise ParameterError("strategy 'none' only produces median beats")
        return align_none_median(record, ann)
    if template is None:
        raise ParameterError(f"strategy {strategy!r} needs a template")
    if strategy == "linear":
        full = align_linear(record, ann, template)
    else:
        full = align_hrc(record, ann, template, coeffs)
    return full if output_kind == "full" else median_beat(full, r_column)


def align_record(record, template=None, strategy="linear", output_kind="full", coeffs=None,
                 lead="II", detector=None):
    """Detect R-peaks on ``lead`` and align the whole record in one call."""
    try:
        ann = annotate(record, lead, detector)
    except DetectionError as exc:
        raise AlignmentError(f"record {record.record_id!r}: {exc}") from exc
    return align(record, ann, template, strategy, output_kind, coeffs)
