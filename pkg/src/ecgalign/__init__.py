"""Align multi-lead ECGs to a fixed heartbeat template.

R-peaks are detected on a cleaned lead, then every cardiac cycle is
FFT-resampled onto a grid of equally spaced template beats, either as a whole
(``linear``) or in three heart-rate-corrected pieces (``hrc``). Aligned
records or their median beats feed the analyses in :mod:`ecgalign.analysis`.
"""
from .align import (AlignedEcg, HrcCoefficients, Template, align, align_hrc, align_linear,
                    align_none_median, align_record, design_template, hrc_segment_bounds,
                    median_beat)
from .dsp import (DEFAULT_CLEANING, STANDARD_LEADS, EcgRecord, FilterSpec, butterworth_highpass,
                  fft_resample, powerline_notch, standard_scale)
from .errors import (AlignmentError, CorruptFileError, DetectionError, EcgAlignError, FormatError,
                     InputError, LeadNotFoundError, MetricError, ParameterError, ParseError,
                     UnsupportedFormatError)
from .io import read_array, read_csv, read_record, read_wfdb, write_array, write_csv, write_wfdb
from .rpeak import DetectorConfig, RPeakAnnotation, annotate, clean_lead, detect_r_peaks
from .synth import GroundTruth, SynthSpec, generate_ecg

__version__ = "0.1.0"
