"""Readers and writers: WFDB format 16, CSV and the NPY v1.0 array container."""
from __future__ import annotations

import ast
import csv
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import STANDARD_LEADS, EcgRecord
from .errors import CorruptFileError, FormatError, ParseError, UnsupportedFormatError

log = logging.getLogger(__name__)

DEFAULT_GAIN = 200.0  # WFDB convention for a missing or zero ADC gain

NPY_MAGIC = b"\x93NUMPY"
NPY_ALIGN = 64
_NPY_DTYPES = {"f4": "<f4", "f32": "<f4", "float32": "<f4",
               "f8": "<f8", "f64": "<f8", "float64": "<f8"}


@dataclass(frozen=True)
class WfdbSignal:
    file_name: str
    format_code: int
    adc_gain: float
    baseline: int
    lead_name: str
    byte_offset: int = 0
    units: str = "mV"


@dataclass(frozen=True)
class WfdbHeader:
    record_name: str
    n_leads: int
    fs: float
    n_samples: int | None
    signals: tuple


def _parse_format(token):
    # fmt[xsamps][:skew][+offset]
    offset = 0
    if "+" in token:
        token, off = token.split("+", 1)
        offset = int(off)
    token = token.split(":", 1)[0]
    spf = 1
    if "x" in token:
        token, spf_s = token.split("x", 1)
        spf = int(spf_s)
    return int(token), spf, offset


def _parse_gain(token):
    # adcgain[(baseline)][/units]
    units = "mV"
    if "/" in token:
        token, units = token.split("/", 1)
    baseline = None
    if "(" in token:
        token, base = token.split("(", 1)
        baseline = int(base.rstrip(")"))
    return float(token), baseline, units


def parse_wfdb_header(text, record_name=""):
    """Parse the text of a WFDB ``.hea`` file."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise FormatError("empty WFDB header")
    rec = lines[0].split()
    if len(rec) < 2:
        raise FormatError(f"malformed record line: {lines[0]!r}")
    name = rec[0]
    if "/" in name:
        raise UnsupportedFormatError("multi-segment WFDB records are not supported")
    n_leads = int(rec[1])
    fs = float(rec[2].split("/")[0].split("(")[0]) if len(rec) > 2 else 250.0
    n_samples = int(rec[3]) if len(rec) > 3 else None
    if len(lines) - 1 < n_leads:
        raise FormatError(f"header declares {n_leads} signals but has {len(lines) - 1} signal lines")

    signals = []
    for i, line in enumerate(lines[1:1 + n_leads]):
        tok = line.split()
        if len(tok) < 2:
            raise FormatError(f"malformed signal line: {line!r}")
        fmt, spf, offset = _parse_format(tok[1])
        if fmt != 16:
            raise UnsupportedFormatError(f"signal {i}: WFDB format {fmt} is not supported (only 16)")
        if spf != 1:
            raise UnsupportedFormatError(f"signal {i}: {spf} samples per frame is not supported")
        gain, baseline, units = _parse_gain(tok[2]) if len(tok) > 2 else (0.0, None, "mV")
        if gain == 0:
            log.info("signal %d has no ADC gain, using %s", i, DEFAULT_GAIN)
            gain = DEFAULT_GAIN
        if gain < 0:
            raise FormatError(f"signal {i}: negative ADC gain {gain}")
        if baseline is None:
            log.info("signal %d has no baseline, using 0", i)
            baseline = 0
        lead = " ".join(tok[8:]) if len(tok) > 8 else str(i)
        signals.append(WfdbSignal(tok[0], fmt, gain, baseline, lead, offset, units))
    return WfdbHeader(name or record_name, n_leads, fs, n_samples, tuple(signals))


def read_wfdb(header_path):
    """Read a WFDB record stored in format 16 and return it in millivolts.

    Parameters
    ----------
    header_path : str or Path
        Path to the ``.hea`` file, with or without the extension.

    Returns
    -------
    EcgRecord
        ``(raw - baseline) / adc_gain`` for every lead.
    """
    path = Path(header_path)
    if path.suffix != ".hea":
        path = path.with_name(path.name + ".hea")
    header = parse_wfdb_header(path.read_text(), path.stem)

    # leads stored in the same file are interleaved sample by sample
    groups = {}
    for i, sig in enumerate(header.signals):
        groups.setdefault(sig.file_name, []).append(i)

    n = header.n_samples
    columns = [None] * header.n_leads
    for file_name, idx in groups.items():
        offset = header.signals[idx[0]].byte_offset
        raw = (path.parent / file_name).read_bytes()[offset:]
        width = 2 * len(idx)
        if n is None:
            n = len(raw) // width
        if len(raw) < n * width or len(raw) % 2:
            raise CorruptFileError(f"{file_name}: expected {n * width} bytes for {n} samples, found {len(raw)}")
        if len(raw) > n * width:
            log.warning("%s: ignoring %d trailing bytes", file_name, len(raw) - n * width)
        data = np.frombuffer(raw, dtype="<i2", count=n * len(idx)).reshape(n, len(idx))
        for col, i in enumerate(idx):
            columns[i] = data[:, col]

    raw = np.vstack(columns).astype(np.float64)
    baselines = np.array([s.baseline for s in header.signals], dtype=np.float64)[:, np.newaxis]
    gains = np.array([s.adc_gain for s in header.signals])[:, np.newaxis]
    names = tuple(s.lead_name for s in header.signals)
    return EcgRecord((raw - baselines) / gains, header.fs, names, header.record_name)


def write_wfdb(record: EcgRecord, directory, record_name=None, adc_gain=1000.0, baseline=0):
    """Write ``record`` as a format-16 WFDB record (``.hea`` + ``.dat``).

    Values are quantized to ``round(mV * adc_gain) + baseline`` and clipped
    to the int16 range.
    """
    directory = Path(directory)
    name = record_name or record.record_id or "record"
    digital = np.round(record.signal * adc_gain) + baseline
    digital = np.clip(digital, -32768, 32767).astype("<i2")
    (directory / f"{name}.dat").write_bytes(digital.T.tobytes())
    names = record.lead_names or tuple(str(i) for i in range(record.n_leads))
    fs = f"{record.fs:g}"
    lines = [f"{name} {record.n_leads} {fs} {record.n_samples}"]
    for i, lead in enumerate(names):
        col = digital[i].astype(np.int64)
        lines.append(f"{name}.dat 16 {adc_gain:g}({baseline})/mV 16 0 {col[0]} {_checksum(col)} 0 {lead}")
    (directory / f"{name}.hea").write_text("\n".join(lines) + "\n")
    return directory / f"{name}.hea"


def _checksum(col):
    # 16-bit two's-complement sum of all samples
    s = int(col.sum()) & 0xFFFF
    return s - 0x10000 if s >= 0x8000 else s


def read_csv(path, fs, delimiter=","):
    """Read a CSV with one column per lead and an optional header of lead names."""
    path = Path(path)
    rows = []
    names = ()
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter=delimiter), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1:
                try:
                    [float(c) for c in row]
                except ValueError:
                    names = tuple(c.strip() for c in row)
                    width = len(row)
                    continue
            if width is None:
                width = len(row)
            if len(row) != width:
                raise ParseError(f"{path.name}: row {lineno} has {len(row)} values, expected {width}", lineno)
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ParseError(f"{path.name}: row {lineno}: {exc}", lineno) from None
    if not rows:
        raise ParseError(f"{path.name}: no numeric rows")
    return EcgRecord(np.asarray(rows).T, fs, names, path.stem)


def write_csv(path, matrix, column_names=None):
    """Write a 1-d or 2-d array as CSV, rows being the first axis.

    Floats are written with ``repr`` precision, so a read back is exact.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim == 1:
        matrix = matrix[:, np.newaxis]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if column_names:
            w.writerow(column_names)
        for row in matrix:
            w.writerow([repr(float(v)) if np.issubdtype(matrix.dtype, np.floating) else str(v) for v in row])


def _npy_header(dtype, shape):
    shape_txt = "(" + ", ".join(str(d) for d in shape) + ("," if len(shape) == 1 else "") + ")"
    text = "{'descr': '%s', 'fortran_order': False, 'shape': %s, }" % (dtype, shape_txt)
    pad = -(len(NPY_MAGIC) + 2 + 2 + len(text) + 1) % NPY_ALIGN
    return (text + " " * pad + "\n").encode("latin1")


def write_array(path, matrix, dtype="f64"):
    """Write a float array in the NPY v1.0 container format.

    Parameters
    ----------
    path : str or Path
    matrix : array_like
        Non-empty array with 1 to 3 dimensions.
    dtype : {"f32", "f64"}
    """
    try:
        descr = _NPY_DTYPES[str(dtype)]
    except KeyError:
        raise FormatError(f"unsupported dtype {dtype!r}; use f32 or f64") from None
    arr = np.ascontiguousarray(np.asarray(matrix), dtype=descr)
    if arr.size == 0 or not 1 <= arr.ndim <= 3:
        raise FormatError(f"array must be non-empty with 1-3 dimensions, got shape {arr.shape}")
    header = _npy_header(descr, arr.shape)
    with open(path, "wb") as fh:
        fh.write(NPY_MAGIC + b"\x01\x00" + len(header).to_bytes(2, "little") + header)
        fh.write(arr.tobytes(order="C"))


def read_array(path):
    """Read an array written by :func:`write_array` (or ``numpy.save``)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:6] != NPY_MAGIC:
        raise FormatError(f"{os.fspath(path)}: not an NPY file (bad magic)")
    major = data[6]
    if major == 1:
        hlen, start = int.from_bytes(data[8:10], "little"), 10
    elif major in (2, 3):
        hlen, start = int.from_bytes(data[8:12], "little"), 12
    else:
        raise FormatError(f"unsupported NPY version {major}.{data[7]}")
    try:
        header = ast.literal_eval(data[start:start + hlen].decode("latin1"))
        descr, fortran, shape = header["descr"], header["fortran_order"], tuple(header["shape"])
    except (ValueError, SyntaxError, KeyError, TypeError) as exc:
        raise FormatError(f"{os.fspath(path)}: malformed NPY header ({exc})") from None
    dtype = np.dtype(descr)
    if dtype.hasobject:
        raise FormatError("object arrays are not supported")
    count = int(np.prod(shape)) if shape else 1
    payload = data[start + hlen:]
    if len(payload) != count * dtype.itemsize:
        raise FormatError(f"{os.fspath(path)}: payload has {len(payload)} bytes, expected {count * dtype.itemsize}")
    arr = np.frombuffer(payload, dtype=dtype, count=count)
    return arr.reshape(shape, order="F" if fortran else "C").copy()


def read_record(path, fmt=None, fs=None):
    """Load a record from WFDB, CSV or NPY, picking the reader by extension when ``fmt`` is None.

    ``fs`` is required for CSV and NPY input, which carry no sampling rate.
    NPY input must be shaped ``(n_leads, n_samples)``.
    """
    path = Path(path)
    if fmt is None:
        fmt = {".hea": "wfdb", ".csv": "csv", ".npy": "array"}.get(path.suffix)
    if fmt == "wfdb":
        return read_wfdb(path)
    if fs is None:
        raise FormatError(f"{path.name}: a sampling rate is required for {fmt} input")
    if fmt == "csv":
        return read_csv(path, fs)
    if fmt == "array":
        arr = read_array(path)
        if arr.ndim > 2:
            raise FormatError(f"{path.name}: expected a (n_leads, n_samples) array, got shape {arr.shape}")
        names = ()
        if arr.ndim == 2 and arr.shape[0] == len(STANDARD_LEADS):
            names = STANDARD_LEADS
        return EcgRecord(arr.astype(np.float64), fs, names, path.stem)
    raise FormatError(f"unknown input format {fmt!r} for {path.name}")
