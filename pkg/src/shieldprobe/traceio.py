"""Bit-exact persistence of trace sets.

Binary container (version 1, all little-endian):

    offset  size  field
    0       4     magic "SBTR"
    4       2     u16 version (= 1)
    6       1     u8 modality (0 = EM, 1 = Backscatter)
    7       2     u16 shield-name byte length
    9       L     shield name, UTF-8
    9+L     4     u32 n_traces
    13+L    4     u32 n_points
    17+L    8     f64 f_start_hz
    25+L    8     f64 f_step_hz
    33+L    8     u64 seed
    41+L    T     u8 labels, one per trace
    41+L+T  8*T*P trace data, row-major, interleaved (re, im) f32

The stream length must match the header-implied size exactly; anything
else is rejected as corruption.  CSV export writes |z| magnitudes at f32
round-trip precision for external plotting.
"""

from __future__ import annotations

import io
import struct
from os import PathLike

import numpy as np

from .synth import Modality, TraceSet

MAGIC = b"SBTR"
VERSION = 1

_FIXED_HEAD = struct.Struct("<4sHBH")      # magic, version, modality, name length
_FIXED_TAIL = struct.Struct("<IIddQ")      # n_traces, n_points, f_start, f_step, seed


class TraceIOError(Exception):
    """Base class for trace container errors."""


class TraceFormatError(TraceIOError):
    """Stream is not a recognizable trace container."""


class TraceVersionError(TraceIOError):
    """Container version is not supported."""


class TraceCorruptionError(TraceIOError):
    """Container size disagrees with its header."""


def _open_sink(destination):
    if isinstance(destination, (str, PathLike)):
        return open(destination, "wb"), True
    return destination, False


def _open_source(source):
    if isinstance(source, (str, PathLike)):
        return open(source, "rb"), True
    return source, False


def write_trace_set(ts: TraceSet, destination) -> int:
    """Serialize ``ts`` to a path or binary sink; returns total bytes written."""
    name = ts.shield_name.encode("utf-8")
    if len(name) > 0xFFFF:
        raise ValueError("shield name too long for a u16 length prefix")
    header = (_FIXED_HEAD.pack(MAGIC, VERSION, int(ts.modality), len(name))
              + name
              + _FIXED_TAIL.pack(ts.n_traces, ts.n_points,
                                 ts.f_start_hz, ts.f_step_hz, ts.seed))
    labels = np.ascontiguousarray(ts.labels, dtype=np.uint8).tobytes()
    # complex64 memory layout is already interleaved (re, im) f32.
    data = np.ascontiguousarray(ts.traces, dtype="<c8").tobytes()

    sink, owned = _open_sink(destination)
    try:
        sink.write(header)
        sink.write(labels)
        sink.write(data)
    finally:
        if owned:
            sink.close()
    return len(header) + len(labels) + len(data)


def read_trace_set(source) -> TraceSet:
    """Parse a trace container; exact inverse of :func:`write_trace_set`."""
    stream, owned = _open_source(source)
    try:
        raw = stream.read()
    finally:
        if owned:
            stream.close()

    if len(raw) < _FIXED_HEAD.size or raw[:4] != MAGIC:
        raise TraceFormatError("bad magic: not a trace container")
    magic, version, modality_code, name_len = _FIXED_HEAD.unpack_from(raw, 0)
    if version != VERSION:
        raise TraceVersionError(f"unsupported container version {version}")

    pos = _FIXED_HEAD.size
    if len(raw) < pos + name_len + _FIXED_TAIL.size:
        raise TraceCorruptionError("truncated header")
    name = raw[pos:pos + name_len].decode("utf-8")
    pos += name_len
    n_traces, n_points, f_start, f_step, seed = _FIXED_TAIL.unpack_from(raw, pos)
    pos += _FIXED_TAIL.size
    if n_traces == 0 or n_points == 0:
        raise TraceFormatError("header declares an empty trace matrix")
    try:
        modality = Modality(modality_code)
    except ValueError:
        raise TraceFormatError(f"unknown modality code {modality_code}") from None

    expected = pos + n_traces + 8 * n_traces * n_points
    if len(raw) != expected:
        raise TraceCorruptionError(
            f"container size mismatch: expected {expected} bytes, got {len(raw)}")

    labels = np.frombuffer(raw, dtype=np.uint8, count=n_traces, offset=pos).copy()
    traces = (np.frombuffer(raw, dtype="<c8", count=n_traces * n_points,
                            offset=pos + n_traces)
              .reshape(n_traces, n_points).copy())
    return TraceSet(f_start_hz=f_start, f_step_hz=f_step, n_points=n_points,
                    modality=modality, shield_name=name, traces=traces,
                    labels=labels, seed=seed)


def export_csv(ts: TraceSet, destination) -> int:
    """Write label + |z| magnitudes per trace as CSV; returns lines written.

    Frequencies and magnitudes are rendered with shortest round-trip
    precision, so re-parsing reproduces the stored f32 values exactly.
    """
    freqs = ts.frequencies()
    mags = np.abs(ts.traces)  # complex64 -> float32
    lines = ["label," + ",".join(repr(float(f)) for f in freqs)]
    for label, row in zip(ts.labels, mags):
        lines.append(str(int(label)) + "," + ",".join(str(v) for v in row))

    text = "\n".join(lines) + "\n"
    if isinstance(destination, (str, PathLike)):
        with open(destination, "w", encoding="utf-8") as fh:
            fh.write(text)
    elif isinstance(destination, io.TextIOBase):
        destination.write(text)
    else:
        destination.write(text.encode("utf-8"))
    return len(lines)
