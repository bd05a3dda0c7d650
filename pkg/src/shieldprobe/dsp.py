"""Trace pre-processing ahead of statistical analysis."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .synth import TraceSet

_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class Scaler:
    """Per-column standardization parameters, reusable on held-out data."""

    mean: np.ndarray
    std: np.ndarray  # floored at 1e-12 so constant columns map to zeros

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x - self.mean) / self.std

    def inverse(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x * self.std + self.mean


def baseline_reference(ts: TraceSet, reference_label: int) -> np.ndarray:
    """Per-frequency mean trace of the reference class."""
    mask = ts.labels == int(reference_label)
    if not mask.any():
        raise ValueError(f"reference label {reference_label} not present in trace set")
    return ts.traces[mask].astype(np.complex128).mean(axis=0)


def subtract_baseline(ts: TraceSet, reference: np.ndarray) -> TraceSet:
    """Subtract a fixed per-frequency reference from every trace."""
    if reference.shape != (ts.n_points,):
        raise ValueError("reference length must match n_points")
    out = (ts.traces.astype(np.complex128) - reference).astype(np.complex64)
    return replace(ts, traces=out)


def remove_baseline(ts: TraceSet, reference_label: int) -> TraceSet:
    """Subtract the reference class's mean trace (offset removal)."""
    return subtract_baseline(ts, baseline_reference(ts, reference_label))


def band_select(ts: TraceSet, f_lo_hz: float, f_hi_hz: float) -> TraceSet:
    """Retain columns with f_lo <= f <= f_hi (inclusive); error if empty."""
    freqs = ts.frequencies()
    mask = (freqs >= f_lo_hz) & (freqs <= f_hi_hz)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ValueError(f"band [{f_lo_hz}, {f_hi_hz}] Hz selects no grid points")
    return replace(ts, traces=np.ascontiguousarray(ts.traces[:, idx]),
                   f_start_hz=float(freqs[idx[0]]), n_points=int(idx.size))


def to_magnitude(ts: TraceSet) -> np.ndarray:
    """Element-wise |z| of the trace matrix."""
    return np.abs(ts.traces)


def standardize(x) -> tuple[np.ndarray, Scaler]:
    """Column-wise zero mean, unit population variance.

    Constant columns map to zeros through the std floor.  The returned
    Scaler must be reused (never re-fit) on held-out data.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("standardize needs a matrix with at least 2 rows")
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), _STD_FLOOR)
    scaler = Scaler(mean=mean, std=std)
    return scaler.transform(x), scaler
