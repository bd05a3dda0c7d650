"""Synthetic labeled trace generation for both measurement modalities.

A trace set replicates a sweep acquisition: for every workload class,
``n_traces_per_class`` traces of ``n_points`` frequency points, each the
average of ``n_avg`` noisy acquisitions.  Randomness is counter-based:
every trace row derives its generator from (seed, row index) through a
Philox key, so generation order and worker count never change the output.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from . import physics
from .physics import (CurrentSourceSet, DeviceImpedanceModel, ProbeModel,
                      ProgramProfile, ShieldProfile)


class Modality(IntEnum):
    """Measurement modality; the value is the on-disk u8 code."""

    EM = 0
    BACKSCATTER = 1


@dataclass(frozen=True)
class AcquisitionConfig:
    """Sweep acquisition parameters.

    ``noise_sigma`` is the std of the additive complex noise of a single
    acquisition (sqrt(E|n|^2), volts); averaging ``n_avg`` acquisitions
    scales it by 1/sqrt(n_avg).  The frequency grid is stop-exclusive:
    f_k = f_start + k * (f_stop - f_start) / n_points.
    """

    n_traces_per_class: int = 500
    n_points: int = 4096
    n_avg: int = 100
    f_start_hz: float = 5e9
    f_stop_hz: float = 6e9
    noise_sigma: float = 2e-5
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.n_traces_per_class, self.n_points, self.n_avg) < 1:
            raise ValueError("all acquisition counts must be >= 1")
        if not self.f_start_hz < self.f_stop_hz:
            raise ValueError("f_start_hz must be below f_stop_hz")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    @property
    def f_step_hz(self) -> float:
        return (self.f_stop_hz - self.f_start_hz) / self.n_points

    def frequencies(self) -> np.ndarray:
        return self.f_start_hz + np.arange(self.n_points) * self.f_step_hz


@dataclass(frozen=True)
class TraceSet:
    """Labeled matrix of complex traces over a uniform frequency grid."""

    f_start_hz: float
    f_step_hz: float
    n_points: int
    modality: Modality
    shield_name: str
    traces: np.ndarray  # (n_traces, n_points) complex64
    labels: np.ndarray  # (n_traces,) uint8 ProgramId values
    seed: int

    def __post_init__(self) -> None:
        if self.f_step_hz <= 0:
            raise ValueError("f_step_hz must be positive")
        if self.traces.ndim != 2 or self.traces.shape[1] != self.n_points:
            raise ValueError("traces must be a (n_traces, n_points) matrix")
        if self.labels.shape != (self.traces.shape[0],):
            raise ValueError("labels length must match the trace row count")
        if not np.isfinite(self.traces).all():
            raise ValueError("traces must be finite")

    @property
    def n_traces(self) -> int:
        return self.traces.shape[0]

    def frequencies(self) -> np.ndarray:
        return self.f_start_hz + np.arange(self.n_points) * self.f_step_hz


def _row_rng(seed: int, row_index: int) -> np.random.Generator:
    # Philox is counter-based: keying by (seed, row) makes every row's
    # stream independent of generation order and worker count.
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(row_index)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _idle_program(programs: tuple[ProgramProfile, ...]) -> ProgramProfile:
    return min(programs, key=lambda p: p.activity_level)


def _on_mask(program: ProgramProfile, n_points: int) -> np.ndarray | None:
    """Boolean per-point mask for modulated workloads; None when constant."""
    if program.modulation_period_points is None:
        return None
    blocks = np.arange(n_points) // program.modulation_period_points
    return blocks % 2 == 0


def _noiseless_pair(cfg: AcquisitionConfig, modality: Modality, shield: ShieldProfile,
                    device: DeviceImpedanceModel, sources: CurrentSourceSet,
                    probe: ProbeModel, program: ProgramProfile,
                    idle: ProgramProfile, jitter_draw: float):
    """Per-point response in the workload's on state and in its off state.

    Off means the modulated load is fully released (zero activity) for the
    reflective channel, while the radiated channel falls back to the floor
    emission of the quietest configured workload.
    """
    freqs = cfg.frequencies()
    if modality == Modality.EM:
        tol = cfg.f_step_hz / 2.0  # harmonics land on the nearest grid bin
        on = physics.probe_voltage_em(sources, probe, shield, program, freqs, tol)
        off = physics.probe_voltage_em(sources, probe, shield, idle, freqs, tol)
    elif modality == Modality.BACKSCATTER:
        released = replace(program, activity_level=0.0,
                           modulation_period_points=None)
        on = physics.backscatter_response(device, shield, program, freqs,
                                          jitter_draw=jitter_draw)
        off = physics.backscatter_response(device, shield, released, freqs,
                                           jitter_draw=jitter_draw)
    else:
        raise ValueError(f"unknown modality: {modality!r}")
    return np.asarray(on, dtype=complex), np.asarray(off, dtype=complex)


def synth_trace_row(cfg: AcquisitionConfig, modality: Modality, shield: ShieldProfile,
                    device: DeviceImpedanceModel, sources: CurrentSourceSet,
                    probe: ProbeModel, programs: tuple[ProgramProfile, ...],
                    row_index: int, countermeasure_strength: float = 0.0) -> np.ndarray:
    """Generate one trace row independently of all others.

    The row's randomness comes only from (cfg.seed, row_index); generating
    rows in any order or on any number of workers gives identical bits.
    Draw order per row is fixed: impedance jitter, countermeasure draw,
    then the averaged acquisition noise.
    """
    program = programs[row_index // cfg.n_traces_per_class]
    rng = _row_rng(cfg.seed, row_index)
    jitter = rng.standard_normal()
    cm_draw = rng.uniform(-1.0, 1.0)
    dev = physics.randomize_impedance(device, countermeasure_strength, cm_draw)

    on, off = _noiseless_pair(cfg, modality, shield, dev, sources, probe,
                              program, _idle_program(programs), jitter)
    mask = _on_mask(program, cfg.n_points)
    signal = on if mask is None else np.where(mask, on, off)

    # Mean of n_avg i.i.d. complex Gaussian acquisitions: drawn directly at
    # the averaged scale sigma/sqrt(n_avg) (sqrt(2) splits re/im).
    parts = rng.standard_normal((cfg.n_points, 2))
    scale = cfg.noise_sigma / np.sqrt(2.0 * cfg.n_avg)
    noise = scale * (parts[:, 0] + 1j * parts[:, 1])
    return (signal + noise).astype(np.complex64)


def synth_trace_set(cfg: AcquisitionConfig, modality: Modality, shield: ShieldProfile,
                    device: DeviceImpedanceModel, sources: CurrentSourceSet,
                    probe: ProbeModel, programs: tuple[ProgramProfile, ...],
                    countermeasure_strength: float = 0.0) -> TraceSet:
    """Generate the full labeled trace set for one shield and modality.

    Rows are grouped by program in the order given; row i belongs to
    programs[i // n_traces_per_class].  Identical arguments (including
    cfg.seed) reproduce the matrix bit for bit.
    """
    if not programs:
        raise ValueError("programs must be non-empty")
    if cfg.n_points < 2:
        raise ValueError("n_points must be >= 2")
    modality = Modality(modality)

    n_rows = cfg.n_traces_per_class * len(programs)
    traces = np.empty((n_rows, cfg.n_points), dtype=np.complex64)
    labels = np.empty(n_rows, dtype=np.uint8)
    idle = _idle_program(programs)
    masks = [_on_mask(p, cfg.n_points) for p in programs]

    # EM responses carry no jitter, so the on/off pair per program is fixed.
    em_pairs = None
    if modality == Modality.EM:
        em_pairs = [_noiseless_pair(cfg, modality, shield, device, sources,
                                    probe, p, idle, 0.0) for p in programs]

    scale = cfg.noise_sigma / np.sqrt(2.0 * cfg.n_avg)
    for ci, program in enumerate(programs):
        for ti in range(cfg.n_traces_per_class):
            row = ci * cfg.n_traces_per_class + ti
            rng = _row_rng(cfg.seed, row)
            jitter = rng.standard_normal()
            cm_draw = rng.uniform(-1.0, 1.0)
            if em_pairs is not None:
                on, off = em_pairs[ci]
            else:
                dev = physics.randomize_impedance(device, countermeasure_strength,
                                                  cm_draw)
                on, off = _noiseless_pair(cfg, modality, shield, dev, sources,
                                          probe, program, idle, jitter)
            signal = on if masks[ci] is None else np.where(masks[ci], on, off)
            parts = rng.standard_normal((cfg.n_points, 2))
            noise = scale * (parts[:, 0] + 1j * parts[:, 1])
            traces[row] = signal + noise
            labels[row] = int(program.id)

    return TraceSet(f_start_hz=cfg.f_start_hz, f_step_hz=cfg.f_step_hz,
                    n_points=cfg.n_points, modality=modality,
                    shield_name=shield.name, traces=traces, labels=labels,
                    seed=cfg.seed)


def average_acquisitions(acquisitions) -> np.ndarray:
    """Element-wise mean over the acquisition axis of an (n_avg, n_points) block."""
    acq = np.asarray(acquisitions)
    if acq.ndim != 2 or acq.shape[0] < 1 or acq.size == 0:
        raise ValueError("acquisitions must be a non-empty (n_avg, n_points) matrix")
    return acq.mean(axis=0)
