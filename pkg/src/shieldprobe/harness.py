"""End-to-end experiment orchestration.

Runs the full comparison for every configured shield and both measurement
modalities: synthesize traces, preprocess, rank frequencies, project,
classify, and report macro metrics, mirroring the acquisition protocol and
analysis chain of the desk-scale study.  Every stage is fit on the 70%
training split only; the held-out 30% is touched exactly once, by the
final evaluation.  All randomness derives from the experiment seed, so a
given configuration reproduces its reports byte for byte.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal
from io import TextIOBase
from os import PathLike

import numpy as np

from . import analysis, defaults, dsp
from .analysis import (ClassifierReport, FrequencyScores, IcaModel, PcaModel,
                       SvmModel, DEFAULT_C_GRID)
from .dsp import Scaler
from .physics import (CurrentSourceSet, DeviceImpedanceModel, ProbeModel,
                      ProgramProfile, ShieldProfile)
from .synth import AcquisitionConfig, Modality, TraceSet, synth_trace_set


class PipelineError(Exception):
    """A pipeline stage failed; the message names the stage."""


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"{name}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce the shields-vs-modalities comparison."""

    acquisition: AcquisitionConfig
    shields: tuple[ShieldProfile, ...]
    device: DeviceImpedanceModel
    sources: CurrentSourceSet
    probe: ProbeModel
    programs: tuple[ProgramProfile, ...]
    top_k: int = 64
    variance_target: float = 0.95
    split_train_fraction: float = 0.7
    folds: int = 5
    c_grid: tuple[float, ...] = DEFAULT_C_GRID
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.shields:
            raise ValueError("at least one shield is required")
        if not 0.0 < self.split_train_fraction < 1.0:
            raise ValueError("split_train_fraction must lie in (0, 1)")


def default_config(seed: int = 0) -> ExperimentConfig:
    return ExperimentConfig(acquisition=defaults.default_acquisition(),
                            shields=defaults.default_shields(),
                            device=defaults.default_device(),
                            sources=defaults.default_sources(),
                            probe=defaults.default_probe(),
                            programs=defaults.default_programs(),
                            seed=seed)


def derive_seed(root: int, *parts: int) -> int:
    """Stable 64-bit sub-seed for a pipeline component."""
    ss = np.random.SeedSequence([int(root) & 0xFFFFFFFFFFFFFFFF,
                                 *[int(p) for p in parts]])
    return int(ss.generate_state(1, np.uint64)[0])


def dataset_seed(cfg: ExperimentConfig, shield_index: int, modality: Modality) -> int:
    return derive_seed(cfg.seed, shield_index, int(modality))


def acquisition_for(cfg: ExperimentConfig, modality: Modality,
                    seed: int) -> AcquisitionConfig:
    """Per-modality acquisition: EM sweeps its own grid below the band."""
    acq = replace(cfg.acquisition, seed=seed)
    if modality == Modality.EM:
        acq = replace(acq, f_start_hz=defaults.EM_F_START_HZ,
                      f_stop_hz=defaults.EM_F_STOP_HZ)
    return acq


def stratified_split(labels, train_fraction: float, seed: int):
    """Seeded per-class shuffle into train/test index arrays (sorted)."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        cut = int(train_fraction * idx.size)
        train.append(idx[:cut])
        test.append(idx[cut:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


@dataclass(frozen=True)
class FittedPipeline:
    """All train-split-fitted artifacts of one shield-modality pipeline."""

    baseline: np.ndarray | None
    scaler: Scaler
    scores: FrequencyScores
    selected: np.ndarray
    pca: PcaModel
    svm: SvmModel
    silhouette: float


@dataclass(frozen=True)
class PipelineResult:
    shield_name: str
    se_cap_db: float
    modality: Modality
    report: ClassifierReport
    fitted: FittedPipeline


def fit_and_evaluate(ts: TraceSet, train_idx, test_idx, *, reference_label: int,
                     top_k: int, variance_target: float, folds: int,
                     c_grid, svm_seed: int) -> tuple[ClassifierReport, FittedPipeline]:
    """Fit the analysis chain on the train rows; evaluate on the test rows.

    Baseline reference (EM), scaler, frequency ranking, PCA and SVM are
    all computed from the train rows only and then applied to both splits.
    """
    train_idx = np.asarray(train_idx)
    test_idx = np.asarray(test_idx)

    with _stage("preprocess"):
        if ts.modality == Modality.EM:
            train_ts = replace(ts, traces=ts.traces[train_idx],
                               labels=ts.labels[train_idx])
            baseline = dsp.baseline_reference(train_ts, reference_label)
            ts = dsp.subtract_baseline(ts, baseline)
        else:
            baseline = None
            last_f = ts.f_start_hz + (ts.n_points - 1) * ts.f_step_hz
            ts = dsp.band_select(ts, ts.f_start_hz, last_f)
        mags = dsp.to_magnitude(ts)
        y_train = ts.labels[train_idx]
        y_test = ts.labels[test_idx]
        x_train, scaler = dsp.standardize(mags[train_idx])
        x_test = scaler.transform(mags[test_idx])

    with _stage("frequency-selection"):
        scores = analysis.score_frequencies(x_train, y_train)
        selected = analysis.select_top_k(scores, min(top_k, x_train.shape[1]))
        x_train = x_train[:, selected]
        x_test = x_test[:, selected]

    with _stage("pca"):
        pca = analysis.pca_fit(x_train, variance_target)
        z_train = analysis.pca_transform(pca, x_train)
        z_test = analysis.pca_transform(pca, x_test)

    with _stage("svm"):
        svm = analysis.svm_train_cv(z_train, y_train, folds=folds,
                                    c_grid=c_grid, seed=svm_seed)

    with _stage("evaluate"):
        report = analysis.evaluate(svm, z_test, y_test)
        # separability proxy on the leading 2-D projection of the train split
        sil = analysis.silhouette(z_train[:, :min(2, z_train.shape[1])], y_train)

    fitted = FittedPipeline(baseline=baseline, scaler=scaler, scores=scores,
                            selected=selected, pca=pca, svm=svm, silhouette=sil)
    return report, fitted


def run_pipeline(cfg: ExperimentConfig, shield_index: int, modality: Modality,
                 countermeasure_strength: float = 0.0) -> PipelineResult:
    """Synthesize and analyze one (shield, modality) dataset."""
    shield = cfg.shields[shield_index]
    modality = Modality(modality)
    ds_seed = dataset_seed(cfg, shield_index, modality)
    acq = acquisition_for(cfg, modality, ds_seed)
    with _stage("synth"):
        ts = synth_trace_set(acq, modality, shield, cfg.device, cfg.sources,
                             cfg.probe, cfg.programs,
                             countermeasure_strength=countermeasure_strength)
    with _stage("split"):
        train_idx, test_idx = stratified_split(
            ts.labels, cfg.split_train_fraction, derive_seed(ds_seed, 1))
    reference = min(cfg.programs, key=lambda p: p.activity_level).id
    report, fitted = fit_and_evaluate(
        ts, train_idx, test_idx, reference_label=int(reference),
        top_k=cfg.top_k, variance_target=cfg.variance_target, folds=cfg.folds,
        c_grid=cfg.c_grid, svm_seed=derive_seed(ds_seed, 2))
    return PipelineResult(shield_name=shield.name,
                          se_cap_db=shield.se_high_cap_db, modality=modality,
                          report=report, fitted=fitted)


@dataclass(frozen=True)
class TableRow:
    shield_name: str
    se_cap_db: float
    modality: Modality
    report: ClassifierReport


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[TableRow, ...]


def reproduce_classification_table(cfg: ExperimentConfig) -> ComparisonTable:
    """The full shields x modalities comparison, one row per pair."""
    rows = []
    for si, _shield in enumerate(cfg.shields):
        for modality in (Modality.EM, Modality.BACKSCATTER):
            res = run_pipeline(cfg, si, modality)
            rows.append(TableRow(res.shield_name, res.se_cap_db,
                                 res.modality, res.report))
    return ComparisonTable(rows=tuple(rows))


def countermeasure_sweep(cfg: ExperimentConfig, strengths) -> list[tuple[float, ClassifierReport]]:
    """Backscatter accuracy vs impedance-randomization strength.

    Runs on the first configured shield.  Strengths must be ascending,
    start at 0 and stay in [0, 1]; strength 0 reproduces the unmitigated
    pipeline exactly.
    """
    strengths = [float(s) for s in strengths]
    if not strengths or strengths[0] != 0.0:
        raise ValueError("strengths must start at 0")
    if any(b <= a for a, b in zip(strengths, strengths[1:])):
        raise ValueError("strengths must be strictly ascending")
    if any(not 0.0 <= s <= 1.0 for s in strengths):
        raise ValueError("strengths must lie in [0, 1]")
    out = []
    for s in strengths:
        res = run_pipeline(cfg, 0, Modality.BACKSCATTER, countermeasure_strength=s)
        out.append((s, res.report))
    return out


# ---------------------------------------------------------------------------
# report rendering

_COLUMNS = ("Shield", "SE cap (dB)", "Leakage Type", "Validation Accuracy (%)",
            "Accuracy (%)", "Precision (%)", "Recall (%)", "Specificity (%)",
            "F1 (%)")
_CSV_COLUMNS = ("shield", "se_cap_db", "leakage_type", "validation_accuracy_pct",
                "accuracy_pct", "precision_pct", "recall_pct",
                "specificity_pct", "f1_pct")

_MODALITY_NAMES = {Modality.EM: "EM", Modality.BACKSCATTER: "Backscattering"}


def format_pct(value: float) -> str:
    """Two decimals, round half up (99.555 renders as 99.56)."""
    return str(Decimal(repr(float(value))).quantize(Decimal("0.01"),
                                                    rounding=ROUND_HALF_UP))


def _row_cells(row: TableRow) -> list[str]:
    r = row.report
    return [row.shield_name, f"{row.se_cap_db:g}", _MODALITY_NAMES[row.modality],
            format_pct(r.validation_accuracy_pct), format_pct(r.accuracy_pct),
            format_pct(r.precision_pct), format_pct(r.recall_pct),
            format_pct(r.specificity_pct), format_pct(r.f1_pct)]


def render_report(table: ComparisonTable, format: str = "markdown") -> str:
    if not table.rows:
        raise ValueError("cannot render an empty table")
    if format == "markdown":
        lines = ["| " + " | ".join(_COLUMNS) + " |",
                 "|" + "|".join("---" for _ in _COLUMNS) + "|"]
        lines += ["| " + " | ".join(_row_cells(row)) + " |" for row in table.rows]
    elif format == "csv":
        lines = [",".join(_CSV_COLUMNS)]
        lines += [",".join(_row_cells(row)) for row in table.rows]
    else:
        raise ValueError(f"unknown report format: {format!r}")
    return "\n".join(lines) + "\n"


def emit_report(table: ComparisonTable, format: str, destination) -> int:
    """Render and write the comparison table; returns bytes written."""
    text = render_report(table, format)
    payload = text.encode("utf-8")
    if isinstance(destination, (str, PathLike)):
        with open(destination, "wb") as fh:
            fh.write(payload)
    elif isinstance(destination, TextIOBase):
        destination.write(text)
    else:
        destination.write(payload)
    return len(payload)
