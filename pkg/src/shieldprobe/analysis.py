"""Statistical analysis of labeled trace matrices.

The chain used by the experiment harness: rank frequency columns by a
one-way ANOVA F-statistic, keep the top k, project onto principal
components explaining a target variance fraction, classify with one-vs-rest
linear SVMs selected by k-fold cross-validation, and report macro-averaged
metrics.  FastICA and cluster diagnostics (Amari index, silhouette) support
source-separation analysis of the backscatter modality.

Everything here is deterministic given its seed arguments; fitted models
are frozen dataclasses safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_CLAMP_SCORE = 1e12
_WITHIN_VAR_EPS = 1e-18

DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


# ---------------------------------------------------------------------------
# informative-frequency scoring

@dataclass(frozen=True)
class FrequencyScores:
    """Per-column ANOVA scores and the column ranking they induce."""

    scores: np.ndarray    # (d,) F-statistic per column, >= 0
    selected: np.ndarray  # all column indices, descending score, ties by index


def _class_partitions(labels) -> tuple[np.ndarray, list[np.ndarray]]:
    labels = np.asarray(labels)
    classes = np.unique(labels)
    return classes, [np.flatnonzero(labels == c) for c in classes]


def score_frequencies(x, labels) -> FrequencyScores:
    """One-way ANOVA F-statistic per column across workload classes.

    F = (between-class SS / (k-1)) / (within-class SS / (N-k)).  Columns
    whose within-class variance collapses below 1e-18 while the class
    means still differ get the clamp score 1e12.
    """
    x = np.asarray(x, dtype=float)
    classes, parts = _class_partitions(labels)
    if len(classes) < 2:
        raise ValueError("scoring needs at least 2 classes")
    if any(len(p) < 2 for p in parts):
        raise ValueError("every class needs at least 2 rows")
    if len(labels) != x.shape[0]:
        raise ValueError("labels length must match the row count")

    n, k = x.shape[0], len(classes)
    grand = x.mean(axis=0)
    ssb = np.zeros(x.shape[1])
    ssw = np.zeros(x.shape[1])
    for idx in parts:
        cm = x[idx].mean(axis=0)
        ssb += len(idx) * (cm - grand) ** 2
        ssw += ((x[idx] - cm) ** 2).sum(axis=0)
    msb = ssb / (k - 1)
    msw = ssw / (n - k)

    degenerate = msw < _WITHIN_VAR_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(degenerate, np.where(msb > 0, _CLAMP_SCORE, 0.0), msb / np.maximum(msw, _WITHIN_VAR_EPS))
    order = np.argsort(-f, kind="stable")
    return FrequencyScores(scores=f, selected=order)


def select_top_k(fs: FrequencyScores, k: int = 64) -> np.ndarray:
    """The k best-scoring column indices (ties broken by lower index)."""
    if k < 1 or k > fs.selected.size:
        raise ValueError(f"k must lie in [1, {fs.selected.size}]")
    return fs.selected[:k].copy()


# ---------------------------------------------------------------------------
# principal component analysis

@dataclass(frozen=True)
class PcaModel:
    """Centering vector, principal axes and the full eigenvalue spectrum."""

    mean: np.ndarray
    components: np.ndarray    # (m, d), orthonormal rows
    eigenvalues: np.ndarray   # full spectrum, descending, >= 0
    m: int
    cumulative_explained: float


def pca_fit(x, variance_target: float = 0.95) -> PcaModel:
    """Fit PCA keeping the fewest components reaching ``variance_target``.

    Eigendecomposition of the population covariance via a symmetric
    solver; eigenvector signs are normalized (largest-magnitude entry
    positive) so refits are reproducible.
    """
    if not 0.0 < variance_target <= 1.0:
        raise ValueError("variance_target must lie in (0, 1]")
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 1:
        raise ValueError("pca_fit needs a matrix with >= 2 rows and >= 1 column")

    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / x.shape[0]
    vals, vecs = np.linalg.eigh(cov)
    vals = np.clip(vals[::-1], 0.0, None)
    vecs = vecs[:, ::-1].T  # rows are eigenvectors, descending eigenvalue
    flip = np.sign(vecs[np.arange(vecs.shape[0]), np.abs(vecs).argmax(axis=1)])
    vecs = vecs * np.where(flip == 0, 1.0, flip)[:, None]

    total = vals.sum()
    if total <= 0.0:
        return PcaModel(mean=mean, components=vecs[:1], eigenvalues=vals,
                        m=1, cumulative_explained=1.0)
    frac = np.cumsum(vals) / total
    m = int(np.searchsorted(frac, variance_target - 1e-15) + 1)
    m = min(m, vals.size)
    return PcaModel(mean=mean, components=vecs[:m], eigenvalues=vals,
                    m=m, cumulative_explained=float(frac[m - 1]))


def pca_transform(model: PcaModel, x) -> np.ndarray:
    """Project rows onto the fitted components: (x - mean) @ components.T."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.mean.size:
        raise ValueError("column count does not match the fitted dimension")
    return (x - model.mean) @ model.components.T


# ---------------------------------------------------------------------------
# linear SVM with cross-validated regularization

@dataclass(frozen=True)
class SvmModel:
    """One-vs-rest linear hyperplanes and the CV selection metadata."""

    classes: np.ndarray
    weights: np.ndarray  # (k, d)
    biases: np.ndarray   # (k,)
    c_selected: float
    validation_accuracy_pct: float


def _fit_ovr(x, labels, classes, c: float, epochs: int, seed: int = 0,
             batch_size: int = 16):
    """Mini-batch Pegasos subgradient descent, one hyperplane per class.

    All one-vs-rest problems train jointly on the same seeded per-epoch
    sample shuffle.  Regularization lambda = 1/(C*n), step size
    1/(lambda*t) with t counting batches, iterates averaged over the last
    third of training for stability.  The bias rides along as an
    augmented constant feature.  Deterministic given the seed.
    """
    n, d = x.shape
    xa = np.hstack([x, np.ones((n, 1))])
    y_signed = np.where(np.asarray(labels)[:, None] == classes[None, :], 1.0, -1.0)
    lam = 1.0 / (c * n)
    radius = 1.0 / np.sqrt(lam)
    w = np.zeros((classes.size, d + 1))
    w_sum = np.zeros_like(w)
    n_avg = 0
    rng = np.random.default_rng(seed)
    t = 0
    avg_start = (2 * epochs) // 3
    for epoch in range(epochs):
        order = rng.permutation(n)
        for lo in range(0, n, batch_size):
            idx = order[lo:lo + batch_size]
            t += 1
            xb = xa[idx]
            yb = y_signed[idx]
            viol = yb * (xb @ w.T) < 1.0  # (batch, k)
            grad_part = (yb * viol).T @ xb
            w = (1.0 - 1.0 / t) * w + grad_part / (lam * t * idx.size)
            norms = np.linalg.norm(w, axis=1, keepdims=True)
            np.clip(norms / radius, 1.0, None, out=norms)
            w /= norms
        if epoch >= avg_start:
            w_sum += w
            n_avg += 1
    w = w_sum / n_avg
    return w[:, :d], w[:, d]


def _decision_values(weights, biases, x) -> np.ndarray:
    return np.asarray(x, dtype=float) @ weights.T + biases


def svm_predict(model: SvmModel, x) -> np.ndarray:
    """Class with the highest decision value; ties go to the earlier class."""
    scores = _decision_values(model.weights, model.biases, x)
    return model.classes[np.argmax(scores, axis=1)]


def svm_train_cv(x, labels, folds: int = 5, c_grid=None, seed: int = 0,
                 epochs: int = 400) -> SvmModel:
    """Train one-vs-rest linear SVMs, choosing C by k-fold cross-validation.

    Folds are a stratified, seeded shuffle of each class; the mean CV
    accuracy selects C (ties to the smaller value) and the final model is
    refit on all rows.  Identical inputs and seed reproduce the weights
    bit for bit.
    """
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels)
    if x.shape[0] != labels.size:
        raise ValueError("labels length must match the row count")
    classes, parts = _class_partitions(labels)
    if classes.size < 2:
        raise ValueError("training needs at least 2 classes")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    for cls, idx in zip(classes, parts):
        if idx.size < folds:
            raise ValueError(f"class {cls} has fewer rows than folds ({idx.size} < {folds})")
    c_grid = tuple(DEFAULT_C_GRID if c_grid is None else c_grid)
    if not c_grid or any(c <= 0 for c in c_grid):
        raise ValueError("c_grid must contain positive values")

    rng = np.random.default_rng(seed)
    fold_of = np.empty(labels.size, dtype=int)
    for idx in parts:
        fold_of[rng.permutation(idx)] = np.arange(idx.size) % folds

    # condition features for the subgradient solver; the scaling is folded
    # back into the returned hyperplanes below
    mu = x.mean(axis=0)
    sd = np.maximum(x.std(axis=0), 1e-12)
    xs = (x - mu) / sd

    best_c, best_acc = None, -1.0
    for ci, c in enumerate(sorted(c_grid)):
        accs = []
        for fold in range(folds):
            tr = fold_of != fold
            va = ~tr
            fit_seed = seed + 1000 * ci + fold + 1
            weights, biases = _fit_ovr(xs[tr], labels[tr], classes, c, epochs,
                                       seed=fit_seed)
            pred = classes[np.argmax(_decision_values(weights, biases, xs[va]), axis=1)]
            accs.append(float(np.mean(pred == labels[va])))
        mean_acc = float(np.mean(accs))
        if mean_acc > best_acc:
            best_c, best_acc = c, mean_acc

    ws, bs = _fit_ovr(xs, labels, classes, best_c, epochs, seed=seed)
    weights = ws / sd
    biases = bs - weights @ mu
    return SvmModel(classes=classes, weights=weights, biases=biases,
                    c_selected=best_c, validation_accuracy_pct=100.0 * best_acc)


# ---------------------------------------------------------------------------
# classifier evaluation

@dataclass(frozen=True)
class ClassifierReport:
    """Macro-averaged classification metrics plus the raw confusion matrix."""

    accuracy_pct: float
    precision_pct: float
    recall_pct: float
    specificity_pct: float
    f1_pct: float
    validation_accuracy_pct: float
    confusion: np.ndarray  # (k, k) counts, rows = true class


def evaluate(model: SvmModel, x, labels) -> ClassifierReport:
    """Confusion matrix and macro metrics of the model on labeled data.

    Per-class precision is defined as 0 when the class is never
    predicted; macro values are unweighted means over classes.
    """
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels)
    if x.shape[0] != labels.size:
        raise ValueError("labels length must match the row count")
    if x.shape[1] != model.weights.shape[1]:
        raise ValueError("feature dimension does not match the fitted model")
    class_index = {c: i for i, c in enumerate(model.classes)}
    unknown = set(np.unique(labels)) - set(model.classes.tolist())
    if unknown:
        raise ValueError(f"labels not known to the model: {sorted(unknown)}")

    pred = svm_predict(model, x)
    k = model.classes.size
    confusion = np.zeros((k, k), dtype=int)
    for t, p in zip(labels, pred):
        confusion[class_index[t], class_index[p]] += 1

    total = confusion.sum()
    tp = np.diag(confusion).astype(float)
    fp = confusion.sum(axis=0) - tp
    fn = confusion.sum(axis=1) - tp
    tn = total - tp - fp - fn
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(tp + fp > 0, tp / np.maximum(tp + fp, 1), 0.0)
        recall = np.where(tp + fn > 0, tp / np.maximum(tp + fn, 1), 0.0)
        specificity = np.where(tn + fp > 0, tn / np.maximum(tn + fp, 1), 0.0)
        f1 = np.where(precision + recall > 0,
                      2 * precision * recall / np.maximum(precision + recall, 1e-300), 0.0)
    return ClassifierReport(
        accuracy_pct=100.0 * float(tp.sum() / total),
        precision_pct=100.0 * float(precision.mean()),
        recall_pct=100.0 * float(recall.mean()),
        specificity_pct=100.0 * float(specificity.mean()),
        f1_pct=100.0 * float(f1.mean()),
        validation_accuracy_pct=model.validation_accuracy_pct,
        confusion=confusion)


# ---------------------------------------------------------------------------
# FastICA

@dataclass(frozen=True)
class IcaModel:
    """PCA whitening plus the orthogonal unmixing found by FastICA."""

    mean: np.ndarray
    whitening: np.ndarray  # (m, d): x_white = (x - mean) @ whitening.T
    unmixing: np.ndarray   # (m, m), orthonormal rows in whitened space
    n_components: int
    converged: bool
    iterations_used: int


def _sym_decorrelate(w: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(w @ w.T)
    return vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T @ w


def ica_fit(x, n_components: int, tol: float = 1e-6, max_iter: int = 500,
            seed: int = 0) -> IcaModel:
    """FastICA with the logcosh contrast and symmetric decorrelation.

    Data is centered and PCA-whitened to ``n_components`` dimensions,
    then the fixed-point iteration runs from a seeded random orthogonal
    start.  If ``max_iter`` is reached the partial result is returned
    with converged=False (Gaussian mixtures are legitimately
    non-identifiable).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("ica_fit needs a 2-D matrix")
    n, d = x.shape
    if not 1 <= n_components <= min(n, d):
        raise ValueError(f"n_components must lie in [1, {min(n, d)}]")

    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / n
    vals, vecs = np.linalg.eigh(cov)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    if vals[n_components - 1] <= 1e-12 * max(vals[0], 1e-300):
        raise ValueError("data rank is too low for the requested components")
    whitening = (vecs[:, :n_components] / np.sqrt(vals[:n_components])).T
    xw = xc @ whitening.T

    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n_components, n_components)))
    w = q * np.sign(np.diag(r))

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        u = xw @ w.T
        g = np.tanh(u)
        g_prime = 1.0 - g ** 2
        w_new = (g.T @ xw) / n - g_prime.mean(axis=0)[:, None] * w
        w_new = _sym_decorrelate(w_new)
        delta = float(np.max(np.abs(np.abs(np.diag(w_new @ w.T)) - 1.0)))
        w = w_new
        if delta < tol:
            converged = True
            break

    return IcaModel(mean=mean, whitening=whitening, unmixing=w,
                    n_components=n_components, converged=converged,
                    iterations_used=iterations)


def ica_transform(model: IcaModel, x) -> np.ndarray:
    """Estimated source signals for new rows."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.mean.size:
        raise ValueError("column count does not match the fitted dimension")
    return (x - model.mean) @ model.whitening.T @ model.unmixing.T


def amari_index(combined) -> float:
    """Distance of a square matrix from a scaled permutation (0 = perfect).

    The standard recovery metric for source separation: applies the
    row-wise and column-wise max-normalized excess-mass sums, averaged
    over 2k.  Invariant to row/column scaling and permutation.
    """
    p = np.abs(np.asarray(combined, dtype=float))
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError("amari_index needs a square matrix")
    row_max = p.max(axis=1)
    col_max = p.max(axis=0)
    if np.any(row_max == 0) or np.any(col_max == 0):
        raise ValueError("matrix has an all-zero row or column")
    k = p.shape[0]
    rows = (p / row_max[:, None]).sum(axis=1) - 1.0
    cols = (p / col_max[None, :]).sum(axis=0) - 1.0
    return float((rows.sum() + cols.sum()) / (2.0 * k))


# ---------------------------------------------------------------------------
# cluster separability

def silhouette(y, labels) -> float:
    """Mean silhouette coefficient (Euclidean) of labeled points in y."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    classes, parts = _class_partitions(labels)
    if classes.size < 2:
        raise ValueError("silhouette needs at least 2 classes")
    if any(len(p) < 2 for p in parts):
        raise ValueError("every class needs at least 2 points")
    if len(labels) != y.shape[0]:
        raise ValueError("labels length must match the row count")

    sq = (y ** 2).sum(axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (y @ y.T), 0.0)
    dist = np.sqrt(d2)

    n = y.shape[0]
    a = np.zeros(n)
    b = np.full(n, np.inf)
    for idx in parts:
        same = dist[:, idx]
        in_cluster = np.zeros(n, dtype=bool)
        in_cluster[idx] = True
        # mean distance to this cluster, excluding self for members
        a[in_cluster] = same[in_cluster].sum(axis=1) / (idx.size - 1)
        b[~in_cluster] = np.minimum(b[~in_cluster], same[~in_cluster].mean(axis=1))
    denom = np.maximum(np.maximum(a, b), 1e-300)
    s = (b - a) / denom
    return float(s.mean())
