"""Feature screening, ranking, and transformation.

Two-sample t screening rejects features whose class means do not differ
significantly; the Fisher discriminant ratio ranks the survivors; scatter
matrices give the J separability criteria; PCA re-expresses the feature
space on standardized coordinates; sequential forward selection grows
feature sets either greedily or along a fixed ranking.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats as scipy_stats

from .dataset import Dataset


class UnequalLengthsError(ValueError):
    """The two-sample t statistic requires balanced classes."""


class ZeroPooledVarianceError(ValueError):
    """Both classes are constant; the t statistic is undefined."""


class SingularWithinScatterError(ValueError):
    """S_w is singular even after ridge regularization."""


class ConstantFeatureError(ValueError):
    """A feature with zero standard deviation cannot be standardized."""


class DimensionMismatchError(ValueError):
    """Vector dimension does not match the fitted model."""


# Ridge policy for near-singular within-class scatter.
RIDGE_CONDITION_LIMIT = 1e12
RIDGE_SCALE = 1e-8


def t_statistic(xs, ys) -> float:
    """Pooled two-sample t statistic q = (mean_x - mean_y) / (s_z sqrt(2/N)).

    Classes must have equal size N >= 2; s_z is the square root of the mean
    of the two sample (1/(N-1)) variances.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size != ys.size:
        raise UnequalLengthsError("class sizes %d and %d differ" % (xs.size, ys.size))
    n = xs.size
    if n < 2:
        raise ValueError("need at least 2 samples per class")
    pooled = 0.5 * (xs.var(ddof=1) + ys.var(ddof=1))
    if pooled == 0.0:
        raise ZeroPooledVarianceError("both classes are constant")
    return float((xs.mean() - ys.mean()) / (np.sqrt(pooled) * np.sqrt(2.0 / n)))


def t_critical_value(df: int, significance: float) -> float:
    """Two-sided Student-t critical value at the given significance level."""
    if not 0.0 < significance < 1.0:
        raise ValueError("significance must lie in (0, 1)")
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    return float(scipy_stats.t.ppf(1.0 - significance / 2.0, df))


@dataclass(frozen=True)
class ScreenResult:
    """Per-feature keep/reject decisions from the two-sample t screen."""

    feature_names: tuple
    statistics: np.ndarray  # q per feature; NaN where degenerate
    critical_value: float
    keep: np.ndarray  # bool per feature

    def kept_names(self):
        return tuple(n for n, k in zip(self.feature_names, self.keep) if k)


def t_screen(data: Dataset, significance: float = 0.05) -> ScreenResult:
    """Keep features whose |q| exceeds the two-sided critical value.

    Degenerate features (zero pooled variance) are rejected rather than
    fatal; unbalanced classes are an error for the whole screen.
    """
    rows1, rows2 = data.class_rows()
    if rows1.size != rows2.size:
        raise UnequalLengthsError(
            "t screen assumes balanced classes, got %d vs %d" % (rows1.size, rows2.size)
        )
    df = 2 * rows1.size - 2
    crit = t_critical_value(df, significance)
    stats = np.full(data.n_features, np.nan)
    keep = np.zeros(data.n_features, dtype=bool)
    for j in range(data.n_features):
        try:
            q = t_statistic(data.features[rows1, j], data.features[rows2, j])
        except ZeroPooledVarianceError:
            continue
        stats[j] = q
        keep[j] = abs(q) > crit
    return ScreenResult(data.feature_names, stats, crit, keep)


def fdr_score(mu1: float, mu2: float, var1: float, var2: float) -> float:
    """Fisher discriminant ratio (mu1 - mu2)^2 / (var1 + var2).

    With zero total variance the score is +inf for distinct means and 0
    otherwise, so constant features sort deterministically.
    """
    if var1 < 0 or var2 < 0:
        raise ValueError("variances must be non-negative")
    denom = var1 + var2
    if denom == 0.0:
        return float("inf") if mu1 != mu2 else 0.0
    return float((mu1 - mu2) ** 2 / denom)


@dataclass(frozen=True)
class RankedFeatures:
    """Features sorted by descending FDR, ties by original column index."""

    names: tuple
    scores: np.ndarray
    indices: np.ndarray  # original column index of each ranked feature

    def __iter__(self):
        return iter(zip(self.names, self.scores))

    def top(self, k):
        return self.names[:k]


def rank_features(data: Dataset) -> RankedFeatures:
    """Rank every feature by its two-class FDR from sample means/variances."""
    rows1, rows2 = data.class_rows()
    x1 = data.features[rows1]
    x2 = data.features[rows2]
    mu1, mu2 = x1.mean(axis=0), x2.mean(axis=0)
    v1, v2 = x1.var(axis=0, ddof=1), x2.var(axis=0, ddof=1)
    scores = np.array(
        [fdr_score(mu1[j], mu2[j], v1[j], v2[j]) for j in range(data.n_features)]
    )
    # lexsort: primary key descending score, secondary ascending column index
    order = np.lexsort((np.arange(scores.size), -scores))
    return RankedFeatures(
        names=tuple(data.feature_names[i] for i in order),
        scores=scores[order],
        indices=order,
    )


def scatter_matrices(data: Dataset):
    """Within-class, between-class and mixture scatter matrices (S_w, S_b, S_m).

    Class covariances are population (1/n_i) estimates weighted by the
    empirical priors n_i/N; S_m is the population covariance about the
    global mean, so S_m = S_w + S_b holds exactly.
    """
    x = data.features
    n, d = x.shape
    mu0 = x.mean(axis=0)
    s_w = np.zeros((d, d))
    s_b = np.zeros((d, d))
    for rows in data.class_rows():
        xc = x[rows]
        prior = rows.size / n
        mu = xc.mean(axis=0)
        centered = xc - mu
        s_w += prior * (centered.T @ centered) / rows.size
        diff = (mu - mu0)[:, None]
        s_b += prior * (diff @ diff.T)
    centered0 = x - mu0
    s_m = (centered0.T @ centered0) / n
    return s_w, s_b, s_m


def _ridged(s_w):
    """Apply the ridge policy to S_w when it is ill-conditioned."""
    s_w = np.atleast_2d(np.asarray(s_w, dtype=np.float64))
    d = s_w.shape[0]
    if np.linalg.cond(s_w) > RIDGE_CONDITION_LIMIT:
        s_w = s_w + (RIDGE_SCALE * np.trace(s_w) / d) * np.eye(d)
    return s_w


def j_criteria(s_w, s_b, s_m):
    """The scalar separability criteria (J1, J2, J3).

    J1 = trace(S_m)/trace(S_w); J2 = det(S_m)/det(S_w);
    J3 = trace(S_w^-1 S_m) via a linear solve. S_b enters only through
    S_m = S_w + S_b and is accepted for interface symmetry.
    """
    del s_b
    s_w = np.atleast_2d(np.asarray(s_w, dtype=np.float64))
    s_m = np.atleast_2d(np.asarray(s_m, dtype=np.float64))
    tr_w = float(np.trace(s_w))
    if tr_w <= 0.0:
        raise SingularWithinScatterError("trace(S_w) must be positive")
    j1 = float(np.trace(s_m)) / tr_w
    s_w_r = _ridged(s_w)
    det_w = np.linalg.det(s_w_r)
    if det_w == 0.0 or not np.isfinite(det_w):
        raise SingularWithinScatterError("S_w singular after ridge")
    j2 = float(np.linalg.det(s_m) / det_w)
    try:
        j3 = float(np.trace(np.linalg.solve(s_w_r, s_m)))
    except np.linalg.LinAlgError as exc:
        raise SingularWithinScatterError("S_w singular after ridge") from exc
    return j1, j2, j3


@dataclass(frozen=True)
class PcaModel:
    """Standardizing PCA fit: z-score statistics plus eigenstructure.

    Loadings are stored as columns (loadings[:, i] is the i-th component),
    orthonormal, sign-normalized so each column's largest-magnitude entry
    is positive. Eigenvalues are non-increasing; cumulative_pct ends at 100.
    """

    mean: np.ndarray
    std: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray
    cumulative_pct: np.ndarray

    @property
    def n_components(self):
        return self.eigenvalues.size

    @property
    def variance_pct(self):
        return np.diff(self.cumulative_pct, prepend=0.0)


def fit_pca(data) -> PcaModel:
    """Fit PCA on z-scored features via covariance eigendecomposition.

    Accepts a Dataset or a plain (n, d) matrix. Constant features are
    rejected (ConstantFeatureError) since they cannot be standardized.
    """
    x = np.asarray(getattr(data, "features", data), dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least 2 rows")
    mean = x.mean(axis=0)
    std = x.std(axis=0, ddof=1)
    if np.any(std == 0.0):
        bad = int(np.flatnonzero(std == 0.0)[0])
        raise ConstantFeatureError("feature column %d is constant" % bad)
    z = (x - mean) / std
    cov = (z.T @ z) / (x.shape[0] - 1)
    eigenvalues, vectors = np.linalg.eigh(cov)
    eigenvalues = np.maximum(eigenvalues, 0.0)  # clamp -0-level noise
    order = np.lexsort((np.arange(eigenvalues.size), -eigenvalues))
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]
    # sign convention: largest-magnitude entry of each component positive
    anchor = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[anchor, np.arange(vectors.shape[1])] < 0.0, -1.0, 1.0)
    vectors = vectors * signs
    cum = np.cumsum(eigenvalues)
    cumulative_pct = 100.0 * cum / cum[-1]
    return PcaModel(mean, std, vectors, eigenvalues, cumulative_pct)


def transform_pca(model: PcaModel, x, k: int = None):
    """Z-score with the stored statistics and project onto the first k loadings."""
    if k is None:
        k = model.n_components
    if not 1 <= k <= model.n_components:
        raise DimensionMismatchError("k=%d outside 1..%d" % (k, model.n_components))
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    if x2.shape[1] != model.mean.size:
        raise DimensionMismatchError(
            "expected %d features, got %d" % (model.mean.size, x2.shape[1])
        )
    z = (x2 - model.mean) / model.std
    proj = z @ model.loadings[:, :k]
    return proj[0] if single else proj


def inverse_transform_pca(model: PcaModel, projected):
    """Map projected coordinates back to the z-scored feature space."""
    projected = np.asarray(projected, dtype=np.float64)
    single = projected.ndim == 1
    p2 = np.atleast_2d(projected)
    k = p2.shape[1]
    if not 1 <= k <= model.n_components:
        raise DimensionMismatchError("bad component count %d" % k)
    z = p2 @ model.loadings[:, :k].T
    return z[0] if single else z


@dataclass(frozen=True)
class SfsStep:
    features: tuple
    score: float


@dataclass(frozen=True)
class SfsTrace:
    """Strictly nested feature sets, one per step; step k holds k features."""

    steps: tuple

    def __iter__(self):
        return iter(self.steps)

    def __len__(self):
        return len(self.steps)


def sfs(data: Dataset, evaluator, max_k: int, candidate_order: RankedFeatures = None) -> SfsTrace:
    """Sequential forward selection.

    With candidate_order given, step k evaluates exactly the top-k prefix of
    that ranking. Without it, classic greedy SFS: each step adds the single
    feature maximizing the evaluator, ties resolved toward the lower column
    index. The evaluator receives a Dataset restricted to the candidate set.
    """
    if not 1 <= max_k <= data.n_features:
        raise ValueError("max_k=%d outside 1..%d" % (max_k, data.n_features))
    steps = []
    if candidate_order is not None:
        for k in range(1, max_k + 1):
            names = tuple(candidate_order.names[:k])
            steps.append(SfsStep(names, float(evaluator(data.select_features(names)))))
        return SfsTrace(tuple(steps))

    selected = []
    remaining = list(data.feature_names)
    for _ in range(max_k):
        best_name, best_score = None, None
        for name in remaining:  # column order, so ties keep the earliest
            trial = tuple(selected) + (name,)
            score = float(evaluator(data.select_features(trial)))
            if best_score is None or score > best_score:
                best_name, best_score = name, score
        selected.append(best_name)
        remaining.remove(best_name)
        steps.append(SfsStep(tuple(selected), best_score))
    return SfsTrace(tuple(steps))


def scatter_pairs(data: Dataset, feature_i: str, feature_j: str):
    """(x_i, x_j, label) triples for a feature pair, row order preserved."""
    xi = data.column(feature_i)
    xj = data.column(feature_j)
    return [(float(a), float(b), l) for a, b, l in zip(xi, xj, data.labels)]
