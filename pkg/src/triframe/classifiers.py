"""The supervised-learning bench: Gaussian discriminants, KNN, and SVM.

All fits are deterministic functions of the training set and configuration.
Class labels follow the Dataset convention: the sort-order smaller label is
"class 1" and wins Gaussian/KNN prediction ties. Inside the SVM the larger
label encodes to +1 (the identity encoding for numeric -1/+1 labels) and
zero margins resolve to it.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Dataset
from .selection import DimensionMismatchError


class SingleClassDataError(ValueError):
    """Training data must contain both classes."""


class KTooLargeError(ValueError):
    """k exceeds the number of training rows."""


class ZeroVectorError(ValueError):
    """Cosine distance is undefined for zero vectors."""


class ConstantVectorError(ValueError):
    """Correlation distance is undefined for constant vectors."""


class NonconvergenceError(RuntimeError):
    """SMO hit its iteration cap with KKT violations remaining."""


class SingularSystemError(np.linalg.LinAlgError):
    """The least-squares SVM saddle system could not be solved."""


GAUSSIAN_MODES = ("linear", "diaglinear", "quadratic", "diagquadratic", "mahalanobis")
KNN_METRICS = ("euclidean", "cityblock", "cosine", "correlation")
KERNEL_KINDS = ("linear", "quadratic", "polynomial", "rbf")
SVM_SOLVERS = ("smo", "ls")

# Covariances worse conditioned than this (or estimated from fewer rows than
# dimensions) get lambda * mean(diagonal) * I added.
COND_LIMIT = 1e12
DEFAULT_RIDGE = 1e-8


def _class_matrices(data: Dataset):
    """Per-class row matrices in class order, rows sorted lexicographically.

    The row sort fixes the summation order, so sufficient statistics (and
    therefore fitted models) are bit-identical under any row permutation of
    the training set.
    """
    out = []
    for rows in data.class_rows():
        xc = data.features[rows]
        order = np.lexsort(xc.T[::-1])
        out.append(xc[order])
    return out


def _apply_ridge(cov, n_rows, ridge):
    d = cov.shape[0]
    needs = n_rows < d or np.linalg.cond(cov) > COND_LIMIT
    if not needs or ridge <= 0.0:
        return cov, False
    mean_diag = float(np.mean(np.diag(cov)))
    bump = ridge * mean_diag if mean_diag > 0.0 else ridge
    return cov + bump * np.eye(d), True


@dataclass(frozen=True)
class GaussianModel:
    """Gaussian discriminant fit: class means, per-mode covariances, priors."""

    mode: str
    classes: np.ndarray
    means: np.ndarray  # (2, d)
    covariances: np.ndarray  # (2, d, d); pooled modes repeat the pooled matrix
    priors: np.ndarray  # (2,)
    ridge: float

    @property
    def n_features(self):
        return self.means.shape[1]


def fit_gaussian(train: Dataset, mode: str, ridge: float = DEFAULT_RIDGE) -> GaussianModel:
    """Fit class means and sample (1/(n-1)) covariances for the given mode.

    linear/diaglinear pool the class covariances (full / diagonal);
    quadratic/mahalanobis keep per-class full covariances; diagquadratic
    keeps per-class diagonals. Ill-conditioned estimates get the ridge bump.
    """
    if mode not in GAUSSIAN_MODES:
        raise ValueError("unknown mode %r" % (mode,))
    classes = train.classes
    if classes.size < 2:
        raise SingleClassDataError("need two classes to fit")
    mats = _class_matrices(train)
    d = train.n_features
    means = np.stack([m.mean(axis=0) for m in mats])
    covs = []
    for xc, mu in zip(mats, means):
        centered = xc - mu
        covs.append((centered.T @ centered) / (xc.shape[0] - 1))

    if mode in ("linear", "diaglinear"):
        n_total = sum(m.shape[0] for m in mats)
        pooled = sum((m.shape[0] - 1) * c for m, c in zip(mats, covs)) / (n_total - 2)
        if mode == "diaglinear":
            pooled = np.diag(np.diag(pooled))
        pooled, _ = _apply_ridge(pooled, n_total, ridge)
        effective = np.stack([pooled, pooled])
    else:
        if mode == "diagquadratic":
            covs = [np.diag(np.diag(c)) for c in covs]
        effective = np.stack(
            [_apply_ridge(c, m.shape[0], ridge)[0] for c, m in zip(covs, mats)]
        )

    priors = np.array([m.shape[0] for m in mats], dtype=np.float64)
    priors /= priors.sum()
    return GaussianModel(mode, classes, means, effective, priors, ridge)


def gaussian_scores(model: GaussianModel, x):
    """Per-class decision scores (higher wins) for one vector or a matrix.

    Posterior modes score log prior - 1/2 log|Sigma| - 1/2 Mahalanobis^2;
    the mahalanobis mode scores the negated squared distance alone.
    """
    x = np.asarray(x, dtype=np.float64)
    x2 = np.atleast_2d(x)
    if x2.shape[1] != model.n_features:
        raise DimensionMismatchError(
            "expected %d features, got %d" % (model.n_features, x2.shape[1])
        )
    scores = np.empty((x2.shape[0], 2))
    for c in range(2):
        diff = x2 - model.means[c]
        cov = model.covariances[c]
        solved = np.linalg.solve(cov, diff.T)
        maha = np.einsum("ij,ji->i", diff, solved)
        if model.mode == "mahalanobis":
            scores[:, c] = -maha
        else:
            sign, logdet = np.linalg.slogdet(cov)
            if sign <= 0:
                raise np.linalg.LinAlgError("covariance not positive definite")
            scores[:, c] = np.log(model.priors[c]) - 0.5 * logdet - 0.5 * maha
    return scores


def predict_gaussian(model: GaussianModel, x):
    """Predicted labels; ties go to class 1 (the first class in sort order)."""
    x = np.asarray(x, dtype=np.float64)
    scores = gaussian_scores(model, x)
    winners = np.where(scores[:, 0] >= scores[:, 1], 0, 1)
    labels = model.classes[winners]
    return labels[0] if x.ndim == 1 else labels


@dataclass(frozen=True)
class KnnSpec:
    """Neighbor count and distance metric. Odd k avoids vote ties."""

    k: int = 5
    metric: str = "euclidean"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.metric not in KNN_METRICS:
            raise ValueError("unknown metric %r" % (self.metric,))


def _knn_distances(metric, train_x, x):
    if metric == "euclidean":
        diff = train_x - x
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if metric == "cityblock":
        return np.abs(train_x - x).sum(axis=1)
    if metric == "cosine":
        norms = np.linalg.norm(train_x, axis=1)
        xn = np.linalg.norm(x)
        if xn == 0.0 or np.any(norms == 0.0):
            raise ZeroVectorError("cosine distance needs nonzero vectors")
        return 1.0 - (train_x @ x) / (norms * xn)
    # correlation: cosine distance of the mean-centered vectors
    tc = train_x - train_x.mean(axis=1, keepdims=True)
    xc = x - x.mean()
    norms = np.linalg.norm(tc, axis=1)
    xn = np.linalg.norm(xc)
    if xn == 0.0 or np.any(norms == 0.0):
        raise ConstantVectorError("correlation distance needs non-constant vectors")
    return 1.0 - (tc @ xc) / (norms * xn)


def knn_predict(train: Dataset, spec: KnnSpec, x):
    """Majority vote among the k nearest training rows.

    Distance ties prefer the lower training-row index (stable sort); vote
    ties go to class 1.
    """
    if spec.k > train.n_rows:
        raise KTooLargeError("k=%d > %d training rows" % (spec.k, train.n_rows))
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    queries = np.atleast_2d(x)
    if queries.shape[1] != train.n_features:
        raise DimensionMismatchError(
            "expected %d features, got %d" % (train.n_features, queries.shape[1])
        )
    classes = train.classes
    labels = np.empty(queries.shape[0], dtype=train.labels.dtype)
    for i, q in enumerate(queries):
        dist = _knn_distances(spec.metric, train.features, q)
        nearest = np.argsort(dist, kind="stable")[: spec.k]
        votes = np.sum(train.labels[nearest] == classes[1])
        labels[i] = classes[1] if votes > spec.k - votes else classes[0]
    return labels[0] if single else labels


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters.

    quadratic is (x.y + 1)^2; polynomial is (x.y + 1)^degree. For rbf,
    gamma=None means "resolve by the median heuristic at fit time":
    gamma = 1 / (d * median pairwise squared distance).
    """

    kind: str = "rbf"
    degree: int = 3
    gamma: float = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError("unknown kernel %r" % (self.kind,))
        if self.degree < 1:
            raise ValueError("degree must be >= 1")


def median_heuristic_gamma(x) -> float:
    """gamma = 1 / (d * median ||x_i - x_j||^2) over distinct training pairs."""
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    med = float(np.median(d2[np.triu_indices(n, k=1)]))
    if med <= 0.0:
        return 1.0 / d
    return 1.0 / (d * med)


def kernel_matrix(spec: KernelSpec, a, b):
    """Gram matrix K[i, j] = k(a_i, b_j)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(
            "dimension %d vs %d" % (a.shape[1], b.shape[1])
        )
    if spec.kind == "rbf":
        if spec.gamma is None:
            raise ValueError("rbf gamma unresolved; fit resolves it or pass one")
        sa = np.einsum("ij,ij->i", a, a)
        sb = np.einsum("ij,ij->i", b, b)
        d2 = np.maximum(sa[:, None] + sb[None, :] - 2.0 * (a @ b.T), 0.0)
        return np.exp(-spec.gamma * d2)
    g = a @ b.T
    if spec.kind == "linear":
        return g
    if spec.kind == "quadratic":
        return (g + 1.0) ** 2
    return (g + 1.0) ** spec.degree


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Kernel value for a single pair of vectors."""
    return float(kernel_matrix(spec, np.atleast_2d(x), np.atleast_2d(y))[0, 0])


@dataclass(frozen=True)
class SvmModel:
    """Fitted SVM: support vectors with alpha_i * y_i coefficients and bias.

    sv_indices point back into the training set; alphas are the raw duals
    for those rows (every row, for the LS solver). classes[0] maps to +1.
    """

    kernel: KernelSpec
    classes: np.ndarray
    support_vectors: np.ndarray
    coef: np.ndarray  # alpha_i * y_i
    alphas: np.ndarray
    sv_indices: np.ndarray
    bias: float
    C: float
    solver: str
    tol: float
    iterations: int = 0
    objective_trace: tuple = field(default=(), repr=False)


def _encode_labels(train: Dataset):
    """classes[1] (the sort-order larger label) maps to +1, classes[0] to -1.

    With numeric -1/+1 labels this is the identity encoding, so decision
    values carry the sign callers expect.
    """
    classes = train.classes
    if classes.size < 2:
        raise SingleClassDataError("need two classes to fit")
    return classes, np.where(train.labels == classes[1], 1.0, -1.0)


def fit_svm(
    train: Dataset,
    kernel: KernelSpec = KernelSpec("rbf"),
    solver: str = "smo",
    C: float = 1.0,
    tol: float = 1e-3,
    max_iter: int = None,
    track_objective: bool = False,
) -> SvmModel:
    """Train a soft-margin SVM with the SMO or least-squares solver."""
    if solver not in SVM_SOLVERS:
        raise ValueError("unknown solver %r" % (solver,))
    if C <= 0.0:
        raise ValueError("C must be positive")
    classes, y = _encode_labels(train)
    x = train.features
    if kernel.kind == "rbf" and kernel.gamma is None:
        kernel = replace(kernel, gamma=median_heuristic_gamma(x))
    gram = kernel_matrix(kernel, x, x)

    if solver == "ls":
        alphas, bias = _solve_ls(gram, y, C)
        sv = np.arange(x.shape[0])
        trace = ()
        iters = 1
    else:
        alphas, bias, iters, trace = _solve_smo(gram, y, C, tol, max_iter, track_objective)
        sv = np.flatnonzero(alphas > 0.0)

    return SvmModel(
        kernel=kernel,
        classes=classes,
        support_vectors=x[sv],
        coef=alphas[sv] * y[sv],
        alphas=alphas[sv],
        sv_indices=sv,
        bias=bias,
        C=C,
        solver=solver,
        tol=tol,
        iterations=iters,
        objective_trace=trace,
    )


def _solve_smo(gram, y, C, tol, max_iter, track_objective):
    """Two-variable coordinate ascent on the dual with second-order pairing.

    Tracks g_i = 1 - y_i * f_raw(x_i); the violation criterion is
    y_i * g_i. The first index maximizes the criterion over the still-
    raisable set; the partner maximizes the analytic objective gain among
    the lowerable ones. Each update moves both duals by the same step along
    the equality constraint, so sum(alpha * y) stays zero to rounding.
    Stops when the worst violating pair is within tol.
    """
    n = y.size
    if max_iter is None:
        max_iter = max(200_000, 2_000 * n)
    alpha = np.zeros(n)
    crit = y.copy()  # y_i * g_i with g_i = 1 - y_i * f_raw(x_i)
    ya = np.zeros(n)  # y_i * alpha_i, box-bounded by [lower_i, upper_i]
    upper = np.where(y > 0, C, 0.0)
    lower = np.where(y > 0, 0.0, -C)
    diag = np.diag(gram).copy()
    up_mask = ya < upper
    low_mask = ya > lower
    trace = []
    it = 0
    while up_mask.any() and low_mask.any():
        i = int(np.argmax(np.where(up_mask, crit, -np.inf)))
        low_crit = np.where(low_mask, crit, np.inf)
        if crit[i] - low_crit.min() <= tol:
            break
        if it >= max_iter:
            raise NonconvergenceError(
                "SMO: violation %.3g > tol after %d iterations"
                % (crit[i] - low_crit.min(), it)
            )
        diff = crit[i] - low_crit  # > 0 exactly on usable partners
        curv_row = np.maximum(diag[i] + diag - 2.0 * gram[i], 1e-12)
        j = int(np.argmax(np.where(diff > 0.0, diff * diff / curv_row, -np.inf)))
        step = min(
            upper[i] - ya[i],
            ya[j] - lower[j],
            diff[j] / curv_row[j],
        )
        ya[i] += step
        ya[j] -= step
        alpha[i] = min(max(y[i] * ya[i], 0.0), C)
        alpha[j] = min(max(y[j] * ya[j], 0.0), C)
        up_mask[i] = ya[i] < upper[i]
        up_mask[j] = ya[j] < upper[j]
        low_mask[i] = ya[i] > lower[i]
        low_mask[j] = ya[j] > lower[j]
        crit += step * (gram[:, j] - gram[:, i])
        it += 1
        if track_objective:
            # dual objective sum(a) - a'Qa/2 rewritten through the tracked
            # criterion: W = (sum(alpha) + sum(ya * crit)) / 2
            trace.append(0.5 * float(alpha.sum() + ya @ crit))

    free = (alpha > 0.0) & (alpha < C)
    if free.any():
        bias = float(crit[free].mean())
    else:
        up = crit[up_mask]
        low = crit[low_mask]
        hi = up.max() if up.size else crit.min()
        lo = low.min() if low.size else crit.max()
        bias = float(0.5 * (hi + lo))
    return alpha, bias, it, tuple(trace)


def _solve_ls(gram, y, C):
    """Least-squares SVM: one saddle-point solve; every row becomes an SV."""
    n = y.size
    omega = gram * np.outer(y, y) + np.eye(n) / C
    system = np.zeros((n + 1, n + 1))
    system[0, 1:] = y
    system[1:, 0] = y
    system[1:, 1:] = omega
    rhs = np.concatenate(([0.0], np.ones(n)))
    try:
        solution = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("LS-SVM saddle system is singular") from exc
    if not np.isfinite(solution).all():
        raise SingularSystemError("LS-SVM solution is not finite")
    return solution[1:], float(solution[0])


def svm_decision(model: SvmModel, x):
    """Signed margin f(x) = sum alpha_i y_i K(s_i, x) + b."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    k = kernel_matrix(model.kernel, np.atleast_2d(x), model.support_vectors)
    margins = k @ model.coef + model.bias
    return float(margins[0]) if single else margins


def predict_svm(model: SvmModel, x):
    """Predicted labels; margin 0 goes to the +1 class."""
    x = np.asarray(x, dtype=np.float64)
    margins = np.atleast_1d(svm_decision(model, x))
    labels = np.where(margins >= 0.0, model.classes[1], model.classes[0])
    return labels[0] if x.ndim == 1 else labels


@dataclass(frozen=True)
class ClassifierSpec:
    """One classifier configuration, serializable into reports.

    kind selects the family; the remaining fields apply per family:
    gaussian uses variant/ridge, knn uses k/metric, svm uses
    kernel/degree/gamma/C/tol/solver.
    """

    kind: str
    variant: str = "linear"
    kernel: str = "rbf"
    degree: int = 3
    gamma: float = None
    C: float = 1.0
    tol: float = 1e-3
    k: int = 5
    metric: str = "euclidean"
    ridge: float = DEFAULT_RIDGE
    solver: str = "smo"

    def __post_init__(self):
        if self.kind not in ("gaussian", "knn", "svm"):
            raise ValueError("unknown classifier kind %r" % (self.kind,))
        if self.kind == "gaussian" and self.variant not in GAUSSIAN_MODES:
            raise ValueError("unknown gaussian variant %r" % (self.variant,))
        if self.kind == "knn":
            KnnSpec(self.k, self.metric)  # validates
        if self.kind == "svm":
            KernelSpec(self.kernel, self.degree, self.gamma)
            if self.solver not in SVM_SOLVERS:
                raise ValueError("unknown solver %r" % (self.solver,))

    def describe(self) -> dict:
        """The fields that matter for this kind, for report echoing."""
        base = {"classifier": self.kind}
        if self.kind == "gaussian":
            base.update(variant=self.variant, ridge=self.ridge)
        elif self.kind == "knn":
            base.update(k=self.k, metric=self.metric)
        else:
            base.update(
                kernel=self.kernel, solver=self.solver, C=self.C, tol=self.tol,
                degree=self.degree, gamma=self.gamma,
            )
        return base

    def fit(self, train: Dataset):
        return fit_classifier(self, train)

    def predict(self, fitted, x):
        return predict_classifier(fitted, x)


def fit_classifier(spec: ClassifierSpec, train: Dataset):
    """Fit per the spec; returns an opaque fitted model for predict_classifier."""
    if spec.kind == "gaussian":
        return fit_gaussian(train, spec.variant, spec.ridge)
    if spec.kind == "knn":
        return (train, KnnSpec(spec.k, spec.metric))
    return fit_svm(
        train,
        kernel=KernelSpec(spec.kernel, spec.degree, spec.gamma),
        solver=spec.solver,
        C=spec.C,
        tol=spec.tol,
    )


def predict_classifier(fitted, x):
    """Predict labels from whatever fit_classifier returned."""
    if isinstance(fitted, GaussianModel):
        return predict_gaussian(fitted, x)
    if isinstance(fitted, SvmModel):
        return predict_svm(fitted, x)
    train, spec = fitted
    return knn_predict(train, spec, x)
