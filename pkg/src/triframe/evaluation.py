"""Monte Carlo cross-validation, sweeps, and the frame-vs-whole comparison.

Every iteration draws its own substream from (seed, iteration index), so a
report is a pure function of (dataset, config, seed) and parallel or serial
execution order cannot change a single byte of it.
"""

from dataclasses import dataclass

import numpy as np

from .classifiers import ClassifierSpec
from .corpus import ExtractionSettings, extract_corpus
from .dataset import Dataset
from .selection import fit_pca, rank_features, transform_pca


class LengthMismatchError(ValueError):
    """Prediction and truth sequences differ in length."""


class EmptyError(ValueError):
    """Empty prediction sequence has no misclassification rate."""


class DegenerateSplitError(RuntimeError):
    """Could not draw a split with both classes on both sides."""


def misclassification_rate(predictions, truth) -> float:
    """Fraction of predictions that differ from the truth labels."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise LengthMismatchError(
            "%d predictions vs %d truths" % (predictions.size, truth.size)
        )
    if predictions.size == 0:
        raise EmptyError("no predictions")
    return float(np.mean(predictions != truth))


@dataclass(frozen=True)
class CvConfig:
    """Monte Carlo cross-validation settings."""

    iterations: int = 500
    test_fraction: float = 0.2
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class SelectorSpec:
    """Which feature view each training split is fitted on.

    fdr: top-k columns of the per-split FDR ranking. pca: first k principal
    components of the per-split PCA. explicit: a fixed column list (all
    columns when features is None).
    """

    mode: str = "explicit"
    k: int = None
    features: tuple = None

    def __post_init__(self):
        if self.mode not in ("fdr", "pca", "explicit"):
            raise ValueError("unknown selector mode %r" % (self.mode,))
        if self.mode in ("fdr", "pca") and (self.k is None or self.k < 1):
            raise ValueError("selector mode %r needs k >= 1" % (self.mode,))
        if self.features is not None:
            object.__setattr__(self, "features", tuple(self.features))

    def describe(self, n_features: int) -> str:
        if self.mode == "fdr":
            return "Top %d" % self.k
        if self.mode == "pca":
            if self.k >= n_features:
                return "All %d PC" % n_features
            return "PC 1-%d" % self.k if self.k > 1 else "PC 1"
        if self.features is None or len(self.features) == n_features:
            return "All %d" % n_features
        return ",".join(self.features)


#: Prefix sizes used by the default ranking and PCA sweeps.
DEFAULT_FDR_PREFIXES = (2, 6, 9, 19, 22, 24)
DEFAULT_PCA_PREFIXES = (5, 7, 9, 11, 13, 24)


def draw_split(labels, config: CvConfig, iteration: int):
    """Deterministic train/test row indices for one iteration.

    Stratified draws round(test_fraction * n_c) test rows per class (at
    least 1, leaving at least 2 training rows per class). Plain draws are
    redrawn up to 100 times until both classes appear on both sides.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng([config.seed, iteration])
    classes = np.unique(labels)
    if config.stratified:
        train_parts, test_parts = [], []
        for c in classes:
            rows = np.flatnonzero(labels == c)
            if rows.size < 3:
                raise DegenerateSplitError(
                    "class %r has %d rows; need >= 3 to split" % (c, rows.size)
                )
            n_test = int(round(config.test_fraction * rows.size))
            n_test = min(max(n_test, 1), rows.size - 2)
            perm = rng.permutation(rows)
            test_parts.append(perm[:n_test])
            train_parts.append(perm[n_test:])
        return (
            np.sort(np.concatenate(train_parts)),
            np.sort(np.concatenate(test_parts)),
        )
    n = labels.size
    n_test = min(max(int(round(config.test_fraction * n)), 1), n - 1)
    for _ in range(100):
        perm = rng.permutation(n)
        test = perm[:n_test]
        train = perm[n_test:]
        if (np.unique(labels[train]).size == classes.size
                and np.unique(labels[test]).size == classes.size):
            return np.sort(train), np.sort(test)
    raise DegenerateSplitError("no viable split after 100 draws")


def fit_selector(train: Dataset, selector: SelectorSpec):
    """Fit the feature view on training rows only.

    Returns (transformed training Dataset, transform(matrix) -> matrix,
    fitted-state summary). The summary is the chosen column names for
    fdr/explicit and the PCA loadings for pca; tests use it to verify that
    test rows cannot influence the fit.
    """
    if selector.mode == "pca":
        model = fit_pca(train.features)
        k = min(selector.k, model.n_components)
        names = tuple("PC%d" % (i + 1) for i in range(k))
        transformed = train.replace_features(
            transform_pca(model, train.features, k), names
        )
        return transformed, (lambda m: transform_pca(model, m, k)), model.loadings[:, :k]

    if selector.mode == "fdr":
        ranking = rank_features(train)
        names = ranking.names[: selector.k]
    else:
        names = selector.features or train.feature_names
    cols = np.array([train.feature_names.index(n) for n in names])
    transformed = train.replace_features(train.features[:, cols], names)
    return transformed, (lambda m: np.asarray(m)[:, cols]), tuple(names)


@dataclass(frozen=True)
class EvalReport:
    """One classifier x feature-set cell: per-iteration rates and summary."""

    classifier: dict
    feature_set: str
    rates: tuple
    mean_rate: float
    std_rate: float
    seed: int
    iterations: int
    test_fraction: float
    stratified: bool

    @classmethod
    def from_rates(cls, classifier, feature_set, rates, config: CvConfig):
        arr = np.asarray(rates, dtype=np.float64)
        return cls(
            classifier=dict(classifier),
            feature_set=feature_set,
            rates=tuple(float(r) for r in arr),
            mean_rate=float(arr.mean()),
            std_rate=float(arr.std()),
            seed=config.seed,
            iterations=config.iterations,
            test_fraction=config.test_fraction,
            stratified=config.stratified,
        )

    def to_dict(self) -> dict:
        return {
            "classifier": self.classifier,
            "feature_set": self.feature_set,
            "mean_mcr": self.mean_rate,
            "std_mcr": self.std_rate,
            "seed": self.seed,
            "iterations": self.iterations,
            "test_fraction": self.test_fraction,
            "stratified": self.stratified,
            "rates": list(self.rates),
        }


def monte_carlo_cv(
    data: Dataset,
    classifier: ClassifierSpec,
    selector: SelectorSpec = SelectorSpec(),
    config: CvConfig = CvConfig(),
) -> EvalReport:
    """Repeated random-split evaluation with per-split selector refits.

    Each iteration: stratified split, feature view fitted on the training
    rows alone, classifier trained, test misclassification recorded. The
    classifier is a ClassifierSpec or any object with the same
    describe/fit/predict surface.
    """
    rates = np.empty(config.iterations)
    for it in range(config.iterations):
        train_idx, test_idx = draw_split(data.labels, config, it)
        train = data.subset(train_idx)
        train_t, transform, _ = fit_selector(train, selector)
        fitted = classifier.fit(train_t)
        predictions = classifier.predict(fitted, transform(data.features[test_idx]))
        rates[it] = misclassification_rate(predictions, data.labels[test_idx])
    return EvalReport.from_rates(
        classifier.describe(), selector.describe(data.n_features), rates, config
    )


@dataclass(frozen=True)
class SweepCell:
    """One cell of a sweep; either a report or an error string."""

    classifier: dict
    feature_set: str
    report: EvalReport = None
    error: str = None

    @property
    def failed(self):
        return self.error is not None


def sweep(data, classifiers, selectors, config: CvConfig = CvConfig()):
    """Evaluate the classifier x feature-set cross product; never abort.

    Failed cells carry the error message and the sweep continues.
    """
    cells = []
    for clf in classifiers:
        for sel in selectors:
            try:
                report = monte_carlo_cv(data, clf, sel, config)
                cells.append(SweepCell(clf.describe(), sel.describe(data.n_features),
                                       report=report))
            except Exception as exc:  # keep sweeping; cell records the failure
                cells.append(SweepCell(clf.describe(), sel.describe(data.n_features),
                                       error="%s: %s" % (type(exc).__name__, exc)))
    return cells


def default_selectors(mode: str, n_features: int, prefixes=None):
    """The Table-shaped sweep columns: ranking or PC prefixes."""
    if mode == "fdr":
        sizes = prefixes or DEFAULT_FDR_PREFIXES
        return [SelectorSpec("fdr", k=min(k, n_features)) for k in sizes]
    if mode == "pca":
        sizes = prefixes or DEFAULT_PCA_PREFIXES
        return [SelectorSpec("pca", k=min(k, n_features)) for k in sizes]
    return [SelectorSpec("explicit")]


@dataclass(frozen=True)
class ComparisonReport:
    """Paired frame-based vs whole-signal evaluation on shared splits."""

    frame: EvalReport
    baseline: EvalReport
    accuracy_delta_points: float  # positive when the frame pipeline wins

    def to_dict(self) -> dict:
        return {
            "frame": self.frame.to_dict(),
            "baseline": self.baseline.to_dict(),
            "accuracy_delta_points": self.accuracy_delta_points,
        }


def compare_datasets(
    frame_data: Dataset,
    baseline_data: Dataset,
    classifier: ClassifierSpec,
    config: CvConfig = CvConfig(),
    frame_selector: SelectorSpec = SelectorSpec(),
    baseline_selector: SelectorSpec = SelectorSpec(),
) -> ComparisonReport:
    """Run the same CV protocol on paired feature tables.

    Both datasets must list the same clips in the same order; the split
    sequence depends only on (labels, config), so the two runs see
    identical train/test partitions.
    """
    if frame_data.n_rows != baseline_data.n_rows or not np.array_equal(
        frame_data.labels, baseline_data.labels
    ):
        raise LengthMismatchError("paired datasets must share rows and labels")
    frame_report = monte_carlo_cv(frame_data, classifier, frame_selector, config)
    baseline_report = monte_carlo_cv(baseline_data, classifier, baseline_selector, config)
    delta = 100.0 * (baseline_report.mean_rate - frame_report.mean_rate)
    return ComparisonReport(frame_report, baseline_report, delta)


def compare_frame_vs_baseline(
    entries,
    classifier: ClassifierSpec,
    config: CvConfig = CvConfig(),
    settings: ExtractionSettings = ExtractionSettings(),
    on_error: str = "raise",
) -> ComparisonReport:
    """Extract both feature views from a WAV manifest and compare them."""
    extracted = extract_corpus(entries, settings, on_error=on_error)
    return compare_datasets(
        extracted.frame_dataset(), extracted.baseline_dataset(), classifier, config
    )
