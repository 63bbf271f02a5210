"""Command-line front end: extract, rank, pca, evaluate, compare.

One flat JSON run-config file drives every command; CLI flags override
config keys. Every output embeds the tool version, the seed and a hash of
the effective config, and contains nothing non-deterministic, so a repeated
run with the same config is byte-identical.
"""

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, fields, replace

from . import __version__
from .classifiers import ClassifierSpec
from .corpus import ExtractionSettings, extract_corpus
from .dataset import Dataset, format_value, load_feature_cache, save_feature_cache
from .evaluation import CvConfig, SelectorSpec, compare_datasets, default_selectors, sweep
from .selection import fit_pca, rank_features


class ManifestError(ValueError):
    """Base class for corpus manifest problems."""


class MissingHeaderError(ManifestError):
    """Manifest must start with a path,label header row."""


class DuplicatePathError(ManifestError):
    """Each clip may appear once."""


class NotTwoClassesError(ManifestError):
    """Manifests must label exactly two classes."""


class EmptyManifestError(ManifestError):
    """Manifest has a header but no rows."""


@dataclass(frozen=True)
class Manifest:
    """Validated (path, label) rows with exactly two label values."""

    entries: tuple

    @property
    def paths(self):
        return tuple(p for p, _ in self.entries)

    @property
    def labels(self):
        return tuple(l for _, l in self.entries)


def parse_manifest(text: str) -> Manifest:
    """Parse `path,label` CSV text into a validated Manifest."""
    rows = [r for r in csv.reader(text.splitlines()) if r]
    if not rows or [c.strip() for c in rows[0]] != ["path", "label"]:
        raise MissingHeaderError("manifest must start with a path,label header")
    entries = []
    seen = set()
    for rec in rows[1:]:
        if len(rec) < 2:
            raise ManifestError("manifest row %r lacks a label" % (rec,))
        path, label = rec[0].strip(), rec[1].strip()
        if path in seen:
            raise DuplicatePathError("duplicate path %r" % path)
        seen.add(path)
        entries.append((path, label))
    if not entries:
        raise EmptyManifestError("manifest holds no rows")
    if len({label for _, label in entries}) != 2:
        raise NotTwoClassesError("manifest must label exactly two classes")
    return Manifest(tuple(entries))


# The Table-5-shaped default roster: the discriminant family plus the three
# headline SVM kernels.
DEFAULT_CLASSIFIERS = (
    {"classifier": "gaussian", "variant": "linear"},
    {"classifier": "gaussian", "variant": "diaglinear"},
    {"classifier": "gaussian", "variant": "quadratic"},
    {"classifier": "gaussian", "variant": "diagquadratic"},
    {"classifier": "gaussian", "variant": "mahalanobis"},
    {"classifier": "svm", "kernel": "linear"},
    {"classifier": "svm", "kernel": "quadratic"},
    {"classifier": "svm", "kernel": "rbf"},
)


@dataclass(frozen=True)
class RunConfig:
    """Flat, typed run configuration; unknown keys are rejected."""

    manifest: str = None
    cache: str = None
    out: str = None
    opening_fraction: float = 0.05
    closing_fraction: float = 0.05
    psd_segment_length: int = 1024
    psd_overlap: float = 0.5
    selector: str = "fdr"
    k_values: tuple = None
    explicit_features: tuple = None
    classifiers: tuple = DEFAULT_CLASSIFIERS
    iterations: int = 500
    test_fraction: float = 0.2
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.selector not in ("fdr", "pca", "explicit"):
            raise ValueError("selector must be fdr, pca or explicit")
        for name in ("k_values", "explicit_features", "classifiers"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(
                    dict(v) if isinstance(v, dict) else v for v in value
                ))
        CvConfig(self.iterations, self.test_fraction, self.stratified, self.seed)

    def extraction_settings(self) -> ExtractionSettings:
        return ExtractionSettings(
            self.opening_fraction, self.closing_fraction,
            self.psd_segment_length, self.psd_overlap,
        )

    def cv_config(self) -> CvConfig:
        return CvConfig(self.iterations, self.test_fraction, self.stratified, self.seed)

    def classifier_specs(self):
        return [_classifier_spec(d) for d in self.classifiers]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classifiers"] = [dict(c) for c in self.classifiers]
        return d


def _classifier_spec(block: dict) -> ClassifierSpec:
    known = {f.name for f in fields(ClassifierSpec)}
    kwargs = {}
    for key, value in block.items():
        name = "kind" if key == "classifier" else key
        if name not in known:
            raise ValueError("unknown classifier config key %r" % key)
        kwargs[name] = value
    if "kind" not in kwargs:
        raise ValueError("classifier block needs a 'classifier' key")
    return ClassifierSpec(**kwargs)


def load_config(path) -> RunConfig:
    """Read a JSON run-config file, rejecting unknown keys."""
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("run config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    return RunConfig(**raw)


# Input/output locations are not part of the analysis identity: a run fed
# from a cache must hash identically to the same run fed from the manifest.
_NON_ANALYTIC_KEYS = ("manifest", "cache", "out")


def config_hash(cfg: RunConfig) -> str:
    doc = {k: v for k, v in cfg.to_dict().items() if k not in _NON_ANALYTIC_KEYS}
    canonical = json.dumps(doc, sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _meta(cfg: RunConfig) -> dict:
    return {"triframe": __version__, "seed": cfg.seed, "config": config_hash(cfg)}


def _echo_config(cfg: RunConfig):
    print("effective config (seed %d):" % cfg.seed)
    print(json.dumps(cfg.to_dict(), sort_keys=True, indent=2))


def _write_csv(path, meta, header, rows):
    with open(path, "w", newline="") as fh:
        for key, value in meta.items():
            fh.write("# %s: %s\n" % (key, value))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path, meta, payload):
    doc = dict(meta)
    doc.update(payload)
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_dataset(cfg: RunConfig):
    """Dataset from the cache if configured, else extracted from the manifest."""
    if cfg.cache:
        data, _, _ = load_feature_cache(cfg.cache)
        return data
    if cfg.manifest:
        manifest = _read_manifest(cfg.manifest)
        extracted = extract_corpus(
            manifest.entries, cfg.extraction_settings(),
            want_baseline=False, on_error="skip",
        )
        _report_failures(extracted.failures)
        return extracted.frame_dataset()
    raise ValueError("need a cache or manifest in the config")


def _read_manifest(path) -> Manifest:
    with open(path) as fh:
        return parse_manifest(fh.read())


def _report_failures(failures):
    for path, message in failures:
        print("skipped %s: %s" % (path, message), file=sys.stderr)
    if failures:
        print("skipped %d unreadable file(s)" % len(failures), file=sys.stderr)


def cmd_extract(cfg: RunConfig, baseline: bool) -> int:
    manifest = _read_manifest(cfg.manifest)
    extracted = extract_corpus(
        manifest.entries, cfg.extraction_settings(),
        want_frame=not baseline, want_baseline=baseline, on_error="skip",
    )
    _report_failures(extracted.failures)
    if not extracted.paths:
        raise ValueError("every file in the manifest failed to extract")
    data = extracted.baseline_dataset() if baseline else extracted.frame_dataset()
    out = cfg.out or ("baseline_cache.csv" if baseline else "feature_cache.csv")
    save_feature_cache(
        out, extracted.paths, extracted.labels, data.features,
        data.feature_names, _meta(cfg),
    )
    print("wrote %s (%d rows x %d features)" % (out, data.n_rows, data.n_features))
    return 0


def cmd_rank(cfg: RunConfig) -> int:
    data = _load_dataset(cfg)
    ranking = rank_features(data)
    out = cfg.out or "ranking.csv"
    _write_csv(
        out, _meta(cfg), ["rank", "feature_name", "fdr"],
        [
            [i + 1, name, format_value(score)]
            for i, (name, score) in enumerate(ranking)
        ],
    )
    print("wrote %s" % out)
    return 0


def cmd_pca(cfg: RunConfig) -> int:
    data = _load_dataset(cfg)
    model = fit_pca(data)
    out = cfg.out or "pca.csv"
    _write_csv(
        out, _meta(cfg),
        ["component", "eigenvalue", "variance_explained_pct", "cumulative_pct"],
        [
            [i + 1, format_value(model.eigenvalues[i]),
             format_value(model.variance_pct[i]),
             format_value(model.cumulative_pct[i])]
            for i in range(model.n_components)
        ],
    )
    loadings_out = out + ".loadings.csv"
    _write_csv(
        loadings_out, _meta(cfg),
        ["feature"] + ["PC%d" % (i + 1) for i in range(model.n_components)],
        [
            [name] + [format_value(v) for v in model.loadings[j]]
            for j, name in enumerate(data.feature_names)
        ],
    )
    print("wrote %s and %s" % (out, loadings_out))
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    data = _load_dataset(cfg)
    if cfg.selector == "explicit" and cfg.explicit_features:
        selectors = [SelectorSpec("explicit", features=cfg.explicit_features)]
    else:
        selectors = default_selectors(cfg.selector, data.n_features, cfg.k_values)
    cells = sweep(data, cfg.classifier_specs(), selectors, cfg.cv_config())
    out = cfg.out or "evaluation.csv"
    rows = []
    for cell in cells:
        rows.append([
            cell.classifier.get("classifier"),
            cell.classifier.get("variant") or cell.classifier.get("kernel")
            or cell.classifier.get("metric") or "",
            cell.feature_set,
            "" if cell.failed else format_value(cell.report.mean_rate),
            "" if cell.failed else format_value(cell.report.std_rate),
            cell.error or "",
        ])
    _write_csv(
        out, _meta(cfg),
        ["classifier", "variant", "feature_set", "mean_mcr", "std_mcr", "error"],
        rows,
    )
    analytic_cfg = {
        k: v for k, v in cfg.to_dict().items() if k not in _NON_ANALYTIC_KEYS
    }
    _write_json(out + ".json", _meta(cfg), {
        "config": analytic_cfg,
        "cells": [
            {
                "classifier": cell.classifier,
                "feature_set": cell.feature_set,
                "error": cell.error,
                "report": None if cell.failed else cell.report.to_dict(),
            }
            for cell in cells
        ],
    })
    failed = sum(1 for c in cells if c.failed)
    print("wrote %s (%d cells, %d failed)" % (out, len(cells), failed))
    return 1 if failed else 0


def cmd_compare(cfg: RunConfig) -> int:
    manifest = _read_manifest(cfg.manifest)
    extracted = extract_corpus(
        manifest.entries, cfg.extraction_settings(), on_error="skip"
    )
    _report_failures(extracted.failures)
    if not extracted.paths:
        raise ValueError("every file in the manifest failed to extract")
    classifier = cfg.classifier_specs()[0]
    report = compare_datasets(
        extracted.frame_dataset(), extracted.baseline_dataset(),
        classifier, cfg.cv_config(),
    )
    out = cfg.out or "comparison.json"
    _write_json(out, _meta(cfg), report.to_dict())
    print(
        "wrote %s (frame %.4f vs baseline %.4f, delta %+.2f points)"
        % (out, report.frame.mean_rate, report.baseline.mean_rate,
           report.accuracy_delta_points)
    )
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="triframe",
        description="Trapezoidal three-frame song statistics and classifier bench.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("extract", "decode WAVs from a manifest and write the feature cache"),
        ("rank", "write the FDR ranking table"),
        ("pca", "write eigenvalue/variance-explained tables and loadings"),
        ("evaluate", "Monte Carlo CV sweep over classifiers and feature sets"),
        ("compare", "paired frame-based vs whole-signal evaluation"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="JSON run-config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--frames", help="override fractions, e.g. 0.05,0.05")
        p.add_argument("--out", help="override the output path")
        p.add_argument("--manifest", help="override the manifest path")
        p.add_argument("--cache", help="override the feature cache path")
        if name == "extract":
            p.add_argument("--baseline", action="store_true",
                           help="extract whole-signal features instead")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    for key in ("seed", "out", "manifest", "cache"):
        value = getattr(args, key)
        if value is not None:
            updates[key] = value
    if args.frames:
        parts = args.frames.split(",")
        if len(parts) != 2:
            raise ValueError("--frames expects two comma-separated decimals")
        updates["opening_fraction"] = float(parts[0])
        updates["closing_fraction"] = float(parts[1])
    return replace(cfg, **updates) if updates else cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = _apply_overrides(cfg, args)
        _echo_config(cfg)
        if args.command == "extract":
            return cmd_extract(cfg, args.baseline)
        if args.command == "rank":
            return cmd_rank(cfg)
        if args.command == "pca":
            return cmd_pca(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg)
        return cmd_compare(cfg)
    except Exception as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
