"""Corpus-level feature extraction: WAV files in, feature matrices out."""

from dataclasses import dataclass

import numpy as np

from . import audio_io, features
from .dataset import Dataset


@dataclass(frozen=True)
class ExtractionSettings:
    """Frame fractions and PSD estimator parameters for a whole run."""

    opening_fraction: float = 0.05
    closing_fraction: float = 0.05
    psd_segment_length: int = features.DEFAULT_PSD_SEGMENT
    psd_overlap: float = features.DEFAULT_PSD_OVERLAP


def extract_clip(path, settings: ExtractionSettings = ExtractionSettings(),
                 want_frame=True, want_baseline=True):
    """Decode one WAV file and compute its feature vectors.

    Returns (frame_values or None, baseline_values or None).
    """
    signal = audio_io.mixdown(audio_io.load_wav(path))
    frame_vals = None
    baseline_vals = None
    if want_frame:
        triple = audio_io.split_frames(
            signal, settings.opening_fraction, settings.closing_fraction
        )
        frame_vals = features.extract_feature_vector(
            triple, settings.psd_segment_length, settings.psd_overlap
        ).values
    if want_baseline:
        baseline_vals = features.extract_baseline_features(
            signal, settings.psd_segment_length, settings.psd_overlap
        ).values
    return frame_vals, baseline_vals


@dataclass(frozen=True)
class CorpusFeatures:
    """Extraction result for a manifest: matrices plus per-file failures."""

    paths: tuple
    labels: tuple
    frame_matrix: np.ndarray  # (n, 24) or None
    baseline_matrix: np.ndarray  # (n, 8) or None
    failures: tuple  # (path, error message) pairs

    def frame_dataset(self) -> Dataset:
        return Dataset(self.frame_matrix, np.array(self.labels), features.FEATURE_NAMES)

    def baseline_dataset(self) -> Dataset:
        return Dataset(
            self.baseline_matrix, np.array(self.labels), features.BASELINE_NAMES
        )


def extract_corpus(entries, settings: ExtractionSettings = ExtractionSettings(),
                   want_frame=True, want_baseline=True,
                   on_error="raise") -> CorpusFeatures:
    """Extract features for (path, label) entries.

    on_error: "raise" re-raises the first per-file failure with the path
    attached; "skip" drops the file and records it in failures.
    """
    if on_error not in ("raise", "skip"):
        raise ValueError("on_error must be 'raise' or 'skip'")
    paths, labels, frame_rows, baseline_rows, failures = [], [], [], [], []
    for path, label in entries:
        try:
            frame_vals, baseline_vals = extract_clip(
                path, settings, want_frame, want_baseline
            )
        except (audio_io.WavError, audio_io.TooShortError,
                features.DegenerateFrameError, ValueError, OSError) as exc:
            if on_error == "raise":
                raise type(exc)("%s: %s" % (path, exc)) from exc
            failures.append((str(path), str(exc)))
            continue
        paths.append(str(path))
        labels.append(label)
        if want_frame:
            frame_rows.append(frame_vals)
        if want_baseline:
            baseline_rows.append(baseline_vals)
    return CorpusFeatures(
        paths=tuple(paths),
        labels=tuple(labels),
        frame_matrix=np.array(frame_rows) if want_frame else None,
        baseline_matrix=np.array(baseline_rows) if want_baseline else None,
        failures=tuple(failures),
    )
