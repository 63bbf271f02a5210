"""Shared fixtures and synthetic-corpus builders."""

import numpy as np
import pytest

from triframe.audio_io import AudioClip, save_wav


def assert_rel_close(actual, expected, rtol=1e-9, atol=1e-12, label=""):
    """|actual - expected| <= atol + rtol * |expected|, with a readable message."""
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    err = np.abs(actual - expected)
    bound = atol + rtol * np.abs(expected)
    assert np.all(err <= bound), (
        "%s: |%r - %r| = %r exceeds %r" % (label, actual, expected, err, bound)
    )


def _noise_clip(rng, n_samples, opening_std, body_std, dc=0.1):
    """White-noise clip with its first 5% at opening_std, the rest at body_std."""
    x = rng.normal(dc, body_std, n_samples)
    n1 = int(np.floor(0.05 * n_samples))
    x[:n1] = rng.normal(dc, opening_std, n1)
    return np.clip(x, -1.0, 1.0)


def make_wav_corpus(directory, kind, n_per_class, seed=0, n_samples=8000, rate=8000):
    """Write a labeled two-class WAV corpus; returns [(path, label)] entries.

    kind "opening": the classes differ only inside the first 5% (quiet vs
    loud opening); the body/closing level is a per-clip nuisance drawn from
    the same distribution for both classes. kind "uniform": the classes
    differ in level throughout the clip. kind "plain": both classes share
    one distribution (pure noise labels).
    """
    rng = np.random.default_rng(seed)
    entries = []
    for label, opening_std in (("calm", 0.05), ("fierce", 0.35)):
        for i in range(n_per_class):
            if kind == "opening":
                body = rng.uniform(0.15, 0.30)
                x = _noise_clip(rng, n_samples, opening_std, body)
            elif kind == "uniform":
                level = 0.12 if label == "calm" else 0.22
                x = np.clip(rng.normal(0.1, level, n_samples), -1.0, 1.0)
            elif kind == "plain":
                x = np.clip(rng.normal(0.1, 0.2, n_samples), -1.0, 1.0)
            else:
                raise ValueError(kind)
            path = directory / ("%s_%03d.wav" % (label, i))
            save_wav(path, AudioClip(rate, x[None, :]))
            entries.append((str(path), label))
    return entries


def write_manifest(path, entries):
    with open(path, "w") as fh:
        fh.write("path,label\n")
        for clip_path, label in entries:
            fh.write("%s,%s\n" % (clip_path, label))
    return str(path)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
