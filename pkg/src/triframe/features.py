"""Per-frame statistical features and the assembled feature vectors.

Eight statistics per segment: mean, variance, skewness, kurtosis,
hyper-skewness (5th standardized moment), hyper-flatness (6th), Fano factor
(variance over signed mean) and a scalar Welch power spectral density.
Computed on each of the three frames they give the 24-entry vector; computed
on the whole signal they give the 8-entry baseline.
"""

from dataclasses import dataclass

import numpy as np

from .audio_io import FrameTriple, MonoSignal


class DegenerateFrameError(ValueError):
    """Zero-variance samples: standardized moments of order >= 3 undefined."""


STAT_NAMES = (
    "Mean",
    "Variance",
    "Skewness",
    "Kurtosis",
    "Hyper-skewness",
    "Hyper-flatness",
    "Fano-Factor",
    "PSD",
)

FRAME_SUFFIXES = ("I", "II", "III")

#: The 24 frame-feature names, statistic-major: Mean-I, Mean-II, Mean-III,
#: Variance-I, ... PSD-III.
FEATURE_NAMES = tuple(
    "%s-%s" % (stat, suffix) for stat in STAT_NAMES for suffix in FRAME_SUFFIXES
)

#: Whole-signal baseline columns: the bare statistic names.
BASELINE_NAMES = STAT_NAMES

# Signed means closer to zero than this are clamped before dividing, so the
# Fano factor stays finite on zero-mean audio.
FANO_MEAN_EPS = 1e-12

DEFAULT_PSD_SEGMENT = 1024
DEFAULT_PSD_OVERLAP = 0.5

# Shortest frame on which 6th-moment estimates are accepted.
MIN_FRAME_SAMPLES = 8


def standardized_moment(samples, k: int) -> float:
    """k-th population moment: mean (k=1), variance (k=2), m_k / sigma^k (k>=3).

    Central moments use the two-pass form (subtract the mean, then average
    centered powers) so large frames don't lose precision to cancellation.
    Raises DegenerateFrameError when sigma = 0 and k >= 3.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    if k < 1:
        raise ValueError("moment order must be >= 1")
    mean = x.mean()
    if k == 1:
        return float(mean)
    # sigma = 0 means "all samples equal", checked exactly: the fp mean of a
    # constant frame is off by rounding, so the naive m2 == 0 test misses it
    constant = x.min() == x.max()
    if k == 2:
        return 0.0 if constant else float(np.mean((x - mean) ** 2))
    if constant:
        raise DegenerateFrameError("zero variance, order-%d moment undefined" % k)
    d = x - mean
    m2 = np.mean(d * d)
    mk = np.mean(d**k)
    return float(mk / m2 ** (k / 2.0))


def fano_factor(samples) -> float:
    """Population variance divided by the signed sample mean.

    Means within FANO_MEAN_EPS of zero are replaced by +/-FANO_MEAN_EPS
    (zero counts as positive) so the ratio stays finite; the result is
    negative whenever the mean is.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    mean = x.mean()
    var = np.mean((x - mean) ** 2)
    if abs(mean) < FANO_MEAN_EPS:
        mean = FANO_MEAN_EPS if mean >= 0.0 else -FANO_MEAN_EPS
    return float(var / mean)


def welch_psd(samples, sample_rate, segment_length=None, overlap=DEFAULT_PSD_OVERLAP):
    """One-sided Welch periodogram (Hann window, density scaling).

    Returns (freqs, psd) with psd in power per Hz. Segments of
    min(segment_length, N) samples overlap by the given fraction; a trailing
    remainder shorter than one step is dropped.
    """
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    if segment_length is None:
        segment_length = DEFAULT_PSD_SEGMENT
    nper = int(min(segment_length, n))
    if nper < 2:
        raise ValueError("segment length must be >= 2")
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap fraction must lie in [0, 1)")
    noverlap = int(nper * overlap)
    step = nper - noverlap

    k = np.arange(nper)
    win = 0.5 - 0.5 * np.cos(2.0 * np.pi * k / nper)  # periodic Hann
    scale = 1.0 / (sample_rate * np.sum(win * win))

    nseg = (n - noverlap) // step
    starts = np.arange(nseg) * step
    segs = x[starts[:, None] + k[None, :]] * win
    spec = np.fft.rfft(segs, axis=1)
    psd = (spec.real**2 + spec.imag**2).mean(axis=0) * scale
    if nper % 2 == 0:
        psd[1:-1] *= 2.0  # fold negative frequencies; DC and Nyquist stay
    else:
        psd[1:] *= 2.0
    freqs = np.fft.rfftfreq(nper, 1.0 / sample_rate)
    return freqs, psd


def power_spectral_density(
    samples, sample_rate, segment_length=None, overlap=DEFAULT_PSD_OVERLAP
) -> float:
    """Scalar spectral feature: arithmetic mean of the Welch PSD bins."""
    _, psd = welch_psd(samples, sample_rate, segment_length, overlap)
    return float(psd.mean())


@dataclass(frozen=True)
class FrameFeatures:
    """The eight statistics of one frame, in STAT_NAMES order."""

    mean: float
    variance: float
    skewness: float
    kurtosis: float
    hyper_skewness: float
    hyper_flatness: float
    fano_factor: float
    psd: float

    def as_array(self):
        return np.array(
            [
                self.mean,
                self.variance,
                self.skewness,
                self.kurtosis,
                self.hyper_skewness,
                self.hyper_flatness,
                self.fano_factor,
                self.psd,
            ]
        )


@dataclass(frozen=True)
class FeatureVector:
    """24 frame-based feature values in FEATURE_NAMES order."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", arr)
        if arr.shape != (len(FEATURE_NAMES),):
            raise ValueError("expected %d values" % len(FEATURE_NAMES))

    names = FEATURE_NAMES


@dataclass(frozen=True)
class BaselineVector:
    """8 whole-signal feature values in BASELINE_NAMES order."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", arr)
        if arr.shape != (len(BASELINE_NAMES),):
            raise ValueError("expected %d values" % len(BASELINE_NAMES))

    names = BASELINE_NAMES


def extract_frame_features(
    frame: MonoSignal,
    segment_length=None,
    overlap=DEFAULT_PSD_OVERLAP,
    min_samples=MIN_FRAME_SAMPLES,
) -> FrameFeatures:
    """Compute the eight statistics on one frame's raw amplitudes."""
    x = frame.samples
    if x.size < min_samples:
        raise ValueError("frame of %d samples is below the %d-sample minimum"
                         % (x.size, min_samples))
    return FrameFeatures(
        mean=standardized_moment(x, 1),
        variance=standardized_moment(x, 2),
        skewness=standardized_moment(x, 3),
        kurtosis=standardized_moment(x, 4),
        hyper_skewness=standardized_moment(x, 5),
        hyper_flatness=standardized_moment(x, 6),
        fano_factor=fano_factor(x),
        psd=power_spectral_density(x, frame.sample_rate, segment_length, overlap),
    )


def extract_feature_vector(
    frames: FrameTriple, segment_length=None, overlap=DEFAULT_PSD_OVERLAP
) -> FeatureVector:
    """Assemble the 24-entry vector from a FrameTriple, statistic-major."""
    per_frame = []
    for label, frame in zip(FRAME_SUFFIXES, frames):
        try:
            per_frame.append(extract_frame_features(frame, segment_length, overlap))
        except (DegenerateFrameError, ValueError) as exc:
            raise type(exc)("frame %s: %s" % (label, exc)) from exc
    block = np.stack([f.as_array() for f in per_frame])  # (3 frames, 8 stats)
    return FeatureVector(block.T.reshape(-1))


def extract_baseline_features(
    signal: MonoSignal, segment_length=None, overlap=DEFAULT_PSD_OVERLAP
) -> BaselineVector:
    """The same eight statistics computed on the entire signal at once."""
    feats = extract_frame_features(signal, segment_length, overlap)
    return BaselineVector(feats.as_array())
