"""WAV decoding/encoding, mono mixdown, and trapezoidal frame splitting.

A song's amplitude envelope rises, sustains, and decays; the three analysis
frames (opening / stanzas / closing) carve the sample stream at fixed
fractions of its length, 5% / 90% / 5% by default.
"""

import math
import struct
from dataclasses import dataclass

import numpy as np


class WavError(ValueError):
    """Base class for WAV container problems."""


class NotRiffError(WavError):
    """Stream is not a RIFF/WAVE container."""


class UnsupportedEncodingError(WavError):
    """Format tag or bit depth outside PCM 8/16/24/32 int and 32-bit float."""


class TruncatedDataError(WavError):
    """A chunk body is shorter than its declared size."""


class EmptyDataError(WavError):
    """The data chunk holds zero samples."""


class TooShortError(ValueError):
    """Signal too short for the requested frame fractions."""


class BadFractionsError(ValueError):
    """Frame fractions must be positive and sum to less than 1."""


@dataclass(frozen=True)
class AudioClip:
    """Decoded PCM audio: float64 samples in [-1, 1], one row per channel."""

    sample_rate: int
    samples: np.ndarray  # shape (channels, n_samples)

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        object.__setattr__(self, "samples", arr)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("samples must be a non-empty (channels, n) array")
        if not np.isfinite(arr).all():
            raise ValueError("samples must be finite")
        if np.abs(arr).max() > 1.0:
            raise ValueError("samples must lie in [-1, 1]")

    @property
    def channels(self):
        return self.samples.shape[0]

    @property
    def n_samples(self):
        return self.samples.shape[1]


@dataclass(frozen=True)
class MonoSignal:
    """Single-channel signal with its sample rate."""

    sample_rate: int
    samples: np.ndarray  # shape (n,)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", arr)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("samples must be a non-empty 1-D array")

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class FrameTriple:
    """The opening/stanzas/closing segments of one signal, in order."""

    opening: MonoSignal
    stanzas: MonoSignal
    closing: MonoSignal

    def __iter__(self):
        return iter((self.opening, self.stanzas, self.closing))


# wFormatTag values we accept
_TAG_PCM = 0x0001
_TAG_FLOAT = 0x0003
_TAG_EXTENSIBLE = 0xFFFE


def _iter_chunks(buf):
    """Yield (chunk_id, body_bytes, declared_size) for every top-level chunk."""
    pos = 12
    n = len(buf)
    while pos + 8 <= n:
        cid = buf[pos : pos + 4]
        (size,) = struct.unpack_from("<I", buf, pos + 4)
        body = buf[pos + 8 : pos + 8 + size]
        yield cid, body, size
        pos += 8 + size + (size & 1)  # chunks are word-aligned


def decode_wav(stream) -> AudioClip:
    """Decode a RIFF/WAVE byte stream into an AudioClip.

    Accepts bytes or a binary file-like object. Integer PCM (8/16/24/32 bit)
    is scaled by 2^(bits-1) (8-bit is unsigned and recentred first); 32-bit
    float data is clamped to [-1, 1].

    Raises NotRiffError, UnsupportedEncodingError, TruncatedDataError or
    EmptyDataError on malformed input.
    """
    buf = stream.read() if hasattr(stream, "read") else bytes(stream)
    if len(buf) < 12 or buf[:4] != b"RIFF" or buf[8:12] != b"WAVE":
        raise NotRiffError("not a RIFF/WAVE stream")

    fmt = None
    data = None
    for cid, body, size in _iter_chunks(buf):
        if cid == b"fmt " and fmt is None:
            if len(body) < 16:
                raise TruncatedDataError("fmt chunk shorter than declared")
            fmt = body
        elif cid == b"data" and data is None:
            if len(body) < size:
                raise TruncatedDataError(
                    "data chunk holds %d of %d declared bytes" % (len(body), size)
                )
            data = body

    if fmt is None:
        raise UnsupportedEncodingError("missing fmt chunk")
    if data is None:
        raise EmptyDataError("missing data chunk")

    tag, channels, rate, _byte_rate, _block, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if tag == _TAG_EXTENSIBLE:
        if len(fmt) < 26:
            raise UnsupportedEncodingError("extensible fmt chunk too short")
        (tag,) = struct.unpack_from("<H", fmt, 24)  # first 2 bytes of SubFormat GUID
    if channels < 1 or rate < 1:
        raise UnsupportedEncodingError("bad channel count or sample rate")

    if tag == _TAG_PCM and bits in (8, 16, 24, 32):
        flat = _decode_pcm(data, bits)
    elif tag == _TAG_FLOAT and bits == 32:
        flat = np.clip(np.frombuffer(data, dtype="<f4").astype(np.float64), -1.0, 1.0)
    else:
        raise UnsupportedEncodingError("format tag 0x%04x / %d bits" % (tag, bits))

    frames = flat.size // channels
    if frames == 0:
        raise EmptyDataError("data chunk holds zero samples")
    planar = flat[: frames * channels].reshape(frames, channels).T
    return AudioClip(sample_rate=int(rate), samples=planar)


def _decode_pcm(data, bits):
    """Interleaved integer PCM bytes -> float64 in [-1, 1]."""
    if bits == 8:
        x = np.frombuffer(data, dtype=np.uint8).astype(np.float64)
        return (x - 128.0) / 128.0
    if bits == 16:
        return np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    if bits == 24:
        raw = np.frombuffer(data[: (len(data) // 3) * 3], dtype=np.uint8)
        b = raw.reshape(-1, 3).astype(np.int32)
        u = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        signed = (u ^ 0x800000) - 0x800000
        return signed.astype(np.float64) / 8388608.0
    # bits == 32
    return np.frombuffer(data, dtype="<i4").astype(np.float64) / 2147483648.0


_ENCODE_FORMATS = ("pcm8", "pcm16", "pcm24", "pcm32", "float32")


def encode_wav(clip: AudioClip, fmt: str = "pcm16") -> bytes:
    """Serialize a clip to a canonical little-endian WAV byte string.

    fmt is one of pcm8/pcm16/pcm24/pcm32/float32. Integer formats quantize
    by the same 2^(bits-1) scale used when decoding, so decode -> encode of
    integer PCM reproduces the data chunk bit for bit.
    """
    if fmt not in _ENCODE_FORMATS:
        raise ValueError("unknown format %r" % (fmt,))
    interleaved = clip.samples.T.reshape(-1)

    if fmt == "float32":
        tag, bits = _TAG_FLOAT, 32
        payload = interleaved.astype("<f4").tobytes()
    else:
        bits = int(fmt[3:])
        tag = _TAG_PCM
        scale = float(1 << (bits - 1))
        q = np.clip(np.round(interleaved * scale), -scale, scale - 1).astype(np.int64)
        if bits == 8:
            payload = (q + 128).astype(np.uint8).tobytes()
        elif bits == 16:
            payload = q.astype("<i2").tobytes()
        elif bits == 32:
            payload = q.astype("<i4").tobytes()
        else:  # 24-bit: low three bytes of each little-endian int32
            b32 = q.astype("<i4").view(np.uint8).reshape(-1, 4)
            payload = np.ascontiguousarray(b32[:, :3]).tobytes()

    block = clip.channels * bits // 8
    fmt_chunk = struct.pack(
        "<HHIIHH", tag, clip.channels, clip.sample_rate,
        clip.sample_rate * block, block, bits,
    )
    body = (
        b"WAVE"
        + b"fmt " + struct.pack("<I", len(fmt_chunk)) + fmt_chunk
        + b"data" + struct.pack("<I", len(payload)) + payload
        + (b"\x00" if len(payload) & 1 else b"")
    )
    return b"RIFF" + struct.pack("<I", len(body)) + body


def load_wav(path) -> AudioClip:
    """Read and decode a WAV file from disk."""
    with open(path, "rb") as fh:
        return decode_wav(fh)


def save_wav(path, clip: AudioClip, fmt: str = "pcm16"):
    """Encode a clip and write it to disk."""
    with open(path, "wb") as fh:
        fh.write(encode_wav(clip, fmt))


def mixdown(clip: AudioClip) -> MonoSignal:
    """Average the channels into one mono signal; mono input passes through."""
    if clip.channels == 1:
        return MonoSignal(clip.sample_rate, clip.samples[0])
    return MonoSignal(clip.sample_rate, clip.samples.mean(axis=0))


def split_frames(
    signal: MonoSignal,
    opening_fraction: float = 0.05,
    closing_fraction: float = 0.05,
) -> FrameTriple:
    """Split a signal into contiguous opening/stanzas/closing segments.

    The outer segments take floor(fraction * N) samples each; the stanzas
    segment absorbs the rounding remainder, so the three segments always
    concatenate back to the input exactly.
    """
    if not (opening_fraction > 0 and closing_fraction > 0
            and opening_fraction + closing_fraction < 1):
        raise BadFractionsError(
            "fractions must be positive and sum to < 1, got %r/%r"
            % (opening_fraction, closing_fraction)
        )
    n = len(signal)
    n1 = math.floor(opening_fraction * n)
    n3 = math.floor(closing_fraction * n)
    n2 = n - n1 - n3
    if n1 < 1 or n2 < 1 or n3 < 1:
        raise TooShortError(
            "length %d leaves an empty segment for fractions %g/%g"
            % (n, opening_fraction, closing_fraction)
        )
    rate = signal.sample_rate
    x = signal.samples
    return FrameTriple(
        opening=MonoSignal(rate, x[:n1]),
        stanzas=MonoSignal(rate, x[n1 : n1 + n2]),
        closing=MonoSignal(rate, x[n1 + n2 :]),
    )
