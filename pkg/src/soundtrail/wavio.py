"""WAV decoding, canonical resampling and 6-second segmentation.

The engine ingests demuxed audio tracks as RIFF/WAVE only (PCM16 or
float32); container demuxing is an external transcode step. Everything
downstream works on canonical mono 44100 Hz clips.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EmptyClip, MalformedRiff, UnsupportedEncoding

CANONICAL_RATE = 44100
SEGMENT_LEN_S = 6.0
#: tails shorter than this are merged into the previous segment
MIN_SEGMENT_S = 1.0

RESAMPLE_TAPS = 64
RESAMPLE_BETA = 8.6


@dataclass
class AudioClip:
    """Decoded mono sample buffer for one video's audio track."""

    video_id: str
    sample_rate: int
    samples: np.ndarray  # float64 amplitudes in [-1, 1]

    @property
    def duration_s(self):
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class SegmentRef:
    """Addresses one analysis segment: start_s == segment_index * 6.0."""

    video_id: str
    segment_index: int
    start_s: float
    len_s: float


def decode_wav(data, video_id=""):
    """Parse RIFF/WAVE bytes into an AudioClip (not yet resampled).

    Accepts PCM 16-bit (format code 1) and IEEE float 32-bit (code 3),
    1-2 channels, 8-192 kHz. Channels are averaged to mono; PCM is scaled
    by 1/32768 so -32768 maps to -1.0.
    """
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedRiff("not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if size < 16:
                raise MalformedRiff("fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            if len(body) < size:
                raise MalformedRiff("truncated data chunk")
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise MalformedRiff("missing fmt or data chunk")

    code, channels, rate, _byte_rate, _block_align, bits = fmt
    if code not in (1, 3):
        raise UnsupportedEncoding(f"format code {code} not supported")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels not supported")
    if not 8000 <= rate <= 192000:
        raise UnsupportedEncoding(f"sample rate {rate} outside 8-192 kHz")

    if code == 1:
        if bits != 16:
            raise UnsupportedEncoding(f"PCM {bits}-bit not supported")
        frame = 2 * channels
        usable = len(payload) - len(payload) % frame
        raw = np.frombuffer(payload[:usable], dtype="<i2").astype(np.float64)
        raw /= 32768.0
    else:
        if bits != 32:
            raise UnsupportedEncoding(f"float {bits}-bit not supported")
        frame = 4 * channels
        usable = len(payload) - len(payload) % frame
        raw = np.frombuffer(payload[:usable], dtype="<f4").astype(np.float64)

    if channels == 2:
        raw = raw.reshape(-1, 2).mean(axis=1)
    raw = np.clip(raw, -1.0, 1.0)
    return AudioClip(video_id=video_id, sample_rate=rate, samples=raw)


def encode_wav(clip, bits=16):
    """Serialize a clip back to mono RIFF/WAVE (PCM16 or float32)."""
    if bits == 16:
        q = np.clip(np.rint(clip.samples * 32768.0), -32768, 32767).astype("<i2")
        body = q.tobytes()
        fmt = struct.pack("<HHIIHH", 1, 1, clip.sample_rate, clip.sample_rate * 2, 2, 16)
    elif bits == 32:
        body = clip.samples.astype("<f4").tobytes()
        fmt = struct.pack("<HHIIHH", 3, 1, clip.sample_rate, clip.sample_rate * 4, 4, 32)
    else:
        raise ValueError("bits must be 16 or 32")
    chunks = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    chunks += b"data" + struct.pack("<I", len(body)) + body
    return b"RIFF" + struct.pack("<I", len(chunks)) + chunks


def resample_to_canonical(clip):
    """Resample to exactly 44100 Hz with a 64-tap Kaiser-windowed sinc.

    Identity (bit-exact) when the clip is already canonical. Output length
    is round(n * 44100 / rate).
    """
    if clip.sample_rate == CANONICAL_RATE:
        return clip
    table = _kernels.resample_table(
        clip.sample_rate, CANONICAL_RATE, taps=RESAMPLE_TAPS, beta=RESAMPLE_BETA
    )
    out = _kernels.resample_sinc(clip.samples, clip.sample_rate, CANONICAL_RATE, table)
    return AudioClip(video_id=clip.video_id, sample_rate=CANONICAL_RATE, samples=out)


def slice_segments(clip):
    """Cut a canonical clip into 6 s segments.

    All segments are 6.0 s except possibly the last; a tail shorter than
    1.0 s is merged into the previous segment (so the final segment may run
    up to just under 7 s). Raises EmptyClip below 1.0 s total.
    """
    duration = clip.duration_s
    if duration < MIN_SEGMENT_S:
        raise EmptyClip(f"clip {clip.video_id!r} shorter than {MIN_SEGMENT_S} s")
    n_full = int(duration // SEGMENT_LEN_S)
    tail = duration - n_full * SEGMENT_LEN_S
    bounds = [i * SEGMENT_LEN_S for i in range(n_full + 1)]
    if tail >= MIN_SEGMENT_S:
        bounds.append(duration)
    elif tail > 0:
        bounds[-1] = duration  # merge sub-second tail into previous segment
    return [
        SegmentRef(
            video_id=clip.video_id,
            segment_index=i,
            start_s=bounds[i],
            len_s=bounds[i + 1] - bounds[i],
        )
        for i in range(len(bounds) - 1)
    ]


def segment_samples(clip, seg):
    """Sample slice covered by a SegmentRef."""
    a = int(round(seg.start_s * clip.sample_rate))
    b = int(round((seg.start_s + seg.len_s) * clip.sample_rate))
    return clip.samples[a:min(b, len(clip.samples))]
