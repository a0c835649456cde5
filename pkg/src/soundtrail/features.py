"""Per-segment similarity features and per-clip onset envelopes.

Feature layout (version "FLAF1", never mixed across conventions):
  * 80 mel bands averaged down to 24 reduced bands (8 groups of 4 low
    bands, then 16 groups of 3);
  * SSD: 7 statistics per reduced band over time, stored statistic-major
    (mean, median, variance, skewness, kurtosis, min, max) = 168 values;
  * RP: per reduced band, magnitude of the band-envelope modulation
    spectrum sampled at 60 frequencies linearly spaced 0.17-10 Hz
    = 24 x 60 values.
"""

import json
import struct
from dataclasses import dataclass

import numpy as np

from . import dsp
from .errors import TooShort
from .wavio import segment_samples, slice_segments

FEATURE_VERSION = "FLAF1"
FEATURE_MAGIC = b"FLAF1"

REDUCED_BANDS = 24
#: contiguous mel-band groups: sizes sum to 80
BAND_GROUPS = tuple(
    (4 * i, 4 * i + 4) for i in range(8)
) + tuple(
    (32 + 3 * i, 32 + 3 * i + 3) for i in range(16)
)

SSD_STATS = ("mean", "median", "variance", "skewness", "kurtosis", "min", "max")
SSD_DIM = REDUCED_BANDS * len(SSD_STATS)

RP_BINS = 60
RP_MIN_HZ = 0.17
RP_MAX_HZ = 10.0
RP_FFT = 512
RP_DIM = REDUCED_BANDS * RP_BINS

# A 1.0 s segment (the shortest the slicer can emit) yields 42 frames
# without padding, so that is the floor for meaningful statistics.
MIN_FRAMES = 42

_filterbank_cache = None


def _filterbank():
    global _filterbank_cache
    if _filterbank_cache is None:
        _filterbank_cache = dsp.mel_filterbank()[0]
    return _filterbank_cache


@dataclass
class SegmentFeatures:
    segment: object  # SegmentRef
    ssd: np.ndarray  # (168,) statistic-major
    rp: np.ndarray  # (24, 60) non-negative modulation magnitudes
    feature_version: str = FEATURE_VERSION


@dataclass
class OnsetEnvelope:
    """Half-wave-rectified spectral flux, max-normalized to [0, 1]."""

    video_id: str
    values: np.ndarray
    rate: float = dsp.FRAME_RATE


def reduce_bands(mel_values):
    """Average 80 mel bands down to 24 per the fixed group table."""
    mel_values = np.asarray(mel_values, dtype=np.float64)
    if mel_values.shape[1] != dsp.MEL_BANDS:
        raise ValueError(f"expected {dsp.MEL_BANDS} mel bands, got {mel_values.shape[1]}")
    out = np.empty((mel_values.shape[0], REDUCED_BANDS))
    for i, (a, b) in enumerate(BAND_GROUPS):
        out[:, i] = mel_values[:, a:b].mean(axis=1)
    return out


def compute_ssd(bands):
    """7 statistics per band over time, flattened statistic-major.

    Variance is the n-1 sample variance; skewness and kurtosis are
    standardized central moments (kurtosis excess, normal -> 0), forced to
    0 for zero-variance bands.
    """
    bands = np.asarray(bands, dtype=np.float64)
    n = bands.shape[0]
    if n < MIN_FRAMES:
        raise TooShort(f"{n} frames < {MIN_FRAMES}")
    mean = bands.mean(axis=0)
    centered = bands - mean
    m2 = (centered ** 2).mean(axis=0)
    m3 = (centered ** 3).mean(axis=0)
    m4 = (centered ** 4).mean(axis=0)
    nonzero = m2 > 0
    skew = np.zeros_like(m2)
    kurt = np.zeros_like(m2)
    skew[nonzero] = m3[nonzero] / m2[nonzero] ** 1.5
    kurt[nonzero] = m4[nonzero] / m2[nonzero] ** 2 - 3.0
    stats = np.stack(
        [
            mean,
            np.median(bands, axis=0),
            bands.var(axis=0, ddof=1),
            skew,
            kurt,
            bands.min(axis=0),
            bands.max(axis=0),
        ]
    )
    return stats.reshape(-1)


def modulation_frequencies():
    return np.linspace(RP_MIN_HZ, RP_MAX_HZ, RP_BINS)


def compute_rp(bands, frame_rate=dsp.FRAME_RATE):
    """Modulation magnitudes per band at 60 bins over 0.17-10 Hz.

    Each band envelope is mean-removed, Hann-windowed, zero-padded to 512
    (or the next power of two for longer inputs) and Fourier transformed;
    target frequencies are sampled nearest-bin.
    """
    bands = np.asarray(bands, dtype=np.float64)
    n = bands.shape[0]
    if n < MIN_FRAMES:
        raise TooShort(f"{n} frames < {MIN_FRAMES}")
    n_fft = RP_FFT
    while n_fft < n:
        n_fft *= 2
    # symmetric window keeps the modulation magnitudes invariant under
    # time reversal of the envelope
    win = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / (n - 1))
    windowed = (bands - bands.mean(axis=0)).T * win
    spectrum = np.abs(np.fft.rfft(windowed, n=n_fft, axis=1))
    bins = np.rint(modulation_frequencies() * n_fft / frame_rate).astype(int)
    return spectrum[:, bins]


def band_envelopes(samples):
    """24-band dB envelope matrix for one segment (no-pad framing)."""
    mel_db = dsp.mel_spectrogram_db(samples, pad_to_cover=False, filterbank=_filterbank())
    return reduce_bands(mel_db)


def extract_segment_features(clip):
    """SSD + RP for every 6 s segment of a canonical clip."""
    out = []
    for seg in slice_segments(clip):
        bands = band_envelopes(segment_samples(clip, seg))
        out.append(
            SegmentFeatures(segment=seg, ssd=compute_ssd(bands), rp=compute_rp(bands))
        )
    return out


def onset_envelope(mel_db, video_id=""):
    """Positive spectral flux summed over bands; e[0] = 0; max-normalized."""
    mel_db = np.asarray(mel_db, dtype=np.float64)
    if mel_db.shape[0] < 2:
        raise TooShort("need at least 2 frames")
    flux = np.maximum(0.0, np.diff(mel_db, axis=0)).sum(axis=1)
    env = np.concatenate([[0.0], flux])
    peak = env.max()
    if peak > 0:
        env = env / peak
    return OnsetEnvelope(video_id=video_id, values=env)


def clip_onset_envelope(clip):
    """Whole-clip onset envelope (pad-to-cover framing)."""
    mel_db = dsp.mel_spectrogram_db(clip.samples, filterbank=_filterbank())
    return onset_envelope(mel_db, video_id=clip.video_id)


def write_feature_file(path, video_id, feats):
    """Feature file: magic, length-prefixed JSON manifest, float32 payload."""
    manifest = {
        "feature_version": FEATURE_VERSION,
        "video_id": video_id,
        "ssd_dim": SSD_DIM,
        "rp_bands": REDUCED_BANDS,
        "rp_bins": RP_BINS,
        "segments": [
            {
                "segment_index": f.segment.segment_index,
                "start_s": f.segment.start_s,
                "len_s": f.segment.len_s,
            }
            for f in feats
        ],
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for f in feats:
            fh.write(np.asarray(f.ssd, dtype="<f4").tobytes())
            fh.write(np.asarray(f.rp, dtype="<f4").reshape(-1).tobytes())


def read_feature_file(path):
    from .wavio import SegmentRef

    with open(path, "rb") as fh:
        if fh.read(len(FEATURE_MAGIC)) != FEATURE_MAGIC:
            raise ValueError(f"{path}: bad feature-file magic")
        (mlen,) = struct.unpack("<I", fh.read(4))
        manifest = json.loads(fh.read(mlen).decode("utf-8"))
        feats = []
        for entry in manifest["segments"]:
            ssd = np.frombuffer(fh.read(4 * SSD_DIM), dtype="<f4").astype(np.float64)
            rp = np.frombuffer(fh.read(4 * RP_DIM), dtype="<f4").astype(np.float64)
            seg = SegmentRef(
                video_id=manifest["video_id"],
                segment_index=entry["segment_index"],
                start_s=entry["start_s"],
                len_s=entry["len_s"],
            )
            feats.append(
                SegmentFeatures(segment=seg, ssd=ssd, rp=rp.reshape(REDUCED_BANDS, RP_BINS))
            )
    return manifest["video_id"], feats
