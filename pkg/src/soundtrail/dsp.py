"""STFT, mel filterbank, decibel scaling and the detector shape contract.

Two framing conventions, both fixed:
  * whole-clip analysis pads the tail so frame count = ceil(n / hop)
    (437588 samples -> 428 frames);
  * per-segment feature extraction uses only fully covered windows,
    frames = floor((n - window) / hop) + 1 (a full 6 s segment -> 257).
"""

from dataclasses import dataclass, field

import numpy as np

from .wavio import CANONICAL_RATE

FFT_WINDOW = 2048
HOP = 1024
MEL_BANDS = 80
DB_FLOOR_EPS = 1e-10
FRAME_RATE = CANONICAL_RATE / HOP  # ~43.066 frames/s


def hann_window(n=FFT_WINDOW):
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def frame_signal(samples, window=FFT_WINDOW, hop=HOP, pad_to_cover=True):
    """Stack analysis frames row-wise.

    pad_to_cover zero-pads the tail so every sample is covered and the
    frame count is exactly ceil(n / hop); otherwise only frames that fit
    entirely inside the signal are produced.
    """
    x = np.asarray(samples, dtype=np.float64)
    n = x.shape[0]
    if pad_to_cover:
        n_frames = -(-n // hop)  # ceil
        padded = np.zeros((n_frames - 1) * hop + window)
        padded[:n] = x
        x = padded
    else:
        n_frames = (n - window) // hop + 1
        if n_frames < 1:
            raise ValueError("signal shorter than one analysis window")
    idx = np.arange(window)[None, :] + hop * np.arange(n_frames)[:, None]
    return x[idx]


def stft_magnitude(samples, window=FFT_WINDOW, hop=HOP, pad_to_cover=True):
    """Hann-windowed STFT magnitudes, frames x (window/2 + 1)."""
    frames = frame_signal(samples, window, hop, pad_to_cover)
    return np.abs(np.fft.rfft(frames * hann_window(window), axis=1))


def hz_to_mel(f):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_fft=FFT_WINDOW, sr=CANONICAL_RATE, bands=MEL_BANDS):
    """Triangular filters on the HTK mel scale, each peak-normalized to 1.

    Returns (weights, centers_hz): weights is bands x (n_fft/2 + 1),
    centers_hz the continuous-domain filter centers.
    """
    n_bins = n_fft // 2 + 1
    edges_mel = np.linspace(0.0, hz_to_mel(sr / 2.0), bands + 2)
    edges_hz = mel_to_hz(edges_mel)
    bin_hz = np.arange(n_bins) * sr / n_fft
    weights = np.zeros((bands, n_bins))
    for b in range(bands):
        lo, center, hi = edges_hz[b], edges_hz[b + 1], edges_hz[b + 2]
        up = (bin_hz - lo) / (center - lo)
        down = (hi - bin_hz) / (hi - center)
        tri = np.maximum(0.0, np.minimum(up, down))
        peak = tri.max()
        if peak > 0:
            weights[b] = tri / peak
    return weights, edges_hz[1:-1]


def mel_power(samples, pad_to_cover=True, filterbank=None):
    """Linear mel-band power, frames x 80."""
    if filterbank is None:
        filterbank = mel_filterbank()[0]
    mag = stft_magnitude(samples, pad_to_cover=pad_to_cover)
    return (mag * mag) @ filterbank.T


def mel_spectrogram_db(samples, pad_to_cover=True, filterbank=None):
    """Log-scaled mel spectrogram, shifted so the per-clip maximum is 0 dB.

    Digital silence hits the -100 dB epsilon floor uniformly, which after
    the shift degenerates to all zeros; callers treating silence specially
    should check the input, not the output.
    """
    power = mel_power(samples, pad_to_cover=pad_to_cover, filterbank=filterbank)
    db = 10.0 * np.log10(power + DB_FLOOR_EPS)
    return db - db.max()


AED_LABELS = (
    "Gunshot",
    "Explosion",
    "Speech",
    "Scream",
    "Emergency_vehicle",
    "Fire_alarm",
    "Horn",
    "Alarm",
    "Breaking",
)


@dataclass
class AedArchitectureSpec:
    """Published dimensions a learned event detector must conform to."""

    input_samples: int = 437588
    input_duration_s: float = 9.92
    mel_bands: int = MEL_BANDS
    fft_window: int = FFT_WINDOW
    hop: int = HOP
    n_frames: int = 428
    conv_filters: int = 240
    conv_kernel: tuple = (30, 1)
    embedding_dim: int = 240
    gru_layers: int = 3
    n_outputs: int = 9
    labels: tuple = AED_LABELS
    attention: str = "sigmoid-per-frame"


CANONICAL_AED_SPEC = AedArchitectureSpec()


@dataclass
class ShapeCheck:
    name: str
    passed: bool
    expected: object
    actual: object


@dataclass
class ShapeReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]


def validate_aed_shapes(spec):
    """Recompute derived dimensions and compare every field to canon."""
    report = ShapeReport()

    def check(name, expected, actual):
        report.checks.append(ShapeCheck(name, expected == actual, expected, actual))

    check("mel_bands", CANONICAL_AED_SPEC.mel_bands, spec.mel_bands)
    check("fft_window", CANONICAL_AED_SPEC.fft_window, spec.fft_window)
    check("hop", CANONICAL_AED_SPEC.hop, spec.hop)
    check("input_samples", CANONICAL_AED_SPEC.input_samples, spec.input_samples)
    check(
        "input_duration_s",
        round(spec.input_samples / CANONICAL_RATE, 2),
        round(spec.input_duration_s, 2),
    )
    derived_frames = -(-spec.input_samples // spec.hop) if spec.hop else 0
    check("n_frames", derived_frames, spec.n_frames)
    check("conv_filters", CANONICAL_AED_SPEC.conv_filters, spec.conv_filters)
    check("conv_kernel", CANONICAL_AED_SPEC.conv_kernel, tuple(spec.conv_kernel))
    check("embedding_dim", spec.conv_filters, spec.embedding_dim)
    check(
        "embedding_shape",
        (CANONICAL_AED_SPEC.n_frames, CANONICAL_AED_SPEC.embedding_dim),
        (spec.n_frames, spec.embedding_dim),
    )
    check("gru_layers", CANONICAL_AED_SPEC.gru_layers, spec.gru_layers)
    check("n_outputs", len(spec.labels), spec.n_outputs)
    return report
