"""Acoustic event detection over a fixed label taxonomy.

A deterministic heuristic baseline scores nine event labels from short-time
spectral statistics (attack steepness, decay time, tonality, centroid motion,
modulation energy), window by window.  Detectors are pluggable: alternative
implementations register under an id, or run as external executables that
read WAV from stdin and print JSON lines.
"""

import json
import math
import shlex
import subprocess
from dataclasses import dataclass, replace

import numpy as np

from . import dsp
from .errors import TooShort, UnknownDetector
from .wavio import AudioClip, CANONICAL_RATE, encode_wav

DEFAULT_LABELS = dsp.AED_LABELS
BASELINE_DETECTOR_ID = "baseline-v1"

WINDOW_S = 1.0
HOP_S = 0.5
MERGE_THRESHOLD = 0.5
#: frames spanned by the attack-steepness lookback (~150 ms)
RISE_LOOKBACK = 6
#: horns are short blasts; longer steady tones are something else
MAX_HORN_S = 1.5


@dataclass(frozen=True)
class EventDetection:
    video_id: str
    t_start_s: float
    t_end_s: float
    label: str
    probability: float
    detector_id: str


@dataclass(frozen=True)
class DetectorDescriptor:
    detector_id: str
    labels: tuple
    granularity_s: float
    version: str


def _logistic(x, midpoint, scale):
    return 1.0 / (1.0 + math.exp(-(x - midpoint) / scale))


@dataclass
class _WindowProfile:
    """Analysis numbers for one 1 s window."""

    t_start: float
    rise_db: float
    decay_s: float
    burst_width_s: float  # time near the peak spent within 20 dB of it
    tonality_low: float   # 25th percentile: sustained tonal content
    tonality_high: float  # 75th percentile: intermittent tonal content
    centroid: float       # mean mel-band index, power weighted
    centroid_osc: float   # slow centroid oscillation strength (band units)
    mod_syllabic: float   # 2-8 Hz share of the level-modulation spectrum
    gate_transitions: int  # on/off flips of the level in a ~4 s context
    level_db: float       # peak summed level, relative to the clip maximum
    level_std: float
    n_onsets: int


def _clip_tracks(samples):
    """Per-frame level, centroid and tonality for the whole clip."""
    mel_db = dsp.mel_spectrogram_db(samples)
    power = 10.0 ** (mel_db / 10.0)
    total = power.sum(axis=1)
    level = 10.0 * np.log10(total + 1e-12)
    centroid = power @ np.arange(dsp.MEL_BANDS) / total
    # spectral contrast against the local (11-band) median: narrow peaks
    # score high, broadband tilt (bright or rumbling noise) does not
    padded = np.pad(mel_db, ((0, 0), (5, 5)), mode="edge")
    local = np.median(
        np.lib.stride_tricks.sliding_window_view(padded, 11, axis=1), axis=-1
    )
    tonality = (mel_db - local).max(axis=1)
    return level, centroid, tonality


def _band_share(spectrum, freqs, lo, hi, denom_lo, denom_hi):
    num = spectrum[(freqs >= lo) & (freqs <= hi)].sum()
    den = spectrum[(freqs >= denom_lo) & (freqs <= denom_hi)].sum()
    return float(num / (den + 1e-12))


def _syllabic_share(level_win):
    n = len(level_win)
    win = np.hanning(n)
    spec = np.abs(np.fft.rfft((level_win - level_win.mean()) * win)) ** 2
    freqs = np.arange(len(spec)) * dsp.FRAME_RATE / n
    return _band_share(spec, freqs, 2.0, 8.0, 0.5, 15.0)


def _gate_transitions(level, lo_frame, hi_frame):
    """On/off flips of the level against a 15 dB hysteresis-free gate.

    Beeping sources flip several times over a few seconds; steady tones and
    one-off transients flip at most once or twice.
    """
    ctx = level[lo_frame:hi_frame]
    if len(ctx) < 8:
        return 0
    gate = ctx > (ctx.max() - 15.0)
    return int(np.count_nonzero(gate[1:] != gate[:-1]))


def _burst_width(level, peak_idx, n_frames):
    """Seconds near the peak spent within 20 dB of it (+-0.5 s span)."""
    half = int(round(0.5 * dsp.FRAME_RATE))
    lo = max(0, peak_idx - half)
    hi = min(n_frames, peak_idx + half + 1)
    above = level[lo:hi] > level[peak_idx] - 20.0
    return float(np.count_nonzero(above) / dsp.FRAME_RATE)


def _centroid_oscillation(centroid, level, lo_frame, hi_frame):
    """Strength of 0.2-2 Hz centroid motion in a ~4 s context.

    Only audible frames count: the centroid of near-silence is meaningless,
    and letting it in would turn every onset/offset into a fake sweep.
    """
    ctx = centroid[lo_frame:hi_frame].copy()
    lvl = level[lo_frame:hi_frame]
    if len(ctx) < 16:
        return 0.0
    audible = lvl > lvl.max() - 25.0
    if np.count_nonzero(audible) < 16:
        return 0.0
    ctx[~audible] = ctx[audible].mean()
    amp = float(np.std(ctx))
    spec = np.abs(np.fft.rfft(ctx - ctx.mean())) ** 2
    freqs = np.arange(len(spec)) * dsp.FRAME_RATE / len(ctx)
    share = _band_share(spec, freqs, 0.2, 2.0, 0.05, 15.0)
    return amp * share


def _decay_time(level_smooth, peak_idx, n_frames):
    """Seconds from the peak until the level falls 20 dB, capped at 2 s.

    Works on a ~116 ms moving-average level so one-frame dips in a rough
    source do not read as the end of the sound.
    """
    target = level_smooth[peak_idx] - 20.0
    horizon = min(n_frames, peak_idx + int(round(2.0 * dsp.FRAME_RATE)))
    for t in range(peak_idx + 1, horizon):
        if level_smooth[t] <= target:
            return (t - peak_idx) / dsp.FRAME_RATE
    if horizon == n_frames:
        # the clip ran out first; whatever tail existed is all we saw
        return min(2.0, (n_frames - peak_idx) / dsp.FRAME_RATE)
    return 2.0


def _window_profiles(clip):
    if clip.duration_s < WINDOW_S:
        raise TooShort(
            f"clip is {clip.duration_s:.3f} s; event windows need >= {WINDOW_S} s"
        )
    level, centroid, tonality = _clip_tracks(clip.samples)
    level_smooth = np.convolve(level, np.ones(5) / 5.0, mode="same")
    n_frames = len(level)
    fr = dsp.FRAME_RATE
    ctx_half = int(round(2.0 * fr))

    n_windows = int(math.floor((clip.duration_s - WINDOW_S) / HOP_S)) + 1
    profiles = []
    for w in range(n_windows):
        t0 = w * HOP_S
        fs = int(round(t0 * fr))
        fe = min(n_frames, int(round((t0 + WINDOW_S) * fr)))
        if fe - fs < 4:
            continue
        lw = level[fs:fe]

        rise = 0.0
        onsets = 0
        for t in range(fs, fe):
            base = level[max(0, t - RISE_LOOKBACK):t]
            if len(base):
                jump = level[t] - base.min()
                rise = max(rise, jump)
            if t > 0 and level[t] - level[t - 1] >= 6.0:
                onsets += 1

        peak = fs + int(np.argmax(lw))
        peak_smooth = fs + int(np.argmax(level_smooth[fs:fe]))
        mid = (fs + fe) // 2
        ctx_lo = max(0, mid - ctx_half)
        ctx_hi = min(n_frames, mid + ctx_half)
        profiles.append(
            _WindowProfile(
                t_start=t0,
                rise_db=rise,
                decay_s=_decay_time(level_smooth, peak_smooth, n_frames),
                burst_width_s=_burst_width(level, peak, n_frames),
                tonality_low=float(np.percentile(tonality[fs:fe], 25)),
                tonality_high=float(np.percentile(tonality[fs:fe], 75)),
                centroid=float(np.mean(centroid[fs:fe])),
                centroid_osc=_centroid_oscillation(centroid, level, ctx_lo, ctx_hi),
                mod_syllabic=_syllabic_share(lw),
                gate_transitions=_gate_transitions(level, ctx_lo, ctx_hi),
                level_db=float(lw.max()),
                level_std=float(lw.std()),
                n_onsets=onsets,
            )
        )
    return profiles


def _label_scores(p):
    """Per-label probability for one window, as products of logistic gates."""
    loud = _logistic(p.level_db, -30.0, 3.0)
    impulsive = _logistic(p.rise_db, 18.0, 2.0)
    tonal_sustained = _logistic(p.tonality_low, 15.0, 2.5)
    tonal_peaky = _logistic(p.tonality_high, 15.0, 2.5)
    beeping = _logistic(p.gate_transitions, 3.5, 0.7)

    return {
        "Gunshot": impulsive * _logistic(0.30 - p.burst_width_s, 0.0, 0.05) * loud,
        "Explosion": impulsive
        * _logistic(p.decay_s - 0.45, 0.0, 0.05)
        * _logistic(25.0 - p.centroid, 0.0, 3.0)
        * _logistic(12.0 - p.tonality_high, 0.0, 2.5)
        * loud,
        "Speech": _logistic(p.mod_syllabic, 0.55, 0.05)
        * _logistic(10.0 - p.tonality_low, 0.0, 2.0)
        * _logistic(p.level_std, 1.2, 0.25)
        * _logistic(16.0 - p.rise_db, 0.0, 2.5)
        * _logistic(p.decay_s - 1.2, 0.0, 0.15)
        * _logistic(p.level_db, -35.0, 3.0),
        "Scream": tonal_sustained
        * _logistic(p.centroid - 33.0, 0.0, 2.5)
        * _logistic(p.decay_s - 0.4, 0.0, 0.1)
        * _logistic(p.level_db, -20.0, 2.0),
        "Emergency_vehicle": tonal_sustained * _logistic(p.centroid_osc, 2.0, 0.4),
        "Fire_alarm": tonal_peaky
        * beeping
        * _logistic(p.burst_width_s - 0.3, 0.0, 0.05)
        * _logistic(p.centroid - 30.0, 0.0, 3.0)
        * loud,
        "Horn": tonal_sustained
        * _logistic(2.0 - p.level_std, 0.0, 0.4)
        * _logistic(30.0 - p.centroid, 0.0, 2.5)
        * _logistic(p.level_db, -25.0, 2.0),
        "Alarm": tonal_peaky
        * beeping
        * _logistic(p.burst_width_s - 0.3, 0.0, 0.05)
        * _logistic(p.level_db, -35.0, 3.0),
        "Breaking": _logistic(p.rise_db, 14.0, 2.0)
        * _logistic(p.centroid - 45.0, 0.0, 3.0)
        * _logistic(0.8 - p.burst_width_s, 0.0, 0.1)
        * _logistic(p.n_onsets - 2.5, 0.0, 0.5)
        * loud,
    }


def window_probabilities(clip):
    """(window start times, {label: per-window probability array})."""
    profiles = _window_profiles(clip)
    times = np.array([p.t_start for p in profiles])
    scores = {label: np.zeros(len(profiles)) for label in DEFAULT_LABELS}
    for i, prof in enumerate(profiles):
        for label, value in _label_scores(prof).items():
            scores[label][i] = min(1.0, max(0.0, value))
    return times, scores


def probability_curve(clip, label):
    """Un-merged (t, probability) pairs for one label at the 0.5 s hop."""
    if label not in DEFAULT_LABELS:
        raise UnknownDetector(f"unknown label {label!r}")
    times, scores = window_probabilities(clip)
    return list(zip(times.tolist(), scores[label].tolist()))


def detect_events_baseline(clip):
    """Merge window scores >= 0.5 into per-label events.

    Adjacent qualifying windows collapse into one event spanning from the
    first window's start to the last window's start + one hop; the event
    probability is the maximum across its windows.  Horn events longer than
    MAX_HORN_S are discarded (a long steady tone is not a horn blast).
    """
    times, scores = window_probabilities(clip)
    events = []
    for label in DEFAULT_LABELS:
        probs = scores[label]
        run_start = None
        for i in range(len(probs) + 1):
            firing = i < len(probs) and probs[i] >= MERGE_THRESHOLD
            if firing and run_start is None:
                run_start = i
            elif not firing and run_start is not None:
                t_start = times[run_start]
                t_end = times[i - 1] + HOP_S
                prob = float(probs[run_start:i].max())
                if not (label == "Horn" and t_end - t_start > MAX_HORN_S):
                    events.append(
                        EventDetection(
                            video_id=clip.video_id,
                            t_start_s=float(t_start),
                            t_end_s=float(t_end),
                            label=label,
                            probability=prob,
                            detector_id=BASELINE_DETECTOR_ID,
                        )
                    )
                run_start = None
    events.sort(key=lambda e: (e.t_start_s, e.label))
    return events


# --- detector plumbing -----------------------------------------------------

BASELINE_DESCRIPTOR = DetectorDescriptor(
    detector_id=BASELINE_DETECTOR_ID,
    labels=DEFAULT_LABELS,
    granularity_s=HOP_S,
    version="1",
)


def run_executable_detector(argv, clip, detector_id, labels=DEFAULT_LABELS):
    """Run an external detector: WAV on stdin, JSON lines on stdout."""
    if isinstance(argv, str):
        argv = shlex.split(argv)
    proc = subprocess.run(
        list(argv), input=encode_wav(clip), capture_output=True, check=True
    )
    events = []
    for line in proc.stdout.decode("utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        label = rec["label"]
        prob = float(rec["probability"])
        t0, t1 = float(rec["t_start_s"]), float(rec["t_end_s"])
        if label not in labels:
            raise ValueError(f"detector {detector_id!r} emitted unknown label {label!r}")
        if not (0.0 <= prob <= 1.0) or not t0 < t1:
            raise ValueError(f"detector {detector_id!r} emitted an invalid event: {rec}")
        events.append(
            EventDetection(
                video_id=clip.video_id,
                t_start_s=t0,
                t_end_s=t1,
                label=label,
                probability=prob,
                detector_id=detector_id,
            )
        )
    return events


class DetectorRegistry:
    """Named detectors; the heuristic baseline is always registered."""

    def __init__(self):
        self._descriptors = {BASELINE_DETECTOR_ID: BASELINE_DESCRIPTOR}
        self._runners = {BASELINE_DETECTOR_ID: detect_events_baseline}

    def register(self, descriptor, runner):
        """runner: callable(clip) -> list of EventDetection."""
        if tuple(descriptor.labels) != tuple(DEFAULT_LABELS):
            raise ValueError("detector label set must match the configured taxonomy")
        self._descriptors[descriptor.detector_id] = descriptor
        self._runners[descriptor.detector_id] = runner

    def register_executable(self, descriptor, argv):
        self.register(
            descriptor,
            lambda clip: run_executable_detector(
                argv, clip, descriptor.detector_id, descriptor.labels
            ),
        )

    def descriptor(self, detector_id):
        try:
            return self._descriptors[detector_id]
        except KeyError:
            raise UnknownDetector(f"no detector registered as {detector_id!r}") from None

    def run(self, detector_id, clip):
        """Run one detector; every result is tagged with its id."""
        descriptor = self.descriptor(detector_id)
        events = self._runners[detector_id](clip)
        return [
            e if e.detector_id == descriptor.detector_id
            else replace(e, detector_id=descriptor.detector_id)
            for e in events
        ]

    def detector_ids(self):
        return sorted(self._descriptors)


def default_registry():
    return DetectorRegistry()
