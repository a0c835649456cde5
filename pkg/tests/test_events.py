import math
import sys

import numpy as np
import pytest

import _synth as S
from soundtrail import events
from soundtrail.errors import TooShort, UnknownDetector
from soundtrail.wavio import AudioClip

SR = 44100


def clip_of(samples, video_id="clip"):
    return AudioClip(video_id, SR, np.asarray(samples, dtype=np.float64))


class TestBaselineExamples:
    def test_silence_is_empty(self):
        assert events.detect_events_baseline(clip_of(np.zeros(5 * SR))) == []

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_burst_yields_one_gunshot(self, seed):
        rng = np.random.default_rng(seed)
        clip = clip_of(S.burst_clip(6.0, rng, burst_at=3.0))
        detections = events.detect_events_baseline(clip)
        gunshots = [e for e in detections if e.label == "Gunshot"]
        assert len(gunshots) == 1
        shot = gunshots[0]
        assert shot.probability >= 0.9
        assert shot.t_start_s <= 3.0 <= shot.t_end_s
        assert shot.detector_id == "baseline-v1"

    def test_steady_tone_never_impulsive(self):
        clip = clip_of(S.sine(440, 5.0))
        _, scores = events.window_probabilities(clip)
        assert scores["Gunshot"].max() < 0.5
        assert scores["Explosion"].max() < 0.5
        labels = {e.label for e in events.detect_events_baseline(clip)}
        assert "Gunshot" not in labels and "Explosion" not in labels

    def test_syllabic_noise_reads_as_speech(self):
        clip = clip_of(S.am_noise(6.0, np.random.default_rng(2)))
        labels = {e.label for e in events.detect_events_baseline(clip)}
        assert "Speech" in labels

    def test_siren_reads_as_emergency_vehicle(self):
        labels = {e.label for e in events.detect_events_baseline(clip_of(S.siren(8.0)))}
        assert "Emergency_vehicle" in labels
        assert "Gunshot" not in labels

    def test_beeping_reads_as_alarm(self):
        labels = {e.label for e in events.detect_events_baseline(clip_of(S.beeps(8.0)))}
        assert "Fire_alarm" in labels
        assert "Alarm" in labels

    def test_shatter_reads_as_breaking(self):
        clip = clip_of(S.glass_shatter(6.0, np.random.default_rng(3)))
        labels = {e.label for e in events.detect_events_baseline(clip)}
        assert "Breaking" in labels

    def test_rumble_reads_as_explosion(self):
        clip = clip_of(S.rumble(6.0, np.random.default_rng(4)))
        labels = {e.label for e in events.detect_events_baseline(clip)}
        assert "Explosion" in labels
        assert "Gunshot" not in labels

    def test_scream_like_reads_as_scream(self):
        labels = {e.label for e in events.detect_events_baseline(clip_of(S.scream_like(3.0)))}
        assert "Scream" in labels

    def test_short_tone_blast_is_a_horn(self):
        blast = np.concatenate([np.zeros(2 * SR), S.sine(440, 1.0), np.zeros(2 * SR)])
        horns = [e for e in events.detect_events_baseline(clip_of(blast))
                 if e.label == "Horn"]
        assert len(horns) == 1
        assert horns[0].t_end_s - horns[0].t_start_s <= 1.5

    def test_long_tone_is_not_a_horn(self):
        labels = {e.label for e in events.detect_events_baseline(clip_of(S.sine(440, 5.0)))}
        assert "Horn" not in labels

    def test_too_short_clip(self):
        with pytest.raises(TooShort):
            events.detect_events_baseline(clip_of(np.zeros(int(0.8 * SR))))


class TestInvariants:
    def test_probabilities_and_spans_valid(self):
        clip = clip_of(S.structured_segment(np.random.default_rng(5), 10.0))
        for e in events.detect_events_baseline(clip):
            assert 0.0 <= e.probability <= 1.0
            assert e.t_start_s < e.t_end_s

    def test_same_label_events_never_overlap(self):
        clip = clip_of(S.beeps(12.0, beep_hz=0.5))
        detections = events.detect_events_baseline(clip)
        by_label = {}
        for e in detections:
            by_label.setdefault((e.label, e.detector_id), []).append(e)
        for group in by_label.values():
            group.sort(key=lambda e: e.t_start_s)
            for prev, nxt in zip(group, group[1:]):
                assert prev.t_end_s <= nxt.t_start_s

    def test_deterministic(self):
        x = S.burst_clip(6.0, np.random.default_rng(6), burst_at=2.0)
        a = events.detect_events_baseline(clip_of(x.copy()))
        b = events.detect_events_baseline(clip_of(x.copy()))
        assert a == b

    def test_time_shift_equivariance(self):
        base = S.burst_clip(6.0, np.random.default_rng(7), burst_at=2.0)
        shifted = np.concatenate([np.zeros(SR), base])
        shot = [e for e in events.detect_events_baseline(clip_of(base))
                if e.label == "Gunshot"][0]
        shot_shifted = [e for e in events.detect_events_baseline(clip_of(shifted))
                        if e.label == "Gunshot"][0]
        assert abs((shot_shifted.t_start_s - shot.t_start_s) - 1.0) <= 0.5 + 1e-9
        assert abs((shot_shifted.t_end_s - shot.t_end_s) - 1.0) <= 0.5 + 1e-9


class TestProbabilityCurve:
    @pytest.mark.parametrize("dur", [1.0, 2.7, 5.0, 9.92])
    def test_curve_length(self, dur):
        clip = clip_of(np.zeros(int(round(dur * SR))))
        curve = events.probability_curve(clip, "Gunshot")
        assert len(curve) == math.floor((clip.duration_s - 1.0) / 0.5) + 1

    def test_silence_curve_near_zero(self):
        clip = clip_of(np.zeros(4 * SR))
        for label in events.DEFAULT_LABELS:
            assert all(p < 0.05 for _, p in events.probability_curve(clip, label))

    def test_impulse_peak_near_its_time(self):
        clip = clip_of(S.burst_clip(6.0, np.random.default_rng(8), burst_at=3.0))
        curve = events.probability_curve(clip, "Gunshot")
        t_best = max(curve, key=lambda tp: tp[1])[0]
        assert 2.5 <= t_best <= 3.5

    def test_unknown_label(self):
        with pytest.raises(UnknownDetector):
            events.probability_curve(clip_of(np.zeros(2 * SR)), "Dragon")


class TestRegistry:
    def test_baseline_always_available(self):
        reg = events.default_registry()
        clip = clip_of(S.burst_clip(4.0, np.random.default_rng(9), burst_at=2.0))
        assert reg.run("baseline-v1", clip) == events.detect_events_baseline(clip)

    def test_unknown_detector(self):
        reg = events.default_registry()
        with pytest.raises(UnknownDetector):
            reg.run("nope-v0", clip_of(np.zeros(2 * SR)))

    def test_mock_detector_retagged(self):
        reg = events.default_registry()
        fixed = [events.EventDetection("v", 1.0, 2.0, "Speech", 0.7, "other-id")]
        reg.register(
            events.DetectorDescriptor("mock-v1", events.DEFAULT_LABELS, 0.5, "1"),
            lambda clip: list(fixed),
        )
        out = reg.run("mock-v1", clip_of(np.zeros(2 * SR)))
        assert len(out) == 1
        assert out[0].detector_id == "mock-v1"
        assert out[0].label == "Speech"

    def test_label_taxonomy_enforced(self):
        reg = events.default_registry()
        with pytest.raises(ValueError):
            reg.register(
                events.DetectorDescriptor("bad-v1", ("Gunshot",), 0.5, "1"),
                lambda clip: [],
            )

    def test_executable_detector(self, tmp_path):
        script = tmp_path / "det.py"
        script.write_text(
            "import sys, json\n"
            "sys.stdin.buffer.read()\n"
            "print(json.dumps({'t_start_s': 0.5, 't_end_s': 1.5,"
            " 'label': 'Alarm', 'probability': 0.8}))\n"
        )
        reg = events.default_registry()
        reg.register_executable(
            events.DetectorDescriptor("ext-v1", events.DEFAULT_LABELS, 0.5, "1"),
            [sys.executable, str(script)],
        )
        out = reg.run("ext-v1", clip_of(np.zeros(2 * SR), video_id="vid-9"))
        assert out == [events.EventDetection("vid-9", 0.5, 1.5, "Alarm", 0.8, "ext-v1")]

    def test_executable_bad_label_rejected(self, tmp_path):
        script = tmp_path / "det.py"
        script.write_text(
            "import sys, json\n"
            "sys.stdin.buffer.read()\n"
            "print(json.dumps({'t_start_s': 0.0, 't_end_s': 1.0,"
            " 'label': 'Kazoo', 'probability': 0.8}))\n"
        )
        reg = events.default_registry()
        reg.register_executable(
            events.DetectorDescriptor("ext-v2", events.DEFAULT_LABELS, 0.5, "1"),
            [sys.executable, str(script)],
        )
        with pytest.raises(ValueError):
            reg.run("ext-v2", clip_of(np.zeros(2 * SR)))
