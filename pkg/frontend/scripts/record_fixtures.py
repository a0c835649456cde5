"""Record the JSON fixtures the UI tests replay.

Seeds a deterministic catalog (three takes of one synthetic scene plus
hand-authored detections), serves it through the real HTTP app, and saves
selected responses byte-for-byte under tests/fixtures/.

Run from the repository root:

    python3 frontend/scripts/record_fixtures.py
"""

import os
import sys
import tempfile

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "..", "tests"))

from fastapi.testclient import TestClient

from _synth import SR, scene_source
from soundtrail import features, sync
from soundtrail.events import EventDetection
from soundtrail.index import CatalogRecord, FusionIndex, VisualDetection
from soundtrail.service import create_app
from soundtrail.similarity import FeatureCorpus
from soundtrail.wavio import AudioClip

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")

TAKES = {
    "camera-north": (0.0, 60.0),
    "camera-south": (2.0, 20.0),
    "camera-east": (5.0, 17.0),
}

EVENTS = [
    ("camera-north", 42.0, 43.5, "Explosion", 0.97),
    ("camera-south", 8.0, 9.0, "Explosion", 0.88),
    ("camera-north", 3.0, 3.5, "Gunshot", 0.91),
    ("camera-south", 2.0, 6.0, "Speech", 0.72),
    ("camera-east", 1.0, 4.0, "Alarm", 0.66),
    ("camera-east", 5.0, 6.0, "Explosion", 0.45),
]


def seed(index):
    scene = scene_source(70.0, np.random.default_rng(2026))
    corpus = FeatureCorpus()
    envelopes = {}
    for video_id, (start_s, end_s) in TAKES.items():
        clip = AudioClip(video_id, SR, scene[int(start_s * SR):int(end_s * SR)])
        feats = features.extract_segment_features(clip)
        index.put_video(CatalogRecord(
            video_id=video_id,
            source_path=f"/data/{video_id}.wav",
            duration_s=clip.duration_s,
            ingest_time="2026-08-23T12:00:00Z",
            counts={"segments": len(feats)},
        ))
        index.put_segment_features(feats)
        corpus.extend(feats)
        envelopes[video_id] = features.clip_onset_envelope(clip)

    index.put_events([
        EventDetection(video_id=v, t_start_s=t0, t_end_s=t1, label=label,
                       probability=p, detector_id="baseline-v1")
        for v, t0, t1, label, p in EVENTS
    ])
    index.ingest_visual_detections(
        "camera-north",
        b'{"video_id": "camera-north", "t_s": 41.5, "label": "person", '
        b'"bbox": [0.42, 0.3, 0.18, 0.5], "confidence": 0.93}\n',
    )
    index.put_clusters(sync.build_sync_clusters(corpus, envelopes))


def record(client, name, method, path, **kwargs):
    resp = getattr(client, method)(path, **kwargs)
    out = os.path.join(FIXTURES, name)
    with open(out, "wb") as fh:
        fh.write(resp.content)
    print(f"{resp.status_code}  {name:32s}  {method.upper()} {path}")


def main():
    os.makedirs(FIXTURES, exist_ok=True)
    with tempfile.TemporaryDirectory() as td:
        with FusionIndex(os.path.join(td, "catalog")) as index:
            seed(index)
            client = TestClient(create_app(index, os.path.join(td, "work")))
            record(client, "videos.json", "get", "/videos")
            record(client, "events_all.json", "get", "/events")
            record(client, "events_explosion.json", "get",
                   "/events?label=Explosion&min_p=0.8")
            record(client, "events_empty.json", "get",
                   "/events?label=Horn&min_p=0.9")
            record(client, "timeline_north_window.json", "get",
                   "/videos/camera-north/timeline?from=27&to=57")
            record(client, "similar_self.json", "get",
                   "/similar?video=camera-north&t=0&k=8")
            record(client, "sync_clusters.json", "get", "/sync/clusters")
            record(client, "error_unknown_video.json", "get",
                   "/videos/no-such-video/timeline")


if __name__ == "__main__":
    main()
