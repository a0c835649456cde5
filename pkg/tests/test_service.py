"""HTTP surface: schema-valid payloads, error mapping, ingestion, parity."""

import json
import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from jsonschema import Draft202012Validator

from soundtrail.events import EventDetection
from soundtrail.features import FEATURE_VERSION, SegmentFeatures
from soundtrail.index import CatalogRecord, FusionIndex
from soundtrail.schemas import SCHEMAS
from soundtrail.service import create_app, events_payload, open_data_dir
from soundtrail.sync import SyncCluster
from soundtrail.wavio import SegmentRef

from _synth import burst_clip, make_wav, sine


def check_schema(payload, name):
    Draft202012Validator(SCHEMAS[name]).validate(payload)


def seed_features(video_id, count, rng):
    return [
        SegmentFeatures(
            segment=SegmentRef(video_id, i, 6.0 * i, 6.0),
            ssd=rng.normal(size=168),
            rp=np.abs(rng.normal(size=(24, 60))),
            feature_version=FEATURE_VERSION,
        )
        for i in range(count)
    ]


@pytest.fixture(scope="module")
def store(tmp_path_factory):
    """A populated catalog plus one real WAV for the curve endpoint."""
    base = tmp_path_factory.mktemp("svc")
    rng = np.random.default_rng(31)
    wav_path = base / "vid-a.wav"
    wav_path.write_bytes(make_wav(burst_clip(6.0, rng, burst_at=2.0)))

    index = FusionIndex(base / "catalog")
    for vid, source in (("vid-a", str(wav_path)), ("vid-b", "/missing/vid-b.wav")):
        index.put_video(
            CatalogRecord(
                video_id=vid, source_path=source, duration_s=12.0,
                ingest_time="2026-08-23T10:00:00Z",
                detector_runs=("baseline-v1",),
            )
        )
        index.put_segment_features(seed_features(vid, 2, rng))
    index.put_events([
        EventDetection("vid-a", 2.0, 3.5, "Gunshot", 0.95, "baseline-v1"),
        EventDetection("vid-a", 8.0, 9.0, "Alarm", 0.6, "baseline-v1"),
        EventDetection("vid-b", 1.0, 2.0, "Speech", 0.8, "baseline-v1"),
    ])
    index.ingest_visual_detections("vid-a", [
        json.dumps({"video_id": "vid-a", "t_s": 2.5, "label": "person",
                    "bbox": [0.1, 0.1, 0.2, 0.2], "confidence": 0.9}),
    ])
    index.put_clusters([
        SyncCluster("cluster:vid-a", ("vid-a", "vid-b"), "vid-a",
                    {"vid-a": 0.0, "vid-b": 2.0}),
    ])
    work_dir = base / "work"
    work_dir.mkdir()
    app = create_app(index, str(work_dir), worker_count=2)
    with TestClient(app) as client:
        yield base, index, client
    index.close()


class TestReadEndpoints:
    def test_empty_store_lists_no_videos(self, tmp_path):
        with FusionIndex(tmp_path / "catalog") as index:
            client = TestClient(create_app(index, str(tmp_path / "work")))
            response = client.get("/videos")
        assert response.status_code == 200
        assert response.json() == []

    def test_videos_payload_schema_and_order(self, store):
        _, _, client = store
        payload = client.get("/videos").json()
        check_schema(payload, "video_list")
        assert [v["video_id"] for v in payload] == ["vid-a", "vid-b"]

    def test_videos_pagination(self, store):
        _, _, client = store
        assert len(client.get("/videos?limit=1").json()) == 1
        second = client.get("/videos?limit=1&offset=1").json()
        assert [v["video_id"] for v in second] == ["vid-b"]
        assert client.get("/videos?offset=5").json() == []

    def test_unknown_video_timeline_404(self, store):
        _, _, client = store
        response = client.get("/videos/ghost/timeline")
        assert response.status_code == 404
        body = response.json()
        check_schema(body, "error")
        assert body["code"] == "unknown_video"

    def test_timeline_schema_and_kinds(self, store):
        _, _, client = store
        payload = client.get("/videos/vid-a/timeline").json()
        check_schema(payload, "timeline")
        kinds = {a["kind"] for a in payload}
        assert kinds == {"segment", "event", "visual"}

    def test_timeline_range_filter(self, store):
        _, _, client = store
        payload = client.get("/videos/vid-a/timeline?from=7.0&to=10.0").json()
        labels = [a["label"] for a in payload]
        assert "Alarm" in labels and "Gunshot" not in labels

    def test_events_filters_and_schema(self, store):
        _, index, client = store
        payload = client.get("/events?label=Gunshot&min_p=0.5").json()
        check_schema(payload, "event_list")
        assert [e["label"] for e in payload] == ["Gunshot"]
        everything = client.get("/events").json()
        assert [e["probability"] for e in everything] == [0.95, 0.8, 0.6]

    def test_events_time_window(self, store):
        _, _, client = store
        payload = client.get("/events?from=7.5&to=10.0&video=vid-a").json()
        assert [e["label"] for e in payload] == ["Alarm"]

    def test_similar_self_first_with_zero_distances(self, store):
        _, _, client = store
        payload = client.get("/similar?video=vid-a&t=7.0&k=3").json()
        check_schema(payload, "similarity_result")
        top = payload[0]
        assert top["rank"] == 1
        assert (top["video_id"], top["segment_index"]) == ("vid-a", 1)
        assert all(v == 0.0 for v in top["group_distances"].values())
        assert [h["rank"] for h in payload] == [1, 2, 3]

    def test_similar_exclude_self(self, store):
        _, _, client = store
        payload = client.get("/similar?video=vid-a&t=0.0&k=2&exclude_self=true").json()
        assert all(h["video_id"] != "vid-a" for h in payload)

    def test_similar_unknown_video_404(self, store):
        _, _, client = store
        response = client.get("/similar?video=ghost&t=0.0")
        assert response.status_code == 404
        assert response.json()["code"] == "unknown_video"

    def test_similar_unindexed_time_404(self, store):
        _, _, client = store
        response = client.get("/similar?video=vid-a&t=500.0")
        assert response.status_code == 404
        assert response.json()["code"] == "unknown_segment"

    def test_similar_missing_params_400(self, store):
        _, _, client = store
        response = client.get("/similar")
        assert response.status_code == 400
        assert response.json()["code"] == "invalid_request"

    def test_clusters_schema_and_delays(self, store):
        _, _, client = store
        payload = client.get("/sync/clusters").json()
        check_schema(payload, "sync_clusters")
        cluster = payload[0]
        assert cluster["reference"] == "vid-a"
        # the latest-starting member plays immediately
        assert cluster["playback_delays"] == {"vid-a": 2.0, "vid-b": 0.0}

    def test_schemas_published(self, store):
        _, _, client = store
        payload = client.get("/schemas").json()
        assert set(payload) == set(SCHEMAS)


class TestCurveEndpoint:
    def test_curve_schema_and_peak_near_burst(self, store):
        _, _, client = store
        payload = client.get("/videos/vid-a/events/Gunshot/curve").json()
        check_schema(payload, "probability_curve")
        points = payload["points"]
        assert points, "6 s clip must yield windows"
        best_t = max(points, key=lambda p: p[1])[0]
        assert 1.0 <= best_t <= 3.0

    def test_curve_unknown_label_404(self, store):
        _, _, client = store
        response = client.get("/videos/vid-a/events/Yodeling/curve")
        assert response.status_code == 404
        assert response.json()["code"] == "unknown_detector"

    def test_curve_missing_source_404(self, store):
        _, _, client = store
        response = client.get("/videos/vid-b/events/Gunshot/curve")
        assert response.status_code == 404
        assert response.json()["code"] == "missing_source"


class TestVisualEndpoint:
    def test_mixed_lines_reported(self, store):
        _, _, client = store
        lines = "\n".join([
            json.dumps({"video_id": "vid-a", "t_s": 4.0, "label": "car",
                        "bbox": [0, 0, 0.5, 0.5], "confidence": 0.7}),
            json.dumps({"video_id": "vid-a", "t_s": 5.0, "label": "car",
                        "bbox": [0.9, 0, 0.5, 0.5], "confidence": 0.7}),
        ])
        response = client.post("/visual/vid-a", content=lines)
        assert response.status_code == 200
        payload = response.json()
        check_schema(payload, "visual_ingest_result")
        assert payload["accepted"] == 1
        assert payload["rejected"] == [{"line": 2, "reason": "bbox out of range"}]

    def test_unknown_video_404(self, store):
        _, _, client = store
        response = client.post("/visual/ghost", content="{}")
        assert response.status_code == 404


class TestIngestEndpoint:
    def wait_done(self, client, run_id, timeout_s=90.0):
        deadline = time.monotonic() + timeout_s
        while time.monotonic() < deadline:
            body = client.get(f"/ingest/{run_id}").json()
            if body["status"] != "running":
                return body
            time.sleep(0.2)
        raise AssertionError("ingestion did not finish in time")

    def test_ingest_then_query(self, tmp_path):
        rng = np.random.default_rng(5)
        wavs = []
        for name, samples in (("new-a", burst_clip(6.0, rng, burst_at=3.0)),
                              ("new-b", sine(500.0, 6.0, amp=0.4))):
            path = tmp_path / f"{name}.wav"
            path.write_bytes(make_wav(samples))
            wavs.append(str(path))
        with FusionIndex(tmp_path / "catalog") as index:
            app = create_app(index, str(tmp_path / "work"), worker_count=2)
            client = TestClient(app)
            response = client.post("/ingest", json={"paths": wavs})
            assert response.status_code == 202
            started = response.json()
            check_schema(started, "ingest_started")
            final = self.wait_done(client, started["run_id"])
            check_schema(final, "ingest_status")
            assert final["status"] == "succeeded"
            assert all(j["status"] == "succeeded" for j in final["jobs"].values())
            vids = [v["video_id"] for v in client.get("/videos").json()]
            assert vids == ["new-a", "new-b"]
            events = client.get("/events?video=new-a&label=Gunshot").json()
            assert events and events[0]["t_start_s"] <= 3.0 <= events[0]["t_end_s"]

    def test_reads_during_ingestion_all_succeed(self, tmp_path):
        rng = np.random.default_rng(6)
        path = tmp_path / "busy.wav"
        path.write_bytes(make_wav(burst_clip(10.0, rng, burst_at=4.0)))
        with FusionIndex(tmp_path / "catalog") as index:
            app = create_app(index, str(tmp_path / "work"), worker_count=2)
            client = TestClient(app)
            run_id = client.post("/ingest", json={"paths": [str(path)]}).json()["run_id"]
            statuses = []

            def reader():
                local = TestClient(app)
                for _ in range(10):
                    for url in ("/videos", "/events", "/sync/clusters"):
                        r = local.get(url)
                        statuses.append(r.status_code)
                        assert isinstance(r.json(), list)

            threads = [threading.Thread(target=reader) for _ in range(5)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            assert statuses.count(200) == len(statuses) == 150
            self.wait_done(client, run_id)

    def test_bad_body_400(self, store):
        _, _, client = store
        response = client.post("/ingest", json={"paths": []})
        assert response.status_code == 400
        check_schema(response.json(), "error")

    def test_unknown_run_404(self, store):
        _, _, client = store
        response = client.get("/ingest/doesnotexist")
        assert response.status_code == 404

    def test_failed_ingest_reported(self, tmp_path):
        with FusionIndex(tmp_path / "catalog") as index:
            app = create_app(index, str(tmp_path / "work"), worker_count=1)
            client = TestClient(app)
            run_id = client.post(
                "/ingest", json={"paths": ["/no/such/file.wav"]}
            ).json()["run_id"]
            final = self.wait_done(client, run_id)
            assert final["status"] == "failed"


class TestOpenDataDir:
    def test_layout_created(self, tmp_path):
        index, work_dir = open_data_dir(str(tmp_path / "data"))
        with index:
            assert (tmp_path / "data" / "catalog").is_dir()
            assert (tmp_path / "data" / "work").is_dir()
            assert work_dir.endswith("work")

    def test_payload_builders_used_by_http(self, store):
        _, index, client = store
        direct = events_payload(index, label="Gunshot", min_probability=0.5)
        via_http = client.get("/events?label=Gunshot&min_p=0.5").json()
        assert direct == via_http
