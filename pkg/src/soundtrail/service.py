"""HTTP surface over the catalog: queries, ingestion, visual upload.

Payload builders live here so the CLI and the HTTP endpoints share one
serialization path and return identical JSON for identical queries.
"""

import math
import os
import socket
import threading
import uuid
from dataclasses import asdict

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .errors import (
    DataDirLocked,
    PortInUse,
    SoundtrailError,
    UnknownSegment,
    UnknownVideo,
)
from .events import probability_curve
from .features import OnsetEnvelope
from .index import FusionIndex
from .pipeline import run_ingest
from .schemas import SCHEMAS
from .similarity import query_similar
from .sync import build_sync_clusters, playback_schedule
from .wavio import SEGMENT_LEN_S, decode_wav, resample_to_canonical

DEFAULT_LIMIT = 100
MAX_LIMIT = 1000

_STATUS_BY_CODE = {
    "unknown_video": 404,
    "unknown_segment": 404,
    "unknown_detector": 404,
    "duplicate_video": 409,
    "corrupt_log": 500,
    "port_in_use": 500,
    "data_dir_locked": 500,
    "internal_error": 500,
}


def _status_for(err):
    return _STATUS_BY_CODE.get(err.code, 400)


def _page(items, limit, offset):
    limit = max(1, min(MAX_LIMIT, limit))
    offset = max(0, offset)
    return items[offset:offset + limit]


# -- payload builders (single source of truth for HTTP and CLI) ----------


def video_payload(record):
    d = asdict(record)
    d["detector_runs"] = list(record.detector_runs)
    return d


def videos_payload(index, limit=DEFAULT_LIMIT, offset=0):
    return [video_payload(r) for r in _page(index.list_videos(), limit, offset)]


def events_payload(index, label=None, min_probability=None, video_id=None,
                   t_start=None, t_end=None, limit=DEFAULT_LIMIT, offset=0):
    events = index.query_events(
        label=label, min_probability=min_probability, video_id=video_id,
        t_start=t_start, t_end=t_end,
    )
    return [asdict(e) for e in _page(events, limit, offset)]


def timeline_payload(index, video_id, t_start=None, t_end=None,
                     limit=DEFAULT_LIMIT, offset=0):
    annotations = index.timeline(video_id, t_start, t_end)
    return [asdict(a) for a in _page(annotations, limit, offset)]


def similar_payload(index, video_id, t_s, k=10, exclude_self=False):
    if not index.has_video(video_id):
        raise UnknownVideo(f"video {video_id!r} is not registered")
    if t_s < 0:
        raise UnknownSegment(f"no segment at t={t_s}")
    segment_index = int(math.floor(t_s / SEGMENT_LEN_S))
    corpus = index.feature_corpus()
    query = corpus.lookup(video_id, segment_index)
    hits = query_similar(query, k, corpus, exclude_self_video=exclude_self)
    return [
        {
            "rank": h.rank,
            "video_id": h.segment.video_id,
            "segment_index": h.segment.segment_index,
            "start_s": h.segment.start_s,
            "len_s": h.segment.len_s,
            "fused_rank_score": h.fused_rank_score,
            "group_distances": {g: float(v) for g, v in h.group_distances.items()},
        }
        for h in hits
    ]


def clusters_payload(index):
    out = []
    for c in index.clusters():
        out.append(
            {
                "cluster_id": c.cluster_id,
                "members": list(c.members),
                "reference": c.reference,
                "member_offsets": {v: float(o) for v, o in c.member_offsets.items()},
                "playback_delays": {
                    v: float(d) for v, d in playback_schedule(c)
                },
            }
        )
    return out


def curve_payload(index, video_id, label):
    record = index.get_video(video_id)
    with open(record.source_path, "rb") as fh:
        clip = resample_to_canonical(decode_wav(fh.read(), video_id=video_id))
    points = probability_curve(clip, label)
    return {
        "video_id": video_id,
        "label": label,
        "points": [[float(t), float(p)] for t, p in points],
    }


def build_and_store_clusters(index):
    """Estimate offsets from stored envelopes and persist the clustering."""
    envelopes = {}
    for record in index.list_videos():
        if record.envelope_file and os.path.exists(record.envelope_file):
            envelopes[record.video_id] = OnsetEnvelope(
                video_id=record.video_id,
                values=np.load(record.envelope_file),
            )
    clusters = build_sync_clusters(index.feature_corpus(), envelopes)
    if clusters:
        index.put_clusters(clusters)
    return clusters


# -- the application ------------------------------------------------------


def create_app(index, work_dir, worker_count=4):
    app = FastAPI(title="soundtrail", docs_url=None, redoc_url=None)
    runs = {}
    runs_lock = threading.Lock()

    @app.exception_handler(SoundtrailError)
    async def _soundtrail_error(request, err):
        status = _status_for(err)
        return JSONResponse(
            status_code=status,
            content={"status": status, "code": err.code, "message": str(err)},
        )

    @app.exception_handler(RequestValidationError)
    async def _invalid_request(request, err):
        return JSONResponse(
            status_code=400,
            content={"status": 400, "code": "invalid_request", "message": str(err)},
        )

    @app.get("/schemas")
    def get_schemas():
        return SCHEMAS

    @app.get("/videos")
    def get_videos(limit: int = DEFAULT_LIMIT, offset: int = 0):
        return videos_payload(index, limit, offset)

    @app.get("/videos/{video_id}/timeline")
    def get_timeline(
        video_id: str,
        t_from: float = Query(None, alias="from"),
        t_to: float = Query(None, alias="to"),
        limit: int = DEFAULT_LIMIT,
        offset: int = 0,
    ):
        return timeline_payload(index, video_id, t_from, t_to, limit, offset)

    @app.get("/events")
    def get_events(
        label: str = None,
        min_p: float = None,
        video: str = None,
        t_from: float = Query(None, alias="from"),
        t_to: float = Query(None, alias="to"),
        limit: int = DEFAULT_LIMIT,
        offset: int = 0,
    ):
        return events_payload(index, label, min_p, video, t_from, t_to,
                              limit, offset)

    @app.get("/similar")
    def get_similar(video: str, t: float, k: int = 10, exclude_self: bool = False):
        return similar_payload(index, video, t, k, exclude_self)

    @app.get("/sync/clusters")
    def get_clusters():
        return clusters_payload(index)

    @app.get("/videos/{video_id}/events/{label}/curve")
    def get_curve(video_id: str, label: str):
        try:
            return curve_payload(index, video_id, label)
        except FileNotFoundError as err:
            return JSONResponse(
                status_code=404,
                content={
                    "status": 404,
                    "code": "missing_source",
                    "message": f"source audio not found: {err.filename}",
                },
            )

    @app.post("/ingest", status_code=202)
    async def post_ingest(body: dict):
        paths = body.get("paths")
        if not isinstance(paths, list) or not paths:
            return JSONResponse(
                status_code=400,
                content={"status": 400, "code": "no_inputs",
                         "message": "body must carry a non-empty paths list"},
            )
        run_id = uuid.uuid4().hex[:12]
        with runs_lock:
            runs[run_id] = {"run_id": run_id, "status": "running"}

        def work():
            try:
                results = run_ingest(paths, index, work_dir, worker_count)
                failed = any(r.status != "succeeded" for r in results.values())
                summary = {
                    jid: {
                        "status": r.status,
                        "attempts": r.attempts,
                        "reused": r.reused,
                        **({"error": r.error} if r.error else {}),
                    }
                    for jid, r in results.items()
                }
                with runs_lock:
                    runs[run_id] = {
                        "run_id": run_id,
                        "status": "failed" if failed else "succeeded",
                        "jobs": summary,
                    }
            except Exception as exc:  # noqa: BLE001 - reported via status
                with runs_lock:
                    runs[run_id] = {
                        "run_id": run_id, "status": "failed", "error": str(exc),
                    }

        threading.Thread(target=work, daemon=True).start()
        return {"run_id": run_id, "status": "running"}

    @app.get("/ingest/{run_id}")
    def get_ingest(run_id: str):
        with runs_lock:
            run = runs.get(run_id)
        if run is None:
            return JSONResponse(
                status_code=404,
                content={"status": 404, "code": "unknown_run",
                         "message": f"no ingestion run {run_id!r}"},
            )
        return run

    @app.post("/visual/{video_id}")
    async def post_visual(video_id: str, request: Request):
        body = await request.body()
        accepted, rejected = index.ingest_visual_detections(video_id, body)
        return {
            "accepted": accepted,
            "rejected": [{"line": n, "reason": r} for n, r in rejected],
        }

    return app


# -- process entry ---------------------------------------------------------


def _acquire_data_dir(data_dir):
    """Take the single-writer lock; returns the open lock fd."""
    import fcntl

    os.makedirs(data_dir, exist_ok=True)
    fd = os.open(os.path.join(data_dir, ".lock"), os.O_CREAT | os.O_RDWR)
    try:
        fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
    except OSError:
        os.close(fd)
        raise DataDirLocked(f"{data_dir} is in use by another process")
    return fd


def _check_port(host, port):
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError:
        raise PortInUse(f"port {port} is already in use")
    finally:
        probe.close()


def open_data_dir(data_dir):
    """The standard layout: catalog store plus pipeline work area."""
    index = FusionIndex(os.path.join(data_dir, "catalog"))
    work_dir = os.path.join(data_dir, "work")
    os.makedirs(work_dir, exist_ok=True)
    return index, work_dir


def serve(port=8645, data_dir="soundtrail-data", worker_count=4, host="127.0.0.1"):
    import uvicorn

    lock_fd = _acquire_data_dir(data_dir)
    try:
        _check_port(host, port)
        index, work_dir = open_data_dir(data_dir)
        with index:
            app = create_app(index, work_dir, worker_count)
            uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        os.close(lock_fd)
