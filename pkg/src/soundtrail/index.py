"""Durable fused catalog: videos, features, events, visual boxes, sync state.

Embedded single-node store.  Every write is framed into an append-only log
(4-byte little-endian length, 4-byte CRC32, JSON payload tagged with "kind"
and "seq") and fsynced before it is acknowledged; a snapshot file compacts
the log.  Reopening replays snapshot + log, so any state is reproducible
from those two files alone.  One writer at a time; readers share a lock so
they always see a consistent state.
"""

import json
import os
import struct
import threading
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (
    CorruptLog,
    DimensionMismatch,
    DuplicateVideo,
    UnknownVideo,
)
from .events import EventDetection
from .features import (
    FEATURE_VERSION,
    RP_BINS,
    REDUCED_BANDS,
    SSD_DIM,
    SegmentFeatures,
)
from .similarity import FeatureCorpus
from .sync import OffsetEstimate, SyncCluster
from .wavio import SegmentRef

WAL_NAME = "wal.log"
SNAPSHOT_NAME = "snapshot.json"
_FRAME_HEADER = struct.Struct("<II")


@dataclass(frozen=True)
class VisualDetection:
    video_id: str
    t_s: float
    label: str
    bbox: tuple  # normalized (x, y, w, h) within the unit square
    confidence: float
    track_id: int = None


@dataclass(frozen=True)
class CatalogRecord:
    video_id: str
    source_path: str
    duration_s: float
    ingest_time: str
    feature_file: str = ""
    envelope_file: str = ""
    detector_runs: tuple = ()
    counts: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TimelineAnnotation:
    t_start_s: float
    t_end_s: float
    kind: str  # "event" | "segment" | "visual"
    label: str
    detail: dict


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _intersects(start, end, t_from, t_to):
    """Half-open interval intersection; zero-length spans behave as points."""
    if end == start:
        if t_from is not None and start < t_from:
            return False
        if t_to is not None and start >= t_to:
            return False
        return True
    if t_to is not None and start >= t_to:
        return False
    if t_from is not None and end <= t_from:
        return False
    return True


def _segment_to_dict(feats):
    seg = feats.segment
    return {
        "video_id": seg.video_id,
        "segment_index": seg.segment_index,
        "start_s": seg.start_s,
        "len_s": seg.len_s,
        "ssd": np.asarray(feats.ssd, dtype=np.float64).tolist(),
        "rp": np.asarray(feats.rp, dtype=np.float64).reshape(-1).tolist(),
        "feature_version": feats.feature_version,
    }


def _segment_from_dict(d):
    return SegmentFeatures(
        segment=SegmentRef(d["video_id"], d["segment_index"], d["start_s"], d["len_s"]),
        ssd=np.array(d["ssd"], dtype=np.float64),
        rp=np.array(d["rp"], dtype=np.float64).reshape(REDUCED_BANDS, RP_BINS),
        feature_version=d["feature_version"],
    )


class FusionIndex:
    """Embedded catalog store rooted at one directory."""

    def __init__(self, root):
        self.root = str(root)
        os.makedirs(self.root, exist_ok=True)
        self._lock = threading.RLock()
        self._videos = {}
        self._features = {}  # video_id -> {segment_index: dict}
        self._events = []
        self._visual = []
        self._offsets = []
        self._clusters = []
        self._corpus = FeatureCorpus()
        self._applied_seq = 0
        self._load()
        self._wal = open(self._wal_path, "ab")

    # -- paths ------------------------------------------------------------

    @property
    def _wal_path(self):
        return os.path.join(self.root, WAL_NAME)

    @property
    def _snapshot_path(self):
        return os.path.join(self.root, SNAPSHOT_NAME)

    # -- lifecycle --------------------------------------------------------

    def close(self):
        with self._lock:
            if self._wal is not None:
                self._wal.close()
                self._wal = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- log machinery ----------------------------------------------------

    def _load(self):
        if os.path.exists(self._snapshot_path):
            with open(self._snapshot_path, "rb") as fh:
                snap = json.loads(fh.read().decode("utf-8"))
            self._applied_seq = snap["applied_seq"]
            self._restore_state(snap["state"])
        records, valid_end = self._read_log()
        for record in records:
            if record["seq"] <= self._applied_seq:
                continue
            self._apply(record)
            self._applied_seq = record["seq"]
        if os.path.exists(self._wal_path) and valid_end < os.path.getsize(self._wal_path):
            # Drop the torn (never-acknowledged) tail so future appends
            # start on a frame boundary.
            with open(self._wal_path, "r+b") as fh:
                fh.truncate(valid_end)

    def _read_log(self):
        """Return (records, valid_end); tolerate a torn tail, refuse corruption."""
        if not os.path.exists(self._wal_path):
            return [], 0
        with open(self._wal_path, "rb") as fh:
            data = fh.read()
        offset = 0
        records = []
        while offset < len(data):
            header = data[offset:offset + _FRAME_HEADER.size]
            if len(header) < _FRAME_HEADER.size:
                break  # torn write at the tail: an unacknowledged append
            length, crc = _FRAME_HEADER.unpack(header)
            payload = data[offset + _FRAME_HEADER.size:offset + _FRAME_HEADER.size + length]
            if len(payload) < length:
                break  # torn payload at the tail
            if zlib.crc32(payload) & 0xFFFFFFFF != crc:
                raise CorruptLog(
                    f"log checksum mismatch at byte {offset}", offset=offset
                )
            records.append(json.loads(payload.decode("utf-8")))
            offset += _FRAME_HEADER.size + length
        return records, offset

    def _append(self, kind, body):
        """Frame, append, flush and fsync one record; returns its sequence."""
        seq = self._applied_seq + 1
        record = {"kind": kind, "seq": seq, **body}
        payload = _canonical_json(record)
        self._wal.write(_FRAME_HEADER.pack(len(payload), zlib.crc32(payload) & 0xFFFFFFFF))
        self._wal.write(payload)
        self._wal.flush()
        os.fsync(self._wal.fileno())
        self._apply(record)
        self._applied_seq = seq
        return seq

    def _apply(self, record):
        kind = record["kind"]
        if kind == "video":
            self._videos[record["record"]["video_id"]] = record["record"]
        elif kind == "features":
            for d in record["segments"]:
                self._features.setdefault(d["video_id"], {})[d["segment_index"]] = d
                self._corpus.add(_segment_from_dict(d))
        elif kind == "events":
            self._events.extend(record["events"])
        elif kind == "visual":
            self._visual.extend(record["detections"])
        elif kind == "offsets":
            self._offsets.extend(record["offsets"])
        elif kind == "clusters":
            self._clusters = record["clusters"]
        else:
            raise CorruptLog(f"unknown record kind {kind!r}")

    # -- snapshot / restore ----------------------------------------------

    def _state_dict(self):
        return {
            "videos": {v: self._videos[v] for v in sorted(self._videos)},
            "features": {
                v: [self._features[v][i] for i in sorted(self._features[v])]
                for v in sorted(self._features)
            },
            "events": list(self._events),
            "visual": list(self._visual),
            "offsets": list(self._offsets),
            "clusters": list(self._clusters),
        }

    def _restore_state(self, state):
        self._videos = dict(state["videos"])
        self._features = {
            v: {d["segment_index"]: d for d in ds}
            for v, ds in state["features"].items()
        }
        self._events = list(state["events"])
        self._visual = list(state["visual"])
        self._offsets = list(state["offsets"])
        self._clusters = list(state["clusters"])
        self._corpus = FeatureCorpus()
        for v in sorted(self._features):
            for i in sorted(self._features[v]):
                self._corpus.add(_segment_from_dict(self._features[v][i]))

    def state(self):
        """Canonical queryable state, for equality checks and debugging."""
        with self._lock:
            return json.loads(_canonical_json(self._state_dict()).decode("utf-8"))

    def snapshot(self):
        """Persist current state and compact the log."""
        with self._lock:
            snap = {"applied_seq": self._applied_seq, "state": self._state_dict()}
            tmp = self._snapshot_path + ".tmp"
            with open(tmp, "wb") as fh:
                fh.write(_canonical_json(snap))
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self._snapshot_path)
            self._wal.close()
            self._wal = open(self._wal_path, "wb")
            self._wal.flush()
            os.fsync(self._wal.fileno())
            return self._applied_seq

    # -- writes -----------------------------------------------------------

    def _require_video(self, video_id):
        if video_id not in self._videos:
            raise UnknownVideo(f"video {video_id!r} is not registered")

    def put_video(self, record):
        with self._lock:
            if record.video_id in self._videos:
                raise DuplicateVideo(f"video {record.video_id!r} already registered")
            if not record.duration_s > 0:
                raise ValueError("duration_s must be positive")
            body = asdict(record)
            body["detector_runs"] = list(record.detector_runs)
            return self._append("video", {"record": body})

    def put_segment_features(self, feats_list):
        with self._lock:
            dicts = []
            for feats in feats_list:
                self._require_video(feats.segment.video_id)
                ssd = np.asarray(feats.ssd, dtype=np.float64).reshape(-1)
                rp = np.asarray(feats.rp, dtype=np.float64).reshape(-1)
                if (
                    feats.feature_version != FEATURE_VERSION
                    or ssd.shape[0] != SSD_DIM
                    or rp.shape[0] != REDUCED_BANDS * RP_BINS
                ):
                    raise DimensionMismatch(
                        f"features do not match layout {FEATURE_VERSION}"
                    )
                dicts.append(_segment_to_dict(feats))
            return self._append("features", {"segments": dicts})

    def put_events(self, events):
        with self._lock:
            dicts = []
            for e in events:
                self._require_video(e.video_id)
                if not 0.0 <= e.probability <= 1.0 or not e.t_start_s < e.t_end_s:
                    raise ValueError(f"invalid event: {e}")
                dicts.append(asdict(e))
            return self._append("events", {"events": dicts})

    def put_offsets(self, estimates):
        with self._lock:
            dicts = []
            for est in estimates:
                self._require_video(est.video_a)
                self._require_video(est.video_b)
                dicts.append(asdict(est))
            return self._append("offsets", {"offsets": dicts})

    def put_clusters(self, clusters):
        """Replace the stored clustering (it is a global derived result)."""
        with self._lock:
            dicts = []
            for c in clusters:
                for m in c.members:
                    self._require_video(m)
                dicts.append(
                    {
                        "cluster_id": c.cluster_id,
                        "members": list(c.members),
                        "reference": c.reference,
                        "member_offsets": dict(c.member_offsets),
                    }
                )
            return self._append("clusters", {"clusters": dicts})

    # -- visual ingestion -------------------------------------------------

    _VISUAL_REQUIRED = ("video_id", "t_s", "label", "bbox", "confidence")

    def _validate_visual_line(self, video_id, line):
        try:
            rec = json.loads(line)
        except ValueError:
            return None, "invalid json"
        if not isinstance(rec, dict):
            return None, "invalid json"
        for key in self._VISUAL_REQUIRED:
            if key not in rec:
                return None, f"missing field: {key}"
        if rec["video_id"] != video_id:
            return None, "video_id mismatch"
        if not isinstance(rec["label"], str) or not rec["label"]:
            return None, "invalid label"
        try:
            t_s = float(rec["t_s"])
            confidence = float(rec["confidence"])
            bbox = [float(v) for v in rec["bbox"]]
        except (TypeError, ValueError):
            return None, "non-numeric field"
        if len(bbox) != 4:
            return None, "bbox must have 4 values"
        x, y, w, h = bbox
        eps = 1e-9
        if not (
            0.0 <= x <= 1.0 and 0.0 <= y <= 1.0 and 0.0 <= w <= 1.0 and 0.0 <= h <= 1.0
            and x + w <= 1.0 + eps and y + h <= 1.0 + eps
        ):
            return None, "bbox out of range"
        if not 0.0 <= confidence <= 1.0:
            return None, "confidence out of range"
        track_id = rec.get("track_id")
        if track_id is not None and not isinstance(track_id, int):
            return None, "track_id must be an integer"
        return (
            {
                "video_id": video_id,
                "t_s": t_s,
                "label": rec["label"],
                "bbox": bbox,
                "confidence": confidence,
                "track_id": track_id,
            },
            None,
        )

    def ingest_visual_detections(self, video_id, lines):
        """Store valid JSON lines; report rejects as (line_number, reason).

        Line numbers are 1-based.  Blank lines are skipped without judgment.
        """
        with self._lock:
            self._require_video(video_id)
            if isinstance(lines, (str, bytes)):
                if isinstance(lines, bytes):
                    lines = lines.decode("utf-8")
                lines = lines.splitlines()
            accepted = []
            rejected = []
            for number, line in enumerate(lines, start=1):
                if not line.strip():
                    continue
                rec, reason = self._validate_visual_line(video_id, line)
                if reason is not None:
                    rejected.append((number, reason))
                else:
                    accepted.append(rec)
            if accepted:
                self._append("visual", {"detections": accepted})
            return len(accepted), rejected

    # -- reads ------------------------------------------------------------

    def get_video(self, video_id):
        with self._lock:
            self._require_video(video_id)
            d = dict(self._videos[video_id])
            d["detector_runs"] = tuple(d["detector_runs"])
            return CatalogRecord(**d)

    def list_videos(self):
        with self._lock:
            return [self.get_video(v) for v in sorted(self._videos)]

    def has_video(self, video_id):
        with self._lock:
            return video_id in self._videos

    def segment_features(self, video_id):
        with self._lock:
            self._require_video(video_id)
            per_video = self._features.get(video_id, {})
            return [_segment_from_dict(per_video[i]) for i in sorted(per_video)]

    def feature_corpus(self):
        with self._lock:
            return self._corpus

    def offsets(self):
        with self._lock:
            return [OffsetEstimate(**d) for d in self._offsets]

    def clusters(self):
        with self._lock:
            return [
                SyncCluster(
                    cluster_id=d["cluster_id"],
                    members=tuple(d["members"]),
                    reference=d["reference"],
                    member_offsets=dict(d["member_offsets"]),
                )
                for d in self._clusters
            ]

    def visual_detections(self, video_id=None):
        with self._lock:
            out = []
            for d in self._visual:
                if video_id is not None and d["video_id"] != video_id:
                    continue
                out.append(
                    VisualDetection(
                        video_id=d["video_id"],
                        t_s=d["t_s"],
                        label=d["label"],
                        bbox=tuple(d["bbox"]),
                        confidence=d["confidence"],
                        track_id=d["track_id"],
                    )
                )
            return out

    def query_events(
        self,
        label=None,
        min_probability=None,
        video_id=None,
        t_start=None,
        t_end=None,
    ):
        """Matching events ordered by (probability desc, start time, keys)."""
        with self._lock:
            out = []
            for d in self._events:
                if label is not None and d["label"] != label:
                    continue
                if min_probability is not None and d["probability"] < min_probability:
                    continue
                if video_id is not None and d["video_id"] != video_id:
                    continue
                if not _intersects(d["t_start_s"], d["t_end_s"], t_start, t_end):
                    continue
                out.append(EventDetection(**d))
            out.sort(
                key=lambda e: (
                    -e.probability,
                    e.t_start_s,
                    e.video_id,
                    e.label,
                    e.t_end_s,
                    e.detector_id,
                )
            )
            return out

    def timeline(self, video_id, t_start=None, t_end=None):
        """Merged segment/event/visual annotations, time-sorted, stable."""
        with self._lock:
            self._require_video(video_id)
            annotations = []
            for i in sorted(self._features.get(video_id, {})):
                d = self._features[video_id][i]
                annotations.append(
                    TimelineAnnotation(
                        t_start_s=d["start_s"],
                        t_end_s=d["start_s"] + d["len_s"],
                        kind="segment",
                        label=f"segment-{d['segment_index']}",
                        detail={"segment_index": d["segment_index"]},
                    )
                )
            for d in self._events:
                if d["video_id"] == video_id:
                    annotations.append(
                        TimelineAnnotation(
                            t_start_s=d["t_start_s"],
                            t_end_s=d["t_end_s"],
                            kind="event",
                            label=d["label"],
                            detail=dict(d),
                        )
                    )
            for d in self._visual:
                if d["video_id"] == video_id:
                    annotations.append(
                        TimelineAnnotation(
                            t_start_s=d["t_s"],
                            t_end_s=d["t_s"],
                            kind="visual",
                            label=d["label"],
                            detail=dict(d),
                        )
                    )
            annotations = [
                a for a in annotations
                if _intersects(a.t_start_s, a.t_end_s, t_start, t_end)
            ]
            annotations.sort(key=lambda a: (a.t_start_s, a.kind, a.label, a.t_end_s))
            return annotations
