"""Published JSON Schemas for every HTTP payload.

Each response the service emits validates against exactly one of these;
tests enforce it, and GET /schemas serves the whole map so clients can
validate too.
"""

_NUMBER = {"type": "number"}
_STRING = {"type": "string"}
_NON_NEG_INT = {"type": "integer", "minimum": 0}
_PROBABILITY = {"type": "number", "minimum": 0.0, "maximum": 1.0}

VIDEO = {
    "type": "object",
    "required": [
        "video_id", "source_path", "duration_s", "ingest_time",
        "feature_file", "envelope_file", "detector_runs", "counts",
    ],
    "properties": {
        "video_id": _STRING,
        "source_path": _STRING,
        "duration_s": {"type": "number", "exclusiveMinimum": 0},
        "ingest_time": _STRING,
        "feature_file": _STRING,
        "envelope_file": _STRING,
        "detector_runs": {"type": "array", "items": _STRING},
        "counts": {"type": "object", "additionalProperties": _NON_NEG_INT},
    },
    "additionalProperties": False,
}

VIDEO_LIST = {"type": "array", "items": VIDEO}

EVENT = {
    "type": "object",
    "required": [
        "video_id", "t_start_s", "t_end_s", "label", "probability", "detector_id",
    ],
    "properties": {
        "video_id": _STRING,
        "t_start_s": {"type": "number", "minimum": 0},
        "t_end_s": {"type": "number", "minimum": 0},
        "label": _STRING,
        "probability": _PROBABILITY,
        "detector_id": _STRING,
    },
    "additionalProperties": False,
}

EVENT_LIST = {"type": "array", "items": EVENT}

TIMELINE_ANNOTATION = {
    "type": "object",
    "required": ["t_start_s", "t_end_s", "kind", "label", "detail"],
    "properties": {
        "t_start_s": _NUMBER,
        "t_end_s": _NUMBER,
        "kind": {"enum": ["event", "segment", "visual"]},
        "label": _STRING,
        "detail": {"type": "object"},
    },
    "additionalProperties": False,
}

TIMELINE = {"type": "array", "items": TIMELINE_ANNOTATION}

SIMILARITY_HIT = {
    "type": "object",
    "required": [
        "rank", "video_id", "segment_index", "start_s", "len_s",
        "fused_rank_score", "group_distances",
    ],
    "properties": {
        "rank": {"type": "integer", "minimum": 1},
        "video_id": _STRING,
        "segment_index": _NON_NEG_INT,
        "start_s": {"type": "number", "minimum": 0},
        "len_s": {"type": "number", "exclusiveMinimum": 0},
        "fused_rank_score": {"type": "number", "minimum": 1},
        "group_distances": {
            "type": "object",
            "additionalProperties": {"type": "number", "minimum": 0},
        },
    },
    "additionalProperties": False,
}

SIMILARITY_RESULT = {"type": "array", "items": SIMILARITY_HIT}

SYNC_CLUSTER = {
    "type": "object",
    "required": [
        "cluster_id", "members", "reference", "member_offsets", "playback_delays",
    ],
    "properties": {
        "cluster_id": _STRING,
        "members": {"type": "array", "items": _STRING, "minItems": 1},
        "reference": _STRING,
        "member_offsets": {"type": "object", "additionalProperties": _NUMBER},
        "playback_delays": {
            "type": "object",
            "additionalProperties": {"type": "number", "minimum": 0},
        },
    },
    "additionalProperties": False,
}

SYNC_CLUSTERS = {"type": "array", "items": SYNC_CLUSTER}

PROBABILITY_CURVE = {
    "type": "object",
    "required": ["video_id", "label", "points"],
    "properties": {
        "video_id": _STRING,
        "label": _STRING,
        "points": {
            "type": "array",
            "items": {
                "type": "array",
                "prefixItems": [{"type": "number", "minimum": 0}, _PROBABILITY],
                "minItems": 2,
                "maxItems": 2,
            },
        },
    },
    "additionalProperties": False,
}

INGEST_STARTED = {
    "type": "object",
    "required": ["run_id", "status"],
    "properties": {"run_id": _STRING, "status": {"enum": ["running"]}},
    "additionalProperties": False,
}

INGEST_STATUS = {
    "type": "object",
    "required": ["run_id", "status"],
    "properties": {
        "run_id": _STRING,
        "status": {"enum": ["running", "succeeded", "failed"]},
        "jobs": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["status", "attempts"],
                "properties": {
                    "status": {"enum": ["succeeded", "failed", "skipped"]},
                    "attempts": _NON_NEG_INT,
                    "reused": {"type": "boolean"},
                    "error": _STRING,
                },
                "additionalProperties": False,
            },
        },
        "error": _STRING,
    },
    "additionalProperties": False,
}

VISUAL_INGEST_RESULT = {
    "type": "object",
    "required": ["accepted", "rejected"],
    "properties": {
        "accepted": _NON_NEG_INT,
        "rejected": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["line", "reason"],
                "properties": {
                    "line": {"type": "integer", "minimum": 1},
                    "reason": _STRING,
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}

ERROR = {
    "type": "object",
    "required": ["status", "code", "message"],
    "properties": {
        "status": {"type": "integer", "minimum": 400, "maximum": 599},
        "code": _STRING,
        "message": _STRING,
    },
    "additionalProperties": False,
}

SCHEMAS = {
    "video": VIDEO,
    "video_list": VIDEO_LIST,
    "event": EVENT,
    "event_list": EVENT_LIST,
    "timeline": TIMELINE,
    "similarity_result": SIMILARITY_RESULT,
    "sync_clusters": SYNC_CLUSTERS,
    "probability_curve": PROBABILITY_CURVE,
    "ingest_started": INGEST_STARTED,
    "ingest_status": INGEST_STATUS,
    "visual_ingest_result": VISUAL_INGEST_RESULT,
    "error": ERROR,
}
