"""Command-line interface; query output matches the HTTP API byte for byte."""

import argparse
import json
import sys

from .errors import SoundtrailError, SpecInvalid
from .pipeline import DagSpec, run_ingest, validate_dag
from .service import (
    build_and_store_clusters,
    clusters_payload,
    events_payload,
    open_data_dir,
    similar_payload,
    timeline_payload,
)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="soundtrail",
        description="Audio-forensic indexing engine: ingest videos, query "
                    "acoustic events, search similar segments, align recordings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--data-dir", default="soundtrail-data",
                       help="catalog and artifact directory")
        p.add_argument("--json", action="store_true", dest="as_json",
                       help="machine-readable JSON on stdout")
        return p

    p = add("ingest", "decode, analyze and index WAV files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--workers", type=int, default=4)

    p = add("serve", "run the HTTP service")
    p.add_argument("--port", type=int, default=8645)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--workers", type=int, default=4)

    p = add("events", "query indexed acoustic events")
    p.add_argument("--label")
    p.add_argument("--min-p", type=float, dest="min_p")
    p.add_argument("--video")
    p.add_argument("--from", type=float, dest="t_from")
    p.add_argument("--to", type=float, dest="t_to")
    p.add_argument("--limit", type=int, default=100)
    p.add_argument("--offset", type=int, default=0)

    p = add("similar", "similarity search from one segment")
    p.add_argument("--video", required=True)
    p.add_argument("--t", type=float, required=True,
                   help="a time inside the query segment, in seconds")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--exclude-self", action="store_true")

    p = add("sync", "show (or rebuild with --build) sync clusters")
    p.add_argument("--build", action="store_true")

    p = add("timeline", "merged annotation timeline for one video")
    p.add_argument("--video", required=True)
    p.add_argument("--from", type=float, dest="t_from")
    p.add_argument("--to", type=float, dest="t_to")
    p.add_argument("--limit", type=int, default=100)
    p.add_argument("--offset", type=int, default=0)

    p = add("validate-dag", "check a JSON workflow file")
    p.add_argument("file")

    return parser


def _emit(payload, as_json, humanize):
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in humanize(payload):
            print(line)


def _human_events(events):
    if not events:
        yield "no events"
    for e in events:
        yield (f"{e['t_start_s']:8.2f} {e['t_end_s']:8.2f}  "
               f"{e['label']:<18} p={e['probability']:.3f}  {e['video_id']}")


def _human_hits(hits):
    if not hits:
        yield "no results"
    for h in hits:
        yield (f"{h['rank']:3d}  {h['video_id']}#{h['segment_index']}  "
               f"t={h['start_s']:.1f}s  score={h['fused_rank_score']:.2f}")


def _human_timeline(annotations):
    if not annotations:
        yield "no annotations"
    for a in annotations:
        yield (f"{a['t_start_s']:8.2f} {a['t_end_s']:8.2f}  "
               f"{a['kind']:<8} {a['label']}")


def _human_clusters(clusters):
    if not clusters:
        yield "no clusters"
    for c in clusters:
        members = ", ".join(
            f"{v}@{c['member_offsets'][v]:+.3f}s" for v in c["members"]
        )
        yield f"{c['cluster_id']}  ref={c['reference']}  [{members}]"


def _cmd_ingest(args):
    index, work_dir = open_data_dir(args.data_dir)
    with index:
        results = run_ingest(args.paths, index, work_dir, args.workers)
    summary = {
        jid: {
            "status": r.status,
            "attempts": r.attempts,
            "reused": r.reused,
            **({"error": r.error} if r.error else {}),
        }
        for jid, r in results.items()
    }
    failed = any(r.status != "succeeded" for r in results.values())
    payload = {"status": "failed" if failed else "succeeded", "jobs": summary}

    def humanize(p):
        for jid in sorted(p["jobs"]):
            job = p["jobs"][jid]
            note = " (reused)" if job["reused"] else ""
            yield f"{job['status']:<9} {jid}{note}"
        yield f"ingestion {p['status']}"

    _emit(payload, args.as_json, humanize)
    return 1 if failed else 0


def _cmd_serve(args):
    from .service import serve

    serve(port=args.port, data_dir=args.data_dir,
          worker_count=args.workers, host=args.host)
    return 0


def _cmd_events(args):
    index, _ = open_data_dir(args.data_dir)
    with index:
        payload = events_payload(
            index, args.label, args.min_p, args.video,
            args.t_from, args.t_to, args.limit, args.offset,
        )
    _emit(payload, args.as_json, _human_events)
    return 0


def _cmd_similar(args):
    index, _ = open_data_dir(args.data_dir)
    with index:
        payload = similar_payload(
            index, args.video, args.t, args.k, args.exclude_self
        )
    _emit(payload, args.as_json, _human_hits)
    return 0


def _cmd_sync(args):
    index, _ = open_data_dir(args.data_dir)
    with index:
        if args.build:
            build_and_store_clusters(index)
        payload = clusters_payload(index)
    _emit(payload, args.as_json, _human_clusters)
    return 0


def _cmd_timeline(args):
    index, _ = open_data_dir(args.data_dir)
    with index:
        payload = timeline_payload(
            index, args.video, args.t_from, args.t_to, args.limit, args.offset
        )
    _emit(payload, args.as_json, _human_timeline)
    return 0


def _cmd_validate_dag(args):
    with open(args.file) as fh:
        spec = DagSpec.from_dict(json.load(fh))
    try:
        order = validate_dag(spec)
    except SpecInvalid as err:
        if args.as_json:
            print(json.dumps({"ok": False, "error": str(err)}))
        else:
            print(f"invalid: {err}", file=sys.stderr)
        return 1
    _emit({"ok": True, "order": order}, args.as_json,
          lambda p: [f"ok: {len(p['order'])} jobs", *p["order"]])
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "serve": _cmd_serve,
    "events": _cmd_events,
    "similar": _cmd_similar,
    "sync": _cmd_sync,
    "timeline": _cmd_timeline,
    "validate-dag": _cmd_validate_dag,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SoundtrailError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
