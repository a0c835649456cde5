"""Desk-scale DAG workflow runner and the standard ingestion workflow.

A DagSpec names jobs (external commands or builtin operations) and dependency
edges.  The runner executes ready jobs on a bounded worker pool: CPU-heavy
builtins go to a process pool so they scale past the interpreter lock,
external commands and store writes run on threads, and all store writes are
funneled through the single-writer catalog lock.  Failed jobs retry with
exponential backoff; descendants of a permanently failed job are skipped.
Jobs whose declared outputs already exist with recorded content hashes are
not re-executed, which makes completed runs cheap no-ops.
"""

import hashlib
import heapq
import json
import os
import subprocess
import tempfile
import time
from collections import defaultdict
from concurrent.futures import (
    FIRST_COMPLETED,
    ProcessPoolExecutor,
    ThreadPoolExecutor,
    wait,
)
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import dsp
from .errors import NoInputs, SpecInvalid
from .events import EventDetection, detect_events_baseline
from .features import (
    extract_segment_features,
    onset_envelope,
    read_feature_file,
    write_feature_file,
)
from .index import CatalogRecord
from .wavio import AudioClip, decode_wav, resample_to_canonical

BACKOFF_BASE_S = 1.0


@dataclass(frozen=True)
class JobSpec:
    id: str
    builtin: str = None
    cmd: tuple = None  # argv prefix; inputs and a scratch dir are appended
    args: dict = field(default_factory=dict)
    inputs: tuple = ()
    outputs: tuple = ()
    retry_limit: int = 0
    timeout_s: float = None


@dataclass(frozen=True)
class DagSpec:
    jobs: tuple
    edges: tuple  # (parent_id, child_id) pairs

    def to_dict(self):
        out = {"jobs": [], "edges": [list(e) for e in self.edges]}
        for j in self.jobs:
            d = {"id": j.id}
            if j.builtin is not None:
                d["builtin"] = j.builtin
            if j.cmd is not None:
                d["cmd"] = list(j.cmd)
            if j.args:
                d["args"] = dict(j.args)
            if j.inputs:
                d["inputs"] = list(j.inputs)
            if j.outputs:
                d["outputs"] = list(j.outputs)
            if j.retry_limit:
                d["retry_limit"] = j.retry_limit
            if j.timeout_s is not None:
                d["timeout_s"] = j.timeout_s
            out["jobs"].append(d)
        return out

    @classmethod
    def from_dict(cls, d):
        jobs = []
        for j in d.get("jobs", []):
            jobs.append(
                JobSpec(
                    id=j["id"],
                    builtin=j.get("builtin"),
                    cmd=tuple(j["cmd"]) if "cmd" in j else None,
                    args=dict(j.get("args", {})),
                    inputs=tuple(j.get("inputs", ())),
                    outputs=tuple(j.get("outputs", ())),
                    retry_limit=int(j.get("retry_limit", 0)),
                    timeout_s=j.get("timeout_s"),
                )
            )
        edges = tuple((a, b) for a, b in d.get("edges", []))
        return cls(jobs=tuple(jobs), edges=edges)


@dataclass
class JobResult:
    job_id: str
    status: str  # "succeeded" | "failed" | "skipped"
    attempts: int
    wall_time_s: float
    output_hashes: dict
    reused: bool = False
    error: str = ""


# -- builtin operations (CPU side: pure file -> file, safe in a process pool)


def _load_clip(path):
    d = np.load(path)
    return AudioClip(
        video_id=str(d["video_id"]),
        sample_rate=int(d["rate"]),
        samples=np.asarray(d["samples"], dtype=np.float64),
    )


def _builtin_decode(args):
    with open(args["src"], "rb") as fh:
        data = fh.read()
    clip = resample_to_canonical(decode_wav(data, video_id=args["video_id"]))
    np.savez(args["out"], samples=clip.samples, rate=clip.sample_rate,
             video_id=clip.video_id)


def _builtin_melspec(args):
    clip = _load_clip(args["src"])
    np.save(args["out"], dsp.mel_spectrogram_db(clip.samples))


def _builtin_features(args):
    clip = _load_clip(args["src"])
    write_feature_file(args["out"], clip.video_id, extract_segment_features(clip))


def _builtin_events(args):
    clip = _load_clip(args["src"])
    events = [asdict(e) for e in detect_events_baseline(clip)]
    with open(args["out"], "w") as fh:
        json.dump(events, fh, sort_keys=True)


def _builtin_envelope(args):
    env = onset_envelope(np.load(args["src"]), video_id=args["video_id"])
    np.save(args["out"], env.values)


CPU_BUILTINS = {
    "decode": _builtin_decode,
    "melspec": _builtin_melspec,
    "features": _builtin_features,
    "events": _builtin_events,
    "envelope": _builtin_envelope,
}


# -- builtin operations (store side: run on the caller's catalog, one writer)


def _index_put(index, args):
    clip = _load_clip(args["samples"])
    video_id, feats = read_feature_file(args["features"])
    with open(args["events"]) as fh:
        events = [EventDetection(**d) for d in json.load(fh)]
    if not index.has_video(video_id):
        index.put_video(
            CatalogRecord(
                video_id=video_id,
                source_path=args["source"],
                duration_s=clip.duration_s,
                ingest_time=datetime.now(timezone.utc).isoformat(),
                feature_file=args["features"],
                envelope_file=args["envelope"],
                detector_runs=("baseline-v1",),
                counts={"segment": len(feats), "event": len(events), "visual": 0},
            )
        )
        if feats:
            index.put_segment_features(feats)
        if events:
            index.put_events(events)
    with open(args["out"], "w") as fh:
        json.dump(
            {"video_id": video_id, "segments": len(feats), "events": len(events)},
            fh, sort_keys=True,
        )


def _catalog_commit(index, args):
    for video_id in args["videos"]:
        index.get_video(video_id)  # raises UnknownVideo on a broken chain
    index.snapshot()
    with open(args["out"], "w") as fh:
        json.dump({"videos": sorted(args["videos"])}, fh, sort_keys=True)


INDEX_BUILTINS = {
    "index-put": _index_put,
    "catalog-commit": _catalog_commit,
}


# -- validation ----------------------------------------------------------


def validate_dag(spec):
    """Return a deterministic topological order or raise SpecInvalid.

    Cycles are reported as a node sequence, e.g. "cycle: a -> b -> a".
    """
    ids = [j.id for j in spec.jobs]
    seen = set()
    for jid in ids:
        if jid in seen:
            raise SpecInvalid(f"duplicate job id {jid!r}")
        seen.add(jid)
    for job in spec.jobs:
        if (job.builtin is None) == (job.cmd is None):
            raise SpecInvalid(f"job {job.id!r} needs exactly one of builtin/cmd")
        if job.builtin is not None and (
            job.builtin not in CPU_BUILTINS and job.builtin not in INDEX_BUILTINS
        ):
            raise SpecInvalid(f"job {job.id!r}: unknown builtin {job.builtin!r}")
    for a, b in spec.edges:
        for end in (a, b):
            if end not in seen:
                raise SpecInvalid(f"edge ({a!r}, {b!r}) references unknown node {end!r}")

    children = defaultdict(list)
    indegree = {jid: 0 for jid in ids}
    for a, b in spec.edges:
        children[a].append(b)
        indegree[b] += 1

    position = {jid: i for i, jid in enumerate(ids)}
    ready = [(position[jid], jid) for jid in ids if indegree[jid] == 0]
    heapq.heapify(ready)
    order = []
    remaining = dict(indegree)
    while ready:
        _, jid = heapq.heappop(ready)
        order.append(jid)
        for child in children[jid]:
            remaining[child] -= 1
            if remaining[child] == 0:
                heapq.heappush(ready, (position[child], child))
    if len(order) < len(ids):
        raise SpecInvalid("cycle: " + " -> ".join(_find_cycle(ids, children)))
    return order


def _find_cycle(ids, children):
    """One concrete cycle as [n0, ..., n0]; only called when one exists."""
    color = {jid: 0 for jid in ids}  # 0 new, 1 on stack, 2 done
    stack = []

    def visit(jid):
        color[jid] = 1
        stack.append(jid)
        for child in children[jid]:
            if color[child] == 1:
                return stack[stack.index(child):] + [child]
            if color[child] == 0:
                found = visit(child)
                if found:
                    return found
        stack.pop()
        color[jid] = 2
        return None

    for jid in ids:
        if color[jid] == 0:
            found = visit(jid)
            if found:
                return found
    raise AssertionError("no cycle found")


# -- execution -----------------------------------------------------------


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _hash_outputs(job):
    hashes = {}
    for path in job.outputs:
        if not os.path.exists(path):
            raise RuntimeError(f"job {job.id!r} did not produce {path}")
        hashes[path] = _sha256(path)
    return hashes


def _reusable(job, state):
    """True when every declared output still matches its recorded hash."""
    entry = state.get(job.id)
    if not entry or not job.outputs:
        return False
    recorded = entry.get("outputs", {})
    if set(recorded) != set(job.outputs):
        return False
    return all(
        os.path.exists(path) and _sha256(path) == digest
        for path, digest in recorded.items()
    )


def _run_cpu_builtin(name, args):
    t0 = time.perf_counter()
    CPU_BUILTINS[name](args)
    return time.perf_counter() - t0


def _run_cmd(job, scratch_dir):
    t0 = time.perf_counter()
    argv = [*job.cmd, *job.inputs, scratch_dir]
    proc = subprocess.run(
        argv, capture_output=True, text=True, timeout=job.timeout_s
    )
    if proc.returncode != 0:
        tail = proc.stderr.strip()[-300:]
        raise RuntimeError(f"exit code {proc.returncode}: {tail}")
    return time.perf_counter() - t0


class _EventLog:
    def __init__(self, path):
        self._fh = open(path, "a") if path else None

    def write(self, job_id, event):
        if self._fh is not None:
            line = json.dumps({"ts": time.time(), "job": job_id, "event": event})
            self._fh.write(line + "\n")
            self._fh.flush()

    def close(self):
        if self._fh is not None:
            self._fh.close()


def run_dag(
    spec,
    worker_count=4,
    *,
    index=None,
    scratch_dir=None,
    state_path=None,
    event_log_path=None,
    backoff_base_s=BACKOFF_BASE_S,
):
    """Execute a validated DagSpec; returns {job_id: JobResult}.

    `index` supplies the catalog for store-side builtins.  `state_path`
    remembers output hashes between runs so completed jobs are reused.
    """
    if worker_count < 1:
        raise SpecInvalid("worker_count must be >= 1")
    order = validate_dag(spec)
    jobs = {j.id: j for j in spec.jobs}
    for job in spec.jobs:
        if job.builtin in INDEX_BUILTINS and index is None:
            raise SpecInvalid(f"job {job.id!r} needs a catalog index")

    scratch_dir = scratch_dir or tempfile.mkdtemp(prefix="soundtrail-dag-")
    os.makedirs(scratch_dir, exist_ok=True)
    state_path = state_path or os.path.join(scratch_dir, "dag-state.json")
    state = {}
    if os.path.exists(state_path):
        with open(state_path) as fh:
            state = json.load(fh)

    position = {jid: i for i, jid in enumerate(order)}
    children = defaultdict(list)
    unmet = {jid: 0 for jid in jobs}
    for a, b in spec.edges:
        children[a].append(b)
        unmet[b] += 1

    log = _EventLog(event_log_path)
    results = {}
    attempts = defaultdict(int)
    walls = defaultdict(float)
    ready = [(position[jid], jid) for jid, n in unmet.items() if n == 0]
    heapq.heapify(ready)
    delayed = []  # (monotonic ready time, position, job_id)
    in_flight = {}  # future -> (job_id, dispatch time)

    def save_state():
        tmp = state_path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(state, fh, sort_keys=True)
        os.replace(tmp, state_path)

    def advance(jid):
        for child in children[jid]:
            unmet[child] -= 1
            if unmet[child] == 0 and child not in results:
                heapq.heappush(ready, (position[child], child))

    def skip_descendants(jid):
        queue = list(children[jid])
        while queue:
            node = queue.pop()
            if node in results:
                continue
            results[node] = JobResult(
                job_id=node, status="skipped", attempts=0,
                wall_time_s=0.0, output_hashes={},
            )
            log.write(node, "skip")
            queue.extend(children[node])

    cpu_pool = None
    if any(jobs[jid].builtin in CPU_BUILTINS for jid in jobs):
        cpu_pool = ProcessPoolExecutor(max_workers=worker_count)
    thread_pool = ThreadPoolExecutor(max_workers=worker_count)
    # store writes are funneled through one thread: one writer, in order
    index_pool = ThreadPoolExecutor(max_workers=1)

    def submit(job):
        if job.builtin in CPU_BUILTINS:
            return cpu_pool.submit(_run_cpu_builtin, job.builtin, job.args)
        if job.builtin in INDEX_BUILTINS:
            fn = INDEX_BUILTINS[job.builtin]
            return index_pool.submit(_timed, fn, index, job.args)
        return thread_pool.submit(_run_cmd, job, scratch_dir)

    try:
        while len(results) < len(jobs):
            now = time.monotonic()
            while delayed and delayed[0][0] <= now:
                _, pos, jid = heapq.heappop(delayed)
                heapq.heappush(ready, (pos, jid))
            while ready and len(in_flight) < worker_count:
                _, jid = heapq.heappop(ready)
                if jid in results:
                    continue
                job = jobs[jid]
                if attempts[jid] == 0 and _reusable(job, state):
                    results[jid] = JobResult(
                        job_id=jid, status="succeeded", attempts=0,
                        wall_time_s=0.0,
                        output_hashes=dict(state[jid]["outputs"]),
                        reused=True,
                    )
                    log.write(jid, "reuse")
                    advance(jid)
                    continue
                attempts[jid] += 1
                log.write(jid, "start")
                in_flight[submit(job)] = (jid, time.perf_counter())

            if not in_flight:
                if ready:
                    continue
                if delayed:
                    time.sleep(max(0.0, delayed[0][0] - time.monotonic()))
                    continue
                break  # all resolved

            timeout = None
            if delayed:
                timeout = max(0.0, delayed[0][0] - time.monotonic())
            done, _ = wait(in_flight, timeout=timeout, return_when=FIRST_COMPLETED)
            for fut in done:
                jid, t0 = in_flight.pop(fut)
                job = jobs[jid]
                walls[jid] += time.perf_counter() - t0
                error = fut.exception()
                if error is None:
                    try:
                        hashes = _hash_outputs(job)
                    except RuntimeError as exc:
                        error = exc
                if error is None:
                    state[jid] = {"outputs": hashes}
                    save_state()
                    results[jid] = JobResult(
                        job_id=jid, status="succeeded", attempts=attempts[jid],
                        wall_time_s=walls[jid], output_hashes=hashes,
                    )
                    log.write(jid, "success")
                    advance(jid)
                elif attempts[jid] <= job.retry_limit:
                    log.write(jid, "retry")
                    delay = backoff_base_s * (2.0 ** (attempts[jid] - 1))
                    heapq.heappush(
                        delayed, (time.monotonic() + delay, position[jid], jid)
                    )
                else:
                    results[jid] = JobResult(
                        job_id=jid, status="failed", attempts=attempts[jid],
                        wall_time_s=walls[jid], output_hashes={},
                        error=str(error),
                    )
                    log.write(jid, "failure")
                    skip_descendants(jid)
    finally:
        thread_pool.shutdown(wait=True)
        index_pool.shutdown(wait=True)
        if cpu_pool is not None:
            cpu_pool.shutdown(wait=True)
        log.close()
    return results


def _timed(fn, index, args):
    t0 = time.perf_counter()
    fn(index, args)
    return time.perf_counter() - t0


# -- the standard ingestion workflow -------------------------------------


def ingest_workflow(paths, work_dir, retry_limit=0):
    """Per-video chain decode -> melspec -> {features, events, envelope}
    -> index-put, joined by one catalog-commit barrier."""
    if not paths:
        raise NoInputs("no input videos")
    jobs = []
    edges = []
    put_ids = []
    video_ids = []
    for path in paths:
        video_id = os.path.splitext(os.path.basename(path))[0]
        if video_id in video_ids:
            raise SpecInvalid(f"duplicate video id {video_id!r}")
        video_ids.append(video_id)
        vdir = os.path.join(work_dir, video_id)
        os.makedirs(vdir, exist_ok=True)
        samples = os.path.join(vdir, "samples.npz")
        mel = os.path.join(vdir, "mel.npy")
        flaf = os.path.join(vdir, "features.flaf")
        events = os.path.join(vdir, "events.json")
        envelope = os.path.join(vdir, "envelope.npy")
        receipt = os.path.join(vdir, "receipt.json")

        def jid(stage):
            return f"{stage}:{video_id}"

        jobs += [
            JobSpec(id=jid("decode"), builtin="decode",
                    args={"src": path, "video_id": video_id, "out": samples},
                    inputs=(path,), outputs=(samples,), retry_limit=retry_limit),
            JobSpec(id=jid("melspec"), builtin="melspec",
                    args={"src": samples, "out": mel},
                    inputs=(samples,), outputs=(mel,), retry_limit=retry_limit),
            JobSpec(id=jid("features"), builtin="features",
                    args={"src": samples, "out": flaf},
                    inputs=(samples,), outputs=(flaf,), retry_limit=retry_limit),
            JobSpec(id=jid("events"), builtin="events",
                    args={"src": samples, "out": events},
                    inputs=(samples,), outputs=(events,), retry_limit=retry_limit),
            JobSpec(id=jid("envelope"), builtin="envelope",
                    args={"src": mel, "video_id": video_id, "out": envelope},
                    inputs=(mel,), outputs=(envelope,), retry_limit=retry_limit),
            JobSpec(id=jid("index-put"), builtin="index-put",
                    args={"samples": samples, "source": path, "features": flaf,
                          "events": events, "envelope": envelope, "out": receipt},
                    inputs=(samples, flaf, events, envelope),
                    outputs=(receipt,), retry_limit=retry_limit),
        ]
        edges += [
            (jid("decode"), jid("melspec")),
            (jid("melspec"), jid("features")),
            (jid("melspec"), jid("events")),
            (jid("melspec"), jid("envelope")),
            (jid("features"), jid("index-put")),
            (jid("events"), jid("index-put")),
            (jid("envelope"), jid("index-put")),
        ]
        put_ids.append(jid("index-put"))

    commit = os.path.join(work_dir, "commit.json")
    jobs.append(
        JobSpec(id="catalog-commit", builtin="catalog-commit",
                args={"videos": video_ids, "out": commit}, outputs=(commit,))
    )
    edges += [(put_id, "catalog-commit") for put_id in put_ids]
    return DagSpec(jobs=tuple(jobs), edges=tuple(edges))


def run_ingest(paths, index, work_dir, worker_count=4, **kwargs):
    """Build and run the ingestion workflow; returns {job_id: JobResult}."""
    spec = ingest_workflow(paths, work_dir)
    return run_dag(
        spec, worker_count, index=index, scratch_dir=work_dir, **kwargs
    )
