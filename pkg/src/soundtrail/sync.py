"""Cross-recording time alignment from onset envelopes.

Pairwise offsets come from an exhaustive lag scan minimizing the mean
absolute envelope difference; accepted pairs form a graph whose connected
components are clusters of mutually synchronous recordings.  Offsets within
a cluster are reconciled by least squares over the whole graph, which makes
every cycle exactly consistent.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InsufficientOverlap
from .similarity import query_similar

MIN_ENVELOPE_S = 5.0
MIN_OVERLAP_S = 3.0
DEFAULT_MAX_LAG_S = 15.0
DEFAULT_SIM_RANK_K = 5
DEFAULT_CONF_THRESHOLD = 0.6


@dataclass(frozen=True)
class OffsetEstimate:
    """Pairwise alignment: content at t in a matches t - offset_s in b.

    Equivalently offset_s is b's start time minus a's start time on the
    shared scene clock.
    """

    video_a: str
    video_b: str
    offset_s: float
    cost: float
    confidence: float


@dataclass
class SyncCluster:
    cluster_id: str
    members: tuple
    reference: str
    member_offsets: dict


def _estimate_canonical(env_a, env_b, max_lag_s):
    rate = env_a.rate
    if env_b.rate != rate:
        raise ValueError("envelopes must share one frame rate")
    min_frames = int(math.ceil(MIN_ENVELOPE_S * rate))
    if len(env_a.values) < min_frames or len(env_b.values) < min_frames:
        raise InsufficientOverlap(
            f"envelopes must cover >= {MIN_ENVELOPE_S} s for alignment"
        )
    max_lag = int(round(max_lag_s * rate))
    min_overlap = int(math.ceil(MIN_OVERLAP_S * rate))
    costs = _kernels.lag_costs(env_a.values, env_b.values, max_lag, min_overlap)
    valid = np.nonzero(np.isfinite(costs))[0]
    if len(valid) == 0:
        raise InsufficientOverlap(
            f"no lag keeps >= {MIN_OVERLAP_S} s of envelope overlap"
        )
    # ties: prefer the smallest |lag|, then the earlier lag
    best_k = min(valid, key=lambda k: (costs[k], abs(k - max_lag), k - max_lag))
    cost_best = float(costs[best_k])
    median = float(np.median(costs[valid]))
    confidence = 0.0 if median <= 0.0 else min(1.0, max(0.0, 1.0 - cost_best / median))
    return OffsetEstimate(
        video_a=env_a.video_id,
        video_b=env_b.video_id,
        offset_s=float(best_k - max_lag) / rate,
        cost=cost_best,
        confidence=confidence,
    )


def estimate_offset(env_a, env_b, max_lag_s=DEFAULT_MAX_LAG_S):
    """Best integer-lag offset between two onset envelopes.

    Antisymmetric by construction: the scan always runs in one canonical
    video-id order, so estimate(b, a) is exactly the negation of
    estimate(a, b).
    """
    if env_a.video_id > env_b.video_id:
        flipped = _estimate_canonical(env_b, env_a, max_lag_s)
        return OffsetEstimate(
            video_a=env_a.video_id,
            video_b=env_b.video_id,
            offset_s=-flipped.offset_s,
            cost=flipped.cost,
            confidence=flipped.confidence,
        )
    return _estimate_canonical(env_a, env_b, max_lag_s)


def _candidate_pairs(corpus, k):
    """Video pairs sharing at least one top-k similarity hit."""
    pairs = set()
    for feats in corpus:
        hits = query_similar(feats, k=k, corpus=corpus, exclude_self_video=True)
        for hit in hits:
            pair = tuple(sorted((feats.segment.video_id, hit.segment.video_id)))
            pairs.add(pair)
    return sorted(pairs)


def _components(videos, edges):
    adjacency = {v: [] for v in videos}
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    seen = set()
    components = []
    for root in videos:
        if root in seen:
            continue
        comp = []
        stack = [root]
        seen.add(root)
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in sorted(adjacency[v]):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        components.append(sorted(comp))
    return components


def _reconcile_offsets(members, edges):
    """Least-squares node potentials from pairwise offset measurements.

    Solves x_b - x_a = offset_ab over all accepted edges with the first
    member pinned to 0, then shifts so the earliest member sits at 0.
    Derived from potentials, every cycle sums to exactly zero.
    """
    index = {v: i for i, v in enumerate(members)}
    n = len(members)
    rows = [np.zeros(n)]
    rhs = [0.0]
    rows[0][0] = 1.0  # gauge: pin the first member
    for (a, b), offset in sorted(edges.items()):
        row = np.zeros(n)
        row[index[a]] = -1.0
        row[index[b]] = 1.0
        rows.append(row)
        rhs.append(offset)
    x, *_ = np.linalg.lstsq(np.vstack(rows), np.array(rhs), rcond=None)
    x = x - x.min()
    return {v: float(x[index[v]]) for v in members}


def build_sync_clusters(
    corpus,
    envelopes,
    sim_threshold_rank_k=DEFAULT_SIM_RANK_K,
    conf_threshold=DEFAULT_CONF_THRESHOLD,
    max_lag_s=DEFAULT_MAX_LAG_S,
):
    """Cluster mutually synchronous videos.

    corpus: FeatureCorpus with all segment features.
    envelopes: {video_id: OnsetEnvelope} for the same videos.
    Candidate pairs come from shared top-k similarity hits; an edge is
    accepted when the offset estimate's confidence clears conf_threshold.
    Every video lands in exactly one cluster; isolated ones are singletons.
    """
    videos = sorted(envelopes)
    if not videos:
        return []

    edges = {}
    for a, b in _candidate_pairs(corpus, sim_threshold_rank_k):
        if a not in envelopes or b not in envelopes:
            continue
        try:
            est = estimate_offset(envelopes[a], envelopes[b], max_lag_s)
        except InsufficientOverlap:
            continue
        if est.confidence >= conf_threshold:
            edges[(a, b)] = est.offset_s

    clusters = []
    for members in _components(videos, edges):
        member_edges = {
            pair: off for pair, off in edges.items()
            if pair[0] in members and pair[1] in members
        }
        if len(members) == 1:
            offsets = {members[0]: 0.0}
        else:
            offsets = _reconcile_offsets(members, member_edges)
        reference = min(members, key=lambda v: (offsets[v], v))
        clusters.append(
            SyncCluster(
                cluster_id=f"cluster:{members[0]}",
                members=tuple(members),
                reference=reference,
                member_offsets=offsets,
            )
        )
    clusters.sort(key=lambda c: c.members[0])
    return clusters


def playback_schedule(cluster):
    """Start delays so all members hit shared scene time together.

    The latest-starting member plays immediately; everyone else waits by
    the difference: delay_i = max(offsets) - offset_i.
    """
    latest = max(cluster.member_offsets.values())
    return [
        (video_id, latest - cluster.member_offsets[video_id])
        for video_id in cluster.members
    ]
