"""Sub-segment similarity: per-group distances and rank-level late fusion.

Features are never normalized across groups; instead each unit group (the
7 SSD statistics and RP) is ranked separately and the ranks are fused,
which makes the final ordering invariant under any strictly increasing
rescaling of a single group's distances.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MissingGroup, UnknownSegment
from .features import (
    FEATURE_VERSION,
    RP_BINS,
    RP_DIM,
    REDUCED_BANDS,
    SSD_DIM,
    SSD_STATS,
    SegmentFeatures,
)

SSD_GROUPS = tuple(f"ssd.{s}" for s in SSD_STATS)
ALL_GROUPS = SSD_GROUPS + ("rp",)


@dataclass
class SimilarityHit:
    segment: object  # SegmentRef
    group_distances: dict
    fused_rank_score: float
    rank: int


def grouped_ssd_distances(a, b):
    """Euclidean distance per statistic group (24 values each), no mixing."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape[0] != SSD_DIM or b.shape[0] != SSD_DIM:
        raise DimensionMismatch(f"SSD vectors must have {SSD_DIM} values")
    out = {}
    for i, name in enumerate(SSD_GROUPS):
        d = a[i * REDUCED_BANDS:(i + 1) * REDUCED_BANDS] - b[i * REDUCED_BANDS:(i + 1) * REDUCED_BANDS]
        out[name] = float(np.sqrt(np.dot(d, d)))
    return out


def correlation_distance(a, b):
    """1 - Pearson correlation, in [0, 2].

    Zero-variance guard: identical vectors -> 0, otherwise 1.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape[0] != b.shape[0] or a.shape[0] < 2:
        raise DimensionMismatch("vectors must share a length of at least 2")
    ac = a - a.mean()
    bc = b - b.mean()
    na = np.sqrt(np.dot(ac, ac))
    nb = np.sqrt(np.dot(bc, bc))
    if na == 0.0 or nb == 0.0:
        return 0.0 if np.array_equal(a, b) else 1.0
    r = np.dot(ac, bc) / (na * nb)
    return float(min(2.0, max(0.0, 1.0 - r)))


def average_ranks(values):
    """Ascending 1-based ranks; ties share the average of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j + 2) / 2.0  # mean of 1-based positions
        i = j + 1
    return ranks


def late_fuse(candidates):
    """Fuse per-group distances into a single ranked hit list.

    candidates: list of (SegmentRef, {group: distance}) with all 8 groups
    present. The 7 SSD group ranks are averaged first so SSD and RP weigh
    equally; ties in the fused score break by (rp distance, segment key).
    """
    if not candidates:
        return []
    for _, dists in candidates:
        missing = [g for g in ALL_GROUPS if g not in dists]
        if missing:
            raise MissingGroup(f"missing distance groups: {missing}")
    per_group_ranks = {
        g: average_ranks([dists[g] for _, dists in candidates]) for g in ALL_GROUPS
    }
    ssd_rank = np.mean([per_group_ranks[g] for g in SSD_GROUPS], axis=0)
    fused = (ssd_rank + per_group_ranks["rp"]) / 2.0

    def sort_key(i):
        seg = candidates[i][0]
        return (fused[i], candidates[i][1]["rp"], seg.video_id, seg.segment_index)

    hits = []
    for rank, i in enumerate(sorted(range(len(candidates)), key=sort_key), start=1):
        seg, dists = candidates[i]
        hits.append(
            SimilarityHit(
                segment=seg,
                group_distances=dict(dists),
                fused_rank_score=float(fused[i]),
                rank=rank,
            )
        )
    return hits


class FeatureCorpus:
    """Indexed segment features in matrix form for exhaustive scans."""

    def __init__(self):
        self.segments = []
        self._ssd_rows = []
        self._rp_rows = []
        self._by_key = {}
        self._ssd = None
        self._rp = None

    def __len__(self):
        return len(self.segments)

    def add(self, feats):
        """Add one SegmentFeatures (replaces any previous entry for its key)."""
        key = (feats.segment.video_id, feats.segment.segment_index)
        rp_flat = np.asarray(feats.rp, dtype=np.float64).reshape(-1)
        ssd = np.asarray(feats.ssd, dtype=np.float64).reshape(-1)
        if ssd.shape[0] != SSD_DIM or rp_flat.shape[0] != RP_DIM:
            raise DimensionMismatch("feature dimensions do not match FLAF1 layout")
        if key in self._by_key:
            i = self._by_key[key]
            self._ssd_rows[i] = ssd
            self._rp_rows[i] = rp_flat
        else:
            self._by_key[key] = len(self.segments)
            self.segments.append(feats.segment)
            self._ssd_rows.append(ssd)
            self._rp_rows.append(rp_flat)
        self._ssd = self._rp = None

    def extend(self, feats_list):
        for f in feats_list:
            self.add(f)

    def _matrices(self):
        if self._ssd is None:
            self._ssd = np.vstack(self._ssd_rows) if self._ssd_rows else np.zeros((0, SSD_DIM))
            self._rp = np.vstack(self._rp_rows) if self._rp_rows else np.zeros((0, RP_DIM))
        return self._ssd, self._rp

    def _index_of(self, video_id, segment_index):
        try:
            return self._by_key[(video_id, segment_index)]
        except KeyError:
            raise UnknownSegment(f"segment {segment_index} of {video_id!r} not indexed") from None

    def lookup(self, video_id, segment_index):
        """Return the stored SegmentFeatures for one segment key."""
        i = self._index_of(video_id, segment_index)
        ssd, rp = self._matrices()
        return SegmentFeatures(
            segment=self.segments[i],
            ssd=ssd[i].copy(),
            rp=rp[i].reshape(REDUCED_BANDS, RP_BINS).copy(),
            feature_version=FEATURE_VERSION,
        )

    def __iter__(self):
        for seg in list(self.segments):
            yield self.lookup(seg.video_id, seg.segment_index)


def _query_arrays(query, corpus):
    if hasattr(query, "ssd"):  # ad-hoc SegmentFeatures
        return (
            np.asarray(query.ssd, dtype=np.float64).reshape(-1),
            np.asarray(query.rp, dtype=np.float64).reshape(-1),
            query.segment.video_id,
        )
    i = corpus._index_of(query.video_id, query.segment_index)
    ssd, rp = corpus._matrices()
    return ssd[i], rp[i], query.video_id


def query_similar(query, k, corpus, exclude_self_video=False):
    """Top-k hits for a query segment over the whole corpus.

    query is a SegmentRef (must be indexed) or an ad-hoc SegmentFeatures.
    exclude_self_video drops all segments of the query's own video.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(corpus) == 0:
        raise UnknownSegment("corpus is empty")
    q_ssd, q_rp, q_video = _query_arrays(query, corpus)
    ssd, rp = corpus._matrices()

    keep = [
        i for i, seg in enumerate(corpus.segments)
        if not (exclude_self_video and seg.video_id == q_video)
    ]
    if not keep:
        return []
    ssd = ssd[keep]
    rp = rp[keep]

    diff = ssd - q_ssd
    group_d = {}
    for gi, name in enumerate(SSD_GROUPS):
        block = diff[:, gi * REDUCED_BANDS:(gi + 1) * REDUCED_BANDS]
        group_d[name] = np.sqrt(np.einsum("ij,ij->i", block, block))

    rc = rp - rp.mean(axis=1, keepdims=True)
    qc = q_rp - q_rp.mean()
    norms = np.sqrt(np.einsum("ij,ij->i", rc, rc))
    qn = np.sqrt(np.dot(qc, qc))
    rp_d = np.empty(len(keep))
    ok = (norms > 0) & (qn > 0)
    rp_d[ok] = np.clip(1.0 - (rc[ok] @ qc) / (norms[ok] * qn), 0.0, 2.0)
    for i in np.nonzero(~ok)[0]:
        rp_d[i] = 0.0 if np.array_equal(rp[i], q_rp) else 1.0
    # exact copies must come out at literal zero, not FP noise
    rp_d[np.all(rp == q_rp, axis=1)] = 0.0

    candidates = [
        (
            corpus.segments[keep[i]],
            {**{g: float(group_d[g][i]) for g in SSD_GROUPS}, "rp": float(rp_d[i])},
        )
        for i in range(len(keep))
    ]
    hits = late_fuse(candidates)
    return hits[:min(k, len(hits))]
