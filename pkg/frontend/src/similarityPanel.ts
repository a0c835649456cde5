/** Similarity results: API order preserved, per-group distances on demand.
 *
 * Rows carry the raw payload numbers; the only derived field is `isSelf`,
 * which compares hit coordinates with the query segment.
 */

import { escapeHtml, num } from "./html.js";
import type { SegmentSel } from "./state.js";
import type { SimilarHit } from "./types.js";

export interface SimilarityRow {
  rank: number;
  videoId: string;
  segmentIndex: number;
  startS: number;
  lenS: number;
  fusedScore: number;
  isSelf: boolean;
  distances: Record<string, number>;
  expanded: boolean;
}

export function buildSimilarityPanel(
  hits: readonly SimilarHit[],
  query: SegmentSel,
): SimilarityRow[] {
  return hits.map((h) => ({
    rank: h.rank,
    videoId: h.video_id,
    segmentIndex: h.segment_index,
    startS: h.start_s,
    lenS: h.len_s,
    fusedScore: h.fused_rank_score,
    isSelf:
      h.video_id === query.videoId && h.segment_index === query.segmentIndex,
    distances: h.group_distances,
    expanded: false,
  }));
}

export function toggleDistances(
  rows: readonly SimilarityRow[],
  rank: number,
): SimilarityRow[] {
  return rows.map((row) =>
    row.rank === rank ? { ...row, expanded: !row.expanded } : row,
  );
}

function renderDistances(distances: Record<string, number>): string {
  return (
    '<dl class="distances">' +
    Object.entries(distances)
      .map(
        ([group, value]) =>
          `<dt>${escapeHtml(group)}</dt><dd>${num(value)}</dd>`,
      )
      .join("") +
    "</dl>"
  );
}

export function renderSimilarityPanel(rows: readonly SimilarityRow[]): string {
  if (rows.length === 0) {
    return '<p class="empty">no similarity results yet</p>';
  }
  return (
    '<ol class="similar">' +
    rows
      .map(
        (row) =>
          `<li class="${row.isSelf ? "hit self" : "hit"}" ` +
          `data-action="open-hit" data-video="${escapeHtml(row.videoId)}" ` +
          `data-segment="${num(row.segmentIndex)}">` +
          `<span class="rank">#${num(row.rank)}</span> ` +
          `<span class="video">${escapeHtml(row.videoId)}</span> ` +
          `<span class="segment">seg ${num(row.segmentIndex)} ` +
          `(${num(row.startS)}s)</span> ` +
          `<span class="score">${row.fusedScore.toFixed(2)}</span>` +
          (row.isSelf ? ' <span class="self-badge">self</span>' : "") +
          ` <button data-action="toggle-distances" data-rank="${num(row.rank)}">` +
          `${row.expanded ? "hide" : "show"} distances</button>` +
          (row.expanded ? renderDistances(row.distances) : "") +
          `</li>`,
      )
      .join("") +
    "</ol>"
  );
}

export function renderBreadcrumb(steps: readonly SegmentSel[]): string {
  if (steps.length === 0) {
    return "";
  }
  return (
    '<nav class="breadcrumb">' +
    steps
      .map(
        (step) =>
          `<span class="step">${escapeHtml(step.videoId)}/` +
          `${num(step.segmentIndex)}</span>`,
      )
      .join(" → ") +
    "</nav>"
  );
}
