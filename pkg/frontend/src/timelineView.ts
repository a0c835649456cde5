/** Fused per-video timeline: segments, acoustic events, visual detections.
 *
 * Annotation order is the payload order; geometry maps payload times into
 * the current window without altering them.
 */

import { escapeHtml, num } from "./html.js";
import type { TimelineWindow } from "./state.js";
import type { TimelineAnnotation } from "./types.js";

export interface TimelineRow {
  kind: TimelineAnnotation["kind"];
  label: string;
  tStartS: number;
  tEndS: number;
  leftPct: number;
  widthPct: number;
}

export function buildTimeline(
  annotations: readonly TimelineAnnotation[],
  window: TimelineWindow,
): TimelineRow[] {
  const span = window.to - window.from;
  return annotations.map((a) => {
    const left = ((a.t_start_s - window.from) / span) * 100;
    const right = ((a.t_end_s - window.from) / span) * 100;
    const leftPct = Math.min(100, Math.max(0, left));
    const widthPct = Math.min(100, Math.max(0, right)) - leftPct;
    return {
      kind: a.kind,
      label: a.label,
      tStartS: a.t_start_s,
      tEndS: a.t_end_s,
      leftPct,
      widthPct,
    };
  });
}

export function renderTimeline(
  rows: readonly TimelineRow[],
  window: TimelineWindow,
  cursor?: number,
): string {
  const marks = rows
    .map(
      (row) =>
        `<div class="annotation kind-${row.kind}" ` +
        `style="left:${row.leftPct}%;width:${row.widthPct}%" ` +
        `title="${escapeHtml(row.label)} ${num(row.tStartS)}–${num(row.tEndS)}s">` +
        `${escapeHtml(row.label)}</div>`,
    )
    .join("");
  const span = window.to - window.from;
  const cursorMark =
    cursor === undefined || cursor < window.from || cursor > window.to
      ? ""
      : `<div class="cursor" style="left:${((cursor - window.from) / span) * 100}%"></div>`;
  return (
    `<div class="timeline" data-from="${num(window.from)}" data-to="${num(window.to)}">` +
    marks +
    cursorMark +
    "</div>"
  );
}
