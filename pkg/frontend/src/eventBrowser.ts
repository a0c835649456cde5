/** Ranked event list: a 1:1 projection of the /events payload.
 *
 * The service already filtered and ordered the events; this module only
 * reshapes field names for rendering and never sorts or drops rows.
 */

import { escapeHtml, num } from "./html.js";
import type { EventItem } from "./types.js";

export interface EventRow {
  videoId: string;
  label: string;
  probability: number;
  tStartS: number;
  tEndS: number;
  detectorId: string;
}

export type EventBrowserView =
  | { kind: "loading" }
  | { kind: "error"; message: string; canRetry: true }
  | { kind: "empty" }
  | { kind: "ready"; rows: EventRow[] };

export function buildEventBrowser(
  payload: readonly EventItem[] | undefined,
  error?: Error,
): EventBrowserView {
  if (error) {
    return { kind: "error", message: error.message, canRetry: true };
  }
  if (payload === undefined) {
    return { kind: "loading" };
  }
  if (payload.length === 0) {
    return { kind: "empty" };
  }
  return {
    kind: "ready",
    rows: payload.map((e) => ({
      videoId: e.video_id,
      label: e.label,
      probability: e.probability,
      tStartS: e.t_start_s,
      tEndS: e.t_end_s,
      detectorId: e.detector_id,
    })),
  };
}

export function renderEventBrowser(view: EventBrowserView): string {
  switch (view.kind) {
    case "loading":
      return '<p class="loading">loading events…</p>';
    case "error":
      return (
        `<p class="error">service error: ${escapeHtml(view.message)}</p>` +
        '<button data-action="retry-events">retry</button>'
      );
    case "empty":
      return '<p class="empty">no events match the current filter</p>';
    case "ready":
      return (
        '<ol class="events">' +
        view.rows
          .map(
            (row) =>
              `<li data-action="open-event" data-video="${escapeHtml(row.videoId)}" ` +
              `data-t="${num(row.tStartS)}">` +
              `<strong>${escapeHtml(row.label)}</strong> ` +
              `<span class="prob">${row.probability.toFixed(2)}</span> ` +
              `<span class="video">${escapeHtml(row.videoId)}</span> ` +
              `<span class="when">${num(row.tStartS)}–${num(row.tEndS)}s</span>` +
              `</li>`,
          )
          .join("") +
        "</ol>"
      );
  }
}
