/** Aligned multi-track lanes for one sync cluster.
 *
 * The shared cursor lives on the cluster's scene clock; each member's
 * local time is `cursor - offset` with the offsets served by the API.
 * Lanes are drawn shifted right by their offset, so simultaneous scene
 * moments line up vertically.
 */

import { escapeHtml, num } from "./html.js";
import type { SyncCluster } from "./types.js";

export type LaneStatus = "recording" | "not-yet-recording" | "ended";

export interface Lane {
  videoId: string;
  offsetS: number;
  localTS: number;
  status: LaneStatus;
  playbackDelayS: number;
  isReference: boolean;
}

export function buildLanes(
  cluster: SyncCluster,
  cursorS: number,
  durations: Record<string, number> = {},
): Lane[] {
  return cluster.members.map((videoId) => {
    const offsetS = cluster.member_offsets[videoId] ?? 0;
    const localTS = cursorS - offsetS;
    const duration = durations[videoId];
    let status: LaneStatus = "recording";
    if (localTS < 0) {
      status = "not-yet-recording";
    } else if (duration !== undefined && localTS > duration) {
      status = "ended";
    }
    return {
      videoId,
      offsetS,
      localTS,
      status,
      playbackDelayS: cluster.playback_delays[videoId] ?? 0,
      isReference: videoId === cluster.reference,
    };
  });
}

export function renderSyncLanes(
  lanes: readonly Lane[],
  pxPerSecond = 12,
): string {
  return (
    '<div class="sync-lanes">' +
    lanes
      .map((lane) => {
        const label =
          lane.status === "not-yet-recording"
            ? "not yet recording"
            : `local t = ${num(lane.localTS)}s`;
        return (
          `<div class="lane status-${lane.status}` +
          `${lane.isReference ? " reference" : ""}" ` +
          `style="margin-left:${lane.offsetS * pxPerSecond}px" ` +
          `data-video="${escapeHtml(lane.videoId)}">` +
          `<span class="video">${escapeHtml(lane.videoId)}</span> ` +
          `<span class="offset">+${num(lane.offsetS)}s</span> ` +
          `<span class="local">${label}</span>` +
          `</div>`
        );
      })
      .join("") +
    "</div>"
  );
}
