/** Replayable UI state: every view renders from this object alone.
 *
 * Transitions are pure functions returning new state, so a session is a
 * fold over the action history. The similarity breadcrumb grows only
 * through `recordSearch`; opening a hit moves the selection without
 * truncating the chain, while a fresh manual selection starts over.
 */

import type { EventItem, SimilarHit } from "./types.js";

export const SEGMENT_LEN_S = 6;
export const EVENT_CONTEXT_S = 15;

export interface SegmentSel {
  videoId: string;
  segmentIndex: number;
}

export interface TimelineWindow {
  from: number;
  to: number;
}

export interface EventFilter {
  label?: string;
  minProbability?: number;
}

export interface ViewState {
  readonly activeVideo?: string;
  readonly durations: Readonly<Record<string, number>>;
  readonly window?: TimelineWindow;
  readonly filter: EventFilter;
  readonly selected?: SegmentSel;
  readonly results: readonly SimilarHit[];
  readonly breadcrumb: readonly SegmentSel[];
  readonly activeCluster?: string;
  readonly cursor: number;
}

export function initialState(durations: Record<string, number> = {}): ViewState {
  return { durations, filter: {}, results: [], breadcrumb: [], cursor: 0 };
}

export function setDurations(
  state: ViewState,
  durations: Record<string, number>,
): ViewState {
  return { ...state, durations };
}

export function setFilter(state: ViewState, filter: EventFilter): ViewState {
  const minProbability =
    filter.minProbability === undefined
      ? undefined
      : Math.min(1, Math.max(0, filter.minProbability));
  return { ...state, filter: { ...filter, minProbability } };
}

export function centeredWindow(
  tS: number,
  contextS: number = EVENT_CONTEXT_S,
): TimelineWindow {
  return { from: Math.max(0, tS - contextS), to: tS + contextS };
}

/** Clicking an event opens its video's timeline centered on the event. */
export function openEvent(state: ViewState, event: EventItem): ViewState {
  return {
    ...state,
    activeVideo: event.video_id,
    window: centeredWindow(event.t_start_s),
  };
}

/** Manual segment selection: starts a new similarity chain. */
export function selectSegment(state: ViewState, sel: SegmentSel): ViewState {
  if (sel.segmentIndex < 0) {
    throw new RangeError(`segment index ${sel.segmentIndex} is negative`);
  }
  const duration = state.durations[sel.videoId];
  if (duration !== undefined && sel.segmentIndex * SEGMENT_LEN_S >= duration) {
    throw new RangeError(
      `segment ${sel.segmentIndex} starts at ` +
        `${sel.segmentIndex * SEGMENT_LEN_S}s, beyond the ` +
        `${duration}s video ${sel.videoId}`,
    );
  }
  return {
    ...state,
    activeVideo: sel.videoId,
    selected: sel,
    results: [],
    breadcrumb: [],
  };
}

/** A similarity search ran for the current selection: append it to the
 * breadcrumb (unless it is already the latest step) and keep the hits. */
export function recordSearch(
  state: ViewState,
  hits: readonly SimilarHit[],
): ViewState {
  const query = state.selected;
  if (!query) {
    throw new Error("no segment selected to search from");
  }
  const last = state.breadcrumb[state.breadcrumb.length - 1];
  const repeat =
    last !== undefined &&
    last.videoId === query.videoId &&
    last.segmentIndex === query.segmentIndex;
  return {
    ...state,
    results: hits,
    breadcrumb: repeat ? state.breadcrumb : [...state.breadcrumb, query],
  };
}

/** Clicking a hit re-centers on that video/segment; the chain continues,
 * so the next `recordSearch` adds this segment as the following step. */
export function openHit(state: ViewState, hit: SimilarHit): ViewState {
  return {
    ...state,
    activeVideo: hit.video_id,
    selected: { videoId: hit.video_id, segmentIndex: hit.segment_index },
    window: centeredWindow(hit.start_s),
  };
}

export function selectCluster(state: ViewState, clusterId: string): ViewState {
  return { ...state, activeCluster: clusterId };
}

export function setCursor(state: ViewState, cursor: number): ViewState {
  return { ...state, cursor: Math.max(0, cursor) };
}
