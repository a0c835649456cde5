/** Browser bootstrap: wires the API client, view state, and renderers.
 *
 * All data flows one way: fetch -> ViewState -> render. Responses that
 * arrive after a newer request for the same panel are discarded via
 * RequestGate, so the screen always reflects the latest query.
 */

import { ApiClient, RequestGate } from "./api.js";
import { buildEventBrowser, renderEventBrowser } from "./eventBrowser.js";
import {
  buildSimilarityPanel,
  renderBreadcrumb,
  renderSimilarityPanel,
  toggleDistances,
  type SimilarityRow,
} from "./similarityPanel.js";
import * as st from "./state.js";
import { buildLanes, renderSyncLanes } from "./syncLanes.js";
import { buildTimeline, renderTimeline } from "./timelineView.js";
import type { SyncCluster } from "./types.js";

const client = new ApiClient();
const gate = new RequestGate();

let state = st.initialState();
let similarityRows: SimilarityRow[] = [];
let clusters: SyncCluster[] = [];

function panel(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing panel #${id}`);
  }
  return el;
}

async function refreshEvents(): Promise<void> {
  const token = gate.begin("events");
  panel("events").innerHTML = renderEventBrowser({ kind: "loading" });
  try {
    const events = await client.events({
      label: state.filter.label,
      minProbability: state.filter.minProbability,
    });
    if (!gate.isCurrent("events", token)) {
      return;
    }
    panel("events").innerHTML = renderEventBrowser(buildEventBrowser(events));
  } catch (err) {
    if (!gate.isCurrent("events", token)) {
      return;
    }
    panel("events").innerHTML = renderEventBrowser(
      buildEventBrowser(undefined, err as Error),
    );
  }
}

async function refreshTimeline(): Promise<void> {
  const video = state.activeVideo;
  const win = state.window;
  if (!video || !win) {
    return;
  }
  const token = gate.begin("timeline");
  const annotations = await client.timeline(video, {
    from: win.from,
    to: win.to,
  });
  if (!gate.isCurrent("timeline", token)) {
    return;
  }
  panel("timeline").innerHTML =
    `<h3>${video}</h3>` +
    renderTimeline(buildTimeline(annotations, win), win, state.cursor);
}

async function runSearch(): Promise<void> {
  const sel = state.selected;
  if (!sel) {
    return;
  }
  const token = gate.begin("similar");
  const hits = await client.similar(
    sel.videoId,
    sel.segmentIndex * st.SEGMENT_LEN_S,
  );
  if (!gate.isCurrent("similar", token)) {
    return;
  }
  state = st.recordSearch(state, hits);
  similarityRows = buildSimilarityPanel(hits, sel);
  renderSimilarity();
}

function renderSimilarity(): void {
  panel("similar").innerHTML =
    renderBreadcrumb(state.breadcrumb) + renderSimilarityPanel(similarityRows);
}

async function refreshClusters(): Promise<void> {
  const token = gate.begin("clusters");
  clusters = await client.syncClusters();
  if (!gate.isCurrent("clusters", token)) {
    return;
  }
  renderClusterLanes();
}

function renderClusterLanes(): void {
  const active =
    clusters.find((c) => c.cluster_id === state.activeCluster) ?? clusters[0];
  if (!active) {
    panel("sync").innerHTML = '<p class="empty">no sync clusters built</p>';
    return;
  }
  panel("sync").innerHTML =
    `<h3>${active.cluster_id} · cursor ${state.cursor}s</h3>` +
    renderSyncLanes(buildLanes(active, state.cursor, { ...state.durations }));
}

function onClick(event: MouseEvent): void {
  const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!target) {
    return;
  }
  const action = target.dataset["action"];
  if (action === "retry-events") {
    void refreshEvents();
  } else if (action === "open-event") {
    const video = target.dataset["video"] ?? "";
    const t = Number(target.dataset["t"] ?? "0");
    state = st.openEvent(state, {
      video_id: video,
      t_start_s: t,
      t_end_s: t,
      label: "",
      probability: 0,
      detector_id: "",
    });
    state = st.selectSegment(state, {
      videoId: video,
      segmentIndex: Math.floor(t / st.SEGMENT_LEN_S),
    });
    void refreshTimeline();
  } else if (action === "open-hit") {
    const video = target.dataset["video"] ?? "";
    const segment = Number(target.dataset["segment"] ?? "0");
    const hit = state.results.find(
      (h) => h.video_id === video && h.segment_index === segment,
    );
    if (hit) {
      state = st.openHit(state, hit);
      void refreshTimeline();
    }
  } else if (action === "toggle-distances") {
    similarityRows = toggleDistances(
      similarityRows,
      Number(target.dataset["rank"] ?? "0"),
    );
    renderSimilarity();
  } else if (action === "search-similar") {
    void runSearch();
  }
}

function onFilterSubmit(event: Event): void {
  event.preventDefault();
  const form = event.target as HTMLFormElement;
  const data = new FormData(form);
  const label = String(data.get("label") ?? "").trim();
  const minP = String(data.get("min_p") ?? "").trim();
  state = st.setFilter(state, {
    label: label || undefined,
    minProbability: minP ? Number(minP) : undefined,
  });
  void refreshEvents();
}

async function boot(): Promise<void> {
  document.body.addEventListener("click", onClick);
  document
    .getElementById("filter-form")
    ?.addEventListener("submit", onFilterSubmit);
  const videos = await client.listVideos();
  state = st.setDurations(
    state,
    Object.fromEntries(videos.map((v) => [v.video_id, v.duration_s])),
  );
  await Promise.all([refreshEvents(), refreshClusters()]);
}

if (typeof document !== "undefined" && document.getElementById("events")) {
  void boot();
}
