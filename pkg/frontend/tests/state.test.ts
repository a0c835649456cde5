import { describe, expect, it } from "vitest";

import { RequestGate } from "../src/api.js";
import {
  initialState,
  recordSearch,
  selectSegment,
  setCursor,
  setDurations,
  setFilter,
} from "../src/state.js";
import type { VideoRecord } from "../src/types.js";

import videosFixture from "./fixtures/videos.json";

function withDurations() {
  const durations = Object.fromEntries(
    (videosFixture as VideoRecord[]).map((v) => [v.video_id, v.duration_s]),
  );
  return setDurations(initialState(), durations);
}

describe("view state", () => {
  it("clamps the probability filter into [0, 1]", () => {
    const s = initialState();
    expect(setFilter(s, { minProbability: 1.7 }).filter.minProbability).toBe(1);
    expect(setFilter(s, { minProbability: -0.2 }).filter.minProbability).toBe(0);
    const labelOnly = setFilter(s, { label: "Speech" });
    expect(labelOnly.filter.label).toBe("Speech");
    expect(labelOnly.filter.minProbability).toBeUndefined();
  });

  it("rejects segment selections beyond the recorded video duration", () => {
    const s = withDurations(); // camera-east runs 12s, so segments 0 and 1 only
    const ok = selectSegment(s, { videoId: "camera-east", segmentIndex: 1 });
    expect(ok.selected).toEqual({ videoId: "camera-east", segmentIndex: 1 });
    expect(ok.activeVideo).toBe("camera-east");
    expect(() =>
      selectSegment(s, { videoId: "camera-east", segmentIndex: 2 }),
    ).toThrow(RangeError);
  });

  it("rejects negative segment indices", () => {
    expect(() =>
      selectSegment(initialState(), { videoId: "anything", segmentIndex: -1 }),
    ).toThrow(RangeError);
  });

  it("accepts selections on videos whose duration is unknown", () => {
    const s = selectSegment(initialState(), {
      videoId: "not-ingested-yet",
      segmentIndex: 40,
    });
    expect(s.selected?.segmentIndex).toBe(40);
  });

  it("keeps the shared cursor non-negative", () => {
    const s = initialState();
    expect(setCursor(s, -3).cursor).toBe(0);
    expect(setCursor(s, 4.5).cursor).toBe(4.5);
  });

  it("refuses to record a search when nothing is selected", () => {
    expect(() => recordSearch(initialState(), [])).toThrow(
      "no segment selected",
    );
  });
});

describe("request gate", () => {
  it("treats only the latest token per key as current", () => {
    const gate = new RequestGate();
    const first = gate.begin("events");
    const second = gate.begin("events");
    expect(gate.isCurrent("events", first)).toBe(false);
    expect(gate.isCurrent("events", second)).toBe(true);
  });

  it("tracks keys independently", () => {
    const gate = new RequestGate();
    const ev = gate.begin("events");
    const tl = gate.begin("timeline");
    gate.begin("timeline");
    expect(gate.isCurrent("events", ev)).toBe(true);
    expect(gate.isCurrent("timeline", tl)).toBe(false);
  });
});
