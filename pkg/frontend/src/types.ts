/** JSON payload shapes served by the indexing engine's HTTP API.
 *
 * Field names mirror the wire format exactly; the UI never renames or
 * recomputes values, so every number on screen traces back to one of
 * these payloads.
 */

export interface VideoRecord {
  video_id: string;
  source_path: string;
  duration_s: number;
  ingest_time: string;
  feature_file: string;
  envelope_file: string;
  detector_runs: string[];
  counts: Record<string, number>;
}

export interface EventItem {
  video_id: string;
  t_start_s: number;
  t_end_s: number;
  label: string;
  probability: number;
  detector_id: string;
}

export interface TimelineAnnotation {
  t_start_s: number;
  t_end_s: number;
  kind: "segment" | "event" | "visual";
  label: string;
  detail: Record<string, unknown>;
}

export interface SimilarHit {
  rank: number;
  video_id: string;
  segment_index: number;
  start_s: number;
  len_s: number;
  fused_rank_score: number;
  group_distances: Record<string, number>;
}

export interface SyncCluster {
  cluster_id: string;
  members: string[];
  reference: string;
  member_offsets: Record<string, number>;
  playback_delays: Record<string, number>;
}

export interface ProbabilityCurve {
  video_id: string;
  label: string;
  points: [number, number][];
}

export interface IngestJobSummary {
  status: string;
  attempts: number;
  reused: boolean;
  error?: string;
}

export interface IngestRun {
  run_id: string;
  status: "running" | "succeeded" | "failed";
  jobs?: Record<string, IngestJobSummary>;
  error?: string;
}

export interface VisualIngestResult {
  accepted: number;
  rejected: { line: number; reason: string }[];
}

export interface ErrorBody {
  status: number;
  code: string;
  message: string;
}
