/** Typed client for the indexing engine's HTTP API.
 *
 * Thin by design: it builds URLs, decodes JSON, and converts the service's
 * error envelope into `ApiError`. It never reorders, filters, or reshapes
 * payloads.
 */

import { resolveBaseUrl } from "./config.js";
import type {
  ErrorBody,
  EventItem,
  IngestRun,
  ProbabilityCurve,
  SimilarHit,
  SyncCluster,
  TimelineAnnotation,
  VideoRecord,
  VisualIngestResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface EventQuery {
  label?: string;
  minProbability?: number;
  video?: string;
  from?: number;
  to?: number;
  limit?: number;
  offset?: number;
}

export interface TimelineQuery {
  from?: number;
  to?: number;
  limit?: number;
  offset?: number;
}

interface RequestInitLike {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}

interface ResponseLike {
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (url: string, init?: RequestInitLike) => Promise<ResponseLike>;

type Params = Record<string, string | number | boolean | undefined>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string = resolveBaseUrl(), fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? (globalThis.fetch.bind(globalThis) as FetchLike);
  }

  url(path: string, params?: Params): string {
    const search = new URLSearchParams();
    for (const [key, value] of Object.entries(params ?? {})) {
      if (value !== undefined) {
        search.set(key, String(value));
      }
    }
    const qs = search.toString();
    return `${this.base}${path}${qs ? `?${qs}` : ""}`;
  }

  private async request<T>(path: string, params?: Params, init?: RequestInitLike): Promise<T> {
    const resp = await this.fetchFn(this.url(path, params), init);
    const body = (await resp.json()) as unknown;
    if (resp.status >= 400) {
      const err = body as Partial<ErrorBody>;
      throw new ApiError(
        err.status ?? resp.status,
        err.code ?? "internal_error",
        err.message ?? `request failed with status ${resp.status}`,
      );
    }
    return body as T;
  }

  listVideos(limit?: number, offset?: number): Promise<VideoRecord[]> {
    return this.request("/videos", { limit, offset });
  }

  timeline(videoId: string, query: TimelineQuery = {}): Promise<TimelineAnnotation[]> {
    return this.request(`/videos/${encodeURIComponent(videoId)}/timeline`, {
      from: query.from,
      to: query.to,
      limit: query.limit,
      offset: query.offset,
    });
  }

  events(query: EventQuery = {}): Promise<EventItem[]> {
    return this.request("/events", {
      label: query.label,
      min_p: query.minProbability,
      video: query.video,
      from: query.from,
      to: query.to,
      limit: query.limit,
      offset: query.offset,
    });
  }

  similar(
    videoId: string,
    tS: number,
    k = 10,
    excludeSelf = false,
  ): Promise<SimilarHit[]> {
    return this.request("/similar", {
      video: videoId,
      t: tS,
      k,
      exclude_self: excludeSelf ? true : undefined,
    });
  }

  syncClusters(): Promise<SyncCluster[]> {
    return this.request("/sync/clusters");
  }

  curve(videoId: string, label: string): Promise<ProbabilityCurve> {
    const path =
      `/videos/${encodeURIComponent(videoId)}/events/` +
      `${encodeURIComponent(label)}/curve`;
    return this.request(path);
  }

  startIngest(paths: string[]): Promise<IngestRun> {
    return this.request("/ingest", undefined, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ paths }),
    });
  }

  ingestStatus(runId: string): Promise<IngestRun> {
    return this.request(`/ingest/${encodeURIComponent(runId)}`);
  }

  postVisual(videoId: string, lines: string): Promise<VisualIngestResult> {
    return this.request(`/visual/${encodeURIComponent(videoId)}`, undefined, {
      method: "POST",
      body: lines,
    });
  }
}

/** Serializes concurrent fetches per view: only the most recently issued
 * token is current, so responses to superseded requests are discarded. */
export class RequestGate {
  private readonly latest = new Map<string, number>();

  begin(key: string): number {
    const token = (this.latest.get(key) ?? 0) + 1;
    this.latest.set(key, token);
    return token;
  }

  isCurrent(key: string, token: number): boolean {
    return this.latest.get(key) === token;
  }
}
