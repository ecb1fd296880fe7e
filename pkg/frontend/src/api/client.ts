/** Typed HTTP client for the particle service.
 *
 * All domain numbers displayed by the UI originate here; nothing downstream
 * recomputes them. The fetch implementation is injectable so tests can
 * intercept and record raw responses.
 */

import { parseLayout, parseProjection } from "./blocks.js";
import type { LayoutBlock, ProjectionBlock } from "./blocks.js";
import type {
  AlphabetsResponse,
  AlphabetUpsertResponse,
  AssignResponse,
  AttributesResponse,
  DatasetResponse,
  ErrorPayload,
  FilterSummaryRequest,
  FilterSummaryResponse,
  JobView,
  LabelParticlesResponse,
  LayoutRequest,
  ProjectionRequest,
  SelectionStatsRequest,
  SelectionStatsResponse,
  Snapshot,
  SnapshotExportResponse,
  SnapshotImportResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly details: Array<Record<string, unknown>> = [],
  ) {
    super(message);
  }
}

const TERMINAL_STATES = new Set(["done", "failed", "cancelled"]);

export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    public readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (!res.ok) {
      let payload: ErrorPayload | null = null;
      try {
        payload = (await res.json()) as ErrorPayload;
      } catch {
        // non-JSON error body; fall through to the generic error
      }
      throw new ApiError(
        res.status,
        payload?.code ?? "http-error",
        payload?.message ?? `${method} ${path} failed with ${res.status}`,
        payload?.details ?? [],
      );
    }
    return res;
  }

  private async json<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.request(method, path, body);
    return (await res.json()) as T;
  }

  // ---- dataset ----

  dataset(): Promise<DatasetResponse> {
    return this.json("GET", "/dataset");
  }

  attributes(): Promise<AttributesResponse> {
    return this.json("GET", "/attributes");
  }

  // ---- layout ----

  async layout(req: LayoutRequest): Promise<{ block: LayoutBlock; etag: string | null; snapshot: Snapshot | null }> {
    const res = await this.request("POST", "/layout", req);
    const raw = res.headers.get("x-snapshot");
    return {
      block: parseLayout(await res.arrayBuffer()),
      etag: res.headers.get("etag"),
      snapshot: raw ? (JSON.parse(raw) as Snapshot) : null,
    };
  }

  // ---- projection jobs ----

  startProjection(req: ProjectionRequest): Promise<JobView> {
    return this.json("POST", "/projection", req);
  }

  projectionStatus(jobId: string): Promise<JobView> {
    return this.json("GET", `/projection/${encodeURIComponent(jobId)}`);
  }

  async projectionResult(jobId: string): Promise<ProjectionBlock> {
    const res = await this.request("GET", `/projection/${encodeURIComponent(jobId)}/result`);
    return parseProjection(await res.arrayBuffer());
  }

  cancelProjection(jobId: string): Promise<JobView> {
    return this.json("DELETE", `/projection/${encodeURIComponent(jobId)}`);
  }

  /** Poll a job to a terminal state; resolves on done, rejects otherwise. */
  async waitForProjection(
    jobId: string,
    opts: { pollMs?: number; timeoutMs?: number; onProgress?: (job: JobView) => void } = {},
  ): Promise<JobView> {
    const pollMs = opts.pollMs ?? 250;
    const deadline = Date.now() + (opts.timeoutMs ?? 600_000);
    for (;;) {
      const job = await this.projectionStatus(jobId);
      opts.onProgress?.(job);
      if (TERMINAL_STATES.has(job.state)) {
        if (job.state !== "done") {
          throw new ApiError(200, "job-" + job.state, job.error ?? `job ${jobId} ${job.state}`);
        }
        return job;
      }
      if (Date.now() > deadline) {
        throw new ApiError(200, "job-timeout", `job ${jobId} still ${job.state} after timeout`);
      }
      await new Promise((r) => setTimeout(r, pollMs));
    }
  }

  // ---- filters and selection ----

  filterSummary(req: FilterSummaryRequest): Promise<FilterSummaryResponse> {
    return this.json("POST", "/filters/summary", req);
  }

  selectionStats(req: SelectionStatsRequest): Promise<SelectionStatsResponse> {
    return this.json("POST", "/selection/stats", req);
  }

  // ---- labels ----

  alphabets(): Promise<AlphabetsResponse> {
    return this.json("GET", "/alphabets");
  }

  upsertAlphabet(definition: Record<string, unknown>): Promise<AlphabetUpsertResponse> {
    return this.json("POST", "/alphabets", definition);
  }

  assign(alphabet: string, particles: string[], label: string, who = "ui"): Promise<AssignResponse> {
    return this.json("POST", `/alphabets/${encodeURIComponent(alphabet)}/assign`, {
      particles,
      label,
      who,
    });
  }

  unassign(alphabet: string, particles: string[], who = "ui"): Promise<AssignResponse> {
    return this.json("POST", `/alphabets/${encodeURIComponent(alphabet)}/unassign`, {
      particles,
      who,
    });
  }

  labelParticles(alphabet: string, label: string): Promise<LabelParticlesResponse> {
    return this.json(
      "GET",
      `/labels/${encodeURIComponent(alphabet)}/${encodeURIComponent(label)}/particles`,
    );
  }

  exportSnapshot(): Promise<SnapshotExportResponse> {
    return this.json("GET", "/snapshot");
  }

  importSnapshot(document: Record<string, unknown>, policy = "reject", who = "ui"): Promise<SnapshotImportResponse> {
    return this.json("POST", "/snapshot", { document, policy, who });
  }

  // ---- thumbnails ----

  thumbUrl(particleId: string, mode: "original" | "transparent" = "original"): string {
    const suffix = mode === "original" ? "" : `?mode=${mode}`;
    return `${this.baseUrl}/thumb/${encodeURIComponent(particleId)}${suffix}`;
  }

  async thumb(particleId: string, mode: "original" | "transparent" = "original"): Promise<ArrayBuffer> {
    const res = await this.request("GET", `/thumb/${encodeURIComponent(particleId)}${mode === "original" ? "" : `?mode=${mode}`}`);
    return res.arrayBuffer();
  }
}
