/// Typed client for the preview service HTTP API.
/// The UI never computes selections itself; everything editorial comes
/// back from these endpoints so CLI and UI always agree.

export interface ProgrammeDto {
  id: string;
  title: string | null;
  description: string | null;
  language: string | null;
  formal: Record<string, string>;
  categories: Record<string, string>;
}

export interface TrackDto {
  id: string;
  index: number;
  kind: string;
  language: string | null;
  audio_ref: string | null;
}

export interface SegmentDto {
  id: string;
  track_ref: string;
  start_ms: number;
  duration_ms: number;
  label: string | null;
  loi: number;
  topics: string[];
  location: { lat: number; lon: number } | null;
  timestamp: string | null;
}

export interface ProjectDto {
  programme: ProgrammeDto;
  tracks: TrackDto[];
  segments: SegmentDto[];
}

export interface ProjectState {
  revision: number;
  project: ProjectDto;
}

export interface SelectionDto {
  included: string[];
  boundary_loi: number;
  total_duration_ms: number;
  target_ms: number;
  overflowed: boolean;
}

export interface SegmentPatch {
  loi?: number;
  label?: string;
  topics?: string[];
}

export interface PatchResult {
  revision: number;
  segment: SegmentDto;
}

/// Error payloads are {code, message} with an optional revision on 409.
export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly revision?: number;

  constructor(status: number, code: string, message: string, revision?: number) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.revision = revision;
  }
}

// Structural subset of fetch/Response, so tests can hand in a double.
export interface FetchResponse {
  ok: boolean;
  status: number;
  headers: { get(name: string): string | null };
  json(): Promise<unknown>;
  blob(): Promise<Blob>;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<FetchResponse>;

async function raise(response: FetchResponse): Promise<never> {
  let code = "HTTP_ERROR";
  let message = `request failed with status ${response.status}`;
  let revision: number | undefined;
  try {
    const body = (await response.json()) as Record<string, unknown>;
    if (typeof body.code === "string") code = body.code;
    if (typeof body.message === "string") message = body.message;
    if (typeof body.revision === "number") revision = body.revision;
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(response.status, code, message, revision);
}

export class ApiClient {
  readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    if (!response.ok) await raise(response);
    return (await response.json()) as T;
  }

  getProject(): Promise<ProjectState> {
    return this.getJson<ProjectState>("/api/project");
  }

  assemble(targetMs: number, allowOverflow = false): Promise<SelectionDto> {
    const params = new URLSearchParams({ target_ms: String(targetMs) });
    if (allowOverflow) params.set("allow_overflow", "true");
    return this.getJson<SelectionDto>(`/api/assemble?${params}`);
  }

  getQuality(): Promise<unknown> {
    return this.getJson<unknown>("/api/quality");
  }

  async patchSegment(
    id: string,
    patch: SegmentPatch,
    revision: number,
  ): Promise<PatchResult> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/segments/${encodeURIComponent(id)}`,
      {
        method: "PATCH",
        headers: {
          "Content-Type": "application/json",
          "If-Match": String(revision),
        },
        body: JSON.stringify(patch),
      },
    );
    if (!response.ok) await raise(response);
    return (await response.json()) as PatchResult;
  }

  async save(): Promise<{ revision: number; path: string }> {
    const response = await this.fetchFn(`${this.baseUrl}/api/save`, {
      method: "POST",
    });
    if (!response.ok) await raise(response);
    return (await response.json()) as { revision: number; path: string };
  }

  async fetchRender(targetMs: number, crossfadeMs = 10): Promise<Blob> {
    const params = new URLSearchParams({
      target_ms: String(targetMs),
      crossfade_ms: String(crossfadeMs),
    });
    const response = await this.fetchFn(`${this.baseUrl}/api/render?${params}`);
    if (!response.ok) await raise(response);
    return response.blob();
  }

  audioUrl(trackRef: string): string {
    return `${this.baseUrl}/api/audio/${encodeURIComponent(trackRef)}`;
  }
}
