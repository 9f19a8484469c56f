/// In-memory stand-in for the preview service, speaking the same HTTP
/// contract through a fetch-compatible function. Selection follows the
/// documented server rule (visit by level of interest, mandatory level
/// all-or-nothing, stop at the first clip that does not fit) so sweep
/// tests see realistic bodies. Knobs let tests hold responses back or
/// edit the project out-of-band like a second client would.

import {
  FetchLike,
  FetchResponse,
  ProjectDto,
  SegmentDto,
  SelectionDto,
} from "../src/api.js";

export const LEAD_BODY_TAIL: ProjectDto = {
  programme: {
    id: "pyramid",
    title: "Pyramid",
    description: null,
    language: null,
    formal: {},
    categories: {},
  },
  tracks: [
    { id: "voice", index: 0, kind: "dialogue", language: null, audio_ref: "voice.wav" },
  ],
  segments: [
    { id: "lead", track_ref: "voice", start_ms: 0, duration_ms: 60000,
      label: "Lead", loi: 1, topics: [], location: null, timestamp: null },
    { id: "body", track_ref: "voice", start_ms: 60000, duration_ms: 120000,
      label: "Body", loi: 2, topics: [], location: null, timestamp: null },
    { id: "tail", track_ref: "voice", start_ms: 180000, duration_ms: 90000,
      label: "Tail", loi: 3, topics: [], location: null, timestamp: null },
  ],
};

class DomainError extends Error {
  constructor(readonly status: number, readonly code: string, message: string) {
    super(message);
  }
}

function compareIds(a: string, b: string): number {
  return a < b ? -1 : a > b ? 1 : 0;
}

export function selectByLoi(project: ProjectDto, targetMs: number): SelectionDto {
  const visit = [...project.segments].sort(
    (a, b) => a.loi - b.loi || a.start_ms - b.start_ms || compareIds(a.id, b.id),
  );
  const chosen: SegmentDto[] = [];
  let total = 0;
  for (const segment of visit) {
    if (segment.loi === 1) {
      chosen.push(segment);
      total += segment.duration_ms;
    }
  }
  if (total > targetMs) {
    throw new DomainError(
      422,
      "TargetTooShort",
      `mandatory loi=1 content is ${total} ms, target is ${targetMs} ms`,
    );
  }
  for (const segment of visit) {
    if (segment.loi === 1) continue;
    if (total + segment.duration_ms > targetMs) break;
    chosen.push(segment);
    total += segment.duration_ms;
  }
  const trackIndex = new Map(project.tracks.map((t) => [t.id, t.index]));
  chosen.sort(
    (a, b) =>
      a.start_ms - b.start_ms ||
      trackIndex.get(a.track_ref)! - trackIndex.get(b.track_ref)! ||
      compareIds(a.id, b.id),
  );
  return {
    included: chosen.map((s) => s.id),
    boundary_loi: chosen.length ? Math.max(...chosen.map((s) => s.loi)) : 0,
    total_duration_ms: total,
    target_ms: targetMs,
    overflowed: false,
  };
}

export class FakeService {
  project: ProjectDto;
  revision = 1;

  assembleCalls = 0;
  patchCalls = 0;
  /** every successful /api/assemble body, in delivery order */
  assembleLog: SelectionDto[] = [];

  private holdCount = 0;
  private held: Array<() => void> = [];
  private failures = 0;

  constructor(project: ProjectDto = LEAD_BODY_TAIL) {
    this.project = JSON.parse(JSON.stringify(project)) as ProjectDto;
  }

  readonly fetch: FetchLike = (url, init) => this.handle(url, init);

  /** Next /api/assemble response is computed but not delivered until
   *  the returned function runs. */
  holdNextAssemble(): () => void {
    this.holdCount += 1;
    return () => this.held.shift()?.();
  }

  /** Next request fails at the network level. */
  failNextRequest(): void {
    this.failures += 1;
  }

  /** Mutation applied directly to server state, as a second client. */
  externalEdit(id: string, patch: Partial<SegmentDto>): void {
    this.applyPatch(id, patch);
    this.revision += 1;
  }

  private applyPatch(id: string, patch: Partial<SegmentDto>): SegmentDto {
    const segment = this.project.segments.find((s) => s.id === id);
    if (!segment) throw new DomainError(404, "NOT_FOUND", `no segment '${id}'`);
    if (patch.loi !== undefined && (!Number.isInteger(patch.loi) || patch.loi < 1)) {
      throw new DomainError(
        422,
        "ValidationFailed",
        `BAD_LOI at /mgaProject/segment[@id='${id}']/@loi: loi must be an integer >= 1`,
      );
    }
    Object.assign(segment, patch);
    return segment;
  }

  private respond(status: number, body: unknown): FetchResponse {
    const revision = this.revision;
    return {
      ok: status >= 200 && status < 300,
      status,
      headers: {
        get: (name) => (name.toLowerCase() === "x-revision" ? String(revision) : null),
      },
      json: async () => JSON.parse(JSON.stringify(body)),
      blob: async () => new Blob(["RIFF"]),
    };
  }

  private async handle(url: string, init?: RequestInit): Promise<FetchResponse> {
    if (this.failures > 0) {
      this.failures -= 1;
      throw new TypeError("network down");
    }
    const parsed = new URL(url, "http://fake");
    const method = init?.method ?? "GET";

    try {
      if (parsed.pathname === "/api/project" && method === "GET") {
        return this.respond(200, { revision: this.revision, project: this.project });
      }

      if (parsed.pathname === "/api/assemble" && method === "GET") {
        this.assembleCalls += 1;
        const target = Number(parsed.searchParams.get("target_ms"));
        const body = selectByLoi(this.project, target);
        this.assembleLog.push(body);
        const response = this.respond(200, body);
        if (this.holdCount > 0) {
          this.holdCount -= 1;
          return new Promise((resolve) =>
            this.held.push(() => resolve(response)),
          );
        }
        return response;
      }

      const patchMatch = parsed.pathname.match(/^\/api\/segments\/([^/]+)$/);
      if (patchMatch && method === "PATCH") {
        this.patchCalls += 1;
        const ifMatch = (init?.headers as Record<string, string> | undefined)?.[
          "If-Match"
        ];
        if (ifMatch !== undefined && ifMatch !== String(this.revision)) {
          return this.respond(409, {
            code: "REVISION_CONFLICT",
            message: `If-Match ${ifMatch} does not match revision ${this.revision}`,
            revision: this.revision,
          });
        }
        const patch = JSON.parse(String(init?.body ?? "{}")) as Partial<SegmentDto>;
        const segment = this.applyPatch(decodeURIComponent(patchMatch[1]), patch);
        this.revision += 1;
        return this.respond(200, { revision: this.revision, segment });
      }

      if (parsed.pathname === "/api/save" && method === "POST") {
        return this.respond(200, { revision: this.revision, path: "project.xml" });
      }

      if (parsed.pathname === "/api/render" && method === "GET") {
        return this.respond(200, {});
      }

      return this.respond(404, { code: "NOT_FOUND", message: parsed.pathname });
    } catch (error) {
      if (error instanceof DomainError) {
        return this.respond(error.status, {
          code: error.code,
          message: error.message,
        });
      }
      throw error;
    }
  }
}
