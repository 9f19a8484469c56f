/// View model tying the timeline, slider and editor to the service.
///
/// Selections are only ever whatever /api/assemble returned: each
/// request is tagged with a sequence number and the revision it was
/// issued under, and a response is applied only when both still match,
/// so out-of-order or pre-edit responses can never show up. Slider
/// moves are debounced (150 ms by default) before they hit the wire.

import {
  ApiClient,
  ApiError,
  ProjectDto,
  SegmentPatch,
  SelectionDto,
} from "./api.js";

export interface SelectionView {
  included: ReadonlySet<string>;
  boundaryLoi: number;
  totalDurationMs: number;
  targetMs: number;
  overflowed: boolean;
}

export type Phase = "loading" | "ready" | "error";

export interface ViewState {
  phase: Phase;
  project: ProjectDto | null;
  revision: number;
  targetMs: number;
  selection: SelectionView | null;
  /** inline warning, e.g. target below the mandatory content */
  warning: string | null;
  /** transient banner, e.g. after a conflict-triggered reload */
  notice: string | null;
  /** inline message for a rejected or invalid edit */
  editError: string | null;
  /** connection-level failure; retry via load() */
  connectionError: string | null;
}

const DEFAULT_DEBOUNCE_MS = 150;

function selectionView(dto: SelectionDto): SelectionView {
  return {
    included: new Set(dto.included),
    boundaryLoi: dto.boundary_loi,
    totalDurationMs: dto.total_duration_ms,
    targetMs: dto.target_ms,
    overflowed: dto.overflowed,
  };
}

export class PreviewViewModel {
  onChange: () => void = () => {};

  private readonly api: ApiClient;
  private readonly debounceMs: number;
  private state_: ViewState = {
    phase: "loading",
    project: null,
    revision: 0,
    targetMs: 0,
    selection: null,
    warning: null,
    notice: null,
    editError: null,
    connectionError: null,
  };
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private requestSeq = 0;
  private pending: Promise<void> = Promise.resolve();
  private pendingRelease: (() => void) | null = null;

  constructor(api: ApiClient, options: { debounceMs?: number } = {}) {
    this.api = api;
    this.debounceMs = options.debounceMs ?? DEFAULT_DEBOUNCE_MS;
  }

  get state(): Readonly<ViewState> {
    return this.state_;
  }

  /** Segment ids the timeline should highlight as included. */
  get highlighted(): ReadonlySet<string> {
    return this.state_.selection?.included ?? new Set();
  }

  /** Resolves when no assemble request is in flight or waiting. */
  idle(): Promise<void> {
    return this.pending;
  }

  async load(): Promise<void> {
    this.update({ phase: "loading", connectionError: null });
    try {
      const snapshot = await this.api.getProject();
      const total = snapshot.project.segments.reduce(
        (sum, s) => sum + s.duration_ms,
        0,
      );
      this.update({
        phase: "ready",
        project: snapshot.project,
        revision: snapshot.revision,
        targetMs: total,
        notice: null,
        editError: null,
      });
      await this.requestAssemble();
    } catch (error) {
      this.update({
        phase: "error",
        connectionError: error instanceof Error ? error.message : String(error),
      });
    }
  }

  /** Slider input: debounce, then ask the service for the selection. */
  setTarget(targetMs: number): void {
    this.update({ targetMs });
    if (this.debounceTimer !== null) {
      clearTimeout(this.debounceTimer);
      this.pendingRelease?.(); // that wait is superseded, not abandoned
    }
    let release: () => void = () => {};
    this.pending = new Promise((resolve) => {
      release = resolve;
    });
    this.pendingRelease = release;
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      this.requestAssemble().finally(release);
    }, this.debounceMs);
  }

  /**
   * Edit one segment. Invalid values never leave the client; stale
   * revisions (409) trigger a reload so the edit can be retried
   * against current state.
   */
  async editSegment(id: string, patch: SegmentPatch): Promise<boolean> {
    if (patch.loi !== undefined && (!Number.isInteger(patch.loi) || patch.loi < 1)) {
      this.update({ editError: "level of interest must be an integer of 1 or more" });
      return false;
    }
    this.update({ editError: null });
    try {
      const result = await this.api.patchSegment(id, patch, this.state_.revision);
      const project = this.state_.project;
      if (project !== null) {
        this.update({
          project: {
            ...project,
            segments: project.segments.map((s) =>
              s.id === id ? result.segment : s,
            ),
          },
          revision: result.revision,
          notice: null,
        });
      }
      await this.requestAssemble();
      return true;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        await this.refresh("the project changed elsewhere; showing the latest state");
        return false;
      }
      if (error instanceof ApiError) {
        this.update({ editError: error.message });
        return false;
      }
      this.update({
        connectionError: error instanceof Error ? error.message : String(error),
      });
      return false;
    }
  }

  /** Re-read the project (conflict recovery path) and re-assemble. */
  async refresh(notice: string | null = null): Promise<void> {
    try {
      const snapshot = await this.api.getProject();
      this.update({
        project: snapshot.project,
        revision: snapshot.revision,
        notice,
      });
      await this.requestAssemble();
    } catch (error) {
      this.update({
        connectionError: error instanceof Error ? error.message : String(error),
      });
    }
  }

  private async requestAssemble(): Promise<void> {
    const seq = ++this.requestSeq;
    const revision = this.state_.revision;
    const targetMs = this.state_.targetMs;
    try {
      const dto = await this.api.assemble(targetMs);
      if (seq !== this.requestSeq || revision !== this.state_.revision) {
        return; // superseded while in flight
      }
      this.update({ selection: selectionView(dto), warning: null });
    } catch (error) {
      if (seq !== this.requestSeq || revision !== this.state_.revision) {
        return;
      }
      if (error instanceof ApiError && error.code === "TargetTooShort") {
        this.update({
          selection: null,
          warning: `target shorter than the mandatory content (${error.message})`,
        });
        return;
      }
      this.update({
        connectionError: error instanceof Error ? error.message : String(error),
      });
    }
  }

  private update(partial: Partial<ViewState>): void {
    this.state_ = { ...this.state_, ...partial };
    this.onChange();
  }
}
