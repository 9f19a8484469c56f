/// Timeline view: one lane per track, one block per segment.
/// Position is proportional to start, width to duration, color comes
/// from the LOI class; blocks missing from the current selection get
/// the "excluded" class instead of disappearing.

import { ProjectDto } from "./api.js";

const LOI_CLASS_CAP = 4; // loi-1..loi-4 have distinct colors, deeper reuse loi-4

export class Timeline {
  root: HTMLElement;
  onSelect: (segmentId: string) => void = () => {};

  constructor() {
    this.root = document.createElement("div");
    this.root.className = "timeline";
  }

  render(project: ProjectDto | null, highlighted: ReadonlySet<string>): void {
    this.root.textContent = "";
    if (project === null || project.segments.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty-state";
      empty.textContent = "no segments to show";
      this.root.appendChild(empty);
      return;
    }

    const span = Math.max(
      ...project.segments.map((s) => s.start_ms + s.duration_ms),
    );
    const tracks = [...project.tracks].sort((a, b) => a.index - b.index);
    for (const track of tracks) {
      const lane = document.createElement("div");
      lane.className = "lane";
      lane.dataset.trackId = track.id;

      const label = document.createElement("span");
      label.className = "lane-label";
      label.textContent = track.id;
      lane.appendChild(label);

      for (const segment of project.segments) {
        if (segment.track_ref !== track.id) continue;
        const block = document.createElement("button");
        block.type = "button";
        block.dataset.segmentId = segment.id;
        const loi = Math.min(segment.loi, LOI_CLASS_CAP);
        block.className = `segment loi-${loi}`;
        if (!highlighted.has(segment.id)) block.classList.add("excluded");
        block.style.left = `${(segment.start_ms / span) * 100}%`;
        block.style.width = `${(segment.duration_ms / span) * 100}%`;
        block.title = `${segment.label ?? segment.id} (loi ${segment.loi})`;
        block.textContent = segment.label ?? segment.id;
        block.onclick = () => this.onSelect(segment.id);
        lane.appendChild(block);
      }
      this.root.appendChild(lane);
    }
  }
}
