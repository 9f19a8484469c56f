/// Page wiring: slider, timeline, segment editor, audition player.

import { ApiClient, ApiError } from "./api.js";
import { Timeline } from "./timeline.js";
import { PreviewViewModel } from "./viewmodel.js";

function formatMs(ms: number): string {
  const seconds = Math.round(ms / 1000);
  return `${Math.floor(seconds / 60)}m${String(seconds % 60).padStart(2, "0")}s`;
}

export function mount(root: HTMLElement, api: ApiClient): PreviewViewModel {
  root.innerHTML = `
    <header>
      <h1>programme preview</h1>
      <p class="banner connection" hidden></p>
      <p class="banner notice" hidden></p>
    </header>
    <section class="controls">
      <label>target <input type="range" class="target" min="0" step="1000"></label>
      <span class="target-readout"></span>
      <span class="selection-readout"></span>
      <p class="warning" hidden></p>
      <button type="button" class="audition">audition</button>
      <button type="button" class="save">save</button>
      <audio controls hidden></audio>
    </section>
    <section class="editor" hidden>
      <h2 class="editor-title"></h2>
      <label>loi <input type="number" class="edit-loi" min="1" step="1"></label>
      <label>label <input type="text" class="edit-label"></label>
      <button type="button" class="apply">apply</button>
      <p class="edit-error" hidden></p>
    </section>
  `;

  const slider = root.querySelector<HTMLInputElement>("input.target")!;
  const targetReadout = root.querySelector<HTMLElement>(".target-readout")!;
  const selectionReadout = root.querySelector<HTMLElement>(".selection-readout")!;
  const warning = root.querySelector<HTMLElement>(".warning")!;
  const connectionBanner = root.querySelector<HTMLElement>(".banner.connection")!;
  const noticeBanner = root.querySelector<HTMLElement>(".banner.notice")!;
  const editor = root.querySelector<HTMLElement>(".editor")!;
  const editorTitle = root.querySelector<HTMLElement>(".editor-title")!;
  const loiInput = root.querySelector<HTMLInputElement>(".edit-loi")!;
  const labelInput = root.querySelector<HTMLInputElement>(".edit-label")!;
  const editError = root.querySelector<HTMLElement>(".edit-error")!;
  const audio = root.querySelector<HTMLAudioElement>("audio")!;

  const timeline = new Timeline();
  root.appendChild(timeline.root);

  const vm = new PreviewViewModel(api);
  let editingId: string | null = null;

  function showBanner(element: HTMLElement, text: string | null): void {
    element.hidden = text === null;
    element.textContent = text ?? "";
  }

  vm.onChange = () => {
    const state = vm.state;
    showBanner(connectionBanner, state.connectionError);
    showBanner(noticeBanner, state.notice);
    showBanner(warning, state.warning);
    showBanner(editError, state.editError);

    const total = state.project?.segments.reduce((n, s) => n + s.duration_ms, 0) ?? 0;
    slider.max = String(total);
    slider.value = String(state.targetMs);
    targetReadout.textContent = formatMs(state.targetMs);
    selectionReadout.textContent = state.selection
      ? `${formatMs(state.selection.totalDurationMs)} selected, boundary loi ${state.selection.boundaryLoi}`
      : "";
    timeline.render(state.project, vm.highlighted);
  };

  slider.oninput = () => vm.setTarget(Number(slider.value));

  timeline.onSelect = (segmentId) => {
    const segment = vm.state.project?.segments.find((s) => s.id === segmentId);
    if (!segment) return;
    editingId = segmentId;
    editor.hidden = false;
    editorTitle.textContent = segment.label ?? segment.id;
    loiInput.value = String(segment.loi);
    labelInput.value = segment.label ?? "";
  };

  root.querySelector<HTMLButtonElement>("button.apply")!.onclick = () => {
    if (editingId === null) return;
    void vm.editSegment(editingId, {
      loi: Number(loiInput.value),
      label: labelInput.value,
    });
  };

  root.querySelector<HTMLButtonElement>("button.save")!.onclick = () => {
    void api.save().catch((error: unknown) => {
      showBanner(noticeBanner, error instanceof Error ? error.message : String(error));
    });
  };

  root.querySelector<HTMLButtonElement>("button.audition")!.onclick = async () => {
    try {
      const blob = await api.fetchRender(vm.state.targetMs);
      audio.src = URL.createObjectURL(blob);
      audio.hidden = false;
      await audio.play();
    } catch (error) {
      const text =
        error instanceof ApiError
          ? `${error.code}: ${error.message}`
          : error instanceof Error
            ? error.message
            : String(error);
      showBanner(noticeBanner, text);
    }
  };

  void vm.load();
  return vm;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount(document.getElementById("app")!, new ApiClient(""));
}
