/**
 * Counterfactual authoring. Load a record, sweep a span with the mouse,
 * flip it. The span travels to the server as the exact selected characters;
 * token-boundary cleanup (absorbing a neighboring space) happens there.
 *
 * Flip-to-positive needs a span typed in plus a word position, since the
 * text to insert does not exist in the source record.
 */

import { Api, ApiError, isOffline } from "./api.js";
import { renderHighlighted } from "./highlight.js";
import { selectionOffsets } from "./selection.js";
import type { QueueItem } from "./types.js";

export class CounterfactualEditor {
  private terms: readonly string[] = [];
  private loaded: QueueItem | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: Api,
  ) {}

  async mount(): Promise<void> {
    this.root.innerHTML = `
      <section class="editor" data-view="editor">
        <form class="editor-load" data-role="load-form">
          <input type="text" data-role="record-id" placeholder="record id" />
          <button type="submit">load</button>
        </form>
        <div class="editor-body" data-role="body" hidden>
          <header class="editor-meta">
            <code data-role="loaded-id"></code>
            <span class="badge" data-role="label"></span>
          </header>
          <p class="note-text" data-role="text"></p>
          <div class="editor-actions">
            <button data-role="flip-negative">flip selection to negative</button>
          </div>
          <form class="editor-insert" data-role="insert-form">
            <input type="text" data-role="insert-span" placeholder="text to insert" />
            <input type="number" data-role="insert-position" placeholder="word #" min="0" />
            <button type="submit">flip to positive</button>
          </form>
        </div>
        <div class="editor-error" data-role="error" hidden></div>
        <div class="cf-result" data-role="result" hidden>
          <header>created <code data-role="result-id"></code>
            <span class="badge" data-role="result-label"></span></header>
          <p class="note-text" data-role="result-text"></p>
          <p class="pair" data-role="result-pair"></p>
        </div>
      </section>`;
    this.part("load-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const input = this.part("record-id") as HTMLInputElement;
      void this.load(input.value.trim());
    });
    this.part("flip-negative").addEventListener("click", () => void this.flipToNegative());
    this.part("insert-form").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.flipToPositive();
    });
    try {
      this.terms = (await this.api.rules()).include_terms;
    } catch {
      this.terms = [];
    }
  }

  unmount(): void {}

  private part(role: string): HTMLElement {
    const el = this.root.querySelector<HTMLElement>(`[data-role="${role}"]`);
    if (!el) throw new Error(`editor missing part ${role}`);
    return el;
  }

  async load(recordId: string): Promise<void> {
    if (!recordId) return;
    this.clearError();
    this.part("result").hidden = true;
    try {
      this.loaded = await this.api.record(recordId);
    } catch (err) {
      this.loaded = null;
      this.part("body").hidden = true;
      this.showError(err);
      return;
    }
    const body = this.part("body");
    body.hidden = false;
    body.dataset.recordId = this.loaded.record.id;
    this.part("loaded-id").textContent = this.loaded.record.id;
    this.part("label").textContent = this.loaded.record.label;
    renderHighlighted(this.part("text"), this.loaded.record.clean_text, this.terms);
  }

  private async flipToNegative(): Promise<void> {
    if (!this.loaded) return;
    const selection = selectionOffsets(this.part("text"));
    if (!selection) {
      this.showMessage("select the span that carries the vaccine attribution first");
      return;
    }
    await this.flip({
      source_id: this.loaded.record.id,
      direction: "flip_to_negative",
      span: selection.text,
    });
  }

  private async flipToPositive(): Promise<void> {
    if (!this.loaded) return;
    const span = (this.part("insert-span") as HTMLInputElement).value;
    const position = Number((this.part("insert-position") as HTMLInputElement).value);
    if (!span || Number.isNaN(position)) {
      this.showMessage("flip to positive needs the text to insert and a word position");
      return;
    }
    await this.flip({
      source_id: this.loaded.record.id,
      direction: "flip_to_positive",
      span,
      position,
    });
  }

  private async flip(request: {
    source_id: string;
    direction: "flip_to_negative" | "flip_to_positive";
    span: string;
    position?: number;
  }): Promise<void> {
    this.clearError();
    try {
      const { record, pair } = await this.api.createCounterfactual(request);
      const result = this.part("result");
      result.hidden = false;
      result.dataset.syntheticId = record.id;
      result.dataset.label = record.label;
      result.dataset.direction = pair.direction;
      this.part("result-id").textContent = record.id;
      this.part("result-label").textContent = record.label;
      renderHighlighted(this.part("result-text"), record.clean_text, this.terms);
      this.part("result-pair").textContent =
        `${pair.direction}: "${pair.span}" at offset ${pair.offset} of ${pair.source_id}`;
    } catch (err) {
      this.showError(err);
    }
  }

  private showMessage(message: string): void {
    const box = this.part("error");
    box.hidden = false;
    box.textContent = message;
    delete box.dataset.code;
  }

  private showError(err: unknown): void {
    const box = this.part("error");
    box.hidden = false;
    if (err instanceof ApiError) {
      box.dataset.code = err.code;
      box.textContent = isOffline(err)
        ? "offline: the service is not reachable"
        : `${err.code}: ${err.message}`;
    } else {
      delete box.dataset.code;
      box.textContent = String(err);
    }
  }

  private clearError(): void {
    const box = this.part("error");
    box.hidden = true;
    box.textContent = "";
    delete box.dataset.code;
  }
}
