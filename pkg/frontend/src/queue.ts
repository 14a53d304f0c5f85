/**
 * The labeling screen. Fetches one queue item at a time, renders it with
 * include-term highlights, and turns keystrokes into label submissions.
 *
 * Nothing is marked done locally until the server acknowledges the label;
 * a failed POST leaves the item on screen with an error banner.
 */

import { Api, ApiError, isOffline } from "./api.js";
import { fmtProbability } from "./format.js";
import { renderHighlighted } from "./highlight.js";
import { bindQueueKeys } from "./keys.js";
import type { LabelValue, QueueItem } from "./types.js";

export interface QueueOptions {
  oracleId: string;
  strategy?: string;
}

export class QueueView {
  private terms: readonly string[] = [];
  private current: QueueItem | null = null;
  private busy = false;
  private unbind: (() => void) | null = null;
  private labeled = 0;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: Api,
    private readonly options: QueueOptions,
  ) {}

  async mount(): Promise<void> {
    this.root.innerHTML = `
      <section class="queue" data-view="queue">
        <div class="banner" data-role="banner" hidden></div>
        <div class="queue-card" data-role="card">
          <header class="queue-meta">
            <span class="badge" data-role="strategy"></span>
            <span data-role="probability-wrap">p(AEFI) <b data-role="probability"></b></span>
            <span data-role="pattern"></span>
          </header>
          <p class="note-text" data-role="text"></p>
          <p class="keywords" data-role="keywords"></p>
          <footer class="queue-actions">
            <button data-role="positive">positive (p)</button>
            <button data-role="negative">negative (n)</button>
            <button data-role="skip">skip (s)</button>
            <span class="counter">labeled this session: <b data-role="count">0</b></span>
          </footer>
        </div>
        <p class="empty" data-role="empty" hidden>Queue is empty.</p>
      </section>`;
    this.part("positive").addEventListener("click", () => void this.label("positive"));
    this.part("negative").addEventListener("click", () => void this.label("negative"));
    this.part("skip").addEventListener("click", () => void this.advance());
    this.unbind = bindQueueKeys(this.root.ownerDocument, {
      onPositive: () => void this.label("positive"),
      onNegative: () => void this.label("negative"),
      onSkip: () => void this.advance(),
    });
    try {
      this.terms = (await this.api.rules()).include_terms;
    } catch {
      this.terms = []; // highlights are cosmetic; labeling still works
    }
    await this.advance();
  }

  unmount(): void {
    this.unbind?.();
    this.unbind = null;
  }

  private part(role: string): HTMLElement {
    const el = this.root.querySelector<HTMLElement>(`[data-role="${role}"]`);
    if (!el) throw new Error(`queue view missing part ${role}`);
    return el;
  }

  private async advance(): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    try {
      const { item } = await this.api.queueNext(this.options.strategy);
      this.current = item;
      this.render(item);
      this.clearBanner();
    } catch (err) {
      this.showError(err);
    } finally {
      this.busy = false;
    }
  }

  private async label(value: LabelValue): Promise<void> {
    if (!this.current || this.busy) return;
    const recordId = this.current.record.id;
    this.busy = true;
    try {
      const ack = await this.api.submitLabel(recordId, value, this.options.oracleId);
      this.labeled += 1;
      this.part("count").textContent = String(this.labeled);
      if (ack.conflict) {
        this.showBanner(`${recordId} now disagrees with another annotator; sent to adjudication`);
      }
    } catch (err) {
      this.showError(err);
      this.busy = false;
      return;
    }
    this.busy = false;
    await this.advance();
  }

  private render(item: QueueItem | null): void {
    const card = this.part("card");
    const empty = this.part("empty");
    if (item === null) {
      card.hidden = true;
      empty.hidden = false;
      card.removeAttribute("data-record-id");
      return;
    }
    card.hidden = false;
    empty.hidden = true;
    card.dataset.recordId = item.record.id;

    this.part("strategy").textContent = item.strategy ?? "";
    const probability = this.part("probability");
    probability.textContent = fmtProbability(item.probability);
    if (item.probability === null) delete probability.dataset.value;
    else probability.dataset.value = String(item.probability);
    this.part("pattern").textContent = item.pattern_match ? "keyword hit" : "";
    renderHighlighted(this.part("text"), item.record.clean_text, this.terms);
    this.part("keywords").textContent = item.topic_keywords.slice(0, 6).join(" | ");
  }

  private showBanner(message: string): void {
    const banner = this.part("banner");
    banner.hidden = false;
    banner.textContent = message;
  }

  private clearBanner(): void {
    this.part("banner").hidden = true;
  }

  private showError(err: unknown): void {
    if (isOffline(err)) {
      this.showBanner("offline: the service is not reachable; nothing was saved");
    } else if (err instanceof ApiError) {
      this.showBanner(`${err.code}: ${err.message}`);
    } else {
      this.showBanner(String(err));
    }
  }
}
