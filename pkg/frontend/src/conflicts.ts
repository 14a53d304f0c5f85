/** Adjudication list: records whose annotators disagree, with a per-row
 * resolve control. The queue skips these, so this screen is the only way
 * a blocked round gets unblocked. */

import { Api, ApiError } from "./api.js";
import type { ConflictEntry, LabelValue } from "./types.js";

export class ConflictsView {
  constructor(
    private readonly root: HTMLElement,
    private readonly api: Api,
    private readonly oracleId: string,
  ) {}

  async mount(): Promise<void> {
    this.root.innerHTML = `
      <section class="conflicts" data-view="conflicts">
        <div class="banner" data-role="banner" hidden></div>
        <table class="conflict-table">
          <thead><tr><th>record</th><th>submissions</th><th>resolve</th></tr></thead>
          <tbody data-role="rows"></tbody>
        </table>
        <p class="empty" data-role="empty" hidden>No open conflicts.</p>
      </section>`;
    await this.refresh();
  }

  unmount(): void {}

  private part(role: string): HTMLElement {
    const el = this.root.querySelector<HTMLElement>(`[data-role="${role}"]`);
    if (!el) throw new Error(`conflicts view missing part ${role}`);
    return el;
  }

  async refresh(): Promise<void> {
    let entries: ConflictEntry[];
    try {
      entries = await this.api.conflicts();
    } catch (err) {
      this.showError(err);
      return;
    }
    const rows = this.part("rows");
    rows.textContent = "";
    this.part("empty").hidden = entries.length > 0;
    for (const entry of entries) rows.appendChild(this.row(entry));
  }

  private row(entry: ConflictEntry): HTMLTableRowElement {
    const doc = this.root.ownerDocument;
    const tr = doc.createElement("tr");
    tr.dataset.recordId = entry.record_id;

    const id = doc.createElement("td");
    id.textContent = entry.record_id;

    const subs = doc.createElement("td");
    subs.textContent = Object.entries(entry.submissions)
      .map(([oracle, label]) => `${oracle}: ${label}`)
      .join(", ");

    const resolve = doc.createElement("td");
    const select = doc.createElement("select");
    for (const value of ["positive", "negative"]) {
      const option = doc.createElement("option");
      option.value = value;
      option.textContent = value;
      select.appendChild(option);
    }
    const button = doc.createElement("button");
    button.textContent = "adjudicate";
    button.addEventListener("click", () => {
      void this.resolve(entry.record_id, select.value as LabelValue);
    });
    resolve.append(select, button);

    tr.append(id, subs, resolve);
    return tr;
  }

  private async resolve(recordId: string, label: LabelValue): Promise<void> {
    try {
      await this.api.adjudicate(recordId, label, this.oracleId);
    } catch (err) {
      this.showError(err);
      return;
    }
    this.part("banner").hidden = true;
    await this.refresh();
  }

  private showError(err: unknown): void {
    const banner = this.part("banner");
    banner.hidden = false;
    banner.textContent =
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  }
}
