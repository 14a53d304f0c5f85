/**
 * Scripted annotation session against the real service (started once by
 * global_setup). One annotator works through the app the way a human would:
 * keyboard-labels twenty queue records, authors a flip-to-negative
 * counterfactual by sweeping a span of the note, then audits the dashboard
 * against the service's own JSON reports.
 *
 * Display parity is checked through data-value attributes, which hold the
 * raw API numbers; the comparison is exact string equality, no tolerance.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { createApp } from "../src/app.js";
import type { FixtureInfo } from "./global_setup.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const fixture = JSON.parse(readFileSync(join(HERE, ".fixture.json"), "utf8")) as FixtureInfo;

const SERIES = ["precision", "recall", "f1", "fbeta"] as const;

const api = new Api(fixture.base, fixture.token);
let root: HTMLElement;

function part(role: string): HTMLElement {
  const el = root.querySelector<HTMLElement>(`[data-role="${role}"]`);
  if (!el) throw new Error(`missing [data-role="${role}"]`);
  return el;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function until<T>(
  probe: () => T | null | undefined | false,
  what: string,
  timeoutMs = 30_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const got = probe();
    if (got) return got;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(15);
  }
}

function press(key: string): void {
  document.body.dispatchEvent(
    new KeyboardEvent("keydown", { key, bubbles: true, cancelable: true }),
  );
}

/** Select [start, end) of a container's text content, spanning highlight
 * marks if the range crosses them, exactly as a mouse sweep would. */
function selectSpan(container: HTMLElement, start: number, end: number): Range {
  const doc = container.ownerDocument;
  const resolve = (global: number): [Node, number] => {
    const walker = doc.createTreeWalker(container, NodeFilter.SHOW_TEXT);
    let consumed = 0;
    for (let node = walker.nextNode(); node; node = walker.nextNode()) {
      const text = node as Text;
      if (global <= consumed + text.data.length) return [text, global - consumed];
      consumed += text.data.length;
    }
    throw new Error(`offset ${global} beyond note text`);
  };
  const range = doc.createRange();
  range.setStart(...resolve(start));
  range.setEnd(...resolve(end));
  const selection = doc.defaultView?.getSelection();
  if (!selection) throw new Error("no selection API");
  selection.removeAllRanges();
  selection.addRange(range);
  return range;
}

describe("annotation session", () => {
  beforeAll(async () => {
    root = document.createElement("div");
    document.body.appendChild(root);
    await createApp(root, api, "ui-session");
  });

  afterAll(() => {
    document.body.removeChild(root);
  });

  it("labels twenty queue records from the keyboard", async () => {
    const before = await api.queueSummary();
    expect(before.round).toBe(fixture.round);
    expect(before.remaining_total).toBeGreaterThanOrEqual(20);

    const card = part("card");
    expect(card.hidden).toBe(false);

    // the displayed item is byte for byte what the service holds
    const firstId = await until(() => card.dataset.recordId, "first queue item");
    const fromServer = await api.record(firstId);
    expect(fromServer.probability).not.toBeNull();
    expect(part("probability").dataset.value).toBe(String(fromServer.probability));
    expect(part("probability").textContent).toBe((fromServer.probability as number).toFixed(3));
    expect(part("text").textContent).toBe(fromServer.record.clean_text);
    expect(part("pattern").textContent).toBe(fromServer.pattern_match ? "keyword hit" : "");

    for (let i = 0; i < 20; i++) {
      const showing = card.dataset.recordId;
      press(i % 2 === 0 ? "p" : "n");
      await until(
        () => card.dataset.recordId !== showing,
        `acknowledgement of label ${i + 1}`,
      );
    }
    expect(part("count").textContent).toBe("20");

    const after = await api.queueSummary();
    expect(before.remaining_total - after.remaining_total).toBe(20);
    const labeled = (s: typeof before) =>
      s.strategies.reduce((n, batch) => n + batch.labeled, 0);
    expect(labeled(after) - labeled(before)).toBe(20);
  });

  it("authors a flip-to-negative counterfactual from a text selection", async () => {
    root.querySelector<HTMLElement>('[data-tab="editor"]')!.click();
    await until(() => root.querySelector('[data-view="editor"]'), "editor view");

    const input = part("record-id") as HTMLInputElement;
    input.value = fixture.abdo_id;
    part("load-form").dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    await until(() => part("body").dataset.recordId === fixture.abdo_id, "record loaded");

    const source = await api.record(fixture.abdo_id);
    expect(source.record.label).toBe("positive");
    const noteEl = part("text");
    expect(noteEl.textContent).toBe(source.record.clean_text);

    const span = fixture.abdo_span;
    const start = source.record.clean_text.indexOf(span);
    expect(start).toBeGreaterThan(0);
    const range = selectSpan(noteEl, start, start + span.length);
    expect(range.toString()).toBe(span);

    part("flip-negative").click();
    const result = part("result");
    await until(() => !result.hidden && result.dataset.syntheticId, "counterfactual result");

    expect(result.dataset.direction).toBe("flip_to_negative");
    expect(result.dataset.label).toBe("negative");
    // one adjacent space is absorbed with the span, so nothing doubles up
    const expected = source.record.clean_text.replace(` ${span}`, "");
    expect(part("result-text").textContent).toBe(expected);
    expect(part("result-pair").textContent).toBe(
      `flip_to_negative: "${span}" at offset ${start - 1} of ${fixture.abdo_id}`,
    );

    const synthetic = await api.record(result.dataset.syntheticId!);
    expect(synthetic.record.label).toBe("negative");
    expect(synthetic.record.counterfactual_of).toBe(fixture.abdo_id);
    expect(synthetic.record.clean_text).toBe(expected);
  });

  it("dashboard numbers equal the service report values exactly", async () => {
    root.querySelector<HTMLElement>('[data-tab="dashboard"]')!.click();
    await until(() => root.querySelector(".metric-table"), "metric table");

    const raw = await api.metrics(1);
    const cell = (side: string, metric: string) =>
      root.querySelector<HTMLElement>(
        `td[data-side="${side}"][data-metric="${metric}"][data-round="1"]`,
      );
    for (const side of ["model", "pattern"] as const) {
      const scored = raw[side];
      for (const metric of SERIES) {
        expect(cell(side, metric)?.dataset.value, `${side} ${metric}`).toBe(
          String(scored.metrics[metric]),
        );
        expect(cell(side, metric)?.textContent).toBe(scored.metrics[metric].toFixed(3));
      }
      for (const count of ["tp", "tn", "fp", "fn"] as const) {
        expect(cell(side, count)?.dataset.value, `${side} ${count}`).toBe(
          String(scored.confusion[count]),
        );
      }
      expect(cell(side, "eval_size")?.dataset.value).toBe(String(raw.eval_size));
    }

    for (const metric of SERIES) {
      const dot = root.querySelector<SVGCircleElement>(
        `circle[data-series="${metric}"][data-round="1"]`,
      );
      expect(dot?.dataset.value, `chart ${metric}`).toBe(String(raw.model.metrics[metric]));
    }

    const growth = (metric: string) =>
      root.querySelector<HTMLElement>(`.growth-table td[data-metric="${metric}"][data-round="1"]`);
    expect(growth("positives")?.dataset.value).toBe(String(raw.train_counts.positives));
    expect(growth("negatives")?.dataset.value).toBe(String(raw.train_counts.negatives));
    expect(growth("size")?.dataset.value).toBe(String(raw.train_counts.size));
    expect(growth("synthetic_percent")?.dataset.value).toBe(
      String(raw.train_counts.synthetic_percent),
    );

    const final = await api.metricsFinal();
    expect(final.rows.length).toBeGreaterThanOrEqual(2);
    for (const row of final.rows) {
      for (const metric of SERIES) {
        const td = root.querySelector<HTMLElement>(
          `td[data-metric="${metric}"][data-final-row="${row.name}"]`,
        );
        expect(td?.dataset.value, `final ${row.name} ${metric}`).toBe(
          String(row.metrics[metric]),
        );
      }
    }

    const summary = await api.queueSummary();
    for (const s of summary.strategies) {
      const item = root.querySelector<HTMLElement>(`li[data-strategy="${s.strategy}"]`);
      expect(item?.dataset.remaining, s.strategy).toBe(String(s.remaining));
      expect(item?.dataset.conflicts, s.strategy).toBe(String(s.conflicts));
    }
    expect(root.querySelector<HTMLElement>('li[data-strategy="total"]')?.dataset.remaining).toBe(
      String(summary.remaining_total),
    );

    // the labeling queue still has work, so advancing must be refused
    expect(summary.remaining_total).toBeGreaterThan(0);
    expect((part("advance") as HTMLButtonElement).disabled).toBe(true);
  });

  it("beta slider at 1.0 collapses F-beta onto F1", async () => {
    const slider = part("beta-slider") as HTMLInputElement;
    expect(Number(slider.value)).not.toBe(1); // service scores with an asymmetric default

    slider.value = "1";
    slider.dispatchEvent(new Event("input", { bubbles: true }));

    const modelCell = (metric: string) =>
      root.querySelector<HTMLElement>(
        `td[data-side="model"][data-metric="${metric}"][data-round="1"]`,
      );
    await until(
      () =>
        modelCell("fbeta")?.dataset.value !== undefined &&
        modelCell("fbeta")?.dataset.value === modelCell("f1")?.dataset.value,
      "table re-scored at beta 1",
    );

    const rescored = await api.metrics(1, 1.0);
    expect(rescored.beta).toBe(1);
    expect(rescored.model.metrics.fbeta).toBe(rescored.model.metrics.f1);
    expect(modelCell("fbeta")?.dataset.value).toBe(String(rescored.model.metrics.fbeta));
    expect(modelCell("f1")?.dataset.value).toBe(String(rescored.model.metrics.f1));
    expect(part("beta-readout").textContent).toBe("1");

    const patternF1 = root.querySelector<HTMLElement>(
      'td[data-side="pattern"][data-metric="f1"][data-round="1"]',
    );
    const patternFb = root.querySelector<HTMLElement>(
      'td[data-side="pattern"][data-metric="fbeta"][data-round="1"]',
    );
    expect(patternFb?.dataset.value).toBe(patternF1?.dataset.value);

    const dotF1 = root.querySelector<SVGCircleElement>('circle[data-series="f1"][data-round="1"]');
    const dotFb = root.querySelector<SVGCircleElement>(
      'circle[data-series="fbeta"][data-round="1"]',
    );
    expect(dotFb?.dataset.value).toBe(dotF1?.dataset.value);
  });
});
