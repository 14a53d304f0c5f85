/**
 * Round dashboard: metric table and chart, confusion matrices, dataset
 * growth, queue backlog, and the advance control.
 *
 * Every number rendered here arrives from the service. Cells carry the raw
 * value in data-value; toFixed happens only on the visible text, so the
 * display is always auditable against the JSON report.
 */

import { Api, ApiError } from "./api.js";
import { fmtMetric, fmtPercent, setNumberCell } from "./format.js";
import type {
  FinalTable,
  QueueSummary,
  RoundInfo,
  RoundReport,
} from "./types.js";

const SERIES = ["precision", "recall", "f1", "fbeta"] as const;
type SeriesName = (typeof SERIES)[number];

const CHART_W = 420;
const CHART_H = 180;
const PAD = 24;

export class DashboardView {
  private beta: number | null = null; // null = server default

  constructor(
    private readonly root: HTMLElement,
    private readonly api: Api,
  ) {}

  async mount(): Promise<void> {
    this.root.innerHTML = `
      <section class="dashboard" data-view="dashboard">
        <div class="banner" data-role="banner" hidden></div>
        <div class="dash-controls">
          <label>beta
            <input type="range" min="0.5" max="2" step="0.1" data-role="beta-slider" />
            <b data-role="beta-readout"></b>
          </label>
          <button data-role="advance">advance round</button>
          <span data-role="advance-note"></span>
        </div>
        <div data-role="metrics"></div>
        <div data-role="chart"></div>
        <div data-role="growth"></div>
        <div data-role="backlog"></div>
        <div data-role="final"></div>
      </section>`;
    const slider = this.part("beta-slider") as HTMLInputElement;
    slider.addEventListener("input", () => {
      this.beta = Number(slider.value);
      this.part("beta-readout").textContent = slider.value;
      void this.refresh();
    });
    this.part("advance").addEventListener("click", () => void this.advance());
    await this.refresh();
  }

  unmount(): void {}

  private part(role: string): HTMLElement {
    const el = this.root.querySelector<HTMLElement>(`[data-role="${role}"]`);
    if (!el) throw new Error(`dashboard missing part ${role}`);
    return el;
  }

  async refresh(): Promise<void> {
    let rounds: RoundInfo[];
    let summary: QueueSummary;
    try {
      rounds = await this.api.rounds();
      summary = await this.api.queueSummary();
    } catch (err) {
      this.showError(err);
      return;
    }
    const completed = rounds.filter((r) => r.report !== null).map((r) => r.round);
    let reports: RoundReport[] = [];
    try {
      reports = await Promise.all(
        completed.map((n) => this.api.metrics(n, this.beta ?? undefined)),
      );
    } catch (err) {
      this.showError(err);
      return;
    }
    let final: FinalTable | null = null;
    try {
      final = await this.api.metricsFinal();
    } catch (err) {
      if (!(err instanceof ApiError) || err.status !== 404) {
        this.showError(err);
        return;
      }
    }
    this.part("banner").hidden = true;

    const slider = this.part("beta-slider") as HTMLInputElement;
    const effectiveBeta = this.beta ?? reports[0]?.beta ?? 1.0;
    slider.value = String(effectiveBeta);
    this.part("beta-readout").textContent = String(effectiveBeta);

    this.renderMetrics(reports);
    this.renderChart(reports);
    this.renderGrowth(reports);
    this.renderBacklog(summary, rounds);
    this.renderFinal(final);
  }

  private renderMetrics(reports: RoundReport[]): void {
    const host = this.part("metrics");
    host.textContent = "";
    if (reports.length === 0) {
      host.appendChild(this.text("p", "No completed rounds yet.", "empty"));
      return;
    }
    const doc = this.root.ownerDocument;
    const table = doc.createElement("table");
    table.className = "metric-table";
    table.innerHTML = `
      <thead><tr>
        <th>round</th><th>precision</th><th>recall</th><th>F1</th><th>F-beta</th>
        <th>TP</th><th>TN</th><th>FP</th><th>FN</th><th>eval n</th>
      </tr></thead>`;
    const body = doc.createElement("tbody");
    for (const report of reports) {
      body.appendChild(this.metricRow(doc, `round ${report.round}`, report.round, report, "model"));
    }
    const last = reports[reports.length - 1];
    if (last) {
      body.appendChild(this.metricRow(doc, "pattern baseline", last.round, last, "pattern"));
    }
    table.appendChild(body);
    host.appendChild(table);
  }

  private metricRow(
    doc: Document,
    name: string,
    round: number,
    report: RoundReport,
    side: "model" | "pattern",
  ): HTMLTableRowElement {
    const tr = doc.createElement("tr");
    tr.dataset.side = side;
    tr.dataset.round = String(round);
    const label = doc.createElement("td");
    label.textContent = name;
    tr.appendChild(label);
    const scored = report[side];
    for (const series of SERIES) {
      const td = doc.createElement("td");
      td.dataset.metric = series;
      td.dataset.round = String(round);
      td.dataset.side = side;
      setNumberCell(td, scored.metrics[series], fmtMetric(scored.metrics[series]));
      tr.appendChild(td);
    }
    for (const cell of ["tp", "tn", "fp", "fn"] as const) {
      const td = doc.createElement("td");
      td.dataset.metric = cell;
      td.dataset.round = String(round);
      td.dataset.side = side;
      setNumberCell(td, scored.confusion[cell]);
      tr.appendChild(td);
    }
    const evalCell = doc.createElement("td");
    evalCell.dataset.metric = "eval_size";
    evalCell.dataset.round = String(round);
    evalCell.dataset.side = side;
    setNumberCell(evalCell, report.eval_size);
    tr.appendChild(evalCell);
    return tr;
  }

  private renderChart(reports: RoundReport[]): void {
    const host = this.part("chart");
    host.textContent = "";
    if (reports.length === 0) return;
    const doc = this.root.ownerDocument;
    const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", `0 0 ${CHART_W} ${CHART_H}`);
    svg.setAttribute("class", "metric-chart");

    const x = (i: number) =>
      reports.length === 1
        ? CHART_W / 2
        : PAD + (i * (CHART_W - 2 * PAD)) / (reports.length - 1);
    const y = (v: number) => CHART_H - PAD - v * (CHART_H - 2 * PAD);

    for (const series of SERIES) {
      const points = reports.map((r, i) => [x(i), y(r.model.metrics[series])] as const);
      const line = doc.createElementNS("http://www.w3.org/2000/svg", "polyline");
      line.setAttribute("points", points.map(([px, py]) => `${px},${py}`).join(" "));
      line.setAttribute("class", `series series-${series}`);
      line.setAttribute("fill", "none");
      svg.appendChild(line);
      reports.forEach((report, i) => {
        const dot = doc.createElementNS("http://www.w3.org/2000/svg", "circle");
        const [px, py] = points[i] ?? [0, 0];
        dot.setAttribute("cx", String(px));
        dot.setAttribute("cy", String(py));
        dot.setAttribute("r", "3");
        dot.setAttribute("class", `dot series-${series}`);
        dot.dataset.series = series;
        dot.dataset.round = String(report.round);
        dot.dataset.value = String(report.model.metrics[series]);
        svg.appendChild(dot);
      });
    }
    host.appendChild(svg);
  }

  private renderGrowth(reports: RoundReport[]): void {
    const host = this.part("growth");
    host.textContent = "";
    if (reports.length === 0) return;
    const doc = this.root.ownerDocument;
    const table = doc.createElement("table");
    table.className = "growth-table";
    table.innerHTML = `
      <thead><tr>
        <th>round</th><th>dataset</th><th>train +</th><th>train -</th>
        <th>train n</th><th>synthetic</th>
      </tr></thead>`;
    const body = doc.createElement("tbody");
    for (const report of reports) {
      const tr = doc.createElement("tr");
      tr.dataset.round = String(report.round);
      const name = doc.createElement("td");
      name.textContent = `round ${report.round}`;
      const version = doc.createElement("td");
      version.textContent = `v${report.dataset_version}`;
      tr.append(name, version);
      const counts = report.train_counts;
      const cells: Array<[string, number, string?]> = [
        ["positives", counts.positives],
        ["negatives", counts.negatives],
        ["size", counts.size],
        ["synthetic_percent", counts.synthetic_percent, fmtPercent(counts.synthetic_percent)],
      ];
      for (const [metric, raw, text] of cells) {
        const td = doc.createElement("td");
        td.dataset.metric = metric;
        td.dataset.round = String(report.round);
        setNumberCell(td, raw, text);
        tr.appendChild(td);
      }
      body.appendChild(tr);
    }
    table.appendChild(body);
    host.appendChild(table);
  }

  private renderBacklog(summary: QueueSummary, rounds: RoundInfo[]): void {
    const host = this.part("backlog");
    host.textContent = "";
    const doc = this.root.ownerDocument;
    const active = rounds.find((r) => r.phase !== "complete");
    const advance = this.part("advance") as HTMLButtonElement;
    const note = this.part("advance-note");
    if (!active) {
      advance.disabled = true;
      note.textContent = "no active round";
    } else if (active.phase === "labeling") {
      const conflicts = summary.strategies.reduce((n, s) => n + s.conflicts, 0);
      const blocked = summary.remaining_total > 0 || conflicts > 0;
      advance.disabled = blocked;
      advance.dataset.round = String(active.round);
      note.textContent = blocked
        ? `round ${active.round}: ${summary.remaining_total} to label, ${conflicts} conflicts`
        : `round ${active.round} queue complete`;
    } else {
      advance.disabled = false;
      advance.dataset.round = String(active.round);
      note.textContent = `round ${active.round}: ${active.phase}`;
    }

    if (summary.round === null) {
      host.appendChild(this.text("p", "No open labeling queue.", "empty"));
      return;
    }
    const list = doc.createElement("ul");
    list.className = "backlog";
    for (const s of summary.strategies) {
      const item = doc.createElement("li");
      item.dataset.strategy = s.strategy;
      item.dataset.remaining = String(s.remaining);
      item.dataset.conflicts = String(s.conflicts);
      item.textContent =
        `${s.strategy}: ${s.remaining} of ${s.total} remaining` +
        (s.conflicts > 0 ? `, ${s.conflicts} in conflict` : "");
      list.appendChild(item);
    }
    const total = doc.createElement("li");
    total.dataset.strategy = "total";
    total.dataset.remaining = String(summary.remaining_total);
    total.textContent = `total remaining: ${summary.remaining_total}`;
    list.appendChild(total);
    host.appendChild(list);
  }

  private renderFinal(final: FinalTable | null): void {
    const host = this.part("final");
    host.textContent = "";
    if (final === null) return;
    const doc = this.root.ownerDocument;
    const heading = doc.createElement("h3");
    heading.textContent = `final comparison (beta ${final.beta}, ${final.eval_size} eval records)`;
    host.appendChild(heading);
    const table = doc.createElement("table");
    table.className = "final-table";
    table.innerHTML = `
      <thead><tr>
        <th>model</th><th>precision</th><th>recall</th><th>F1</th><th>F-beta</th>
      </tr></thead>`;
    const body = doc.createElement("tbody");
    for (const row of final.rows) {
      const tr = doc.createElement("tr");
      tr.dataset.finalRow = row.name;
      const name = doc.createElement("td");
      name.textContent = row.name;
      tr.appendChild(name);
      for (const series of SERIES) {
        const td = doc.createElement("td");
        td.dataset.metric = series;
        td.dataset.finalRow = row.name;
        setNumberCell(td, row.metrics[series], fmtMetric(row.metrics[series]));
        tr.appendChild(td);
      }
      body.appendChild(tr);
    }
    table.appendChild(body);
    host.appendChild(table);
  }

  private async advance(): Promise<void> {
    const advance = this.part("advance");
    const round = Number(advance.dataset.round);
    if (!round) return;
    try {
      await this.api.advanceRound(round);
    } catch (err) {
      this.showError(err);
      return;
    }
    await this.refresh();
  }

  private text(tag: string, content: string, className?: string): HTMLElement {
    const el = this.root.ownerDocument.createElement(tag);
    if (className) el.className = className;
    el.textContent = content;
    return el;
  }

  private showError(err: unknown): void {
    const banner = this.part("banner");
    banner.hidden = false;
    banner.textContent =
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  }
}
