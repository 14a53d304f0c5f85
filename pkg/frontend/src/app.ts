/** Shell: tab bar plus one mounted view at a time. */

import { Api } from "./api.js";
import { ConflictsView } from "./conflicts.js";
import { DashboardView } from "./dashboard.js";
import { CounterfactualEditor } from "./editor.js";
import { QueueView } from "./queue.js";

export type TabName = "queue" | "editor" | "conflicts" | "dashboard";

interface View {
  mount(): Promise<void>;
  unmount(): void;
}

const TABS: TabName[] = ["queue", "editor", "conflicts", "dashboard"];

export class App {
  private active: View | null = null;
  private activeName: TabName | null = null;
  private readonly content: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: Api,
    private readonly oracleId: string,
  ) {
    root.innerHTML = `
      <nav class="tabs" data-role="tabs"></nav>
      <main data-role="content"></main>`;
    const nav = root.querySelector<HTMLElement>('[data-role="tabs"]');
    this.content = root.querySelector<HTMLElement>('[data-role="content"]')!;
    for (const name of TABS) {
      const button = root.ownerDocument.createElement("button");
      button.dataset.tab = name;
      button.textContent = name;
      button.addEventListener("click", () => void this.switchTo(name));
      nav!.appendChild(button);
    }
  }

  async switchTo(name: TabName): Promise<void> {
    if (this.activeName === name) return;
    this.active?.unmount();
    this.content.textContent = "";
    this.activeName = name;
    for (const button of this.root.querySelectorAll<HTMLElement>("[data-tab]")) {
      button.classList.toggle("active", button.dataset.tab === name);
    }
    this.active = this.create(name);
    await this.active.mount();
  }

  private create(name: TabName): View {
    switch (name) {
      case "queue":
        return new QueueView(this.content, this.api, { oracleId: this.oracleId });
      case "editor":
        return new CounterfactualEditor(this.content, this.api);
      case "conflicts":
        return new ConflictsView(this.content, this.api, this.oracleId);
      case "dashboard":
        return new DashboardView(this.content, this.api);
    }
  }
}

export async function createApp(
  root: HTMLElement,
  api: Api,
  oracleId: string,
): Promise<App> {
  const app = new App(root, api, oracleId);
  await app.switchTo("queue");
  return app;
}
