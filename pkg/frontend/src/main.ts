/**
 * Bootstrapping and event wiring. Three hash-routed screens over one API
 * client: #queue (answer fact-checking questions), #explorer (browse the
 * layered graph down to journal evidence), #dashboard (evaluation reports).
 */

import { ApiClient, EvalReport, SessionReport } from "./api.js";
import { SessionStore } from "./state.js";
import { ExplorerState, renderDashboard, renderExplorer, renderQueue } from "./views.js";

const user = new URLSearchParams(window.location.search).get("user") ?? "demo";
const api = new ApiClient();
const store = new SessionStore(api, user);

const root = document.getElementById("app")!;
const explorer: ExplorerState = {
  activeLayer: "L1",
  nodesByLayer: {},
  expanded: {},
  traces: {},
  ratings: {},
  missing: false,
};
let sessionReport: SessionReport | undefined;
let preReport: EvalReport | null = null;
let postReport: EvalReport | null = null;

function route(): string {
  return window.location.hash.replace("#", "") || "queue";
}

async function refreshScreenData(): Promise<void> {
  const screen = route();
  if (screen === "explorer") {
    try {
      const layers = ["L1", "L2", "L3", "L4"];
      const results = await Promise.all(layers.map((layer) => api.layerNodes(user, layer)));
      layers.forEach((layer, i) => (explorer.nodesByLayer[layer] = results[i]));
      explorer.missing = false;
    } catch {
      explorer.missing = true;
    }
  } else if (screen === "dashboard") {
    preReport = await api.report(user, "pre").catch(() => null);
    postReport = await api.report(user, "post").catch(() => null);
  } else if (store.state.complete || store.state.current === null) {
    sessionReport = await api.session(user).catch(() => undefined);
  }
}

function render(): void {
  const screen = route();
  const nav = ["queue", "explorer", "dashboard"]
    .map(
      (name) =>
        `<a href="#${name}" class="${name === screen ? "active" : ""}">${name[0].toUpperCase()}${name.slice(1)}</a>`,
    )
    .join("");
  let body = "";
  if (screen === "explorer") {
    body = renderExplorer(explorer);
  } else if (screen === "dashboard") {
    body = renderDashboard(preReport, postReport);
  } else {
    body = renderQueue(store.state, draftBuffer, sessionReport);
  }
  root.innerHTML = `<header><h1>layermind review</h1><nav>${nav}</nav><span class="user">user: ${user}</span></header><main>${body}</main>`;
  const area = root.querySelector<HTMLTextAreaElement>("textarea[data-action=draft]");
  if (area) {
    area.value = draftBuffer;
    area.focus();
    area.setSelectionRange(area.value.length, area.value.length);
  }
}

let draftBuffer = "";

async function onAction(target: HTMLElement): Promise<void> {
  const action = target.dataset.action;
  if (action === "submit") {
    await store.submit(draftBuffer);
    draftBuffer = store.draft();
    await refreshScreenData();
  } else if (action === "skip") {
    await store.skip();
    draftBuffer = store.draft();
    await refreshScreenData();
  } else if (action === "retry") {
    await store.submit(draftBuffer);
    await refreshScreenData();
  } else if (action === "layer") {
    explorer.activeLayer = target.dataset.layer ?? "L1";
  } else if (action === "toggle" || action === "jump") {
    const nodeId = target.dataset.node!;
    if (action === "jump") {
      const layer = nodeId.startsWith("L") ? nodeId.slice(0, 2) : "L1";
      if (["L1", "L2", "L3", "L4"].includes(layer)) explorer.activeLayer = layer;
    }
    explorer.expanded[nodeId] = action === "jump" ? true : !explorer.expanded[nodeId];
  } else if (action === "trace") {
    const nodeId = target.dataset.node!;
    const result = await api.trace(user, nodeId);
    explorer.traces[nodeId] = result.instances;
  } else if (action === "likert") {
    const nodeId = target.dataset.node!;
    const phase = target.dataset.phase!;
    const rating = Number(target.dataset.rating);
    await api.likert(user, nodeId, phase, rating);
    explorer.ratings[nodeId] = { ...explorer.ratings[nodeId], [phase]: rating };
  }
  render();
}

document.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (target && target.dataset.action !== "draft") {
    event.preventDefault();
    void onAction(target);
  }
});

document.addEventListener("input", (event) => {
  const target = event.target as HTMLTextAreaElement;
  if (target.dataset?.action === "draft") {
    draftBuffer = target.value;
    store.saveDraft(draftBuffer);
    const hint = root.querySelector("[data-testid=word-hint]");
    if (hint) {
      const n = draftBuffer.split(/\s+/).filter((w) => w).length;
      hint.textContent =
        n === 0
          ? "Longer, more specific answers improve the model."
          : `${n} words — longer, more specific answers improve the model.`;
    }
  }
});

window.addEventListener("hashchange", () => {
  void refreshScreenData().then(render);
});

store.subscribe(() => render());

void (async () => {
  await store.load();
  draftBuffer = store.draft();
  await refreshScreenData();
  render();
})();
