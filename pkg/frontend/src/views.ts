/**
 * Pure render functions: state in, HTML string out. Event wiring happens in
 * main.ts via data-action attributes, so every view is testable as a string.
 */

import { EvalReport, GraphNode, ScoreBlock, SessionReport, TraceInstance } from "./api.js";
import { wordDiff } from "./diff.js";
import { QueueState, countWords } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const pct = (value: number | null): string =>
  value === null || value === undefined ? "–" : `${(value * 100).toFixed(2)}%`;

const num = (value: number | null, digits = 3): string =>
  value === null || value === undefined ? "–" : value.toFixed(digits);

// ----------------------------------------------------------------------
// Question queue
// ----------------------------------------------------------------------

export function renderDiffPanel(before: string, after: string): string {
  const segments = wordDiff(before, after)
    .map((s) => `<span class="diff-${s.kind}">${escapeHtml(s.text)}</span>`)
    .join(" ");
  return `<div class="diff-panel" data-testid="diff">
    <h3>Refined content</h3>
    <p class="diff-text">${segments}</p>
  </div>`;
}

export function renderCompletionSummary(report: SessionReport): string {
  const layers = ["L1", "L2", "L3", "L4"];
  const rows = layers
    .map((layer) => {
      const items = report.items.filter((i) => i.layer === layer);
      const answered = items.filter((i) => i.status === "answered").length;
      const skipped = items.filter((i) => i.status === "skipped").length;
      return `<tr><td>${layer}</td><td>${answered}</td><td>${skipped}</td><td>${items.length}</td></tr>`;
    })
    .join("");
  return `<div class="completion" data-testid="completion">
    <h2>Session complete</h2>
    <p>${report.counts.answered} answered, ${report.counts.skipped} skipped of ${report.counts.total}.</p>
    <table><thead><tr><th>Layer</th><th>Answered</th><th>Skipped</th><th>Total</th></tr></thead>
    <tbody>${rows}</tbody></table>
  </div>`;
}

export function renderQueue(state: QueueState, draft: string, sessionReport?: SessionReport): string {
  if (state.noSession) {
    return `<div class="empty" data-testid="empty-queue">No open review session. Run the pipeline through its review phase first.</div>`;
  }
  const parts: string[] = [];
  if (state.counts) {
    const done = state.counts.answered + state.counts.skipped;
    parts.push(
      `<p class="progress" data-testid="progress">${done} of ${state.counts.total} reviewed</p>`,
    );
  }
  if (state.error) {
    parts.push(`<div class="error" data-testid="error">
      <p>${escapeHtml(state.error)}</p>
      <button data-action="retry">Retry</button>
      <span>Your answer is kept below.</span>
    </div>`);
  }
  if (state.complete && sessionReport) {
    parts.push(renderCompletionSummary(sessionReport));
  } else if (state.current) {
    const hint =
      countWords(draft) === 0
        ? "Longer, more specific answers improve the model."
        : `${countWords(draft)} words — longer, more specific answers improve the model.`;
    parts.push(`<div class="question-card" data-testid="question">
      <span class="layer-chip">${escapeHtml(state.current.layer)}</span>
      <h2>${escapeHtml(state.current.question)}</h2>
      <textarea data-action="draft" rows="5" placeholder="Correct, confirm, or add context...">${escapeHtml(draft)}</textarea>
      <p class="hint" data-testid="word-hint">${hint}</p>
      <div class="actions">
        <button data-action="submit" ${state.loading ? "disabled" : ""}>Submit</button>
        <button data-action="skip" class="secondary" ${state.loading ? "disabled" : ""}>Skip</button>
      </div>
    </div>`);
  }
  if (state.lastDiff) {
    parts.push(renderDiffPanel(state.lastDiff.before, state.lastDiff.after));
  }
  return `<section class="queue">${parts.join("\n")}</section>`;
}

// ----------------------------------------------------------------------
// Graph explorer
// ----------------------------------------------------------------------

export interface ExplorerState {
  activeLayer: string;
  nodesByLayer: Record<string, GraphNode[]>;
  expanded: Record<string, boolean>;
  traces: Record<string, TraceInstance[]>;
  ratings: Record<string, Record<string, number>>; // nodeId -> phase -> rating
  missing: boolean;
}

function renderInstanceCard(instance: TraceInstance): string {
  const fields = (["what", "when", "where", "who", "why", "how"] as const)
    .filter((f) => instance[f])
    .map((f) => `<dt>${f.toUpperCase()}</dt><dd>${escapeHtml(instance[f])}</dd>`)
    .join("");
  return `<div class="instance-card" data-testid="instance-${instance.id}">
    <span class="instance-date">${escapeHtml(instance.date)}</span>
    <dl>${fields}</dl>
  </div>`;
}

function renderLikert(nodeId: string, ratings: Record<string, number> | undefined): string {
  const row = (phase: string, label: string) => {
    const current = ratings?.[phase];
    const buttons = [1, 2, 3, 4, 5]
      .map(
        (value) =>
          `<button data-action="likert" data-node="${nodeId}" data-phase="${phase}" data-rating="${value}"
            class="likert-btn${current === value ? " selected" : ""}">${value}</button>`,
      )
      .join("");
    return `<div class="likert-row"><span>${label}</span>${buttons}</div>`;
  };
  return `<div class="likert" data-testid="likert-${nodeId}">
    ${row("pre_hitl", "Before review")}
    ${row("post_hitl", "After review")}
  </div>`;
}

function renderNode(node: GraphNode, state: ExplorerState): string {
  const open = state.expanded[node.id];
  const dimension =
    node.dimension_title || node.dimension_id
      ? `<span class="dimension">lens: ${escapeHtml(node.dimension_title ?? node.dimension_id ?? "")}</span>`
      : "";
  const sources = node.source_instances ?? node.source_nodes ?? [];
  let detail = "";
  if (open) {
    const sourceList = sources
      .map((s) => `<button data-action="jump" data-node="${s}" class="source-link">${s}</button>`)
      .join(" ");
    const trace = state.traces[node.id];
    const traceBlock = trace
      ? `<div class="evidence"><h4>Evidence (${trace.length} journal events)</h4>${trace
          .map(renderInstanceCard)
          .join("")}</div>`
      : `<button data-action="trace" data-node="${node.id}">Show journal evidence</button>`;
    detail = `<div class="node-detail">
      <p>${escapeHtml(node.content ?? "")}</p>
      <p class="sources">sources: ${sourceList || "—"}</p>
      ${traceBlock}
      ${renderLikert(node.id, state.ratings[node.id])}
    </div>`;
  }
  return `<li class="node${open ? " open" : ""}" data-testid="node-${node.id}">
    <button data-action="toggle" data-node="${node.id}" class="node-header">
      <span class="node-id">${node.id}</span> ${escapeHtml(node.title ?? "")} ${dimension}
    </button>
    ${detail}
  </li>`;
}

export function renderExplorer(state: ExplorerState): string {
  if (state.missing) {
    return `<div class="empty" data-testid="empty-explorer">No graph yet. Ingest journals and run the build phases.</div>`;
  }
  const layers = ["L1", "L2", "L3", "L4"];
  const tabs = layers
    .map((layer) => {
      const count = state.nodesByLayer[layer]?.length ?? 0;
      const active = layer === state.activeLayer ? " active" : "";
      return `<button class="tab${active}" data-action="layer" data-layer="${layer}" data-testid="tab-${layer}">${layer} (${count})</button>`;
    })
    .join("");
  const nodes = (state.nodesByLayer[state.activeLayer] ?? [])
    .map((node) => renderNode(node, state))
    .join("");
  return `<section class="explorer">
    <nav class="tabs">${tabs}</nav>
    <ul class="nodes">${nodes || "<li class='empty'>No nodes in this layer.</li>"}</ul>
  </section>`;
}

// ----------------------------------------------------------------------
// Evaluation dashboard
// ----------------------------------------------------------------------

function scoreRow(layer: string, pre: ScoreBlock | undefined, post: ScoreBlock | undefined): string {
  const delta =
    pre?.f1 != null && post?.f1 != null ? `${((post.f1 - pre.f1) * 100).toFixed(2)} pp` : "–";
  return `<tr data-testid="score-row-${layer}">
    <td>${layer}</td>
    <td>${pct(pre?.precision ?? null)}</td><td>${pct(pre?.recall ?? null)}</td><td>${pct(pre?.f1 ?? null)}</td>
    <td>${pct(post?.precision ?? null)}</td><td>${pct(post?.recall ?? null)}</td><td>${pct(post?.f1 ?? null)}</td>
    <td>${delta}</td>
  </tr>`;
}

export function renderDashboard(pre: EvalReport | null, post: EvalReport | null): string {
  if (!pre && !post) {
    return `<div class="empty" data-testid="empty-dashboard">No evaluation report yet. Run an evaluation first.</div>`;
  }
  const base = (pre ?? post)!;
  const layers = Object.keys(base.by_layer).sort();
  const rows = [
    scoreRow("overall", pre?.overall, post?.overall),
    ...layers.map((layer) => scoreRow(layer, pre?.by_layer[layer], post?.by_layer[layer])),
  ].join("");
  const parts = [
    `<table class="scores" data-testid="scores">
      <thead>
        <tr><th rowspan="2">Layer</th><th colspan="3">Before review</th><th colspan="3">After review</th><th rowspan="2">ΔF1</th></tr>
        <tr><th>P</th><th>R</th><th>F1</th><th>P</th><th>R</th><th>F1</th></tr>
      </thead>
      <tbody>${rows}</tbody>
    </table>`,
  ];
  const jaccard = base.jaccard_by_layer;
  if (jaccard && Object.keys(jaccard).length > 0) {
    const bars = Object.keys(jaccard)
      .sort()
      .map(
        (layer) => `<div class="bar-row" data-testid="jaccard-${layer}">
          <span>${layer}</span>
          <div class="bar"><div class="fill" style="width:${Math.min(100, jaccard[layer] * 100).toFixed(1)}%"></div></div>
          <span>${num(jaccard[layer])}</span>
        </div>`,
      )
      .join("");
    parts.push(`<div class="panel" data-testid="jaccard"><h3>Vocabulary grounding (Jaccard vs journals)</h3>${bars}</div>`);
  }
  if (base.semantics && base.semantics.length > 0) {
    const bars = base.semantics
      .map(
        (s) => `<div class="bar-row" data-testid="coherence-${s.layer}">
          <span>${s.layer}</span>
          <div class="bar"><div class="fill" style="width:${((s.coherence ?? 0) * 100).toFixed(1)}%"></div></div>
          <span>${num(s.coherence)} · sim ${num(s.similarity)} · sil ${num(s.silhouette)} · ${s.topic_count ?? "–"} topics</span>
        </div>`,
      )
      .join("");
    parts.push(`<div class="panel" data-testid="semantics"><h3>Topic coherence by layer</h3>${bars}</div>`);
  }
  return `<section class="dashboard">${parts.join("\n")}</section>`;
}
