/**
 * View model assembly and DOM rendering. The view is a pure function of the
 * latest service responses: build it with buildView, paint it with render.
 */

import type { CampaignInfo, Implementation, Recommendation } from "./api.js";

export interface CampaignRow {
  id: number;
  preview: string;
  fullFeatures: string;
  kgScore: number;
  posProb: number;
  recommended: boolean;
}

export interface CampaignView {
  campaignId: string;
  rows: CampaignRow[];
  mean: number[];
  precision: number[];
  historyCount: number;
  implementationId: number;
  implementationProb: number;
}

const PREVIEW_COORDS = 6;

export function featuresPreview(features: number[]): string {
  const shown = features.slice(0, PREVIEW_COORDS).map((v) => formatNumber(v, 3));
  const suffix = features.length > PREVIEW_COORDS ? ", …" : "";
  return `[${shown.join(", ")}${suffix}]`;
}

export function formatNumber(value: number, digits = 4): string {
  return Number.isFinite(value) ? value.toFixed(digits) : String(value);
}

export function buildView(
  info: CampaignInfo,
  recommendation: Recommendation,
  implementation: Implementation,
): CampaignView {
  const rows: CampaignRow[] = info.alternatives.map((features, i) => ({
    id: i,
    preview: featuresPreview(features),
    fullFeatures: `[${features.join(", ")}]`,
    kgScore: recommendation.scores[i] ?? NaN,
    posProb: recommendation.pos_prob[i] ?? NaN,
    recommended: i === recommendation.chosen,
  }));
  // recommended row pinned to the top, everything else by score descending
  rows.sort((a, b) => {
    if (a.recommended !== b.recommended) {
      return a.recommended ? -1 : 1;
    }
    if (b.kgScore !== a.kgScore) {
      return b.kgScore - a.kgScore;
    }
    return a.id - b.id;
  });
  return {
    campaignId: info.id,
    rows,
    mean: info.mean,
    precision: info.precision,
    historyCount: info.n,
    implementationId: implementation.alternative_id,
    implementationProb: implementation.probability,
  };
}

export interface RenderHandlers {
  onRecord: (alternativeId: number, label: 1 | -1) => void;
}

export function render(
  root: HTMLElement,
  view: CampaignView,
  handlers: RenderHandlers,
  busy: boolean,
): void {
  root.replaceChildren();

  const summary = document.createElement("div");
  summary.className = "summary";
  summary.append(
    line(`Campaign ${view.campaignId} — ${view.historyCount} observation(s) recorded`),
    line(
      `Implementation decision: alternative ${view.implementationId} ` +
        `(P(+1) = ${formatNumber(view.implementationProb)})`,
      "implementation",
    ),
    line(`Belief mean: [${view.mean.map((v) => formatNumber(v, 3)).join(", ")}]`),
    line(`Belief precision: [${view.precision.map((v) => formatNumber(v, 3)).join(", ")}]`),
  );
  root.append(summary);

  const table = document.createElement("table");
  table.className = "pool";
  const head = document.createElement("tr");
  for (const title of ["", "id", "features", "KG score", "P(y=+1)", "record outcome"]) {
    const th = document.createElement("th");
    th.textContent = title;
    head.append(th);
  }
  table.append(head);

  for (const row of view.rows) {
    const tr = document.createElement("tr");
    tr.dataset.alternativeId = String(row.id);
    if (row.recommended) {
      tr.className = "recommended";
    }

    const flag = document.createElement("td");
    flag.textContent = row.recommended ? "▶ next" : "";
    const id = document.createElement("td");
    id.textContent = String(row.id);
    const features = document.createElement("td");
    features.textContent = row.preview;
    features.title = row.fullFeatures;
    const score = document.createElement("td");
    score.className = "kg-score";
    score.textContent = formatNumber(row.kgScore, 6);
    const prob = document.createElement("td");
    prob.className = "pos-prob";
    prob.textContent = formatNumber(row.posProb, 6);

    const actions = document.createElement("td");
    for (const label of [1, -1] as const) {
      const button = document.createElement("button");
      button.type = "button";
      button.textContent = label === 1 ? "+1" : "-1";
      button.dataset.label = String(label);
      button.disabled = busy;
      button.addEventListener("click", () => handlers.onRecord(row.id, label));
      actions.append(button);
    }

    tr.append(flag, id, features, score, prob, actions);
    table.append(tr);
  }
  root.append(table);
}

function line(text: string, className?: string): HTMLParagraphElement {
  const p = document.createElement("p");
  p.textContent = text;
  if (className) {
    p.className = className;
  }
  return p;
}
