/**
 * Page wiring: connect form, error banner with retry, and the campaign table.
 */

import { AdvisorClient, ApiError } from "./api.js";
import { CampaignSession } from "./session.js";
import { render } from "./view.js";

interface Elements {
  form: HTMLFormElement;
  baseUrl: HTMLInputElement;
  campaignId: HTMLInputElement;
  alternatives: HTMLTextAreaElement;
  lambda: HTMLInputElement;
  seed: HTMLInputElement;
  banner: HTMLElement;
  content: HTMLElement;
}

let session: CampaignSession | null = null;
let lastConnect: (() => Promise<void>) | null = null;

function grab(): Elements {
  const byId = <T extends HTMLElement>(id: string): T => {
    const el = document.getElementById(id);
    if (!el) {
      throw new Error(`missing element #${id}`);
    }
    return el as T;
  };
  return {
    form: byId<HTMLFormElement>("connect-form"),
    baseUrl: byId<HTMLInputElement>("base-url"),
    campaignId: byId<HTMLInputElement>("campaign-id"),
    alternatives: byId<HTMLTextAreaElement>("alternatives"),
    lambda: byId<HTMLInputElement>("lambda"),
    seed: byId<HTMLInputElement>("seed"),
    banner: byId<HTMLElement>("banner"),
    content: byId<HTMLElement>("content"),
  };
}

function showError(els: Elements, message: string): void {
  els.banner.replaceChildren();
  const text = document.createElement("span");
  text.textContent = message;
  const retry = document.createElement("button");
  retry.type = "button";
  retry.textContent = "retry";
  retry.addEventListener("click", () => {
    if (lastConnect) {
      void lastConnect();
    }
  });
  els.banner.append(text, retry);
  els.banner.hidden = false;
}

function clearError(els: Elements): void {
  els.banner.hidden = true;
  els.banner.replaceChildren();
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return `service error ${err.status}: ${err.message}`;
  }
  if (err instanceof Error) {
    return `cannot reach the service: ${err.message}`;
  }
  return String(err);
}

function paint(els: Elements): void {
  if (!session) {
    return;
  }
  render(els.content, session.view, { onRecord: (id, label) => void record(els, id, label) },
    session.busy);
}

async function record(els: Elements, alternativeId: number, label: 1 | -1): Promise<void> {
  if (!session || session.busy) {
    return;
  }
  paint(els); // repaint with disabled buttons while the request runs
  try {
    await session.recordOutcome(alternativeId, label);
    clearError(els);
  } catch (err) {
    showError(els, describe(err));
  }
  paint(els);
}

function parseAlternatives(text: string): number[][] {
  const rows = text
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0)
    .map((line) => line.split(",").map((cell) => Number(cell.trim())));
  if (rows.some((row) => row.some((v) => !Number.isFinite(v)))) {
    throw new Error("alternatives must be comma-separated numbers, one row per line");
  }
  return rows;
}

async function connect(els: Elements): Promise<void> {
  const client = new AdvisorClient(els.baseUrl.value || window.location.origin);
  const id = els.campaignId.value.trim();
  try {
    if (id) {
      session = await CampaignSession.connect(client, { campaignId: id });
    } else {
      session = await CampaignSession.connect(client, {
        create: {
          lambda: Number(els.lambda.value) || 1.0,
          seed: Number(els.seed.value) || 0,
          intercept: true,
          alternatives: parseAlternatives(els.alternatives.value),
        },
      });
    }
    clearError(els);
    paint(els);
  } catch (err) {
    showError(els, describe(err));
  }
}

export function start(): void {
  const els = grab();
  els.form.addEventListener("submit", (event) => {
    event.preventDefault();
    lastConnect = () => connect(els);
    void lastConnect();
  });
}

if (typeof document !== "undefined" && document.getElementById("connect-form")) {
  start();
}
