/** Browser bootstrap: wires DOM controls to the service client.  All domain
 * numbers come from the service; this file only moves strings around. */

import { PlannerClient, ServiceError } from "./api";
import {
  buildGrid,
  diffOutcomes,
  justificationEntries,
  musEntries,
} from "./model";
import {
  renderExplanations,
  renderGrid,
  renderHistogram,
  renderObjective,
} from "./render";
import type { Charts, EditOp, Outcome, SessionState } from "./types";

interface AppState {
  sessionId: string | null;
  last: { outcome: Outcome | null; charts: Charts | null };
  solving: boolean;
}

const state: AppState = {
  sessionId: null,
  last: { outcome: null, charts: null },
  solving: false,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string): void {
  el("status").textContent = text;
}

function client(): PlannerClient {
  const base = (el<HTMLInputElement>("service-url").value || "").replace(/\/$/, "");
  return new PlannerClient(base);
}

async function refresh(session: SessionState): Promise<void> {
  const outcomePanel = el("outcome");
  const gridPanel = el("grid");
  const histogramPanel = el("histogram");
  const staleBadge = el("stale-badge");
  staleBadge.hidden = !session.stale;
  if (session.outcome) {
    outcomePanel.innerHTML = renderObjective(
      session.outcome.objective ?? null,
      session.outcome.status,
    );
  } else {
    outcomePanel.innerHTML = "<p>not solved yet</p>";
  }
  const grid = buildGrid(session);
  gridPanel.innerHTML = grid ? renderGrid(grid) : "";
  histogramPanel.innerHTML = session.charts ? renderHistogram(session.charts) : "";
}

async function loadInstance(): Promise<void> {
  const raw = el<HTMLTextAreaElement>("instance-editor").value;
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch (exc) {
    setStatus(`instance is not valid JSON: ${exc}`);
    return;
  }
  try {
    const id = await client().createSession(parsed as never);
    state.sessionId = id;
    state.last = { outcome: null, charts: null };
    setStatus(`session ${id} created`);
    await refresh(await client().getSession(id));
  } catch (exc) {
    setStatus(exc instanceof ServiceError ? `service: ${exc.message}` : String(exc));
  }
}

async function solve(): Promise<void> {
  if (!state.sessionId || state.solving) return;
  const button = el<HTMLButtonElement>("solve-button");
  state.solving = true;
  button.disabled = true;
  setStatus("solving…");
  try {
    const outcome = await client().solve(state.sessionId);
    const session = await client().getSession(state.sessionId);
    const diff = diffOutcomes(state.last, {
      outcome: session.outcome,
      charts: session.charts,
    });
    state.last = { outcome: session.outcome, charts: session.charts };
    await refresh(session);
    if (outcome.status === "unsat") {
      const mus = await client().explainUnsat(state.sessionId);
      el("explanations").innerHTML = renderExplanations(
        musEntries(mus),
        "why there is no schedule",
      );
      setStatus("infeasible; see the explanation panel");
    } else {
      el("explanations").innerHTML = "";
      setStatus(
        diff.objectiveChanged
          ? `solved; objective ${JSON.stringify(diff.after)} (was ${JSON.stringify(diff.before)})`
          : "solved",
      );
    }
  } catch (exc) {
    setStatus(exc instanceof ServiceError ? `service: ${exc.message}` : String(exc));
  } finally {
    state.solving = false;
    button.disabled = false;
  }
}

async function explainWhy(): Promise<void> {
  if (!state.sessionId) return;
  const atom = el<HTMLInputElement>("atom-input").value.trim();
  if (!atom) return;
  try {
    const doc = await client().explainWhy(state.sessionId, atom);
    el("explanations").innerHTML = renderExplanations(
      justificationEntries(doc),
      `why ${atom}`,
    );
  } catch (exc) {
    setStatus(exc instanceof ServiceError ? `service: ${exc.message}` : String(exc));
  }
}

async function applyWhatIf(): Promise<void> {
  if (!state.sessionId) return;
  let ops: EditOp[];
  try {
    ops = JSON.parse(el<HTMLTextAreaElement>("whatif-editor").value);
  } catch (exc) {
    setStatus(`edit ops are not valid JSON: ${exc}`);
    return;
  }
  try {
    const before = state.last;
    const { state: session } = await client().whatIf(state.sessionId, ops);
    const diff = diffOutcomes(before, {
      outcome: session.outcome,
      charts: session.charts,
    });
    state.last = { outcome: session.outcome, charts: session.charts };
    await refresh(session);
    setStatus(
      `what-if applied: ${diff.statusBefore} → ${diff.statusAfter}; ` +
        `objective ${JSON.stringify(diff.before)} → ${JSON.stringify(diff.after)}`,
    );
    if (session.outcome?.status === "unsat") {
      const mus = await client().explainUnsat(state.sessionId);
      el("explanations").innerHTML = renderExplanations(
        musEntries(mus),
        "why there is no schedule",
      );
    }
  } catch (exc) {
    setStatus(exc instanceof ServiceError ? `service: ${exc.message}` : String(exc));
  }
}

export function mount(): void {
  el("load-button").addEventListener("click", () => void loadInstance());
  el("solve-button").addEventListener("click", () => void solve());
  el("why-button").addEventListener("click", () => void explainWhy());
  el("whatif-button").addEventListener("click", () => void applyWhatIf());
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  mount();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", mount);
}
