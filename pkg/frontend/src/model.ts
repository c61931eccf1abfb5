/** View-model construction: pure functions from service documents to
 * render-ready structures.  No scheduling logic lives here; everything is a
 * reshaping of numbers the service already computed. */

import type {
  Charts,
  CtsInstance,
  CtsSolution,
  Instance,
  JustificationDocument,
  MusDocument,
  Outcome,
  OrsInstance,
  OrsSolution,
  SessionState,
} from "./types";

export interface GridCell {
  slot: number;
  phase: 1 | 2 | 3 | 4;
}

export interface GridRow {
  label: string;
  resource: string;
  cells: GridCell[];
}

export interface ScheduleGrid {
  kind: "cts" | "ors";
  columns: string[];
  rows: GridRow[];
}

export interface ExplanationEntry {
  title: string;
  detail: string;
}

export function isCts(instance: Instance): instance is CtsInstance {
  return instance.kind === "cts";
}

export function hasSchedule(outcome: Outcome | null): boolean {
  return (
    outcome !== null &&
    (outcome.status === "optimal" || outcome.status === "feasible_timeout")
  );
}

/** Patients-by-slots occupancy grid; each cell shows which phase runs. */
export function buildCtsGrid(
  instance: CtsInstance,
  solution: CtsSolution,
  labels: string[],
): ScheduleGrid {
  const byId = new Map(instance.patients.map((p) => [p.id, p]));
  const rows: GridRow[] = [];
  for (const placed of solution.patients) {
    const patient = byId.get(placed.id);
    if (!patient) continue;
    const cells: GridCell[] = [];
    for (let phase = 0; phase < 4; phase += 1) {
      const start = placed.phase_starts[phase];
      for (let t = start; t < start + patient.durations[phase]; t += 1) {
        cells.push({ slot: t, phase: (phase + 1) as GridCell["phase"] });
      }
    }
    rows.push({ label: placed.id, resource: placed.resource, cells });
  }
  return { kind: "cts", columns: labels, rows };
}

/** Registrations grouped under their shifts; unassigned ones listed last. */
export function buildOrsGrid(
  instance: OrsInstance,
  solution: OrsSolution,
): ScheduleGrid {
  const columns = instance.shifts.map((s) => `${s.id} (${s.specialty}, ${s.length}m)`);
  const byShift = new Map<string, string[]>();
  const unassigned: string[] = [];
  for (const a of solution.assignments) {
    if (a.shift === null) {
      unassigned.push(a.id);
    } else {
      const bucket = byShift.get(a.shift) ?? [];
      bucket.push(a.id);
      byShift.set(a.shift, bucket);
    }
  }
  const rows: GridRow[] = instance.shifts.map((s, idx) => ({
    label: s.id,
    resource: (byShift.get(s.id) ?? []).join(", ") || "(empty)",
    cells: (byShift.get(s.id) ?? []).map((_, i) => ({
      slot: idx,
      phase: 4 as const,
    })),
  }));
  if (unassigned.length) {
    rows.push({
      label: "unassigned",
      resource: unassigned.join(", "),
      cells: [],
    });
  }
  return { kind: "ors", columns, rows };
}

export function buildGrid(state: SessionState): ScheduleGrid | null {
  if (!hasSchedule(state.outcome)) return null;
  if (isCts(state.instance)) {
    const labels =
      state.charts?.labels ??
      Array.from({ length: state.instance.slots }, (_, i) => String(i));
    return buildCtsGrid(state.instance, state.outcome as CtsSolution, labels);
  }
  return buildOrsGrid(state.instance as OrsInstance, state.outcome as OrsSolution);
}

export function histogramTotal(charts: Charts, series: "exact" | "baseline"): number {
  return charts[series].reduce((a, b) => a + b, 0);
}

export function musEntries(doc: MusDocument): ExplanationEntry[] {
  return doc.constraints.map((c) => ({ title: c.label, detail: c.description }));
}

export function justificationEntries(
  doc: JustificationDocument,
): ExplanationEntry[] {
  const byId = new Map(doc.nodes.map((n) => [n.id, n]));
  const out: ExplanationEntry[] = [];
  for (const root of doc.roots) {
    const node = byId.get(root);
    if (!node) continue;
    const supporters =
      doc.edges
        .find((e) => e.from === root)
        ?.to.map((i) => {
          const s = byId.get(i);
          if (!s) return "?";
          return s.type === "fact" ? s.description ?? s.label ?? "?" : s.atom ?? "?";
        }) ?? [];
    out.push({
      title: `${node.atom} (${node.status})`,
      detail: supporters.length ? `because: ${supporters.join("; ")}` : "",
    });
  }
  return out;
}

export interface WhatIfDiff {
  before: number[] | null;
  after: number[] | null;
  objectiveChanged: boolean;
  statusBefore: string;
  statusAfter: string;
  peakBefore: number | null;
  peakAfter: number | null;
}

export function diffOutcomes(
  before: { outcome: Outcome | null; charts: Charts | null },
  after: { outcome: Outcome | null; charts: Charts | null },
): WhatIfDiff {
  const objBefore = before.outcome?.objective ?? null;
  const objAfter = after.outcome?.objective ?? null;
  const peak = (charts: Charts | null) =>
    charts ? Math.max(0, ...charts.exact) : null;
  return {
    before: objBefore,
    after: objAfter,
    objectiveChanged: JSON.stringify(objBefore) !== JSON.stringify(objAfter),
    statusBefore: before.outcome?.status ?? "unsolved",
    statusAfter: after.outcome?.status ?? "unsolved",
    peakBefore: peak(before.charts),
    peakAfter: peak(after.charts),
  };
}
