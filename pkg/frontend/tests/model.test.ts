import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import {
  buildCtsGrid,
  buildOrsGrid,
  diffOutcomes,
  histogramTotal,
  justificationEntries,
  musEntries,
} from "../src/model";
import { renderExplanations, renderGrid, renderHistogram } from "../src/render";
import type {
  Charts,
  CtsInstance,
  CtsSolution,
  JustificationDocument,
  MusDocument,
  OrsInstance,
  OrsSolution,
} from "../src/types";

const here = dirname(fileURLToPath(import.meta.url));
const ctsInstance = JSON.parse(
  readFileSync(join(here, "fixtures", "cts-day.json"), "utf8"),
) as CtsInstance;

const ctsSolution: CtsSolution = {
  kind: "cts-solution",
  status: "optimal",
  objective: [0, 1],
  patients: ctsInstance.patients.map((p, i) => ({
    id: p.id,
    phase_starts: [i, i + 1, i + 2, i + 3],
    resource: ctsInstance.resources[i % ctsInstance.resources.length].id,
  })),
};

describe("cts grid", () => {
  it("covers every patient with phase cells matching the durations", () => {
    const labels = Array.from({ length: ctsInstance.slots }, (_, i) => `t${i}`);
    const grid = buildCtsGrid(ctsInstance, ctsSolution, labels);
    expect(grid.rows).toHaveLength(ctsInstance.patients.length);
    for (const [i, row] of grid.rows.entries()) {
      const durations = ctsInstance.patients[i].durations;
      const expected = durations[0] + durations[1] + durations[2] + durations[3];
      expect(row.cells).toHaveLength(expected);
    }
  });

  it("renders one table row per patient", () => {
    const labels = Array.from({ length: ctsInstance.slots }, (_, i) => `t${i}`);
    const html = renderGrid(buildCtsGrid(ctsInstance, ctsSolution, labels));
    const rows = html.match(/<tr>/g) ?? [];
    expect(rows.length).toBe(ctsInstance.patients.length + 1); // + header
    expect(html).toContain("phase-blood");
  });
});

describe("ors grid", () => {
  const instance: OrsInstance = {
    format_version: 1,
    kind: "ors",
    horizon_days: 1,
    registrations: [
      { id: "r1", specialty: "surgery", duration: 100, priority: 1, scu: null },
      { id: "r2", specialty: "surgery", duration: 100, priority: 2, scu: null },
    ],
    shifts: [
      { id: "s1", room: "or1", day: 0, specialty: "surgery", length: 150 },
    ],
    units: [],
  };
  const solution: OrsSolution = {
    kind: "ors-solution",
    status: "optimal",
    objective: [1, 0],
    assignments: [
      { id: "r1", shift: "s1" },
      { id: "r2", shift: null },
    ],
  };

  it("groups registrations under shifts and lists the unassigned", () => {
    const grid = buildOrsGrid(instance, solution);
    expect(grid.rows[0].resource).toContain("r1");
    expect(grid.rows.at(-1)?.label).toBe("unassigned");
    expect(grid.rows.at(-1)?.resource).toContain("r2");
  });
});

describe("histogram", () => {
  const charts: Charts = {
    labels: ["07:40", "07:50", "08:00"],
    exact: [1, 1, 1],
    baseline: [3, 0, 0],
  };

  it("totals match per series", () => {
    expect(histogramTotal(charts, "exact")).toBe(3);
    expect(histogramTotal(charts, "baseline")).toBe(3);
  });

  it("renders one pair of bars per slot with the label on the axis", () => {
    const svg = renderHistogram(charts);
    expect(svg.match(/bar-exact/g)).toHaveLength(3);
    expect(svg.match(/bar-baseline/g)).toHaveLength(3);
    expect(svg).toContain("07:50");
  });
});

describe("explanations", () => {
  it("maps MUS entries to panel items", () => {
    const mus: MusDocument = {
      kind: "mus",
      constraints: [
        { label: "capacity(s1)", description: "shift s1 is full" },
        { label: "assign-all-p1(r1)", description: "r1 must be placed" },
      ],
    };
    const entries = musEntries(mus);
    expect(entries).toHaveLength(2);
    const html = renderExplanations(entries, "why unsat");
    expect(html).toContain("shift s1 is full");
    expect(html).toContain("why unsat");
  });

  it("summarizes justification roots with their supporters", () => {
    const doc: JustificationDocument = {
      kind: "justification",
      roots: [0],
      nodes: [
        { id: 0, type: "assignment", atom: "assign(r1)=s1", status: "supported" },
        { id: 1, type: "fact", label: "capacity(s1)", description: "shift s1 is full" },
      ],
      edges: [{ from: 0, to: [1] }],
    };
    const entries = justificationEntries(doc);
    expect(entries[0].title).toContain("assign(r1)=s1");
    expect(entries[0].detail).toContain("shift s1 is full");
  });
});

describe("what-if diff", () => {
  it("reports objective and peak movement", () => {
    const before = {
      outcome: { status: "unsat", objective: null } as const,
      charts: null,
    };
    const after = {
      outcome: {
        kind: "ors-solution",
        status: "optimal",
        objective: [0, 0],
        assignments: [],
      } as OrsSolution,
      charts: { labels: ["a"], exact: [2], baseline: [4] },
    };
    const diff = diffOutcomes(before, after);
    expect(diff.statusBefore).toBe("unsat");
    expect(diff.statusAfter).toBe("optimal");
    expect(diff.objectiveChanged).toBe(true);
    expect(diff.peakAfter).toBe(2);
  });
});
