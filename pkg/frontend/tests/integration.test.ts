/** End-to-end flow against the real scheduling service:
 * load fixture -> solve -> grid + histogram totals match the documents;
 * unsat fixture -> explanation panel entries;
 * scripted what-if edit flips the session to satisfiable. */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcess } from "node:child_process";
import { readFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import { PlannerClient } from "../src/api";
import {
  buildGrid,
  diffOutcomes,
  histogramTotal,
  musEntries,
} from "../src/model";
import { renderExplanations, renderGrid, renderHistogram } from "../src/render";
import type { CtsInstance, CtsSolution, OrsInstance } from "../src/types";

const here = dirname(fileURLToPath(import.meta.url));
const repoRoot = join(here, "..", "..");
const PORT = 8741;
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;

async function waitForHealth(client: PlannerClient, tries = 100): Promise<void> {
  for (let i = 0; i < tries; i += 1) {
    try {
      await client.health();
      return;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 200));
    }
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  service = spawn(
    "python3",
    ["-m", "clinsched.cli", "serve", "--port", String(PORT)],
    { cwd: repoRoot, stdio: "ignore" },
  );
  await waitForHealth(new PlannerClient(BASE));
}, 30000);

afterAll(() => {
  service?.kill();
});

describe("planner against the live service", () => {
  const client = new PlannerClient(BASE);

  it("solves the day-ward fixture and renders consistent grid and histogram", async () => {
    const instance = JSON.parse(
      readFileSync(join(here, "fixtures", "cts-day.json"), "utf8"),
    ) as CtsInstance;
    const id = await client.createSession(instance);
    const outcome = await client.solve(id, 30);
    expect(outcome.status).toBe("optimal");
    const state = await client.getSession(id);
    const grid = buildGrid(state);
    expect(grid).not.toBeNull();
    expect(grid!.rows).toHaveLength(instance.patients.length);
    // every patient is placed on a known resource
    const resourceIds = new Set(instance.resources.map((r) => r.id));
    for (const placed of (state.outcome as CtsSolution).patients) {
      expect(resourceIds.has(placed.resource)).toBe(true);
    }
    // histogram totals equal the patient count, straight off the service doc
    expect(state.charts).not.toBeNull();
    expect(histogramTotal(state.charts!, "exact")).toBe(instance.patients.length);
    expect(histogramTotal(state.charts!, "baseline")).toBe(instance.patients.length);
    const gridHtml = renderGrid(grid!);
    const histSvg = renderHistogram(state.charts!);
    expect(gridHtml).toContain(instance.patients[0].id);
    expect(histSvg).toContain("bar-exact");
  }, 60000);

  it("surfaces the MUS for the unsat fixture, then a what-if edit flips it", async () => {
    const instance = JSON.parse(
      readFileSync(join(here, "fixtures", "ors-unsat.json"), "utf8"),
    ) as OrsInstance;
    const id = await client.createSession(instance);
    const outcome = await client.solve(id, 30);
    expect(outcome.status).toBe("unsat");
    const mus = await client.explainUnsat(id);
    const entries = musEntries(mus);
    expect(entries.length).toBeGreaterThan(0);
    const labels = entries.map((e) => e.title);
    expect(labels).toContain("capacity(s1)");
    const panel = renderExplanations(entries, "why there is no schedule");
    expect(panel).toContain("capacity(s1)");

    // scripted what-if: drop one priority-1 registration, re-solve
    const before = await client.getSession(id);
    const { state: afterState } = await client.whatIf(id, [
      { op: "remove_registration", id: "r2" },
    ]);
    expect(afterState.outcome?.status).toBe("optimal");
    const diff = diffOutcomes(
      { outcome: before.outcome, charts: before.charts },
      { outcome: afterState.outcome, charts: afterState.charts },
    );
    expect(diff.statusBefore).toBe("unsat");
    expect(diff.statusAfter).toBe("optimal");
    // the explanation panel updates: asking again is now a client error
    await expect(client.explainUnsat(id)).rejects.toMatchObject({ status: 400 });
  }, 60000);

  it("stale flag shows after edits until the next solve", async () => {
    const instance = JSON.parse(
      readFileSync(join(here, "fixtures", "cts-day.json"), "utf8"),
    ) as CtsInstance;
    const id = await client.createSession(instance);
    await client.solve(id, 30);
    await client.edit(id, [
      { op: "modify_patient", id: instance.patients[0].id, fields: { preferred: "chair" } },
    ]);
    const state = await client.getSession(id);
    expect(state.stale).toBe(true);
    expect(state.charts).toBeNull(); // stale outcomes are not charted
    await client.solve(id, 30);
    expect((await client.getSession(id)).stale).toBe(false);
  }, 60000);
});
