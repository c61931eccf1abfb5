/** HTML/SVG string renderers; DOM-free so they test under plain node. */

import type { Charts } from "./types";
import type { ExplanationEntry, ScheduleGrid } from "./model";

function esc(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

const PHASE_CLASS = ["", "phase-registration", "phase-blood", "phase-check", "phase-therapy"];

export function renderGrid(grid: ScheduleGrid): string {
  const parts: string[] = ['<table class="grid">'];
  if (grid.kind === "cts") {
    parts.push("<thead><tr><th>patient</th><th>resource</th>");
    for (const col of grid.columns) parts.push(`<th>${esc(col)}</th>`);
    parts.push("</tr></thead><tbody>");
    for (const row of grid.rows) {
      const bySlot = new Map(row.cells.map((c) => [c.slot, c.phase]));
      parts.push(`<tr><td>${esc(row.label)}</td><td>${esc(row.resource)}</td>`);
      for (let t = 0; t < grid.columns.length; t += 1) {
        const phase = bySlot.get(t);
        parts.push(
          phase
            ? `<td class="${PHASE_CLASS[phase]}">${phase}</td>`
            : "<td></td>",
        );
      }
      parts.push("</tr>");
    }
  } else {
    parts.push("<thead><tr><th>shift</th><th>registrations</th></tr></thead><tbody>");
    for (const row of grid.rows) {
      parts.push(
        `<tr><td>${esc(row.label)}</td><td>${esc(row.resource)}</td></tr>`,
      );
    }
  }
  parts.push("</tbody></table>");
  return parts.join("");
}

/** Grouped bar chart over the slot-label category axis, baseline vs exact. */
export function renderHistogram(charts: Charts): string {
  const n = charts.labels.length;
  const barW = 8;
  const groupW = barW * 2 + 6;
  const height = 160;
  const axis = 18;
  const maxVal = Math.max(1, ...charts.exact, ...charts.baseline);
  const scale = (height - 20) / maxVal;
  const width = n * groupW + 40;
  const parts = [
    `<svg class="histogram" viewBox="0 0 ${width} ${height + 60}" xmlns="http://www.w3.org/2000/svg">`,
  ];
  charts.labels.forEach((label, i) => {
    const x = 30 + i * groupW;
    const b = charts.baseline[i];
    const e = charts.exact[i];
    parts.push(
      `<rect class="bar-baseline" x="${x}" y="${height - b * scale}" width="${barW}" height="${b * scale}"><title>${esc(label)} baseline ${b}</title></rect>`,
      `<rect class="bar-exact" x="${x + barW + 2}" y="${height - e * scale}" width="${barW}" height="${e * scale}"><title>${esc(label)} exact ${e}</title></rect>`,
      `<text x="${x + barW}" y="${height + axis}" transform="rotate(90 ${x + barW} ${height + axis})" font-size="8">${esc(label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}

export function renderExplanations(entries: ExplanationEntry[], heading: string): string {
  if (!entries.length) {
    return `<div class="explanations"><h3>${esc(heading)}</h3><p>nothing to explain</p></div>`;
  }
  const items = entries
    .map(
      (e) =>
        `<li><strong>${esc(e.title)}</strong>${e.detail ? `<br/><span>${esc(e.detail)}</span>` : ""}</li>`,
    )
    .join("");
  return `<div class="explanations"><h3>${esc(heading)}</h3><ul>${items}</ul></div>`;
}

export function renderObjective(objective: number[] | null, status: string): string {
  if (objective === null) {
    return `<p class="objective">status: ${esc(status)}</p>`;
  }
  return `<p class="objective">status: ${esc(status)}; objective [${objective.join(", ")}]</p>`;
}
