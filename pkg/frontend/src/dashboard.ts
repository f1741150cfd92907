/*
 * Evaluation dashboard. Renders the EvalReport payload exactly as served:
 * every number shown here was computed server-side, the client only
 * formats digits for display (raw values are kept in data attributes).
 */

import type { EvalReport } from "./types.js";
import { strings, type UiLocale } from "./i18n.js";

const CELL_ORDER = [
  "in_manual/rag",
  "in_manual/no_rag",
  "out_of_manual/rag",
  "out_of_manual/no_rag",
] as const;

const REFUSAL_ORDER = [
  "explicit_refusal",
  "safety_warning",
  "partial_with_escalation",
  "full_answer",
] as const;

export function renderDashboard(
  container: HTMLElement,
  report: EvalReport | null,
  locale: UiLocale,
): void {
  const ui = strings(locale);
  container.replaceChildren();
  if (report === null) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = ui.emptyDashboard;
    container.appendChild(empty);
    return;
  }

  const grid = document.createElement("div");
  grid.className = "stats-grid";
  for (const key of CELL_ORDER) {
    const stats = report.cells[key];
    if (stats === undefined) {
      continue;
    }
    const cell = document.createElement("div");
    cell.className = "stats-cell";
    cell.dataset.cell = key;
    cell.dataset.mean = String(stats.mean);
    cell.dataset.std = String(stats.std);
    cell.dataset.n = String(stats.n);

    const label = document.createElement("h4");
    label.textContent = key;
    cell.appendChild(label);

    const value = document.createElement("p");
    value.className = "stats-value";
    value.textContent = `${stats.mean.toFixed(3)} ± ${stats.std.toFixed(3)} (n=${stats.n})`;
    cell.appendChild(value);

    // Similarity is in [0, 1]; the bar maps it straight to percent width.
    const bar = document.createElement("div");
    bar.className = "stats-bar";
    const fill = document.createElement("div");
    fill.className = "stats-bar-fill";
    fill.style.width = `${Math.max(0, Math.min(1, stats.mean)) * 100}%`;
    bar.appendChild(fill);
    const whisker = document.createElement("div");
    whisker.className = "stats-bar-whisker";
    whisker.style.left = `${Math.max(0, (stats.mean - stats.std)) * 100}%`;
    whisker.style.width = `${Math.min(1, 2 * stats.std) * 100}%`;
    bar.appendChild(whisker);
    cell.appendChild(bar);
    grid.appendChild(cell);
  }
  container.appendChild(grid);

  const refusals = document.createElement("section");
  refusals.className = "refusal-breakdown";
  const refusalTitle = document.createElement("h3");
  refusalTitle.textContent = ui.refusalBreakdown;
  refusals.appendChild(refusalTitle);
  const list = document.createElement("dl");
  for (const key of REFUSAL_ORDER) {
    const dt = document.createElement("dt");
    dt.textContent = key;
    const dd = document.createElement("dd");
    dd.dataset.refusalClass = key;
    dd.textContent = String(report.refusal_counts[key]);
    list.appendChild(dt);
    list.appendChild(dd);
  }
  refusals.appendChild(list);
  container.appendChild(refusals);

  const rank = document.createElement("p");
  rank.className = "rank-test";
  if (report.mann_whitney !== null) {
    const mw = report.mann_whitney;
    rank.textContent =
      `${ui.rankTest}: U=${mw.u}, p=${mw.p_exact.toExponential(2)} (${mw.method})`;
  } else {
    rank.textContent = `${ui.rankTestOmitted}: ${report.mann_whitney_omitted_reason ?? ""}`;
  }
  container.appendChild(rank);

  if (report.rubric !== null) {
    const rubric = document.createElement("section");
    rubric.className = "rubric-means";
    const rubricTitle = document.createElement("h3");
    rubricTitle.textContent = ui.rubricTitle;
    rubric.appendChild(rubricTitle);
    const line = document.createElement("p");
    line.dataset.utility = String(report.rubric.utility_mean);
    line.dataset.safety = String(report.rubric.safety_mean);
    line.textContent =
      `${ui.utilityLabel} ${report.rubric.utility_mean.toFixed(2)} / ` +
      `${ui.safetyLabel} ${report.rubric.safety_mean.toFixed(2)} ` +
      `(${report.rubric.evaluators} ${ui.evaluatorsLabel})`;
    rubric.appendChild(line);
    container.appendChild(rubric);
  }
}
