// Evaluation report rendering: one summary row per detector or baseline,
// plus an ROC overlay.  Values are printed as returned by the service.

import { scaleLinear } from "./geometry.js";
import type { EvalReport } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const LINE_COLORS = ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#b279a2"];

export function renderEvalReport(container: HTMLElement, reports: EvalReport[]): void {
  container.textContent = "";
  if (reports.length === 0) {
    const msg = document.createElement("div");
    msg.className = "empty-state";
    msg.textContent = "no evaluations yet";
    container.appendChild(msg);
    return;
  }

  const table = document.createElement("table");
  table.className = "eval-table";
  const head = table.createTHead().insertRow();
  for (const label of ["method", "auc", "sensitivity", "specificity", "threshold"]) {
    const th = document.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  const body = table.createTBody();
  for (const report of reports) {
    const row = body.insertRow();
    row.dataset.method = report.method;
    row.dataset.auc = String(report.auc);
    const cells = [
      report.method,
      report.auc.toFixed(3),
      report.sensitivity.toFixed(3),
      report.specificity.toFixed(3),
      report.threshold === null ? "inf" : report.threshold.toFixed(3),
    ];
    for (const text of cells) {
      const cell = row.insertCell();
      cell.textContent = text;
    }
  }
  container.appendChild(table);

  const size = 260;
  const margin = 28;
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(size));
  svg.setAttribute("height", String(size));
  svg.setAttribute("viewBox", `0 0 ${size} ${size}`);
  svg.setAttribute("class", "roc-plot");

  const sx = (fpr: number) => scaleLinear(fpr, 0, 1, margin, size - 8);
  const sy = (tpr: number) => scaleLinear(tpr, 0, 1, size - margin, 8);

  const diagonal = document.createElementNS(SVG_NS, "line");
  diagonal.setAttribute("x1", String(sx(0)));
  diagonal.setAttribute("y1", String(sy(0)));
  diagonal.setAttribute("x2", String(sx(1)));
  diagonal.setAttribute("y2", String(sy(1)));
  diagonal.setAttribute("stroke", "#ccc");
  diagonal.setAttribute("stroke-dasharray", "4 3");
  svg.appendChild(diagonal);

  reports.forEach((report, i) => {
    const line = document.createElementNS(SVG_NS, "polyline");
    line.setAttribute("class", "roc-line");
    line.setAttribute("data-method", report.method);
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", LINE_COLORS[i % LINE_COLORS.length]);
    line.setAttribute("stroke-width", "1.5");
    const points = report.roc
      .map(([fpr, tpr]) => `${sx(fpr).toFixed(1)},${sy(tpr).toFixed(1)}`)
      .join(" ");
    line.setAttribute("points", points);
    svg.appendChild(line);
  });

  container.appendChild(svg);
}
