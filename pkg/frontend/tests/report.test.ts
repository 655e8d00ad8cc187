import { describe, expect, it } from "vitest";

import { renderEvalReport } from "../src/report.js";
import type { EvalReport } from "../src/types.js";

function makeReport(method: string, auc: number, threshold: number | null): EvalReport {
  return {
    method,
    auc,
    threshold,
    sensitivity: 0.9,
    specificity: 0.8,
    threshold_policy: "max_balanced_accuracy",
    roc: [
      [0.0, 0.0, null],
      [0.0, 0.5, 12.5],
      [0.25, 1.0, 8.1],
      [1.0, 1.0, 1.0],
    ],
    per_cluster: [{ cluster: 0, size: 10, auc: auc }],
  };
}

describe("evaluation report", () => {
  it("prints one row per method with the service's numbers attached", () => {
    const container = document.createElement("div");
    renderEvalReport(container, [
      makeReport("detector", 0.8725, 10.25),
      makeReport("knn(k=3,p=2)", 0.6412, null),
    ]);

    const rows = [...container.querySelectorAll("tbody tr")];
    expect(rows).toHaveLength(2);
    expect(rows[0].getAttribute("data-method")).toBe("detector");
    expect(rows[0].getAttribute("data-auc")).toBe("0.8725");
    const cells = [...rows[0].querySelectorAll("td")].map((c) => c.textContent);
    expect(cells).toEqual(["detector", "0.873", "0.900", "0.800", "10.250"]);

    // a missing threshold renders as inf, not as a number
    const baseline = [...rows[1].querySelectorAll("td")].map((c) => c.textContent);
    expect(baseline[4]).toBe("inf");
  });

  it("draws one roc line per report plus the chance diagonal", () => {
    const container = document.createElement("div");
    renderEvalReport(container, [makeReport("detector", 0.9, 5.0)]);
    const lines = [...container.querySelectorAll(".roc-line")];
    expect(lines).toHaveLength(1);
    expect(lines[0].getAttribute("data-method")).toBe("detector");
    const points = lines[0].getAttribute("points")!.split(" ");
    expect(points).toHaveLength(4);
    expect(container.querySelector("line[stroke-dasharray]")).not.toBeNull();
  });

  it("shows an empty state before any evaluation ran", () => {
    const container = document.createElement("div");
    renderEvalReport(container, []);
    expect(container.querySelector(".empty-state")).not.toBeNull();
    expect(container.querySelector("table")).toBeNull();
  });
});
