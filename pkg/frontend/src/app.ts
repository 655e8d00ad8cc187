// Entry point: loads a project, renders the topic views, and wires the
// grouping workflow (select, group, export, train, evaluate).

import { ApiClient, ApiError } from "./api.js";
import { renderChord } from "./chord.js";
import { GroupingState } from "./grouping.js";
import { renderTopicWordMatrix } from "./heat.js";
import { renderEvalReport } from "./report.js";
import { renderTopicScatter, type ScatterHandle } from "./scatter.js";
import type { EvalReport, LabeledSequenceIn, TopicProjection } from "./types.js";

const api = new ApiClient("");

let projectId = "";
let projection: TopicProjection | null = null;
let grouping = new GroupingState();
let scatter: ScatterHandle | null = null;
let detectors: string[] = [];
let reports: EvalReport[] = [];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function setStatus(text: string): void {
  el("status").textContent = text;
}

function allTopicIds(): number[] {
  return projection ? projection.topics.map((t) => t.id) : [];
}

function persistGrouping(): void {
  api.putGrouping(projectId, grouping.toJSON()).catch((err) => {
    setStatus(`saving grouping failed: ${err.message}`);
  });
}

function afterGroupingChange(): void {
  if (scatter) scatter.refresh(grouping);
  renderGroupPanel();
  persistGrouping();
}

function renderGroupPanel(): void {
  const panel = el("groups");
  panel.textContent = "";

  grouping.groups.forEach((group, index) => {
    const row = document.createElement("div");
    row.className = "group-row";

    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.backgroundColor = group.color;
    row.appendChild(swatch);

    const name = document.createElement("input");
    name.value = group.name;
    name.addEventListener("change", () => {
      grouping.renameGroup(index, name.value);
      afterGroupingChange();
    });
    row.appendChild(name);

    const count = document.createElement("span");
    count.className = "count";
    count.textContent = `${group.topicIds.length} topics`;
    row.appendChild(count);

    const extend = document.createElement("button");
    extend.textContent = "add selection";
    extend.addEventListener("click", () => {
      const selected = scatter ? scatter.getSelection() : [];
      if (selected.length === 0) return;
      grouping.addToGroup(index, selected);
      afterGroupingChange();
    });
    row.appendChild(extend);

    const drop = document.createElement("button");
    drop.textContent = "ungroup";
    drop.addEventListener("click", () => {
      grouping.ungroup(group.topicIds);
      afterGroupingChange();
    });
    row.appendChild(drop);

    panel.appendChild(row);
  });

  const loose = grouping.ungroupedIds(allTopicIds());
  const note = document.createElement("div");
  note.className = "ungrouped-note";
  note.textContent = loose.length === 0
    ? "every topic is grouped; export is available"
    : `ungrouped topics: ${loose.join(", ")}`;
  panel.appendChild(note);
}

function renderAll(): void {
  if (!projection) return;
  scatter = renderTopicScatter(el("scatter"), projection, grouping, {
    onSelectionChange: (ids) => {
      renderTopicWordMatrix(el("heat"), projection!.glyphs, ids);
    },
  });
  renderChord(el("chord"), projection.glyphs, projection.chord);
  renderTopicWordMatrix(el("heat"), projection.glyphs, []);
  renderGroupPanel();
  renderEvalReport(el("report"), reports);
}

async function exportAndTrain(): Promise<void> {
  if (!projection) return;
  const nameInput = el<HTMLInputElement>("definition-name");
  const epochs = Number(el<HTMLInputElement>("train-epochs").value) || 20;
  const embed = Number(el<HTMLInputElement>("train-embed").value) || 32;
  const hidden = Number(el<HTMLInputElement>("train-hidden").value) || 64;

  let definition;
  try {
    definition = grouping.toDefinition(nameInput.value || "ui definition", allTopicIds());
  } catch (err) {
    setStatus(`export blocked: ${(err as Error).message}`);
    return;
  }

  setStatus("exporting cluster definition");
  const { definition_id } = await api.postClusters(projectId, definition);
  setStatus(`definition ${definition_id} stored; training`);
  const job = await api.trainDetector(projectId, {
    definition_id,
    train_config: { epochs },
    embed_dim: embed,
    hidden_dim: hidden,
  });
  const done = await api.waitForJob(job.id, 750, (j) => {
    setStatus(`training: ${(j.progress * 100).toFixed(0)}%`);
  });
  const detectorId = String((done.result ?? {})["detector_id"]);
  detectors.push(detectorId);
  renderDetectorChoices();
  setStatus(`detector ${detectorId} ready`);
}

function renderDetectorChoices(): void {
  const select = el<HTMLSelectElement>("detector-select");
  select.textContent = "";
  for (const did of detectors) {
    const opt = document.createElement("option");
    opt.value = did;
    opt.textContent = did;
    select.appendChild(opt);
  }
}

async function runEvaluation(): Promise<void> {
  const select = el<HTMLSelectElement>("detector-select");
  if (!select.value) {
    setStatus("train or pick a detector first");
    return;
  }
  let sequences: LabeledSequenceIn[];
  try {
    sequences = JSON.parse(el<HTMLTextAreaElement>("eval-input").value);
  } catch {
    setStatus("evaluation input must be JSON: [{\"tokens\": [...], \"label\": \"normal\"}, ...]");
    return;
  }
  setStatus("evaluating");
  try {
    const report = await api.evaluate(select.value, sequences);
    reports = [...reports.filter((r) => r.method !== report.method), report];
    renderEvalReport(el("report"), reports);
    setStatus(`evaluation done: auc ${report.auc.toFixed(3)}`);
  } catch (err) {
    setStatus(err instanceof ApiError ? err.message : String(err));
  }
}

async function loadProject(): Promise<void> {
  setStatus(`loading project ${projectId}`);
  const info = await api.getProject(projectId);
  detectors = [...info.detectors];
  renderDetectorChoices();
  if (!info.has_topics) {
    setStatus("project has no topics yet; run the topic extraction job from the CLI or API first");
    return;
  }
  projection = await api.getTopics(projectId);
  const stored = await api.getGrouping(projectId);
  grouping = stored.groups ? GroupingState.fromJSON(stored) : new GroupingState();
  renderAll();
  setStatus(`project ${projectId}: ${projection.topics.length} topics across ${projection.runs.length} runs`);
}

function wireControls(): void {
  el("group-selection").addEventListener("click", () => {
    const selected = scatter ? scatter.getSelection() : [];
    if (selected.length === 0) {
      setStatus("select topics first (click or drag on the scatter)");
      return;
    }
    grouping.createGroup(selected);
    scatter!.setSelection([]);
    afterGroupingChange();
  });

  el("ungroup-selection").addEventListener("click", () => {
    const selected = scatter ? scatter.getSelection() : [];
    if (selected.length === 0) return;
    grouping.ungroup(selected);
    afterGroupingChange();
  });

  el("undo").addEventListener("click", () => {
    if (grouping.undo()) afterGroupingChange();
  });

  el("train").addEventListener("click", () => {
    exportAndTrain().catch((err) => setStatus(`training failed: ${err.message}`));
  });

  el("evaluate").addEventListener("click", () => {
    runEvaluation().catch((err) => setStatus(`evaluation failed: ${err.message}`));
  });
}

function showLanding(): void {
  setStatus("enter a project id to begin");
  const form = el("landing");
  form.classList.remove("hidden");
  el("open-project").addEventListener("click", () => {
    const pid = el<HTMLInputElement>("project-input").value.trim();
    if (pid) location.search = `?project=${encodeURIComponent(pid)}`;
  });
}

export function boot(): void {
  const pid = new URLSearchParams(location.search).get("project");
  if (!pid) {
    showLanding();
    return;
  }
  projectId = pid;
  wireControls();
  loadProject().catch((err) => {
    setStatus(err instanceof ApiError && err.status === 404
      ? `no such project: ${projectId}`
      : `load failed: ${err.message}`);
  });
}

if (typeof document !== "undefined" && document.getElementById("status")) {
  boot();
}
