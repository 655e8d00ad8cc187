// Thin typed client for the novelty service.  The UI never recomputes
// analytical values; everything rendered comes straight from these payloads.

import type {
  ClusterDefinition,
  EvalReport,
  GroupingJSON,
  Job,
  LabeledSequenceIn,
  ProjectInfo,
  TopicProjection,
  TrainRequest,
} from "./types.js";

export class ApiError extends Error {
  status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

export interface ScoreRow {
  cluster: number;
  perplexity: number;
}

export class ApiClient {
  base: string;

  constructor(base = "") {
    this.base = base.replace(/\/$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await fetch(this.base + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const payload = await resp.json();
        if (payload && payload.detail !== undefined) detail = JSON.stringify(payload.detail);
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(resp.status, `${method} ${path}: ${detail}`);
    }
    return resp.json() as Promise<T>;
  }

  getProject(projectId: string): Promise<ProjectInfo> {
    return this.request("GET", `/projects/${projectId}`);
  }

  getTopics(projectId: string): Promise<TopicProjection> {
    return this.request("GET", `/projects/${projectId}/topics`);
  }

  getGrouping(projectId: string): Promise<GroupingJSON> {
    return this.request("GET", `/projects/${projectId}/grouping`);
  }

  putGrouping(projectId: string, grouping: GroupingJSON): Promise<{ ok: boolean }> {
    return this.request("PUT", `/projects/${projectId}/grouping`, grouping);
  }

  postClusters(projectId: string, definition: ClusterDefinition): Promise<{ definition_id: string }> {
    return this.request("POST", `/projects/${projectId}/clusters`, definition);
  }

  trainDetector(projectId: string, req: TrainRequest): Promise<Job> {
    return this.request("POST", `/projects/${projectId}/train`, req);
  }

  submitLda(projectId: string, spec: Record<string, unknown>): Promise<Job> {
    return this.request("POST", `/projects/${projectId}/lda`, spec);
  }

  getJob(jobId: string): Promise<Job> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  /** Poll at a fixed interval until the job leaves the queue. */
  async waitForJob(jobId: string, intervalMs = 500, onProgress?: (job: Job) => void): Promise<Job> {
    for (;;) {
      const job = await this.getJob(jobId);
      if (onProgress) onProgress(job);
      if (job.state === "done") return job;
      if (job.state === "failed") {
        throw new ApiError(500, `job ${jobId} failed: ${job.error ?? "unknown error"}`);
      }
      await sleep(intervalMs);
    }
  }

  async scoreSequences(detectorId: string, sequences: (number | string)[][]): Promise<ScoreRow[]> {
    const out = await this.request<{ scores: ScoreRow[] }>(
      "POST", `/detectors/${detectorId}/score`, { sequences });
    return out.scores;
  }

  evaluate(detectorId: string, sequences: LabeledSequenceIn[], method = "detector"): Promise<EvalReport> {
    return this.request("POST", `/detectors/${detectorId}/evaluate`, { sequences, method });
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
