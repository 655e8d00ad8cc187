/**
 * Wire types for the service JSON the interface consumes. Field names match
 * the HTTP payloads exactly; nothing here is recomputed client-side.
 */

export interface GlyphWord {
  word: string;
  word_id: number;
  probability: number;
  word_class: string;
}

export interface Glyph {
  topic_id: number;
  run_id: number;
  topic_index: number;
  association_count: number;
  words: GlyphWord[];
}

export interface TopicRef {
  id: number;
  run_id: number;
  topic_index: number;
}

export interface RunParams {
  run_id: number;
  num_topics: number;
  alpha: number;
  beta: number;
  iterations: number;
  burn_in: number;
  seed: number;
}

export interface TopicProjection {
  coords: [number, number][];
  glyphs: Glyph[];
  chord: number[][];
  topics: TopicRef[];
  runs: RunParams[];
  fold_iterations?: number;
}

export interface AssignmentEntry {
  topic_id: number;
  cluster: number;
}

export interface ClusterDefinition {
  name: string;
  k: number;
  assignment: AssignmentEntry[];
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface Job {
  id: string;
  kind: string;
  project_id: string;
  state: JobState;
  progress: number;
  error: string | null;
  result: Record<string, unknown> | null;
}

export type RocPoint = [number, number, number | null];

export interface PerClusterRow {
  cluster: number;
  size: number;
  auc: number | null;
}

export interface EvalReport {
  method: string;
  auc: number;
  threshold: number | null;
  sensitivity: number;
  specificity: number;
  threshold_policy: string;
  roc: RocPoint[];
  per_cluster: PerClusterRow[];
}

export interface ProjectInfo {
  project_id: string;
  num_sequences: number;
  vocab_size: number;
  has_topics: boolean;
  definitions: string[];
  detectors: string[];
}

// opaque to the service; the shape below is what this client stores
export interface GroupingJSON {
  groups: { name: string; color: string; topic_ids: number[] }[];
}

export interface LabeledSequenceIn {
  tokens: (number | string)[];
  label: string;
}

export interface TrainRequest {
  definition_id: string;
  train_config: {
    epochs?: number;
    batch_size?: number;
    learning_rate?: number;
    seed?: number;
  };
  embed_dim?: number;
  hidden_dim?: number;
  fold_iterations?: number;
  fold_seed?: number;
}
