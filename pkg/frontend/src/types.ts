// Mirrors of the service's JSON payloads. Field names stay snake_case so a
// response can be compared against these shapes without translation.

export type LabelValue = "positive" | "negative" | "unlabeled";

export interface TriageRecord {
  id: string;
  raw_text: string;
  clean_text: string;
  age: number | null;
  sex: string;
  site: string | null;
  timestamp: string | null;
  pool: "focused" | "deployment";
  label: LabelValue;
  label_source: string;
  counterfactual_of: string | null;
}

export interface QueueItem {
  record: TriageRecord;
  probability: number | null;
  pattern_match: boolean | null;
  topic_keywords: string[];
  strategy?: string;
  conflict: boolean;
}

export interface FilterRules {
  include_terms: string[];
  exclude_phrases: string[];
  min_length: number;
}

export interface Health {
  status: string;
  events: number;
  records: number;
}

export interface BatchInfo {
  strategy: string;
  record_ids: string[];
  round: number;
  created_at: string;
}

export interface Confusion {
  tp: number;
  tn: number;
  fp: number;
  fn: number;
}

export interface MetricValues {
  precision: number;
  recall: number;
  f1: number;
  fbeta: number;
  beta: number;
  auc: number | null;
  undefined_precision: boolean;
  undefined_recall: boolean;
}

export interface ScoredSide {
  confusion: Confusion;
  metrics: MetricValues;
}

export interface SplitCounts {
  positives: number;
  negatives: number;
  size: number;
  synthetic: number;
  synthetic_percent: number;
}

export interface RoundReport {
  round: number;
  checkpoint_id: string;
  beta: number;
  eval_size: number;
  eval_positives: number;
  eval_negatives: number;
  model: ScoredSide;
  pattern: ScoredSide;
  dataset_version: number;
  train_counts: SplitCounts;
  validation_counts: SplitCounts;
  new_false_positives: number;
  stopping_criterion_met: boolean;
}

export interface RoundInfo {
  round: number;
  mode: string;
  phase: string;
  dataset_version: number;
  train_config: Record<string, unknown> | null;
  checkpoint_ids: string[];
  selected_checkpoint_ids: string[];
  batches: BatchInfo[];
  report: RoundReport | null;
}

export interface StrategySummary {
  strategy: string;
  total: number;
  labeled: number;
  conflicts: number;
  remaining: number;
}

export interface QueueSummary {
  round: number | null;
  phase: string | null;
  strategies: StrategySummary[];
  remaining_total: number;
}

export interface ConflictEntry {
  record_id: string;
  submissions: Record<string, string>;
}

export interface LabelAck {
  record_id: string;
  event_id: number;
  deduplicated: boolean;
  conflict: boolean;
}

export interface CounterfactualPair {
  source_id: string;
  synthetic_id: string;
  direction: "flip_to_negative" | "flip_to_positive";
  span: string;
  offset: number;
  chunk: string;
  position: number | null;
}

export interface CounterfactualResult {
  record: TriageRecord;
  pair: CounterfactualPair;
}

export interface FinalTableRow {
  name: string;
  checkpoint_id: string | null;
  confusion: Confusion;
  metrics: MetricValues;
}

export interface FinalTable {
  rows: FinalTableRow[];
  text: string;
  beta: number;
  eval_size: number;
  train_sizes: number[];
  checks: Record<string, boolean>;
}
