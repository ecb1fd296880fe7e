/** Wire shapes of the particle service. Field names match the JSON exactly. */

/** Names the immutable state a response was computed against. */
export interface Snapshot {
  dataset_version: string;
  label_position: number;
}

export type AttributeRole =
  | "size"
  | "shape"
  | "production-context"
  | "augmented";

export type AttributeKind = "numeric" | "categorical" | "ordinal";

export interface AttributeDescriptor {
  name: string;
  role: string;
  kind: AttributeKind;
  unit: string | null;
  category_order: string[] | null;
}

export interface DatasetResponse {
  snapshot: Snapshot;
  particle_count: number;
  provenance: string;
  created_at: string;
  schema: {
    attributes: AttributeDescriptor[];
    elongation_attribute: string;
  };
  ids: string[];
}

export interface AttributesResponse {
  snapshot: Snapshot;
  attributes: AttributeDescriptor[];
}

// ---- layout ----

export interface LayoutRequest {
  subject: string; // "attr:<name>" or "alphabet:<name-or-id>"
  target_bins?: number;
  cell_size?: number;
  column_gap?: number;
  aspect?: number;
  sort_attribute?: string | null;
}

export interface LayoutColumn {
  label: string;
  count: number;
  x_offset: number;
  width: number;
  height: number;
}

export interface LayoutHeader {
  kind: "layout";
  rows: number;
  attribute: string;
  config: {
    cell_size: number;
    column_gap: number;
    aspect: number;
    sort_attribute: string | null;
  };
  columns: LayoutColumn[];
  bins: { attribute: string; edges: number[]; width: number } | null;
}

// ---- projection jobs ----

export interface ProjectionRequest {
  attributes: string[];
  alphabet?: string | null;
  config?: Record<string, unknown>;
  initial_job?: string | null;
}

export type JobState = "queued" | "running" | "done" | "failed" | "cancelled";

export interface JobView {
  snapshot: Snapshot;
  id: string;
  state: JobState;
  progress: number;
  request: {
    attributes: string[];
    alphabet: string | null;
    config: Record<string, unknown>;
    initial_job: string | null;
  };
  error?: string;
  result?: {
    rows: number;
    attributes: string[];
    alphabet: string | null;
    config: Record<string, unknown>;
    computed_at: string;
  };
}

export interface ProjectionHeader {
  kind: "projection";
  rows: number;
  config: Record<string, unknown>;
  attributes: string[];
  alphabet: string | null;
}

// ---- filters ----

export type FilterClause =
  | { kind: "category"; attribute: string; allowed: string[] }
  | { kind: "range"; attribute: string; lo: number; hi: number }
  | { kind: "alphabet"; alphabet: string; allowed: string[] };

export interface FilterSummaryRequest {
  filters: FilterClause[];
  subjects: string[];
  target_bins?: number;
  include_ids?: boolean;
}

export interface FilterGroup {
  label: string;
  total: number;
  included: number;
  excluded_by_self: number;
  excluded_by_others: number;
}

export interface FilterSummary {
  subject: string;
  groups: FilterGroup[];
  bins?: { edges: number[]; labels: string[] };
}

export interface FilterSummaryResponse {
  snapshot: Snapshot;
  included_count: number;
  summaries: FilterSummary[];
  included_ids?: string[];
}

// ---- selection stats ----

export interface SelectionStatsRequest {
  ids: string[];
  subjects: string[];
  target_bins?: number;
}

export interface SelectionGroup {
  label: string;
  count: number;
  percent: string; // formatted server side, displayed verbatim
}

export interface SelectionSubjectStats {
  subject: string;
  groups: SelectionGroup[];
  numeric?: { min: number; max: number; mean: number };
  unlabeled_count?: number;
}

export interface SelectionStatsResponse {
  snapshot: Snapshot;
  selection_size: number;
  stats: SelectionSubjectStats[];
}

// ---- labels ----

export interface LabelDef {
  id: string;
  name: string;
  color: string;
  description: string;
}

export interface AlphabetView {
  id: string;
  name: string;
  created_by: string;
  created_at: string;
  labels: LabelDef[];
  assigned_count: number;
}

export interface AlphabetsResponse {
  snapshot: Snapshot;
  alphabets: AlphabetView[];
}

export interface AlphabetUpsertResponse {
  snapshot: Snapshot;
  alphabet: Omit<AlphabetView, "assigned_count">;
}

export interface AssignResponse {
  snapshot: Snapshot;
  changed: number;
}

export interface LabelParticlesResponse {
  snapshot: Snapshot;
  particles: string[];
}

export interface SnapshotExportResponse {
  snapshot: Snapshot;
  document: Record<string, unknown>;
}

export interface SnapshotImportResponse {
  snapshot: Snapshot;
  report: Record<string, unknown>;
}

export interface ErrorPayload {
  code: string;
  message: string;
  details: Array<Record<string, unknown>>;
}
