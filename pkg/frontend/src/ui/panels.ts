/** Panel view models.
 *
 * Every number or formatted figure a panel shows is copied verbatim from a
 * service response field. These builders do no arithmetic on domain data;
 * that keeps the display contractually equal to what the service computed.
 */

import type {
  AlphabetsResponse,
  FilterSummaryResponse,
  JobView,
  SelectionStatsResponse,
} from "../api/types.js";

// ---- Filter View ----

export interface FilterRow {
  label: string;
  total: number;
  included: number;
  excludedBySelf: number;
  excludedByOthers: number;
}

export interface FilterSection {
  subject: string;
  rows: FilterRow[];
  binEdges: number[] | null;
}

export interface FilterPanelModel {
  includedCount: number;
  sections: FilterSection[];
}

export function filterPanel(res: FilterSummaryResponse): FilterPanelModel {
  return {
    includedCount: res.included_count,
    sections: res.summaries.map((s) => ({
      subject: s.subject,
      rows: s.groups.map((g) => ({
        label: g.label,
        total: g.total,
        included: g.included,
        excludedBySelf: g.excluded_by_self,
        excludedByOthers: g.excluded_by_others,
      })),
      binEdges: s.bins ? [...s.bins.edges] : null,
    })),
  };
}

// ---- Selection-Inspection View ----

export interface SelectionRow {
  label: string;
  count: number;
  percent: string; // server-formatted, shown as is
}

export interface SelectionSection {
  subject: string;
  rows: SelectionRow[];
  numeric: { min: number; max: number; mean: number } | null;
  unlabeledCount: number | null;
}

export interface SelectionPanelModel {
  selectionSize: number;
  sections: SelectionSection[];
}

export function selectionPanel(res: SelectionStatsResponse): SelectionPanelModel {
  return {
    selectionSize: res.selection_size,
    sections: res.stats.map((s) => ({
      subject: s.subject,
      rows: s.groups.map((g) => ({
        label: g.label,
        count: g.count,
        percent: g.percent,
      })),
      numeric: s.numeric ? { ...s.numeric } : null,
      unlabeledCount: s.unlabeled_count ?? null,
    })),
  };
}

// ---- Label View ----

export interface LabelRow {
  id: string;
  name: string;
  color: string;
}

export interface AlphabetRow {
  id: string;
  name: string;
  assignedCount: number;
  labels: LabelRow[];
}

export interface LabelPanelModel {
  alphabets: AlphabetRow[];
}

export function labelPanel(res: AlphabetsResponse): LabelPanelModel {
  return {
    alphabets: res.alphabets.map((a) => ({
      id: a.id,
      name: a.name,
      assignedCount: a.assigned_count,
      labels: a.labels.map((l) => ({ id: l.id, name: l.name, color: l.color })),
    })),
  };
}

// ---- projection job progress ----

export interface JobProgressModel {
  id: string;
  state: string;
  /** Raw 0..1 fraction from the job view, untouched. */
  progress: number;
  error: string | null;
}

export function jobProgress(job: JobView): JobProgressModel {
  return {
    id: job.id,
    state: job.state,
    progress: job.progress,
    error: job.error ?? null,
  };
}
