/** Client-side view state: canvas mode, camera, visual settings, filters,
 * selection, and label highlighting.
 *
 * Updates are pure: each returns a new state object. Filters and selection
 * carry over mode switches untouched, by reference, so nothing about them
 * can drift when the user flips between attribute and projection views.
 */

import type { Camera } from "./camera.js";
import type { FilterClause } from "../api/types.js";

export type Mode = "attribute" | "projection";

export interface FilterState {
  clauses: FilterClause[];
}

export interface Selection {
  ids: string[]; // insertion-ordered, no duplicates
}

export interface Highlight {
  alphabet: string | null;
  labels: string[];
}

export interface ViewState {
  mode: Mode;
  camera: Camera;
  uniformSize: boolean;
  transparency: boolean;
  relativeSize: number;
  /** Layout subject shown in attribute mode, e.g. "attr:Supplier". */
  attributeSubject: string | null;
  /** Finished projection job backing projection mode. */
  projectionJob: string | null;
  filters: FilterState;
  selection: Selection;
  highlight: Highlight;
}

export function createViewState(): ViewState {
  return {
    mode: "attribute",
    camera: { centerX: 0, centerY: 0, zoom: 1 },
    uniformSize: false,
    transparency: false,
    relativeSize: 1,
    attributeSubject: null,
    projectionJob: null,
    filters: { clauses: [] },
    selection: { ids: [] },
    highlight: { alphabet: null, labels: [] },
  };
}

/** Switch canvas modes; filters and selection pass through by reference. */
export function setMode(state: ViewState, mode: Mode): ViewState {
  if (mode === state.mode) return state;
  return { ...state, mode };
}

export function setCamera(state: ViewState, camera: Camera): ViewState {
  return { ...state, camera };
}

export function setVisual(
  state: ViewState,
  patch: Partial<Pick<ViewState, "uniformSize" | "transparency" | "relativeSize">>,
): ViewState {
  if (patch.relativeSize !== undefined && !(patch.relativeSize > 0)) {
    throw new RangeError(`relative size must be positive, got ${patch.relativeSize}`);
  }
  return { ...state, ...patch };
}

export function setAttributeSubject(state: ViewState, subject: string | null): ViewState {
  return { ...state, attributeSubject: subject };
}

export function setProjectionJob(state: ViewState, jobId: string | null): ViewState {
  return { ...state, projectionJob: jobId };
}

export function setFilters(state: ViewState, clauses: FilterClause[]): ViewState {
  return { ...state, filters: { clauses: [...clauses] } };
}

export function clearFilters(state: ViewState): ViewState {
  return { ...state, filters: { clauses: [] } };
}

function dedupe(ids: Iterable<string>): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const id of ids) {
    if (!seen.has(id)) {
      seen.add(id);
      out.push(id);
    }
  }
  return out;
}

export function selectionReplace(state: ViewState, ids: Iterable<string>): ViewState {
  return { ...state, selection: { ids: dedupe(ids) } };
}

export function selectionAdd(state: ViewState, ids: Iterable<string>): ViewState {
  return { ...state, selection: { ids: dedupe([...state.selection.ids, ...ids]) } };
}

export function selectionRemove(state: ViewState, ids: Iterable<string>): ViewState {
  const drop = new Set(ids);
  return {
    ...state,
    selection: { ids: state.selection.ids.filter((id) => !drop.has(id)) },
  };
}

export function selectionClear(state: ViewState): ViewState {
  return { ...state, selection: { ids: [] } };
}

export function setHighlight(
  state: ViewState,
  alphabet: string | null,
  labels: string[],
): ViewState {
  return { ...state, highlight: { alphabet, labels: [...labels] } };
}
