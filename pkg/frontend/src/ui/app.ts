/** Browser entry point: wires the API client, canvas, and panels together.
 *
 * Layout: left rail for mode/attribute/label controls, central canvas,
 * right rail for filter and selection inspection. One render loop redraws
 * the canvas when state is marked dirty; all domain numbers land in the DOM
 * exactly as the service returned them.
 */

import { ApiClient } from "../api/client.js";
import type {
  AttributeDescriptor,
  FilterClause,
  FilterSummaryResponse,
  SelectionStatsResponse,
} from "../api/types.js";
import { fitCamera, panBy, zoomAt, type Viewport } from "../core/camera.js";
import {
  assignOutlineColors,
  buildFrame,
  type FrameInputs,
} from "../core/frame.js";
import { selectWithScreenLasso } from "../core/lasso.js";
import {
  createViewState,
  selectionAdd,
  selectionClear,
  selectionReplace,
  setCamera,
  setFilters,
  setHighlight,
  setMode,
  setProjectionJob,
  setVisual,
  type Mode,
  type ViewState,
} from "../core/viewState.js";
import { drawFrame } from "../render/canvas2d.js";
import { filterPanel, jobProgress, labelPanel, selectionPanel } from "./panels.js";

const SELECTION_SUBJECT_LIMIT = 4;
const THUMB_LOAD_BATCH = 64;

interface AppData {
  ids: string[];
  schema: AttributeDescriptor[];
  coordsBySubject: Map<string, Float32Array>; // attribute-mode layouts
  projectionCoords: Float32Array | null;
  cellWorld: number;
  includedMask: boolean[] | null; // from the last filter summary
  highlightLabelOf: (string | null)[] | null;
  outlineColors: Map<string, string>;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

class ThumbCache {
  private images = new Map<string, HTMLImageElement | null>();
  private pending = 0;
  constructor(
    private client: ApiClient,
    private onLoad: () => void,
  ) {}

  get(id: string): HTMLImageElement | null {
    const hit = this.images.get(id);
    if (hit !== undefined) return hit;
    if (this.pending < THUMB_LOAD_BATCH) {
      this.images.set(id, null);
      this.pending++;
      const img = new Image();
      img.onload = () => {
        this.pending--;
        this.images.set(id, img);
        this.onLoad();
      };
      img.onerror = () => {
        this.pending--;
      };
      img.src = this.client.thumbUrl(id);
    }
    return null;
  }
}

export class App {
  private state: ViewState = createViewState();
  private data: AppData = {
    ids: [],
    schema: [],
    coordsBySubject: new Map(),
    projectionCoords: null,
    cellWorld: 1,
    includedMask: null,
    highlightLabelOf: null,
    outlineColors: new Map(),
  };
  private dirty = true;
  private canvas!: HTMLCanvasElement;
  private ctx!: CanvasRenderingContext2D;
  private thumbs!: ThumbCache;
  private filterPanelNode!: HTMLElement;
  private selectionPanelNode!: HTMLElement;
  private labelPanelNode!: HTMLElement;
  private jobNode!: HTMLElement;
  private statusNode!: HTMLElement;
  private lassoScreen: { x: number; y: number }[] | null = null;
  private selectionSeq = 0;
  private filterSeq = 0;

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
  ) {}

  async start(): Promise<void> {
    this.buildDom();
    this.thumbs = new ThumbCache(this.client, () => this.invalidate());
    const dataset = await this.client.dataset();
    this.data.ids = dataset.ids;
    this.data.schema = dataset.schema.attributes;
    this.statusNode.textContent = `${dataset.particle_count} particles, dataset ${dataset.snapshot.dataset_version}`;
    const firstCategorical = this.data.schema.find((a) => a.kind !== "numeric");
    const subject = `attr:${(firstCategorical ?? this.data.schema[0]!).name}`;
    await this.showAttributeSubject(subject);
    await this.refreshLabelPanel();
    await this.refreshFilterPanel();
    const loop = () => {
      if (this.dirty) {
        this.dirty = false;
        this.draw();
      }
      requestAnimationFrame(loop);
    };
    requestAnimationFrame(loop);
  }

  private invalidate(): void {
    this.dirty = true;
  }

  private viewport(): Viewport {
    return { width: this.canvas.width, height: this.canvas.height };
  }

  private activeCoords(): Float32Array | null {
    if (this.state.mode === "projection") return this.data.projectionCoords;
    const subject = this.state.attributeSubject;
    return subject ? this.data.coordsBySubject.get(subject) ?? null : null;
  }

  private draw(): void {
    const coords = this.activeCoords();
    if (!coords) {
      this.ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
      return;
    }
    const inputs: FrameInputs = {
      ids: this.data.ids,
      coords,
      camera: this.state.camera,
      viewport: this.viewport(),
      included: this.data.includedMask,
      selected: new Set(this.state.selection.ids),
      highlightLabelOf: this.data.highlightLabelOf,
      outlineColors: this.data.outlineColors,
      uniformSize: this.state.uniformSize,
      transparency: this.state.transparency,
      relativeSize: this.state.relativeSize,
      cellWorld: this.data.cellWorld,
    };
    const frame = buildFrame(inputs);
    drawFrame(this.ctx, frame, this.canvas.width, this.canvas.height, (id) =>
      frame.degraded ? null : this.thumbs.get(id),
    );
    if (this.lassoScreen && this.lassoScreen.length > 1) {
      this.ctx.save();
      this.ctx.strokeStyle = "rgba(59, 130, 246, 0.9)";
      this.ctx.lineWidth = 1.5;
      this.ctx.beginPath();
      this.ctx.moveTo(this.lassoScreen[0]!.x, this.lassoScreen[0]!.y);
      for (const p of this.lassoScreen.slice(1)) this.ctx.lineTo(p.x, p.y);
      this.ctx.closePath();
      this.ctx.stroke();
      this.ctx.restore();
    }
  }

  // ---- data flows ----

  private async showAttributeSubject(subject: string): Promise<void> {
    if (!this.data.coordsBySubject.has(subject)) {
      const { block } = await this.client.layout({ subject });
      this.data.coordsBySubject.set(subject, block.positions);
      this.data.cellWorld = block.header.config.cell_size;
    }
    this.state = setMode({ ...this.state, attributeSubject: subject }, "attribute");
    this.fitToCoords();
  }

  private fitToCoords(): void {
    const coords = this.activeCoords();
    if (!coords || coords.length === 0) return;
    let loX = Infinity;
    let loY = Infinity;
    let hiX = -Infinity;
    let hiY = -Infinity;
    for (let i = 0; i < coords.length; i += 2) {
      const x = coords[i]!;
      const y = coords[i + 1]!;
      if (x < loX) loX = x;
      if (x > hiX) hiX = x;
      if (y < loY) loY = y;
      if (y > hiY) hiY = y;
    }
    this.state = setCamera(this.state, fitCamera(this.viewport(), loX, loY, hiX, hiY));
    this.invalidate();
  }

  private async runProjection(alphabet: string | null): Promise<void> {
    const numeric = this.data.schema.filter((a) => a.kind === "numeric").map((a) => a.name);
    // Recomputes warm-start from the embedding on screen so labels reshape
    // the current view instead of replacing it with an unrelated one.
    const job = await this.client.startProjection({
      attributes: numeric,
      alphabet,
      config: { n_neighbors: 15, n_epochs: 200, seed: 7 },
      initial_job: this.state.projectionJob,
    });
    this.state = setProjectionJob(this.state, job.id);
    this.renderJob(jobProgress(job));
    const done = await this.client.waitForProjection(job.id, {
      pollMs: 500,
      onProgress: (j) => this.renderJob(jobProgress(j)),
    });
    this.renderJob(jobProgress(done));
    const block = await this.client.projectionResult(job.id);
    this.data.projectionCoords = block.coords;
    this.state = setMode(this.state, "projection");
    this.fitToCoords();
    this.syncModeButtons();
  }

  private renderJob(model: ReturnType<typeof jobProgress>): void {
    this.jobNode.textContent = model.error
      ? `job ${model.state}: ${model.error}`
      : `job ${model.state} (progress ${model.progress})`;
  }

  private async refreshFilterPanel(): Promise<void> {
    const seq = ++this.filterSeq;
    const subjects = this.data.schema
      .slice(0, SELECTION_SUBJECT_LIMIT)
      .map((a) => `attr:${a.name}`);
    const res = await this.client.filterSummary({
      filters: this.state.filters.clauses,
      subjects,
      include_ids: true,
    });
    if (seq !== this.filterSeq) return; // a newer request superseded this one
    const includedIds = new Set(res.included_ids ?? []);
    this.data.includedMask =
      this.state.filters.clauses.length === 0
        ? null
        : this.data.ids.map((id) => includedIds.has(id));
    this.renderFilterPanel(res);
    this.invalidate();
  }

  private renderFilterPanel(res: FilterSummaryResponse): void {
    const model = filterPanel(res);
    this.filterPanelNode.replaceChildren();
    this.filterPanelNode.append(
      el("h3", "panel-title", "Filter View"),
      el("div", "panel-row", `included: ${model.includedCount}`),
    );
    for (const section of model.sections) {
      const sec = el("div", "panel-section");
      sec.append(el("h4", undefined, section.subject));
      for (const row of section.rows) {
        sec.append(
          el(
            "div",
            "panel-row",
            `${row.label}: ${row.included} in / ${row.excludedBySelf} self / ${row.excludedByOthers} other / ${row.total} total`,
          ),
        );
      }
      this.filterPanelNode.append(sec);
    }
  }

  private async refreshSelectionPanel(): Promise<void> {
    const seq = ++this.selectionSeq;
    const ids = this.state.selection.ids;
    if (ids.length === 0) {
      this.selectionPanelNode.replaceChildren(
        el("h3", "panel-title", "Selection Inspection"),
        el("div", "panel-row", "nothing selected"),
      );
      return;
    }
    const subjects = this.data.schema
      .slice(0, SELECTION_SUBJECT_LIMIT)
      .map((a) => `attr:${a.name}`);
    const res = await this.client.selectionStats({ ids, subjects });
    if (seq !== this.selectionSeq) return;
    this.renderSelectionPanel(res);
  }

  private renderSelectionPanel(res: SelectionStatsResponse): void {
    const model = selectionPanel(res);
    this.selectionPanelNode.replaceChildren();
    this.selectionPanelNode.append(
      el("h3", "panel-title", "Selection Inspection"),
      el("div", "panel-row", `selected: ${model.selectionSize}`),
    );
    for (const section of model.sections) {
      const sec = el("div", "panel-section");
      sec.append(el("h4", undefined, section.subject));
      for (const row of section.rows) {
        sec.append(el("div", "panel-row", `${row.label}: ${row.count} (${row.percent})`));
      }
      if (section.numeric) {
        sec.append(
          el(
            "div",
            "panel-row",
            `min ${section.numeric.min} / mean ${section.numeric.mean} / max ${section.numeric.max}`,
          ),
        );
      }
      if (section.unlabeledCount !== null) {
        sec.append(el("div", "panel-row", `unlabeled: ${section.unlabeledCount}`));
      }
      this.selectionPanelNode.append(sec);
    }
  }

  private async refreshLabelPanel(): Promise<void> {
    const res = await this.client.alphabets();
    const model = labelPanel(res);
    this.labelPanelNode.replaceChildren(el("h3", "panel-title", "Label View"));
    for (const alphabet of model.alphabets) {
      const sec = el("div", "panel-section");
      sec.append(el("h4", undefined, `${alphabet.name} (${alphabet.assignedCount} assigned)`));
      for (const label of alphabet.labels) {
        const row = el("div", "panel-row label-row", label.name);
        row.style.borderLeft = `4px solid ${label.color}`;
        const assignBtn = el("button", "mini", "assign");
        assignBtn.onclick = async () => {
          if (this.state.selection.ids.length === 0) return;
          await this.client.assign(alphabet.name, this.state.selection.ids, label.name);
          await this.refreshLabelPanel();
        };
        const showBtn = el("button", "mini", "highlight");
        showBtn.onclick = () => this.toggleHighlight(alphabet.name, label.name);
        row.append(assignBtn, showBtn);
        sec.append(row);
      }
      this.labelPanelNode.append(sec);
    }
  }

  private async toggleHighlight(alphabet: string, label: string): Promise<void> {
    const current = this.state.highlight;
    let labels: string[];
    if (current.alphabet === alphabet) {
      labels = current.labels.includes(label)
        ? current.labels.filter((l) => l !== label)
        : [...current.labels, label];
    } else {
      labels = [label];
    }
    this.state = setHighlight(this.state, labels.length ? alphabet : null, labels);
    if (labels.length === 0) {
      this.data.highlightLabelOf = null;
      this.data.outlineColors = new Map();
      this.invalidate();
      return;
    }
    const rowOf = new Map(this.data.ids.map((id, i) => [id, i] as const));
    const perIndex: (string | null)[] = this.data.ids.map(() => null);
    for (const name of labels) {
      const res = await this.client.labelParticles(alphabet, name);
      for (const pid of res.particles) {
        const row = rowOf.get(pid);
        if (row !== undefined) perIndex[row] = name;
      }
    }
    this.data.highlightLabelOf = perIndex;
    this.data.outlineColors = assignOutlineColors(labels);
    this.invalidate();
  }

  // ---- interactions ----

  private attachCanvasEvents(): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.canvas.addEventListener("pointerdown", (e) => {
      this.canvas.setPointerCapture(e.pointerId);
      if (e.shiftKey) {
        this.lassoScreen = [{ x: e.offsetX, y: e.offsetY }];
      } else {
        dragging = true;
        lastX = e.offsetX;
        lastY = e.offsetY;
      }
    });
    this.canvas.addEventListener("pointermove", (e) => {
      if (this.lassoScreen) {
        this.lassoScreen.push({ x: e.offsetX, y: e.offsetY });
        this.invalidate();
      } else if (dragging) {
        this.state = setCamera(
          this.state,
          panBy(this.state.camera, e.offsetX - lastX, e.offsetY - lastY),
        );
        lastX = e.offsetX;
        lastY = e.offsetY;
        this.invalidate();
      }
    });
    this.canvas.addEventListener("pointerup", (e) => {
      dragging = false;
      if (!this.lassoScreen) return;
      const polygon = this.lassoScreen;
      this.lassoScreen = null;
      const coords = this.activeCoords();
      if (coords && polygon.length >= 3) {
        const hit = selectWithScreenLasso(
          this.state.camera,
          this.viewport(),
          polygon,
          coords,
          this.data.ids,
        );
        this.state = e.altKey
          ? selectionAdd(this.state, hit)
          : selectionReplace(this.state, hit);
        void this.refreshSelectionPanel();
      }
      this.invalidate();
    });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      const factor = Math.exp(-e.deltaY * 0.0015);
      this.state = setCamera(
        this.state,
        zoomAt(this.state.camera, this.viewport(), { x: e.offsetX, y: e.offsetY }, factor),
      );
      this.invalidate();
    });
    this.canvas.addEventListener("dblclick", (e) => {
      const coords = this.activeCoords();
      if (!coords) return;
      // pick via a small screen-space box around the click point
      const sx = e.offsetX;
      const sy = e.offsetY;
      const hit = selectWithScreenLasso(
        this.state.camera,
        this.viewport(),
        [
          { x: sx - 8, y: sy - 8 },
          { x: sx + 8, y: sy - 8 },
          { x: sx + 8, y: sy + 8 },
          { x: sx - 8, y: sy + 8 },
        ],
        coords,
        this.data.ids,
      );
      if (hit.length > 0) void this.openDetail(hit[0]!);
    });
  }

  private async openDetail(id: string): Promise<void> {
    const subjects = this.data.schema.map((a) => `attr:${a.name}`);
    const res = await this.client.selectionStats({ ids: [id], subjects });
    const overlay = el("div", "detail-overlay");
    const box = el("div", "detail-box");
    const img = new Image();
    img.src = this.client.thumbUrl(id);
    img.className = "detail-img";
    box.append(el("h3", undefined, id), img);
    for (const s of res.stats) {
      // a one-particle selection reads each attribute back verbatim:
      // numeric stats collapse to the value, categorical to its group
      if (s.numeric) {
        box.append(el("div", "panel-row", `${s.subject.slice(5)}: ${s.numeric.mean}`));
      } else {
        const grp = s.groups.find((g) => g.count > 0);
        if (grp) box.append(el("div", "panel-row", `${s.subject.slice(5)}: ${grp.label}`));
      }
    }
    overlay.onclick = () => overlay.remove();
    overlay.append(box);
    this.root.append(overlay);
  }

  // ---- static chrome ----

  private buildDom(): void {
    this.root.replaceChildren();
    const left = el("div", "rail rail-left");
    const center = el("div", "center");
    const right = el("div", "rail rail-right");
    this.root.append(left, center, right);

    this.statusNode = el("div", "status", "loading");
    center.append(this.statusNode);
    this.canvas = el("canvas");
    this.canvas.width = 1200;
    this.canvas.height = 800;
    const ctx = this.canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
    center.append(this.canvas);
    this.attachCanvasEvents();

    const modeBar = el("div", "panel-section");
    modeBar.append(el("h3", "panel-title", "Mode"));
    const attrBtn = el("button", "mode", "Attribute view");
    const projBtn = el("button", "mode", "Projection view");
    attrBtn.onclick = () => {
      this.state = setMode(this.state, "attribute");
      this.fitToCoords();
      this.syncModeButtons();
    };
    projBtn.onclick = () => {
      if (!this.data.projectionCoords) return;
      this.state = setMode(this.state, "projection");
      this.fitToCoords();
      this.syncModeButtons();
    };
    modeBar.append(attrBtn, projBtn);
    left.append(modeBar);

    const attrPick = el("div", "panel-section");
    attrPick.append(el("h3", "panel-title", "Attribute"));
    const select = el("select");
    select.onchange = () => void this.showAttributeSubject(select.value);
    attrPick.append(select);
    left.append(attrPick);
    // options filled after the dataset arrives
    void this.fillAttributeOptions(select);

    const visual = el("div", "panel-section");
    visual.append(el("h3", "panel-title", "Visual"));
    const uniform = el("label", "panel-row", " uniform size");
    const uniformBox = el("input");
    uniformBox.type = "checkbox";
    uniformBox.onchange = () => {
      this.state = setVisual(this.state, { uniformSize: uniformBox.checked });
      this.invalidate();
    };
    uniform.prepend(uniformBox);
    const transparent = el("label", "panel-row", " transparent");
    const transparentBox = el("input");
    transparentBox.type = "checkbox";
    transparentBox.onchange = () => {
      this.state = setVisual(this.state, { transparency: transparentBox.checked });
      this.invalidate();
    };
    transparent.prepend(transparentBox);
    const sizeLabel = el("label", "panel-row", " size");
    const size = el("input");
    size.type = "range";
    size.min = "0.2";
    size.max = "4";
    size.step = "0.1";
    size.value = "1";
    size.oninput = () => {
      this.state = setVisual(this.state, { relativeSize: Number(size.value) });
      this.invalidate();
    };
    sizeLabel.prepend(size);
    visual.append(uniform, transparent, sizeLabel);
    left.append(visual);

    const proj = el("div", "panel-section");
    proj.append(el("h3", "panel-title", "Projection"));
    const runBtn = el("button", "mode", "Recompute projection");
    const supervised = el("select");
    supervised.append(el("option", undefined, "(unsupervised)"));
    this.jobNode = el("div", "panel-row", "no job");
    runBtn.onclick = async () => {
      const name = supervised.value === "(unsupervised)" ? null : supervised.value;
      await this.runProjection(name);
    };
    proj.append(runBtn, supervised, this.jobNode);
    left.append(proj);
    void this.fillAlphabetOptions(supervised);

    this.labelPanelNode = el("div", "panel");
    left.append(this.labelPanelNode);

    this.filterPanelNode = el("div", "panel");
    this.selectionPanelNode = el("div", "panel");
    right.append(this.filterPanelNode, this.selectionPanelNode);

    const clearBtn = el("button", "mode", "Clear selection");
    clearBtn.onclick = () => {
      this.state = selectionClear(this.state);
      void this.refreshSelectionPanel();
      this.invalidate();
    };
    right.append(clearBtn);
  }

  private async fillAttributeOptions(select: HTMLSelectElement): Promise<void> {
    const res = await this.client.attributes();
    select.replaceChildren();
    for (const attr of res.attributes) {
      const opt = el("option", undefined, attr.name);
      opt.value = `attr:${attr.name}`;
      select.append(opt);
    }
  }

  private async fillAlphabetOptions(select: HTMLSelectElement): Promise<void> {
    const res = await this.client.alphabets();
    for (const alphabet of res.alphabets) {
      const opt = el("option", undefined, alphabet.name);
      opt.value = alphabet.name;
      select.append(opt);
    }
  }

  private syncModeButtons(): void {
    this.invalidate();
  }

  /** Replace active filters and refresh dependent views. */
  async applyFilters(clauses: FilterClause[]): Promise<void> {
    this.state = setFilters(this.state, clauses);
    await this.refreshFilterPanel();
  }

  currentMode(): Mode {
    return this.state.mode;
  }
}

export async function boot(rootId = "app", baseUrl = ""): Promise<App> {
  const root = document.getElementById(rootId);
  if (!root) throw new Error(`missing #${rootId} mount element`);
  const app = new App(root, new ApiClient(baseUrl || window.location.origin.replace(/\/$/, "")));
  await app.start();
  return app;
}
