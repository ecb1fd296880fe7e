/** End-to-end checks against a live service instance.
 *
 * A synthetic corpus is generated and served from a scratch directory. The
 * suite drives the real HTTP surface through the typed client: the binary
 * block path, the lasso -> label -> supervised re-projection loop, an
 * equivalence check of client-side lasso hits against the engine's own
 * hit testing, and a scripted session proving panel numbers equal the
 * intercepted response fields.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { execFile, spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { mkdtemp, readFile, rm } from "node:fs/promises";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

import { ApiClient, type FetchLike } from "../src/api/client.js";
import { worldToScreen, type Camera, type Viewport } from "../src/core/camera.js";
import { selectWithScreenLasso } from "../src/core/lasso.js";
import { filterPanel, selectionPanel } from "../src/ui/panels.js";
import type { FilterClause } from "../src/api/types.js";
import { mulberry32 } from "./helpers.js";

const run = promisify(execFile);

const PYTHON = process.env["PYTHON"] ?? "python3";
const SIZE_ATTRS = [
  "Area",
  "Perimeter",
  "Feret Max",
  "Feret Min",
  "Equivalent Diameter",
  "Bounding Width",
];
const VIEW: Viewport = { width: 1280, height: 860 };

let workdir = "";
let corpus = "";
let server: ChildProcessWithoutNullStreams | null = null;
let baseUrl = "";
let client: ApiClient;
let truth: Record<string, string> = {};
let ids: string[] = [];
let rowOf = new Map<string, number>();

async function freePort(): Promise<number> {
  return new Promise((resolvePort, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      probe.close(() => resolvePort(address.port));
    });
  });
}

async function waitForServer(url: string, timeoutMs = 120_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const res = await fetch(`${url}/dataset`);
      if (res.ok) {
        await res.arrayBuffer();
        return;
      }
    } catch {
      // not accepting connections yet
    }
    if (Date.now() > deadline) throw new Error(`service at ${url} never came up`);
    await new Promise((r) => setTimeout(r, 250));
  }
}

function meanPairwiseDistance(coords: Float32Array, rows: number[]): number {
  let total = 0;
  let pairs = 0;
  for (let i = 0; i < rows.length; i++) {
    const xi = coords[rows[i]! * 2]!;
    const yi = coords[rows[i]! * 2 + 1]!;
    for (let j = i + 1; j < rows.length; j++) {
      const dx = coords[rows[j]! * 2]! - xi;
      const dy = coords[rows[j]! * 2 + 1]! - yi;
      total += Math.hypot(dx, dy);
      pairs++;
    }
  }
  return total / pairs;
}

/** Regular polygon approximating a circle; sides is kept high enough that
 * the inradius stays above radius * cos(pi/sides). */
function circlePolygon(cx: number, cy: number, radius: number, sides = 64) {
  return Array.from({ length: sides }, (_, i) => {
    const a = (2 * Math.PI * i) / sides;
    return { x: cx + radius * Math.cos(a), y: cy + radius * Math.sin(a) };
  });
}

beforeAll(async () => {
  workdir = await mkdtemp(join(tmpdir(), "daedalus-ui-e2e-"));
  corpus = join(workdir, "corpus");
  await run(PYTHON, [
    "-m",
    "daedalus.cli",
    "synth",
    "--n",
    "1500",
    "--classes",
    "3",
    "--lots",
    "10",
    "--suppliers",
    "4",
    "--seed",
    "7",
    "--no-images",
    "-o",
    corpus,
  ]);
  truth = JSON.parse(await readFile(join(corpus, "truth.json"), "utf8"));

  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  server = spawn(PYTHON, ["-m", "daedalus.cli", "serve", corpus, "--port", String(port)], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  await waitForServer(baseUrl);

  client = new ApiClient(baseUrl);
  const dataset = await client.dataset();
  ids = dataset.ids;
  rowOf = new Map(ids.map((id, i) => [id, i]));
}, 300_000);

afterAll(async () => {
  if (server) {
    server.kill("SIGTERM");
    await new Promise((r) => {
      server!.once("exit", r);
      setTimeout(r, 5_000);
    });
  }
  if (workdir) await rm(workdir, { recursive: true, force: true });
});

describe("service contracts over the wire", () => {
  it("parses a layout block whose column counts cover the corpus", async () => {
    const { block, etag, snapshot } = await client.layout({ subject: "attr:Supplier" });
    expect(block.header.attribute).toBe("Supplier");
    expect(block.positions).toHaveLength(ids.length * 2);
    const counted = block.header.columns.reduce((acc, c) => acc + c.count, 0);
    expect(counted).toBe(ids.length);
    expect(etag).toMatch(/^"[0-9a-f]{40}"$/);
    expect(snapshot?.dataset_version).toBeTruthy();
  });

  it("serves PNG thumbnails", async () => {
    const blob = new Uint8Array(await client.thumb(ids[0]!));
    expect(Array.from(blob.slice(0, 4))).toEqual([0x89, 0x50, 0x4e, 0x47]);
  });
});

describe("lasso, label, re-project loop", () => {
  let unsupervised: Float32Array;
  let unsupervisedJobId = "";
  let lassoPolygon: { x: number; y: number }[] = [];
  let selectedIds: string[] = [];

  it("computes an unsupervised projection", async () => {
    const job = await client.startProjection({
      attributes: SIZE_ATTRS,
      config: { n_neighbors: 15, n_epochs: 200, seed: 7 },
    });
    unsupervisedJobId = job.id;
    const done = await client.waitForProjection(job.id);
    expect(done.state).toBe("done");
    const block = await client.projectionResult(job.id);
    expect(block.header.rows).toBe(ids.length);
    unsupervised = block.coords;
    for (const v of unsupervised) expect(Number.isFinite(v)).toBe(true);
  });

  it("lasso-selects at least 300 blue-class particles at an arbitrary zoom", () => {
    const blueRows = ids.map((id, i) => i).filter((i) => truth[ids[i]!] === "blue");
    expect(blueRows.length).toBeGreaterThanOrEqual(400);
    let cx = 0;
    let cy = 0;
    for (const r of blueRows) {
      cx += unsupervised[r * 2]!;
      cy += unsupervised[r * 2 + 1]!;
    }
    cx /= blueRows.length;
    cy /= blueRows.length;
    const dists = blueRows
      .map((r) => Math.hypot(unsupervised[r * 2]! - cx, unsupervised[r * 2 + 1]! - cy))
      .sort((a, b) => a - b);
    // radius reaching the 340th closest blue particle, padded past the
    // polygon's inradius shortfall
    const radius = dists[339]! * 1.01 + 1e-9;
    lassoPolygon = circlePolygon(cx, cy, radius);

    const camera: Camera = { centerX: cx + 0.8, centerY: cy - 1.2, zoom: 37 };
    const screenPolygon = lassoPolygon.map((v) => worldToScreen(camera, VIEW, v));
    selectedIds = selectWithScreenLasso(camera, VIEW, screenPolygon, unsupervised, ids);

    const blueSelected = selectedIds.filter((id) => truth[id] === "blue");
    expect(blueSelected.length).toBeGreaterThanOrEqual(300);
  });

  it("matches the engine's own hit testing on identical geometry", async () => {
    const script = [
      "import json, sys",
      "import numpy as np",
      "from daedalus.selection import hit_test",
      "doc = json.load(sys.stdin)",
      "pos = np.array(doc['coords'], dtype=float).reshape(-1, 2)",
      "got = hit_test({'kind': 'lasso', 'vertices': doc['vertices']}, pos, doc['ids'])",
      "print(json.dumps(sorted(got)))",
    ].join("\n");
    const payload = JSON.stringify({
      vertices: lassoPolygon.map((v) => [v.x, v.y]),
      coords: Array.from(unsupervised),
      ids,
    });
    const engineIds: string[] = await new Promise((resolveIds, reject) => {
      const proc = spawn(PYTHON, ["-c", script], { stdio: ["pipe", "pipe", "inherit"] });
      let out = "";
      proc.stdout.on("data", (chunk) => (out += chunk));
      proc.on("error", reject);
      proc.on("exit", (code) =>
        code === 0 ? resolveIds(JSON.parse(out)) : reject(new Error(`oracle exit ${code}`)),
      );
      proc.stdin.end(payload);
    });

    for (const zoom of [1, 0.37, 5.2]) {
      const camera: Camera = { centerX: 1, centerY: -2, zoom };
      const screenPolygon = lassoPolygon.map((v) => worldToScreen(camera, VIEW, v));
      const got = selectWithScreenLasso(camera, VIEW, screenPolygon, unsupervised, ids);
      expect([...got].sort()).toEqual(engineIds);
    }
  });

  it("pulls the blue-labeled points together in a supervised re-projection", async () => {
    const created = await client.upsertAlphabet({
      name: "Colors",
      labels: ["blue"],
      who: "e2e",
    });
    expect(created.alphabet.name).toBe("Colors");
    const assigned = await client.assign("Colors", selectedIds, "blue", "e2e");
    expect(assigned.changed).toBe(selectedIds.length);

    // Re-projection warm-starts from the embedding being looked at, as the
    // recompute control does: labels reshape the view instead of replacing it.
    const job = await client.startProjection({
      attributes: SIZE_ATTRS,
      alphabet: "Colors",
      config: { n_neighbors: 15, n_epochs: 200, seed: 7 },
      initial_job: unsupervisedJobId,
    });
    await client.waitForProjection(job.id);
    const supervised = (await client.projectionResult(job.id)).coords;

    const labeled = await client.labelParticles("Colors", "blue");
    expect([...labeled.particles].sort()).toEqual([...selectedIds].sort());

    const rows = selectedIds.map((id) => rowOf.get(id)!);
    const before = meanPairwiseDistance(unsupervised, rows);
    const after = meanPairwiseDistance(supervised, rows);
    expect(after).toBeLessThan(before);
  });
});

describe("panel numbers equal intercepted response fields", () => {
  function recordingFetch(): { impl: FetchLike; raw: () => unknown } {
    let last: unknown = null;
    const impl: FetchLike = async (url, init) => {
      const res = await fetch(url, init);
      if ((res.headers.get("content-type") ?? "").includes("application/json")) {
        last = JSON.parse(await res.clone().text());
      }
      return res;
    };
    return { impl, raw: () => last };
  }

  function sample(rand: () => number, pool: string[], k: number): string[] {
    const copy = [...pool];
    for (let i = copy.length - 1; i > 0; i--) {
      const j = Math.floor(rand() * (i + 1));
      [copy[i], copy[j]] = [copy[j]!, copy[i]!];
    }
    return copy.slice(0, k);
  }

  it("holds across a scripted 20-step session, exactly", async () => {
    // labels give the alphabet subject non-trivial groups and unlabeled counts
    const rand = mulberry32(1313);
    await client.upsertAlphabet({ name: "Panels", labels: ["keep", "reject"], who: "e2e" });
    await client.assign("Panels", sample(rand, ids, 220), "keep", "e2e");
    await client.assign("Panels", sample(rand, ids, 180), "reject", "e2e");

    const bounds = await client.selectionStats({
      ids,
      subjects: ["attr:Area", "attr:Circularity"],
    });
    const area = bounds.stats[0]!.numeric!;
    const circ = bounds.stats[1]!.numeric!;

    const recorder = recordingFetch();
    const recorded = new ApiClient(baseUrl, recorder.impl);
    const subjectPool = ["attr:Supplier", "attr:Lot Number", "attr:Area", "alphabet:Panels"];
    let comparisons = 0;
    let steps = 0;

    const exact = (shown: unknown, wire: unknown) => {
      expect(shown).toStrictEqual(wire);
      comparisons++;
    };

    for (let step = 0; step < 20; step++) {
      steps++;
      const subjects = sample(rand, subjectPool, 2 + Math.floor(rand() * 2));
      if (step % 2 === 0) {
        const clauses: FilterClause[] = [];
        if (rand() < 0.7) {
          clauses.push({
            kind: "category",
            attribute: "Supplier",
            allowed: sample(rand, ["A", "B", "C", "D"], 1 + Math.floor(rand() * 3)),
          });
        }
        if (rand() < 0.6) {
          const pick = rand() < 0.5 ? { name: "Area", b: area } : { name: "Circularity", b: circ };
          const lo = pick.b.min + rand() * (pick.b.max - pick.b.min);
          const hi = lo + rand() * (pick.b.max - lo);
          clauses.push({ kind: "range", attribute: pick.name, lo, hi });
        }
        if (rand() < 0.4) {
          clauses.push({
            kind: "alphabet",
            alphabet: "Panels",
            allowed: sample(rand, ["keep", "reject", "UNLABELED"], 1 + Math.floor(rand() * 2)),
          });
        }
        const res = await recorded.filterSummary({ filters: clauses, subjects });
        const raw = recorder.raw() as {
          included_count: number;
          summaries: Array<{
            subject: string;
            groups: Array<{
              label: string;
              total: number;
              included: number;
              excluded_by_self: number;
              excluded_by_others: number;
            }>;
          }>;
        };
        const model = filterPanel(res);
        exact(model.includedCount, raw.included_count);
        expect(model.sections).toHaveLength(raw.summaries.length);
        model.sections.forEach((section, i) => {
          const rawSummary = raw.summaries[i]!;
          exact(section.subject, rawSummary.subject);
          expect(section.rows).toHaveLength(rawSummary.groups.length);
          section.rows.forEach((row, j) => {
            const g = rawSummary.groups[j]!;
            exact(row.label, g.label);
            exact(row.total, g.total);
            exact(row.included, g.included);
            exact(row.excludedBySelf, g.excluded_by_self);
            exact(row.excludedByOthers, g.excluded_by_others);
          });
        });
      } else {
        const k = 1 + Math.floor(rand() * 799);
        const res = await recorded.selectionStats({ ids: sample(rand, ids, k), subjects });
        const raw = recorder.raw() as {
          selection_size: number;
          stats: Array<{
            subject: string;
            groups: Array<{ label: string; count: number; percent: string }>;
            numeric?: { min: number; max: number; mean: number };
            unlabeled_count?: number;
          }>;
        };
        const model = selectionPanel(res);
        exact(model.selectionSize, raw.selection_size);
        expect(model.sections).toHaveLength(raw.stats.length);
        model.sections.forEach((section, i) => {
          const rawStats = raw.stats[i]!;
          exact(section.subject, rawStats.subject);
          expect(section.rows).toHaveLength(rawStats.groups.length);
          section.rows.forEach((row, j) => {
            const g = rawStats.groups[j]!;
            exact(row.label, g.label);
            exact(row.count, g.count);
            exact(row.percent, g.percent);
          });
          exact(section.numeric, rawStats.numeric ?? null);
          exact(section.unlabeledCount, rawStats.unlabeled_count ?? null);
        });
      }
    }

    expect(steps).toBe(20);
    expect(comparisons).toBeGreaterThan(200);
  });
});
