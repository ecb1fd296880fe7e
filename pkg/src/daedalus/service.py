"""HTTP JSON API over one loaded dataset.

All reads are side-effect free; label mutations are the only writes and
funnel through the label store's internal lock. Every JSON response carries
a `snapshot` token (dataset version + label log position) so a client can
tell which state its numbers were computed against. Coordinates travel as
binary blocks (the container format in blocks.py), not JSON arrays.

Projections run as jobs on a bounded pool. A job's label target is
materialized at submit time, so later label edits never bleed into an
in-flight computation; the dedup key folds in the log position for the
same reason.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Callable

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .blocks import layout_to_bytes, projection_to_bytes
from .errors import ConfigError, DaedalusError, LabelStoreError
from .features import encode_target
from .filters import (
    AlphabetFilter,
    CategoryFilter,
    FilterSet,
    FilterSummary,
    RangeFilter,
    summarize_alphabet,
    summarize_attribute,
)
from .ingest import MANIFEST_NAME, PARTICLES_NAME, load_dataset, load_image_store
from .jobs import DONE, JobPool
from .labels import LabelStore
from .layout import LayoutConfig, alphabet_layout, attribute_layout, bin_numeric_attribute
from .model import Dataset
from .projection import ProjectionConfig, project
from .selection import selection_stats, selection_stats_alphabet

LABEL_LOG_NAME = "labels.jsonl"
DEFAULT_WORKERS = 2


class NotFoundError(DaedalusError):
    """A path parameter referenced something the server does not have."""

    code = "not-found"


def _status_of(error: DaedalusError) -> int:
    return 404 if isinstance(error, NotFoundError) else 422


class LayoutRequest(BaseModel, extra="forbid"):
    subject: str  # "attr:<name>" or "alphabet:<name-or-id>"
    target_bins: int | None = Field(default=None, ge=1)
    cell_size: float = 1.0
    column_gap: int = 2
    aspect: float = 4.0
    sort_attribute: str | None = None


class ProjectionRequest(BaseModel, extra="forbid"):
    attributes: list[str]
    alphabet: str | None = None
    config: dict[str, Any] = Field(default_factory=dict)
    initial_job: str | None = None  # warm-start from a finished job's result


class FilterClause(BaseModel, extra="forbid"):
    kind: str  # "category" | "range" | "alphabet"
    attribute: str | None = None
    alphabet: str | None = None
    allowed: list[str] | None = None
    lo: float | None = None
    hi: float | None = None


class FilterSummaryRequest(BaseModel, extra="forbid"):
    filters: list[FilterClause] = Field(default_factory=list)
    subjects: list[str] = Field(default_factory=list)
    target_bins: int | None = Field(default=None, ge=1)
    include_ids: bool = False


class SelectionStatsRequest(BaseModel, extra="forbid"):
    ids: list[str]
    subjects: list[str] = Field(default_factory=list)
    target_bins: int | None = Field(default=None, ge=1)


class AssignRequest(BaseModel, extra="forbid"):
    particles: list[str]
    label: str
    who: str = "local"


class UnassignRequest(BaseModel, extra="forbid"):
    particles: list[str]
    who: str = "local"


class SnapshotImportRequest(BaseModel, extra="forbid"):
    document: dict[str, Any]
    policy: str = "reject"
    who: str = "local"


def _dataset_version(data_dir: Path) -> str:
    digest = hashlib.sha1()
    for name in (MANIFEST_NAME, PARTICLES_NAME):
        path = data_dir / name
        if path.is_file():
            digest.update(path.read_bytes())
    return digest.hexdigest()[:12]


def _parse_filters(clauses: list[FilterClause], store: LabelStore) -> FilterSet:
    parsed = []
    for i, c in enumerate(clauses):
        where = f"filters[{i}]"
        if c.kind == "category":
            if not c.attribute or c.allowed is None:
                raise ConfigError(
                    f"{where}: category filter needs attribute and allowed",
                    details=[{"field": where}],
                )
            parsed.append(CategoryFilter(c.attribute, frozenset(c.allowed)))
        elif c.kind == "range":
            if not c.attribute or c.lo is None or c.hi is None:
                raise ConfigError(
                    f"{where}: range filter needs attribute, lo, hi",
                    details=[{"field": where}],
                )
            parsed.append(RangeFilter(c.attribute, c.lo, c.hi))
        elif c.kind == "alphabet":
            if not c.alphabet or c.allowed is None:
                raise ConfigError(
                    f"{where}: alphabet filter needs alphabet and allowed",
                    details=[{"field": where}],
                )
            # normalize to the alphabet name, which is what masks key on
            parsed.append(
                AlphabetFilter(store.resolve(c.alphabet).name, frozenset(c.allowed))
            )
        else:
            raise ConfigError(
                f"{where}: unknown filter kind {c.kind!r}",
                details=[{"field": where + ".kind"}],
            )
    return FilterSet(filters=tuple(parsed))


def _summary_payload(summary: FilterSummary) -> dict:
    out: dict[str, Any] = {
        "subject": summary.subject,
        "groups": [
            {
                "label": g.label,
                "total": g.total,
                "included": g.included,
                "excluded_by_self": g.excluded_by_self,
                "excluded_by_others": g.excluded_by_others,
            }
            for g in summary.groups
        ],
    }
    if summary.bin_spec is not None:
        out["bins"] = {
            "edges": list(summary.bin_spec.edges),
            "labels": list(summary.bin_spec.labels),
        }
    return out


def _split_subject(subject: str) -> tuple[str, str]:
    kind, _, name = subject.partition(":")
    if kind not in ("attr", "alphabet") or not name:
        raise ConfigError(
            f"subject must be 'attr:<name>' or 'alphabet:<name>', got {subject!r}"
        )
    return kind, name


def create_app(
    data_dir: str | Path | None = None, workers: int = DEFAULT_WORKERS
) -> FastAPI:
    """Build the app around the dataset stored in data_dir.

    data_dir defaults to $DAEDALUS_DATA. The directory must hold a written
    dataset (manifest + CSV + thumbnail dirs); the label log lives next to
    them so labels survive restarts.
    """
    if data_dir is None:
        data_dir = os.environ.get("DAEDALUS_DATA")
        if not data_dir:
            raise ConfigError("no data directory: pass data_dir or set DAEDALUS_DATA")
    data_dir = Path(data_dir)

    dataset = load_dataset(data_dir / MANIFEST_NAME)
    images = load_image_store(dataset, data_dir)
    store = LabelStore(log_path=data_dir / LABEL_LOG_NAME)
    version = _dataset_version(data_dir)
    pool = JobPool(workers=workers)
    etags = {
        (pid, mode): hashlib.sha1(blob).hexdigest()
        for mode, blobs in (("original", images.thumbnails), ("transparent", images.transparent))
        for pid, blob in blobs.items()
    }

    app = FastAPI(title="daedalus", docs_url=None, redoc_url=None)
    app.state.dataset = dataset
    app.state.store = store
    app.state.pool = pool

    def snapshot() -> dict:
        return {"dataset_version": version, "label_position": store.log_position}

    @app.exception_handler(DaedalusError)
    async def engine_error(_req: Request, exc: DaedalusError):
        return JSONResponse(status_code=_status_of(exc), content=exc.to_payload())

    @app.exception_handler(RequestValidationError)
    async def body_error(_req: Request, exc: RequestValidationError):
        details = [
            {
                "field": ".".join(str(p) for p in err["loc"] if p != "body"),
                "message": err["msg"],
            }
            for err in exc.errors()
        ]
        return JSONResponse(
            status_code=422,
            content={"code": "validation-error", "message": "invalid request", "details": details},
        )

    def resolve_alphabet(name_or_id: str):
        try:
            return store.resolve(name_or_id)
        except LabelStoreError as e:
            raise NotFoundError(e.message) from e

    # ---- dataset ----

    @app.get("/dataset")
    def get_dataset():
        return {
            "snapshot": snapshot(),
            "particle_count": len(dataset),
            "provenance": dataset.provenance,
            "created_at": dataset.created_at,
            "schema": dataset.schema.to_dict(),
            "ids": dataset.ids,
        }

    @app.get("/attributes")
    def get_attributes():
        return {"snapshot": snapshot(), "attributes": dataset.schema.to_dict()["attributes"]}

    # ---- layout ----

    @app.post("/layout")
    def post_layout(req: LayoutRequest):
        kind, name = _split_subject(req.subject)
        config = LayoutConfig(
            cell_size=req.cell_size,
            column_gap=req.column_gap,
            aspect=req.aspect,
            sort_attribute=req.sort_attribute,
        )
        if kind == "attr":
            descriptor = dataset.schema.require(name)
            bins = None
            if descriptor.is_numeric:
                bins = bin_numeric_attribute(
                    dataset.numeric_column(name),
                    req.target_bins if req.target_bins is not None else 10,
                    name,
                )
            grid = attribute_layout(dataset, name, bins=bins, config=config)
        else:
            alphabet = resolve_alphabet(name)
            grid = alphabet_layout(
                dataset,
                alphabet.name,
                alphabet.label_order(),
                store.assignments_of(alphabet.id),
                config=config,
            )
        blob = layout_to_bytes(grid)
        return Response(
            content=blob,
            media_type="application/octet-stream",
            headers={
                "ETag": f'"{hashlib.sha1(blob).hexdigest()}"',
                "X-Snapshot": json.dumps(snapshot(), sort_keys=True),
            },
        )

    # ---- projection jobs ----

    @app.post("/projection")
    def post_projection(req: ProjectionRequest):
        if not req.attributes:
            raise ConfigError(
                "projection needs at least one attribute",
                details=[{"field": "attributes"}],
            )
        for a in req.attributes:
            dataset.schema.require(a)
        try:
            config = ProjectionConfig(**req.config)
        except TypeError as e:
            raise ConfigError(str(e), details=[{"field": "config"}]) from e
        except ConfigError as e:
            e.details = e.details or [{"field": "config"}]
            raise
        if config.n_neighbors >= len(dataset):
            raise ConfigError(
                f"n_neighbors={config.n_neighbors} must be < particle count {len(dataset)}",
                details=[{"field": "config.n_neighbors"}],
            )

        target = None
        alphabet_id = None
        label_position = None
        if req.alphabet is not None:
            alphabet = resolve_alphabet(req.alphabet)
            alphabet_id = alphabet.id
            target = encode_target(
                dataset, store.assignments_of(alphabet.id), alphabet.label_order()
            )
            label_position = store.log_position

        initial = None
        if req.initial_job is not None:
            source = pool.get(req.initial_job)
            if source is None:
                raise NotFoundError(f"unknown job {req.initial_job!r}")
            if source.state != DONE:
                raise ConfigError(f"job {req.initial_job!r} has no result to warm-start from")
            if source.result.coordinates.shape[0] == len(dataset):
                initial = np.array(source.result.coordinates, dtype=np.float64)

        request_echo = {
            "attributes": list(req.attributes),
            "alphabet": alphabet_id,
            "config": config.to_dict(),
            "initial_job": req.initial_job,
        }
        key = json.dumps(
            {**request_echo, "labels_at": label_position, "dataset": version},
            sort_keys=True,
        )

        def task(report: Callable[[float], None]):
            return project(
                dataset,
                request_echo["attributes"],
                config,
                target=target,
                alphabet_id=alphabet_id,
                initial=initial,
                progress=report,
            )

        job = pool.submit(key, request_echo, task)
        return {"snapshot": snapshot(), **job.view()}

    @app.get("/projection/{job_id}")
    def get_projection(job_id: str):
        job = pool.get(job_id)
        if job is None:
            raise NotFoundError(f"unknown job {job_id!r}")
        out = {"snapshot": snapshot(), **job.view()}
        if job.state == DONE:
            r = job.result
            out["result"] = {
                "rows": int(r.coordinates.shape[0]),
                "attributes": list(r.attributes),
                "alphabet": r.alphabet_id,
                "config": r.config.to_dict(),
                "computed_at": r.computed_at,
            }
        return out

    @app.get("/projection/{job_id}/result")
    def get_projection_result(job_id: str):
        job = pool.get(job_id)
        if job is None:
            raise NotFoundError(f"unknown job {job_id!r}")
        if job.state != DONE:
            raise ConfigError(f"job {job_id!r} is {job.state}, not done")
        blob = projection_to_bytes(job.result)
        return Response(
            content=blob,
            media_type="application/octet-stream",
            headers={"ETag": f'"{hashlib.sha1(blob).hexdigest()}"'},
        )

    @app.delete("/projection/{job_id}")
    def delete_projection(job_id: str):
        job = pool.cancel(job_id)
        if job is None:
            raise NotFoundError(f"unknown job {job_id!r}")
        return {"snapshot": snapshot(), **job.view()}

    # ---- filters and selection ----

    @app.post("/filters/summary")
    def post_filter_summary(req: FilterSummaryRequest):
        filter_set = _parse_filters(req.filters, store)
        assignments = store.all_assignments_by_name()
        included = filter_set.included(dataset, assignments)
        summaries = []
        for subject in req.subjects:
            kind, name = _split_subject(subject)
            if kind == "attr":
                summaries.append(
                    summarize_attribute(
                        dataset, name, filter_set, assignments, req.target_bins
                    )
                )
            else:
                alphabet = resolve_alphabet(name)
                summaries.append(
                    summarize_alphabet(
                        dataset,
                        alphabet.name,
                        alphabet.label_order(),
                        filter_set,
                        assignments,
                    )
                )
        out = {
            "snapshot": snapshot(),
            "included_count": int(included.sum()),
            "summaries": [_summary_payload(s) for s in summaries],
        }
        if req.include_ids:
            out["included_ids"] = [
                p.id for p, keep in zip(dataset.particles, included) if keep
            ]
        return out

    @app.post("/selection/stats")
    def post_selection_stats(req: SelectionStatsRequest):
        selected = np.zeros(len(dataset), dtype=bool)
        for pid in req.ids:
            if not dataset.has_id(pid):
                raise ConfigError(
                    f"unknown particle id {pid!r}", details=[{"field": "ids"}]
                )
            selected[dataset.row_of(pid)] = True
        stats = []
        for subject in req.subjects:
            kind, name = _split_subject(subject)
            if kind == "attr":
                s = selection_stats(dataset, selected, name, req.target_bins)
            else:
                alphabet = resolve_alphabet(name)
                s = selection_stats_alphabet(
                    dataset,
                    selected,
                    alphabet.name,
                    alphabet.label_order(),
                    store.assignments_of(alphabet.id),
                )
            payload: dict[str, Any] = {
                "subject": s.subject,
                "groups": [
                    {"label": g.label, "count": g.count, "percent": g.percent}
                    for g in s.groups
                ],
            }
            if s.numeric is not None:
                payload["numeric"] = {
                    "min": s.numeric.minimum,
                    "max": s.numeric.maximum,
                    "mean": s.numeric.mean,
                }
            if s.unlabeled_count is not None:
                payload["unlabeled_count"] = s.unlabeled_count
            stats.append(payload)
        return {
            "snapshot": snapshot(),
            "selection_size": int(selected.sum()),
            "stats": stats,
        }

    # ---- labels ----

    @app.get("/alphabets")
    def get_alphabets():
        out = []
        for alphabet in store.alphabets():
            doc = alphabet.to_dict()
            doc["assigned_count"] = len(store.raw_assignments(alphabet.id))
            out.append(doc)
        return {"snapshot": snapshot(), "alphabets": out}

    @app.post("/alphabets")
    def post_alphabet(definition: dict):
        who = str(definition.pop("who", "local"))
        force = bool(definition.pop("force", False))
        alphabet = store.upsert_alphabet(definition, who=who, force=force)
        return {"snapshot": snapshot(), "alphabet": alphabet.to_dict()}

    @app.post("/alphabets/{alphabet_id}/assign")
    def post_assign(alphabet_id: str, req: AssignRequest):
        alphabet = resolve_alphabet(alphabet_id)
        for pid in req.particles:
            if not dataset.has_id(pid):
                raise ConfigError(
                    f"unknown particle id {pid!r}", details=[{"field": "particles"}]
                )
        changed = store.assign(alphabet.id, req.particles, req.label, who=req.who)
        return {"snapshot": snapshot(), "changed": changed}

    @app.post("/alphabets/{alphabet_id}/unassign")
    def post_unassign(alphabet_id: str, req: UnassignRequest):
        alphabet = resolve_alphabet(alphabet_id)
        changed = store.unassign(alphabet.id, req.particles, who=req.who)
        return {"snapshot": snapshot(), "changed": changed}

    @app.get("/labels/{alphabet}/{label}/particles")
    def get_label_particles(alphabet: str, label: str):
        found = resolve_alphabet(alphabet)
        try:
            particles = store.query_by_label(found.id, label, universe=dataset.ids)
        except LabelStoreError as e:
            if "unknown label" in e.message:
                raise NotFoundError(e.message) from e
            raise
        return {"snapshot": snapshot(), "particles": particles}

    # ---- thumbnails ----

    @app.get("/thumb/{particle_id}")
    def get_thumb(particle_id: str, request: Request, mode: str = "original"):
        if mode not in ("original", "transparent"):
            raise ConfigError(f"unknown thumbnail mode {mode!r}")
        blobs = images.thumbnails if mode == "original" else images.transparent
        blob = blobs.get(particle_id)
        if blob is None:
            raise NotFoundError(f"unknown particle id {particle_id!r}")
        etag = f'"{etags[(particle_id, mode)]}"'
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"ETag": etag})
        return Response(content=blob, media_type="image/png", headers={"ETag": etag})

    # ---- label snapshots ----

    @app.get("/snapshot")
    def get_snapshot():
        return {"snapshot": snapshot(), "document": store.export_snapshot()}

    @app.post("/snapshot")
    def post_snapshot(req: SnapshotImportRequest):
        report = store.import_snapshot(req.document, policy=req.policy, who=req.who)
        return {"snapshot": snapshot(), "report": report}

    return app


__all__ = ["create_app", "NotFoundError", "DEFAULT_WORKERS", "LABEL_LOG_NAME"]
