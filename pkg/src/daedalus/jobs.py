"""Asynchronous projection jobs on a bounded worker pool.

Jobs move queued -> running -> {done, failed, cancelled}; nothing else.
An identical request submitted while its job is still in flight returns
the existing job instead of queueing a second computation (the request
key must fold in everything the result depends on, label state included).
Cancellation is cooperative: the flag is checked when a worker picks the
job up and again at every progress report, so a running optimization
stops at the next epoch boundary.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

QUEUED = "queued"
RUNNING = "running"
DONE = "done"
FAILED = "failed"
CANCELLED = "cancelled"

TERMINAL = (DONE, FAILED, CANCELLED)


class JobCancelled(Exception):
    """Raised inside a worker to abandon the computation."""


@dataclass
class ProjectionJob:
    id: str
    key: str
    request: dict
    state: str = QUEUED
    progress: float = 0.0
    result: object | None = None
    error: dict | None = None
    cancel_event: threading.Event = field(default_factory=threading.Event)

    def view(self) -> dict:
        out = {
            "id": self.id,
            "state": self.state,
            "progress": round(self.progress, 6),
            "request": self.request,
        }
        if self.error is not None:
            out["error"] = self.error
        return out


class JobPool:
    """Bounded pool of one-shot tasks with in-flight deduplication.

    Each task receives a progress callback and must call it often enough
    for cancellation to bite; the callback raises JobCancelled once the
    job's cancel flag is set. The request dict is only an echo for status
    views; the task closure carries the actual inputs.
    """

    def __init__(self, workers: int = 2):
        self._executor = ThreadPoolExecutor(max_workers=max(1, workers))
        self._lock = threading.Lock()
        self._jobs: dict[str, ProjectionJob] = {}
        self._by_key: dict[str, str] = {}  # in-flight request key -> job id
        self._counter = 0

    def submit(
        self,
        key: str,
        request: dict,
        task: Callable[[Callable[[float], None]], object],
    ) -> ProjectionJob:
        with self._lock:
            existing = self._by_key.get(key)
            if existing is not None:
                job = self._jobs[existing]
                if job.state not in TERMINAL:
                    return job
            self._counter += 1
            job = ProjectionJob(id=f"job-{self._counter:04d}", key=key, request=request)
            self._jobs[job.id] = job
            self._by_key[key] = job.id
        self._executor.submit(self._execute, job, task)
        return job

    def get(self, job_id: str) -> ProjectionJob | None:
        with self._lock:
            return self._jobs.get(job_id)

    def cancel(self, job_id: str) -> ProjectionJob | None:
        job = self.get(job_id)
        if job is None:
            return None
        job.cancel_event.set()
        return job

    def shutdown(self) -> None:
        for job in list(self._jobs.values()):
            job.cancel_event.set()
        self._executor.shutdown(wait=True)

    def _execute(
        self,
        job: ProjectionJob,
        task: Callable[[Callable[[float], None]], object],
    ) -> None:
        with self._lock:
            job.state = RUNNING
        if job.cancel_event.is_set():
            self._finish(job, CANCELLED)
            return

        def report(fraction: float) -> None:
            if job.cancel_event.is_set():
                raise JobCancelled(job.id)
            # progress never moves backwards even if the task's does
            job.progress = max(job.progress, min(1.0, float(fraction)))

        try:
            result = task(report)
        except JobCancelled:
            self._finish(job, CANCELLED)
            return
        except Exception as e:  # noqa: BLE001 - jobs must never kill workers
            payload = getattr(e, "to_payload", None)
            job.error = payload() if callable(payload) else {
                "code": "projection-failed",
                "message": str(e),
                "details": [],
            }
            self._finish(job, FAILED)
            return
        job.result = result
        job.progress = 1.0
        self._finish(job, DONE)

    def _finish(self, job: ProjectionJob, state: str) -> None:
        with self._lock:
            job.state = state
            if self._by_key.get(job.key) == job.id:
                del self._by_key[job.key]
