"""Label alphabets, assignments, and the append-only modification log.

An alphabet is an ordered group of at least one label (id, name, color,
optional description); each particle holds at most one label per alphabet,
so every alphabet's labels plus UNLABELED partition the particle space.
Assignments are keyed by label id: renaming a label never touches them.

The store is event-sourced: every mutation appends one entry (who, when, op)
to the log, and replaying the log from empty reproduces the state exactly.
Export documents carry alphabets, assignments, and the log; importing into
an empty store adopts the document verbatim (byte-equal round trip), while
importing into a non-empty store merges by name under an explicit policy.

Concurrency: single writer (one lock serializes mutations), readers get
copies.
"""

from __future__ import annotations

import colorsys
import json
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .errors import LabelStoreError, SnapshotError
from .layout import UNLABELED

MERGE_POLICIES = ("reject", "theirs", "ours")

COLOR_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _default_clock() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _wheel_color(i: int) -> str:
    r, g, b = colorsys.hsv_to_rgb(((i * 47) % 360) / 360.0, 0.65, 0.85)
    return f"#{round(r * 255):02x}{round(g * 255):02x}{round(b * 255):02x}"


@dataclass(frozen=True)
class Label:
    id: str
    name: str
    color: str
    description: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id, "name": self.name,
            "color": self.color, "description": self.description,
        }


@dataclass
class LabelAlphabet:
    id: str
    name: str
    labels: list[Label]
    created_by: str = "local"
    created_at: str = ""

    def label_by_id(self, label_id: str) -> Label | None:
        return next((l for l in self.labels if l.id == label_id), None)

    def label_by_name(self, name: str) -> Label | None:
        return next((l for l in self.labels if l.name == name), None)

    def label_order(self) -> list[str]:
        return [l.name for l in self.labels]

    def to_dict(self) -> dict:
        return {
            "id": self.id, "name": self.name,
            "created_by": self.created_by, "created_at": self.created_at,
            "labels": [l.to_dict() for l in self.labels],
        }

    def copy(self) -> "LabelAlphabet":
        return LabelAlphabet(
            id=self.id, name=self.name, labels=list(self.labels),
            created_by=self.created_by, created_at=self.created_at,
        )


@dataclass
class _AlphabetState:
    alphabet: LabelAlphabet
    assignments: dict[str, str] = field(default_factory=dict)  # particle -> label id


class LabelStore:
    """In-memory state + optional on-disk JSONL log.

    log_position (= applied event count) is the label half of a consistency
    snapshot token; the dataset version is the other half.
    """

    def __init__(
        self,
        log_path: Path | str | None = None,
        clock: Callable[[], str] | None = None,
    ):
        self._states: dict[str, _AlphabetState] = {}  # by alphabet id
        self._log: list[dict] = []
        self._lock = threading.RLock()
        self._clock = clock or _default_clock
        self._next_alphabet = 1
        self._next_label = 1
        self._log_path = Path(log_path) if log_path is not None else None
        if self._log_path is not None and self._log_path.exists():
            with open(self._log_path, encoding="utf-8") as f:
                for lineno, line in enumerate(f, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        event = json.loads(line)
                    except json.JSONDecodeError as e:
                        raise LabelStoreError(f"corrupt log line {lineno}: {e}") from e
                    self._apply(event)
            self._reseed_counters()

    # ---- reads ----

    @property
    def log_position(self) -> int:
        return len(self._log)

    def alphabets(self) -> list[LabelAlphabet]:
        with self._lock:
            return [s.alphabet.copy() for s in self._states.values()]

    def get_alphabet(self, alphabet_id: str) -> LabelAlphabet:
        with self._lock:
            return self._require(alphabet_id).alphabet.copy()

    def find_by_name(self, name: str) -> LabelAlphabet | None:
        with self._lock:
            for s in self._states.values():
                if s.alphabet.name == name:
                    return s.alphabet.copy()
            return None

    def resolve(self, name_or_id: str) -> LabelAlphabet:
        """Accept either an alphabet id or its unique name."""
        with self._lock:
            s = self._states.get(name_or_id)
            if s is not None:
                return s.alphabet.copy()
            found = self.find_by_name(name_or_id)
            if found is None:
                raise LabelStoreError(f"unknown alphabet {name_or_id!r}")
            return found

    def assignments_of(self, alphabet_id: str) -> dict[str, str]:
        """particle id -> label NAME (the categorical view used downstream)."""
        with self._lock:
            s = self._require(alphabet_id)
            names = {l.id: l.name for l in s.alphabet.labels}
            return {pid: names[lid] for pid, lid in s.assignments.items()}

    def raw_assignments(self, alphabet_id: str) -> dict[str, str]:
        """particle id -> label id."""
        with self._lock:
            return dict(self._require(alphabet_id).assignments)

    def all_assignments_by_name(self) -> dict[str, dict[str, str]]:
        """alphabet name -> {particle -> label name}, for filters/layouts."""
        with self._lock:
            return {
                s.alphabet.name: self.assignments_of(aid)
                for aid, s in self._states.items()
            }

    def as_categorical(self, alphabet_id: str) -> tuple[list[str], dict[str, str]]:
        """(label order + UNLABELED, particle -> label name): the mechanism
        that lets an alphabet behave like a categorical attribute."""
        with self._lock:
            s = self._require(alphabet_id)
            return s.alphabet.label_order() + [UNLABELED], self.assignments_of(alphabet_id)

    def query_by_label(
        self,
        alphabet_id: str,
        label: str,
        universe: list[str] | None = None,
    ) -> list[str]:
        """Particle ids carrying the label (by id or name); UNLABELED returns
        the complement within `universe` (required for UNLABELED)."""
        with self._lock:
            s = self._require(alphabet_id)
            if label == UNLABELED:
                if universe is None:
                    raise LabelStoreError("UNLABELED query needs the particle universe")
                assigned = set(s.assignments)
                return sorted(pid for pid in universe if pid not in assigned)
            l = s.alphabet.label_by_id(label) or s.alphabet.label_by_name(label)
            if l is None:
                raise LabelStoreError(
                    f"unknown label {label!r} in alphabet {s.alphabet.name!r}"
                )
            return sorted(pid for pid, lid in s.assignments.items() if lid == l.id)

    def _require(self, alphabet_id: str) -> _AlphabetState:
        s = self._states.get(alphabet_id)
        if s is None:
            raise LabelStoreError(f"unknown alphabet {alphabet_id!r}")
        return s

    # ---- mutations ----

    def upsert_alphabet(
        self, definition: dict, who: str = "local", force: bool = False
    ) -> LabelAlphabet:
        """Create (no id, fresh name) or update (by id) an alphabet.

        Labels are matched by id on update, so renames preserve assignments.
        Labels omitted from an update are removed; removal of a label that
        still has assignments is rejected unless force=True (force also
        unassigns). Colors must be unique within the alphabet; missing
        colors are drawn from a fixed palette.
        """
        with self._lock:
            name = str(definition.get("name", "")).strip()
            if not name:
                raise LabelStoreError("alphabet name must be non-empty")
            raw_labels = definition.get("labels") or []
            if not raw_labels:
                raise LabelStoreError("an alphabet needs at least one label")

            alphabet_id = definition.get("id")
            existing = self._states.get(alphabet_id) if alphabet_id else None
            if alphabet_id and existing is None:
                raise LabelStoreError(f"unknown alphabet {alphabet_id!r}")
            if existing is None:
                for s in self._states.values():
                    if s.alphabet.name == name:
                        raise LabelStoreError(f"alphabet named {name!r} already exists")
                alphabet_id = f"A{self._next_alphabet}"

            labels = self._build_labels(raw_labels, existing)
            if existing is not None:
                kept = {l.id for l in labels}
                removed = [l for l in existing.alphabet.labels if l.id not in kept]
                if removed:
                    counts = {
                        l.id: sum(1 for lid in existing.assignments.values() if lid == l.id)
                        for l in removed
                    }
                    assigned = {lid: c for lid, c in counts.items() if c}
                    if assigned and not force:
                        detail = ", ".join(
                            f"{existing.alphabet.label_by_id(lid).name}: {c}"
                            for lid, c in sorted(assigned.items())
                        )
                        raise LabelStoreError(
                            f"labels still assigned ({detail}); pass force to remove"
                        )

            doc = {
                "id": alphabet_id,
                "name": name,
                "created_by": (
                    existing.alphabet.created_by if existing else
                    str(definition.get("created_by", who))
                ),
                "created_at": (
                    existing.alphabet.created_at if existing else self._clock()
                ),
                "labels": [l.to_dict() for l in labels],
            }
            self._append(
                {"op": "upsert_alphabet", "who": who, "when": self._clock(),
                 "alphabet": doc, "force": bool(force)}
            )
            return self._states[alphabet_id].alphabet.copy()

    def _build_labels(
        self, raw_labels: list, existing: _AlphabetState | None
    ) -> list[Label]:
        labels: list[Label] = []
        used_colors: set[str] = set()
        used_names: set[str] = set()
        palette_cursor = 0

        def next_color() -> str:
            nonlocal palette_cursor
            while True:
                c = (
                    COLOR_PALETTE[palette_cursor]
                    if palette_cursor < len(COLOR_PALETTE)
                    else _wheel_color(palette_cursor)
                )
                palette_cursor += 1
                if c not in used_colors:
                    return c

        for raw in raw_labels:
            if isinstance(raw, str):
                raw = {"name": raw}
            lname = str(raw.get("name", "")).strip()
            if not lname or lname == UNLABELED:
                raise LabelStoreError(f"invalid label name {lname!r}")
            if lname in used_names:
                raise LabelStoreError(f"duplicate label name {lname!r}")
            lid = raw.get("id")
            if lid is not None:
                if existing is None or existing.alphabet.label_by_id(lid) is None:
                    raise LabelStoreError(f"unknown label id {lid!r}")
            color = raw.get("color")
            if color is not None:
                color = str(color).lower()
                if color in used_colors:
                    raise LabelStoreError(f"duplicate label color {color!r}")
            labels.append(
                Label(
                    id=lid or "",  # placeholder, resolved below
                    name=lname,
                    color=color or "",
                    description=str(raw.get("description", "")),
                )
            )
            used_names.add(lname)
            if color:
                used_colors.add(color)

        out: list[Label] = []
        next_new = self._next_label
        for l in labels:
            if l.id:
                out.append(l)
            else:
                out.append(replace(l, id=f"L{next_new}"))
                next_new += 1
        out = [l if l.color else replace(l, color=next_color()) for l in out]
        colors = [l.color for l in out]
        if len(set(colors)) != len(colors):
            raise LabelStoreError("label colors must be unique within an alphabet")
        return out

    def assign(
        self, alphabet_id: str, particle_ids: list[str], label: str, who: str = "local"
    ) -> int:
        """Set the label on each particle (overwrite); returns changed count."""
        with self._lock:
            s = self._require(alphabet_id)
            l = s.alphabet.label_by_id(label) or s.alphabet.label_by_name(label)
            if l is None:
                raise LabelStoreError(
                    f"unknown label {label!r} in alphabet {s.alphabet.name!r}"
                )
            changed = sum(1 for pid in particle_ids if s.assignments.get(pid) != l.id)
            self._append(
                {"op": "assign", "who": who, "when": self._clock(),
                 "alphabet_id": alphabet_id, "label_id": l.id,
                 "particles": sorted(set(particle_ids))}
            )
            return changed

    def unassign(
        self, alphabet_id: str, particle_ids: list[str], who: str = "local"
    ) -> int:
        """Remove assignments where present; returns changed count."""
        with self._lock:
            s = self._require(alphabet_id)
            changed = sum(1 for pid in set(particle_ids) if pid in s.assignments)
            self._append(
                {"op": "unassign", "who": who, "when": self._clock(),
                 "alphabet_id": alphabet_id, "particles": sorted(set(particle_ids))}
            )
            return changed

    # ---- event application ----

    def _apply(self, event: dict) -> None:
        op = event.get("op")
        if op == "upsert_alphabet":
            doc = event["alphabet"]
            labels = [
                Label(
                    id=l["id"], name=l["name"], color=l["color"],
                    description=l.get("description", ""),
                )
                for l in doc["labels"]
            ]
            alphabet = LabelAlphabet(
                id=doc["id"], name=doc["name"], labels=labels,
                created_by=doc.get("created_by", "local"),
                created_at=doc.get("created_at", ""),
            )
            state = self._states.get(alphabet.id)
            if state is None:
                self._states[alphabet.id] = _AlphabetState(alphabet=alphabet)
            else:
                kept = {l.id for l in labels}
                state.alphabet = alphabet
                state.assignments = {
                    pid: lid for pid, lid in state.assignments.items() if lid in kept
                }
        elif op == "assign":
            s = self._states[event["alphabet_id"]]
            for pid in event["particles"]:
                s.assignments[pid] = event["label_id"]
        elif op == "unassign":
            s = self._states[event["alphabet_id"]]
            for pid in event["particles"]:
                s.assignments.pop(pid, None)
        else:
            raise LabelStoreError(f"unknown log op {op!r}")
        self._log.append(event)

    def _append(self, event: dict) -> None:
        self._apply(event)
        self._reseed_counters()
        if self._log_path is not None:
            line = json.dumps(event, separators=(",", ":"), sort_keys=True)
            with open(self._log_path, "a", encoding="utf-8") as f:
                f.write(line + "\n")

    def _reseed_counters(self) -> None:
        max_a = 0
        max_l = 0
        for s in self._states.values():
            if s.alphabet.id.startswith("A") and s.alphabet.id[1:].isdigit():
                max_a = max(max_a, int(s.alphabet.id[1:]))
            for l in s.alphabet.labels:
                if l.id.startswith("L") and l.id[1:].isdigit():
                    max_l = max(max_l, int(l.id[1:]))
        self._next_alphabet = max_a + 1
        self._next_label = max_l + 1

    # ---- snapshot / export / import ----

    def export_snapshot(self) -> dict:
        """Full document: alphabets, assignments (as [particle, alphabet,
        label] triples, sorted), and the modification log."""
        with self._lock:
            assignments = sorted(
                [pid, aid, lid]
                for aid, s in self._states.items()
                for pid, lid in s.assignments.items()
            )
            return {
                "version": 1,
                "alphabets": [
                    s.alphabet.to_dict()
                    for s in sorted(self._states.values(), key=lambda s: s.alphabet.id)
                ],
                "assignments": assignments,
                "log": list(self._log),
            }

    def export_assignments_csv(self) -> str:
        """particle,alphabet,label rows (names), for downstream analysis."""
        with self._lock:
            lines = ["particle,alphabet,label"]
            for aid in sorted(self._states):
                s = self._states[aid]
                names = {l.id: l.name for l in s.alphabet.labels}
                for pid, lid in sorted(s.assignments.items()):
                    lines.append(f"{pid},{s.alphabet.name},{names[lid]}")
            return "\n".join(lines) + "\n"

    def write_snapshot(self, path: Path | str) -> None:
        Path(path).write_text(snapshot_to_json(self.export_snapshot()), encoding="utf-8")

    def import_snapshot(self, document: dict, policy: str = "reject",
                        who: str = "import") -> dict:
        """Adopt or merge an exported document.

        Empty store: the document is adopted verbatim (ids, log and all), so
        export -> import -> export round-trips byte-equal. Non-empty store:
        requires a merge policy; alphabets and labels are matched by name,
        missing ones are created, and conflicting assignments (same particle,
        same alphabet, different label) resolve per policy: reject -> error
        listing conflicts, theirs -> imported wins, ours -> existing kept.
        Returns {"conflicts": [...], "applied": event count}.
        """
        _validate_document(document)
        with self._lock:
            if not self._states and not self._log:
                for event in document.get("log", []):
                    self._apply(event)
                    if self._log_path is not None:
                        line = json.dumps(event, separators=(",", ":"), sort_keys=True)
                        with open(self._log_path, "a", encoding="utf-8") as f:
                            f.write(line + "\n")
                self._reseed_counters()
                self._verify_against(document)
                return {"conflicts": [], "applied": len(document.get("log", []))}

            if policy not in MERGE_POLICIES:
                raise LabelStoreError(f"unknown merge policy {policy!r}")
            return self._merge(document, policy, who)

    def _verify_against(self, document: dict) -> None:
        """The log is the truth; the document's tables must agree with it."""
        current = self.export_snapshot()
        if current["alphabets"] != document.get("alphabets", []) or current[
            "assignments"
        ] != [list(t) for t in document.get("assignments", [])]:
            raise SnapshotError(
                "document tables disagree with its own log replay"
            )

    def _merge(self, document: dict, policy: str, who: str) -> dict:
        incoming_alphabets = document.get("alphabets", [])
        incoming_assignments = [tuple(t) for t in document.get("assignments", [])]
        label_names_in = {
            a["id"]: {l["id"]: l["name"] for l in a["labels"]}
            for a in incoming_alphabets
        }
        alpha_names_in = {a["id"]: a["name"] for a in incoming_alphabets}

        conflicts = []
        ours_by_name: dict[str, _AlphabetState] = {
            s.alphabet.name: s for s in self._states.values()
        }
        for pid, in_aid, in_lid in incoming_assignments:
            aname = alpha_names_in[in_aid]
            lname = label_names_in[in_aid][in_lid]
            s = ours_by_name.get(aname)
            if s is None:
                continue
            ours_lid = s.assignments.get(pid)
            if ours_lid is not None:
                ours_name = s.alphabet.label_by_id(ours_lid).name
                if ours_name != lname:
                    conflicts.append(
                        {"alphabet": aname, "particle": pid,
                         "ours": ours_name, "theirs": lname}
                    )
        if conflicts and policy == "reject":
            raise LabelStoreError(
                f"{len(conflicts)} conflicting assignments (policy=reject)",
                details=[
                    f"{c['alphabet']}/{c['particle']}: ours={c['ours']} theirs={c['theirs']}"
                    for c in conflicts[:20]
                ],
            )

        before = self.log_position
        for a in incoming_alphabets:
            existing = self.find_by_name(a["name"])
            if existing is None:
                self.upsert_alphabet(
                    {"name": a["name"],
                     "labels": [
                         {"name": l["name"], "color": l["color"],
                          "description": l.get("description", "")}
                         for l in a["labels"]
                     ],
                     "created_by": a.get("created_by", who)},
                    who=who,
                )
            else:
                known = {l.name for l in existing.labels}
                new = [l for l in a["labels"] if l["name"] not in known]
                if new:
                    used = {l.color for l in existing.labels}
                    merged = [l.to_dict() for l in existing.labels] + [
                        {"name": l["name"],
                         "color": l["color"] if l["color"] not in used else None,
                         "description": l.get("description", "")}
                        for l in new
                    ]
                    self.upsert_alphabet(
                        {"id": existing.id, "name": existing.name, "labels": merged},
                        who=who,
                    )

        skip = (
            {(c["alphabet"], c["particle"]) for c in conflicts}
            if policy == "ours"
            else set()
        )
        by_target: dict[tuple[str, str], list[str]] = {}
        for pid, in_aid, in_lid in incoming_assignments:
            aname = alpha_names_in[in_aid]
            if (aname, pid) in skip:
                continue
            lname = label_names_in[in_aid][in_lid]
            ours = self.find_by_name(aname)
            s = self._states[ours.id]
            l = ours.label_by_name(lname)
            if s.assignments.get(pid) == l.id:
                continue
            by_target.setdefault((ours.id, l.id), []).append(pid)
        for (aid, lid), pids in sorted(by_target.items()):
            self.assign(aid, pids, lid, who=who)
        return {"conflicts": conflicts, "applied": self.log_position - before}


def snapshot_to_json(document: dict) -> str:
    """Canonical serialization used for byte-equal round trips."""
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def _validate_document(document: dict) -> None:
    def fail(path: str, message: str):
        raise SnapshotError(f"{message} at {path}")

    if not isinstance(document, dict):
        fail("/", "document must be an object")
    if document.get("version") != 1:
        fail("/version", "unsupported or missing version")
    alphabets = document.get("alphabets")
    if not isinstance(alphabets, list):
        fail("/alphabets", "missing alphabet list")
    label_ids: dict[str, set[str]] = {}
    for i, a in enumerate(alphabets):
        if not isinstance(a, dict) or not a.get("id") or not a.get("name"):
            fail(f"/alphabets/{i}", "alphabet needs id and name")
        labels = a.get("labels")
        if not isinstance(labels, list) or not labels:
            fail(f"/alphabets/{i}/labels", "alphabet needs at least one label")
        for j, l in enumerate(labels):
            if not isinstance(l, dict) or not l.get("id") or not l.get("name"):
                fail(f"/alphabets/{i}/labels/{j}", "label needs id and name")
        label_ids[a["id"]] = {l["id"] for l in labels}
    assignments = document.get("assignments", [])
    if not isinstance(assignments, list):
        fail("/assignments", "assignments must be a list")
    seen: set[tuple[str, str]] = set()
    for i, triple in enumerate(assignments):
        if not (isinstance(triple, (list, tuple)) and len(triple) == 3):
            fail(f"/assignments/{i}", "assignment must be [particle, alphabet, label]")
        pid, aid, lid = triple
        if aid not in label_ids:
            fail(f"/assignments/{i}", f"unknown alphabet {aid!r}")
        if lid not in label_ids[aid]:
            fail(f"/assignments/{i}", f"unknown label {lid!r}")
        if (pid, aid) in seen:
            fail(
                f"/assignments/{i}",
                f"particle {pid!r} assigned twice in alphabet {aid!r}",
            )
        seen.add((pid, aid))
    if not isinstance(document.get("log", []), list):
        fail("/log", "log must be a list")


def replay_log(path: Path | str) -> LabelStore:
    """Fresh in-memory store replayed from a log file (state-check oracle)."""
    store = LabelStore()
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                store._apply(json.loads(line))
    store._reseed_counters()
    return store
