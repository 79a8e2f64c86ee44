"""Append-only measurement repository with automatic rescoring.

Every change is an :class:`Event` appended to ``events.log`` (one JSON object
per line with keys ``seq``, ``ts``, ``kind``, ``payload``). State is never
edited in place: opening a store replays the log, and every measurement
ingest rescores all studies of the same (app, problem) before returning.
Scores are always computed against the best measurement anywhere in the
repository, so repository-scoped baselines follow new data immediately.
"""

from __future__ import annotations

import copy
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

from .errors import (
    BaselineError,
    CorruptLogError,
    DuplicateError,
    PPMetricsError,
    SnapshotError,
    ValidationError,
)
from .metrics import score_study
from .model import (
    Implementation,
    Measurement,
    Metric,
    Platform,
    PolicyVariant,
    PortabilityScore,
    ProblemSpec,
    StudyDefinition,
    validate_study,
)

LOG_NAME = "events.log"
# Score changes at or below this are not recorded in the history.
HISTORY_TOLERANCE = 1e-12


class StoreError(PPMetricsError):
    pass


class EventKind(str, Enum):
    add_platform = "add_platform"
    add_implementation = "add_implementation"
    add_problem = "add_problem"
    add_measurement = "add_measurement"
    define_study = "define_study"


Record = Union[Platform, Implementation, ProblemSpec, Measurement, StudyDefinition]

_KIND_OF = {
    Platform: EventKind.add_platform,
    Implementation: EventKind.add_implementation,
    ProblemSpec: EventKind.add_problem,
    Measurement: EventKind.add_measurement,
    StudyDefinition: EventKind.define_study,
}
_TYPE_OF = {v: k for k, v in _KIND_OF.items()}


@dataclass(frozen=True)
class Event:
    seq: int
    ts: str
    kind: EventKind
    payload: dict

    @property
    def record(self) -> Record:
        return _TYPE_OF[self.kind].from_dict(self.payload)

    def to_line(self) -> str:
        return json.dumps(
            {"seq": self.seq, "ts": self.ts, "kind": self.kind.value, "payload": self.payload},
            sort_keys=False, separators=(",", ":"),
        ) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> Event:
        missing = [k for k in ("seq", "ts", "kind", "payload") if k not in d]
        if missing:
            raise ValueError(f"missing fields {missing}")
        if not isinstance(d["seq"], int) or not isinstance(d["payload"], dict):
            raise ValueError("seq must be an integer and payload an object")
        return cls(d["seq"], str(d["ts"]), EventKind(d["kind"]), d["payload"])


@dataclass(frozen=True)
class HistoryEntry:
    seq: int
    score: PortabilityScore


@dataclass(frozen=True)
class ScoreHistory:
    study: str
    implementation: str
    entries: tuple[HistoryEntry, ...] = ()

    @property
    def values(self) -> list[float]:
        return [e.score.value for e in self.entries]


@dataclass(frozen=True)
class IngestResult:
    seq: int
    updated: tuple[PortabilityScore, ...] = ()
    studies: tuple[str, ...] = ()  # keys of the studies that were rescored


def _mkey(m: Measurement):
    return (m.app, m.problem, m.implementation, m.platform, m.kind, m.value, tuple(sorted(m.meta.items())))


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


@dataclass
class _State:
    """Materialized view of an event log. Mutated only by ``apply``."""

    events: list[Event] = field(default_factory=list)
    platforms: dict[str, Platform] = field(default_factory=dict)
    implementations: dict[tuple[str, str], Implementation] = field(default_factory=dict)
    problems: dict[tuple[str, str], ProblemSpec] = field(default_factory=dict)
    measurements: list[Measurement] = field(default_factory=list)
    by_problem: dict[tuple[str, str], list[Measurement]] = field(default_factory=dict)
    seen: set = field(default_factory=set)
    studies: dict[str, StudyDefinition] = field(default_factory=dict)
    scores: dict[str, dict[str, PortabilityScore]] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)
    histories: dict[tuple[str, str], list[HistoryEntry]] = field(default_factory=dict)

    @property
    def seq(self) -> int:
        return self.events[-1].seq if self.events else 0

    # -- validation ------------------------------------------------------

    def check(self, record: Record) -> None:
        if isinstance(record, Platform):
            old = self.platforms.get(record.id)
            if old == record:
                raise DuplicateError(f"platform {record.id!r} already registered")
            if old is not None:
                raise ValidationError(f"platform {record.id!r} already registered with different fields",
                                      field="id")
        elif isinstance(record, Implementation):
            old = self.implementations.get(record.key)
            if old == record:
                raise DuplicateError(f"implementation {record.id!r} of {record.app!r} already registered")
            if old is not None:
                raise ValidationError(
                    f"implementation {record.id!r} of {record.app!r} already registered with different fields",
                    field="implementation")
        elif isinstance(record, ProblemSpec):
            old = self.problems.get(record.key)
            if old == record:
                raise DuplicateError(f"problem {record.problem!r} of {record.app!r} already registered")
            if old is not None:
                raise ValidationError(f"problem {record.problem!r} of {record.app!r} already registered",
                                      field="problem")
        elif isinstance(record, Measurement):
            self._check_measurement(record)
        elif isinstance(record, StudyDefinition):
            self._check_study(record)
        else:
            raise ValidationError(f"cannot ingest {type(record).__name__}")

    def _check_measurement(self, m: Measurement) -> None:
        if m.platform not in self.platforms:
            raise ValidationError(f"unknown platform {m.platform!r}", field="platform")
        if (m.app, m.implementation) not in self.implementations:
            raise ValidationError(f"unknown implementation {m.implementation!r} of {m.app!r}",
                                  field="implementation")
        if (m.app, m.problem) not in self.problems:
            raise ValidationError(f"unknown problem {m.problem!r} of {m.app!r}", field="problem")
        rows = self.by_problem.get((m.app, m.problem), [])
        if rows and rows[0].kind is not m.kind:
            raise ValidationError(
                f"{m.app}/{m.problem} holds {rows[0].kind.value} measurements; got {m.kind.value}",
                field="kind")
        if _mkey(m) in self.seen:
            raise DuplicateError("identical measurement already in the repository")
        for study in self._studies_for(m.app, m.problem):
            problems = validate_study(study, [*rows, m], self.platforms)
            if problems:
                raise ValidationError([f"study {study.key}: {p}" for p in problems])

    def _check_study(self, study: StudyDefinition) -> None:
        old = self.studies.get(study.key)
        if old == study:
            raise DuplicateError(f"study {study.key!r} already defined")
        if old is not None:
            raise ValidationError(f"study {study.key!r} already defined differently", field="name")
        if (study.app, study.problem) not in self.problems:
            raise ValidationError(f"unknown problem {study.problem!r} of {study.app!r}", field="problem")
        rows = self.by_problem.get((study.app, study.problem), [])
        problems = validate_study(study, rows, self.platforms)
        if problems:
            raise ValidationError(problems)

    # -- application -------------------------------------------------------

    def apply(self, event: Event) -> IngestResult:
        record = event.record
        self.check(record)
        self.events.append(event)
        studies: list[StudyDefinition] = []
        if isinstance(record, Platform):
            self.platforms[record.id] = record
        elif isinstance(record, Implementation):
            self.implementations[record.key] = record
        elif isinstance(record, ProblemSpec):
            self.problems[record.key] = record
        elif isinstance(record, Measurement):
            self.measurements.append(record)
            self.by_problem.setdefault((record.app, record.problem), []).append(record)
            self.seen.add(_mkey(record))
            studies = self._studies_for(record.app, record.problem)
        else:
            self.studies[record.key] = record
            studies = [record]
        updated = []
        for study in studies:
            updated += self.rescore(study, event.seq)
        return IngestResult(event.seq, tuple(updated), tuple(s.key for s in studies))

    def _studies_for(self, app: str, problem: str) -> list[StudyDefinition]:
        return [s for s in self.studies.values() if (s.app, s.problem) == (app, problem)]

    def rescore(self, study: StudyDefinition, seq: int) -> list[PortabilityScore]:
        rows = self.by_problem.get((study.app, study.problem), [])
        try:
            fresh = score_study(study, rows, rows, self.platforms)
        except (BaselineError, ValidationError) as exc:
            # e.g. a fixed reference not yet measured; the study resumes once it is
            self.errors[study.key] = str(exc)
            fresh = []
        else:
            self.errors.pop(study.key, None)
        self.scores[study.key] = {s.implementation: s for s in fresh}
        updated = []
        for s in fresh:
            hist = self.histories.setdefault((study.key, s.implementation), [])
            if not hist or abs(hist[-1].score.value - s.value) > HISTORY_TOLERANCE:
                hist.append(HistoryEntry(seq, s))
                updated.append(s)
        return updated


class Store:
    """Event-sourced repository of platforms, implementations and measurements.

    ``path`` is a directory holding ``events.log``; with ``path=None`` the
    store lives in memory only. Writes are serialized through one lock and
    each event is fsynced before the call returns.
    """

    def __init__(self, path: str | os.PathLike | None = None, clock: Callable[[], str] | None = None):
        self.path = None if path is None else Path(path)
        self._clock = clock or _utc_now
        self._lock = threading.RLock()
        self._state = _State()
        if self.path is not None:
            self.path.mkdir(parents=True, exist_ok=True)
            log = self.path / LOG_NAME
            if log.exists():
                self._state = self._replay_log(log)

    @classmethod
    def from_events(cls, events: Iterable[Event]) -> Store:
        store = cls()
        for ev in events:
            store._state.apply(ev)
        return store

    @staticmethod
    def _replay_log(log: Path) -> _State:
        state = _State()
        with open(log, "rb") as fh:
            for lineno, raw in enumerate(fh, start=1):
                expected = state.seq + 1
                try:
                    if not raw.endswith(b"\n"):
                        raise ValueError("truncated record")
                    ev = Event.from_dict(json.loads(raw))
                except (ValueError, TypeError) as exc:
                    raise CorruptLogError(expected, f"line {lineno}: {exc}") from None
                if ev.seq != expected:
                    raise CorruptLogError(expected, f"line {lineno}: found seq {ev.seq}")
                try:
                    state.apply(ev)
                except (PPMetricsError, KeyError, TypeError) as exc:
                    raise CorruptLogError(ev.seq, f"line {lineno}: {exc}") from None
        return state

    # -- reads -------------------------------------------------------------

    @property
    def seq(self) -> int:
        return self._state.seq

    @property
    def events(self) -> tuple[Event, ...]:
        with self._lock:
            return tuple(self._state.events)

    @property
    def platforms(self) -> dict[str, Platform]:
        with self._lock:
            return dict(self._state.platforms)

    @property
    def implementations(self) -> dict[tuple[str, str], Implementation]:
        with self._lock:
            return dict(self._state.implementations)

    @property
    def problems(self) -> dict[tuple[str, str], ProblemSpec]:
        with self._lock:
            return dict(self._state.problems)

    @property
    def measurements(self) -> list[Measurement]:
        with self._lock:
            return list(self._state.measurements)

    @property
    def studies(self) -> dict[str, StudyDefinition]:
        with self._lock:
            return dict(self._state.studies)

    def study_errors(self) -> dict[str, str]:
        with self._lock:
            return dict(self._state.errors)

    def query_scores(
        self,
        app: str | None = None,
        problem: str | None = None,
        policy: str | PolicyVariant | None = None,
        metric: str | Metric | None = None,
    ) -> list[PortabilityScore]:
        """Current scores, optionally filtered; unknown enum values raise ``ValidationError``."""
        variant = None if policy is None else PolicyVariant.parse(policy)
        met = None if metric is None else Metric.parse(metric)
        with self._lock:
            out = []
            for key, study in self._state.studies.items():
                if app is not None and study.app != app:
                    continue
                if problem is not None and study.problem != problem:
                    continue
                if variant is not None and study.policy.variant is not variant:
                    continue
                if met is not None and study.metric is not met:
                    continue
                out += self._state.scores.get(key, {}).values()
            return out

    def history(self, app: str, problem: str, implementation: str, study: str | None = None) -> ScoreHistory:
        """Score trajectory of one implementation.

        ``study`` selects a study by key or by policy variant; it may be
        omitted when only one study of (app, problem) has scored the
        implementation.
        """
        with self._lock:
            keys = [k for k, s in self._state.studies.items()
                    if (s.app, s.problem) == (app, problem)
                    and (k, implementation) in self._state.histories]
            if study is not None:
                keys = [k for k in keys if k == study or self._state.studies[k].policy.variant.value == study]
            if not keys:
                return ScoreHistory(study or "", implementation)
            if len(keys) > 1:
                raise ValidationError(f"several studies match; pass one of {keys}", field="study")
            return ScoreHistory(keys[0], implementation, tuple(self._state.histories[(keys[0], implementation)]))

    def state_at(self, seq: int) -> Store:
        """An in-memory copy of the repository as of ``seq`` (0 = empty)."""
        with self._lock:
            if not 0 <= seq <= self.seq:
                raise ValidationError(f"seq {seq} outside 0..{self.seq}", field="seq")
            events = self._state.events[:seq]
        return Store.from_events(events)

    # -- writes ------------------------------------------------------------

    def apply(self, record: Record) -> IngestResult:
        """Validate, append and apply one record; rescoring happens before returning."""
        return self.apply_many([record])[0]

    def ingest(self, record: Record) -> int:
        return self.apply(record).seq

    def apply_many(
        self,
        records: Sequence[Record],
        skip_duplicates: bool = False,
        labels: Sequence[str] | None = None,
    ) -> list[IngestResult]:
        """All-or-nothing batch ingest.

        Any invalid record aborts the batch with nothing written; the error
        message is prefixed with the record's label (default: its index).
        With ``skip_duplicates`` records already present are skipped instead
        of raising ``DuplicateError``.
        """
        with self._lock:
            if len(records) == 1 and type(records[0]) in _KIND_OF:
                record = records[0]
                try:
                    self._state.check(record)
                except DuplicateError:
                    if skip_duplicates:
                        return []
                    raise
                ev = Event(self.seq + 1, self._clock(), _KIND_OF[type(record)], record.to_dict())
                self._persist([ev])
                return [self._state.apply(ev)]

            scratch = copy.deepcopy(self._state)
            results, new_events = [], []
            for i, record in enumerate(records):
                label = labels[i] if labels is not None else f"record {i}"
                kind = _KIND_OF.get(type(record))
                if kind is None:
                    raise ValidationError(f"{label}: cannot ingest {type(record).__name__}")
                try:
                    scratch.check(record)
                except DuplicateError:
                    if skip_duplicates:
                        continue
                    raise
                except ValidationError as exc:
                    raise ValidationError([f"{label}: {v}" for v in exc.violations], field=exc.field) from None
                ev = Event(scratch.seq + 1, self._clock(), kind, record.to_dict())
                results.append(scratch.apply(ev))
                new_events.append(ev)
            self._persist(new_events)
            self._state = scratch
            return results

    def _persist(self, events: Sequence[Event]) -> None:
        if self.path is None or not events:
            return
        with open(self.path / LOG_NAME, "a", encoding="utf-8") as fh:
            fh.write("".join(ev.to_line() for ev in events))
            fh.flush()
            os.fsync(fh.fileno())

    def recalculate(self, app: str, problem: str) -> list[PortabilityScore]:
        """Rescore every study of (app, problem); returns the scores whose value changed."""
        with self._lock:
            updated = []
            for study in self._state._studies_for(app, problem):
                updated += self._state.rescore(study, self.seq)
            return updated

    # -- snapshots -----------------------------------------------------------

    def export_snapshot(self) -> str:
        with self._lock:
            return "".join(ev.to_line() for ev in self._state.events)

    def import_snapshot(self, data: str | bytes) -> int:
        """Replay an exported log into this (empty) store; returns the number of events."""
        raw = data.encode("utf-8") if isinstance(data, str) else data
        events = []
        offset = 0
        for line in raw.splitlines(keepends=True):
            if not line.endswith(b"\n"):
                raise SnapshotError(offset, "truncated record (no trailing newline)")
            try:
                ev = Event.from_dict(json.loads(line))
            except json.JSONDecodeError as exc:
                raise SnapshotError(offset + exc.pos, exc.msg) from None
            except (ValueError, TypeError) as exc:
                raise SnapshotError(offset, str(exc)) from None
            if ev.seq != len(events) + 1:
                raise SnapshotError(offset, f"expected seq {len(events) + 1}, found {ev.seq}")
            events.append(ev)
            offset += len(line)
        with self._lock:
            if self._state.events:
                raise StoreError("import_snapshot requires an empty store")
            state = _State()
            offset = 0
            for ev, line in zip(events, raw.splitlines(keepends=True)):
                try:
                    state.apply(ev)
                except (PPMetricsError, KeyError, TypeError) as exc:
                    raise SnapshotError(offset, f"seq {ev.seq}: {exc}") from None
                offset += len(line)
            self._persist(events)
            self._state = state
        return len(events)
