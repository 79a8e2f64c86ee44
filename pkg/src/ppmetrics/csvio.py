"""Reading measurement and platform tables from CSV."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Union

from .errors import ParseError, ValidationError
from .model import ArchClass, Measurement, Platform, PortabilityClass

MEASUREMENT_COLUMNS = (
    "app", "problem", "implementation", "model", "platform", "kind", "value",
    "compiler", "compiler_flags", "input_size",
)
PLATFORM_COLUMNS = ("id", "vendor", "arch_class", "peak_compute", "peak_mem_bw", "attainable_peak")

# Programming models treated as low-level, vendor-specific references.
LOW_LEVEL_MODELS = frozenset({"cuda", "hip"})

Source = Union[str, os.PathLike, IO[str]]


@dataclass(frozen=True)
class MeasurementRow:
    line: int  # 1-based line number in the file, header is line 1
    measurement: Measurement
    model: str

    @property
    def portability_class(self) -> PortabilityClass:
        if self.model.strip().lower() in LOW_LEVEL_MODELS:
            return PortabilityClass.low_level_nonportable
        return PortabilityClass.portable_framework


def _open(source: Source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        try:
            return open(source, newline="", encoding="utf-8"), True
        except OSError as exc:
            raise ParseError(f"cannot read {source}: {exc}") from exc
    return source, False


def _dict_rows(source: Source, required: tuple[str, ...]):
    fh, owned = _open(source)
    try:
        try:
            reader = csv.DictReader(fh)
            header = reader.fieldnames
            if not header:
                raise ParseError("empty file: no header row")
            missing = [c for c in required if c not in header]
            if missing:
                raise ParseError(f"header lacks required columns: {', '.join(missing)}")
            rows = []
            for row in reader:
                if None in row:
                    raise ParseError(f"line {reader.line_num}: more fields than header columns")
                rows.append((reader.line_num, row))
            return header, rows
        except csv.Error as exc:
            raise ParseError(f"malformed CSV: {exc}") from exc
    finally:
        if owned:
            fh.close()


def read_rows(source: Source) -> list[MeasurementRow]:
    """Parse a measurement CSV.

    The first ten columns are fixed; any extra columns are carried into each
    measurement's ``meta``. Empty provenance cells are dropped from ``meta``.
    """
    header, raw = _dict_rows(source, MEASUREMENT_COLUMNS)
    extras = [c for c in header if c not in MEASUREMENT_COLUMNS]
    out = []
    for line, row in raw:
        meta = {k: row[k] for k in ("compiler", "compiler_flags", "input_size", *extras) if row.get(k)}
        try:
            m = Measurement(
                app=row["app"],
                problem=row["problem"],
                implementation=row["implementation"],
                platform=row["platform"],
                kind=row["kind"],
                value=row["value"],
                meta=meta,
            )
        except ValidationError as exc:
            raise ValidationError([f"line {line}: {v}" for v in exc.violations], field=exc.field) from None
        out.append(MeasurementRow(line, m, row["model"] or row["implementation"]))
    return out


def read_measurements(source: Source) -> list[Measurement]:
    return [r.measurement for r in read_rows(source)]


def read_platforms(source: Source) -> dict[str, Platform]:
    """Parse a platform table (``id`` plus optional vendor, class and peak columns)."""
    header, raw = _dict_rows(source, ("id",))
    out = {}
    for line, row in raw:
        try:
            p = Platform(
                id=row["id"],
                vendor=row.get("vendor") or "",
                arch_class=row.get("arch_class") or ArchClass.other,
                peak_compute=row.get("peak_compute") or None,
                peak_mem_bw=row.get("peak_mem_bw") or None,
                attainable_peak=row.get("attainable_peak") or None,
            )
        except ValidationError as exc:
            raise ValidationError([f"line {line}: {v}" for v in exc.violations]) from None
        if p.id in out:
            raise ValidationError(f"line {line}: duplicate platform {p.id!r}")
        out[p.id] = p
    return out


def write_measurements(measurements, fh: IO[str] | None = None, models: dict | None = None) -> str:
    """Serialize measurements to the CSV schema; returns the text when ``fh`` is None."""
    models = models or {}
    buf = fh if fh is not None else io.StringIO()
    extras = sorted({k for m in measurements for k in m.meta} - set(MEASUREMENT_COLUMNS))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*MEASUREMENT_COLUMNS, *extras])
    for m in measurements:
        w.writerow([m.app, m.problem, m.implementation, models.get(m.implementation, m.implementation),
                    m.platform, m.kind.value, repr(m.value),
                    *(m.meta.get(k, "") for k in ("compiler", "compiler_flags", "input_size", *extras))])
    return buf.getvalue() if fh is None else ""


def dataset_path(name: str) -> Path:
    """Path of a bundled CSV, e.g. ``dataset_path("clovertree_table1")``."""
    from importlib.resources import files

    p = Path(str(files("ppmetrics") / "data" / f"{name}.csv"))
    if not p.exists():
        raise FileNotFoundError(f"no bundled dataset {name!r}")
    return p
