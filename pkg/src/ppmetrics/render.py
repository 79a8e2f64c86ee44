"""Text, CSV and JSON renderings of scores and audit reports."""

from __future__ import annotations

import csv
import io
import json
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from .audit import AuditReport, ChangeSet
from .model import Metric, PolicyVariant, PortabilityScore

FORMATS = ("table", "csv", "json")


def percent(e: float) -> int:
    """Integer percent, rounded half-up (0.625 -> 63)."""
    # round first so 0.285 (28.499999...) still counts as a half
    return int(Decimal(str(round(e * 100, 9))).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _pct(e: float) -> str:
    return f"{percent(e)}%"


def score_json(score: PortabilityScore) -> dict:
    return {
        "study": score.study,
        "app": score.app,
        "problem": score.problem,
        "implementation": score.implementation,
        "metric": score.metric.value,
        "policy": score.policy.variant.value,
        "h": list(score.h),
        "s": list(score.s),
        "value": score.value,
        "per_platform": [
            {
                "platform": pid,
                "e": rec.e,
                "baseline": None if rec.baseline is None else {
                    "source": rec.baseline.source.value,
                    "value": rec.baseline.value,
                    "implementation": rec.baseline.implementation,
                },
                "verified": rec.verified,
            }
            for pid, rec in ((p, score.per_platform[p]) for p in score.h)
        ],
    }


def _metric_label(scores: Sequence[PortabilityScore]) -> str:
    if scores and scores[0].metric is Metric.harmonic_mean:
        return "PP(harmonic)"
    return "PP(mean)"


def _grid(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for n, r in enumerate(rows):
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _baseline_rows(scores: Sequence[PortabilityScore], h: Sequence[str]) -> list[list[str]]:
    if not scores or scores[0].policy.variant is not PolicyVariant.fixed_reference:
        return []
    values, sources = ["baseline"], [""]
    for pid in h:
        b = next((s.per_platform[pid].baseline for s in scores if s.per_platform[pid].baseline), None)
        values.append("-" if b is None else f"{b.value:g}")
        sources.append(scores[0].policy.references.get(pid, "-"))
    return [values + [""], sources + [""]]


def render_scores(scores: Sequence[PortabilityScore], fmt: str = "table") -> str:
    if fmt == "json":
        return json.dumps([score_json(s) for s in scores], indent=2)
    h = list(scores[0].h) if scores else []
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["implementation", *h, "score"])
        for s in scores:
            w.writerow([s.implementation, *(repr(s.per_platform[p].e) for p in h), repr(s.value)])
        return buf.getvalue().rstrip("\n")
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    if not scores:
        return "(no scores)"
    rows = [["", *h, _metric_label(scores)]]
    for s in scores:
        cells = [_pct(s.per_platform[p].e) if s.per_platform[p].e > 0 else "-" for p in h]
        rows.append([s.implementation, *cells, _pct(s.value)])
    rows += _baseline_rows(scores, h)
    return _grid(rows)


def render_diff(changeset: ChangeSet, before: Sequence[PortabilityScore], after: Sequence[PortabilityScore]) -> str:
    """Before/after matrix; changed cells show the old value struck through (``~~old~~ new``)."""
    h = list(changeset.study.h)
    b = {s.implementation: s for s in before}
    rows = [["", *h, _metric_label(after)]]

    def cell(old, new):
        if old is None or percent(old) == percent(new) and abs(old - new) < 1e-9:
            return _pct(new) if new > 0 else "-"
        return f"~~{_pct(old)}~~ {_pct(new)}"

    for s in after:
        sb = b.get(s.implementation)
        cells = [cell(sb.per_platform[p].e if sb else None, s.per_platform[p].e) for p in h]
        rows.append([s.implementation, *cells, cell(sb.value if sb else None, s.value)])
    return _grid(rows)


def render_report(report: AuditReport, fmt: str = "table") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["severity", "criterion", "implementation", "platform", "description", "before", "after"]
        w.writerow(cols)
        for f in report.findings:
            d = f.to_dict()
            w.writerow(["" if d[c] is None else d[c] for c in cols])
        return buf.getvalue().rstrip("\n")
    if not report.findings:
        return "no findings"
    lines = []
    for f in report.findings:
        tag = f.severity.value.upper()
        if f.criterion is not None:
            tag += f" [criterion {f.criterion}]"
        lines.append(f"{tag}: {f.description}")
    n = len(report.violations)
    lines.append(f"{n} violation{'s' if n != 1 else ''}, {len(report.warnings)} warning(s), "
                 f"{len(report.infos)} info")
    return "\n".join(lines)
