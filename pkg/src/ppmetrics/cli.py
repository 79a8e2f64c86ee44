"""Command-line interface: ``ppmetrics {compute,audit,import,report,serve}``.

Exit codes: 0 success, 1 unreadable input or bad flags, 2 validation
failure, 3 audit found criterion violations.
"""

from __future__ import annotations

import argparse
import os
import socket
import sys
from typing import Sequence

from . import csvio
from .audit import audit_change, check_mixed_arch, check_reference_dominance, take_snapshot
from .errors import BaselineError, CorruptLogError, ParseError, PPMetricsError, ValidationError
from .metrics import score_study
from .model import (
    BaselinePolicy,
    Implementation,
    Measurement,
    Platform,
    PolicyVariant,
    ProblemSpec,
    StudyDefinition,
)
from .render import FORMATS, render_diff, render_report, render_scores

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_VIOLATIONS = 0, 1, 2, 3

POLICY_CHOICES = ("study-best", "fixed-ref", "repo-best", "arch-theoretical", "arch-roofline")
METRIC_CHOICES = ("arithmetic", "harmonic")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _split_list(text: str | None) -> list[str]:
    return [t.strip() for t in (text or "").split(",") if t.strip()]


def _parse_references(text: str | None) -> dict[str, str]:
    refs = {}
    for item in _split_list(text):
        if "=" not in item:
            raise ParseError(f"--reference entries look like PLATFORM=IMPLEMENTATION, got {item!r}")
        pid, impl = (x.strip() for x in item.split("=", 1))
        refs[pid] = impl
    return refs


def _policy(args) -> BaselinePolicy:
    return BaselinePolicy(
        PolicyVariant.parse(args.policy),
        _parse_references(args.reference),
        getattr(args, "intensity", None),
    )


def _platform_order(rows: Sequence[Measurement], declared: list[str]) -> list[str]:
    if declared:
        ignored = sorted({m.platform for m in rows} - set(declared))
        if ignored:
            print(f"warning: ignoring platforms outside --platforms: {', '.join(ignored)}", file=sys.stderr)
        return declared
    return list(dict.fromkeys(m.platform for m in rows))


def _groups(rows: Sequence[Measurement]) -> dict[tuple[str, str], list[Measurement]]:
    out: dict[tuple[str, str], list[Measurement]] = {}
    for m in rows:
        out.setdefault((m.app, m.problem), []).append(m)
    return out


def _study(args, app, problem, rows) -> StudyDefinition:
    h = _platform_order(rows, _split_list(args.platforms))
    return StudyDefinition(app, problem, tuple(h), _policy(args), args.metric)


def _load_platforms(path):
    return None if not path else csvio.read_platforms(path)


# -- commands -----------------------------------------------------------------

def cmd_compute(args) -> int:
    rows = csvio.read_measurements(args.input)
    platforms = _load_platforms(args.peaks)
    groups = _groups(rows)
    out = []
    for (app, problem), grp in groups.items():
        study = _study(args, app, problem, grp)
        scores = score_study(study, grp, grp, platforms)
        if len(groups) > 1 and args.format == "table":
            out.append(f"{app} / {problem}")
        out.append(render_scores(scores, args.format))
    print("\n\n".join(out))
    return EXIT_OK


def cmd_audit(args) -> int:
    before_rows = csvio.read_measurements(args.before)
    after_rows = csvio.read_measurements(args.after)
    platforms = _load_platforms(args.peaks)
    exit_code = EXIT_OK
    groups_after = _groups(after_rows)
    groups_before = _groups(before_rows)
    for key in dict.fromkeys([*groups_before, *groups_after]):
        b, a = groups_before.get(key, []), groups_after.get(key, [])
        study = _study(args, key[0], key[1], a or b)
        snap_b = take_snapshot(study, b, b, platforms)
        snap_a = take_snapshot(study, a, a, platforms)
        changeset, report = audit_change(snap_b, snap_a)
        if study.policy.variant is PolicyVariant.fixed_reference:
            report = report + check_reference_dominance(a, study.policy, study.h)
        if platforms:
            report = report + check_mixed_arch(study, platforms)
        if len(groups_after) > 1 and args.format == "table":
            print(f"{key[0]} / {key[1]}")
        if args.diff and args.format == "table":
            print(render_diff(changeset, snap_b.scores, snap_a.scores))
            print()
        print(render_report(report, args.format))
        if report.violations:
            exit_code = EXIT_VIOLATIONS
    return exit_code


def _store_dir(args) -> str:
    d = args.store or os.environ.get("PPMETRICS_STORE")
    if not d:
        raise ParseError("no store directory: pass --store or set PPMETRICS_STORE")
    return d


def import_records(rows: Sequence[csvio.MeasurementRow], store, platforms: dict[str, Platform] | None = None):
    """Records (with labels) registering whatever the rows reference that ``store`` lacks, then the rows."""
    known_p, known_i, known_pr = set(store.platforms), set(store.implementations), set(store.problems)
    records, labels = [], []

    def add(rec, label):
        records.append(rec)
        labels.append(label)

    for r in rows:
        m = r.measurement
        label = f"line {r.line}"
        if m.platform not in known_p:
            add((platforms or {}).get(m.platform) or Platform(m.platform), label)
            known_p.add(m.platform)
        if (m.app, m.problem) not in known_pr:
            add(ProblemSpec(m.app, m.problem), label)
            known_pr.add((m.app, m.problem))
        if (m.app, m.implementation) not in known_i:
            add(Implementation(m.implementation, m.app, r.model, r.portability_class), label)
            known_i.add((m.app, m.implementation))
        add(m, label)
    return records, labels


def cmd_import(args) -> int:
    from .store import Store

    rows = csvio.read_rows(args.input)
    platforms = _load_platforms(args.platforms_file)
    store = Store(_store_dir(args))
    records, labels = import_records(rows, store, platforms)
    before = store.seq
    results = store.apply_many(records, skip_duplicates=True, labels=labels)
    n_meas = sum(1 for r in store.events[before:] if r.kind.value == "add_measurement")
    recalculated = sorted({k for res in results for k in res.studies})
    if args.define_study:
        for (app, problem), grp in _groups([r.measurement for r in rows]).items():
            study = _study(args, app, problem, grp)
            if study.key not in store.studies:
                store.apply(study)
                recalculated.append(study.key)
    print(f"ingested {n_meas} measurement(s) in {store.seq - before} event(s); "
          f"{len(rows) - n_meas} duplicate(s) skipped")
    if recalculated:
        print("recalculated: " + ", ".join(dict.fromkeys(recalculated)))
    return EXIT_OK


def cmd_report(args) -> int:
    from .store import Store

    store = Store(_store_dir(args))
    scores = store.query_scores(args.app, args.problem, args.policy and PolicyVariant.parse(args.policy),
                                args.metric)
    by_study: dict[str, list] = {}
    for s in scores:
        by_study.setdefault(s.study, []).append(s)
    errors = store.study_errors()
    if args.format != "table":
        print(render_scores(scores, args.format))
        return EXIT_OK
    chunks = [f"{key}\n{render_scores(group, 'table')}" for key, group in by_study.items()]
    chunks += [f"{key}\n(not scorable: {msg})" for key, msg in errors.items() if key not in by_study]
    print("\n\n".join(chunks) if chunks else "(no scores)")
    return EXIT_OK


def _split_listen(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise ParseError(f"--listen expects HOST:PORT, got {addr!r}") from None


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    from .store import Store

    host, port = _split_listen(args.listen)
    store = Store(_store_dir(args))
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe:
        try:
            probe.bind((host, port))
        except OSError as exc:
            print(f"error: cannot listen on {host}:{port}: {exc}", file=sys.stderr)
            return EXIT_PARSE
    print(f"serving {store.seq} event(s) from {store.path} on http://{host}:{port}/api/v1", file=sys.stderr)
    uvicorn.run(create_app(store), host=host, port=port, log_level="warning")
    return EXIT_OK


# -- wiring -----------------------------------------------------------------------

def _add_study_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", default="study-best", choices=POLICY_CHOICES,
                   help="baseline policy (default: study-best)")
    p.add_argument("--metric", default="arithmetic", choices=METRIC_CHOICES)
    p.add_argument("--platforms", help="ordered, comma-separated platform set; default: order in the data")
    p.add_argument("--reference", help="fixed-ref baselines, e.g. A100=CUDA,P100=CUDA,MI250=HIP")
    p.add_argument("--peaks", help="platform CSV with peak_compute/peak_mem_bw/attainable_peak columns")
    p.add_argument("--intensity", type=float, help="arithmetic intensity (FLOP/byte) for arch-roofline")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ppmetrics", description="Performance-portability scores and criteria audits.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compute", help="score a measurement CSV")
    p.add_argument("input")
    _add_study_flags(p)
    p.add_argument("--format", default="table", choices=FORMATS)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("audit", help="criterion audit between two measurement CSVs")
    p.add_argument("--before", required=True)
    p.add_argument("--after", required=True)
    _add_study_flags(p)
    p.add_argument("--diff", action="store_true", help="show the before/after efficiency matrix")
    p.add_argument("--format", default="table", choices=FORMATS)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("import", help="bulk-ingest a measurement CSV into a store")
    p.add_argument("input")
    p.add_argument("--store", help="store directory (default: $PPMETRICS_STORE)")
    p.add_argument("--platforms-file", help="platform CSV to register platforms with peaks and classes")
    p.add_argument("--define-study", action="store_true",
                   help="also define a study per (app, problem) from the study flags")
    _add_study_flags(p)
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("report", help="print current scores held in a store")
    p.add_argument("--store", help="store directory (default: $PPMETRICS_STORE)")
    p.add_argument("--app")
    p.add_argument("--problem")
    p.add_argument("--policy", choices=POLICY_CHOICES)
    p.add_argument("--metric", choices=METRIC_CHOICES)
    p.add_argument("--format", default="table", choices=FORMATS)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP API over a store")
    p.add_argument("--store", help="store directory (default: $PPMETRICS_STORE)")
    p.add_argument("--listen", default="127.0.0.1:8000", help="HOST:PORT (default: 127.0.0.1:8000)")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CorruptLogError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, BaselineError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PPMetricsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
