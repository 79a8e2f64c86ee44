"""HTTP/JSON front end for a :class:`~ppmetrics.store.Store`.

All routes live under ``/api/v1``. Floats in responses carry 12 significant
digits; display rounding is left to clients.
"""

from __future__ import annotations

import json
import math
from typing import Any

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import Response

from .audit import audit_change, take_snapshot
from .csvio import LOW_LEVEL_MODELS
from .render import score_json
from .errors import BaselineError, DuplicateError, PPMetricsError, ValidationError
from .model import (
    Implementation,
    Measurement,
    Metric,
    Platform,
    PolicyVariant,
    PortabilityClass,
    ProblemSpec,
    StudyDefinition,
)
from .store import Store

PREFIX = "/api/v1"


def _round12(obj: Any) -> Any:
    if isinstance(obj, float):
        return float(f"{obj:.12g}") if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def _json(payload: Any, status: int = 200) -> Response:
    body = json.dumps(_round12(payload), separators=(",", ":"))
    return Response(body, status_code=status, media_type="application/json")


def _error(status: int, messages: list[str], field: str | None = None) -> Response:
    return _json({"detail": [{"field": field, "message": m} for m in messages]}, status)


def _enum_arg(cls, value):
    return None if value in (None, "") else cls.parse(value)


def _int_arg(name: str, value: str | None) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be an integer", field=name) from None


def create_app(store: Store) -> FastAPI:
    app = FastAPI(title="ppmetrics", version="1")
    app.state.store = store

    @app.exception_handler(ValidationError)
    async def _validation(request, exc: ValidationError):
        return _error(400, exc.violations, exc.field)

    @app.exception_handler(RequestValidationError)
    async def _request_validation(request, exc: RequestValidationError):
        errs = exc.errors()
        return _json({"detail": [{"field": ".".join(str(x) for x in e.get("loc", ())[1:]) or None,
                                  "message": e.get("msg", "invalid")} for e in errs]}, 400)

    @app.exception_handler(DuplicateError)
    async def _duplicate(request, exc: DuplicateError):
        return _error(409, [str(exc)])

    @app.exception_handler(PPMetricsError)
    async def _other(request, exc: PPMetricsError):
        return _error(400, [str(exc)])

    async def _body(request: Request) -> dict:
        try:
            data = await request.json()
        except ValueError:
            raise ValidationError("request body is not valid JSON") from None
        if not isinstance(data, dict):
            raise ValidationError("request body must be a JSON object")
        return data

    def _created(results) -> Response:
        last = results[-1]
        return _json({"seq": last.seq, "recalculated": list(last.studies)})

    @app.post(PREFIX + "/platforms")
    async def post_platform(request: Request):
        return _created([store.apply(Platform.from_dict(await _body(request)))])

    @app.post(PREFIX + "/implementations")
    async def post_implementation(request: Request):
        return _created([store.apply(Implementation.from_dict(await _body(request)))])

    @app.post(PREFIX + "/problems")
    async def post_problem(request: Request):
        return _created([store.apply(ProblemSpec.from_dict(await _body(request)))])

    @app.post(PREFIX + "/studies")
    async def post_study(request: Request):
        return _created([store.apply(StudyDefinition.from_dict(await _body(request)))])

    @app.post(PREFIX + "/measurements")
    async def post_measurement(request: Request):
        data = await _body(request)
        m = Measurement.from_dict(data)
        # the body carries enough to register a new implementation or problem on the fly
        records = []
        if (m.app, m.problem) not in store.problems:
            records.append(ProblemSpec(m.app, m.problem))
        if (m.app, m.implementation) not in store.implementations:
            model = str(data.get("model") or m.implementation)
            pclass = data.get("portability_class") or (
                PortabilityClass.low_level_nonportable if model.lower() in LOW_LEVEL_MODELS
                else PortabilityClass.portable_framework)
            records.append(Implementation(m.implementation, m.app, model, pclass))
        records.append(m)
        return _created(store.apply_many(records))

    @app.get(PREFIX + "/scores")
    def get_scores(app: str | None = None, problem: str | None = None,
                   policy: str | None = None, metric: str | None = None):
        scores = store.query_scores(app, problem, _enum_arg(PolicyVariant, policy), _enum_arg(Metric, metric))
        return _json([score_json(s) for s in scores])

    @app.get(PREFIX + "/studies")
    def get_studies():
        errors = store.study_errors()
        return _json([{**s.to_dict(), "key": k, "error": errors.get(k)} for k, s in store.studies.items()])

    @app.get(PREFIX + "/history")
    def get_history(app: str, problem: str, implementation: str, study: str | None = None):
        h = store.history(app, problem, implementation, study)
        return _json({
            "study": h.study,
            "implementation": h.implementation,
            "entries": [{"seq": e.seq, "score": score_json(e.score)} for e in h.entries],
        })

    @app.get(PREFIX + "/audit")
    def get_audit(app: str, problem: str, from_seq: str | None = None, to_seq: str | None = None,
                  policy: str | None = None):
        current = store.seq
        lo = _int_arg("from_seq", from_seq) if from_seq not in (None, "") else 0
        hi = _int_arg("to_seq", to_seq) if to_seq not in (None, "") else current
        if not 0 <= lo <= hi <= current:
            raise ValidationError(f"need 0 <= from_seq <= to_seq <= {current}, got {lo}..{hi}", field="from_seq")
        variant = _enum_arg(PolicyVariant, policy)
        findings = []
        if lo != hi:
            before, after = store.state_at(lo), store.state_at(hi)
            platforms = after.platforms
            rows_b = [m for m in before.measurements if (m.app, m.problem) == (app, problem)]
            rows_a = [m for m in after.measurements if (m.app, m.problem) == (app, problem)]
            for key, study in after.studies.items():
                if (study.app, study.problem) != (app, problem):
                    continue
                if variant is not None and study.policy.variant is not variant:
                    continue
                try:
                    snap_b = take_snapshot(study, rows_b, rows_b, platforms)
                    snap_a = take_snapshot(study, rows_a, rows_a, platforms)
                except (BaselineError, ValidationError) as exc:
                    findings.append({"severity": "violation", "criterion": None, "implementation": None,
                                     "platform": None, "description": f"study not scorable: {exc}",
                                     "before": None, "after": None,
                                     "study": key, "policy": study.policy.variant.value})
                    continue
                _, report = audit_change(snap_b, snap_a)
                for f in report.findings:
                    findings.append({**f.to_dict(), "study": key, "policy": study.policy.variant.value})
        return _json({"app": app, "problem": problem, "from_seq": lo, "to_seq": hi, "findings": findings})

    return app
