"""Portability scores over a declared platform set.

Both metrics take a mapping of platform id to efficiency plus the ordered
platform set ``h``. Platforms of ``h`` missing from the mapping count as
unsupported (efficiency 0).
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

from .efficiency import architectural_peak, best_measurement, efficiency, resolve_baseline
from .errors import ValidationError
from .model import (
    EfficiencyRecord,
    Measurement,
    Metric,
    Platform,
    PolicyVariant,
    PortabilityScore,
    StudyDefinition,
    validate_study,
)


def _check_keys(efficiencies: Mapping[str, float], h: Sequence[str]) -> None:
    outside = [p for p in efficiencies if p not in h]
    if outside:
        raise ValidationError(f"efficiencies given for platforms outside the platform set: {outside}")
    for p, e in efficiencies.items():
        if e < 0 or math.isnan(e):
            raise ValidationError(f"efficiency on {p!r} must be >= 0, got {e!r}")


def supported(efficiencies: Mapping[str, float], h: Sequence[str]) -> tuple[str, ...]:
    """The subset of ``h`` (in ``h`` order) where the efficiency is positive."""
    return tuple(p for p in h if efficiencies.get(p, 0.0) > 0)


def pbar(efficiencies: Mapping[str, float], h: Sequence[str]) -> float:
    """Arithmetic mean of efficiency over the supported platforms; 0 if none are.

    >>> round(pbar({"A100": 0.75, "P100": 1.0, "MI250": 0.8}, ["A100", "P100", "MI250"]), 12)
    0.85
    """
    _check_keys(efficiencies, h)
    s = supported(efficiencies, h)
    if not s:
        return 0.0
    # fsum is correctly rounded, so the result does not depend on summation order
    return math.fsum(efficiencies[p] for p in s) / len(s)


def pp_harmonic(efficiencies: Mapping[str, float], h: Sequence[str]) -> float:
    """Harmonic mean of efficiency over all of ``h``; 0 if any platform is unsupported."""
    _check_keys(efficiencies, h)
    if not h or any(efficiencies.get(p, 0.0) <= 0 for p in h):
        return 0.0
    return len(h) / math.fsum(1.0 / efficiencies[p] for p in h)


METRICS = {
    Metric.arithmetic_mean: pbar,
    Metric.harmonic_mean: pp_harmonic,
}


def score_study(
    study: StudyDefinition,
    study_measurements: Sequence[Measurement],
    repository_measurements: Sequence[Measurement] = (),
    platforms: Mapping[str, Platform] | None = None,
) -> list[PortabilityScore]:
    """Score every implementation measured for the study's (app, problem).

    Repeated measurements of one implementation-platform pair collapse to the
    best one. Under ``fixed_reference`` the reference implementations supply
    baselines and are not scored themselves. Implementations measured only
    outside ``study.h`` still get a score (of 0).

    Raises ``ValidationError`` when the study is not scorable and
    ``BaselineError`` when a platform's baseline cannot be resolved.
    """
    violations = validate_study(study, study_measurements, platforms)
    if violations:
        raise ValidationError(violations)

    h = study.h
    policy = study.policy
    rows = [m for m in study_measurements if (m.app, m.problem) == (study.app, study.problem)]
    in_h = set(h)

    excluded = policy.reference_ids if policy.variant is PolicyVariant.fixed_reference else frozenset()
    impls = list(dict.fromkeys(m.implementation for m in rows if m.implementation not in excluded))

    by_pair: dict[tuple[str, str], list[Measurement]] = {}
    for m in rows:
        if m.platform in in_h:
            by_pair.setdefault((m.implementation, m.platform), []).append(m)

    baselines = {}

    def baseline_for(pid):
        if pid not in baselines:
            if policy.variant.is_architectural:
                baselines[pid] = architectural_peak(policy, platforms[pid])
            else:
                baselines[pid] = resolve_baseline(policy, pid, rows, repository_measurements)
        return baselines[pid]

    metric_fn = METRICS[study.metric]
    scores = []
    for impl in impls:
        records = {}
        for pid in h:
            obs = by_pair.get((impl, pid))
            if not obs:
                records[pid] = EfficiencyRecord(impl, pid, 0.0, policy.variant)
                continue
            best = best_measurement(obs)
            base = baseline_for(pid)
            records[pid] = EfficiencyRecord(impl, pid, efficiency(best, base), policy.variant,
                                            base, best.verified)
        effs = {pid: r.e for pid, r in records.items()}
        scores.append(PortabilityScore(
            app=study.app,
            problem=study.problem,
            implementation=impl,
            h=h,
            s=supported(effs, h),
            metric=study.metric,
            policy=policy,
            value=metric_fn(effs, h),
            per_platform=records,
            study=study.key,
        ))
    return scores
