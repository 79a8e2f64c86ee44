"""Baseline resolution and per-platform efficiencies."""

from __future__ import annotations

from typing import Iterable, Sequence

from .errors import BaselineError, MissingReferenceError, NoBaselineError, NoMeasurementsError, ValidationError
from .model import (
    BaselinePolicy,
    BaselineSource,
    BaselineValue,
    Measurement,
    MeasurementKind,
    Platform,
    PolicyVariant,
)


def _check_positive(**values: float) -> None:
    for name, v in values.items():
        if v is None or not v > 0:
            raise ValidationError(f"{name} must be strictly positive, got {v!r}", field=name)


def best_measurement(measurements: Sequence[Measurement]) -> Measurement:
    """Best of repeated observations: minimum runtime or maximum throughput.

    Ties keep the earliest element, so callers should pass measurements in
    ingestion order.
    """
    if not measurements:
        raise NoMeasurementsError("no measurements")
    kinds = {m.kind for m in measurements}
    if len(kinds) > 1:
        raise ValidationError("cannot pick a best among mixed measurement kinds")
    best = measurements[0]
    lower = best.kind.lower_is_better
    for m in measurements[1:]:
        if (m.value < best.value) if lower else (m.value > best.value):
            best = m
    return best


def _best_on(platform: str, measurements: Iterable[Measurement], implementation: str | None = None):
    rows = [m for m in measurements
            if m.platform == platform and (implementation is None or m.implementation == implementation)]
    return best_measurement(rows) if rows else None


def resolve_baseline(
    policy: BaselinePolicy,
    platform: Platform | str,
    study_measurements: Sequence[Measurement],
    repository_measurements: Sequence[Measurement] = (),
) -> BaselineValue:
    """Pick the reference performance on ``platform`` under a measurement-backed policy.

    Under ``repository_best`` the study's own measurements are treated as part
    of the repository, and only repository rows for the study's (app, problem)
    are candidates.
    """
    pid = platform if isinstance(platform, str) else platform.id
    variant = policy.variant
    if variant.is_architectural:
        raise BaselineError(f"{variant.value} baselines come from platform peaks; use architectural_peak")
    # repository rows come first so ties resolve to the earliest ingested
    scopes = {(m.app, m.problem) for m in study_measurements}
    pool = [m for m in repository_measurements if not scopes or (m.app, m.problem) in scopes]
    known = {id(m) for m in pool}
    pool += [m for m in study_measurements if id(m) not in known]

    if variant is PolicyVariant.study_local_best:
        best = _best_on(pid, study_measurements)
        source = BaselineSource.best_in_study
    elif variant is PolicyVariant.fixed_reference:
        ref = policy.references.get(pid)
        if ref is None:
            raise MissingReferenceError(f"no reference implementation declared for platform {pid!r}")
        best = _best_on(pid, pool, ref)
        if best is None:
            raise MissingReferenceError(f"missing reference measurement: {ref!r} on platform {pid!r}")
        source = BaselineSource.reference_implementation
    else:
        best = _best_on(pid, pool)
        source = BaselineSource.repository_best

    if best is None:
        raise NoBaselineError(f"no baseline available on platform {pid!r}")
    return BaselineValue(pid, best.value, source, best.implementation, best.kind.units)


def application_efficiency(achieved: Measurement, baseline: BaselineValue) -> float:
    if achieved.platform != baseline.platform:
        raise ValidationError(
            f"platform mismatch: measurement on {achieved.platform!r}, baseline on {baseline.platform!r}"
        )
    _check_positive(achieved=achieved.value, baseline=baseline.value)
    if achieved.kind.lower_is_better:
        return baseline.value / achieved.value
    return achieved.value / baseline.value


def architectural_efficiency(achieved_throughput: float, peak: float) -> float:
    _check_positive(achieved_throughput=achieved_throughput, peak=peak)
    return achieved_throughput / peak


def roofline_peak(peak_compute: float, peak_mem_bw: float, arithmetic_intensity: float) -> float:
    """Attainable GFLOP/s: ``min(peak_compute, arithmetic_intensity * peak_mem_bw)``."""
    _check_positive(peak_compute=peak_compute, peak_mem_bw=peak_mem_bw,
                    arithmetic_intensity=arithmetic_intensity)
    return min(peak_compute, arithmetic_intensity * peak_mem_bw)


def architectural_peak(policy: BaselinePolicy, platform: Platform) -> BaselineValue:
    """Peak throughput baseline for the architectural policy variants."""
    if policy.variant is PolicyVariant.architectural_theoretical:
        if platform.peak_compute is None:
            raise NoBaselineError(f"platform {platform.id!r} lacks peak_compute")
        return BaselineValue(platform.id, platform.peak_compute, BaselineSource.theoretical_peak,
                             units="GFLOP/s")
    if policy.variant is PolicyVariant.architectural_roofline:
        if platform.attainable_peak is not None:
            peak = platform.attainable_peak
        elif None in (platform.peak_compute, platform.peak_mem_bw, policy.arithmetic_intensity):
            raise NoBaselineError(
                f"platform {platform.id!r} needs attainable_peak or peak_compute, "
                "peak_mem_bw and an arithmetic intensity"
            )
        else:
            peak = roofline_peak(platform.peak_compute, platform.peak_mem_bw, policy.arithmetic_intensity)
        return BaselineValue(platform.id, peak, BaselineSource.roofline_peak, units="GFLOP/s")
    raise BaselineError(f"{policy.variant.value} is not an architectural policy")


def efficiency(achieved: Measurement, baseline: BaselineValue) -> float:
    """Dispatch on the baseline kind: peaks give architectural efficiency."""
    if baseline.source in (BaselineSource.theoretical_peak, BaselineSource.roofline_peak):
        if achieved.kind is not MeasurementKind.throughput_gflops:
            raise ValidationError(
                f"architectural efficiency needs throughput_gflops, got {achieved.kind.value}"
            )
        return architectural_efficiency(achieved.value, baseline.value)
    return application_efficiency(achieved, baseline)
