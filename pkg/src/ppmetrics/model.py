"""Domain types for portability studies.

Every type here is an immutable value object with ``to_dict``/``from_dict``
for JSON round-tripping. Computation lives in :mod:`ppmetrics.efficiency`
and :mod:`ppmetrics.metrics`; the only logic in this module is validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping

from .errors import ValidationError

# Provenance keys a repository measurement must disclose to count as verified.
REQUIRED_META = ("compiler", "compiler_flags", "input_size")


class _ParseEnum(str, Enum):
    @classmethod
    def parse(cls, value: Any):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        key = _ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            allowed = ", ".join(m.value for m in cls)
            raise ValidationError(
                f"unknown {cls.__name__} {value!r} (expected one of: {allowed})"
            ) from None


class ArchClass(_ParseEnum):
    cpu = "cpu"
    gpu = "gpu"
    other = "other"


class PortabilityClass(_ParseEnum):
    portable_framework = "portable_framework"
    low_level_nonportable = "low_level_nonportable"


class MeasurementKind(_ParseEnum):
    runtime_seconds = "runtime_seconds"
    throughput_gflops = "throughput_gflops"
    throughput_custom = "throughput_custom"

    @property
    def lower_is_better(self) -> bool:
        return self is MeasurementKind.runtime_seconds

    @property
    def units(self) -> str:
        return {"runtime_seconds": "s", "throughput_gflops": "GFLOP/s"}.get(self.value, "custom")


class PolicyVariant(_ParseEnum):
    study_local_best = "study_local_best"
    fixed_reference = "fixed_reference"
    repository_best = "repository_best"
    architectural_theoretical = "architectural_theoretical"
    architectural_roofline = "architectural_roofline"

    @property
    def is_architectural(self) -> bool:
        return self in (PolicyVariant.architectural_theoretical, PolicyVariant.architectural_roofline)

    @property
    def baseline_stable(self) -> bool:
        """True when adding other implementations can never move the baseline."""
        return self is PolicyVariant.fixed_reference or self.is_architectural


class Metric(_ParseEnum):
    arithmetic_mean = "arithmetic_mean"
    harmonic_mean = "harmonic_mean"


class BaselineSource(_ParseEnum):
    best_in_study = "best_in_study"
    reference_implementation = "reference_implementation"
    repository_best = "repository_best"
    theoretical_peak = "theoretical_peak"
    roofline_peak = "roofline_peak"


# Short command-line spellings.
_ALIASES = {
    "study_best": "study_local_best",
    "fixed_ref": "fixed_reference",
    "repo_best": "repository_best",
    "arch_theoretical": "architectural_theoretical",
    "arch_roofline": "architectural_roofline",
    "arithmetic": "arithmetic_mean",
    "harmonic": "harmonic_mean",
    "runtime": "runtime_seconds",
    "gflops": "throughput_gflops",
    "portable": "portable_framework",
    "low_level": "low_level_nonportable",
}


def _positive_or_none(name: str, value: Any) -> float | None:
    if value is None or value == "":
        return None
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a number, got {value!r}", field=name) from None
    if not math.isfinite(v) or v <= 0:
        raise ValidationError(f"{name} must be strictly positive, got {value!r}", field=name)
    return v


def _require_text(name: str, value: Any) -> str:
    if not isinstance(value, str) or not value.strip():
        raise ValidationError(f"{name} must be a non-empty string", field=name)
    return value


@dataclass(frozen=True)
class Platform:
    id: str
    vendor: str = ""
    arch_class: ArchClass = ArchClass.other
    peak_compute: float | None = None  # GFLOP/s
    peak_mem_bw: float | None = None  # GB/s
    attainable_peak: float | None = None  # GFLOP/s, user-supplied roofline ceiling

    def __post_init__(self):
        _require_text("platform id", self.id)
        object.__setattr__(self, "arch_class", ArchClass.parse(self.arch_class))
        for name in ("peak_compute", "peak_mem_bw", "attainable_peak"):
            object.__setattr__(self, name, _positive_or_none(name, getattr(self, name)))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "vendor": self.vendor,
            "arch_class": self.arch_class.value,
            "peak_compute": self.peak_compute,
            "peak_mem_bw": self.peak_mem_bw,
            "attainable_peak": self.attainable_peak,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> Platform:
        return cls(
            id=d.get("id"),
            vendor=d.get("vendor") or "",
            arch_class=d.get("arch_class") or ArchClass.other,
            peak_compute=d.get("peak_compute"),
            peak_mem_bw=d.get("peak_mem_bw"),
            attainable_peak=d.get("attainable_peak"),
        )


@dataclass(frozen=True)
class Implementation:
    id: str
    app: str
    model: str = ""
    portability_class: PortabilityClass = PortabilityClass.portable_framework

    def __post_init__(self):
        _require_text("implementation id", self.id)
        _require_text("app", self.app)
        object.__setattr__(self, "portability_class", PortabilityClass.parse(self.portability_class))

    @property
    def key(self) -> tuple[str, str]:
        return (self.app, self.id)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "app": self.app,
            "model": self.model,
            "portability_class": self.portability_class.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> Implementation:
        return cls(
            id=d.get("id"),
            app=d.get("app"),
            model=d.get("model") or "",
            portability_class=d.get("portability_class") or PortabilityClass.portable_framework,
        )


@dataclass(frozen=True)
class ProblemSpec:
    app: str
    problem: str
    input_size: str | None = None

    def __post_init__(self):
        _require_text("app", self.app)
        _require_text("problem", self.problem)

    @property
    def key(self) -> tuple[str, str]:
        return (self.app, self.problem)

    def to_dict(self) -> dict:
        return {"app": self.app, "problem": self.problem, "input_size": self.input_size}

    @classmethod
    def from_dict(cls, d: Mapping) -> ProblemSpec:
        return cls(app=d.get("app"), problem=d.get("problem"), input_size=d.get("input_size"))


@dataclass(frozen=True)
class Measurement:
    """One reported observation of an implementation on a platform.

    ``value`` is in the units of ``kind``: seconds for runtimes (lower is
    better), GFLOP/s or a custom rate for throughputs (higher is better).
    """

    app: str
    problem: str
    implementation: str
    platform: str
    kind: MeasurementKind
    value: float
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        _require_text("app", self.app)
        _require_text("problem", self.problem)
        _require_text("implementation", self.implementation)
        _require_text("platform", self.platform)
        object.__setattr__(self, "kind", MeasurementKind.parse(self.kind))
        value = _positive_or_none("value", self.value)
        if value is None:
            raise ValidationError("value is required", field="value")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "meta", {str(k): str(v) for k, v in dict(self.meta or {}).items()})

    @property
    def verified(self) -> bool:
        return all(self.meta.get(k) for k in REQUIRED_META)

    def scaled(self, factor: float) -> Measurement:
        return Measurement(self.app, self.problem, self.implementation, self.platform,
                           self.kind, self.value * factor, self.meta)

    def to_dict(self) -> dict:
        return {
            "app": self.app,
            "problem": self.problem,
            "implementation": self.implementation,
            "platform": self.platform,
            "kind": self.kind.value,
            "value": self.value,
            "meta": dict(sorted(self.meta.items())),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> Measurement:
        return cls(
            app=d.get("app"),
            problem=d.get("problem"),
            implementation=d.get("implementation"),
            platform=d.get("platform"),
            kind=d.get("kind"),
            value=d.get("value"),
            meta=d.get("meta") or {},
        )


@dataclass(frozen=True)
class BaselinePolicy:
    variant: PolicyVariant
    references: Mapping[str, str] = field(default_factory=dict)
    # FLOP/byte, used by the roofline variant when a platform has no attainable_peak
    arithmetic_intensity: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", PolicyVariant.parse(self.variant))
        object.__setattr__(self, "references", dict(self.references or {}))
        object.__setattr__(
            self, "arithmetic_intensity",
            _positive_or_none("arithmetic_intensity", self.arithmetic_intensity),
        )
        if self.references and self.variant is not PolicyVariant.fixed_reference:
            raise ValidationError("references are only meaningful for fixed_reference")

    @property
    def reference_ids(self) -> frozenset[str]:
        return frozenset(self.references.values())

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "references": dict(self.references),
            "arithmetic_intensity": self.arithmetic_intensity,
        }

    @classmethod
    def from_dict(cls, d: Mapping | str) -> BaselinePolicy:
        if isinstance(d, str):
            return cls(d)
        return cls(
            variant=d.get("variant"),
            references=d.get("references") or {},
            arithmetic_intensity=d.get("arithmetic_intensity"),
        )


@dataclass(frozen=True)
class BaselineValue:
    platform: str
    value: float
    source: BaselineSource
    implementation: str | None = None  # who set it, for measurement-backed baselines
    units: str = ""

    def __post_init__(self):
        if not self.value > 0:
            raise ValidationError(f"baseline value must be positive, got {self.value!r}")
        object.__setattr__(self, "source", BaselineSource.parse(self.source))

    def to_dict(self) -> dict:
        return {
            "platform": self.platform,
            "value": self.value,
            "source": self.source.value,
            "implementation": self.implementation,
            "units": self.units,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> BaselineValue:
        return cls(d["platform"], d["value"], d["source"], d.get("implementation"), d.get("units", ""))


@dataclass(frozen=True)
class EfficiencyRecord:
    implementation: str
    platform: str
    e: float
    variant: PolicyVariant
    baseline: BaselineValue | None = None
    verified: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variant", PolicyVariant.parse(self.variant))
        if self.e < 0 or math.isnan(self.e):
            raise ValidationError(f"efficiency must be >= 0, got {self.e!r}")
        if self.e > 0 and self.baseline is None:
            raise ValidationError("a positive efficiency needs a baseline descriptor")

    @property
    def supported(self) -> bool:
        return self.e > 0

    def to_dict(self) -> dict:
        return {
            "implementation": self.implementation,
            "platform": self.platform,
            "e": self.e,
            "variant": self.variant.value,
            "baseline": None if self.baseline is None else self.baseline.to_dict(),
            "verified": self.verified,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> EfficiencyRecord:
        b = d.get("baseline")
        return cls(
            implementation=d["implementation"],
            platform=d["platform"],
            e=d["e"],
            variant=d["variant"],
            baseline=None if b is None else BaselineValue.from_dict(b),
            verified=d.get("verified", True),
        )


@dataclass(frozen=True)
class StudyDefinition:
    app: str
    problem: str
    h: tuple[str, ...]
    policy: BaselinePolicy
    metric: Metric = Metric.arithmetic_mean
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(self.h))
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        if not isinstance(self.policy, BaselinePolicy):
            object.__setattr__(self, "policy", BaselinePolicy.from_dict(self.policy))

    @property
    def key(self) -> str:
        if self.name:
            return self.name
        return f"{self.app}/{self.problem}/{self.policy.variant.value}/{self.metric.value}"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "app": self.app,
            "problem": self.problem,
            "h": list(self.h),
            "policy": self.policy.to_dict(),
            "metric": self.metric.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> StudyDefinition:
        return cls(
            app=d.get("app"),
            problem=d.get("problem"),
            h=tuple(d.get("h") or ()),
            policy=BaselinePolicy.from_dict(d.get("policy") or {}),
            metric=d.get("metric") or Metric.arithmetic_mean,
            name=d.get("name") or "",
        )


@dataclass(frozen=True)
class PortabilityScore:
    app: str
    problem: str
    implementation: str
    h: tuple[str, ...]
    s: tuple[str, ...]
    metric: Metric
    policy: BaselinePolicy
    value: float
    per_platform: Mapping[str, EfficiencyRecord]
    study: str = ""

    def to_dict(self) -> dict:
        return {
            "study": self.study,
            "app": self.app,
            "problem": self.problem,
            "implementation": self.implementation,
            "metric": self.metric.value,
            "policy": self.policy.to_dict(),
            "h": list(self.h),
            "s": list(self.s),
            "value": self.value,
            "per_platform": [self.per_platform[p].to_dict() for p in self.h if p in self.per_platform],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> PortabilityScore:
        records = [EfficiencyRecord.from_dict(r) for r in d["per_platform"]]
        return cls(
            app=d["app"],
            problem=d["problem"],
            implementation=d["implementation"],
            h=tuple(d["h"]),
            s=tuple(d["s"]),
            metric=Metric.parse(d["metric"]),
            policy=BaselinePolicy.from_dict(d["policy"]),
            value=d["value"],
            per_platform={r.platform: r for r in records},
            study=d.get("study", ""),
        )


def validate_study(
    study: StudyDefinition,
    measurements: Iterable[Measurement],
    platforms: Mapping[str, Platform] | None = None,
) -> list[str]:
    """Return every reason ``study`` cannot be scored; an empty list means valid.

    ``platforms`` is the platform registry. Without one, platform ids are not
    checked for existence, and architectural policies are reported as
    lacking peak data.
    """
    problems: list[str] = []
    h = study.h
    if not h:
        problems.append("empty platform set")
    seen = set()
    for pid in h:
        if pid in seen:
            problems.append(f"duplicate platform {pid!r} in platform set")
        seen.add(pid)
    if platforms is not None:
        for pid in h:
            if pid not in platforms:
                problems.append(f"unknown platform {pid!r}")

    rows = [m for m in measurements if (m.app, m.problem) == (study.app, study.problem)]
    kinds = {m.kind for m in rows}
    if len(kinds) > 1:
        names = ", ".join(sorted(k.value for k in kinds))
        problems.append(f"mixed measurement kinds in one study: {names}")
    if platforms is not None:
        for pid in sorted({m.platform for m in rows} - set(platforms)):
            problems.append(f"measurement references unknown platform {pid!r}")

    policy = study.policy
    if policy.variant is PolicyVariant.fixed_reference:
        for pid in h:
            if pid not in policy.references:
                problems.append(f"fixed_reference has no reference implementation for platform {pid!r}")
        for pid in sorted(set(policy.references) - set(h)):
            problems.append(f"reference given for platform {pid!r} outside the platform set")

    if policy.variant.is_architectural:
        if kinds & {MeasurementKind.throughput_custom, MeasurementKind.runtime_seconds}:
            problems.append(
                "architectural policies need throughput_gflops measurements "
                f"(got {', '.join(sorted(k.value for k in kinds))})"
            )
        for pid in h:
            plat = None if platforms is None else platforms.get(pid)
            missing = _missing_peak_fields(policy, plat)
            if missing:
                problems.append(f"platform {pid!r} lacks {' and '.join(missing)} for {policy.variant.value}")
    return problems


def _missing_peak_fields(policy: BaselinePolicy, plat: Platform | None) -> list[str]:
    if policy.variant is PolicyVariant.architectural_theoretical:
        if plat is None or plat.peak_compute is None:
            return ["peak_compute"]
        return []
    # roofline: an explicit ceiling wins, otherwise derive it from the peaks
    if plat is not None and plat.attainable_peak is not None:
        return []
    missing = []
    if plat is None or plat.peak_compute is None:
        missing.append("peak_compute")
    if plat is None or plat.peak_mem_bw is None:
        missing.append("peak_mem_bw")
    if policy.arithmetic_intensity is None:
        missing.append("arithmetic_intensity")
    if missing:
        return ["attainable_peak (or " + ", ".join(missing) + ")"]
    return []
