"""Mechanical checks of the portability-metric criteria.

The central check compares two scored snapshots of one study and flags
implementations whose efficiency or score moved although none of their own
measurements did, i.e. the score changed only because the baseline moved.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .efficiency import best_measurement, resolve_baseline, application_efficiency
from .errors import BaselineError, StudyMismatchError, ValidationError
from .metrics import score_study
from .model import (
    BaselinePolicy,
    Measurement,
    Metric,
    Platform,
    PolicyVariant,
    PortabilityScore,
    StudyDefinition,
)

# Relative change below which two floats count as equal.
CHANGE_TOLERANCE = 1e-9


class Severity(str, Enum):
    violation = "violation"
    warning = "warning"
    info = "info"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    description: str
    criterion: int | None = None
    implementation: str | None = None
    platform: str | None = None
    before: float | None = None
    after: float | None = None

    def to_dict(self) -> dict:
        return {
            "severity": self.severity.value,
            "criterion": self.criterion,
            "implementation": self.implementation,
            "platform": self.platform,
            "description": self.description,
            "before": self.before,
            "after": self.after,
        }


@dataclass
class AuditReport:
    findings: list[Finding] = field(default_factory=list)

    def _of(self, severity):
        return [f for f in self.findings if f.severity is severity]

    @property
    def violations(self) -> list[Finding]:
        return self._of(Severity.violation)

    @property
    def warnings(self) -> list[Finding]:
        return self._of(Severity.warning)

    @property
    def infos(self) -> list[Finding]:
        return self._of(Severity.info)

    def __add__(self, other: AuditReport) -> AuditReport:
        return AuditReport(self.findings + other.findings)

    def to_dict(self) -> dict:
        return {"findings": [f.to_dict() for f in self.findings]}


@dataclass(frozen=True)
class Snapshot:
    study: StudyDefinition
    measurements: tuple[Measurement, ...]
    scores: tuple[PortabilityScore, ...]


def take_snapshot(
    study: StudyDefinition,
    measurements: Sequence[Measurement],
    repository_measurements: Sequence[Measurement] = (),
    platforms: Mapping[str, Platform] | None = None,
) -> Snapshot:
    scores = score_study(study, measurements, repository_measurements, platforms)
    return Snapshot(study, tuple(measurements), tuple(scores))


@dataclass(frozen=True)
class EfficiencyDelta:
    implementation: str
    platform: str
    before: float
    after: float


@dataclass(frozen=True)
class ScoreDelta:
    implementation: str
    before: PortabilityScore | None
    after: PortabilityScore | None

    @property
    def before_value(self) -> float:
        return 0.0 if self.before is None else self.before.value

    @property
    def after_value(self) -> float:
        return 0.0 if self.after is None else self.after.value


@dataclass(frozen=True)
class ChangeSet:
    study: StudyDefinition
    added: tuple[Measurement, ...] = ()
    removed: tuple[Measurement, ...] = ()
    # implementation-platform pairs present in both snapshots whose observations differ
    modified: tuple[tuple[str, str], ...] = ()
    efficiency_deltas: tuple[EfficiencyDelta, ...] = ()
    score_deltas: tuple[ScoreDelta, ...] = ()

    @property
    def empty(self) -> bool:
        return not (self.added or self.removed or self.efficiency_deltas or self.score_deltas)

    @property
    def touched_implementations(self) -> set[str]:
        """Implementations with at least one added or removed observation."""
        return {m.implementation for m in (*self.added, *self.removed)}


def changed(a: float, b: float, tol: float = CHANGE_TOLERANCE) -> bool:
    return abs(a - b) > tol * max(abs(a), abs(b))


def _mkey(m: Measurement):
    return (m.app, m.problem, m.implementation, m.platform, m.kind, m.value, tuple(sorted(m.meta.items())))


def _study_shape(s: StudyDefinition):
    return (s.app, s.problem, s.h, s.policy, s.metric)


def diff_snapshots(before: Snapshot, after: Snapshot) -> ChangeSet:
    if _study_shape(before.study) != _study_shape(after.study):
        raise StudyMismatchError("snapshots were scored under different study definitions")
    study = after.study

    b_count = Counter(_mkey(m) for m in before.measurements)
    a_count = Counter(_mkey(m) for m in after.measurements)
    added, removed = [], []
    seen_a, seen_b = Counter(), Counter()
    for m in after.measurements:
        k = _mkey(m)
        seen_a[k] += 1
        if seen_a[k] > b_count[k]:
            added.append(m)
    for m in before.measurements:
        k = _mkey(m)
        seen_b[k] += 1
        if seen_b[k] > a_count[k]:
            removed.append(m)
    pairs_before = {(m.implementation, m.platform) for m in before.measurements}
    pairs_after = {(m.implementation, m.platform) for m in after.measurements}
    modified = sorted({(m.implementation, m.platform) for m in (*added, *removed)}
                      & pairs_before & pairs_after)

    b_scores = {s.implementation: s for s in before.scores}
    a_scores = {s.implementation: s for s in after.scores}
    impls = list(dict.fromkeys([*b_scores, *a_scores]))
    e_deltas, s_deltas = [], []
    for impl in impls:
        sb, sa = b_scores.get(impl), a_scores.get(impl)
        for pid in study.h:
            eb = sb.per_platform[pid].e if sb and pid in sb.per_platform else 0.0
            ea = sa.per_platform[pid].e if sa and pid in sa.per_platform else 0.0
            if changed(eb, ea):
                e_deltas.append(EfficiencyDelta(impl, pid, eb, ea))
        if sb is None or sa is None or changed(sb.value, sa.value):
            s_deltas.append(ScoreDelta(impl, sb, sa))
    return ChangeSet(study, tuple(added), tuple(removed), tuple(modified), tuple(e_deltas), tuple(s_deltas))


def check_criterion4(changeset: ChangeSet) -> AuditReport:
    """Flag efficiency or score changes of implementations whose own data did not change."""
    touched = changeset.touched_implementations
    findings = []
    flagged = set()
    score_of = {d.implementation: d for d in changeset.score_deltas}
    for d in changeset.efficiency_deltas:
        if d.implementation in touched:
            continue
        flagged.add(d.implementation)
        sd = score_of.get(d.implementation)
        score_note = ""
        if sd is not None:
            score_note = f"; score {sd.before_value:.4g} -> {sd.after_value:.4g}"
        findings.append(Finding(
            Severity.violation,
            f"efficiency of {d.implementation} on {d.platform} changed from {d.before:.4g} to "
            f"{d.after:.4g} while none of its measurements changed{score_note}",
            criterion=4, implementation=d.implementation, platform=d.platform,
            before=d.before, after=d.after,
        ))
    for sd in changeset.score_deltas:
        impl = sd.implementation
        if impl in touched or impl in flagged or sd.before is None or sd.after is None:
            continue
        findings.append(Finding(
            Severity.violation,
            f"score of {impl} changed from {sd.before_value:.4g} to {sd.after_value:.4g} "
            "while none of its measurements changed",
            criterion=4, implementation=impl, before=sd.before_value, after=sd.after_value,
        ))
    return AuditReport(findings)


def check_proportionality(changeset: ChangeSet) -> AuditReport:
    """Check that, at a fixed supported-set size, score deltas equal the mean efficiency delta.

    When the supported set changes size between snapshots the check does not
    apply; an info finding records that instead.
    """
    findings = []
    for sd in changeset.score_deltas:
        if sd.before is None or sd.after is None:
            continue
        nb, na = len(sd.before.s), len(sd.after.s)
        if nb != na:
            findings.append(Finding(
                Severity.info,
                f"supported platforms of {sd.implementation} went from {nb} to {na}; "
                "proportionality not assessed",
                criterion=5, implementation=sd.implementation,
                before=sd.before_value, after=sd.after_value,
            ))
            continue
        if na == 0:
            continue
        h = changeset.study.h
        delta_sum = sum(sd.after.per_platform[p].e - sd.before.per_platform[p].e for p in h)
        expected = delta_sum / na
        actual = sd.after_value - sd.before_value
        if abs(actual - expected) > CHANGE_TOLERANCE * max(1.0, abs(expected)):
            findings.append(Finding(
                Severity.violation,
                f"score of {sd.implementation} moved by {actual:.6g}, but the efficiency sum over "
                f"{na} supported platforms implies {expected:.6g}",
                criterion=5, implementation=sd.implementation,
                before=sd.before_value, after=sd.after_value,
            ))
    return AuditReport(findings)


def check_scaling_invariance(
    study: StudyDefinition,
    measurements: Sequence[Measurement],
    platform: str,
    factor: float,
    implementations: Iterable[str] | None = None,
    repository_measurements: Sequence[Measurement] = (),
    platforms: Mapping[str, Platform] | None = None,
) -> AuditReport:
    """Rescale measurements on one platform and report any efficiency that moved.

    ``implementations`` restricts the rescaling to those implementations;
    changes caused by an unscaled baseline are reported as info rather than
    as violations.
    """
    if not factor > 0:
        raise ValidationError(f"factor must be strictly positive, got {factor!r}")
    if study.policy.variant.is_architectural:
        return AuditReport([Finding(
            Severity.info,
            "architectural efficiencies are relative to fixed platform peaks and are not "
            "expected to be invariant under rescaling",
            criterion=2, platform=platform,
        )])
    only = None if implementations is None else set(implementations)

    def hit(m):
        return m.platform == platform and (only is None or m.implementation in only)

    scaled = [m.scaled(factor) if hit(m) else m for m in measurements]
    scaled_repo = [m.scaled(factor) if hit(m) else m for m in repository_measurements]
    before = {s.implementation: s for s in score_study(study, measurements, repository_measurements, platforms)}
    after = {s.implementation: s for s in score_study(study, scaled, scaled_repo, platforms)}

    findings = []
    for impl, sa in after.items():
        sb = before[impl]
        rb, ra = sb.per_platform[platform], sa.per_platform[platform]
        if abs(ra.e - rb.e) <= CHANGE_TOLERANCE:
            continue
        sources = {r.baseline.implementation for r in (rb, ra) if r.baseline is not None}
        baseline_scaled = only is None or sources <= only
        impl_scaled = only is None or impl in only
        if baseline_scaled and impl_scaled:
            findings.append(Finding(
                Severity.violation,
                f"efficiency of {impl} on {platform} moved from {rb.e:.6g} to {ra.e:.6g} "
                f"when every measurement there was scaled by {factor:g}",
                criterion=2, implementation=impl, platform=platform, before=rb.e, after=ra.e,
            ))
        else:
            findings.append(Finding(
                Severity.info,
                f"efficiency of {impl} on {platform} moved from {rb.e:.6g} to {ra.e:.6g} because the "
                "baseline and the measurement were not scaled together",
                criterion=2, implementation=impl, platform=platform, before=rb.e, after=ra.e,
            ))
    return AuditReport(findings)


def check_reference_dominance(
    study_measurements: Sequence[Measurement],
    policy: BaselinePolicy,
    h: Sequence[str] | None = None,
) -> AuditReport:
    """Warn wherever a portable implementation beats its fixed reference (efficiency > 1)."""
    if policy.variant is not PolicyVariant.fixed_reference:
        raise ValidationError("reference dominance applies to fixed_reference policies only")
    plats = list(h) if h is not None else list(policy.references)
    refs = policy.reference_ids
    findings = []
    groups: dict[tuple[str, str], list[Measurement]] = {}
    for m in study_measurements:
        groups.setdefault((m.app, m.problem), []).append(m)
    for rows in groups.values():
        for pid in plats:
            on_p = [m for m in rows if m.platform == pid]
            try:
                base = resolve_baseline(policy, pid, rows)
            except BaselineError as exc:
                findings.append(Finding(Severity.violation, str(exc), platform=pid))
                continue
            by_impl: dict[str, list[Measurement]] = {}
            for m in on_p:
                if m.implementation not in refs:
                    by_impl.setdefault(m.implementation, []).append(m)
            for impl, obs in by_impl.items():
                e = application_efficiency(best_measurement(obs), base)
                if e > 1.0:
                    findings.append(Finding(
                        Severity.warning,
                        f"{impl} on {pid} outperforms reference {base.implementation} "
                        f"(efficiency {e:.4g}); the reference does not dominate",
                        implementation=impl, platform=pid, after=e,
                    ))
    return AuditReport(findings)


def check_mixed_arch(study: StudyDefinition, platforms: Mapping[str, Platform]) -> AuditReport:
    classes = {}
    for pid in study.h:
        if pid in platforms:
            classes.setdefault(platforms[pid].arch_class.value, []).append(pid)
    if len(classes) <= 1:
        return AuditReport()
    detail = "; ".join(f"{c}: {', '.join(ps)}" for c, ps in sorted(classes.items()))
    return AuditReport([Finding(
        Severity.warning,
        f"platform set mixes architecture classes ({detail})",
    )])


def audit_change(before: Snapshot, after: Snapshot) -> tuple[ChangeSet, AuditReport]:
    """Diff two snapshots and run the snapshot-level criterion checks."""
    cs = diff_snapshots(before, after)
    report = check_criterion4(cs)
    if cs.study.metric is Metric.arithmetic_mean:
        report = report + check_proportionality(cs)
    return cs, report
