"""Performance-portability metrics with explicit, pluggable baseline policies."""

from .audit import (
    AuditReport,
    ChangeSet,
    Finding,
    Severity,
    Snapshot,
    audit_change,
    check_criterion4,
    check_mixed_arch,
    check_proportionality,
    check_reference_dominance,
    check_scaling_invariance,
    diff_snapshots,
    take_snapshot,
)
from .efficiency import (
    application_efficiency,
    architectural_efficiency,
    architectural_peak,
    best_measurement,
    resolve_baseline,
    roofline_peak,
)
from .errors import (
    BaselineError,
    DuplicateError,
    MissingReferenceError,
    NoBaselineError,
    PPMetricsError,
    ValidationError,
)
from .metrics import pbar, pp_harmonic, score_study, supported
from .model import (
    ArchClass,
    BaselinePolicy,
    BaselineSource,
    BaselineValue,
    EfficiencyRecord,
    Implementation,
    Measurement,
    MeasurementKind,
    Metric,
    Platform,
    PolicyVariant,
    PortabilityClass,
    PortabilityScore,
    ProblemSpec,
    StudyDefinition,
    validate_study,
)
from .store import Store

__version__ = "0.1.0"
