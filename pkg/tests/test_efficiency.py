from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ppmetrics import (
    BaselinePolicy,
    Measurement,
    MissingReferenceError,
    NoBaselineError,
    Platform,
    ValidationError,
    application_efficiency,
    architectural_efficiency,
    architectural_peak,
    best_measurement,
    resolve_baseline,
    roofline_peak,
)
from ppmetrics.errors import NoMeasurementsError
from ppmetrics.model import BaselineSource, BaselineValue

from ._data import APP, PROBLEM, REFS


def rt(impl, plat, v, **meta):
    return Measurement(APP, PROBLEM, impl, plat, "runtime_seconds", v, meta)


def tp(impl, plat, v):
    return Measurement(APP, PROBLEM, impl, plat, "throughput_gflops", v)


@pytest.mark.parametrize("values, kind, expected", [
    ([40, 38, 41], "runtime", 38),
    ([100, 120], "gflops", 120),
    ([30], "runtime", 30),
])
def test_best_measurement(values, kind, expected):
    ms = [Measurement(APP, PROBLEM, "x", "A100", kind, v) for v in values]
    assert best_measurement(ms).value == expected


def test_best_measurement_tie_keeps_earliest():
    first, second = rt("x", "A100", 5, run="1"), rt("x", "A100", 5, run="2")
    assert best_measurement([first, second]) is first


def test_best_measurement_errors():
    with pytest.raises(NoMeasurementsError):
        best_measurement([])
    with pytest.raises(ValidationError):
        best_measurement([rt("x", "A100", 1), tp("x", "A100", 1)])


def test_study_local_best_picks_fastest_on_platform(table1):
    b = resolve_baseline(BaselinePolicy("study_local_best"), "A100", table1)
    assert (b.value, b.implementation, b.source) == (30, "OpenACC", BaselineSource.best_in_study)


def test_fixed_reference_uses_designated_implementation(table3):
    b = resolve_baseline(BaselinePolicy("fixed_reference", REFS), "MI250", table3)
    assert (b.value, b.implementation) == (10, "HIP")
    assert b.source is BaselineSource.reference_implementation


def test_fixed_reference_missing_measurement(table1):
    with pytest.raises(MissingReferenceError, match="missing reference measurement"):
        resolve_baseline(BaselinePolicy("fixed_reference", REFS), "A100", table1)


def test_repository_best_follows_new_ingests(table1):
    policy = BaselinePolicy("repository_best")
    assert resolve_baseline(policy, "MI250", table1, table1).value == 40
    repo = table1 + [rt("SYCL", "MI250", 30)]
    b = resolve_baseline(policy, "MI250", table1, repo)
    assert (b.value, b.implementation, b.source) == (30, "SYCL", BaselineSource.repository_best)


def test_repository_best_ignores_other_problems(table1):
    other = Measurement(APP, "other-problem", "SYCL", "MI250", "runtime_seconds", 1.0)
    assert resolve_baseline(BaselinePolicy("repository_best"), "MI250", table1, [other]).value == 40


def test_empty_scope_has_no_baseline():
    with pytest.raises(NoBaselineError):
        resolve_baseline(BaselinePolicy("study_local_best"), "A100", [rt("x", "P100", 3)])


@pytest.mark.parametrize("achieved, base, expected", [
    (50, 25, 0.50),
    (25, 25, 1.0),
    (60, 10, 1 / 6),
])
def test_application_efficiency_runtime(achieved, base, expected):
    e = application_efficiency(rt("x", "A100", achieved), BaselineValue("A100", base, "best_in_study"))
    assert e == pytest.approx(expected, rel=1e-12)


def test_application_efficiency_throughput_is_direct_ratio():
    e = application_efficiency(tp("x", "A100", 80), BaselineValue("A100", 100, "best_in_study"))
    assert e == pytest.approx(0.8)


def test_application_efficiency_platform_mismatch():
    with pytest.raises(ValidationError, match="platform mismatch"):
        application_efficiency(rt("x", "A100", 1), BaselineValue("P100", 1, "best_in_study"))


@pytest.mark.parametrize("achieved, peak, expected", [(250, 1000, 0.25), (1000, 1000, 1.0), (480, 500, 0.96)])
def test_architectural_efficiency(achieved, peak, expected):
    assert architectural_efficiency(achieved, peak) == pytest.approx(expected)


def test_architectural_efficiency_rejects_nonpositive():
    with pytest.raises(ValidationError):
        architectural_efficiency(0, 10)


@pytest.mark.parametrize("ai, expected", [(5, 500), (20, 1000), (10, 1000)])
def test_roofline_peak(ai, expected):
    assert roofline_peak(1000, 100, ai) == expected


def test_roofline_peak_rejects_nonpositive():
    with pytest.raises(ValidationError):
        roofline_peak(1000, 0, 4)


def test_architectural_peak_sources():
    plat = Platform("X", peak_compute=1000.0, peak_mem_bw=100.0)
    assert architectural_peak(BaselinePolicy("architectural_theoretical"), plat).value == 1000
    assert architectural_peak(BaselinePolicy("architectural_roofline", arithmetic_intensity=5), plat).value == 500
    ceiling = Platform("X", peak_compute=1000.0, attainable_peak=480.0)
    assert architectural_peak(BaselinePolicy("architectural_roofline"), ceiling).value == 480
    with pytest.raises(NoBaselineError):
        architectural_peak(BaselinePolicy("architectural_roofline"), Platform("Y", peak_compute=1.0))


pos = st.floats(min_value=1e-3, max_value=1e6, allow_nan=False)


@given(pos, pos, pos, st.sampled_from([0, 1, 2]), st.floats(min_value=1.0, max_value=10.0))
def test_roofline_monotone_and_capped(pc, bw, ai, which, bump):
    base = roofline_peak(pc, bw, ai)
    assert base <= pc
    args = [pc, bw, ai]
    args[which] *= bump
    assert roofline_peak(*args) >= base


@given(st.lists(st.floats(min_value=0.01, max_value=1e4), min_size=1, max_size=8))
def test_self_ratio_is_one(values):
    for v in values:
        m = rt("x", "A100", v)
        assert application_efficiency(m, BaselineValue("A100", m.value, "best_in_study")) == 1.0


@given(st.lists(st.floats(min_value=0.01, max_value=1e4), min_size=1, max_size=8))
def test_study_local_best_gives_one_to_best_and_unit_interval_to_rest(values):
    ms = [rt(f"i{k}", "A100", v) for k, v in enumerate(values)]
    base = resolve_baseline(BaselinePolicy("study_local_best"), "A100", ms)
    effs = [application_efficiency(m, base) for m in ms]
    assert all(0 < e <= 1 for e in effs)
    best = min(values)
    for v, e in zip(values, effs):
        assert (e == 1.0) == (v == best)


def test_scale_invariance_bit_level():
    grid = [1.0, 2.5, 3.0, 7.25, 40.0, 60.0]
    for values, c in itertools.product(itertools.permutations(grid, 3), [0.5, 2.0, 3.7, 1e-3, 1e5]):
        ms = [rt(f"i{k}", "A100", v) for k, v in enumerate(values)]
        scaled = [m.scaled(c) for m in ms]
        pol = BaselinePolicy("study_local_best")
        b0, b1 = resolve_baseline(pol, "A100", ms), resolve_baseline(pol, "A100", scaled)
        for m0, m1 in zip(ms, scaled):
            assert abs(application_efficiency(m0, b0) - application_efficiency(m1, b1)) <= 1e-12
