import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from cwswap.errors import DomainError
from cwswap.interference import (
    AnalyzerSpec,
    BSMPattern,
    MultipairMode,
    OverlapModel,
    classify_bsm,
    conditional_visibility,
    correlation_from_probabilities,
    dip_fwhm,
    dip_visibility,
    effective_visibility,
    hom_cross_density,
    measured_dip,
    middle_slot_table,
    multipair_factor_analytic,
    multipair_factor_mc,
    swapped_pair_probabilities,
)
from cwswap.units import FWHM_PER_SIGMA, Duration, Probability

TC = Duration.ps(350.0)
JIT = [74 / FWHM_PER_SIGMA, 105 / FWHM_PER_SIGMA]


def ov(mu=1.0, tc=TC):
    return OverlapModel.from_coherence_time(mu, tc)


def analyzers(alpha=0.0, beta=0.0):
    d = Duration.ns(1.2)
    return AnalyzerSpec(d, alpha), AnalyzerSpec(d, beta)


def test_cross_density_limits():
    o = ov()
    assert hom_cross_density(0.0, o) == 0.0
    assert hom_cross_density(1e6, o) == pytest.approx(0.5)
    assert hom_cross_density(0.0, ov(0.5)) == pytest.approx(0.25)


def test_dip_visibility_and_fwhm():
    assert dip_visibility(ov()) == 1.0
    v = dip_visibility(ov(), JIT)
    assert v == pytest.approx(350 / math.hypot(350, math.hypot(74, 105)), rel=1e-12)
    assert dip_fwhm(ov(), JIT) == pytest.approx(math.sqrt(350**2 + 74**2 + 105**2), rel=1e-9)
    assert dip_fwhm(ov(), JIT) == pytest.approx(373, rel=0.01)
    assert dip_visibility(ov(0.82), JIT) == pytest.approx(0.77, abs=0.005)


def test_unit_free_jitter_accepts_durations():
    assert dip_visibility(ov(), [Duration.ps(s) for s in JIT]) == dip_visibility(ov(), JIT)


def test_bad_overlap():
    with pytest.raises(DomainError):
        OverlapModel(1.2, Duration.ps(100))
    with pytest.raises(DomainError):
        dip_visibility(ov(), [-1.0])


@settings(max_examples=20, deadline=None)
@given(
    st.floats(0.0, 1.0),
    st.floats(50.0, 800.0),
    st.lists(st.floats(0.0, 200.0), min_size=1, max_size=3),
    st.floats(-1500.0, 1500.0),
)
def test_measured_dip_matches_numeric_convolution(mu, tc, jitters, delta):
    o = ov(mu, Duration.ps(tc))
    sj = math.sqrt(sum(j * j for j in jitters))
    if sj < 1e-3:
        expect = hom_cross_density(delta, o)
    else:
        f = lambda x: hom_cross_density(x, o) * np.exp(-((delta - x) ** 2) / (2 * sj * sj)) / (sj * math.sqrt(2 * math.pi))  # noqa: E731
        expect = integrate.quad(f, delta - 12 * sj, delta + 12 * sj, limit=200)[0]
    assert measured_dip(delta, o, jitters) == pytest.approx(expect, abs=1e-9)


def test_classify_bsm():
    s = classify_bsm(0, 1200, ports=(1, 2), bunching_threshold=350)
    assert s.success and s.tau == 1200 and s.pattern is BSMPattern.CROSS_PORT
    b = classify_bsm(0, 100, ports=(1, 2), bunching_threshold=350)
    assert not b.success and b.pattern is BSMPattern.CROSS_PORT
    f = classify_bsm(0, 1200, ports=(1, 1))
    assert not f.success and f.pattern is BSMPattern.SAME_PORT
    one = classify_bsm(0, None)
    assert not one.success and one.pattern is BSMPattern.SINGLE_CLICK and math.isnan(one.tau)


@given(st.floats(-1e5, 1e5), st.floats(-1e5, 1e5), st.floats(0, 2e3))
def test_classify_antisymmetric(t1, t2, thr):
    a = classify_bsm(t1, t2, (1, 2), thr)
    b = classify_bsm(t2, t1, (2, 1), thr)
    assert a.success == b.success
    assert a.tau == pytest.approx(-b.tau)


def test_swapped_probabilities_reference_case():
    a, b = analyzers()
    p = swapped_pair_probabilities(1200.0, a, b, 1.0)
    assert sum(p.values()) == pytest.approx(1.0)
    mid = {k: v for k, v in p.items() if k[2:] == (1, 1)}
    assert sum(mid.values()) == pytest.approx(0.25)
    assert correlation_from_probabilities(p) == pytest.approx(1.0)
    assert p[(1, -1, 1, 1)] == 0.0


def test_swapped_probabilities_outside_window():
    a, b = analyzers(0.0, 0.0)
    p = swapped_pair_probabilities(300.0, a, b, 1.0, window=350.0)
    assert correlation_from_probabilities(p) == pytest.approx(0.0)


def test_swapped_probabilities_reject_bad_visibility():
    a, b = analyzers()
    with pytest.raises(DomainError):
        swapped_pair_probabilities(1200.0, a, b, 1.2)


@settings(max_examples=50)
@given(st.floats(0, 1), st.floats(-7, 7), st.floats(-7, 7))
def test_swapped_probabilities_properties(v, alpha, beta):
    a, b = analyzers(alpha, beta)
    p = swapped_pair_probabilities(1200.0, a, b, v)
    assert all(x >= 0 for x in p.values())
    assert sum(p.values()) == pytest.approx(1.0)
    assert correlation_from_probabilities(p) == pytest.approx(v * math.cos(alpha - beta), abs=1e-12)
    # marginals of each detector are flat
    for side in (0, 1):
        plus = sum(x for k, x in p.items() if k[side] == 1)
        assert plus == pytest.approx(0.5)


def test_middle_slot_table():
    t = middle_slot_table(0.63, 0.0, 0.0)
    assert t.sum() == pytest.approx(1.0)
    assert t[0, 0] - t[0, 1] - t[1, 0] + t[1, 1] == pytest.approx(0.63)


def test_effective_visibility_window():
    a, b = analyzers()
    assert effective_visibility(1200.0, a, b, 0.7, 350.0) == 0.7
    assert effective_visibility(-1200.0, a, b, 0.7, 350.0) == 0.7
    assert effective_visibility(500.0, a, b, 0.7, 350.0) == 0.0
    np.testing.assert_array_equal(effective_visibility([1200.0, 0.0], a, b, 0.5, 100.0), [0.5, 0.0])


def test_analyzer_needs_positive_delay():
    with pytest.raises(DomainError):
        AnalyzerSpec(Duration(0.0), 0.0)
    assert AnalyzerSpec(Duration.ns(1.2), 0.0, Probability.from_db(4)).insertion_transmission.value == pytest.approx(
        0.398, abs=1e-3
    )


def test_multipair_factors():
    assert multipair_factor_analytic(0.0, 0.0) == 1.0
    q = 0.014066
    fa = multipair_factor_analytic(q, q)
    fm = multipair_factor_mc(q, q, rng_seed=3, n_trials=400_000)
    assert fm == pytest.approx(fa, abs=3e-3)
    assert multipair_factor_mc(0.0, 0.0, 1) == 1.0
    with pytest.raises(DomainError):
        multipair_factor_analytic(-1, 0)


def test_conditional_visibility_bracket():
    v = conditional_visibility(ov(0.82, Duration.ps(358.2)), JIT, 0.014066, 0.014066, MultipairMode.MONTE_CARLO, 1)
    assert 0.55 <= v <= 0.75
    va = conditional_visibility(ov(0.82, Duration.ps(358.2)), JIT, 0.014066, 0.014066, "analytic")
    assert va == pytest.approx(v, abs=0.005)


@settings(max_examples=30)
@given(st.floats(0, 0.1), st.floats(0, 0.1))
def test_conditional_visibility_decreases_with_q(q1, q2):
    lo, hi = sorted((q1, q2))
    o = ov(0.9)
    assert conditional_visibility(o, JIT, hi, hi) <= conditional_visibility(o, JIT, lo, lo) + 1e-15
