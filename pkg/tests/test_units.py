import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cwswap.errors import DomainError, UnitError
from cwswap.units import (
    Duration,
    Lineshape,
    Power,
    Probability,
    Rate,
    Wavelength,
    coherence_time,
    filtered_pair_rate,
    reference_source,
    pump_photon_flux,
    raw_pair_rate,
    source_q,
)


def test_coherence_time_reference_filter():
    tc = coherence_time(Wavelength.nm(1560), Wavelength.pm(10), Lineshape.GAUSSIAN)
    assert tc.to("ps") == pytest.approx(358.2, abs=0.1)


def test_coherence_time_unfiltered_is_femtoseconds():
    tc = coherence_time(Wavelength.nm(1560), Wavelength.nm(80))
    assert tc.to("fs") == pytest.approx(44.8, abs=0.1)


def test_lorentzian_is_longer():
    g = coherence_time(Wavelength.nm(1560), Wavelength.pm(10), "gaussian")
    lo = coherence_time(Wavelength.nm(1560), Wavelength.pm(10), "lorentzian")
    assert lo / g == pytest.approx(1.0 / (2 * math.log(2)), rel=1e-12)


@pytest.mark.parametrize("lam,dl", [(0.0, 0.01), (1560.0, 0.0)])
def test_coherence_time_rejects_zero(lam, dl):
    with pytest.raises(DomainError):
        coherence_time(Wavelength.nm(lam), Wavelength.nm(dl))


def test_pump_flux_and_pair_rates():
    src = reference_source()
    assert pump_photon_flux(src.pump_power, src.pump_wavelength).value == pytest.approx(7.853e15, rel=1e-3)
    assert raw_pair_rate(src).value == pytest.approx(3.141e11, rel=1e-3)
    assert filtered_pair_rate(src).value == pytest.approx(3.927e7, rel=1e-3)
    assert source_q(src) == pytest.approx(0.014066, rel=1e-4)


def test_unit_mismatch_raises():
    with pytest.raises(UnitError):
        Duration.ps(1) + Wavelength.nm(1)
    with pytest.raises(UnitError):
        Duration.ps(1) < Power.mw(1)
    with pytest.raises(UnitError):
        Duration.of(1, "furlong")


def test_rate_times_duration_is_count():
    assert Rate(1e6) * Duration.of(1, "ms") == pytest.approx(1000.0)
    assert Duration.of(1, "ms") * Rate(1e6) == pytest.approx(1000.0)


def test_probability_bounds_and_db():
    with pytest.raises(DomainError):
        Probability(1.5)
    with pytest.raises(DomainError):
        Duration(-1.0)
    assert Probability.from_db(3.0).value == pytest.approx(0.501, abs=1e-3)
    assert (Probability(0.5) * Probability(0.5)).value == 0.25


@given(st.floats(1e-3, 1e3))
def test_duration_roundtrip(v):
    assert Duration.of(v, "ns").to("ns") == pytest.approx(v, rel=1e-12)


@settings(max_examples=60)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_coherence_time_monotone_in_bandwidth(b1, b2):
    lam = Wavelength.nm(1560)
    t1 = coherence_time(lam, Wavelength.pm(b1))
    t2 = coherence_time(lam, Wavelength.pm(b2))
    if b1 < b2:
        assert t1.value >= t2.value
    # product with the bandwidth is constant
    assert t1.value * b1 == pytest.approx(t2.value * b2, rel=1e-9)


@settings(max_examples=60)
@given(st.floats(1e-3, 1e3))
def test_q_invariant_under_bandwidth_scaling(s):
    src = reference_source()
    assert source_q(src.with_bandwidth_scaled(s)) == pytest.approx(source_q(src), rel=1e-12)


def test_packet_sigma():
    src = reference_source()
    assert src.filter.sigma_c.value * 2.3548 == pytest.approx(src.coherence_time.value, rel=1e-4)
