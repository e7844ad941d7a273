"""Oracle values below were produced by the brute-force amplitude grid and frozen."""

import numpy as np
import pytest

from cwswap.errors import ResolutionError
from cwswap.interference import OverlapModel, hom_cross_density, measured_dip
from cwswap.oracle import (
    GridSpec,
    oracle_check,
    oracle_cross_curve,
    oracle_joint_probabilities,
    oracle_measured_dip,
    write_oracle_csv,
)
from cwswap.config import reference_config

SIGMA = reference_config().overlap.sigma_c  # 358.2 ps coherence time
FROZEN_CROSS_MU1 = {
    0.0: 0.0,
    100.0: 0.09716512347332469,
    300.0: 0.428487240132822,
    600.0: 0.4997907699095718,
}
FROZEN_CROSS_MU05 = {0.0: 0.25, 100.0: 0.29858256173666226, 300.0: 0.464243620066411}
FROZEN_MEASURED = {0.0: 0.03836260607212337, 150.0: 0.1949915065824815, 400.0: 0.4757685800292028}


@pytest.fixture
def overlap():
    return OverlapModel(1.0, SIGMA)


def test_frozen_bare_values(overlap):
    g = GridSpec.for_overlap(overlap)
    got = oracle_cross_curve(g, list(FROZEN_CROSS_MU1), overlap)
    np.testing.assert_allclose(got, list(FROZEN_CROSS_MU1.values()), atol=1e-12)
    half = OverlapModel(0.5, SIGMA)
    got = oracle_cross_curve(g, list(FROZEN_CROSS_MU05), half)
    np.testing.assert_allclose(got, list(FROZEN_CROSS_MU05.values()), atol=1e-12)


def test_frozen_values_match_closed_form(overlap):
    for d, v in FROZEN_CROSS_MU1.items():
        assert hom_cross_density(d, overlap) == pytest.approx(v, abs=1e-9)
    for d, v in FROZEN_MEASURED.items():
        assert measured_dip(d, overlap, [63.29]) == pytest.approx(v, abs=1e-9)


def test_frozen_jittered_values(overlap):
    g = GridSpec.for_overlap(overlap)
    got = oracle_measured_dip(g, list(FROZEN_MEASURED), overlap, 63.29)
    np.testing.assert_allclose(got, list(FROZEN_MEASURED.values()), atol=1e-12)


def test_table_normalisation(overlap):
    t = oracle_joint_probabilities(GridSpec.for_overlap(overlap), 200.0, overlap)
    assert t.cross_total + t.same_total == pytest.approx(1.0, abs=1e-12)
    # cross-port table vanishes on the diagonal (simultaneous detection)
    assert np.allclose(np.diag(t.cross), 0.0)


def test_resolution_guards(overlap):
    s = SIGMA.value
    with pytest.raises(ResolutionError):
        GridSpec(s / 10, 12 * s).check(overlap)
    with pytest.raises(ResolutionError):
        GridSpec(s / 25, 5 * s).check(overlap)
    with pytest.raises(ResolutionError):
        oracle_joint_probabilities(GridSpec(s / 25, 10 * s), 5 * s, overlap)
    with pytest.raises(ResolutionError):
        oracle_check(GridSpec(s / 10, 12 * s), overlap)


def test_oracle_check_mu_half_bare():
    half = OverlapModel(0.5, SIGMA)
    rep = oracle_check(None, half, (), n_delays=11)
    assert rep.passed and rep.max_deviation < 1e-3


def test_csv_export(tmp_path, overlap):
    d = np.array([0.0, 100.0])
    c = oracle_cross_curve(GridSpec.for_overlap(overlap), d, overlap)
    p = write_oracle_csv(tmp_path / "o.csv", d, c)
    lines = p.read_text().splitlines()
    assert lines[0] == "delta_ps,cross_port_prob,same_port_prob"
    assert len(lines) == 3
