import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cwswap.detection import (
    DARK,
    PHOTON,
    DetectionRecords,
    DetectorMode,
    DetectorModel,
    TimestampTable,
    apd_analyzer,
    apd_bsm,
    detect,
    enforce_dead_time,
    make_gates,
    sspd,
    tdc_record,
    thin,
)
from cwswap.errors import DomainError
from cwswap.rng import stream
from cwswap.units import Duration, Probability, Rate


def ideal(id="d", **kw):
    base = dict(efficiency=Probability(1.0), jitter_fwhm=Duration(0.0))
    base.update(kw)
    return DetectorModel(id, **base)


def arrivals(n, span=1e9, seed=0):
    return np.sort(np.random.default_rng(seed).uniform(0, span, n))


def test_presets():
    assert sspd().efficiency.value == 0.045 and sspd().jitter_fwhm.value == 74
    assert sspd().dark_count_rate.value == 300
    assert apd_bsm().mode is DetectorMode.GATED and apd_bsm().dark_prob_per_ns == 1e-4
    assert apd_analyzer("a").jitter_fwhm.value == 300


def test_identity_chain():
    t = arrivals(1000)
    rec = detect(t, ideal(), rng_seed=1)
    np.testing.assert_array_equal(rec.recorded_time, t)
    np.testing.assert_array_equal(rec.true_time, t)
    assert np.all(rec.origin == PHOTON)


def test_zero_efficiency_only_darks():
    t = arrivals(1000)
    m = ideal(efficiency=Probability(0.0), dark_count_rate=Rate(1e6))
    rec = detect(t, m, rng_seed=1, live_span=(0, 1e9))
    assert len(rec) > 0 and np.all(rec.origin == DARK)


def test_unsorted_rejected():
    with pytest.raises(DomainError):
        detect(np.array([2.0, 1.0]), ideal(), rng_seed=1)


def test_gated_needs_gates():
    with pytest.raises(DomainError):
        detect(np.array([1.0]), apd_bsm(), rng_seed=1)


def test_jitter_std_recovery():
    t = np.arange(100_000) * 1e5
    m = ideal(jitter_fwhm=Duration.ps(74))
    rec = detect(t, m, rng_seed=stream(3, "jitter"))
    err = rec.recorded_time - rec.true_time
    sigma = 74 / 2.3548200450309493
    # standard error of a sample std is sigma / sqrt(2 (n - 1))
    assert abs(err.std(ddof=1) - sigma) < 3 * sigma / np.sqrt(2 * (len(err) - 1))


def test_free_running_dark_total():
    m = ideal(efficiency=Probability(0.0), dark_count_rate=Rate(300.0))
    T = 1e13  # 10 s
    rec = detect(np.array([]), m, rng_seed=5, live_span=(0.0, T))
    mean = 300 * 10
    assert abs(len(rec) - mean) < 3 * np.sqrt(mean)


def test_gated_dark_total():
    m = apd_bsm()
    gates = make_gates(np.arange(20_000) * 1e6, Duration.ns(20), 0.0)
    rec = detect(np.array([]), m, gates, rng_seed=5)
    mean = 1e-4 * 20 * len(gates)
    assert abs(len(rec) - mean) < 3 * np.sqrt(mean)


def test_dead_time_enforced():
    t = arrivals(200_000, span=1e9, seed=2)
    m = ideal(dead_time=Duration.ns(10))
    rec = detect(t, m, rng_seed=1)
    assert len(rec) < len(t)
    assert np.all(np.diff(rec.recorded_time) >= 10_000)


@settings(deadline=None)
@given(st.lists(st.floats(0, 1e6), max_size=60), st.floats(0, 1e5))
def test_dead_time_property(ts, dt):
    t = np.sort(np.array(ts, dtype=float))
    keep = enforce_dead_time(t, dt)
    kept = t[keep]
    if dt > 0:
        assert np.all(np.diff(kept) >= dt)
    if len(t):
        assert keep[0]


def test_loss_composable():
    t = arrivals(100_000, seed=4)
    a = thin(detect(t, ideal(efficiency=Probability(0.6)), rng_seed=1), 0.5, rng_seed=2)
    b = detect(t, ideal(efficiency=Probability(0.3)), rng_seed=3)
    sigma = np.sqrt(2 * len(t) * 0.3 * 0.7)
    assert abs(len(a) - len(b)) < 3 * sigma


def test_make_gates_examples():
    assert make_gates([], Duration.ns(20)).shape == (0, 2)
    g = make_gates([0.0, 100_000.0], Duration.ns(20), 0.0)
    np.testing.assert_array_equal(g, [[0, 20_000], [100_000, 120_000]])
    g = make_gates([0.0, 10_000.0], Duration.ns(20), 0.0)
    np.testing.assert_array_equal(g, [[0, 30_000]])
    with pytest.raises(DomainError):
        make_gates([5.0, 1.0], Duration.ns(20))


@settings(deadline=None)
@given(st.lists(st.floats(0, 1e6), max_size=50), st.floats(1, 5e4), st.floats(-3e4, 3e4))
def test_make_gates_disjoint_and_covering(ts, w, d):
    t = np.sort(np.array(ts, dtype=float))
    g = make_gates(t, w, d)
    if len(g) > 1:
        assert np.all(g[1:, 0] > g[:-1, 1])
    for x in t:
        lo = x + d
        assert np.any((g[:, 0] <= lo + 1e-9) & (g[:, 1] >= lo + w - 1e-9))


def test_gated_keeps_first_click_per_gate():
    gates = np.array([[0.0, 20_000.0]])
    rec = detect(np.array([100.0, 200.0, 300.0]), ideal(mode="gated"), gates, rng_seed=1)
    assert len(rec) == 1 and rec.recorded_time[0] == 100.0
    rec = detect(np.array([30_000.0]), ideal(mode="gated"), gates, rng_seed=1)
    assert len(rec) == 0


def _records(det, times):
    t = np.asarray(times, dtype=float)
    return DetectionRecords(det, t, t, np.zeros(len(t), np.int8), np.arange(len(t)))


def test_tdc_floor():
    tab = tdc_record([_records("x", [374.0])], Duration.ps(100))
    assert tab.time_ps.tolist() == [300]
    ints = [0.0, 5.0, 17.0, 123456.0]
    tab = tdc_record([_records("x", ints)], Duration.ps(1))
    assert tab.time_ps.tolist() == [0, 5, 17, 123456]
    with pytest.raises(DomainError):
        tdc_record([_records("x", ints)], 0.0)


def test_tdc_quantisation_error_mean():
    t = np.sort(np.random.default_rng(8).uniform(0, 1e9, 10_000))
    tab = tdc_record([_records("x", t)], Duration.ps(4))
    err = t - tab.time_ps
    assert abs(err.mean() - 2.0) < 3 * 4 / np.sqrt(12) / np.sqrt(len(t))
    assert err.min() >= 0 and err.max() < 4


def test_tdc_merges_and_sorts():
    tab = tdc_record([_records("b", [5.0, 10.0]), _records("a", [5.0, 7.0])], Duration.ps(1))
    assert tab.time_ps.tolist() == [5, 5, 7, 10]
    assert tab.detector_id.tolist() == ["a", "b", "a", "b"]
    assert tab.is_sorted()


def test_timestamp_csv_roundtrip(tmp_path):
    tab = TimestampTable.from_rows([("bsm1", 10, "photon"), ("a+", 5, "dark"), ("bsm2", 12, "photon")])
    p = tab.write_csv(tmp_path / "t.csv", ["master_seed=1"])
    text = p.read_text().splitlines()
    assert text[0] == "# master_seed=1" and text[1] == "detector_id,time_ps,origin"
    back = TimestampTable.read_csv(p)
    assert back.detector_id.tolist() == ["a+", "bsm1", "bsm2"]
    assert back.time_ps.tolist() == [5, 10, 12]
    assert back.origin.tolist() == [DARK, PHOTON, PHOTON]


def test_csv_missing_columns(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("detector,t\nx,1\n")
    with pytest.raises(DomainError):
        TimestampTable.read_csv(p)
