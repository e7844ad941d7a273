from dataclasses import replace

import numpy as np
import pytest

from cwswap import config as cf
from cwswap import simulate as sm
from cwswap.errors import DomainError, MemoryBudgetError
from cwswap.units import Duration, Probability

MS = Duration.of(1.0, "ms")


def ref(**run):
    return cf.reference_config().with_run(**run)


def test_stream_deterministic(tmp_path):
    cfg = ref(master_seed=7)
    a = sm.simulate_stream(cfg, 0.0, 0.0, MS).table.write_csv(tmp_path / "a.csv")
    b = sm.simulate_stream(cfg, 0.0, 0.0, MS).table.write_csv(tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
    c = sm.simulate_stream(ref(master_seed=8), 0.0, 0.0, MS).table.write_csv(tmp_path / "c.csv")
    assert a.read_bytes() != c.read_bytes()


def test_reference_pair_counts():
    res = sm.simulate_stream(ref(), 0.0, 0.0, MS)
    mean = sm.expected_pairs(ref(), MS) / 2
    assert mean == pytest.approx(3.927e4, rel=1e-3)
    for n in res.n_pairs.values():
        assert abs(n - mean) < 4 * np.sqrt(mean)
    assert res.table.is_sorted()
    assert set(np.unique(res.table.detector_id)) <= {"bsm1", "bsm2", "a+", "a-", "b+", "b-"}


def test_memory_guard():
    cfg = ref(max_pairs=1000)
    with pytest.raises(MemoryBudgetError, match="at most"):
        sm.simulate_stream(cfg, 0.0, 0.0, MS)


def lossless(rate=1e6):
    cfg = cf.boosted_config(cf.reference_config(), rate)
    z = Duration(0.0)
    dets = {k: replace(getattr(cfg, k), jitter_fwhm=z) for k in ("bsm1", "bsm2", "analyzer_det_a", "analyzer_det_b")}
    return replace(cfg, **dets).with_run(mode="full_stream")


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_lossless_chain(seed):
    cfg = lossless().with_run(master_seed=seed)
    res = sm.simulate_stream(cfg, 0.0, 0.0, Duration.of(0.05, "s"))
    assert np.all(res.table.origin == 0)
    ev = sm._analyse_hom(cfg, res.table)
    # every gated APD click finds its SSPD trigger
    assert len(ev) == int(np.sum(res.table.detector_id == "bsm2"))
    # every projected pair ends up as a four-fold
    assert res.n_projected > 0
    assert sum(e.fold == 4 for e in ev) >= res.n_projected


def test_conditioned_visibility_override():
    cfg = ref(target_event_count=400)
    res = sm.swap_scan(cfg, "conditioned", visibility=0.0)
    assert res.configured_visibility == 0.0
    assert res.fit.visibility < 3 * max(res.fit.sigma_visibility, 0.02)
    assert res.werner.verdict == "inconclusive"


def test_conditioned_recovers_override():
    cfg = ref(target_event_count=1000, master_seed=5)
    res = sm.swap_scan(cfg, "conditioned", visibility=0.63)
    assert abs(res.fit.visibility - 0.63) < 3 * res.fit.sigma_visibility
    assert len(res.samples) == 13


@pytest.mark.slow
def test_full_stream_zero_visibility():
    cfg = cf.boosted_config(cf.reference_config()).with_run(mode="full_stream", duration=Duration.of(0.05, "s"))
    res = sm.swap_scan(cfg, visibility=0.0)
    assert res.fit.visibility < 3 * res.fit.sigma_visibility


def test_empty_acceptance():
    cfg = cf.reference_config()
    cfg = replace(cfg, bsm1=replace(cfg.bsm1, efficiency=Probability(0.0)))
    with pytest.raises(DomainError, match="empty acceptance"):
        sm.conditioned_swap_setting(cfg, 0.0, 0.0, 0.7)


def test_mode_checks():
    with pytest.raises(DomainError):
        sm.run_full_stream(ref(mode="conditioned"))
    with pytest.raises(DomainError):
        sm.run_conditioned(ref(mode="full_stream"))
    with pytest.raises(DomainError):
        sm.swap_scan(ref(), mode="psychic")


def test_conditioned_hom_small():
    res = sm.hom_scan(ref(target_event_count=3000))
    assert res.fit is not None
    assert abs(res.fit.visibility - res.expected_visibility) < 4 * res.fit.sigma_visibility
    assert res.n_events > 2000
