import copy
import json
from pathlib import Path

import pytest

from cwswap import config as cf
from cwswap.errors import ConfigError
from cwswap.units import filtered_pair_rate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def doc():
    return cf.to_dict(cf.reference_config())


def test_roundtrip_idempotent():
    text = cf.dumps(cf.reference_config())
    assert cf.dumps(cf.loads(text)) == text
    assert cf.loads(text) == cf.reference_config()


def test_shipped_config_matches_builtin():
    assert cf.load(CONFIGS / "reference.json") == cf.reference_config()


def test_save_load(tmp_path):
    cfg = cf.reference_config().with_run(master_seed=42, mode="full_stream")
    p = cf.save(cfg, tmp_path / "c.json")
    assert cf.load(p) == cfg


def test_unknown_key_rejected():
    d = doc()
    d["run"]["speed"] = 3
    with pytest.raises(ConfigError, match="speed"):
        cf.from_dict(d)


def test_missing_key_rejected():
    d = doc()
    del d["overlap"]["mu"]
    with pytest.raises(ConfigError):
        cf.from_dict(d)


def test_schema_version():
    d = doc()
    d["schema_version"] = 99
    with pytest.raises(ConfigError):
        cf.from_dict(d)


def test_units_converted():
    d = doc()
    d["sources"]["A"]["pump_power"] = {"value": 0.002, "unit": "W"}
    d["analyzers"]["a"]["phase"] = {"value": 90.0, "unit": "deg"}
    cfg = cf.from_dict(d)
    assert cfg.source_a.pump_power == cf.reference_config().source_a.pump_power
    assert cfg.analyzer_a.phase == pytest.approx(1.5707963267948966)


@pytest.mark.parametrize(
    "path,value",
    [
        (("sources", "A", "pump_power"), {"value": 2.0, "unit": "furlong"}),
        (("sources", "A", "pump_power"), 2.0),
        (("overlap", "mu"), {"value": 1.5, "unit": "1"}),
        (("run", "mode"), "fast"),
        (("detectors", "bsm1", "efficiency"), {"value": 1.2, "unit": "1"}),
    ],
)
def test_bad_values(path, value):
    d = copy.deepcopy(doc())
    node = d
    for k in path[:-1]:
        node = node[k]
    node[path[-1]] = value
    with pytest.raises(ConfigError):
        cf.from_dict(d)


def test_malformed_json():
    with pytest.raises(ConfigError):
        cf.loads("{not json")


def test_derived_quantities():
    cfg = cf.reference_config()
    lo, hi = cfg.tau_bin
    assert lo < 1200 < hi
    assert cfg.bunching_threshold == pytest.approx(cfg.coherence_time.value)
    assert 0.55 <= cfg.swap_visibility() <= 0.75
    json.dumps(cf.assumptions(cfg))


def test_boosted_config():
    b = cf.boosted_config(cf.reference_config(), 1e6)
    assert filtered_pair_rate(b.source_a).value == pytest.approx(1e6)
    assert b.bsm1.efficiency.value == 1.0 and b.bsm1.dark_count_rate.value == 0.0
    assert b.analyzer_a.insertion_transmission.value == 1.0
    assert b.bsm1.jitter_fwhm == cf.reference_config().bsm1.jitter_fwhm
