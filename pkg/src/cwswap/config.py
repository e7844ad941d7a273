"""Scenario configuration: JSON schema, parsing, serialisation and presets.

Physical values are written as ``{"value": number, "unit": "ps"}`` pairs and
parsed into canonical units; serialising always emits canonical units, so
``dump(parse(doc))`` is a fixed point after one pass.  Unknown and missing
keys are both rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .detection import DetectorMode, DetectorModel, apd_analyzer, apd_bsm, sspd
from .errors import ConfigError, CwswapError
from .interference import AnalyzerSpec, MultipairMode, OverlapModel, conditional_visibility, dip_visibility
from .rng import stream
from .units import (
    Duration,
    Lineshape,
    Power,
    Probability,
    Rate,
    SourceSpec,
    WavePacket,
    Wavelength,
    filtered_pair_rate,
    reference_source,
    source_q,
)

SCHEMA_VERSION = 1

DIMENSIONLESS = {"1": 1.0, "": 1.0, "%": 0.01}
ANGLE = {"rad": 1.0, "deg": math.pi / 180.0}


@dataclass(frozen=True)
class RunSettings:
    mode: str = "conditioned"  # "full_stream" | "conditioned"
    duration: Duration = Duration.of(1.0, "ms")
    target_event_count: int = 10_000
    master_seed: int = 1
    max_pairs: int = 20_000_000
    phase_settings: int = 13
    alpha: float = 0.0

    def __post_init__(self):
        if self.mode not in ("full_stream", "conditioned"):
            raise ConfigError(f"run.mode must be 'full_stream' or 'conditioned', got {self.mode!r}")
        if self.target_event_count < 1:
            raise ConfigError("run.target_event_count must be >= 1")
        if self.phase_settings < 1:
            raise ConfigError("run.phase_settings must be >= 1")
        if self.master_seed < 0 or self.master_seed >= 2**64:
            raise ConfigError("run.master_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class AnalysisSettings:
    window_bsm: Duration = Duration.ns(10.0)
    window_outer: Duration = Duration.ps(500.0)
    tau_bin_halfwidth: Duration | None = None  # None: half a coherence time
    hom_bin_width: Duration = Duration.ps(50.0)
    hom_span: Duration = Duration.ps(1500.0)
    tdc_resolution: Duration = Duration.ps(4.0)
    bunching_threshold: Duration | None = None  # None: one coherence time
    interference_window: Duration | None = None  # None: one coherence time
    multipair_mode: MultipairMode = MultipairMode.MONTE_CARLO
    multipair_trials: int = 200_000

    def __post_init__(self):
        object.__setattr__(self, "multipair_mode", MultipairMode(self.multipair_mode))
        if self.hom_bin_width.value <= 0 or self.tdc_resolution.value <= 0:
            raise ConfigError("bin widths and TDC resolution must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    source_a: SourceSpec
    source_b: SourceSpec
    mu: float
    bsm1: DetectorModel
    bsm2: DetectorModel
    analyzer_det_a: DetectorModel
    analyzer_det_b: DetectorModel
    analyzer_a: AnalyzerSpec
    analyzer_b: AnalyzerSpec
    run: RunSettings = field(default_factory=RunSettings)
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)

    # --- derived quantities (the config is their only source) -------------

    @property
    def coherence_time(self) -> Duration:
        return (self.source_a.coherence_time + self.source_b.coherence_time) / 2.0

    @property
    def overlap(self) -> OverlapModel:
        return OverlapModel.from_coherence_time(self.mu, self.coherence_time)

    @property
    def bsm_jitter_sigmas(self) -> list[float]:
        return [self.bsm1.jitter_sigma, self.bsm2.jitter_sigma]

    @property
    def pair_rates(self) -> tuple[Rate, Rate]:
        return filtered_pair_rate(self.source_a), filtered_pair_rate(self.source_b)

    @property
    def q_values(self) -> tuple[float, float]:
        return source_q(self.source_a), source_q(self.source_b)

    @property
    def bunching_threshold(self) -> float:
        a = self.analysis.bunching_threshold
        return self.coherence_time.value if a is None else a.value

    @property
    def interference_window(self) -> float:
        a = self.analysis.interference_window
        return self.coherence_time.value if a is None else a.value

    @property
    def tau_bin(self) -> tuple[float, float]:
        hw = self.analysis.tau_bin_halfwidth
        hw = self.coherence_time.value / 2.0 if hw is None else hw.value
        d = self.analyzer_a.path_difference.value
        return max(d - hw, 0.0), d + hw

    def temporal_visibility(self) -> float:
        return dip_visibility(self.overlap, self.bsm_jitter_sigmas)

    def swap_visibility(self) -> float:
        qa, qb = self.q_values
        return conditional_visibility(
            self.overlap, self.bsm_jitter_sigmas, qa, qb,
            mode=self.analysis.multipair_mode,
            rng_seed=stream(self.run.master_seed, "multipair"),
            n_trials=self.analysis.multipair_trials,
        )

    def phase_settings(self) -> list[tuple[float, float]]:
        n = self.run.phase_settings
        a = self.run.alpha
        return [(a, a + 2.0 * math.pi * k / n) for k in range(n)]

    def with_run(self, **kw) -> "ScenarioConfig":
        return replace(self, run=replace(self.run, **kw))

    def with_analysis(self, **kw) -> "ScenarioConfig":
        return replace(self, analysis=replace(self.analysis, **kw))


def reference_config() -> ScenarioConfig:
    """The published setup, with mu calibrated so the jittered dip shows 77 %."""
    src = reference_source()
    an = AnalyzerSpec(Duration.ns(1.2), 0.0, Probability.from_db(4.0))
    return ScenarioConfig(
        source_a=src,
        source_b=src,
        mu=0.82,
        bsm1=sspd("bsm1"),
        bsm2=apd_bsm("bsm2"),
        analyzer_det_a=apd_analyzer("a"),
        analyzer_det_b=apd_analyzer("b"),
        analyzer_a=an,
        analyzer_b=an,
    )


def assumptions(cfg: ScenarioConfig) -> dict[str, Any]:
    """Declared, unpublished parameter choices surfaced in every report."""
    return {
        "window_bsm_ps": cfg.analysis.window_bsm.value,
        "window_outer_halfwidth_ps": cfg.analysis.window_outer.value,
        "tau_bin_ps": list(cfg.tau_bin),
        "tdc_resolution_ps": cfg.analysis.tdc_resolution.value,
        "analyzer_jitter_fwhm_ps": [cfg.analyzer_det_a.jitter_fwhm.value, cfg.analyzer_det_b.jitter_fwhm.value],
        "sspd_dead_time_ps": cfg.bsm1.dead_time.value,
        "bsm_gate_width_ps": cfg.bsm2.gate_width.value,
        "lineshape": cfg.source_a.filter.lineshape.value,
        "pair_statistics": "poisson",
    }


# --- JSON (de)serialisation ------------------------------------------------------


def _q(v: float, unit: str) -> dict:
    return {"value": v, "unit": unit}


def _take(doc: dict, keys: set[str], where: str) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = set(doc) - keys
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    missing = keys - set(doc)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    return doc


def _pair(obj, where: str) -> tuple[float, str]:
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return float(obj), "1"
    _take(obj, {"value", "unit"}, where)
    v = obj["value"]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{where}: value must be a number")
    return float(v), str(obj["unit"])


def _quantity(cls, obj, where: str):
    v, unit = _pair(obj, where)
    try:
        return cls.of(v, unit)
    except CwswapError as e:
        raise ConfigError(f"{where}: {e}") from e


def _signed_ps(obj, where: str) -> float:
    v, unit = _pair(obj, where)
    if unit not in Duration.scales:
        raise ConfigError(f"{where}: unknown time unit {unit!r}")
    return v * Duration.scales[unit]


def _dimless(obj, where: str) -> float:
    v, unit = _pair(obj, where)
    if unit not in DIMENSIONLESS:
        raise ConfigError(f"{where}: expected a dimensionless value, got unit {unit!r}")
    return v * DIMENSIONLESS[unit]


def _prob(obj, where: str) -> Probability:
    try:
        return Probability(_dimless(obj, where))
    except CwswapError as e:
        raise ConfigError(f"{where}: {e}") from e


def _angle(obj, where: str) -> float:
    v, unit = _pair(obj, where)
    if unit not in ANGLE:
        raise ConfigError(f"{where}: unknown angle unit {unit!r}")
    return v * ANGLE[unit]


SOURCE_KEYS = {"pump_power", "pump_wavelength", "conversion_efficiency_per_nm", "raw_bandwidth", "filter",
               "coupling_transmission", "filter_transmission"}
FILTER_KEYS = {"center_wavelength", "bandwidth_fwhm", "lineshape"}
DETECTOR_KEYS = {"efficiency", "jitter_fwhm", "mode", "dark_count_rate", "dark_prob_per_ns", "gate_width",
                 "gate_delay", "dead_time"}
ANALYZER_KEYS = {"path_difference", "phase", "insertion_transmission"}
RUN_KEYS = {"mode", "duration", "target_event_count", "master_seed", "max_pairs", "phase_settings", "alpha"}
ANALYSIS_KEYS = {"window_bsm", "window_outer", "tau_bin_halfwidth", "hom_bin_width", "hom_span", "tdc_resolution",
                 "bunching_threshold", "interference_window", "multipair_mode", "multipair_trials"}
TOP_KEYS = {"schema_version", "sources", "overlap", "detectors", "analyzers", "run", "analysis"}


def _source_from(doc, where) -> SourceSpec:
    _take(doc, SOURCE_KEYS, where)
    f = _take(doc["filter"], FILTER_KEYS, where + ".filter")
    try:
        packet = WavePacket(
            _quantity(Wavelength, f["center_wavelength"], where + ".filter.center_wavelength"),
            _quantity(Wavelength, f["bandwidth_fwhm"], where + ".filter.bandwidth_fwhm"),
            Lineshape(f["lineshape"]),
        )
        return SourceSpec(
            pump_power=_quantity(Power, doc["pump_power"], where + ".pump_power"),
            pump_wavelength=_quantity(Wavelength, doc["pump_wavelength"], where + ".pump_wavelength"),
            conversion_efficiency_per_nm=_dimless(doc["conversion_efficiency_per_nm"], where + ".conversion_efficiency_per_nm"),
            raw_bandwidth=_quantity(Wavelength, doc["raw_bandwidth"], where + ".raw_bandwidth"),
            filter=packet,
            coupling_transmission=_prob(doc["coupling_transmission"], where + ".coupling_transmission"),
            filter_transmission=_prob(doc["filter_transmission"], where + ".filter_transmission"),
        )
    except (ValueError, CwswapError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{where}: {e}") from e


def _source_to(s: SourceSpec) -> dict:
    return {
        "pump_power": _q(s.pump_power.value, "mW"),
        "pump_wavelength": _q(s.pump_wavelength.value, "nm"),
        "conversion_efficiency_per_nm": _q(s.conversion_efficiency_per_nm, "1"),
        "raw_bandwidth": _q(s.raw_bandwidth.value, "nm"),
        "filter": {
            "center_wavelength": _q(s.filter.center_wavelength.value, "nm"),
            "bandwidth_fwhm": _q(s.filter.bandwidth_fwhm.value, "nm"),
            "lineshape": s.filter.lineshape.value,
        },
        "coupling_transmission": _q(s.coupling_transmission.value, "1"),
        "filter_transmission": _q(s.filter_transmission.value, "1"),
    }


def _detector_from(doc, det_id, where) -> DetectorModel:
    _take(doc, DETECTOR_KEYS, where)
    try:
        return DetectorModel(
            id=det_id,
            efficiency=_prob(doc["efficiency"], where + ".efficiency"),
            jitter_fwhm=_quantity(Duration, doc["jitter_fwhm"], where + ".jitter_fwhm"),
            mode=DetectorMode(doc["mode"]),
            dark_count_rate=_quantity(Rate, doc["dark_count_rate"], where + ".dark_count_rate"),
            dark_prob_per_ns=_dimless(doc["dark_prob_per_ns"], where + ".dark_prob_per_ns"),
            gate_width=_quantity(Duration, doc["gate_width"], where + ".gate_width"),
            gate_delay=_signed_ps(doc["gate_delay"], where + ".gate_delay"),
            dead_time=_quantity(Duration, doc["dead_time"], where + ".dead_time"),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{where}: {e}") from e


def _detector_to(d: DetectorModel) -> dict:
    return {
        "efficiency": _q(d.efficiency.value, "1"),
        "jitter_fwhm": _q(d.jitter_fwhm.value, "ps"),
        "mode": d.mode.value,
        "dark_count_rate": _q(d.dark_count_rate.value, "Hz"),
        "dark_prob_per_ns": _q(d.dark_prob_per_ns, "1"),
        "gate_width": _q(d.gate_width.value, "ps"),
        "gate_delay": _q(d.gate_delay, "ps"),
        "dead_time": _q(d.dead_time.value, "ps"),
    }


def _analyzer_from(doc, where) -> AnalyzerSpec:
    _take(doc, ANALYZER_KEYS, where)
    try:
        return AnalyzerSpec(
            _quantity(Duration, doc["path_difference"], where + ".path_difference"),
            _angle(doc["phase"], where + ".phase"),
            _prob(doc["insertion_transmission"], where + ".insertion_transmission"),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{where}: {e}") from e


def _analyzer_to(a: AnalyzerSpec) -> dict:
    return {
        "path_difference": _q(a.path_difference.value, "ps"),
        "phase": _q(a.phase, "rad"),
        "insertion_transmission": _q(a.insertion_transmission.value, "1"),
    }


def _int(obj, where) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigError(f"{where}: expected an integer")
    return obj


def _opt_duration(obj, where):
    return None if obj is None else _quantity(Duration, obj, where)


def from_dict(doc: dict) -> ScenarioConfig:
    _take(doc, TOP_KEYS, "config")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {doc['schema_version']!r} (expected {SCHEMA_VERSION})")
    srcs = _take(doc["sources"], {"A", "B"}, "sources")
    ov = _take(doc["overlap"], {"mu"}, "overlap")
    dets = _take(doc["detectors"], {"bsm1", "bsm2", "analyzer_a", "analyzer_b"}, "detectors")
    ans = _take(doc["analyzers"], {"a", "b"}, "analyzers")
    run = _take(doc["run"], RUN_KEYS, "run")
    an = _take(doc["analysis"], ANALYSIS_KEYS, "analysis")
    mu = _dimless(ov["mu"], "overlap.mu")
    if not 0.0 <= mu <= 1.0:
        raise ConfigError("overlap.mu must lie in [0, 1]")
    try:
        run_settings = RunSettings(
            mode=str(run["mode"]),
            duration=_quantity(Duration, run["duration"], "run.duration"),
            target_event_count=_int(run["target_event_count"], "run.target_event_count"),
            master_seed=_int(run["master_seed"], "run.master_seed"),
            max_pairs=_int(run["max_pairs"], "run.max_pairs"),
            phase_settings=_int(run["phase_settings"], "run.phase_settings"),
            alpha=_angle(run["alpha"], "run.alpha"),
        )
        analysis = AnalysisSettings(
            window_bsm=_quantity(Duration, an["window_bsm"], "analysis.window_bsm"),
            window_outer=_quantity(Duration, an["window_outer"], "analysis.window_outer"),
            tau_bin_halfwidth=_opt_duration(an["tau_bin_halfwidth"], "analysis.tau_bin_halfwidth"),
            hom_bin_width=_quantity(Duration, an["hom_bin_width"], "analysis.hom_bin_width"),
            hom_span=_quantity(Duration, an["hom_span"], "analysis.hom_span"),
            tdc_resolution=_quantity(Duration, an["tdc_resolution"], "analysis.tdc_resolution"),
            bunching_threshold=_opt_duration(an["bunching_threshold"], "analysis.bunching_threshold"),
            interference_window=_opt_duration(an["interference_window"], "analysis.interference_window"),
            multipair_mode=an["multipair_mode"],
            multipair_trials=_int(an["multipair_trials"], "analysis.multipair_trials"),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from e
    return ScenarioConfig(
        source_a=_source_from(srcs["A"], "sources.A"),
        source_b=_source_from(srcs["B"], "sources.B"),
        mu=mu,
        bsm1=_detector_from(dets["bsm1"], "bsm1", "detectors.bsm1"),
        bsm2=_detector_from(dets["bsm2"], "bsm2", "detectors.bsm2"),
        analyzer_det_a=_detector_from(dets["analyzer_a"], "a", "detectors.analyzer_a"),
        analyzer_det_b=_detector_from(dets["analyzer_b"], "b", "detectors.analyzer_b"),
        analyzer_a=_analyzer_from(ans["a"], "analyzers.a"),
        analyzer_b=_analyzer_from(ans["b"], "analyzers.b"),
        run=run_settings,
        analysis=analysis,
    )


def to_dict(cfg: ScenarioConfig) -> dict:
    an = cfg.analysis
    opt = lambda d: None if d is None else _q(d.value, "ps")  # noqa: E731
    return {
        "schema_version": SCHEMA_VERSION,
        "sources": {"A": _source_to(cfg.source_a), "B": _source_to(cfg.source_b)},
        "overlap": {"mu": _q(cfg.mu, "1")},
        "detectors": {
            "bsm1": _detector_to(cfg.bsm1),
            "bsm2": _detector_to(cfg.bsm2),
            "analyzer_a": _detector_to(cfg.analyzer_det_a),
            "analyzer_b": _detector_to(cfg.analyzer_det_b),
        },
        "analyzers": {"a": _analyzer_to(cfg.analyzer_a), "b": _analyzer_to(cfg.analyzer_b)},
        "run": {
            "mode": cfg.run.mode,
            "duration": _q(cfg.run.duration.value, "ps"),
            "target_event_count": cfg.run.target_event_count,
            "master_seed": cfg.run.master_seed,
            "max_pairs": cfg.run.max_pairs,
            "phase_settings": cfg.run.phase_settings,
            "alpha": _q(cfg.run.alpha, "rad"),
        },
        "analysis": {
            "window_bsm": _q(an.window_bsm.value, "ps"),
            "window_outer": _q(an.window_outer.value, "ps"),
            "tau_bin_halfwidth": opt(an.tau_bin_halfwidth),
            "hom_bin_width": _q(an.hom_bin_width.value, "ps"),
            "hom_span": _q(an.hom_span.value, "ps"),
            "tdc_resolution": _q(an.tdc_resolution.value, "ps"),
            "bunching_threshold": opt(an.bunching_threshold),
            "interference_window": opt(an.interference_window),
            "multipair_mode": an.multipair_mode.value,
            "multipair_trials": an.multipair_trials,
        },
    }


def dumps(cfg: ScenarioConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2, sort_keys=True) + "\n"


def loads(text: str) -> ScenarioConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}") from e
    return from_dict(doc)


def load(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return loads(text)


def save(cfg: ScenarioConfig, path) -> Path:
    path = Path(path)
    path.write_text(dumps(cfg))
    return path


def boosted_config(cfg: ScenarioConfig, pair_rate_hz: float = 3e6) -> ScenarioConfig:
    """Lossless, dark-free variant with both sources scaled to ``pair_rate_hz``.

    Every transmission and detection efficiency becomes 1; jitters, gates,
    dead times and analysis settings are kept.  Lowering the pair rate keeps
    q small, so the brute-force stream reaches useful four-fold statistics
    within a modest number of simulated pairs.
    """
    one = Probability(1.0)

    def src(s: SourceSpec) -> SourceSpec:
        scale = pair_rate_hz / filtered_pair_rate(s).value
        return replace(s, pump_power=s.pump_power * scale, coupling_transmission=one, filter_transmission=one)

    def det(d: DetectorModel) -> DetectorModel:
        return replace(d, efficiency=one, dark_count_rate=Rate(0.0), dark_prob_per_ns=0.0)

    return replace(
        cfg,
        source_a=src(cfg.source_a),
        source_b=src(cfg.source_b),
        bsm1=det(cfg.bsm1),
        bsm2=det(cfg.bsm2),
        analyzer_det_a=det(cfg.analyzer_det_a),
        analyzer_det_b=det(cfg.analyzer_det_b),
        analyzer_a=replace(cfg.analyzer_a, insertion_transmission=one),
        analyzer_b=replace(cfg.analyzer_b, insertion_transmission=one),
    )
