"""Closed-form rate budget from pump photons to four-fold coincidences."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import ScenarioConfig
from .errors import DomainError
from .units import pump_photon_flux, raw_pair_rate


@dataclass(frozen=True)
class BudgetStage:
    label: str
    factor: float
    running_rate: float  # per s
    published: bool = True  # False: the factor rests on an assumed parameter
    note: str = ""


@dataclass(frozen=True)
class RateBudget:
    initial_label: str
    initial_rate: float  # per s
    stages: list[BudgetStage]
    twofold_stage: str
    gap_items: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        run = self.initial_rate
        for s in self.stages:
            if not 0.0 < s.factor <= 1.0:
                raise DomainError(f"stage {s.label!r} has factor {s.factor} outside (0, 1]")
            run *= s.factor
            if not math.isclose(run, s.running_rate, rel_tol=1e-9):
                raise DomainError(f"stage {s.label!r}: running rate does not match the product of factors")

    def stage(self, label: str) -> BudgetStage:
        for s in self.stages:
            if s.label == label:
                return s
        raise KeyError(label)

    @property
    def twofold_rate(self) -> float:
        return self.stage(self.twofold_stage).running_rate

    @property
    def fourfold_rate(self) -> float:
        return self.stages[-1].running_rate

    @property
    def fourfold_per_hour(self) -> float:
        return self.fourfold_rate * 3600.0

    @property
    def flagged(self) -> list[str]:
        return [s.label for s in self.stages if not s.published]

    def gap_against(self, observed_per_hour: float) -> float:
        """Ratio of the modelled four-fold rate to an observed one."""
        return self.fourfold_per_hour / observed_per_hour


def rate_budget(cfg: ScenarioConfig) -> RateBudget:
    """Multiplicative budget for the configured setup.

    Both sources are taken as identical to source A.  The BSM stages
    follow the SSPD click stream, which triggers the gated APD; the two-fold
    rate is the APD click rate.  Everything after that is per two-fold.
    """
    src, an_a, an_b = cfg.source_a, cfg.analyzer_a, cfg.analyzer_b
    flux = pump_photon_flux(src.pump_power, src.pump_wavelength).value
    raw = raw_pair_rate(src).value
    filt_frac = src.filter.bandwidth_fwhm.value / src.raw_bandwidth.value
    t_couple = src.coupling_transmission.value
    t_filter = src.filter_transmission.value
    # photons per s reaching each BSM port from both sources
    port_rate = 2.0 * 0.5 * raw * filt_frac * t_couple * t_filter
    gate = cfg.bsm2.gate_width.value
    occupancy = -math.expm1(-port_rate * gate * 1e-12)
    lo, hi = cfg.tau_bin
    bin_frac = min(2.0 * (hi - lo) / gate, 1.0)

    rows = [
        ("generation", raw / flux, True, "pairs per pump photon over the full phase-matching bandwidth"),
        ("filtering", filt_frac, True, "filter passband over phase-matching bandwidth"),
        ("coupling (BSM photon)", t_couple, True, ""),
        ("filter insertion (BSM photon)", t_filter, True, ""),
        ("SSPD detection", cfg.bsm1.efficiency.value, True, "two sources x 1/2 port; the two cancel"),
        ("APD gate occupancy", occupancy, False, f"1 - exp(-R_port x {gate / 1000:g} ns gate); gate width assumed"),
        ("APD detection", cfg.bsm2.efficiency.value, True, "two-fold BSM rate"),
        ("cross-source fraction", 0.5, True, "A/B pairs among two-folds"),
        ("fixed-tau bin fraction", bin_frac, False, f"|tau| in [{lo:.0f}, {hi:.0f}] ps over the gate; bin width assumed"),
        ("coupling (outer photons)", t_couple * cfg.source_b.coupling_transmission.value, True, ""),
        ("filter insertion (outer photons)", t_filter * cfg.source_b.filter_transmission.value, True, ""),
        ("analyzer insertion", an_a.insertion_transmission.value * an_b.insertion_transmission.value, True, ""),
        ("analyzer detection", cfg.analyzer_det_a.efficiency.value * cfg.analyzer_det_b.efficiency.value, True, ""),
        ("middle-slot post-selection", 0.25, True, "1/2 per analyzer"),
    ]
    stages, run = [], flux
    for label, f, pub, note in rows:
        run *= f
        stages.append(BudgetStage(label, f, run, pub, note))
    gap = [
        ("stabilisation duty cycle", "time lost to interferometer and source locking; not published"),
        ("APD dead time and afterpulse blanking", "not published; lowers every gated rate"),
        ("analyzer gate timing", "gate alignment and width relative to the BSM trigger; not published"),
        ("coupling and filter drift", "quoted figures are best-case; long runs average lower"),
    ]
    return RateBudget("pump photons", flux, stages, "APD detection", gap)


def format_budget(b: RateBudget) -> list[str]:
    lines = [f"{'stage':36s} {'factor':>12s} {'rate /s':>12s}  flag"]
    lines.append(f"{b.initial_label:36s} {'':>12s} {b.initial_rate:12.4g}")
    for s in b.stages:
        flag = "assumed" if not s.published else ""
        lines.append(f"{s.label:36s} {s.factor:12.4g} {s.running_rate:12.4g}  {flag}")
    lines.append(f"two-fold BSM rate: {b.twofold_rate:.4g} /s")
    lines.append(f"four-fold rate: {b.fourfold_per_hour:.4g} /h")
    return lines
