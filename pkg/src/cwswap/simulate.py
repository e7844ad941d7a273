"""End-to-end scans in two modes.

``full_stream`` follows every emitted pair through loss, the BSM beam
splitter, the detectors and the TDC.  ``conditioned`` draws only candidate
post-selected events (a cross-port BSM pair inside the analysis range with
every photon detected) and attaches to each the statistical weight
``1 / T_eq``, the equivalent exposure in seconds.  Both modes write a
timestamp table and share one analysis path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import analysis as an
from .config import ScenarioConfig
from .detection import PHOTON, DetectionRecords, TimestampTable, detect, make_gates, tdc_record
from .errors import DomainError, FitError, MemoryBudgetError
from .interference import (
    SIGNS,
    dip_fwhm,
    dip_visibility,
    effective_visibility,
    hom_cross_density,
    middle_slot_table,
    swapped_pair_probabilities,
)
from .rng import stream
from .source import LossChannel, PairStream, apply_loss, sample_pair_emissions
from .units import Duration, filtered_pair_rate

ANALYZER_IDS = {"a": ("a+", "a-"), "b": ("b+", "b-")}
# BSM photons further apart than this are treated as independent at the beam splitter
CLUSTER_SIGMAS = 6.0
# spacing of synthetic events in conditioned tables; far beyond every window and gate
EVENT_SPACING_PS = 1_000_000
# candidate delays extend this many combined jitter sigmas past the analysis range
TAU_MARGIN_SIGMAS = 6.0


# --- results -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StreamResult:
    table: TimestampTable
    duration_ps: float
    n_pairs: dict
    n_projected: int


@dataclass(frozen=True, eq=False)
class HomScanResult:
    mode: str
    histogram: an.Histogram
    fit: an.DipFit | None
    expected_visibility: float
    expected_fwhm: float
    n_events: int
    exposure_s: float
    table: TimestampTable
    fit_error: str | None = None

    @property
    def weighted_events(self) -> float:
        return float(self.histogram.counts.sum())


@dataclass(frozen=True, eq=False)
class SettingResult:
    alpha: float
    beta: float
    counts: tuple[int, int, int, int]
    threefold: int
    exposure_s: float
    threefold_exposure_s: float
    table: TimestampTable


@dataclass(frozen=True, eq=False)
class SwapScanResult:
    mode: str
    settings: list[SettingResult]
    samples: list[an.FringeSample]
    fit: an.FringeFit
    configured_visibility: float
    werner: an.WernerVerdict
    threefold_rates: np.ndarray
    threefold_variances: np.ndarray
    flatness_chi2: float
    flatness_p: float
    fourfold_rate_per_s: float = field(default=0.0)


# --- full stream ---------------------------------------------------------------


def expected_pairs(cfg: ScenarioConfig, duration: Duration) -> float:
    ra, rb = cfg.pair_rates
    return ra * duration + rb * duration


def check_memory_budget(cfg: ScenarioConfig, duration: Duration):
    n = expected_pairs(cfg, duration)
    if n > cfg.run.max_pairs:
        ra, rb = cfg.pair_rates
        t_max = cfg.run.max_pairs / (ra.value + rb.value)
        raise MemoryBudgetError(
            f"{duration.to('s'):.4g} s at these rates means ~{n:.3g} pairs, above the budget of "
            f"{cfg.run.max_pairs:.3g}; use a duration of at most {t_max:.4g} s or raise run.max_pairs"
        )


def _lossy_stream(cfg: ScenarioConfig, sid: str, duration: Duration, labels) -> PairStream:
    seed = cfg.run.master_seed
    spec = cfg.source_a if sid == "A" else cfg.source_b
    ana = cfg.analyzer_a if sid == "A" else cfg.analyzer_b
    st = sample_pair_emissions(filtered_pair_rate(spec), duration, stream(seed, *labels, "source", sid), sid)
    for ch, which in (
        (LossChannel("coupling", spec.coupling_transmission), "both"),
        (LossChannel("filter", spec.filter_transmission), "both"),
        (LossChannel("analyzer", ana.insertion_transmission), "outer"),
    ):
        st = apply_loss(st, ch, which, stream(seed, *labels, "loss", sid, ch.label))
    return st


def _beam_splitter(cfg, t, src, rng) -> np.ndarray:
    """Output port (1 or 2) of each time-sorted BSM photon."""
    n = len(t)
    port = rng.integers(1, 3, size=n)
    if n < 2:
        return port
    close = np.diff(t) < CLUSTER_SIGMAS * cfg.overlap.sigma_c.value
    prev = np.concatenate([[False], close[:-1]])
    nxt = np.concatenate([close[1:], [False]])
    first = np.flatnonzero(close & ~prev & ~nxt)  # isolated two-photon clusters
    first = first[src[first] != src[first + 1]]
    p_cross = hom_cross_density(t[first + 1] - t[first], cfg.overlap)
    cross = rng.random(len(first)) < p_cross
    port[first + 1] = np.where(cross, 3 - port[first], port[first])
    return port


def _projected_pairs(cfg, t, src, det, window):
    """Detected A/B photon pairs with ``| |dt| - d | <= window``, matched one to one."""
    d = cfg.analyzer_a.path_difference.value
    ia = np.flatnonzero(det & (src == 0))
    ib = np.flatnonzero(det & (src == 1))
    tb = t[ib]
    used_b = np.zeros(len(ib), dtype=bool)
    pairs = []
    for sign in (+1.0, -1.0):
        lo = np.searchsorted(tb, t[ia] + sign * d - window, side="left")
        hi = np.searchsorted(tb, t[ia] + sign * d + window, side="right")
        for k in np.flatnonzero(hi > lo).tolist():
            for m in range(lo[k], hi[k]):
                if not used_b[m]:
                    used_b[m] = True
                    pairs.append((ia[k], ib[m]))
                    break
    # an A photon may have matched on both sides; keep its first match only
    seen, out = set(), []
    for a, b in pairs:
        if a not in seen:
            seen.add(a)
            out.append((a, b))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def _folded_slot_distribution(probs: dict, a_first: bool):
    """Outcome list ``(i, j, slot_a, slot_b)`` and probabilities for a known emission order.

    The swapped-pair table is symmetric in which source fired first; slot
    pairs unreachable for the given order are folded onto their mirror.
    """
    allowed_a = (0, 1) if a_first else (1, 2)
    acc: dict = {}
    for (i, j, sa, sb), p in probs.items():
        if p == 0.0:
            continue
        if sa not in allowed_a:
            sa, sb = sb, sa
        acc[(i, j, sa, sb)] = acc.get((i, j, sa, sb), 0.0) + p
    keys = sorted(acc)
    return keys, np.array([acc[k] for k in keys])


def _analyzer_detectors(cfg, side):
    model = cfg.analyzer_det_a if side == "a" else cfg.analyzer_det_b
    plus, minus = ANALYZER_IDS[side]
    return replace(model, id=plus), replace(model, id=minus)


def simulate_stream(
    cfg: ScenarioConfig, alpha: float, beta: float, duration: Duration, labels: Sequence = (), visibility=None
) -> StreamResult:
    """Timestamp table of one full-stream run at analyzer phases ``alpha``, ``beta``.

    ``visibility`` overrides the swap visibility imprinted on projected
    pairs; by default it is the temporal (jitter-limited) overlap, with
    multi-pair dilution left to emerge from the stream itself.
    """
    check_memory_budget(cfg, duration)
    seed = cfg.run.master_seed
    T = duration.value
    V = cfg.temporal_visibility() if visibility is None else float(visibility)
    ana = {"a": replace(cfg.analyzer_a, phase=alpha), "b": replace(cfg.analyzer_b, phase=beta)}
    sa = _lossy_stream(cfg, "A", duration, labels)
    sb = _lossy_stream(cfg, "B", duration, labels)

    # beam splitter
    ka, kb = np.flatnonzero(sa.bsm_alive), np.flatnonzero(sb.bsm_alive)
    t = np.concatenate([sa.emission_time[ka], sb.emission_time[kb]])
    src = np.concatenate([np.zeros(len(ka), np.int8), np.ones(len(kb), np.int8)])
    pidx = np.concatenate([ka, kb])
    order = np.argsort(t, kind="stable")
    t, src, pidx = t[order], src[order], pidx[order]
    port = _beam_splitter(cfg, t, src, stream(seed, *labels, "beamsplitter"))

    # BSM detectors: free-running SSPD triggers the gated APD
    on1, on2 = np.flatnonzero(port == 1), np.flatnonzero(port == 2)
    rec1 = detect(t[on1], cfg.bsm1, rng_seed=stream(seed, *labels, "det", "bsm1"), live_span=(0.0, T))
    gates2 = make_gates(rec1.recorded_time, cfg.bsm2.gate_width, cfg.bsm2.gate_delay)
    rec2 = detect(t[on2], cfg.bsm2, gates2, rng_seed=stream(seed, *labels, "det", "bsm2"))
    det = np.zeros(len(t), dtype=bool)
    for rec, on in ((rec1, on1), (rec2, on2)):
        ph = rec.photon_index[rec.origin == PHOTON]
        det[on[ph]] = True

    # projection of the outer photons onto the swapped state
    w = cfg.interference_window
    pairs = _projected_pairs(cfg, t, src, det, w)
    if len(pairs):
        pa, pb = pidx[pairs[:, 0]], pidx[pairs[:, 1]]
        ok = sa.outer_alive[pa] & sb.outer_alive[pb]
        pairs, pa, pb = pairs[ok], pa[ok], pb[ok]
    else:
        pa = pb = np.zeros(0, dtype=np.int64)

    rng = stream(seed, *labels, "analyzers")
    arm = {"a": rng.integers(0, 2, size=len(sa)), "b": rng.integers(0, 2, size=len(sb))}
    sign = {"a": rng.choice(SIGNS, size=len(sa)), "b": rng.choice(SIGNS, size=len(sb))}
    if len(pairs):
        dt = t[pairs[:, 1]] - t[pairs[:, 0]]  # t_B - t_A
        veff = effective_visibility(dt, ana["a"], ana["b"], V, w)
        a_first = dt > 0
        u = rng.random(len(pairs))
        for af in (True, False):
            for v in np.unique(veff).tolist():
                sel = np.flatnonzero((a_first == af) & (veff == v))
                if len(sel) == 0:
                    continue
                probs = swapped_pair_probabilities(abs(dt[sel[0]]), ana["a"], ana["b"], v, None)
                keys, p = _folded_slot_distribution(probs, af)
                pick = np.searchsorted(np.cumsum(p) / p.sum(), u[sel], side="right")
                pick = np.minimum(pick, len(keys) - 1)
                out = np.array(keys)[pick]
                sign["a"][pa[sel]] = out[:, 0]
                sign["b"][pb[sel]] = out[:, 1]
                # slot -> arm: the earlier source's photon reaches slots 0/1, the later one 1/2
                arm["a"][pa[sel]] = out[:, 2] - (0 if af else 1)
                arm["b"][pb[sel]] = out[:, 3] - (1 if af else 0)

    gates = make_gates(rec2.recorded_time, cfg.analyzer_det_a.gate_width, cfg.analyzer_det_a.gate_delay)
    gates_b = make_gates(rec2.recorded_time, cfg.analyzer_det_b.gate_width, cfg.analyzer_det_b.gate_delay)
    records: list[DetectionRecords] = [rec1, rec2]
    for side, st, g in (("a", sa, gates), ("b", sb, gates_b)):
        d = ana[side].path_difference.value
        alive = st.outer_alive
        times = st.emission_time + arm[side] * d
        for model, s in zip(_analyzer_detectors(cfg, side), SIGNS):
            m = alive & (sign[side] == s)
            arr = np.sort(times[m])
            records.append(detect(arr, model, g, rng_seed=stream(seed, *labels, "det", model.id)))
    table = tdc_record(records, cfg.analysis.tdc_resolution)
    return StreamResult(table, T, {"A": len(sa), "B": len(sb)}, int(len(pairs)))


# --- conditioned ensemble --------------------------------------------------------


def _bsm_jitter(cfg) -> float:
    return math.sqrt(sum(s * s for s in cfg.bsm_jitter_sigmas))


def _bsm_factor(cfg) -> float:
    """Rate of (A, B) photon pairs per ps of delay range, both BSM photons detected, cross-port included."""
    ra, rb = cfg.pair_rates
    ta = cfg.source_a.photon_transmission.value
    tb = cfg.source_b.photon_transmission.value
    # per s: R_A R_B [1/s^2] x 1 ps = 1e-12 s
    return ra.value * rb.value * 1e-12 * ta * tb * 0.5 * cfg.bsm1.efficiency.value * cfg.bsm2.efficiency.value


def _outer_factor(cfg, side) -> float:
    spec = cfg.source_a if side == "a" else cfg.source_b
    ana = cfg.analyzer_a if side == "a" else cfg.analyzer_b
    det = cfg.analyzer_det_a if side == "a" else cfg.analyzer_det_b
    return spec.photon_transmission.value * ana.insertion_transmission.value * det.efficiency.value


def _record(det_id, true_t, rec_t) -> DetectionRecords:
    order = np.argsort(rec_t, kind="stable")
    n = len(rec_t)
    return DetectionRecords(det_id, true_t[order], rec_t[order], np.zeros(n, np.int8), np.arange(n)[order])


def _mean_acceptance(cfg, lo, hi, n=2001) -> float:
    x = np.linspace(lo, hi, n)
    return float(np.mean(2.0 * hom_cross_density(x, cfg.overlap)))


def _candidate_bsm(cfg, rng, rate_per_ps, lo, hi, target):
    """Accepted cross-port BSM candidates with true |delay| in ``[lo, hi]``.

    Returns ``(T_eq_s, t_a, t_b, a_to_port1)`` with event origins spaced
    far apart; ``T_eq_s`` is the exposure the sample stands for.
    """
    width = hi - lo
    if width <= 0 or rate_per_ps <= 0:
        raise DomainError(
            f"conditioned sampling has an empty acceptance region (delay range {lo:.4g}..{hi:.4g} ps, "
            f"candidate rate {rate_per_ps:.3g} per ps per s); check efficiencies, bin and window settings"
        )
    cand_rate = rate_per_ps * 2.0 * width  # per s, both signs of t_B - t_A
    acc = _mean_acceptance(cfg, lo, hi)
    if acc <= 0:
        raise DomainError("conditioned sampling: beam-splitter acceptance is zero over the delay range")
    t_eq = target / (cand_rate * acc)
    n = int(rng.poisson(cand_rate * t_eq))
    mag = rng.uniform(lo, hi, size=n)
    dt = np.where(rng.random(n) < 0.5, mag, -mag)
    keep = rng.random(n) < 2.0 * hom_cross_density(dt, cfg.overlap)
    dt = dt[keep]
    a_port1 = rng.random(len(dt)) < 0.5
    origin = (np.arange(len(dt), dtype=float) + 1.0) * EVENT_SPACING_PS
    t_a = origin - np.minimum(dt, 0.0)
    t_b = t_a + dt
    return t_eq, t_a, t_b, a_port1


def _bsm_records(cfg, rng, t_a, t_b, a_port1):
    p1 = np.where(a_port1, t_a, t_b)
    p2 = np.where(a_port1, t_b, t_a)
    r1 = p1 + rng.normal(0.0, cfg.bsm1.jitter_sigma, size=len(p1))
    r2 = p2 + rng.normal(0.0, cfg.bsm2.jitter_sigma, size=len(p2))
    return [_record(cfg.bsm1.id, p1, r1), _record(cfg.bsm2.id, p2, r2)]


def _outer_records(cfg, rng, side, t_true, signs):
    model = cfg.analyzer_det_a if side == "a" else cfg.analyzer_det_b
    rec_t = t_true + rng.normal(0.0, model.jitter_sigma, size=len(t_true))
    out = []
    for det_id, s in zip(ANALYZER_IDS[side], SIGNS):
        m = signs == s
        out.append(_record(det_id, t_true[m], rec_t[m]))
    return out


def _swap_range(cfg):
    lo, hi = cfg.tau_bin
    m = TAU_MARGIN_SIGMAS * _bsm_jitter(cfg)
    return max(lo - m, 0.0), hi + m


def conditioned_swap_setting(cfg: ScenarioConfig, alpha: float, beta: float, visibility: float, labels=()):
    """Four-fold and three-fold strata of one phase setting (conditioned mode)."""
    seed = cfg.run.master_seed
    target = cfg.run.target_event_count
    lo, hi = _swap_range(cfg)
    ana_a = replace(cfg.analyzer_a, phase=alpha)
    ana_b = replace(cfg.analyzer_b, phase=beta)
    w = cfg.interference_window
    base = _bsm_factor(cfg)

    # four-fold stratum: both outer photons detected in the middle slot
    rng = stream(seed, *labels, "conditioned", "fourfold")
    rate4 = base * _outer_factor(cfg, "a") * _outer_factor(cfg, "b") * 0.25
    t_eq4, t_a, t_b, a1 = _candidate_bsm(cfg, rng, rate4, lo, hi, target)
    late = np.maximum(t_a, t_b)
    veff = effective_visibility(t_b - t_a, ana_a, ana_b, visibility, w)
    u = rng.random(len(late))
    i_sign = np.empty(len(late), dtype=np.int64)
    j_sign = np.empty(len(late), dtype=np.int64)
    for v in np.unique(veff).tolist():
        sel = np.flatnonzero(veff == v)
        p = middle_slot_table(v, alpha, beta).ravel()  # (+,+), (+,-), (-,+), (-,-)
        k = np.minimum(np.searchsorted(np.cumsum(p), u[sel], side="right"), 3)
        i_sign[sel] = np.where(k < 2, 1, -1)
        j_sign[sel] = np.where(k % 2 == 0, 1, -1)
    records = _bsm_records(cfg, rng, t_a, t_b, a1)
    records += _outer_records(cfg, rng, "a", late, i_sign)
    records += _outer_records(cfg, rng, "b", late, j_sign)
    table4 = tdc_record(records, cfg.analysis.tdc_resolution)
    ev4 = _analyse_swap(cfg, table4)

    # three-fold stratum: side b detected in the middle slot, side a not required
    rng3 = stream(seed, *labels, "conditioned", "threefold")
    rate3 = base * _outer_factor(cfg, "b") * 0.5
    t_eq3, t_a3, t_b3, a13 = _candidate_bsm(cfg, rng3, rate3, lo, hi, target)
    probs = swapped_pair_probabilities(cfg.analyzer_a.path_difference.value, ana_a, ana_b, visibility, None)
    p_plus = sum(p for (i, j, s_a, s_b), p in probs.items() if s_b == 1 and j == 1)
    p_mid = sum(p for (i, j, s_a, s_b), p in probs.items() if s_b == 1)
    j3 = np.where(rng3.random(len(t_a3)) < p_plus / p_mid, 1, -1)
    rec3 = _bsm_records(cfg, rng3, t_a3, t_b3, a13) + _outer_records(cfg, rng3, "b", np.maximum(t_a3, t_b3), j3)
    table3 = tdc_record(rec3, cfg.analysis.tdc_resolution)
    ev3 = _analyse_swap(cfg, table3)
    return ev4, t_eq4, ev3, t_eq3, table4


def _analyse_swap(cfg, table):
    return an.find_coincidences(
        table,
        cfg.analysis.window_bsm.value,
        cfg.analysis.window_outer.value,
        outer_mode="middle",
        eligible=_eligible(cfg),
    )


def _eligible(cfg):
    lo, hi = cfg.tau_bin
    return max(lo, cfg.bunching_threshold), hi


def _analyse_hom(cfg, table):
    return an.find_coincidences(
        table,
        cfg.analysis.window_bsm.value,
        cfg.analysis.window_outer.value,
        analyzer_delay=max(cfg.analyzer_a.path_difference.value, cfg.analyzer_b.path_difference.value),
        outer_mode="any",
    )


# --- scans ---------------------------------------------------------------------


def _summarise_swap(cfg, mode, settings: list[SettingResult], configured) -> SwapScanResult:
    samples = []
    for s in settings:
        if sum(s.counts) == 0:
            raise DomainError(f"no four-fold events at beta={s.beta:.4f}; increase duration or target_event_count")
        samples.append(an.FringeSample.from_counts(s.alpha, s.beta, *s.counts))
    fit = an.fit_fringe(samples)
    rates = np.array([s.threefold / s.threefold_exposure_s for s in settings])
    var = np.array([max(s.threefold, 1) / s.threefold_exposure_s**2 for s in settings])
    chi2, p = an.threefold_flatness(rates, var)
    four = float(np.mean([sum(s.counts) / s.exposure_s for s in settings]))
    return SwapScanResult(
        mode, settings, samples, fit, configured, an.werner_entanglement_check(min(max(fit.visibility, 0.0), 1.0)),
        rates, var, chi2, p, four,
    )


def swap_scan(cfg: ScenarioConfig, mode: str | None = None, visibility: float | None = None) -> SwapScanResult:
    """Fringe scan over ``cfg.run.phase_settings`` values of the b-side phase."""
    mode = mode or cfg.run.mode
    settings = []
    if mode == "conditioned":
        configured = cfg.swap_visibility() if visibility is None else float(visibility)
        for k, (a, b) in enumerate(cfg.phase_settings()):
            ev4, teq4, ev3, teq3, table = conditioned_swap_setting(cfg, a, b, configured, labels=("swap", k))
            counts = an.fringe_counts(ev4)
            settings.append(SettingResult(a, b, counts, an.threefold_count(ev3), teq4, teq3, table))
    elif mode == "full_stream":
        configured = cfg.temporal_visibility() if visibility is None else float(visibility)
        T = cfg.run.duration
        for k, (a, b) in enumerate(cfg.phase_settings()):
            res = simulate_stream(cfg, a, b, T, labels=("swap", k), visibility=visibility)
            ev = _analyse_swap(cfg, res.table)
            t_s = T.to("s")
            settings.append(SettingResult(a, b, an.fringe_counts(ev), an.threefold_count(ev), t_s, t_s, res.table))
    else:
        raise DomainError(f"unknown mode {mode!r}")
    return _summarise_swap(cfg, mode, settings, configured)


def _hom_range(cfg):
    span = cfg.analysis.hom_span.value + cfg.analysis.hom_bin_width.value / 2.0
    return 0.0, span + TAU_MARGIN_SIGMAS * _bsm_jitter(cfg)


def conditioned_hom(cfg: ScenarioConfig, labels=()):
    seed = cfg.run.master_seed
    rng = stream(seed, *labels, "conditioned", "hom")
    lo, hi = _hom_range(cfg)
    rate = _bsm_factor(cfg) * _outer_factor(cfg, "a") * _outer_factor(cfg, "b")
    t_eq, t_a, t_b, a1 = _candidate_bsm(cfg, rng, rate, lo, hi, cfg.run.target_event_count)
    n = len(t_a)
    records = _bsm_records(cfg, rng, t_a, t_b, a1)
    for side, t0, ana in (("a", t_a, cfg.analyzer_a), ("b", t_b, cfg.analyzer_b)):
        arm = rng.integers(0, 2, size=n)
        signs = rng.choice(SIGNS, size=n)
        records += _outer_records(cfg, rng, side, t0 + arm * ana.path_difference.value, signs)
    return t_eq, tdc_record(records, cfg.analysis.tdc_resolution)


def hom_scan(cfg: ScenarioConfig, mode: str | None = None) -> HomScanResult:
    """BSM delay histogram of four-fold events and its dip fit."""
    mode = mode or cfg.run.mode
    if mode == "conditioned":
        t_eq, table = conditioned_hom(cfg, labels=("hom",))
    elif mode == "full_stream":
        res = simulate_stream(cfg, cfg.analyzer_a.phase, cfg.analyzer_b.phase, cfg.run.duration, labels=("hom",))
        t_eq, table = cfg.run.duration.to("s"), res.table
    else:
        raise DomainError(f"unknown mode {mode!r}")
    events = _analyse_hom(cfg, table)
    hist = an.hom_histogram(events, cfg.analysis.hom_bin_width.value, cfg.analysis.hom_span.value)
    exp_v = dip_visibility(cfg.overlap, cfg.bsm_jitter_sigmas)
    exp_w = dip_fwhm(cfg.overlap, cfg.bsm_jitter_sigmas)
    try:
        fit, err = an.fit_dip(hist), None
    except FitError as e:
        fit, err = None, str(e)
    n4 = int(sum(1 for e in events if e.fold >= 4))
    return HomScanResult(mode, hist, fit, exp_v, exp_w, n4, t_eq, table, err)


def run_full_stream(cfg: ScenarioConfig, scan: str = "swap"):
    if cfg.run.mode != "full_stream":
        raise DomainError("run_full_stream needs run.mode = 'full_stream'")
    return swap_scan(cfg, "full_stream") if scan == "swap" else hom_scan(cfg, "full_stream")


def run_conditioned(cfg: ScenarioConfig, scan: str = "swap"):
    if cfg.run.mode != "conditioned":
        raise DomainError("run_conditioned needs run.mode = 'conditioned'")
    return swap_scan(cfg, "conditioned") if scan == "swap" else hom_scan(cfg, "conditioned")


def bsm_twofold_rate(cfg: ScenarioConfig, duration: Duration | None = None, labels=("twofold",)) -> tuple[float, int]:
    """Full-stream two-fold BSM rate (per s) and the raw count behind it."""
    T = cfg.run.duration if duration is None else duration
    res = simulate_stream(cfg, cfg.analyzer_a.phase, cfg.analyzer_b.phase, T, labels=labels)
    ev = an.find_coincidences(res.table, cfg.analysis.window_bsm.value, cfg.analysis.window_outer.value)
    return len(ev) / T.to("s"), len(ev)
