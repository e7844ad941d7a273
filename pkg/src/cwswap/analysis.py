"""From timestamp tables to dip, fringe and entanglement figures."""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize, stats

from .detection import TimestampTable
from .errors import DomainError, FitError
from .units import FWHM_PER_SIGMA

DEFAULT_ROLES = {
    "bsm1": "bsm1",
    "bsm2": "bsm2",
    "a+": "a+",
    "a-": "a-",
    "b+": "b+",
    "b-": "b-",
}

# damped least squares settings shared by both fits
FIT_XTOL = 1e-9
FIT_MAX_NFEV = 200


@dataclass(frozen=True)
class CoincidenceEvent:
    bsm_click_times: tuple[int, int]
    bsm_tau: int
    analyzer_clicks: Mapping[str, tuple[int, int]] = field(default_factory=dict)  # side -> (sign, time)
    fold: int = 2


def _side_stream(table: TimestampTable, plus_id: str, minus_id: str):
    sel = (table.detector_id == plus_id) | (table.detector_id == minus_id)
    t = table.time_ps[sel]
    sign = np.where(table.detector_id[sel] == plus_id, 1, -1)
    return t.tolist(), sign.tolist()


def _earliest_unused(times: list, used: list, lo_t, hi_t) -> int:
    k = bisect.bisect_left(times, lo_t)
    end = bisect.bisect_right(times, hi_t)
    while k < end and used[k]:
        k += 1
    return k if k < end else -1


def find_coincidences(
    table: TimestampTable,
    window_bsm: float,
    window_outer: float,
    analyzer_delay: float = 0.0,
    outer_mode: str = "middle",
    eligible: tuple[float, float] | None = None,
    roles: Mapping[str, str] = DEFAULT_ROLES,
) -> list[CoincidenceEvent]:
    """Build 2-, 3- and 4-fold events in one pass over the BSM clicks.

    Each port-1 BSM click is paired with the earliest unused port-2 click
    within ``window_bsm``.  Analyzer clicks are then attached per side,
    again earliest unused, inside ``window_outer`` of the expected arrival:
    the later BSM time for ``outer_mode='middle'`` (the interfering slot),
    or anywhere from the early slot to the late slot for ``'any'``.
    ``eligible`` restricts ``|tau|`` of emitted events; clicks of a
    non-eligible BSM pair are still consumed.
    """
    if not table.is_sorted():
        raise DomainError("timestamp table must be sorted by time")
    if outer_mode not in ("middle", "any"):
        raise DomainError(f"unknown outer mode {outer_mode!r}")
    t1 = table.for_detector(roles["bsm1"])
    t2_arr = table.for_detector(roles["bsm2"])
    t2 = t2_arr.tolist()
    sides = {
        "a": _side_stream(table, roles["a+"], roles["a-"]),
        "b": _side_stream(table, roles["b+"], roles["b-"]),
    }
    used2 = [False] * len(t2)
    used_out = {s: [False] * len(v[0]) for s, v in sides.items()}

    lo = np.searchsorted(t2_arr, t1 - window_bsm, side="left")
    hi = np.searchsorted(t2_arr, t1 + window_bsm, side="right")
    events = []
    for k in np.flatnonzero(hi > lo).tolist():
        a = int(t1[k])
        j = _earliest_unused(t2, used2, a - window_bsm, a + window_bsm)
        if j < 0:
            continue
        used2[j] = True
        b = t2[j]
        tau = b - a
        if eligible is not None and not (eligible[0] <= abs(tau) <= eligible[1]):
            continue
        early, late = min(a, b), max(a, b)
        if outer_mode == "middle":
            w_lo, w_hi = late - window_outer, late + window_outer
        else:
            w_lo, w_hi = early - window_outer, late + analyzer_delay + window_outer
        clicks = {}
        for side, (times, signs) in sides.items():
            m = _earliest_unused(times, used_out[side], w_lo, w_hi)
            if m >= 0:
                used_out[side][m] = True
                clicks[side] = (signs[m], times[m])
        events.append(CoincidenceEvent((a, b), tau, clicks, 2 + len(clicks)))
    return events


# --- HOM dip -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Histogram:
    centers: np.ndarray
    counts: np.ndarray
    bin_width: float

    @property
    def edges(self) -> np.ndarray:
        return np.append(self.centers - self.bin_width / 2, self.centers[-1] + self.bin_width / 2)

    def write_csv(self, path, header_lines: Sequence[str] = ()):
        path = Path(path)
        with path.open("w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            wr = csv.writer(fh)
            wr.writerow(["tau_bin_ps", "count"])
            for c, n in zip(self.centers.tolist(), self.counts.tolist()):
                wr.writerow([repr(float(c)), int(n) if float(n).is_integer() else repr(float(n))])
        return path


def histogram_taus(taus, bin_width: float, span: float) -> Histogram:
    if bin_width <= 0:
        raise DomainError("bin width must be positive")
    n = int(round(span / bin_width))
    centers = np.arange(-n, n + 1) * bin_width
    edges = np.append(centers - bin_width / 2, centers[-1] + bin_width / 2)
    counts, _ = np.histogram(np.asarray(taus, dtype=float), bins=edges)
    return Histogram(centers, counts, bin_width)


def hom_histogram(events: Sequence[CoincidenceEvent], bin_width: float, span: float, min_fold: int = 4) -> Histogram:
    """Counts of events (``fold >= min_fold``) per BSM delay bin over ``[-span, span]``."""
    taus = [e.bsm_tau for e in events if e.fold >= min_fold]
    return histogram_taus(taus, bin_width, span)


@dataclass(frozen=True)
class DipFit:
    visibility: float
    fwhm: float
    baseline: float
    sigma_visibility: float
    sigma_fwhm: float
    sigma_baseline: float
    chi2: float
    dof: int


def _dip_model(p, x):
    b, v, s = p
    g = np.exp(-(x * x) / (2 * s * s))
    return b * (1 - v * g), g


def _deviance_residuals(m, y):
    """Signed square roots of the Poisson deviance terms, and ``d r / d m``."""
    m = np.maximum(m, 1e-12)
    with np.errstate(divide="ignore", invalid="ignore"):
        ylog = np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0) / m), 0.0)
    dev = np.maximum(2.0 * (m - y + ylog), 0.0)
    root = np.sqrt(dev)
    r = np.sign(y - m) * root
    small = root < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        drdm = np.where(small, -1.0 / np.sqrt(m), np.sign(y - m) * (1.0 - y / m) / np.where(small, 1.0, root))
    return r, drdm


def fit_dip(hist: Histogram) -> DipFit:
    """Poisson maximum-likelihood fit of ``B (1 - V exp(-tau^2 / 2 s^2))``.

    Minimises the Poisson deviance, which stays unbiased at low counts per
    bin where variance-from-data weighting deepens the fitted dip.
    """
    x = hist.centers.astype(float)
    y = hist.counts.astype(float)
    if np.count_nonzero(y) < 7:
        raise FitError("dip fit needs at least 7 non-empty bins")
    n_wing = max(1, len(x) // 5)
    wings = np.concatenate([y[:n_wing], y[-n_wing:]])
    if wings.sum() <= 0:
        raise FitError("dip histogram has empty wings")

    b0 = wings.mean()
    core = y[np.abs(x) <= max(hist.bin_width, 0.05 * x.max())]
    v0 = float(np.clip(1 - core.mean() / b0, 0.05, 0.95))
    s0 = x.max() / 6.0

    def model_jac(p):
        b, v, s = p
        m, g = _dip_model(p, x)
        return m, np.column_stack([(1 - v * g), -b * g, -b * v * g * (x * x) / s**3])

    def resid(p):
        return _deviance_residuals(_dip_model(p, x)[0], y)[0]

    def jac(p):
        m, jm = model_jac(p)
        return _deviance_residuals(m, y)[1][:, None] * jm

    # bounded trust region: a flat histogram leaves the width unconstrained
    lo = [1e-9, -1.0, hist.bin_width / 4]
    hi = [np.inf, 1.0, 2 * x.max()]
    res = optimize.least_squares(
        resid, [b0, v0, s0], jac=jac, method="trf", bounds=(lo, hi), xtol=FIT_XTOL, max_nfev=FIT_MAX_NFEV
    )
    b, v, s = res.x
    m, jm = model_jac(res.x)
    m = np.maximum(m, 1e-12)
    fisher = jm.T @ (jm / m[:, None])
    cov = np.linalg.pinv(fisher)
    err = np.sqrt(np.clip(np.diag(cov), 0, None))
    chi2 = float(np.sum((y - m) ** 2 / m))
    return DipFit(float(v), float(FWHM_PER_SIGMA * s), float(b), float(err[1]), FWHM_PER_SIGMA * float(err[2]),
                  float(err[0]), chi2, len(x) - 3)


# --- correlation coefficient and fringes -----------------------------------------


def correlation_coefficient(r_pp, r_pm, r_mp, r_mm) -> tuple[float, float]:
    """``E = (R++ - R+- - R-+ + R--) / sum`` with Poisson-propagated sigma."""
    counts = (r_pp, r_pm, r_mp, r_mm)
    if any(c < 0 for c in counts):
        raise DomainError("counts must be non-negative")
    total = sum(counts)
    if total == 0:
        raise DomainError("correlation coefficient undefined for all-zero counts")
    same, diff = r_pp + r_mm, r_pm + r_mp
    if all(float(c).is_integer() for c in counts):
        e = float(Fraction(int(same) - int(diff), int(total)))
    else:
        e = (same - diff) / total
    sigma = 2.0 * math.sqrt(same * diff / total**3)
    return e, sigma


@dataclass(frozen=True)
class FringeSample:
    alpha: float
    beta: float
    R_pp: float
    R_pm: float
    R_mp: float
    R_mm: float
    E: float
    sigma_E: float

    @classmethod
    def from_counts(cls, alpha, beta, r_pp, r_pm, r_mp, r_mm) -> "FringeSample":
        e, s = correlation_coefficient(r_pp, r_pm, r_mp, r_mm)
        return cls(alpha, beta, r_pp, r_pm, r_mp, r_mm, e, s)

    @classmethod
    def from_value(cls, alpha, beta, e, sigma_e=0.0) -> "FringeSample":
        return cls(alpha, beta, 0, 0, 0, 0, float(e), float(sigma_e))

    def __post_init__(self):
        if not -1.0 - 1e-12 <= self.E <= 1.0 + 1e-12:
            raise DomainError("E must lie in [-1, 1]")


def fringe_counts(events: Sequence[CoincidenceEvent]) -> tuple[int, int, int, int]:
    c = {(1, 1): 0, (1, -1): 0, (-1, 1): 0, (-1, -1): 0}
    for e in events:
        if e.fold == 4:
            c[(e.analyzer_clicks["a"][0], e.analyzer_clicks["b"][0])] += 1
    return c[(1, 1)], c[(1, -1)], c[(-1, 1)], c[(-1, -1)]


def threefold_count(events: Sequence[CoincidenceEvent], side: str = "b", sign: int = 1) -> int:
    return sum(1 for e in events if side in e.analyzer_clicks and e.analyzer_clicks[side][0] == sign)


@dataclass(frozen=True)
class FringeFit:
    visibility: float
    phase_offset: float
    sigma_visibility: float
    sigma_phase: float
    residual_rms: float
    chi2: float
    dof: int


def fit_fringe(samples: Sequence[FringeSample]) -> FringeFit:
    """Least-squares ``E = V cos(alpha - beta + phi0)`` with ``V >= 0``.

    Samples with counts are weighted by the model variance ``(1 - E^2) / N``,
    refreshed until the weights settle.  Weighting by the per-sample
    ``sigma_E`` instead favours settings whose |E| fluctuated up and biases V
    high when counts per setting are small.  Samples without counts use
    their ``sigma_E`` if all are positive, else equal weights.
    """
    d = np.array([s.alpha - s.beta for s in samples], dtype=float)
    if len(np.unique(np.round(np.mod(d, 2 * np.pi), 12))) < 5:
        raise FitError("fringe fit needs at least 5 distinct phase settings")
    y = np.array([s.E for s in samples], dtype=float)
    n = np.array([s.R_pp + s.R_pm + s.R_mp + s.R_mm for s in samples], dtype=float)
    sig = np.array([s.sigma_E for s in samples], dtype=float)
    from_counts = bool(np.all(n > 0))
    weighted = from_counts or bool(np.all(sig > 0))

    def weights(v, phi):
        if from_counts:
            e = v * np.cos(d + phi)
            return np.sqrt(n / np.maximum(1.0 - e * e, 1.0 / n))
        return 1.0 / sig if weighted else np.ones_like(y)

    def lin_start(w):
        # the model is linear in (V cos phi0, V sin phi0)
        A = np.column_stack([np.cos(d), -np.sin(d)]) * w[:, None]
        (ca, sb), *_ = np.linalg.lstsq(A, y * w, rcond=None)
        return math.hypot(ca, sb), math.atan2(sb, ca)

    v, phi = lin_start(np.sqrt(n) if from_counts else weights(0.0, 0.0))
    for _ in range(50):
        w = weights(v, phi)

        def resid(p, w=w):
            return (p[0] * np.cos(d + p[1]) - y) * w

        def jac(p, w=w):
            return np.column_stack([np.cos(d + p[1]), -p[0] * np.sin(d + p[1])]) * w[:, None]

        if v <= 1e-12:
            break
        res = optimize.least_squares(resid, [v, phi], jac=jac, method="lm", xtol=FIT_XTOL, max_nfev=FIT_MAX_NFEV)
        nv, nphi = res.x
        if nv < 0:
            nv, nphi = -nv, nphi + math.pi
        done = abs(nv - v) <= FIT_XTOL * max(abs(v), 1e-12) and abs(math.remainder(nphi - phi, 2 * math.pi)) <= FIT_XTOL
        v, phi = nv, nphi
        if done or not from_counts:
            break
    phi = math.remainder(phi, 2 * math.pi)
    if abs(phi) < 1e-15:
        phi = 0.0

    w = weights(v, phi)
    r = (v * np.cos(d + phi) - y) * w
    chi2 = float(np.sum(r**2))
    dof = len(y) - 2
    J = np.column_stack([np.cos(d + phi), -v * np.sin(d + phi)]) * w[:, None]
    cov = np.linalg.pinv(J.T @ J)
    if not weighted:
        cov = cov * (chi2 / dof if dof > 0 else 0.0)
    err = np.sqrt(np.clip(np.diag(cov), 0, None))
    rms = float(np.sqrt(np.mean((v * np.cos(d + phi) - y) ** 2)))
    return FringeFit(float(v), float(phi), float(err[0]), float(err[1]), rms, chi2, dof)


WERNER_BOUND = 1.0 / 3.0
PHASE_NOISE_CAVEAT = (
    "Werner-state bound only; when noise is dominated by phase errors from partial "
    "distinguishability at the BSM, entanglement can persist below V = 1/3."
)


@dataclass(frozen=True)
class WernerVerdict:
    verdict: str  # "entangled" | "inconclusive"
    visibility: float
    bound: float = WERNER_BOUND
    caveat: str = PHASE_NOISE_CAVEAT

    @property
    def entangled(self) -> bool:
        return self.verdict == "entangled"


def werner_entanglement_check(visibility: float) -> WernerVerdict:
    if not 0.0 <= visibility <= 1.0:
        raise DomainError(f"visibility must be in [0, 1], got {visibility}")
    return WernerVerdict("entangled" if visibility > WERNER_BOUND else "inconclusive", float(visibility))


def threefold_flatness(counts, variances=None) -> tuple[float, float]:
    """Chi-square of per-setting 3-fold counts against a constant.

    Without ``variances`` the counts are taken as Poisson (Pearson form,
    variance = fitted mean).
    """
    c = np.asarray(counts, dtype=float)
    if len(c) < 5:
        raise DomainError("flatness test needs at least 5 phase settings")
    if np.all(c == c[0]):
        return 0.0, 1.0
    if variances is None:
        m = c.mean()
        chi2 = float(np.sum((c - m) ** 2) / m)
        return chi2, float(stats.chi2.sf(chi2, len(c) - 1))
    var = np.asarray(variances, dtype=float)
    var = np.where(var > 0, var, max(np.mean(c), 1.0))
    mean = np.sum(c / var) / np.sum(1.0 / var)
    chi2 = float(np.sum((c - mean) ** 2 / var))
    return chi2, float(stats.chi2.sf(chi2, len(c) - 1))


def write_fringe_csv(path, samples: Sequence[FringeSample], header_lines: Sequence[str] = ()):
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        wr = csv.writer(fh)
        wr.writerow(["alpha", "beta", "Rpp", "Rpm", "Rmp", "Rmm", "E", "sigma_E"])
        for s in samples:
            wr.writerow([repr(float(s.alpha)), repr(float(s.beta)), s.R_pp, s.R_pm, s.R_mp, s.R_mm,
                         repr(float(s.E)), repr(float(s.sigma_E))])
    return path
