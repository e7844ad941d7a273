"""Two-photon interference at the BSM beam splitter and in the time-bin analyzers.

Conventions: times are float picoseconds; analyzer detectors are labelled
``+1`` / ``-1``; each analyzed photon lands in one of three time slots
relative to the BSM clicks, ``0`` (early), ``1`` (middle) or ``2`` (late).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .errors import DomainError
from .rng import SeedLike, as_generator
from .units import FWHM_PER_SIGMA, Duration, Probability


@dataclass(frozen=True)
class OverlapModel:
    """Mode overlap of the two BSM photons.

    ``mu`` lumps every non-temporal mismatch (polarization, spectrum, centre
    wavelength); ``sigma_c`` is the gaussian sigma of the dip envelope.
    """

    mu: float
    sigma_c: Duration

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise DomainError(f"mode overlap mu must be in [0, 1], got {self.mu}")
        if self.sigma_c.value <= 0:
            raise DomainError("sigma_c must be positive")

    @classmethod
    def from_coherence_time(cls, mu: float, coherence_time: Duration) -> "OverlapModel":
        return cls(mu, coherence_time / FWHM_PER_SIGMA)

    @property
    def coherence_time(self) -> Duration:
        return self.sigma_c * FWHM_PER_SIGMA


def _ps(x) -> float:
    return x.value if isinstance(x, Duration) else float(x)


def _jitter_variance(jitter_sigmas: Iterable) -> float:
    total = 0.0
    for s in jitter_sigmas:
        s = _ps(s)
        if s < 0:
            raise DomainError("jitter sigmas must be non-negative")
        total += s * s
    return total


def hom_cross_density(delta, overlap: OverlapModel):
    """Probability that two photons ``delta`` ps apart leave by different ports."""
    d = np.asarray(delta, dtype=float)
    s = overlap.sigma_c.value
    out = 0.5 * (1.0 - overlap.mu * np.exp(-(d * d) / (2.0 * s * s)))
    return float(out) if out.ndim == 0 else out


def dip_visibility(overlap: OverlapModel, jitter_sigmas: Iterable = ()) -> float:
    sc2 = overlap.sigma_c.value ** 2
    return overlap.mu * math.sqrt(sc2 / (sc2 + _jitter_variance(jitter_sigmas)))


def measured_dip(delta_measured, overlap: OverlapModel, jitter_sigmas: Iterable = ()):
    """Cross-port probability against the measured (jittered) delay.

    Gaussian convolution of :func:`hom_cross_density`; the timing errors of
    all listed detectors add in quadrature.
    """
    d = np.asarray(delta_measured, dtype=float)
    sc2 = overlap.sigma_c.value ** 2
    tot = sc2 + _jitter_variance(jitter_sigmas)
    out = 0.5 * (1.0 - overlap.mu * math.sqrt(sc2 / tot) * np.exp(-(d * d) / (2.0 * tot)))
    return float(out) if out.ndim == 0 else out


def dip_fwhm(overlap: OverlapModel, jitter_sigmas: Iterable = ()) -> float:
    return FWHM_PER_SIGMA * math.sqrt(overlap.sigma_c.value ** 2 + _jitter_variance(jitter_sigmas))


# --- Bell-state measurement ---------------------------------------------------


class BSMPattern(str, Enum):
    CROSS_PORT = "cross_port"
    SAME_PORT = "same_port"
    SINGLE_CLICK = "single_click"


@dataclass(frozen=True)
class BSMOutcome:
    success: bool
    tau: float  # ps, t2 - t1; nan for a single click
    pattern: BSMPattern


def classify_bsm(click_1, click_2, ports=(1, 2), bunching_threshold=0.0) -> BSMOutcome:
    """Classify a pair of BSM clicks.

    Only a cross-port pair separated by more than ``bunching_threshold``
    projects onto the singlet.  Closer cross-port pairs sit in the bunching
    regime where the assignment is unreliable.
    """
    thr = _ps(bunching_threshold)
    if click_1 is None or click_2 is None:
        return BSMOutcome(False, math.nan, BSMPattern.SINGLE_CLICK)
    tau = float(click_2) - float(click_1)
    if ports[0] == ports[1]:
        return BSMOutcome(False, tau, BSMPattern.SAME_PORT)
    return BSMOutcome(abs(tau) > thr, tau, BSMPattern.CROSS_PORT)


# --- time-bin analyzers --------------------------------------------------------


@dataclass(frozen=True)
class AnalyzerSpec:
    path_difference: Duration
    phase: float  # rad
    insertion_transmission: Probability = Probability(1.0)

    def __post_init__(self):
        if self.path_difference.value <= 0:
            raise DomainError("interferometer path difference must be positive")


SIGNS = (+1, -1)
SLOT_PAIRS_OFF_MIDDLE = ((0, 1), (0, 2), (1, 2), (1, 0), (2, 0), (2, 1))


def middle_slot_table(visibility: float, alpha: float, beta: float) -> np.ndarray:
    """2x2 joint probabilities of detectors (i, j) given both photons in the middle slot.

    Rows/columns ordered ``(+, -)``; entries ``(1 + s_i s_j V cos(alpha - beta)) / 4``.
    """
    c = visibility * math.cos(alpha - beta)
    s = np.array(SIGNS, dtype=float)
    return 0.25 * (1.0 + np.outer(s, s) * c)


def effective_visibility(tau, analyzer_a: AnalyzerSpec, analyzer_b: AnalyzerSpec, visibility: float, window=None):
    """``visibility`` where both interferometers match ``tau`` within ``window``, else 0."""
    t = np.abs(np.asarray(tau, dtype=float))
    if window is None:
        out = np.full_like(t, visibility)
    else:
        w = _ps(window)
        ok = (np.abs(t - analyzer_a.path_difference.value) <= w) & (np.abs(t - analyzer_b.path_difference.value) <= w)
        out = np.where(ok, visibility, 0.0)
    return float(out) if out.ndim == 0 else out


def swapped_pair_probabilities(
    tau, analyzer_a: AnalyzerSpec, analyzer_b: AnalyzerSpec, conditional_visibility: float, window=None
) -> dict[tuple[int, int, int, int], float]:
    """Full outcome distribution of the swapped pair behind the two analyzers.

    Keys are ``(i, j, slot_a, slot_b)``.  Only the middle/middle slot pair
    carries the phase dependence; the six other reachable slot pairs hold
    1/8 each, split evenly over the four detector combinations.
    """
    if not 0.0 <= conditional_visibility <= 1.0:
        raise DomainError(f"visibility must be in [0, 1], got {conditional_visibility}")
    v = effective_visibility(tau, analyzer_a, analyzer_b, conditional_visibility, window)
    mid = middle_slot_table(v, analyzer_a.phase, analyzer_b.phase) / 4.0
    out = {}
    for ia, i in enumerate(SIGNS):
        for jb, j in enumerate(SIGNS):
            for sa in range(3):
                for sb in range(3):
                    if (sa, sb) == (1, 1):
                        p = float(mid[ia, jb])
                    elif (sa, sb) in SLOT_PAIRS_OFF_MIDDLE:
                        p = 1.0 / 32.0
                    else:
                        p = 0.0
                    out[(i, j, sa, sb)] = p
    return out


def correlation_from_probabilities(probs: Mapping[tuple[int, int, int, int], float], slots=(1, 1)) -> float:
    num = sum(i * j * p for (i, j, sa, sb), p in probs.items() if (sa, sb) == slots)
    den = sum(p for (i, j, sa, sb), p in probs.items() if (sa, sb) == slots)
    return num / den


# --- predicted swap visibility -------------------------------------------------


class MultipairMode(str, Enum):
    ANALYTIC = "analytic"
    MONTE_CARLO = "monte_carlo"


def multipair_factor_analytic(q_a: float, q_b: float) -> float:
    if q_a < 0 or q_b < 0:
        raise DomainError("q must be non-negative")
    return 1.0 / (1.0 + 2.0 * (q_a + q_b))


def multipair_factor_mc(q_a: float, q_b: float, rng_seed: SeedLike = None, n_trials: int = 200_000) -> float:
    """Genuine share of four-fold combinations when extra pairs are emitted.

    Each trial fixes a successful swap (BSM clicks at two times) and emits
    each source's CW pair stream through the coherence window around both
    click times.  Every extra pair found there offers one further,
    uncorrelated four-fold combination competing with the genuine one.
    """
    if q_a < 0 or q_b < 0:
        raise DomainError("q must be non-negative")
    rng = as_generator(rng_seed, "multipair")
    n_windows = 2 * n_trials
    extra = np.zeros(n_trials)
    for q in (q_a, q_b):
        # one coherence time == unit length; stream covers every trial window back to back
        n = rng.poisson(q * n_windows)
        t = rng.uniform(0.0, n_windows, size=n)
        counts = np.bincount(t.astype(np.int64), minlength=n_windows)[:n_windows]
        extra += counts.reshape(n_trials, 2).sum(axis=1)
    return n_trials / float(n_trials + extra.sum())


def conditional_visibility(
    overlap: OverlapModel,
    jitter_sigmas: Iterable,
    q_a: float,
    q_b: float,
    mode: MultipairMode | str = MultipairMode.ANALYTIC,
    rng_seed: SeedLike = None,
    n_trials: int = 200_000,
) -> float:
    """Predicted fringe visibility of the swapped pair.

    Temporal indistinguishability at the BSM (the dip visibility under
    detector jitter) times the multi-pair dilution.
    """
    temporal = dip_visibility(overlap, jitter_sigmas)
    if MultipairMode(mode) is MultipairMode.ANALYTIC:
        return temporal * multipair_factor_analytic(q_a, q_b)
    return temporal * multipair_factor_mc(q_a, q_b, rng_seed, n_trials)
