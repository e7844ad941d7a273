"""Brute-force two-photon amplitude oracle for the HOM dip.

Each photon is a discretised gaussian temporal amplitude on a uniform grid.
The 50/50 beam splitter acts on the two-photon amplitude, including the
exchange term, and the squared amplitudes are binned by port pattern and
detection time.  Nothing here reuses the closed forms in
:mod:`cwswap.interference`; the two are compared, not shared.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ResolutionError
from .interference import OverlapModel


@dataclass(frozen=True)
class GridSpec:
    bin_width: float  # ps
    span: float  # ps, total grid width

    @classmethod
    def for_overlap(cls, overlap: OverlapModel, bins_per_sigma: int = 25, sigmas: float = 10.0) -> "GridSpec":
        s = overlap.sigma_c.value
        return cls(s / bins_per_sigma, sigmas * s)

    def check(self, overlap: OverlapModel):
        s = overlap.sigma_c.value
        if self.bin_width > s / 20.0 * (1 + 1e-12):
            raise ResolutionError(f"grid bin {self.bin_width:.4g} ps is coarser than sigma_c/20 = {s / 20:.4g} ps")
        if self.span < 8.0 * s * (1 - 1e-12):
            raise ResolutionError(f"grid span {self.span:.4g} ps is shorter than 8 sigma_c = {8 * s:.4g} ps")


@dataclass(frozen=True, eq=False)
class OracleTable:
    """Joint detection probabilities on the grid ``times`` (ps).

    ``cross[x, y]``: photon in port c at ``times[x]`` and port d at ``times[y]``.
    ``same_c`` / ``same_d``: both photons in one port, ordered pairs each
    carrying half of the unordered probability.
    """

    times: np.ndarray
    cross: np.ndarray
    same_c: np.ndarray
    same_d: np.ndarray

    @property
    def cross_total(self) -> float:
        return float(self.cross.sum())

    @property
    def same_total(self) -> float:
        return float(self.same_c.sum() + self.same_d.sum())


def _amplitude(times, center, sigma_c, dt):
    # |amplitude|^2 has sigma sigma_c/sqrt(2), so |<a|b>|^2 = exp(-delay^2 / (2 sigma_c^2))
    a = np.exp(-((times - center) ** 2) / (2.0 * sigma_c**2))
    return a / math.sqrt(np.sum(a * a) * dt)


def oracle_joint_probabilities(grid: GridSpec, delay: float, overlap: OverlapModel) -> OracleTable:
    """Two-photon detection table for photons ``delay`` ps apart.

    For ``overlap.mu < 1`` the pair is an incoherent mixture: a fraction
    ``mu`` in identical internal modes and ``1 - mu`` in orthogonal ones.
    """
    grid.check(overlap)
    s = overlap.sigma_c.value
    if abs(delay) / 2.0 + 4.0 * s > grid.span / 2.0:
        raise ResolutionError(f"grid span {grid.span:.4g} ps cannot hold two packets {delay:.4g} ps apart")
    n = int(math.ceil(grid.span / grid.bin_width))
    dt = grid.bin_width
    times = (np.arange(n) - (n - 1) / 2.0) * dt
    a = _amplitude(times, -delay / 2.0, s, dt)
    b = _amplitude(times, +delay / 2.0, s, dt)

    ab = np.outer(a, b)  # a at x, b at y
    ba = ab.T  # a at y, b at x
    w = dt * dt
    # a+ -> (c + d)/sqrt2, b+ -> (c - d)/sqrt2
    cross_ind = 0.25 * (ba - ab) ** 2 * w
    same_ind = 0.125 * (ab + ba) ** 2 * w
    cross_dis = 0.25 * (ab**2 + ba**2) * w
    same_dis = 0.125 * (ab**2 + ba**2) * w

    mu = overlap.mu
    cross = mu * cross_ind + (1 - mu) * cross_dis
    same = mu * same_ind + (1 - mu) * same_dis
    norm = cross.sum() + 2.0 * same.sum()
    return OracleTable(times, cross / norm, same / norm, same.copy() / norm)


def oracle_cross_curve(grid: GridSpec, delays, overlap: OverlapModel, extend: bool = True) -> np.ndarray:
    """Total cross-port probability per delay.  ``extend`` widens the grid by ``|delay|``."""
    out = np.empty(len(delays))
    for k, d in enumerate(np.asarray(delays, dtype=float)):
        g = GridSpec(grid.bin_width, grid.span + abs(d)) if extend else grid
        out[k] = oracle_joint_probabilities(g, d, overlap).cross_total
    return out


def oracle_measured_dip(grid: GridSpec, delays, overlap: OverlapModel, jitter_sigma: float, nodes: int = 48):
    """Oracle dip averaged over a gaussian timing error by Gauss-Hermite quadrature."""
    delays = np.asarray(delays, dtype=float)
    if jitter_sigma <= 0:
        return oracle_cross_curve(grid, delays, overlap)
    x, w = np.polynomial.hermite.hermgauss(nodes)
    w = w / math.sqrt(math.pi)
    out = np.empty(len(delays))
    for k, d in enumerate(delays):
        true_delays = d - math.sqrt(2.0) * jitter_sigma * x
        out[k] = np.dot(w, oracle_cross_curve(grid, true_delays, overlap))
    return out


def write_oracle_csv(path, delays, cross, same=None):
    path = Path(path)
    cross = np.asarray(cross, dtype=float)
    same = 1.0 - cross if same is None else np.asarray(same, dtype=float)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["delta_ps", "cross_port_prob", "same_port_prob"])
        for d, c, s in zip(delays, cross, same):
            wr.writerow([repr(float(d)), repr(float(c)), repr(float(s))])
    return path


@dataclass(frozen=True, eq=False)
class OracleReport:
    passed: bool
    tolerance: float
    delays: np.ndarray
    oracle_cross: np.ndarray
    closed_cross: np.ndarray
    oracle_measured: np.ndarray
    closed_measured: np.ndarray

    @property
    def max_dev_cross(self) -> float:
        return float(np.max(np.abs(self.oracle_cross - self.closed_cross)))

    @property
    def max_dev_measured(self) -> float:
        return float(np.max(np.abs(self.oracle_measured - self.closed_measured)))

    @property
    def max_deviation(self) -> float:
        return max(self.max_dev_cross, self.max_dev_measured)


def oracle_check(
    grid: GridSpec | None = None,
    overlap: OverlapModel | None = None,
    jitter_sigmas=(),
    n_delays: int = 41,
    delay_span: float | None = None,
    tolerance: float = 1e-3,
) -> OracleReport:
    """Compare the oracle against the closed-form dip, bare and jittered.

    The sweep covers ``[-delay_span, delay_span]`` (default: three FWHM of
    the jittered dip).  Passes iff every deviation is below ``tolerance``.
    """
    from .interference import dip_fwhm, hom_cross_density, measured_dip

    if overlap is None:
        from .config import reference_config

        overlap = OverlapModel(1.0, reference_config().overlap.sigma_c)
    grid = GridSpec.for_overlap(overlap) if grid is None else grid
    grid.check(overlap)
    sig = math.sqrt(sum(float(s) ** 2 for s in jitter_sigmas))
    span = 3.0 * dip_fwhm(overlap, jitter_sigmas) if delay_span is None else float(delay_span)
    delays = np.linspace(-span, span, n_delays)
    o_cross = oracle_cross_curve(grid, delays, overlap)
    o_meas = oracle_measured_dip(grid, delays, overlap, sig)
    c_cross = np.asarray(hom_cross_density(delays, overlap))
    c_meas = np.asarray(measured_dip(delays, overlap, jitter_sigmas))
    dev = max(np.max(np.abs(o_cross - c_cross)), np.max(np.abs(o_meas - c_meas)))
    return OracleReport(bool(dev < tolerance), tolerance, delays, o_cross, c_cross, o_meas, c_meas)
