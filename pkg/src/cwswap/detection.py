"""Detector, gating and time-tagger models.

Detectors turn true photon arrival times (ps) into click records carrying a
recorded (jittered) time; the TDC then floors recorded times onto its bin
grid and produces the timestamp table every analysis reads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DomainError
from .rng import SeedLike, as_generator
from .units import FWHM_PER_SIGMA, Duration, Probability, Rate

PHOTON, DARK = 0, 1
ORIGIN_NAMES = ("photon", "dark")


class DetectorMode(str, Enum):
    FREE_RUNNING = "free_running"
    GATED = "gated"


@dataclass(frozen=True)
class DetectorModel:
    id: str
    efficiency: Probability
    jitter_fwhm: Duration
    mode: DetectorMode = DetectorMode.FREE_RUNNING
    dark_count_rate: Rate = Rate(0.0)  # free running
    dark_prob_per_ns: float = 0.0  # gated
    gate_width: Duration = Duration.ns(20.0)
    gate_delay: float = -10_000.0  # ps, relative to the trigger; may be negative
    dead_time: Duration = Duration(0.0)

    def __post_init__(self):
        object.__setattr__(self, "mode", DetectorMode(self.mode))
        if self.mode is DetectorMode.GATED and self.gate_width.value <= 0:
            raise DomainError("gated detectors need a positive gate width")
        if not 0.0 <= self.dark_prob_per_ns <= 1.0:
            raise DomainError("dark probability per ns must be in [0, 1]")

    @property
    def jitter_sigma(self) -> float:
        return self.jitter_fwhm.value / FWHM_PER_SIGMA


def sspd(id: str = "bsm1") -> DetectorModel:
    """Free-running NbN SSPD: 4.5 %, 74 ps, 300 dark counts/s."""
    return DetectorModel(
        id, Probability(0.045), Duration.ps(74.0), DetectorMode.FREE_RUNNING,
        dark_count_rate=Rate(300.0), dead_time=Duration.ns(10.0),
    )


def apd_bsm(id: str = "bsm2") -> DetectorModel:
    """InGaAs APD triggered by the SSPD: 30 %, 105 ps, 1e-4 darks per ns of gate."""
    return DetectorModel(
        id, Probability(0.30), Duration.ps(105.0), DetectorMode.GATED,
        dark_prob_per_ns=1e-4, gate_width=Duration.ns(20.0), gate_delay=-10_000.0,
    )


def apd_analyzer(id: str, jitter_fwhm_ps: float = 300.0) -> DetectorModel:
    """Analyzer APD gated on a BSM two-fold.  Its jitter is an assumption (not published)."""
    return DetectorModel(
        id, Probability(0.30), Duration.ps(jitter_fwhm_ps), DetectorMode.GATED,
        dark_prob_per_ns=1e-4, gate_width=Duration.ns(24.0), gate_delay=-11_000.0,
    )


@dataclass(frozen=True)
class DetectionRecord:
    detector_id: str
    true_time: float
    recorded_time: float
    origin: str


@dataclass(frozen=True, eq=False)
class DetectionRecords:
    """Clicks of one detector, sorted by recorded time.

    ``photon_index`` points back into the arrival array (-1 for dark counts).
    """

    detector_id: str
    true_time: np.ndarray
    recorded_time: np.ndarray
    origin: np.ndarray
    photon_index: np.ndarray

    def __len__(self):
        return len(self.recorded_time)

    def __iter__(self) -> Iterator[DetectionRecord]:
        for t, r, o in zip(self.true_time.tolist(), self.recorded_time.tolist(), self.origin.tolist()):
            yield DetectionRecord(self.detector_id, t, r, ORIGIN_NAMES[o])


def _check_sorted(t: np.ndarray, what: str):
    if len(t) > 1 and np.any(np.diff(t) < 0):
        raise DomainError(f"{what} must be sorted by time")


def make_gates(trigger_times, gate_width, gate_delay=0.0) -> np.ndarray:
    """One ``[t + delay, t + delay + width]`` interval per trigger, overlaps merged.

    Returns an ``(n, 2)`` array of disjoint, increasing intervals.
    """
    if isinstance(trigger_times, DetectionRecords):
        trigger_times = trigger_times.recorded_time
    t = np.asarray(trigger_times, dtype=float)
    _check_sorted(t, "trigger records")
    width = gate_width.value if isinstance(gate_width, Duration) else float(gate_width)
    if len(t) == 0:
        return np.empty((0, 2))
    starts = t + gate_delay
    ends = starts + width
    # a new merged interval begins wherever a start exceeds every earlier end
    prev_end = np.maximum.accumulate(ends)
    new = np.ones(len(t), dtype=bool)
    new[1:] = starts[1:] > prev_end[:-1]
    group = np.cumsum(new) - 1
    m_start = starts[new]
    m_end = np.zeros(len(m_start))
    np.maximum.at(m_end, group, ends)
    return np.column_stack([m_start, m_end])


def gate_index(times: np.ndarray, gates: np.ndarray) -> np.ndarray:
    """Index of the gate containing each time, or -1."""
    if len(gates) == 0:
        return np.full(len(times), -1, dtype=np.int64)
    k = np.searchsorted(gates[:, 0], times, side="right") - 1
    inside = (k >= 0) & (times <= gates[np.clip(k, 0, None), 1])
    return np.where(inside, k, -1)


def enforce_dead_time(times: np.ndarray, dead_time: float) -> np.ndarray:
    """Boolean keep-mask for a non-paralysable dead time on sorted ``times``."""
    keep = np.ones(len(times), dtype=bool)
    if dead_time <= 0 or len(times) < 2 or np.all(np.diff(times) >= dead_time):
        return keep
    last = -math.inf
    for k, t in enumerate(times.tolist()):
        if t - last < dead_time:
            keep[k] = False
        else:
            last = t
    return keep


def detect(
    arrivals,
    model: DetectorModel,
    gates: np.ndarray | None = None,
    rng_seed: SeedLike = None,
    live_span: tuple[float, float] | None = None,
) -> DetectionRecords:
    """Simulate one detector.

    Free-running dark counts are a Poisson process over ``live_span``
    (defaults to the arrival range).  Gated detectors see only arrivals
    inside a gate, draw dark counts per gate, and record at most one click
    per gate.
    """
    t = np.asarray(arrivals, dtype=float)
    _check_sorted(t, "arrival times")
    rng = as_generator(rng_seed, "detector", model.id)
    n = len(t)
    idx = np.arange(n)

    if model.mode is DetectorMode.GATED:
        if gates is None:
            raise DomainError(f"gated detector {model.id!r} needs gate intervals")
        gates = np.asarray(gates, dtype=float).reshape(-1, 2)
        in_gate = gate_index(t, gates) >= 0
    else:
        in_gate = np.ones(n, dtype=bool)

    hit = (rng.random(n) < model.efficiency.value) & in_gate
    photon_t = t[hit]
    photon_i = idx[hit]

    if model.mode is DetectorMode.GATED:
        widths_ns = (gates[:, 1] - gates[:, 0]) * 1e-3
        lam = np.clip(model.dark_prob_per_ns * widths_ns, 0.0, None)
        per_gate = rng.poisson(lam)
        g = np.repeat(np.arange(len(gates)), per_gate)
        dark_t = gates[g, 0] + rng.random(len(g)) * (gates[g, 1] - gates[g, 0])
    else:
        if live_span is None:
            live_span = (float(t[0]), float(t[-1])) if n else (0.0, 0.0)
        lo, hi = live_span
        n_dark = rng.poisson(model.dark_count_rate * Duration(max(hi - lo, 0.0)))
        dark_t = lo + rng.random(n_dark) * (hi - lo)

    true_t = np.concatenate([photon_t, dark_t])
    origin = np.concatenate([np.full(len(photon_t), PHOTON), np.full(len(dark_t), DARK)]).astype(np.int8)
    pidx = np.concatenate([photon_i, np.full(len(dark_t), -1)])
    rec = true_t + rng.normal(0.0, model.jitter_sigma, size=len(true_t)) if model.jitter_sigma > 0 else true_t.copy()

    order = np.argsort(rec, kind="stable")
    true_t, rec, origin, pidx = true_t[order], rec[order], origin[order], pidx[order]

    keep = np.ones(len(rec), dtype=bool)
    if model.mode is DetectorMode.GATED and len(rec):
        gi = gate_index(true_t, gates)
        # first click per gate wins
        first = np.zeros(len(rec), dtype=bool)
        _, first_pos = np.unique(gi, return_index=True)
        first[first_pos] = True
        keep &= first & (gi >= 0)
    sel = np.flatnonzero(keep)
    dead_keep = enforce_dead_time(rec[sel], model.dead_time.value)
    sel = sel[dead_keep]
    return DetectionRecords(model.id, true_t[sel], rec[sel], origin[sel], pidx[sel])


def thin(records: DetectionRecords, transmission: float, rng_seed: SeedLike = None) -> DetectionRecords:
    rng = as_generator(rng_seed, "thin", records.detector_id)
    k = rng.random(len(records)) < transmission
    return DetectionRecords(
        records.detector_id, records.true_time[k], records.recorded_time[k], records.origin[k], records.photon_index[k]
    )


# --- time tagger ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TimestampTable:
    """Rows ``(detector_id, time_ps, origin)`` sorted by time (ties by detector id)."""

    detector_id: np.ndarray
    time_ps: np.ndarray
    origin: np.ndarray

    def __len__(self):
        return len(self.time_ps)

    def for_detector(self, det: str) -> np.ndarray:
        return self.time_ps[self.detector_id == det]

    @classmethod
    def empty(cls) -> "TimestampTable":
        return cls(np.array([], dtype="<U16"), np.array([], dtype=np.int64), np.array([], dtype=np.int8))

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, int, str]], sort: bool = True) -> "TimestampTable":
        rows = list(rows)
        det = np.array([r[0] for r in rows], dtype="<U16")
        t = np.array([int(r[1]) for r in rows], dtype=np.int64)
        o = np.array([ORIGIN_NAMES.index(r[2]) if isinstance(r[2], str) else int(r[2]) for r in rows], dtype=np.int8)
        table = cls(det, t, o)
        return table.sorted() if sort else table

    def sorted(self) -> "TimestampTable":
        order = np.lexsort((self.detector_id, self.time_ps))
        return TimestampTable(self.detector_id[order], self.time_ps[order], self.origin[order])

    def is_sorted(self) -> bool:
        return len(self) < 2 or bool(np.all(np.diff(self.time_ps) >= 0))

    def write_csv(self, path, header_lines: Sequence[str] = ()):
        path = Path(path)
        with path.open("w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            wr = csv.writer(fh)
            wr.writerow(["detector_id", "time_ps", "origin"])
            for d, t, o in zip(self.detector_id.tolist(), self.time_ps.tolist(), self.origin.tolist()):
                wr.writerow([d, t, ORIGIN_NAMES[o]])
        return path

    @classmethod
    def read_csv(cls, path) -> "TimestampTable":
        with Path(path).open(newline="") as fh:
            lines = (ln for ln in fh if not ln.startswith("#"))
            rd = csv.DictReader(lines)
            missing = {"detector_id", "time_ps", "origin"} - set(rd.fieldnames or ())
            if missing:
                raise DomainError(f"timestamp CSV lacks columns {sorted(missing)}")
            rows = [(r["detector_id"], int(r["time_ps"]), r["origin"]) for r in rd]
        return cls.from_rows(rows, sort=False)


def tdc_record(records: Sequence[DetectionRecords], resolution, mode: str = "multistop") -> TimestampTable:
    """Floor every recorded time onto the TDC grid; multistop keeps all stops."""
    res = resolution.value if isinstance(resolution, Duration) else float(resolution)
    if res <= 0:
        raise DomainError("TDC resolution must be positive")
    if mode != "multistop":
        raise DomainError(f"unsupported TDC mode {mode!r}")
    if not records:
        return TimestampTable.empty()
    det = np.concatenate([np.full(len(r), r.detector_id, dtype="<U16") for r in records])
    t = np.concatenate([r.recorded_time for r in records])
    o = np.concatenate([r.origin for r in records]).astype(np.int8)
    q = np.rint(np.floor(t / res) * res).astype(np.int64)
    return TimestampTable(det, q, o).sorted()
