"""Stochastic CW pair emission and per-photon loss channels.

A source's output over a run is held as a :class:`PairStream`, a
struct-of-arrays view of its :class:`PairEvent` records, so that
million-pair runs stay vectorised.  Iterating a stream yields the records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .errors import DomainError
from .rng import SeedLike, as_generator
from .units import Duration, Probability, Rate


@dataclass(frozen=True)
class PairEvent:
    source_id: str
    emission_time: float  # ps since run start
    bsm_photon_alive: bool
    outer_photon_alive: bool


@dataclass(frozen=True)
class LossChannel:
    label: str
    transmission: Probability

    def __post_init__(self):
        if not isinstance(self.transmission, Probability):
            object.__setattr__(self, "transmission", Probability(self.transmission))


@dataclass(frozen=True, eq=False)
class PairStream:
    source_id: str
    duration: float  # ps
    emission_time: np.ndarray
    bsm_alive: np.ndarray
    outer_alive: np.ndarray

    def __len__(self):
        return len(self.emission_time)

    def __iter__(self) -> Iterator[PairEvent]:
        for t, b, o in zip(self.emission_time.tolist(), self.bsm_alive.tolist(), self.outer_alive.tolist()):
            yield PairEvent(self.source_id, t, b, o)

    def events(self) -> list[PairEvent]:
        return list(self)

    def alive(self, which: str) -> np.ndarray:
        return self.bsm_alive if which == "bsm" else self.outer_alive


def sample_pair_emissions(
    rate: Rate, duration: Duration, rng_seed: SeedLike = None, source_id: str = "A"
) -> PairStream:
    """Homogeneous Poisson emission times on ``[0, duration]``, sorted."""
    if duration.value <= 0:
        raise DomainError("run duration must be positive")
    rng = as_generator(rng_seed, "source", source_id)
    n = rng.poisson(rate * duration)
    t = np.sort(rng.uniform(0.0, duration.value, size=n))
    ones = np.ones(n, dtype=bool)
    return PairStream(source_id, duration.value, t, ones, ones.copy())


def apply_loss(stream: PairStream, channel: LossChannel, which_photon: str, rng_seed: SeedLike = None) -> PairStream:
    """Thin the ``which_photon`` ('bsm', 'outer' or 'both') alive flags through ``channel``."""
    if which_photon not in ("bsm", "outer", "both"):
        raise DomainError(f"unknown photon selector {which_photon!r}")
    rng = as_generator(rng_seed, "loss", stream.source_id, channel.label, which_photon)
    p = channel.transmission.value
    changes = {}
    for name in ("bsm", "outer"):
        if which_photon in (name, "both"):
            # one draw per event regardless of state keeps streams aligned across configs
            survive = rng.random(len(stream)) < p
            changes[f"{name}_alive"] = stream.alive(name) & survive
    return replace(stream, **changes)


def multipair_density(q: float) -> float:
    """Chance of a further pair from the same source within one coherence time."""
    if q < 0:
        raise DomainError("q must be non-negative")
    return -math.expm1(-q)
