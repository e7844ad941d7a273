"""Unit-carrying scalars and the closed-form source quantities.

Every quantity is stored in one canonical unit (nm, ps, s^-1, mW or a bare
probability) and converted only at the boundary, through the named
constructors or :meth:`Quantity.to`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import ClassVar

from scipy.constants import c as SPEED_OF_LIGHT  # m/s
from scipy.constants import h as PLANCK  # J s

from .errors import DomainError, UnitError

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))  # ~2.3548


@dataclass(frozen=True, order=False)
class Quantity:
    """Non-negative real in a fixed canonical unit."""

    value: float

    canonical: ClassVar[str] = ""
    scales: ClassVar[dict[str, float]] = {}

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v) or v < 0.0:
            raise DomainError(f"{type(self).__name__} must be finite and non-negative, got {self.value!r}")
        object.__setattr__(self, "value", v)

    @classmethod
    def of(cls, value: float, unit: str):
        try:
            scale = cls.scales[unit]
        except KeyError:
            raise UnitError(f"unknown unit {unit!r} for {cls.__name__}; expected one of {sorted(cls.scales)}") from None
        return cls(value * scale)

    def to(self, unit: str) -> float:
        try:
            return self.value / self.scales[unit]
        except KeyError:
            raise UnitError(f"unknown unit {unit!r} for {type(self).__name__}") from None

    def _check(self, other):
        if type(other) is not type(self):
            raise UnitError(f"cannot combine {type(self).__name__} with {type(other).__name__}")

    def __add__(self, other):
        self._check(other)
        return type(self)(self.value + other.value)

    def __sub__(self, other):
        self._check(other)
        return type(self)(self.value - other.value)

    def __mul__(self, k):
        if isinstance(k, Quantity):
            return NotImplemented
        return type(self)(self.value * float(k))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Quantity):
            self._check(other)
            return self.value / other.value
        return type(self)(self.value / float(other))

    def __lt__(self, other):
        self._check(other)
        return self.value < other.value

    def __le__(self, other):
        self._check(other)
        return self.value <= other.value

    def __gt__(self, other):
        self._check(other)
        return self.value > other.value

    def __ge__(self, other):
        self._check(other)
        return self.value >= other.value

    def __float__(self):
        return self.value

    def __repr__(self):
        return f"{type(self).__name__}({self.value:g} {self.canonical})"


class Wavelength(Quantity):
    canonical = "nm"
    scales = {"nm": 1.0, "pm": 1e-3, "um": 1e3, "m": 1e9}

    @classmethod
    def nm(cls, v):
        return cls(v)

    @classmethod
    def pm(cls, v):
        return cls(v * 1e-3)


class Duration(Quantity):
    canonical = "ps"
    scales = {"fs": 1e-3, "ps": 1.0, "ns": 1e3, "us": 1e6, "ms": 1e9, "s": 1e12}

    @classmethod
    def ps(cls, v):
        return cls(v)

    @classmethod
    def ns(cls, v):
        return cls(v * 1e3)

    @classmethod
    def seconds(cls, v):
        return cls(v * 1e12)


class Rate(Quantity):
    canonical = "1/s"
    scales = {"1/s": 1.0, "Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "1/h": 1.0 / 3600.0}

    def __mul__(self, k):
        # rate x duration is a dimensionless mean count
        if isinstance(k, Duration):
            return self.value * k.value * 1e-12
        return super().__mul__(k)

    __rmul__ = __mul__

    def per_ps(self) -> float:
        return self.value * 1e-12


class Power(Quantity):
    canonical = "mW"
    scales = {"uW": 1e-3, "mW": 1.0, "W": 1e3}

    @classmethod
    def mw(cls, v):
        return cls(v)


class Probability(Quantity):
    canonical = ""
    scales = {"": 1.0, "%": 0.01}

    def __post_init__(self):
        super().__post_init__()
        if self.value > 1.0:
            raise DomainError(f"probability must lie in [0, 1], got {self.value}")

    @classmethod
    def from_db(cls, loss_db: float) -> "Probability":
        if loss_db < 0:
            raise DomainError("insertion loss in dB must be non-negative")
        return cls(10.0 ** (-loss_db / 10.0))

    def __mul__(self, k):
        if isinstance(k, Probability):
            return Probability(self.value * k.value)
        return super().__mul__(k)

    __rmul__ = __mul__


class Lineshape(str, Enum):
    GAUSSIAN = "gaussian"
    LORENTZIAN = "lorentzian"


# time-bandwidth products (FWHM x FWHM)
TIME_BANDWIDTH = {
    Lineshape.GAUSSIAN: 2.0 * math.log(2.0) / math.pi,
    Lineshape.LORENTZIAN: 1.0 / math.pi,
}


def optical_bandwidth_hz(center_wavelength: Wavelength, bandwidth_fwhm: Wavelength) -> float:
    lam = center_wavelength.value * 1e-9
    dlam = bandwidth_fwhm.value * 1e-9
    return SPEED_OF_LIGHT * dlam / lam**2


def coherence_time(
    center_wavelength: Wavelength,
    bandwidth_fwhm: Wavelength,
    lineshape: Lineshape | str = Lineshape.GAUSSIAN,
) -> Duration:
    """FWHM-equivalent coherence time ``K / dnu`` of a filtered photon."""
    if center_wavelength.value <= 0 or bandwidth_fwhm.value <= 0:
        raise DomainError("wavelength and bandwidth must be strictly positive")
    k = TIME_BANDWIDTH[Lineshape(lineshape)]
    return Duration.seconds(k / optical_bandwidth_hz(center_wavelength, bandwidth_fwhm))


@dataclass(frozen=True)
class WavePacket:
    center_wavelength: Wavelength
    bandwidth_fwhm: Wavelength
    lineshape: Lineshape = Lineshape.GAUSSIAN
    coherence_time: Duration = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "lineshape", Lineshape(self.lineshape))
        if not self.bandwidth_fwhm < self.center_wavelength:
            raise DomainError("filter bandwidth must be narrower than the center wavelength")
        object.__setattr__(
            self, "coherence_time", coherence_time(self.center_wavelength, self.bandwidth_fwhm, self.lineshape)
        )

    @property
    def sigma_c(self) -> Duration:
        """Gaussian sigma of the HOM dip envelope whose FWHM is the coherence time."""
        return self.coherence_time / FWHM_PER_SIGMA


def pump_photon_flux(power: Power, wavelength: Wavelength) -> Rate:
    if power.value < 0:
        raise DomainError("pump power must be non-negative")
    if wavelength.value <= 0:
        raise DomainError("pump wavelength must be positive")
    joules_per_s = power.value * 1e-3
    return Rate(joules_per_s * wavelength.value * 1e-9 / (PLANCK * SPEED_OF_LIGHT))


@dataclass(frozen=True)
class SourceSpec:
    pump_power: Power
    pump_wavelength: Wavelength
    conversion_efficiency_per_nm: float
    raw_bandwidth: Wavelength
    filter: WavePacket
    coupling_transmission: Probability
    filter_transmission: Probability

    def __post_init__(self):
        eff = float(self.conversion_efficiency_per_nm)
        if not math.isfinite(eff) or eff < 0:
            raise DomainError("conversion efficiency must be finite and non-negative")

    @property
    def coherence_time(self) -> Duration:
        return self.filter.coherence_time

    @property
    def photon_transmission(self) -> Probability:
        """Survival of one photon from crystal to fibre output (coupling x filter insertion)."""
        return self.coupling_transmission * self.filter_transmission

    def with_bandwidth_scaled(self, s: float) -> "SourceSpec":
        return replace(self, filter=replace(self.filter, bandwidth_fwhm=self.filter.bandwidth_fwhm * s))


def raw_pair_rate(spec: SourceSpec) -> Rate:
    flux = pump_photon_flux(spec.pump_power, spec.pump_wavelength)
    return flux * (spec.conversion_efficiency_per_nm * spec.raw_bandwidth.to("nm"))


def filtered_pair_rate(spec: SourceSpec) -> Rate:
    """Pairs per second generated inside the filter passband (before any loss)."""
    flux = pump_photon_flux(spec.pump_power, spec.pump_wavelength)
    return flux * (spec.conversion_efficiency_per_nm * spec.filter.bandwidth_fwhm.to("nm"))


def pairs_per_coherence_time(filtered_rate: Rate, coherence: Duration) -> float:
    return filtered_rate * coherence


def source_q(spec: SourceSpec) -> float:
    return pairs_per_coherence_time(filtered_pair_rate(spec), spec.coherence_time)


def reference_source() -> SourceSpec:
    """The two identical PPLN-waveguide sources of the reference setup."""
    return SourceSpec(
        pump_power=Power.mw(2.0),
        pump_wavelength=Wavelength.nm(780.027),
        conversion_efficiency_per_nm=5e-7,
        raw_bandwidth=Wavelength.nm(80.0),
        filter=WavePacket(Wavelength.nm(1560.0), Wavelength.pm(10.0), Lineshape.GAUSSIAN),
        coupling_transmission=Probability(0.25),
        filter_transmission=Probability.from_db(3.0),
    )
