"""Heralded single-photon source built on a cw-pumped SPDC crystal.

Units: time in ns, crystal length in mm, frequency in cycles/ns (ordinary
frequency, carrier phases are ``2*pi*f*t``), wavelengths in nm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as _C_M_PER_S

from .exceptions import NonPositiveBeta
from .validation import check_scalar

SPEED_OF_LIGHT_M_PER_NS = _C_M_PER_S * 1e-9
SPEED_OF_LIGHT_NM_PER_NS = _C_M_PER_S
SINC_GAUSSIAN_FACTOR = 0.193


def frequency_from_wavelength(wavelength_nm: float) -> float:
    """Ordinary frequency in cycles/ns for a vacuum wavelength in nm."""
    return SPEED_OF_LIGHT_NM_PER_NS / wavelength_nm


@dataclass(frozen=True)
class SourceParams:
    """SPDC, pump and idler-filter parameters.

    ``pump_frequency`` may be omitted and is then derived from
    ``pump_wavelength``; when both are given they must agree to 1e-9.
    """

    pump_wavelength: float = 400.0
    idler_bandwidth: float = 10.0
    crystal_length: float = 0.0
    group_velocity_mismatch: float = 0.0
    sinc_gaussian_factor: float = SINC_GAUSSIAN_FACTOR
    herald_rate: float = 1.0
    pump_frequency: float | None = None
    compensate_delay: bool = True

    def __post_init__(self):
        check_scalar(self.pump_wavelength, "pump_wavelength", min_val=0.0, include_min=False)
        check_scalar(self.idler_bandwidth, "idler_bandwidth", min_val=0.0, include_min=False)
        check_scalar(self.crystal_length, "crystal_length", min_val=0.0)
        check_scalar(self.group_velocity_mismatch, "group_velocity_mismatch")
        check_scalar(self.sinc_gaussian_factor, "sinc_gaussian_factor", min_val=0.0)
        check_scalar(self.herald_rate, "herald_rate", min_val=0.0, include_min=False)
        expected = frequency_from_wavelength(self.pump_wavelength)
        if self.pump_frequency is None:
            object.__setattr__(self, "pump_frequency", expected)
        else:
            check_scalar(self.pump_frequency, "pump_frequency", min_val=0.0, include_min=False)
            if not math.isclose(self.pump_frequency, expected, rel_tol=1e-9):
                raise ValueError(
                    f"pump_frequency {self.pump_frequency} cycles/ns is inconsistent with "
                    f"pump_wavelength {self.pump_wavelength} nm (expected {expected})"
                )
        derive_beta(self)

    @property
    def beta(self) -> float:
        return derive_beta(self)

    @property
    def sqrt_beta(self) -> float:
        return math.sqrt(self.beta)

    @property
    def delay(self) -> float:
        """Crystal-induced herald-to-signal offset actually applied (0 when compensated)."""
        return 0.0 if self.compensate_delay else compensation_delay(self)


@dataclass(frozen=True, order=True)
class HeraldEvent:
    index: int
    time: float


def derive_beta(params: SourceParams) -> float:
    """Squared temporal width of the heralded wavepacket, in ns^2.

    ``1/sigma**2 - gamma * L**2 * J**2 / 4``; the Gaussian approximation of
    the phase-matching sinc breaks down when this is not positive.
    """
    sigma = params.idler_bandwidth
    if not sigma > 0:
        raise ValueError(f"idler_bandwidth must be > 0, got {sigma}")
    lj = params.crystal_length * params.group_velocity_mismatch
    beta = 1.0 / sigma**2 - params.sinc_gaussian_factor * lj * lj / 4.0
    if not beta > 0:
        raise NonPositiveBeta(
            f"beta = {beta!r} ns^2 <= 0 for sigma={sigma}, L={params.crystal_length}, "
            f"J={params.group_velocity_mismatch}"
        )
    return beta


def compensation_delay(params: SourceParams) -> float:
    """Time offset ``-L*J/(4*pi)`` of the signal envelope relative to the herald."""
    return -params.crystal_length * params.group_velocity_mismatch / (4.0 * math.pi)


def normalization_constant(beta: float) -> float:
    if not beta > 0:
        raise NonPositiveBeta(f"beta must be > 0, got {beta}")
    return (2.0 * beta / math.pi) ** 0.25


def temporal_intensity(beta: float, t_center, t):
    """Photon flux density (per ns) of one heralded photon centred at ``t_center``.

    Unit-normalised Gaussian with variance ``beta / (4*pi**2)``. Works on
    scalars or numpy arrays.
    """
    m = normalization_constant(beta)
    dt = np.asarray(t, dtype=float) - t_center
    out = (math.pi * m * m / beta) * np.exp(-2.0 * math.pi**2 * dt * dt / beta)
    return out if out.ndim else float(out)


def wavepacket_amplitude(beta: float, pump_frequency: float, offset):
    """Complex temporal amplitude of the signal photon at ``offset`` ns after
    its herald (delay compensated).

    The carrier oscillates at half the pump frequency under a Gaussian
    envelope; ``abs(amplitude)**2`` equals :func:`temporal_intensity`.
    """
    m = normalization_constant(beta)
    x = np.asarray(offset, dtype=float)
    envelope = m * math.sqrt(math.pi / beta) * np.exp(-math.pi**2 * x * x / beta)
    return envelope * np.exp(1j * math.pi * pump_frequency * x)


def _raw_poisson_times(rate: float, rng: np.random.Generator, duration=None):
    # chunked exponential gaps so the same seed gives the same prefix regardless of the stop rule
    chunk = 4096
    start = 0.0
    while True:
        gaps = rng.exponential(1.0 / rate, size=chunk)
        times = start + np.cumsum(gaps)
        yield times
        start = float(times[-1])
        if duration is not None and start > duration:
            return


def sample_herald_times(params: SourceParams, duration: float | None = None, seed=None, *,
                        count: int | None = None) -> np.ndarray:
    """Herald times (ns) from a Poisson process thinned to a minimum gap of sqrt(beta).

    An event is rejected when it follows the previous raw event by less
    than ``sqrt(beta)``, so the accepted fraction is ``exp(-rate*sqrt(beta))``.
    Exactly one of ``duration`` or ``count`` selects the stopping rule.
    """
    if (duration is None) == (count is None):
        raise ValueError("give exactly one of duration or count")
    if duration is not None:
        duration = check_scalar(duration, "duration", min_val=0.0)
        if duration == 0:
            return np.empty(0)
    elif count <= 0:
        return np.empty(0)
    rng = np.random.default_rng(seed)
    min_gap = params.sqrt_beta
    accepted: list[np.ndarray] = []
    n_accepted = 0
    prev = -math.inf
    for raw in _raw_poisson_times(params.herald_rate, rng, duration=duration):
        # gaps taken on the float times themselves so accepted gaps are >= min_gap exactly
        diffs = np.diff(raw, prepend=prev)
        keep = raw[diffs >= min_gap]
        prev = raw[-1]
        if duration is not None:
            keep = keep[keep <= duration]
        accepted.append(keep)
        n_accepted += keep.size
        if count is not None and n_accepted >= count:
            break
    times = np.concatenate(accepted) if accepted else np.empty(0)
    if count is not None:
        times = times[:count]
    return times


def sample_heralds(params: SourceParams, duration: float, seed=None) -> list[HeraldEvent]:
    times = sample_herald_times(params, duration, seed)
    return [HeraldEvent(i, float(t)) for i, t in enumerate(times)]
