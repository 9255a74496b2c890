"""Balanced four-arm Mach-Zehnder perimeter: mode algebra and closed-form
windowed detection counts.

Every count returned here is the expected number of photons registered in
one detector window per herald. The coherent scenarios (normal, side and
cross intrusion) share one interference formula in which the fence path is
delayed by ``delta`` and carries an extra phase ``phase`` relative to the
bottom path.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np
from scipy.special import erf

from .exceptions import HeraldsTooClose, NonBinaryPhase
from .source import SPEED_OF_LIGHT_M_PER_NS, SPEED_OF_LIGHT_NM_PER_NS, SourceParams
from .validation import check_scalar

TWO_PI = 2.0 * math.pi
PhaseMode = Literal["fixed", "qrng"]

_BALANCE_RTOL = 1e-12


@dataclass(frozen=True)
class PerimeterGeometry:
    """Arm lengths in metres: left, top and right fence arms plus the bottom
    reference arm. Transit times are exposed in ns."""

    l_L: float
    l_T: float
    l_R: float
    l_B: float
    require_balanced: bool = True

    def __post_init__(self):
        for name in ("l_L", "l_T", "l_R", "l_B"):
            check_scalar(getattr(self, name), name, min_val=0.0, include_min=False)
        if self.require_balanced and not self.is_balanced:
            raise ValueError(
                f"unbalanced perimeter: l_L + l_T + l_R = {self.fence_length} m "
                f"but l_B = {self.l_B} m"
            )

    @classmethod
    def square(cls, side: float = 1.0) -> "PerimeterGeometry":
        return cls(side, side, side, 3.0 * side)

    @property
    def fence_length(self) -> float:
        return self.l_L + self.l_T + self.l_R

    @property
    def is_balanced(self) -> bool:
        return math.isclose(self.fence_length, self.l_B, rel_tol=_BALANCE_RTOL)

    @property
    def t_L(self) -> float:
        return self.l_L / SPEED_OF_LIGHT_M_PER_NS

    @property
    def t_T(self) -> float:
        return self.l_T / SPEED_OF_LIGHT_M_PER_NS

    @property
    def t_R(self) -> float:
        return self.l_R / SPEED_OF_LIGHT_M_PER_NS

    @property
    def t_B(self) -> float:
        return self.l_B / SPEED_OF_LIGHT_M_PER_NS

    @property
    def fence_excess(self) -> float:
        """Fence transit time minus bottom transit time (ns); zero when balanced."""
        return (self.fence_length - self.l_B) / SPEED_OF_LIGHT_M_PER_NS


@dataclass(frozen=True)
class DetectorWindow:
    """Detection interval of width ``resolving_time`` centred on ``t_j + t_B``.

    ``resolving_time=math.inf`` integrates over all time.
    """

    resolving_time: float

    def __post_init__(self):
        check_scalar(self.resolving_time, "resolving_time", min_val=0.0,
                     include_min=False, allow_inf=True)

    def bounds(self, herald_time: float, t_B: float) -> tuple[float, float]:
        centre = herald_time + t_B
        half = self.resolving_time / 2.0
        return centre - half, centre + half


# --- scenarios -------------------------------------------------------------

@dataclass(frozen=True)
class Normal:
    name = "normal"


@dataclass(frozen=True)
class Block:
    """Fence path fully absorbed."""

    name = "block"


@dataclass(frozen=True)
class SideIntrusion:
    """Same-arm diversion adding ``delta`` ns of flight time.

    The extra phase is ``xi_override`` when given, else computed from
    ``delta`` at ``xi_wavelength`` (nm; the pump wavelength when ``None``).
    """

    delta: float
    xi_override: float | None = None
    xi_wavelength: float | None = None
    name = "side_intrusion"

    def __post_init__(self):
        check_scalar(self.delta, "delta", min_val=0.0)
        if self.xi_override is not None:
            check_scalar(self.xi_override, "xi_override")
        if self.xi_wavelength is not None:
            check_scalar(self.xi_wavelength, "xi_wavelength", min_val=0.0, include_min=False)

    def xi(self, source: SourceParams) -> float:
        if self.xi_override is not None:
            return self.xi_override
        wavelength = self.xi_wavelength if self.xi_wavelength is not None else source.pump_wavelength
        return xi_from_delta(self.delta, wavelength)


@dataclass(frozen=True)
class CrossIntrusion:
    """Diversion between two arms that matches the fence length but replaces
    the phase of corner ``corner`` (1 or 2) with ``phi_int``."""

    phi_int: float
    corner: int = 1
    name = "cross_intrusion"

    def __post_init__(self):
        check_scalar(self.phi_int, "phi_int")
        if self.corner not in (1, 2):
            raise ValueError(f"corner must be 1 or 2, got {self.corner}")


@dataclass(frozen=True)
class InterceptResend:
    name = "intercept_resend"


Scenario = Union[Normal, Block, SideIntrusion, CrossIntrusion, InterceptResend]


# --- phase schedule --------------------------------------------------------

@dataclass
class PhaseSchedule:
    """Per-herald corner phases (rad).

    In ``"fixed"`` mode the bottom arm carries ``phi1 + phi2`` so the bright
    port is always w1. In ``"qrng"`` mode the bottom arm carries no phase,
    corner phases are restricted to {0, pi} and are revealed only after
    detection (``broadcast_delay`` ns later).
    """

    phi1: np.ndarray
    phi2: np.ndarray
    mode: PhaseMode = "fixed"
    broadcast_delay: float = 0.0

    def __post_init__(self):
        self.phi1 = np.asarray(self.phi1, dtype=float).reshape(-1)
        self.phi2 = np.asarray(self.phi2, dtype=float).reshape(-1)
        if self.phi1.shape != self.phi2.shape:
            raise ValueError("phi1 and phi2 must have the same length")
        if self.mode not in ("fixed", "qrng"):
            raise ValueError(f"unknown phase mode {self.mode!r}")
        check_scalar(self.broadcast_delay, "broadcast_delay", min_val=0.0)
        if self.mode == "qrng":
            for arr in (self.phi1, self.phi2):
                if not np.isin(arr, (0.0, math.pi)).all():
                    raise NonBinaryPhase("QRNG schedule entries must be 0 or pi")

    def __len__(self) -> int:
        return self.phi1.size

    @classmethod
    def constant(cls, n: int, phi1: float = 0.0, phi2: float = 0.0, mode: PhaseMode = "fixed",
                 broadcast_delay: float = 0.0) -> "PhaseSchedule":
        return cls(np.full(n, float(phi1)), np.full(n, float(phi2)), mode, broadcast_delay)

    @classmethod
    def draw(cls, n: int, mode: PhaseMode, rng: np.random.Generator,
             broadcast_delay: float = 0.0) -> "PhaseSchedule":
        if mode == "qrng":
            bits = rng.integers(0, 2, size=(2, n))
            phases = np.where(bits == 1, math.pi, 0.0)
        else:
            phases = rng.uniform(0.0, TWO_PI, size=(2, n))
        return cls(phases[0], phases[1], mode, broadcast_delay)

    def relative_phase(self, scenario: Scenario | None = None) -> np.ndarray:
        """Fence-path phase minus bottom-path phase for each herald, before
        any side-intrusion phase."""
        phi1, phi2 = self.phi1, self.phi2
        if isinstance(scenario, CrossIntrusion):
            if scenario.corner == 1:
                phi1 = np.full_like(phi1, scenario.phi_int)
            else:
                phi2 = np.full_like(phi2, scenario.phi_int)
        fence = phi1 + phi2
        bottom = self.phi1 + self.phi2 if self.mode == "fixed" else 0.0
        return fence - bottom


# --- closed forms ----------------------------------------------------------

def xi_from_delta(delta: float, wavelength: float) -> float:
    """Phase (rad) of ``delta`` ns of extra flight at vacuum ``wavelength`` nm.

    The full value is returned; use :func:`wrap_phase` for reporting.
    """
    check_scalar(delta, "delta", min_val=0.0)
    check_scalar(wavelength, "wavelength", min_val=0.0, include_min=False)
    return TWO_PI * SPEED_OF_LIGHT_NM_PER_NS * delta / wavelength


def wrap_phase(phase):
    return np.mod(phase, TWO_PI)


def _scaled(beta: float) -> float:
    return math.pi / math.sqrt(2.0 * beta)


def window_count_normal(beta: float, window: DetectorWindow, offset: float = 0.0) -> float:
    """Expected bright-port count per herald with no intrusion.

    ``offset`` shifts the wavepacket centre relative to the window centre,
    e.g. an uncompensated crystal delay.
    """
    k = _scaled(beta)
    T = window.resolving_time
    if offset == 0.0:
        return float(erf(k * T))
    return float(0.5 * (erf(k * (T - 2 * offset)) + erf(k * (T + 2 * offset))))


def window_count_block(i0: float) -> tuple[float, float]:
    return i0 / 4.0, i0 / 4.0


def _window_fraction(centre, beta: float, T: float):
    # fraction of a unit-normalised wavepacket centred at ``centre`` inside [-T/2, T/2]
    k = _scaled(beta)
    return 0.5 * (erf(k * (T - 2 * centre)) + erf(k * (T + 2 * centre)))


def _interference_terms(delta, beta: float, T: float):
    k = _scaled(beta)
    delta = np.asarray(delta, dtype=float)
    e2 = erf(k * (2 * delta + T)) - erf(k * (2 * delta - T))
    e1 = erf(k * (delta + T)) - erf(k * (delta - T))
    envelope = np.exp(-(math.pi**2) * delta * delta / (2.0 * beta))
    return e1, e2, envelope


def interference_counts(delta, phase, beta: float, pump_frequency: float, window: DetectorWindow,
                        offset: float = 0.0):
    """Port counts when the fence copy arrives ``delta`` ns late with extra
    phase ``phase`` relative to the bottom copy.

    ``offset`` displaces both copies from the window centre. Vectorised over
    ``delta`` and ``phase``. Returns ``(w1, w2)``.
    """
    T = window.resolving_time
    delta = np.asarray(delta, dtype=float)
    fringe = np.cos(math.pi * delta * pump_frequency - np.asarray(phase))
    if offset == 0.0:
        i0 = window_count_normal(beta, window)
        e1, e2, envelope = _interference_terms(delta, beta, T)
        cross = 2.0 * envelope * fringe * e1
        base = 2.0 * i0 + e2
    else:
        envelope = np.exp(-(math.pi**2) * delta * delta / (2.0 * beta))
        base = 2.0 * (_window_fraction(offset, beta, T) + _window_fraction(offset + delta, beta, T))
        cross = 4.0 * envelope * fringe * _window_fraction(offset + delta / 2.0, beta, T)
    w1 = (base + cross) / 8.0
    w2 = (base - cross) / 8.0
    if np.ndim(w1) == 0:
        return float(w1), float(w2)
    return w1, w2


def window_count_side_intrusion(delta: float, xi: float, beta: float, pump_frequency: float,
                                window: DetectorWindow) -> tuple[float, float]:
    check_scalar(delta, "delta", min_val=0.0)
    return interference_counts(delta, xi, beta, pump_frequency, window)


def side_intrusion_port_sum(delta: float, beta: float, window: DetectorWindow) -> float:
    """``w1 + w2`` for a side intrusion; independent of phase and carrier."""
    _, e2, _ = _interference_terms(delta, beta, window.resolving_time)
    return float((2.0 * window_count_normal(beta, window) + e2) / 4.0)


def window_count_cross_intrusion(phi_int: float, phi1: float, beta: float,
                                 window: DetectorWindow) -> tuple[float, float]:
    i0 = window_count_normal(beta, window)
    c = math.cos(phi_int - phi1)
    return i0 / 2.0 * (1.0 + c), i0 / 2.0 * (1.0 - c)


def cross_intrusion_phase_average() -> float:
    """Bright-port fraction averaged uniformly over the intruder phase.

    The cosine term integrates to zero over a full period.
    """
    return 0.5


def window_count_intercept_resend(i0: float) -> tuple[float, float]:
    return i0 / 2.0, i0 / 2.0


def delay_matched(t_j: float, t_k: float, delta: float, beta: float) -> bool:
    """True when the herald separation is within sqrt(beta) of a positive
    multiple of ``delta``, i.e. a delayed fence copy of one photon can
    overlap the bottom copy of the other."""
    if delta <= 0:
        return False
    sep = abs(t_j - t_k)
    m = round(sep / delta)
    return m >= 1 and abs(sep - m * delta) < math.sqrt(beta)


def two_photon_window_count(t_j: float, t_k: float, delta: float, beta: float,
                            pump_frequency: float, window: DetectorWindow,
                            xi: float = 0.0) -> float:
    """Total w1 count for two heralded photons, each in its own window.

    With well separated heralds the two-photon expectation is the sum of
    the single-photon ones; no cross term survives.
    """
    if abs(t_j - t_k) < math.sqrt(beta):
        raise HeraldsTooClose(
            f"|t_j - t_k| = {abs(t_j - t_k)} ns < sqrt(beta) = {math.sqrt(beta)} ns"
        )
    if delay_matched(t_j, t_k, delta, beta):
        logging.getLogger(__name__).warning(
            "herald separation %.6g ns matches a multiple of delta=%.6g ns; "
            "additive form kept, coincidence is low probability", abs(t_j - t_k), delta)
    w1, _ = window_count_side_intrusion(delta, xi, beta, pump_frequency, window)
    return 2.0 * w1


# --- model -----------------------------------------------------------------

@dataclass(frozen=True)
class TripwireModel:
    """Source plus perimeter: evaluates per-herald expected port counts."""

    source: SourceParams = field(default_factory=SourceParams)
    geometry: PerimeterGeometry = field(default_factory=PerimeterGeometry.square)

    @property
    def beta(self) -> float:
        return self.source.beta

    def i0(self, window: DetectorWindow) -> float:
        return window_count_normal(self.beta, window, self.source.delay)

    def xi(self, scenario: SideIntrusion) -> float:
        return scenario.xi(self.source)

    def expected_counts(self, scenario: Scenario, window: DetectorWindow,
                        schedule: PhaseSchedule | None = None):
        """Expected ``(w1, w2)`` counts per herald, as arrays aligned with
        ``schedule`` (scalars when no schedule is given)."""
        if schedule is None:
            schedule = PhaseSchedule.constant(1)
            scalar = True
        else:
            scalar = False
        n = len(schedule)
        beta, nu_p = self.beta, self.source.pump_frequency
        if isinstance(scenario, Block):
            w1, w2 = window_count_block(self.i0(window))
            w1, w2 = np.full(n, w1), np.full(n, w2)
        elif isinstance(scenario, InterceptResend):
            w1, w2 = window_count_intercept_resend(self.i0(window))
            w1, w2 = np.full(n, w1), np.full(n, w2)
        elif isinstance(scenario, (Normal, SideIntrusion, CrossIntrusion)):
            phase = schedule.relative_phase(scenario)
            delta = 0.0
            if isinstance(scenario, SideIntrusion):
                delta = scenario.delta
                phase = phase + self.xi(scenario)
            delta = delta + self.geometry.fence_excess
            w1, w2 = interference_counts(np.full(n, delta), phase, beta, nu_p, window,
                                         offset=self.source.delay)
        else:
            raise TypeError(f"unknown scenario {scenario!r}")
        if scalar:
            return float(w1[0]), float(w2[0])
        return w1, w2
