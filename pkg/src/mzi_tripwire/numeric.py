"""Brute-force quadrature oracle for the windowed port counts.

Builds the complex temporal amplitude at each output port by pushing the
heralded wavepacket through both beam splitters, squares it and integrates
over the detection window with the trapezoid rule. Shares no code with the
closed forms in :mod:`mzi_tripwire.interferometer`.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import trapezoid

from .exceptions import GridTooCoarse
from .interferometer import (
    Block,
    CrossIntrusion,
    DetectorWindow,
    InterceptResend,
    Normal,
    PerimeterGeometry,
    Scenario,
    SideIntrusion,
)
from .source import SPEED_OF_LIGHT_M_PER_NS, wavepacket_amplitude

MIN_POINTS_PER_SQRT_BETA = 64
DEFAULT_POINTS_PER_SQRT_BETA = 4096
FULL_TIME_PAD = 6.0  # in units of sqrt(beta)

_SQRT1_2 = 1.0 / math.sqrt(2.0)


def _fence_lag(geometry: PerimeterGeometry) -> float:
    # difference the lengths before converting: subtracting two ~10 ns transit
    # times leaves a residue that the optical carrier turns into a phase error
    return (geometry.l_L + geometry.l_T + geometry.l_R - geometry.l_B) / SPEED_OF_LIGHT_M_PER_NS


def _grid(lo: float, hi: float, sqrt_beta: float, resolution: int) -> np.ndarray:
    n = max(2, math.ceil((hi - lo) / sqrt_beta * resolution))
    return np.linspace(lo, hi, n + 1)


def _port_amplitudes(g_out, u3_out):
    """Second beam splitter: ``w1 = (g + i u3)/sqrt2``, ``w2 = (i g + u3)/sqrt2``."""
    return _SQRT1_2 * (g_out + 1j * u3_out), _SQRT1_2 * (1j * g_out + u3_out)


def _path_phases(scenario: Scenario, phases, phase_mode: str, xi: float):
    phi1, phi2 = (float(p) for p in phases)
    bottom = phi1 + phi2 if phase_mode == "fixed" else 0.0
    if isinstance(scenario, CrossIntrusion):
        if scenario.corner == 1:
            phi1 = scenario.phi_int
        else:
            phi2 = scenario.phi_int
    fence = phi1 + phi2
    if isinstance(scenario, SideIntrusion):
        fence += xi
    return fence, bottom


def _branch_intensities(scenario, u, beta, pump_frequency, fence_lag, fence_phase, bottom_phase,
                        source_delay):
    """List of ``(weight, |w1|^2, |w2|^2)`` incoherent branches on grid ``u``.

    ``u`` is time relative to the expected bottom-path arrival.
    """
    psi_bottom = wavepacket_amplitude(beta, pump_frequency, u - source_delay)
    psi_fence = wavepacket_amplitude(beta, pump_frequency, u - fence_lag - source_delay)
    # first beam splitter: g = (a + i s)/sqrt2, u1 = (s + i a)/sqrt2, source photon in s
    g_out = np.exp(1j * bottom_phase) * (1j * _SQRT1_2) * psi_bottom
    u3_out = np.exp(1j * fence_phase) * _SQRT1_2 * psi_fence
    zero = np.zeros_like(g_out)

    if isinstance(scenario, Block):
        branches = [(1.0, g_out, zero)]
    elif isinstance(scenario, InterceptResend):
        # which-path measurement on the fence; a fresh photon is resent when one is found
        branches = [
            (0.5, zero, np.exp(1j * fence_phase) * psi_fence),
            (0.5, np.exp(1j * bottom_phase) * 1j * psi_bottom, zero),
        ]
    elif isinstance(scenario, (Normal, SideIntrusion, CrossIntrusion)):
        branches = [(1.0, g_out, u3_out)]
    else:
        raise TypeError(f"unknown scenario {scenario!r}")

    out = []
    for weight, g, u3 in branches:
        w1, w2 = _port_amplitudes(g, u3)
        out.append((weight, np.abs(w1) ** 2, np.abs(w2) ** 2))
    return out


def numeric_window_count(scenario: Scenario, beta: float, pump_frequency: float,
                         geometry: PerimeterGeometry, window: DetectorWindow,
                         grid_resolution: int = DEFAULT_POINTS_PER_SQRT_BETA, *,
                         phases=(0.0, 0.0), phase_mode: str = "fixed",
                         xi: float | None = None, source_delay: float = 0.0):
    """Expected ``(w1, w2)`` counts per herald by direct quadrature.

    ``grid_resolution`` is the number of grid points per ``sqrt(beta)``.
    For side intrusions ``xi`` is the extra fence phase (required).
    """
    if grid_resolution < MIN_POINTS_PER_SQRT_BETA:
        raise GridTooCoarse(
            f"grid_resolution={grid_resolution} < {MIN_POINTS_PER_SQRT_BETA} points per sqrt(beta)"
        )
    if isinstance(scenario, SideIntrusion) and xi is None:
        raise ValueError("xi is required for a side intrusion")
    sqrt_beta = math.sqrt(beta)
    fence_lag = _fence_lag(geometry)
    if isinstance(scenario, SideIntrusion):
        fence_lag += scenario.delta
    fence_phase, bottom_phase = _path_phases(scenario, phases, phase_mode, xi or 0.0)

    T = window.resolving_time
    if math.isinf(T):
        centres = (source_delay, source_delay + fence_lag)
        lo = min(centres) - FULL_TIME_PAD * sqrt_beta
        hi = max(centres) + FULL_TIME_PAD * sqrt_beta
    else:
        lo, hi = -T / 2.0, T / 2.0
    u = _grid(lo, hi, sqrt_beta, grid_resolution)

    c1 = c2 = 0.0
    for weight, i1, i2 in _branch_intensities(scenario, u, beta, pump_frequency, fence_lag,
                                              fence_phase, bottom_phase, source_delay):
        c1 += weight * trapezoid(i1, u)
        c2 += weight * trapezoid(i2, u)
    return float(c1), float(c2)


def numeric_flux_w1(t, herald_time: float, scenario: Scenario, beta: float,
                    pump_frequency: float, geometry: PerimeterGeometry, *,
                    xi: float = 0.0, phases=(0.0, 0.0), phase_mode: str = "fixed"):
    """Bright-port flux density (per ns) at absolute times ``t`` from one herald."""
    t = np.asarray(t, dtype=float)
    fence_lag = _fence_lag(geometry)
    if isinstance(scenario, SideIntrusion):
        fence_lag += scenario.delta
    fence_phase, bottom_phase = _path_phases(scenario, phases, phase_mode, xi)
    u = t - herald_time - geometry.t_B
    total = np.zeros_like(u)
    for weight, i1, _ in _branch_intensities(scenario, u, beta, pump_frequency, fence_lag,
                                             fence_phase, bottom_phase, 0.0):
        total += weight * i1
    return total


def numeric_two_photon_integral(t_j: float, t_k: float, scenario: Scenario, beta: float,
                                pump_frequency: float, geometry: PerimeterGeometry,
                                grid_resolution: int = DEFAULT_POINTS_PER_SQRT_BETA, *,
                                xi: float = 0.0) -> float:
    """Full-time integral of the two-photon bright-port flux, summed over both heralds."""
    if grid_resolution < MIN_POINTS_PER_SQRT_BETA:
        raise GridTooCoarse(
            f"grid_resolution={grid_resolution} < {MIN_POINTS_PER_SQRT_BETA} points per sqrt(beta)"
        )
    sqrt_beta = math.sqrt(beta)
    extra = scenario.delta if isinstance(scenario, SideIntrusion) else 0.0
    lo = min(t_j, t_k) + geometry.t_B - FULL_TIME_PAD * sqrt_beta
    hi = max(t_j, t_k) + geometry.t_B + extra + FULL_TIME_PAD * sqrt_beta
    t = _grid(lo, hi, sqrt_beta, grid_resolution)
    flux = sum(numeric_flux_w1(t, th, scenario, beta, pump_frequency, geometry, xi=xi)
               for th in (t_j, t_k))
    return float(trapezoid(flux, t))
