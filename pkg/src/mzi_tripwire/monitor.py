"""Alarm layer: bright-port fraction, calibrated deviations and the
delayed phase-broadcast check.

``theta = n1 / (n1 + n2)`` over a sliding window of the last ``N`` heralds
drops toward 1/2 under every modelled intrusion. ``gamma_i`` is the
calibrated click probability at port ``i`` minus the measured one, in
units of the ideal count ``I0``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .detection import DetectionRecord, Outcome
from .exceptions import (
    EmptyCalibration,
    InsufficientData,
    NonBinaryPhase,
    ScheduleMismatch,
)
from .interferometer import PhaseSchedule
from .validation import check_clicks, check_scalar

THETA = "theta"
THETA_UNDEFINED = "theta_undefined"
GAMMA1 = "gamma1"
GAMMA2 = "gamma2"
BROADCAST = "broadcast"


@dataclass(frozen=True)
class AlarmConfig:
    """Alarm tolerances. The defaults are arbitrary starting points; real
    values have to come from characterising the installed sensor."""

    nu: float = 0.9
    eps1: float = 0.1
    eps2: float = 0.1
    window: int = 1000

    def __post_init__(self):
        check_scalar(self.nu, "nu", min_val=0.0, max_val=1.0, include_min=False)
        check_scalar(self.eps1, "eps1", min_val=0.0)
        check_scalar(self.eps2, "eps2", min_val=0.0)
        if not isinstance(self.window, (int, np.integer)) or self.window < 1:
            raise ValueError(f"window must be a positive integer, got {self.window!r}")


@dataclass(frozen=True)
class AlarmDecision:
    alarm: bool
    reasons: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.alarm


def theta(n1: int, n2: int) -> float | None:
    """Bright-port click fraction; ``None`` when no port clicked."""
    total = n1 + n2
    return n1 / total if total > 0 else None


def calibrate(records) -> tuple[float, float]:
    """Per-port click frequencies ``(p1, p2)`` over a no-intrusion run."""
    clicks = check_clicks(records)
    if clicks.shape[0] == 0:
        raise EmptyCalibration("no records to calibrate on")
    p1, p2 = clicks.mean(axis=0)
    return float(p1), float(p2)


@dataclass
class MonitorState:
    """Sliding-window counts for one perimeter. Updated in place."""

    window: int
    p1: float
    p2: float
    i0: float = 1.0
    n1: int = 0
    n2: int = 0
    processed: int = 0
    _buffer: deque = field(default_factory=deque, repr=False)

    @property
    def filled(self) -> int:
        return min(self.processed, self.window)

    @property
    def theta(self) -> float | None:
        return theta(self.n1, self.n2)

    @property
    def gamma1(self) -> float:
        return (self.p1 - self.n1 / self.filled) / self.i0 if self.filled else 0.0

    @property
    def gamma2(self) -> float:
        return (self.p2 - self.n2 / self.filled) / self.i0 if self.filled else 0.0

    def snapshot(self) -> dict:
        return {"n1": self.n1, "n2": self.n2, "theta": self.theta,
                "gamma1": self.gamma1, "gamma2": self.gamma2}


def update(state: MonitorState, record) -> MonitorState:
    """Push one record (or a ``(c1, c2)`` indicator pair) into the window."""
    c1, c2 = record.outcome.indicators if isinstance(record, DetectionRecord) else record
    state._buffer.append((c1, c2))
    state.n1 += c1
    state.n2 += c2
    if len(state._buffer) > state.window:
        o1, o2 = state._buffer.popleft()
        state.n1 -= o1
        state.n2 -= o2
    state.processed += 1
    return state


def decide(theta_value, gamma1: float, gamma2: float, config: AlarmConfig) -> AlarmDecision:
    reasons = []
    if theta_value is None or (isinstance(theta_value, float) and math.isnan(theta_value)):
        reasons.append(THETA_UNDEFINED)
    elif theta_value < config.nu:
        reasons.append(THETA)
    if abs(gamma1) >= config.eps1:
        reasons.append(GAMMA1)
    if abs(gamma2) >= config.eps2:
        reasons.append(GAMMA2)
    return AlarmDecision(bool(reasons), tuple(reasons))


def evaluate_alarm(state: MonitorState, config: AlarmConfig) -> AlarmDecision:
    if state.processed < config.window:
        raise InsufficientData(f"{state.processed} heralds processed, window needs {config.window}")
    return decide(state.theta, state.gamma1, state.gamma2, config)


# --- phase broadcast ---------------------------------------------------------

def expected_port(phi1: float, phi2: float) -> Outcome:
    """Port a photon exits in QRNG mode: w1 when the corner phases agree."""
    for p in (phi1, phi2):
        if p != 0.0 and p != math.pi:
            raise NonBinaryPhase(f"corner phase {p!r} is not 0 or pi")
    return Outcome.W1 if phi1 == phi2 else Outcome.W2


@dataclass(frozen=True)
class BroadcastVerdict:
    match_fraction: float | None
    n_clicked: int
    threshold: float | None
    verdict: str  # "pass", "fail" or "insufficient_data"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def default_broadcast_threshold(n_clicked: int) -> float:
    """``1 - 3 sigma`` with the widest binomial sigma, ``0.5 / sqrt(n)``.

    The ideal match fraction is exactly 1, which has no spread of its own.
    """
    return 1.0 - 1.5 / math.sqrt(n_clicked)


def _check_alignment(records: Sequence[DetectionRecord], schedule: PhaseSchedule):
    if not records:
        return
    top = max(r.index for r in records)
    if top >= len(schedule) or min(r.index for r in records) < 0:
        raise ScheduleMismatch(f"schedule has {len(schedule)} entries, records reach index {top}")


def align_to_expected_port(records: Sequence[DetectionRecord], schedule: PhaseSchedule) -> np.ndarray:
    """Click indicators relabelled as (expected port, other port) using the
    broadcast phases, so QRNG runs can be fed to the Theta monitor."""
    _check_alignment(records, schedule)
    out = np.zeros((len(records), 2), dtype=np.int64)
    for row, r in enumerate(records):
        c1, c2 = r.outcome.indicators
        if expected_port(schedule.phi1[r.index], schedule.phi2[r.index]) is Outcome.W1:
            out[row] = (c1, c2)
        else:
            out[row] = (c2, c1)
    return out


def verify_broadcast(records: Sequence[DetectionRecord], schedule: PhaseSchedule,
                     threshold: float | None = None) -> BroadcastVerdict:
    """Compare single-port clicks with the ports implied by the revealed phases."""
    _check_alignment(records, schedule)
    matched = clicked = 0
    for r in records:
        if r.outcome not in (Outcome.W1, Outcome.W2):
            continue
        clicked += 1
        matched += r.outcome is expected_port(schedule.phi1[r.index], schedule.phi2[r.index])
    if clicked == 0:
        return BroadcastVerdict(None, 0, threshold, "insufficient_data")
    fraction = matched / clicked
    if threshold is None:
        threshold = default_broadcast_threshold(clicked)
    return BroadcastVerdict(fraction, clicked, threshold, "pass" if fraction >= threshold else "fail")


# --- estimator ---------------------------------------------------------------

def _sliding_sum(x: np.ndarray, window: int) -> np.ndarray:
    c = np.cumsum(x, axis=0)
    c[window:] = c[window:] - c[:-window]
    return c


class TripwireMonitor(BaseEstimator):
    """Alarm estimator with a scikit-learn interface.

    ``fit`` calibrates the per-port click probabilities on a no-intrusion
    stream; ``transform`` returns the sliding-window ``(theta, gamma1,
    gamma2)`` per herald and ``predict`` the alarm flag per herald.

    Parameters
    ----------
    window : int
        Number of most recent heralds the statistics are taken over.
    nu : float
        Alarm when ``theta < nu``.
    eps1, eps2 : float
        Alarm when ``|gamma_i| >= eps_i``.
    i0 : float
        Ideal per-herald bright-port count used to scale ``gamma``.
    """

    def __init__(self, window=1000, nu=0.9, eps1=0.1, eps2=0.1, i0=1.0):
        self.window = window
        self.nu = nu
        self.eps1 = eps1
        self.eps2 = eps2
        self.i0 = i0

    def _config(self) -> AlarmConfig:
        return AlarmConfig(self.nu, self.eps1, self.eps2, self.window)

    def fit(self, X, y=None):
        self._config()
        check_scalar(self.i0, "i0", min_val=0.0, include_min=False)
        self.p_ = np.array(calibrate(X))
        self.n_calibration_ = check_clicks(X).shape[0]
        return self

    def transform(self, X) -> np.ndarray:
        """``(n, 3)`` array of theta, gamma1, gamma2; theta is NaN when no
        port clicked in the window."""
        check_is_fitted(self, "p_")
        clicks = check_clicks(X)
        if clicks.shape[0] == 0:
            return np.zeros((0, 3))
        counts = _sliding_sum(clicks, self.window).astype(float)
        filled = np.minimum(np.arange(1, clicks.shape[0] + 1), self.window)[:, None]
        total = counts.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            th = np.where(total > 0, counts[:, 0] / total, np.nan)
        gamma = (self.p_[None, :] - counts / filled) / self.i0
        return np.column_stack([th, gamma])

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)

    def predict(self, X) -> np.ndarray:
        """Alarm flag per herald; ``False`` until the first full window."""
        feats = self.transform(X)
        cfg = self._config()
        th = feats[:, 0]
        alarm = np.isnan(th) | (th < cfg.nu)
        alarm |= np.abs(feats[:, 1]) >= cfg.eps1
        alarm |= np.abs(feats[:, 2]) >= cfg.eps2
        alarm[: cfg.window - 1] = False
        return alarm

    def evaluate(self, X) -> AlarmDecision:
        """Decision on the most recent full window of ``X``."""
        feats = self.transform(X)
        if feats.shape[0] < self.window:
            raise InsufficientData(f"{feats.shape[0]} heralds, window needs {self.window}")
        th, g1, g2 = feats[-1]
        return decide(None if math.isnan(th) else float(th), float(g1), float(g2), self._config())

    def new_state(self) -> MonitorState:
        """Streaming counterpart of :meth:`transform` seeded with the calibration."""
        check_is_fitted(self, "p_")
        return MonitorState(self.window, float(self.p_[0]), float(self.p_[1]), self.i0)
