"""Mach-Zehnder quantum tripwire simulator."""

from .detection import DetectionRecord, DetectorModel, Outcome, click_probabilities, simulate_run
from .interferometer import (
    Block,
    CrossIntrusion,
    DetectorWindow,
    InterceptResend,
    Normal,
    PerimeterGeometry,
    PhaseSchedule,
    SideIntrusion,
    TripwireModel,
    window_count_block,
    window_count_cross_intrusion,
    window_count_intercept_resend,
    window_count_normal,
    window_count_side_intrusion,
    xi_from_delta,
)
from .monitor import AlarmConfig, TripwireMonitor, calibrate, evaluate_alarm, verify_broadcast
from .numeric import numeric_window_count
from .source import HeraldEvent, SourceParams, derive_beta, sample_heralds

__all__ = [
    "DetectionRecord",
    "DetectorModel",
    "Outcome",
    "click_probabilities",
    "simulate_run",
    "Block",
    "CrossIntrusion",
    "DetectorWindow",
    "InterceptResend",
    "Normal",
    "PerimeterGeometry",
    "PhaseSchedule",
    "SideIntrusion",
    "TripwireModel",
    "window_count_block",
    "window_count_cross_intrusion",
    "window_count_intercept_resend",
    "window_count_normal",
    "window_count_side_intrusion",
    "xi_from_delta",
    "AlarmConfig",
    "TripwireMonitor",
    "calibrate",
    "evaluate_alarm",
    "verify_broadcast",
    "numeric_window_count",
    "HeraldEvent",
    "SourceParams",
    "derive_beta",
    "sample_heralds",
]

__version__ = "0.1.0"
