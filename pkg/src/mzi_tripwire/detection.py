"""Monte Carlo click streams from the analytic per-herald counts.

Detector loss is Bernoulli thinning of the analytic count at each port;
dark counts are an independent Bernoulli per window and port.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import ProbabilityOverflow, ScheduleExhausted
from .interferometer import DetectorWindow, PhaseSchedule, Scenario, TripwireModel
from .source import HeraldEvent
from .validation import check_probability, check_scalar

RECORD_FIELDS = ("index", "t_j", "outcome", "phi1", "phi2")
_PROB_SLACK = 1e-12


class Outcome(str, enum.Enum):
    W1 = "w1"
    W2 = "w2"
    NONE = "none"
    BOTH = "both"

    @property
    def indicators(self) -> tuple[int, int]:
        return _INDICATORS[self]


_INDICATORS = {
    Outcome.W1: (1, 0),
    Outcome.W2: (0, 1),
    Outcome.NONE: (0, 0),
    Outcome.BOTH: (1, 1),
}
_FROM_CODE = (Outcome.NONE, Outcome.W1, Outcome.W2, Outcome.BOTH)


@dataclass(frozen=True)
class DetectorModel:
    window: DetectorWindow
    efficiency_w1: float = 1.0
    efficiency_w2: float = 1.0
    dark_count_rate: float = 0.0

    def __post_init__(self):
        check_probability(self.efficiency_w1, "efficiency_w1")
        check_probability(self.efficiency_w2, "efficiency_w2")
        check_scalar(self.dark_count_rate, "dark_count_rate", min_val=0.0)
        if self.dark_count_rate > 0 and math.isinf(self.window.resolving_time):
            raise ValueError("dark counts need a finite resolving time")

    @property
    def dark_probability(self) -> float:
        """Probability of a dark click in one window at one port."""
        return min(1.0, self.dark_count_rate * self.window.resolving_time) if self.dark_count_rate else 0.0


@dataclass(frozen=True)
class DetectionRecord:
    index: int
    herald_time: float
    window_center: float
    outcome: Outcome
    phi1: float = 0.0
    phi2: float = 0.0

    def as_row(self) -> dict:
        return {"index": self.index, "t_j": self.herald_time, "outcome": self.outcome.value,
                "phi1": self.phi1, "phi2": self.phi2}


def click_probabilities(model: TripwireModel, scenario: Scenario, detector: DetectorModel,
                        schedule: PhaseSchedule | None = None):
    """Per-herald photon click probabilities ``(q1, q2)`` after detector loss.

    Dark counts are not folded in; see :attr:`DetectorModel.dark_probability`.
    """
    c1, c2 = model.expected_counts(scenario, detector.window, schedule)
    q1 = detector.efficiency_w1 * np.asarray(c1, dtype=float)
    q2 = detector.efficiency_w2 * np.asarray(c2, dtype=float)
    total = q1 + q2
    if (q1 < -_PROB_SLACK).any() or (q2 < -_PROB_SLACK).any() or (total > 1 + _PROB_SLACK).any():
        raise ProbabilityOverflow(
            f"click probabilities out of range: q1 in [{q1.min()}, {q1.max()}], "
            f"q2 in [{q2.min()}, {q2.max()}], max q1+q2 {total.max()}"
        )
    q1 = np.clip(q1, 0.0, 1.0)
    q2 = np.clip(q2, 0.0, 1.0 - q1)
    if q1.ndim == 0:
        return float(q1), float(q2)
    return q1, q2


def _herald_times(heralds) -> np.ndarray:
    if isinstance(heralds, np.ndarray):
        return heralds.astype(float, copy=False).reshape(-1)
    heralds = list(heralds)
    if heralds and isinstance(heralds[0], HeraldEvent):
        return np.array([h.time for h in heralds], dtype=float)
    return np.asarray(heralds, dtype=float).reshape(-1)


def simulate_run(model: TripwireModel, scenario: Scenario, heralds, detector: DetectorModel,
                 schedule: PhaseSchedule | None = None, seed=None) -> list[DetectionRecord]:
    """One detection record per herald for a fixed scenario.

    ``heralds`` is a sequence of :class:`HeraldEvent` or an array of times.
    Without a ``schedule`` QRNG phases are drawn from the seeded generator
    and frozen into the records.
    """
    times = _herald_times(heralds)
    n = times.size
    rng = np.random.default_rng(seed)
    if schedule is None:
        schedule = PhaseSchedule.draw(n, "qrng", rng)
    if len(schedule) < n:
        raise ScheduleExhausted(f"schedule has {len(schedule)} entries for {n} heralds")
    if n == 0:
        return []
    if len(schedule) > n:
        schedule = PhaseSchedule(schedule.phi1[:n], schedule.phi2[:n], schedule.mode,
                                 schedule.broadcast_delay)

    q1, q2 = click_probabilities(model, scenario, detector, schedule)
    u = rng.random(n)
    click1 = u < q1
    click2 = (u >= q1) & (u < q1 + q2)
    p_dark = detector.dark_probability
    if p_dark > 0:
        click1 |= rng.random(n) < p_dark
        click2 |= rng.random(n) < p_dark
    codes = click1.astype(np.int8) + 2 * click2.astype(np.int8)

    t_B = model.geometry.t_B
    return [
        DetectionRecord(i, float(times[i]), float(times[i] + t_B), _FROM_CODE[codes[i]],
                        float(schedule.phi1[i]), float(schedule.phi2[i]))
        for i in range(n)
    ]


def schedule_from_records(records: Sequence[DetectionRecord], mode="fixed") -> PhaseSchedule:
    return PhaseSchedule(np.array([r.phi1 for r in records]), np.array([r.phi2 for r in records]), mode)


# --- serialisation ---------------------------------------------------------
# floats are written with repr() so that re-parsing is bit exact.

def _fmt(x: float) -> str:
    return repr(float(x))


def dump_records(records: Iterable[DetectionRecord], fmt: str = "csv") -> str:
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(",".join(RECORD_FIELDS) + "\n")
        for r in records:
            buf.write(f"{r.index},{_fmt(r.herald_time)},{r.outcome.value},{_fmt(r.phi1)},{_fmt(r.phi2)}\n")
    elif fmt == "json-lines":
        for r in records:
            buf.write(json.dumps(r.as_row()) + "\n")
    else:
        raise ValueError(f"unknown record format {fmt!r}")
    return buf.getvalue()


def load_records(text: str, t_B: float = 0.0) -> list[DetectionRecord]:
    """Parse records written by :func:`dump_records`; the format is sniffed."""
    stripped = text.lstrip()
    if not stripped:
        return []
    if stripped.startswith("{"):
        rows = [json.loads(line) for line in stripped.splitlines() if line.strip()]
    else:
        reader = csv.DictReader(io.StringIO(stripped))
        if tuple(reader.fieldnames or ()) != RECORD_FIELDS:
            raise ValueError(f"bad record header {reader.fieldnames}, expected {list(RECORD_FIELDS)}")
        rows = list(reader)
    out = []
    for lineno, row in enumerate(rows, start=1):
        try:
            t_j = float(row["t_j"])
            out.append(DetectionRecord(int(row["index"]), t_j, t_j + t_B, Outcome(row["outcome"]),
                                       float(row["phi1"]), float(row["phi2"])))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"record {lineno}: {exc}") from exc
    return out


def write_records(path, records, fmt: str = "csv") -> None:
    Path(path).write_text(dump_records(records, fmt), encoding="utf-8")


def read_records(path, t_B: float = 0.0) -> list[DetectionRecord]:
    return load_records(Path(path).read_text(encoding="utf-8"), t_B)


def dump_schedule(schedule: PhaseSchedule) -> str:
    lines = [f"# mode={schedule.mode} broadcast_delay_ns={_fmt(schedule.broadcast_delay)}",
             "index,phi1,phi2"]
    lines += [f"{i},{_fmt(a)},{_fmt(b)}" for i, (a, b) in enumerate(zip(schedule.phi1, schedule.phi2))]
    return "\n".join(lines) + "\n"


def load_schedule(text: str) -> PhaseSchedule:
    lines = text.splitlines()
    mode, delay = "fixed", 0.0
    if lines and lines[0].startswith("#"):
        meta = dict(item.split("=", 1) for item in lines[0][1:].split())
        mode = meta.get("mode", mode)
        delay = float(meta.get("broadcast_delay_ns", delay))
        lines = lines[1:]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != ("index", "phi1", "phi2"):
        raise ValueError(f"bad schedule header {reader.fieldnames}")
    phi1, phi2 = [], []
    for expected, row in enumerate(reader):
        if int(row["index"]) != expected:
            raise ValueError(f"schedule index {row['index']} out of order (expected {expected})")
        phi1.append(float(row["phi1"]))
        phi2.append(float(row["phi2"]))
    return PhaseSchedule(np.array(phi1), np.array(phi2), mode, delay)
