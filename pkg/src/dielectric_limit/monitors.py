"""Runtime monitors and the per-step metrics sink."""

from __future__ import annotations

import logging
from typing import Protocol

import numpy as np

from .eos import EosClosure

log = logging.getLogger(__name__)


class PositivityError(RuntimeError):
    """Pressure or entropy left the admissible set.

    Carries the offending minima and the time so the caller can report where
    the run broke down.
    """

    def __init__(self, t: float, min_p: float, min_S: float, where: str = ""):
        self.t = float(t)
        self.min_p = float(min_p)
        self.min_S = float(min_S)
        self.where = where
        tag = f" [{where}]" if where else ""
        super().__init__(
            f"positivity monitor tripped at t={self.t:.6g}{tag}: "
            f"min p={self.min_p:.6g}, min S={self.min_S:.6g}"
        )


def check_positivity(p, S, t: float, eos: EosClosure, where: str = ""):
    """Raise :class:`PositivityError` unless ``p > p_floor`` and ``S > S_floor``."""
    min_p = float(np.min(p))
    min_S = float(np.min(S))
    if not (min_p > eos.p_floor and min_S > eos.S_floor) or not (
        np.isfinite(min_p) and np.isfinite(min_S)
    ):
        raise PositivityError(t, min_p, min_S, where)
    return min_p, min_S


class MetricsSink(Protocol):
    def record(self, t: float, **scalars: float) -> None: ...


class NullSink:
    def record(self, t: float, **scalars: float) -> None:
        pass


class ListSink:
    """Keeps every record in memory; handy in tests and small runs."""

    def __init__(self):
        self.rows: list[dict] = []

    def record(self, t: float, **scalars: float) -> None:
        self.rows.append({"t": float(t), **{k: float(v) for k, v in scalars.items()}})

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])
