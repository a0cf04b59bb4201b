"""Outcome of a gluing-orbit search."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


class Outcome(enum.Enum):
    WITNESS = "Witness"
    EXHAUSTED = "ExhaustedNoWitness"


@dataclass
class ShadowingResult:
    """A witness point, or a certified failure at the stated grid resolution.

    For ``EXHAUSTED`` the deviation is the minimum over the whole grid, so it
    is at least ``eps``; for ``WITNESS`` it is below ``eps``.
    """

    outcome: Outcome
    point: tuple[float, float] | None
    deviation: float
    grid_resolution: float
    n_evaluated: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def is_witness(self) -> bool:
        return self.outcome == Outcome.WITNESS

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "point": None if self.point is None else [float(v) for v in self.point],
            "deviation": None if math.isinf(self.deviation) else self.deviation,
            "grid_resolution": self.grid_resolution,
            "n_evaluated": self.n_evaluated,
            "meta": {k: (float(v) if isinstance(v, float) else v) for k, v in self.meta.items()},
        }
