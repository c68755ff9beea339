"""Numeric defaults and normalization switches."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum


class Normalization(str, Enum):
    """How curvature enters the Chern character."""

    RAW = "raw"
    CHERN_INTEGER = "chern"

    @property
    def curvature_factor(self) -> complex:
        if self is Normalization.CHERN_INTEGER:
            return 1j / (2.0 * math.pi)
        return 1.0 + 0.0j

    @classmethod
    def parse(cls, value: "str | Normalization") -> "Normalization":
        if isinstance(value, Normalization):
            return value
        aliases = {"raw": cls.RAW, "chern": cls.CHERN_INTEGER, "chern_integer": cls.CHERN_INTEGER}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown normalization {value!r}") from None


@dataclass(frozen=True)
class Tolerances:
    """Step sizes and acceptance thresholds.

    Step sizes are never touched by ``scaled``; only the acceptance
    thresholds move with ``--tolerance-scale``.
    """

    fd_step: float = 1e-5
    exterior_step: float = 1e-4
    exp_tol: float = 1e-12
    fixed_point: float = 1e-8
    centralizer: float = 1e-8
    closure: float = 1e-6
    closedness: float = 1e-6
    axiom: float = 1e-7
    step_halving: float = 1e-6
    holonomy: float = 1e-7
    character: float = 1e-12
    flow: float = 1e-9
    chern_relative: float = 1e-3
    default_steps: int = 512
    default_grid: int = 64

    def scaled(self, factor: float) -> "Tolerances":
        if not factor > 0:
            raise ValueError("tolerance scale must be positive")
        return replace(
            self,
            fixed_point=self.fixed_point * factor,
            centralizer=self.centralizer * factor,
            closure=self.closure * factor,
            closedness=self.closedness * factor,
            axiom=self.axiom * factor,
            step_halving=self.step_halving * factor,
            holonomy=self.holonomy * factor,
            character=self.character * factor,
            flow=self.flow * factor,
            chern_relative=self.chern_relative * factor,
        )


DEFAULT_TOLERANCES = Tolerances()
