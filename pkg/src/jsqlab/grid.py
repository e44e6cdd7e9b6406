"""Rectangular evaluation grids."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid with ``n1`` points on [x1_lo, x1_hi] and ``n2`` on [x2_lo, x2_hi]."""

    x1_lo: float
    x1_hi: float
    n1: int
    x2_lo: float
    x2_hi: float
    n2: int
    scale: str = "fluid"

    def __post_init__(self) -> None:
        for name in ("x1_lo", "x1_hi", "x2_lo", "x2_hi"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"grid bound {name} must be finite", "GRID")
        if self.n1 < 2 or self.n2 < 2:
            raise ConfigError("grid needs at least two points per axis", "GRID")
        if self.x1_lo > self.x1_hi or self.x2_lo > self.x2_hi:
            raise ConfigError("grid bounds must be ordered lo <= hi", "GRID")
        if self.x1_hi > 0.0 or self.x2_lo < 0.0:
            raise ConfigError("grid must lie in x1 <= 0, x2 >= 0", "GRID")
        if self.scale not in ("fluid", "diffusion"):
            raise ConfigError(f"unknown grid scale {self.scale!r}", "GRID")

    @classmethod
    def parse(cls, text: str, scale: str = "fluid") -> "GridSpec":
        """Parse ``"x1lo:x1hi:N,x2lo:x2hi:N"``."""
        try:
            first, second = text.split(",")
            a = first.split(":")
            c = second.split(":")
            if len(a) != 3 or len(c) != 3:
                raise ValueError
            return cls(float(a[0]), float(a[1]), int(a[2]), float(c[0]), float(c[1]), int(c[2]), scale)
        except ValueError as exc:
            raise ConfigError(f"cannot parse grid {text!r}; expected x1lo:x1hi:N,x2lo:x2hi:N", "GRID") from exc

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.linspace(self.x1_lo, self.x1_hi, self.n1), np.linspace(self.x2_lo, self.x2_hi, self.n2))

    def points(self) -> list[tuple[float, float]]:
        """Row-major list of grid points (x1 outer, x2 inner)."""
        g1, g2 = self.axes()
        return [(float(a), float(c)) for a in g1 for c in g2]

    def to_fluid(self, root_n: float) -> "GridSpec":
        if self.scale == "fluid":
            return self
        return GridSpec(self.x1_lo / root_n, self.x1_hi / root_n, self.n1,
                        self.x2_lo / root_n, self.x2_hi / root_n, self.n2, "fluid")

    def __str__(self) -> str:
        return f"{self.x1_lo!r}:{self.x1_hi!r}:{self.n1},{self.x2_lo!r}:{self.x2_hi!r}:{self.n2}"
