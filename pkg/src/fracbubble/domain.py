"""The slit-annulus geometry: a spherical shell minus a thin half-slab
around the positive last-coordinate axis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResolutionError
from .fields import Grid

__all__ = ["DomainSpec", "build_domain_mask"]


@dataclass(frozen=True)
class DomainSpec:
    """Radii R0 < R1 < R2 < R3, slit half-width delta, dimension, and the
    grid resolution used for solves."""

    r0: float = 1.0
    r1: float = 2.0
    r2: float = 3.0
    r3: float = 4.0
    delta: float = 0.1
    dim: int = 2
    points_per_axis: int = 201

    def __post_init__(self):
        if not (0.0 < self.r0 < self.r1 < self.r2 < self.r3):
            raise ValueError(f"need 0 < R0 < R1 < R2 < R3, got {self.r0}..{self.r3}")
        if self.delta <= 0:
            raise ValueError("slit half-width must be positive")
        if self.dim not in (2, 3):
            raise ValueError(f"domain dimension must be 2 or 3, got {self.dim}")

    @property
    def sphere_radius(self) -> float:
        """Radius of the bubble-center sphere, midway through the shell."""
        return 0.5 * (self.r1 + self.r2)

    @property
    def max_bump_radius(self) -> float:
        """Upper bound for the bump cut-off radius rho."""
        return min(self.sphere_radius / 10.0, (self.r2 - self.r1) / 2.0)

    def grid(self) -> Grid:
        """Default solve grid: box containing the R3 ball, with a node at
        the origin so the slit is grid-symmetric."""
        n = self.points_per_axis
        if n % 2 == 0:
            n += 1
        half = self.r3 * (1.0 + 2.0 / (n - 1))
        return Grid.centered((0.0,) * self.dim, half, n, dim=self.dim)

    def to_dict(self) -> dict:
        return {
            "r0": self.r0,
            "r1": self.r1,
            "r2": self.r2,
            "r3": self.r3,
            "delta": self.delta,
            "dim": self.dim,
            "points_per_axis": self.points_per_axis,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DomainSpec":
        return cls(**data)


def build_domain_mask(spec: DomainSpec, grid: Grid) -> np.ndarray:
    """Boolean array marking nodes inside the slit annulus.

    Inside means R1 <= |x| <= R2 and not in the removed half-slab
    {|x'| < delta, x_N >= 0}; everything else carries the hard constraint
    u = 0.
    """
    if grid.dim != spec.dim:
        raise ValueError(f"grid dim {grid.dim} != domain dim {spec.dim}")
    lo = min(grid.origin)
    hi = max(
        grid.origin[d] + grid.h * (grid.extents[d] - 1) for d in range(grid.dim)
    )
    if lo > -spec.r3 or hi < spec.r3:
        raise ValueError("grid box must contain the R3 ball")
    if grid.h >= spec.delta / 2.0:
        raise ResolutionError(
            f"grid h={grid.h:.4g} does not resolve the slit half-width "
            f"delta={spec.delta:.4g} (need h < delta/2)"
        )
    mesh = grid.meshgrid()
    r = np.sqrt(sum(m * m for m in mesh))
    annulus = (r >= spec.r1) & (r <= spec.r2)
    slab_r = np.abs(mesh[0]) if spec.dim == 2 else np.sqrt(mesh[0] ** 2 + mesh[1] ** 2)
    slit = (slab_r < spec.delta) & (mesh[-1] >= 0.0)
    mask = annulus & ~slit
    if not mask.any():
        raise ValueError("domain mask is empty on this grid")
    return mask
