"""Free energy, Nehari projection, barycenter, and sphere-map degree.

The free energy is ``I(u) = [u]^2/2 - ||u||_{2*}^{2*}/2*``; its nontrivial
critical points sit on the Nehari set ``[u]^2 = ||u||_{2*}^{2*}``, reached
from any nonzero field by one positive rescaling (the projection here).

The barycenter is the |u|^{2*}-weighted center of mass with the numerator
restricted to the ball of radius R3 (the denominator is global; the
asymmetry is deliberate).  Degree computations cover exactly two cases:
winding of an ordered image loop on the circle, and the solid-angle sum
over an icosahedral sampling of the sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import Field, gagliardo_seminorm_sq
from .fraccore import FracParams

__all__ = [
    "EnergyReport",
    "energy",
    "nehari_project",
    "barycenter",
    "sphere_map_degree",
    "icosphere",
]


@dataclass(frozen=True)
class EnergyReport:
    seminorm_sq: float
    mass: float
    energy: float
    nehari_residual: float

    @classmethod
    def from_norms(cls, seminorm_sq: float, mass: float, two_star: float) -> "EnergyReport":
        return cls(
            seminorm_sq=seminorm_sq,
            mass=mass,
            energy=seminorm_sq / 2.0 - mass / two_star,
            nehari_residual=seminorm_sq - mass,
        )

    def as_dict(self) -> dict:
        return {
            "seminorm_sq": self.seminorm_sq,
            "mass": self.mass,
            "energy": self.energy,
            "nehari_residual": self.nehari_residual,
        }


def critical_mass(u: Field, params: FracParams) -> float:
    """||u||_{2*}^{2*} by nodal quadrature."""
    return float((np.abs(u.values) ** params.two_star).sum() * u.grid.h**params.N)


def energy(u: Field, params: FracParams, mode: str = "kernel", dense: bool | None = None) -> EnergyReport:
    if not u.values.any():
        return EnergyReport.from_norms(0.0, 0.0, params.two_star)
    sem = gagliardo_seminorm_sq(u, params, mode=mode, dense=dense)
    return EnergyReport.from_norms(sem, critical_mass(u, params), params.two_star)


def nehari_project(
    u: Field,
    params: FracParams,
    report: EnergyReport | None = None,
    mode: str = "kernel",
    dense: bool | None = None,
) -> Field:
    """The positive rescaling of u that lands on the Nehari set.

    Accepts a precomputed EnergyReport of u to avoid re-quadrature.  The
    output's residual vanishes algebraically: scaling by
    ``(seminorm/mass)^(1/(2*-2))`` equates the two homogeneous norms.
    """
    if not u.values.any():
        raise ValueError("cannot project the zero field")
    if report is None:
        report = energy(u, params, mode=mode, dense=dense)
    lam = (report.seminorm_sq / report.mass) ** (1.0 / (params.two_star - 2.0))
    return u.copy_with(lam * u.values)


def barycenter(u: Field, params: FracParams, r3: float) -> np.ndarray:
    """|u|^{2*}-weighted center of mass; the numerator is restricted to the
    ball |x| <= R3 while the denominator runs over the whole grid (the h^N
    factors cancel)."""
    w = np.abs(u.values) ** params.two_star
    denom = w.sum()
    if denom == 0.0:
        raise ValueError("cannot take the barycenter of the zero field")
    mesh = u.grid.meshgrid()
    r_sq = sum(m * m for m in mesh)
    ball = r_sq <= r3 * r3
    return np.array([(m * w * ball).sum() / denom for m in mesh])


# -- degree computations -----------------------------------------------------


def _normalized_images(images: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(images, axis=-1)
    if np.any(norms == 0.0) or not np.all(np.isfinite(norms)):
        raise ValueError("degree undefined: zero or non-finite image vector")
    return images / norms[:, None]


def sphere_map_degree(points, images) -> int:
    """Degree of the sampled map point -> image/|image|.

    On the circle the samples must be an ordered loop; the degree is the
    winding number from summed signed angle increments.  On the sphere the
    points must be the vertices of ``icosphere(3)`` (1280 triangles); the
    degree is the signed solid-angle sum of image triangles over 4 pi.
    Consecutive (edge-adjacent) normalized images must stay within pi/2.
    """
    points = np.asarray(points, dtype=float)
    images = np.asarray(images, dtype=float)
    if points.shape != images.shape:
        raise ValueError("points and images must have matching shapes")
    if points.shape[-1] == 2:
        return _winding_number(_normalized_images(images))
    if points.shape[-1] == 3:
        return _icosphere_degree(points, _normalized_images(images))
    raise ValueError("degree implemented for S^1 and S^2 sample sets only")


def _winding_number(v: np.ndarray) -> int:
    nxt = np.roll(v, -1, axis=0)
    cross = v[:, 0] * nxt[:, 1] - v[:, 1] * nxt[:, 0]
    dot = (v * nxt).sum(axis=1)
    inc = np.arctan2(cross, dot)
    if np.any(np.abs(inc) >= math.pi / 2.0):
        raise ValueError(
            "sampling too sparse: consecutive normalized images jump by >= pi/2"
        )
    total = inc.sum() / (2.0 * math.pi)
    deg = round(total)
    if abs(total - deg) > 1e-8:
        raise ValueError(f"winding sum {total} is not an integer")
    return int(deg)


ICOSPHERE_LEVEL = 3


def icosphere(level: int = ICOSPHERE_LEVEL) -> tuple[np.ndarray, np.ndarray]:
    """Subdivided icosahedron on the unit sphere.

    Returns (vertices, faces); level 3 gives 642 vertices and 1280
    consistently oriented triangles.  The construction is deterministic.
    """
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.asarray(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(level):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            idx = midpoint.get(key)
            if idx is None:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                idx = len(verts) - 1
                midpoint[key] = idx
            return idx

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.asarray(verts), np.asarray(faces, dtype=int)


def _icosphere_degree(points: np.ndarray, v: np.ndarray) -> int:
    verts, faces = icosphere(ICOSPHERE_LEVEL)
    if points.shape != verts.shape or not np.allclose(points, verts, atol=1e-9):
        raise ValueError(
            f"sphere samples must be the icosphere({ICOSPHERE_LEVEL}) vertex set "
            f"in canonical order ({verts.shape[0]} vertices)"
        )
    a, b, c = v[faces[:, 0]], v[faces[:, 1]], v[faces[:, 2]]
    for p, q in ((a, b), (b, c), (c, a)):
        if np.any((p * q).sum(axis=1) <= math.cos(math.pi / 2.0)):
            raise ValueError(
                "sampling too sparse: edge-adjacent normalized images jump by >= pi/2"
            )
    # signed solid angle of each image triangle
    triple = np.einsum("ij,ij->i", a, np.cross(b, c))
    denom = 1.0 + (a * b).sum(axis=1) + (b * c).sum(axis=1) + (c * a).sum(axis=1)
    omega = 2.0 * np.arctan2(triple, denom)
    total = omega.sum() / (4.0 * math.pi)
    deg = round(total)
    if abs(total - deg) > 0.1:
        raise ValueError(f"solid-angle sum {total} is not within 0.1 of an integer")
    return int(deg)
