"""Extremal bubble profiles, smooth cut-offs, and truncated bubbles.

The bubble family is ``U(x) = d * (eps / (eps^2 + |x - z|^2))^((N-2s)/2)``;
the normalization ``d`` is the unique positive factor placing the profile on
the Nehari manifold, and is computed here by quadrature rather than taken
from a formula.

Cut-off profiles: a radial plateau bump (1 inside rho, 0 outside 2 rho), a
slab transition on the first N-1 coordinates (0 inside 1, 1 outside 2), the
capacity profile eta_theta (1 inside 1, 0 outside R_theta = 1/theta, with a
truncated-logarithm decay between), and the borderline slab factor
``1 - eta_theta(x1 / lambda)``.  All are C^2 or better, with plateaus and
supports exact at sampled points.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

from .errors import ResolutionError
from .fraccore import FracParams
from .fields import Field, Grid, gagliardo_seminorm_sq

__all__ = [
    "BubbleSpec",
    "CutoffSpec",
    "cutoff_profile",
    "normalization_d",
    "talenti",
    "truncated_bubble",
    "borderline_bubble",
    "talenti_norms",
]


# -- smooth profile building blocks ----------------------------------------


def smooth_ramp(t) -> np.ndarray:
    """C-infinity monotone ramp: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0.0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        b = np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return a / (a + b)


_EDGE_W = 0.15


def _log_blend(t) -> np.ndarray:
    """Monotone C^2 map [0,1] -> [0,1], identity slope in the middle and
    flat at both ends; used to round the kinks of the truncated-log profile
    while keeping its derivative mass (and hence the 1/|log theta| energy
    decay) close to the plain logarithm."""
    w = _EDGE_W
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    # antiderivative of the smooth-trapezoid weight min-ish(1, s3(t/w), s3((1-t)/w))
    def s3_int(tau):  # integral of tau^2 (3 - 2 tau) on [0, min(tau,1)], then linear
        tau = np.asarray(tau)
        core = np.clip(tau, 0.0, 1.0)
        val = core**3 - 0.5 * core**4
        return val + np.maximum(tau - 1.0, 0.0)

    total = 1.0 - _EDGE_W  # integral of the weight over [0, 1]
    g = np.where(
        t <= w,
        w * s3_int(t / w),
        np.where(t < 1.0 - w, t - w / 2.0, total - w * s3_int((1.0 - t) / w)),
    )
    return g / total


def psi_bump_profile(r, rho: float) -> np.ndarray:
    """Radial plateau: 1 for r <= rho, 0 for r >= 2 rho."""
    return 1.0 - smooth_ramp((np.asarray(r, dtype=float) - rho) / rho)


def omega_profile(t) -> np.ndarray:
    """Slab transition: 0 for |t| <= 1, 1 for |t| >= 2."""
    return smooth_ramp(np.abs(np.asarray(t, dtype=float)) - 1.0)


def eta_theta_profile(r, theta: float) -> np.ndarray:
    """Capacity profile: 1 for r <= 1, 0 for r >= 1/theta, rounded
    truncated-logarithm in between."""
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must be in (0,1), got {theta}")
    r_theta = 1.0 / theta
    r = np.abs(np.asarray(r, dtype=float))
    ell = np.log(np.maximum(r, 1e-300)) / math.log(r_theta)
    return 1.0 - _log_blend(ell)


def omega_theta_lambda_profile(x1, theta: float, lam: float) -> np.ndarray:
    """Borderline slab factor 1 - eta_theta(x1 / lambda)."""
    return 1.0 - eta_theta_profile(np.asarray(x1, dtype=float) / lam, theta)


# -- cut-off specs ----------------------------------------------------------

_CUTOFF_KINDS = ("psi_bump", "omega_transition", "omega_delta", "eta_theta", "omega_theta_lambda")


@dataclass(frozen=True)
class CutoffSpec:
    """One of the named cut-off profiles with its parameters."""

    kind: str
    rho: float | None = None
    delta: float | None = None
    theta: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.kind not in _CUTOFF_KINDS:
            raise ValueError(f"unknown cutoff kind {self.kind!r}")
        needed = {
            "psi_bump": ("rho",),
            "omega_transition": (),
            "omega_delta": ("delta",),
            "eta_theta": ("theta",),
            "omega_theta_lambda": ("theta", "lam"),
        }[self.kind]
        for name in needed:
            val = getattr(self, name)
            if val is None or val <= 0:
                raise ValueError(f"cutoff {self.kind} needs {name} > 0")
        if self.kind in ("eta_theta", "omega_theta_lambda") and self.theta >= 1.0:
            raise ValueError("theta must be < 1")

    @property
    def r_theta(self) -> float:
        if self.theta is None:
            raise ValueError(f"cutoff {self.kind} has no theta")
        return 1.0 / self.theta

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "CutoffSpec":
        return cls(**data)


def cutoff_profile(spec: CutoffSpec, x) -> np.ndarray:
    """Evaluate the profile at a point (shape (k,)) or batch (..., k).

    The radial kinds take points in the profile's natural space (R^N for
    the bump, the slab coordinates for the omega kinds); the borderline
    factor takes the scalar first coordinate elementwise.
    """
    x = np.asarray(x, dtype=float)
    if spec.kind == "omega_theta_lambda":
        return omega_theta_lambda_profile(x, spec.theta, spec.lam)
    r = np.abs(x) if x.ndim == 0 else np.sqrt((x**2).sum(axis=-1))
    if spec.kind == "psi_bump":
        return psi_bump_profile(r, spec.rho)
    if spec.kind == "omega_transition":
        return omega_profile(r)
    if spec.kind == "omega_delta":
        return omega_profile(r / spec.delta)
    return eta_theta_profile(r, spec.theta)


# -- bubbles ----------------------------------------------------------------


@dataclass(frozen=True)
class BubbleSpec:
    """Scale, center, and normalization of one bubble."""

    eps: float
    z: tuple[float, ...]
    d: float

    def __post_init__(self):
        if self.eps <= 0 or self.d <= 0:
            raise ValueError("bubble needs eps > 0 and d > 0")

    def to_dict(self) -> dict:
        return {"eps": self.eps, "z": list(self.z), "d": self.d}

    @classmethod
    def from_dict(cls, data: dict) -> "BubbleSpec":
        return cls(eps=data["eps"], z=tuple(data["z"]), d=data["d"])

    @classmethod
    def for_params(cls, params: FracParams, eps: float, z) -> "BubbleSpec":
        return cls(eps=eps, z=tuple(np.atleast_1d(np.asarray(z, dtype=float))), d=normalization_d(params))


def _radius_sq(grid: Grid, z) -> np.ndarray:
    mesh = grid.meshgrid()
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return sum((m - c) ** 2 for m, c in zip(mesh, z))


def bubble_values(r_sq: np.ndarray, eps: float, d: float, params: FracParams) -> np.ndarray:
    return d * (eps / (eps**2 + r_sq)) ** ((params.N - 2.0 * params.s) / 2.0)


def talenti(spec: BubbleSpec, grid: Grid, params: FracParams) -> Field:
    """Exact nodal samples of the bubble."""
    if grid.h > spec.eps / 8.0:
        warnings.warn(
            f"grid h={grid.h:.3g} does not resolve the bubble core eps={spec.eps:.3g} "
            f"(want h <= eps/8)",
            stacklevel=2,
        )
    vals = bubble_values(_radius_sq(grid, spec.z), spec.eps, spec.d, params)
    return Field(grid, vals, nonnegative=True)


def truncated_bubble(
    eps: float,
    delta: float,
    z,
    grid: Grid,
    params: FracParams,
    rho: float = 0.2,
    d: float | None = None,
) -> Field:
    """Bubble times plateau bump times slab cut-off on the first N-1 axes."""
    if not (eps > delta > 0):
        raise ValueError(f"need eps > delta > 0, got eps={eps}, delta={delta}")
    if grid.h > delta / 4.0:
        raise ResolutionError(
            f"grid h={grid.h:.3g} does not resolve the slab delta={delta:.3g} "
            f"(need h <= delta/4)"
        )
    if d is None:
        d = normalization_d(params)
    mesh = grid.meshgrid()
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if params.N == 1:
        raise ValueError("slab cut-off needs N >= 2")
    slab_r = np.sqrt(sum(m**2 for m in mesh[:-1])) if params.N > 2 else np.abs(mesh[0])
    vals = (
        omega_profile(slab_r / delta)
        * psi_bump_profile(np.sqrt(_radius_sq(grid, z)), rho)
        * bubble_values(_radius_sq(grid, z), eps, d, params)
    )
    return Field(grid, vals, nonnegative=True)


def borderline_bubble(
    eps: float,
    theta: float,
    lam: float,
    z,
    grid: Grid,
    params: FracParams,
    rho: float = 0.2,
    d: float | None = None,
) -> Field:
    """Bubble with the capacity-profile slab factor on x1; the x1 factor is
    evaluated analytically at the nodes, so sub-grid lambda is fine."""
    if params.N != 2 or abs(params.s - 0.5) > 1e-12:
        raise ValueError("borderline bubble is the N=2, s=1/2 construction")
    if not (1.0 > eps > theta > lam > 0.0):
        raise ValueError(
            f"need 1 > eps > theta > lambda > 0, got {eps}, {theta}, {lam}"
        )
    if d is None:
        d = normalization_d(params)
    mesh = grid.meshgrid()
    z = np.atleast_1d(np.asarray(z, dtype=float))
    vals = (
        omega_theta_lambda_profile(mesh[0], theta, lam)
        * psi_bump_profile(np.sqrt(_radius_sq(grid, z)), rho)
        * bubble_values(_radius_sq(grid, z), eps, d, params)
    )
    return Field(grid, vals, nonnegative=True)


# -- normalization by quadrature --------------------------------------------

# box half-widths, in units of eps, and grid levels per dimension
_NORM_SETTINGS = {
    1: ((20.0, 100.0 / 3.0, 140.0 / 3.0), (129, 257, 513)),
    2: ((20.0, 100.0 / 3.0, 140.0 / 3.0), (129, 257, 513)),
    3: ((10.0, 50.0 / 3.0, 70.0 / 3.0), (33, 65, 129)),
}


def box_window(r, half_width: float) -> np.ndarray:
    """Smooth radial window: 1 inside 0.55 L, 0 outside 0.92 L.

    Sampling a slowly decaying profile against this window keeps the
    boundary layer exactly zero, which the seminorm quadrature needs; the
    window's energy cost is then removed by extrapolation in L.
    """
    return 1.0 - smooth_ramp((np.asarray(r, dtype=float) - 0.55 * half_width) / (0.37 * half_width))


def _guarded_richardson(vals: Sequence[float]) -> tuple[float, float]:
    """Three-level Richardson with estimated order; returns (value, residual)."""
    q4, q2, q1 = vals
    num, den = q2 - q4, q1 - q2
    if den == 0.0 or num == 0.0 or num / den <= 1.0:
        return q1, abs(den)
    p_est = min(8.0, math.log(abs(num / den), 2.0))
    extr = q1 + (q1 - q2) / (2.0**p_est - 1.0)
    return extr, abs(extr - q1)


def _windowed_profile_norms(
    params: FracParams, eps: float, half_width: float, n: int, dense: bool | None
) -> tuple[float, float]:
    grid = Grid.centered((0.0,) * params.N, half_width, n)
    r_sq = _radius_sq(grid, (0.0,) * params.N)
    r = np.sqrt(r_sq)
    phi = bubble_values(r_sq, eps, 1.0, params) * box_window(r, half_width)
    u = Field(grid, phi, nonnegative=True)
    a = gagliardo_seminorm_sq(u, params, mode="kernel", dense=dense)
    b = float((phi**params.two_star).sum() * grid.h**params.N)
    return a, b


@dataclass(frozen=True)
class TalentiNorms:
    """Box- and grid-extrapolated norms of the unit-normalization profile,
    with the resulting Nehari normalization and identity values."""

    seminorm_profile: float
    mass_profile: float
    d: float
    seminorm: float  # d^2 * seminorm_profile
    mass: float  # d^(2*) * mass_profile (equals seminorm by construction)
    rayleigh: float  # seminorm_profile / mass_profile^(2/2*)
    uncertainty: float  # relative, combined extrapolation residuals


_NORM_CACHE: dict[tuple, TalentiNorms] = {}


def talenti_norms(
    params: FracParams,
    eps: float = 0.3,
    dense: bool | None = None,
) -> TalentiNorms:
    """Seminorm and critical mass of the bubble profile by windowed grid
    quadrature, Richardson-extrapolated in h per box and then in box size.

    The box extrapolation uses the known decay exponents of the window
    cost: N - 2s for the seminorm, N for the mass.
    """
    key = (params.N, params.s, eps, dense)
    cached = _NORM_CACHE.get(key)
    if cached is not None:
        return cached

    box_factors, levels = _NORM_SETTINGS[params.N]
    half_widths = [f * eps for f in box_factors]
    a_star, b_star, residuals = [], [], []
    for half_width in half_widths:
        vals_a, vals_b = [], []
        for n in levels:
            a, b = _windowed_profile_norms(params, eps, half_width, n, dense)
            vals_a.append(a)
            vals_b.append(b)
        a_ext, a_res = _guarded_richardson(vals_a)
        b_ext, b_res = _guarded_richardson(vals_b)
        a_star.append(a_ext)
        b_star.append(b_ext)
        residuals.append((a_res, b_res))

    p_a = params.N - 2.0 * params.s
    p_b = float(params.N)

    def extrapolate(vals, p):
        ls = np.asarray(half_widths)
        m = np.stack([np.ones(3), ls**-p, ls ** -(p + 1.0)], axis=1)
        full = float(np.linalg.solve(m, np.asarray(vals))[0])
        # leading-order fit on the two largest boxes, as the error proxy
        lead = float(
            (vals[2] * ls[2] ** p - vals[1] * ls[1] ** p) / (ls[2] ** p - ls[1] ** p)
        )
        return full, abs(full - lead)

    a_inf, a_unc = extrapolate(a_star, p_a)
    b_inf, b_unc = extrapolate(b_star, p_b)
    rel_unc = (
        (a_unc + max(r[0] for r in residuals)) / a_inf
        + (b_unc + max(r[1] for r in residuals)) / b_inf
    )

    d = (a_inf / b_inf) ** (1.0 / (params.two_star - 2.0))
    out = TalentiNorms(
        seminorm_profile=a_inf,
        mass_profile=b_inf,
        d=d,
        seminorm=d**2 * a_inf,
        mass=d**params.two_star * b_inf,
        rayleigh=a_inf / b_inf ** (2.0 / params.two_star),
        uncertainty=rel_unc,
    )
    _NORM_CACHE[key] = out
    return out


def normalization_d(params: FracParams, eps: float = 0.3) -> float:
    """Unique positive factor placing the bubble profile on the Nehari
    manifold.  Warns when the extrapolated uncertainty exceeds 1%."""
    norms = talenti_norms(params, eps)
    if norms.uncertainty > 0.01:
        warnings.warn(
            f"normalization quadrature uncertainty {norms.uncertainty:.2%} exceeds 1% "
            f"for N={params.N}, s={params.s}",
            stacklevel=2,
        )
    return norms.d
