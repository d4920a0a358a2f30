"""Projected descent on the Nehari set over the masked slit-annulus grid.

The iteration is u <- T(|u - tau * g|), where g is the free-energy gradient
with its component along the constraint direction removed, tau comes from a
backtracking line search on the composite map (so the energy is monotone by
construction), the absolute value keeps iterates nonnegative exactly, and
the projection T restores the constraint algebraically.  Convergence means
the constrained gradient is small relative to the energy norm; at such a
point the free gradient is small too, since on the constraint set the
gradient is orthogonal to u and the removed component then vanishes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .bubbles import bubble_values, normalization_d, omega_profile, psi_bump_profile
from .domain import DomainSpec, build_domain_mask
from .fields import Field, Grid, apply_frac_laplacian, gagliardo_seminorm_sq
from .fraccore import FracParams
from .nehari import EnergyReport, barycenter, critical_mass

logger = logging.getLogger("fracbubble.solver")

__all__ = [
    "DomainSpec",
    "build_domain_mask",
    "SolveResult",
    "SolveError",
    "discrete_gradient",
    "solve_critical_point",
    "diagnose_concentration",
    "IterateStats",
]


class SolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class IterateStats:
    max_abs: float
    support_radius: float


@dataclass
class SolveResult:
    solution: Field
    level: float
    level_error_estimate: float
    nehari_residual: float
    gradient_norm_rel: float
    free_gradient_norm_rel: float
    min_value: float
    iterations: int
    converged: bool
    concentration_flag: bool
    in_window: bool
    gradient_check_error: float | None
    start_center: tuple[float, ...]
    history: list[IterateStats] = dataclass_field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "level_error_estimate": self.level_error_estimate,
            "nehari_residual": self.nehari_residual,
            "gradient_norm_rel": self.gradient_norm_rel,
            "free_gradient_norm_rel": self.free_gradient_norm_rel,
            "min_value": self.min_value,
            "iterations": self.iterations,
            "converged": self.converged,
            "concentration_flag": self.concentration_flag,
            "in_window": self.in_window,
            "gradient_check_error": self.gradient_check_error,
            "start_center": list(self.start_center),
            "history_max_abs": [h.max_abs for h in self.history],
            "history_support_radius": [h.support_radius for h in self.history],
        }


def discrete_gradient(u: Field, params: FracParams, mask: np.ndarray) -> Field:
    """Free-energy gradient in the discrete L2(h^N) inner product,
    restricted to the interior nodes."""
    lap = apply_frac_laplacian(u, params, coarse_warn=False)
    grad = lap.values - np.abs(u.values) ** (params.two_star - 2.0) * u.values
    return Field(u.grid, np.where(mask, grad, 0.0))


def _support_radius(values: np.ndarray, grid: Grid) -> float:
    vmax = np.abs(values).max()
    if vmax == 0.0:
        return 0.0
    count = int((np.abs(values) >= 0.5 * vmax).sum())
    n = grid.dim
    ball_vol = math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
    return (count * grid.h**n / ball_vol) ** (1.0 / n)


def diagnose_concentration(
    history: list[IterateStats], grid: Grid, params: FracParams, window: int = 8
) -> tuple[bool, dict]:
    """Flag the discrete signature of an escaping bubble: amplitude
    actively growing past h^(-(N-2s)/2)/4, or the half-max support radius
    actively shrinking below 4h.  Settled histories never flag, whatever
    their levels."""
    if len(history) < 2:
        raise ValueError("need at least 2 recorded iterates")
    amp_threshold = grid.h ** (-(params.N - 2.0 * params.s) / 2.0) / 4.0
    radius_threshold = 4.0 * grid.h
    w = min(window, len(history))
    amps = [h.max_abs for h in history[-w:]]
    radii = [h.support_radius for h in history[-w:]]
    # actively escaping: amplitude growing past the threshold, or support
    # actively shrinking below it
    amp_growing = amps[-1] > 1.02 * amps[0] and amps[-1] >= max(amps) * (1.0 - 1e-12)
    rad_shrinking = radii[-1] < 0.98 * radii[0] and radii[-1] <= min(radii) * (1.0 + 1e-12)
    amp_flag = amp_growing and amps[-1] > amp_threshold
    rad_flag = rad_shrinking and radii[-1] < radius_threshold
    # already collapsed: a settled history whose final state is a spike
    collapsed = amps[-1] > amp_threshold and radii[-1] < radius_threshold
    report = {
        "amp_threshold": amp_threshold,
        "radius_threshold": radius_threshold,
        "final_max_abs": amps[-1],
        "final_support_radius": radii[-1],
        "amp_flag": amp_flag,
        "radius_flag": rad_flag,
        "collapsed": collapsed,
    }
    return bool(amp_flag or rad_flag or collapsed), report


def _masked_energy(values: np.ndarray, grid: Grid, params: FracParams) -> EnergyReport:
    """Energy through the operator quadratic form <Lu, u> h^N.

    The solve uses this form for everything (energy, gradient, projection)
    so the descent algebra is exact to rounding; it differs from the
    kernel-quadrature seminorm by the self-cell correction mismatch, which
    is reported as the level's quadrature error estimate.
    """
    u = Field(grid, values)
    lap = apply_frac_laplacian(u, params, coarse_warn=False)
    sem = float((lap.values * values).sum()) * grid.h**params.N
    mass = critical_mass(u, params)
    return EnergyReport.from_norms(sem, mass, params.two_star)


def _project(values: np.ndarray, report: EnergyReport, params: FracParams) -> tuple[np.ndarray, EnergyReport]:
    lam = (report.seminorm_sq / report.mass) ** (1.0 / (params.two_star - 2.0))
    projected = EnergyReport.from_norms(
        lam**2 * report.seminorm_sq, lam**params.two_star * report.mass, params.two_star
    )
    return lam * values, projected


def _initial_field(
    spec: DomainSpec,
    params: FracParams,
    grid: Grid,
    mask: np.ndarray,
    eps: float,
    n_samples: int,
) -> tuple[np.ndarray, EnergyReport, tuple[float, ...]]:
    """Sample bubbles around the mid-shell sphere, cut smoothly along the
    slit slab, project, and pick the one whose normalized barycenter is
    closest to the north pole (ties to the smallest sample index)."""
    radius = spec.sphere_radius
    rho = 0.8 * spec.max_bump_radius
    d_norm = normalization_d(params)
    mesh = grid.meshgrid()
    slab_r = np.abs(mesh[0]) if spec.dim == 2 else np.sqrt(mesh[0] ** 2 + mesh[1] ** 2)
    slab = omega_profile(slab_r / spec.delta)
    north = np.zeros(spec.dim)
    north[-1] = 1.0

    if spec.dim == 2:
        angles = 2.0 * math.pi * np.arange(n_samples) / n_samples
        points = np.stack([np.sin(angles), np.cos(angles)], axis=1)  # start at north
    else:
        from .nehari import icosphere

        points, _ = icosphere(1)

    best = None
    for idx, point in enumerate(points):
        z = radius * point
        r_sq = sum((m - c) ** 2 for m, c in zip(mesh, z))
        vals = (
            slab
            * psi_bump_profile(np.sqrt(r_sq), rho)
            * bubble_values(r_sq, eps, d_norm, params)
        )
        vals = np.where(mask, vals, 0.0)
        if not vals.any():
            continue
        rep = _masked_energy(vals, grid, params)
        proj_vals, proj_rep = _project(vals, rep, params)
        beta = barycenter(Field(grid, proj_vals), params, spec.r3)
        beta_norm = np.linalg.norm(beta)
        if beta_norm == 0.0:
            continue
        dist = float(np.linalg.norm(beta / beta_norm - north))
        if best is None or dist < best[0] - 1e-12:
            best = (dist, idx, proj_vals, proj_rep, tuple(map(float, z)))
    if best is None:
        raise SolveError("no admissible start field found on the sphere samples")
    return best[2], best[3], best[4]


def solve_critical_point(
    spec: DomainSpec,
    params: FracParams,
    start: Field | None = None,
    start_eps: float = 0.3,
    tol: float = 1e-6,
    max_iter: int = 3000,
    seed: int = 0,
    n_start_samples: int = 16,
    check_gradient: bool = True,
    window_slack: float = 0.1,
) -> SolveResult:
    """Projected descent from a near-minimal bubble start.

    Success means: constrained-gradient norm below tol * [u]_s, level inside
    ((1 - slack) c_inf, 2 (1 + slack) c_inf), nonnegative iterates, and no
    concentration flag.  The level's error estimate is the spread between
    the kernel-quadrature energy and the operator-consistency value.
    """
    grid = spec.grid()
    mask = build_domain_mask(spec, grid)
    if params.N != spec.dim:
        raise ValueError("params and domain dimensions differ")

    if start is not None:
        if start.values.min() < 0:
            raise ValueError("start field must be nonnegative")
        if np.any(start.values[~mask] != 0.0):
            raise ValueError("start field must vanish outside the domain mask")
        rep = _masked_energy(start.values, grid, params)
        values, rep = _project(start.values, rep, params)
        start_center = ()
    else:
        values, rep, start_center = _initial_field(
            spec, params, grid, mask, start_eps, n_start_samples
        )

    h_n = grid.h**params.N
    tau = 1.0 / rep.seminorm_sq
    history: list[IterateStats] = []
    snapshots: list[np.ndarray] = []
    grad_rel = math.inf
    iterations = 0
    converged = False

    for it in range(max_iter):
        u = Field(grid, values)
        free_grad = discrete_gradient(u, params, mask).values
        # remove the component along u that restores constraint tangency
        w_dir = 2.0 * (free_grad + np.abs(values) ** (params.two_star - 2.0) * values) \
            - params.two_star * np.abs(values) ** (params.two_star - 2.0) * values
        denom = float((values * w_dir).sum())
        mu = float((free_grad * w_dir).sum()) / denom if denom != 0.0 else 0.0
        g = free_grad - mu * values
        grad_norm_sq = float((g * g).sum()) * h_n
        grad_rel = math.sqrt(grad_norm_sq) / math.sqrt(rep.seminorm_sq)
        history.append(IterateStats(float(np.abs(values).max()), _support_radius(values, grid)))
        if it in (0, 8, 32) and len(snapshots) < 3:
            snapshots.append(values.copy())
        if grad_rel <= tol:
            converged = True
            iterations = it
            break

        accepted = False
        for _ in range(30):
            trial = np.abs(values - tau * g)
            trial_rep = _masked_energy(trial, grid, params)
            trial_vals, trial_proj = _project(trial, trial_rep, params)
            decrease = rep.energy - trial_proj.energy
            if decrease >= 1e-4 * tau * grad_norm_sq:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            if grad_rel <= 100.0 * tol:
                converged = True
                iterations = it
                logger.info("line search stalled at gradient %.3e; accepting", grad_rel)
                break
            raise SolveError(
                f"line search failed at iteration {it} with gradient {grad_rel:.3e}"
            )
        if trial_proj.energy > rep.energy + 1e-12 * abs(rep.energy):
            raise SolveError("energy increased along the iteration")
        values, rep = trial_vals, trial_proj
        tau = min(tau * 2.0, 1e6 / rep.seminorm_sq)
        iterations = it + 1
        if it % 50 == 0:
            logger.debug(
                "iter %d: level %.6f grad %.3e tau %.3e", it, rep.energy, grad_rel, tau
            )
    else:
        raise SolveError(f"max_iter={max_iter} exceeded (gradient {grad_rel:.3e})")

    u = Field(grid, values, nonnegative=True)
    flag, _ = diagnose_concentration(history, grid, params) if len(history) >= 2 else (False, {})

    # on the constraint set the free gradient vanishes with the constrained
    # one; report both at the final iterate
    free_final = discrete_gradient(u, params, mask).values
    free_rel = math.sqrt(float((free_final * free_final).sum()) * h_n) / math.sqrt(
        rep.seminorm_sq
    )

    # level error estimate: operator form vs kernel quadrature
    kernel_semi = gagliardo_seminorm_sq(u, params, mode="kernel", boundary_tol=1.0)
    level_kernel = EnergyReport.from_norms(kernel_semi, rep.mass, params.two_star).energy
    level_err = abs(level_kernel - rep.energy)

    grad_check = None
    if check_gradient:
        grad_check = _gradient_fd_check(snapshots, grid, mask, params, seed)

    window_lo = (1.0 - window_slack) * params.c_inf
    window_hi = 2.0 * (1.0 + window_slack) * params.c_inf
    return SolveResult(
        solution=u,
        level=rep.energy,
        level_error_estimate=level_err,
        nehari_residual=abs(rep.nehari_residual) / rep.seminorm_sq,
        gradient_norm_rel=grad_rel,
        free_gradient_norm_rel=free_rel,
        min_value=float(values.min()),
        iterations=iterations,
        converged=converged,
        concentration_flag=flag,
        in_window=bool(window_lo < rep.energy < window_hi),
        gradient_check_error=grad_check,
        start_center=start_center,
        history=history,
    )


def _free_energy(values: np.ndarray, grid: Grid, params: FracParams) -> float:
    return _masked_energy(values, grid, params).energy


def _gradient_fd_check(
    snapshots: list[np.ndarray],
    grid: Grid,
    mask: np.ndarray,
    params: FracParams,
    seed: int,
    n_directions: int = 5,
) -> float:
    """Centered finite differences of the free energy along random interior
    directions versus the analytic gradient; returns the worst relative
    mismatch over snapshots and directions."""
    rng = np.random.default_rng(seed)
    h_n = grid.h**params.N
    worst = 0.0
    for values in snapshots:
        u = Field(grid, values)
        grad = discrete_gradient(u, params, mask).values
        scale = float(np.abs(values).max())
        for _ in range(n_directions):
            v = rng.standard_normal(grid.extents)
            v = np.where(mask, v, 0.0)
            v /= math.sqrt(float((v * v).sum()) * h_n)
            eta = 1e-4 * scale
            e_plus = _free_energy(values + eta * v, grid, params)
            e_minus = _free_energy(values - eta * v, grid, params)
            fd = (e_plus - e_minus) / (2.0 * eta)
            analytic = float((grad * v).sum()) * h_n
            denom = max(abs(analytic), abs(fd))
            if denom > 0:
                worst = max(worst, abs(fd - analytic) / denom)
    return worst
