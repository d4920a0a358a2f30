"""Parameter sweeps and rate fits for the truncation energy estimates.

The sweeps measure, on truncated bubbles, how the energy excess and mass
deficit scale in the slab width; log-log slopes are fitted on consecutive
differences of the measured values, which cancels the width-independent
floor exactly on geometric sweeps (subtracting the smallest-width point
instead provably biases the slope far beyond the accepted tolerance, see
the rate-fit docstring).

Also here: the capacity-profile decay check, the factorized borderline
bounds, the sphere-to-Nehari sample map with its degree, and the
barycenter lower-bound check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .bubbles import (
    bubble_values,
    eta_theta_profile,
    normalization_d,
    omega_profile,
    omega_theta_lambda_profile,
    psi_bump_profile,
)
from .domain import DomainSpec
from .errors import QuadratureError
from .fields import Field, Grid, cross_energy, gagliardo_seminorm_sq
from .fraccore import FracParams
from .graded1d import Kernel, double_integral_even, geometric_breakpoints, inverse_square_kernel
from .nehari import EnergyReport, barycenter, critical_mass, energy, icosphere, nehari_project, sphere_map_degree

__all__ = [
    "RateReport",
    "RateFitError",
    "TruncationSweep",
    "run_truncation_sweep",
    "fit_rate",
    "fit_power_with_correction",
    "verify_upper_energy",
    "verify_lower_mass",
    "verify_capacity_decay",
    "capacity_seminorm_sq",
    "verify_borderline",
    "BorderlineReport",
    "build_sphere_map",
    "SphereMapResult",
    "check_barycenter_lower_bound",
]

# Slope agreement demanded of the rate fits unless the caller overrides.
RATE_TOLERANCE = 0.15
# Max allowed deviation from the fitted line in log-log.
FIT_RESIDUAL_LIMIT = 0.1

THETA_MIN = 1e-4


class RateFitError(QuadratureError):
    """Sweep data unusable for a rate fit (flat, non-monotone, or noisy)."""


@dataclass(frozen=True)
class RateReport:
    """A sweep, its measured values, and the fitted decay rate."""

    variable: str
    values: list[float]
    measured: list[float]
    baseline: float
    subtracted: list[float]
    slope: float
    expected: float
    rel_error: float
    fit_residual: float
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "variable": self.variable,
            "values": self.values,
            "measured": self.measured,
            "baseline": self.baseline,
            "subtracted": self.subtracted,
            "slope": self.slope,
            "expected": self.expected,
            "rel_error": self.rel_error,
            "fit_residual": self.fit_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def fit_rate(
    variable: str,
    xs,
    ys,
    expected: float,
    tolerance: float = RATE_TOLERANCE,
    increasing: bool = True,
) -> RateReport:
    """Fit the decay exponent of ``y ~ floor + C x^p`` on a geometric sweep.

    The slope is the log-log fit of consecutive differences y_{k+1} - y_k
    against the geometric midpoints: on a geometric grid the differences of
    the floor-plus-power model are an exact power law in x, so the floor
    drops out without biasing the slope.  (Subtracting the smallest-x value
    leaves y_i - y_min = C (x_i^p - x_min^p), whose log-log slope against
    x_i is bounded away from p for any dyadic sweep; at p = 1/2 the bias
    exceeds 100%.)  The floor reported is the mean residual of the fitted
    power law.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    if len(xs) < 4:
        raise ValueError(f"rate fit needs >= 4 sweep points, got {len(xs)}")
    ratios = xs[1:] / xs[:-1]
    if np.any(np.abs(ratios / ratios[0] - 1.0) > 1e-6):
        raise ValueError("sweep points must be geometric (constant ratio)")

    scale = float(np.max(np.abs(ys)))
    if scale == 0.0 or float(np.ptp(ys)) <= 1e-9 * max(scale, 1.0):
        raise RateFitError(f"{variable} sweep is flat; nothing to fit")
    dy = np.diff(ys)
    if increasing and np.any(dy <= 0.0):
        raise RateFitError(
            f"{variable} sweep is not monotone (differences {dy.tolist()}); "
            "quadrature noise dominates the signal"
        )
    dy = np.abs(dy)
    xm = np.sqrt(xs[1:] * xs[:-1])
    lx, ly = np.log(xm), np.log(dy)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.max(np.abs(ly - (slope * lx + intercept))))
    # implied width-independent floor, for reporting
    ratio_p = ratios[0] ** slope
    c_fit = math.exp(intercept + slope * 0.5 * math.log(ratios[0])) / max(ratio_p - 1.0, 1e-300)
    baseline = float(np.mean(ys - c_fit * xs**slope))
    rel_error = abs(slope - expected) / abs(expected)
    return RateReport(
        variable=variable,
        values=xs.tolist(),
        measured=ys.tolist(),
        baseline=baseline,
        subtracted=(ys - baseline).tolist(),
        slope=float(slope),
        expected=expected,
        rel_error=float(rel_error),
        fit_residual=residual,
        tolerance=tolerance,
        passed=bool(rel_error <= tolerance and residual < FIT_RESIDUAL_LIMIT),
    )


def fit_power_with_correction(
    variable: str,
    xs,
    ys,
    expected: float,
    tolerance: float = RATE_TOLERANCE,
    correction_power: float = 1.0,
) -> RateReport:
    """Fit the leading exponent of ``y = C x^p + D x^q`` with q known.

    Used for reference-subtracted costs, which vanish with x so carry no
    floor, but do carry a known-next-order interaction term whose exponent
    q is fixed (linear for the slab sweeps).  The exponent p is scanned and
    (C, D) solved linearly; the reported residual is the max log deviation.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    if len(xs) < 4:
        raise ValueError(f"rate fit needs >= 4 sweep points, got {len(xs)}")
    if np.any(ys <= 0.0):
        raise RateFitError(f"{variable} costs must be positive, got {ys.tolist()}")
    if np.any(np.diff(ys) <= 0.0):
        raise RateFitError(f"{variable} costs are not monotone in the width")

    def residual_for(p: float) -> tuple[float, np.ndarray]:
        m = np.stack([xs**p, xs**correction_power], axis=1)
        coef, *_ = np.linalg.lstsq(m, ys, rcond=None)
        pred = m @ coef
        if np.any(pred <= 0.0):
            return math.inf, coef
        return float(np.max(np.abs(np.log(pred) - np.log(ys)))), coef

    grid = np.linspace(0.05, 2.5, 491)
    grid = grid[np.abs(grid - correction_power) > 1e-9]
    coarse = min(grid, key=lambda p: residual_for(p)[0])
    fine = np.linspace(coarse - 0.01, coarse + 0.01, 81)
    fine = fine[np.abs(fine - correction_power) > 1e-9]
    slope = min(fine, key=lambda p: residual_for(p)[0])
    residual, coef = residual_for(slope)
    rel_error = abs(slope - expected) / abs(expected)
    return RateReport(
        variable=variable,
        values=xs.tolist(),
        measured=ys.tolist(),
        baseline=0.0,
        subtracted=ys.tolist(),
        slope=float(slope),
        expected=expected,
        rel_error=float(rel_error),
        fit_residual=residual,
        tolerance=tolerance,
        passed=bool(rel_error <= tolerance and residual < FIT_RESIDUAL_LIMIT),
    )


# -- truncated-bubble sweeps -------------------------------------------------


@dataclass(frozen=True)
class TruncationSweep:
    """Energies, masses, and slab costs of one truncated-bubble family,
    one sampling pass per width, consumed by both rate checks.

    ``slab_costs`` is the pair-interaction energy attributable to the slab
    cut: the discrete cross term of the cut bubble minus that of the uncut
    reference on the same grid.  The raw seminorm excess mixes this cost
    with the (linear in width) energy removed with the cut strip, so the
    decay rate of the Proposition lives on the cost, not the raw excess.
    """

    eps: float
    deltas: list[float]
    z: tuple[float, ...]
    rho: float
    seminorms: list[float]
    masses: list[float]
    slab_costs: list[float]
    mass_at_minimum: float


def _sweep_grid(z, rho: float, h: float) -> Grid:
    """Grid centered at z covering the bump support with a zero margin."""
    half_cells = int(math.ceil(2.0 * rho / h)) + 6
    n = 2 * half_cells + 1
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return Grid(
        dim=z.size,
        origin=tuple(float(c) - half_cells * h for c in z),
        h=h,
        extents=(n,) * z.size,
    )


def run_truncation_sweep(
    params: FracParams,
    eps: float,
    deltas,
    z,
    rho: float = 0.2,
    h_lock: float | None = None,
) -> TruncationSweep:
    """Sample the slab-cut bubble at each width and measure both norms.

    The grid policy couples h = min(delta/4, eps/8) per width, so the slab
    edge and the bubble core stay resolved; ``h_lock`` pins a single h for
    every width instead.
    """
    deltas = sorted(float(d) for d in deltas)
    if deltas[0] <= 0 or deltas[-1] >= eps:
        raise ValueError("widths must satisfy 0 < delta < eps")
    d_norm = normalization_d(params)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    seminorms, masses, costs = [], [], []
    for delta in deltas:
        h = h_lock if h_lock is not None else min(delta / 4.0, eps / 8.0)
        grid = _sweep_grid(z, rho, h)
        mesh = grid.meshgrid()
        slab_r = np.abs(mesh[0]) if params.N == 2 else np.sqrt(mesh[0] ** 2 + mesh[1] ** 2)
        r_sq = sum((m - c) ** 2 for m, c in zip(mesh, z))
        psi = psi_bump_profile(np.sqrt(r_sq), rho)
        bubble = bubble_values(r_sq, eps, d_norm, params)
        eta = omega_profile(slab_r / delta) * psi
        u = Field(grid, eta * bubble, nonnegative=True)
        seminorms.append(gagliardo_seminorm_sq(u, params, mode="kernel"))
        masses.append(critical_mass(u, params))
        costs.append(
            cross_energy(eta, bubble, grid, params)
            - cross_energy(psi, bubble, grid, params)
        )
    return TruncationSweep(
        eps=eps,
        deltas=deltas,
        z=tuple(z),
        rho=rho,
        seminorms=seminorms,
        masses=masses,
        slab_costs=costs,
        mass_at_minimum=params.mass_at_minimum,
    )


def verify_upper_energy(
    params: FracParams,
    eps: float,
    deltas,
    z,
    rho: float = 0.2,
    tolerance: float = RATE_TOLERANCE,
    sweep: TruncationSweep | None = None,
) -> RateReport:
    """The slab's energy cost decays like delta^(N-1-2s).

    The fitted series is the reference-subtracted cross energy (see
    TruncationSweep), which carries the capacity-cost rate plus a known
    linear interaction term handled by the two-term fit.
    """
    if params.N - 1 - 2 * params.s <= 0:
        raise ValueError("energy rate check needs N - 1 - 2s > 0")
    if sweep is None:
        sweep = run_truncation_sweep(params, eps, deltas, z, rho)
    return fit_power_with_correction(
        "delta",
        sweep.deltas,
        sweep.slab_costs,
        expected=params.N - 1 - 2 * params.s,
        tolerance=tolerance,
    )


def verify_lower_mass(
    params: FracParams,
    eps: float,
    deltas,
    z,
    rho: float = 0.2,
    tolerance: float = RATE_TOLERANCE,
    sweep: TruncationSweep | None = None,
) -> RateReport:
    """Mass deficit of the slab-cut bubble decays like delta^(N-1)."""
    if sweep is None:
        sweep = run_truncation_sweep(params, eps, deltas, z, rho)
    deficit = [sweep.mass_at_minimum - b for b in sweep.masses]
    if any(d <= 0 for d in deficit):
        raise RateFitError("mass deficit should be positive; quadrature noise dominates")
    if any(d > sweep.mass_at_minimum for d in deficit):
        raise RateFitError("mass deficit exceeds the whole-space mass; bad sweep")
    return fit_rate(
        "delta", sweep.deltas, deficit, expected=float(params.N - 1), tolerance=tolerance
    )


# -- capacity profile decay ---------------------------------------------------


def capacity_seminorm_sq(theta: float, lam: float = 1.0, per_decade: int = 10, gl_order: int = 12) -> float:
    """Half-order squared seminorm of the rescaled capacity profile
    eta_theta(. / lambda), by graded 1D quadrature.

    The half-order seminorm on the line is scale invariant, so the result
    is lambda-free up to quadrature error; the kernel normalization is
    C(1, 1/2)/2 = 1/(2 pi).
    """
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must be in (0,1), got {theta}")
    r_theta = 1.0 / theta
    bp = lam * geometric_breakpoints(1.0, r_theta, per_decade)
    q = double_integral_even(
        lambda x: eta_theta_profile(x / lam, theta), bp, inverse_square_kernel(), gl_order
    )
    if not math.isfinite(q) or q <= 0:
        raise QuadratureError(f"capacity quadrature failed for theta={theta}", achieved=q)
    return q / (2.0 * math.pi)


@dataclass(frozen=True)
class CapacityReport:
    thetas: list[float]
    seminorms: list[float]
    products: list[float]  # m(theta) = [eta]^2 |log theta|
    variation: float  # max/min of the products
    scale_invariance_error: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "thetas": self.thetas,
            "seminorms": self.seminorms,
            "products": self.products,
            "variation": self.variation,
            "scale_invariance_error": self.scale_invariance_error,
            "passed": self.passed,
        }


def verify_capacity_decay(thetas, variation_limit: float = 2.0) -> CapacityReport:
    """The profile energy decays like 1/|log theta|: the product
    m(theta) = [eta_theta]^2 |log theta| stays within a bounded band."""
    thetas = sorted(float(t) for t in thetas)
    if any(t <= 0 or t > 0.5 for t in thetas):
        raise ValueError("thetas must lie in (0, 0.5]: |log theta| must stay away from 0")
    seminorms = [capacity_seminorm_sq(t) for t in thetas]
    products = [s * abs(math.log(t)) for s, t in zip(seminorms, thetas)]
    variation = max(products) / min(products)
    mid = thetas[len(thetas) // 2]
    base = capacity_seminorm_sq(mid)
    scaled = capacity_seminorm_sq(mid, lam=0.1)
    scale_err = abs(scaled - base) / base
    return CapacityReport(
        thetas=thetas,
        seminorms=seminorms,
        products=products,
        variation=variation,
        scale_invariance_error=scale_err,
        passed=bool(variation <= variation_limit and scale_err <= 0.01),
    )


# -- borderline construction ---------------------------------------------------


@dataclass(frozen=True)
class BorderlineReport:
    """Factorized bound components for the capacity-cut bubble at one scale.

    The energy side is the exact product expansion of [omega psi U]^2: the
    grid-measured floor [psi U]^2 plus the slab term (1D capacity quadrature
    against the transverse autocorrelation kernel) plus the Cauchy-Schwarz
    cross bound.  The mass side subtracts the factorized slab mass loss
    from the measured [psi U] mass.
    """

    eps: float
    alpha: float
    theta: float
    lam: float
    eps_clamped: bool
    floor_seminorm: float
    floor_mass: float
    theta_energy_term: float
    cross_energy_term: float
    mass_loss_term: float
    energy_upper_bound: float
    mass_lower_bound: float
    slack_energy: float
    slack_mass: float
    mass_at_minimum: float
    tolerance: float
    energy_bound_holds: bool
    mass_bound_holds: bool
    passed: bool

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _transverse_kernel(params: FracParams, eps: float, rho: float, d_norm: float, lam: float) -> Kernel:
    """Kernel w -> lambda^2 A(lambda w), where A(w1) = int rho_W(w2)
    (w1^2 + w2^2)^(-3/2) dw2 is the transverse pair integral and rho_W the
    cross-correlation of (psi^2 U) with U along the section through the
    bubble center.

    Below the correlation sampling scale, A follows its exact asymptote
    2 rho_W(0) / w^2 (relative error O((w/eps)^2)); the table covers the
    rest, with an inverse-cube extension beyond the section support.
    """
    half = 2.0 * rho
    n = 4096
    t = np.linspace(-half, half, n)
    dt = t[1] - t[0]
    section = psi_bump_profile(np.abs(t), rho) * bubble_values(t**2, eps, d_norm, params)
    weighted = psi_bump_profile(np.abs(t), rho) * section  # psi^2 U at the x point
    corr = np.correlate(section, weighted, mode="full")[n - 1 :] * dt
    shifts = np.arange(n) * dt
    rho0 = float(corr[0])

    w_safe = 8.0 * dt
    w_table = np.geomspace(w_safe, 8.0 * rho, 400)
    trap = np.full(n, dt)
    trap[0] = dt / 2.0
    denom = (w_table[:, None] ** 2 + shifts[None, :] ** 2) ** 1.5
    a_table = 2.0 * (corr[None, :] * trap[None, :] / denom).sum(axis=1)
    log_w, log_a = np.log(w_table), np.log(np.maximum(a_table, 1e-300))

    def a_eval(w):
        w = np.abs(np.asarray(w, dtype=float))
        w = np.maximum(w, 1e-300)
        small = 2.0 * rho0 / w**2
        lw = np.log(np.clip(w, w_table[0], w_table[-1]))
        table = np.exp(np.interp(lw, log_w, log_a))
        big = a_table[-1] * (w_table[-1] / w) ** 3
        return np.where(w < w_safe, small, np.where(w > w_table[-1], big, table))

    # tail primitive int_D^inf A: cumulative over the table, inverse-cube
    # beyond it, exact asymptote below w_safe
    seg = 0.5 * (a_table[1:] + a_table[:-1]) * np.diff(w_table)
    cum_from_end = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))
    beyond = a_table[-1] * w_table[-1] / 2.0
    table_tail = cum_from_end + beyond

    def tail_eval(d):
        d = np.maximum(np.asarray(d, dtype=float), 1e-300)
        inside = np.interp(d, w_table, table_tail)
        small = 2.0 * rho0 * (1.0 / d - 1.0 / w_safe) + table_tail[0]
        big = a_table[-1] * w_table[-1] ** 3 / (2.0 * d**2)
        return np.where(d < w_safe, small, np.where(d > w_table[-1], big, inside))

    return Kernel(
        eval=lambda w: lam**2 * a_eval(lam * np.abs(w)),
        tail=lambda dd: lam * tail_eval(lam * dd),
        diag2=2.0 * rho0,
    )


def borderline_point(
    params: FracParams,
    eps: float,
    alpha: float = 1.5,
    rho: float | None = None,
    tolerance: float = 0.15,
) -> BorderlineReport:
    """Factorized borderline bounds at one scale (N = 2, s = 1/2 only)."""
    if params.N != 2 or abs(params.s - 0.5) > 1e-12:
        raise ValueError("borderline check is the N=2, s=1/2 construction")
    if alpha <= 1.0:
        raise ValueError("need alpha > 1")
    eps_min = (math.log(1.0 / THETA_MIN)) ** (-1.0 / alpha)
    clamped = eps < eps_min
    eps_eff = max(eps, eps_min)
    theta = math.exp(-(eps_eff ** (-alpha)))
    lam = eps_eff ** (1.0 + alpha) * theta
    if not (1.0 > eps_eff > theta > lam > 0.0):
        raise ValueError(f"parameter ordering violated: eps={eps_eff}, theta={theta}, lambda={lam}")
    if rho is None:
        rho = 10.0 * eps_eff

    d_norm = normalization_d(params)
    mass_min = params.mass_at_minimum

    # floor: the plain bump-cut bubble on its own grid
    h = eps_eff / 12.0
    grid = _sweep_grid((0.0, 0.0), rho, h)
    mesh = grid.meshgrid()
    r_sq = mesh[0] ** 2 + mesh[1] ** 2
    psi = psi_bump_profile(np.sqrt(r_sq), rho)
    bubble = bubble_values(r_sq, eps_eff, d_norm, params)
    u0 = Field(grid, psi * bubble, nonnegative=True)
    floor_seminorm = gagliardo_seminorm_sq(u0, params, mode="kernel")
    floor_mass = critical_mass(u0, params)
    i1 = float(((psi * bubble) ** 2 * bubble ** (params.two_star - 2.0)).sum() * grid.h**2)
    t_psi = max(floor_seminorm - i1, 0.0)

    # slab energy term: capacity double integral against the transverse kernel
    kernel = _transverse_kernel(params, eps_eff, rho, d_norm, lam)
    bp = geometric_breakpoints(1.0, 1.0 / theta, per_decade=10)
    q_slab = double_integral_even(lambda x: eta_theta_profile(x, theta), bp, kernel)
    theta_term = (params.c_kernel / 2.0) * q_slab
    cross_term = 2.0 * math.sqrt(theta_term * t_psi)
    energy_ub = floor_seminorm + theta_term + cross_term

    # slab mass loss: effective cut length times the transverse mass line
    def cut_weight(a):
        return 1.0 - (1.0 - eta_theta_profile(a, theta)) ** params.two_star

    eff_len = 2.0 * sum(
        quad(cut_weight, a, b, limit=100)[0] for a, b in zip(bp[:-1], bp[1:])
    )
    t_line = np.linspace(-2.0 * rho, 2.0 * rho, 4096)
    sect = psi_bump_profile(np.abs(t_line), rho) * bubble_values(t_line**2, eps_eff, d_norm, params)
    mass_line = float((sect**params.two_star).sum() * (t_line[1] - t_line[0]))
    mass_loss = eff_len * lam * mass_line
    mass_lb = floor_mass - mass_loss

    slack_energy = energy_ub - mass_min
    slack_mass = mass_min - mass_lb
    energy_ok = slack_energy <= tolerance * mass_min
    mass_ok = slack_mass <= tolerance * mass_min
    return BorderlineReport(
        eps=eps_eff,
        alpha=alpha,
        theta=theta,
        lam=lam,
        eps_clamped=clamped,
        floor_seminorm=floor_seminorm,
        floor_mass=floor_mass,
        theta_energy_term=theta_term,
        cross_energy_term=cross_term,
        mass_loss_term=mass_loss,
        energy_upper_bound=energy_ub,
        mass_lower_bound=mass_lb,
        slack_energy=slack_energy,
        slack_mass=slack_mass,
        mass_at_minimum=mass_min,
        tolerance=tolerance,
        energy_bound_holds=bool(energy_ok),
        mass_bound_holds=bool(mass_ok),
        passed=bool(energy_ok and mass_ok),
    )


def verify_borderline(
    params: FracParams,
    eps_list,
    alpha: float = 1.5,
    rho: float | None = None,
    tolerance: float = 0.15,
) -> list[BorderlineReport]:
    """Borderline bounds over a scale sweep; the slab terms must shrink as
    the scale decreases within the clamped regime."""
    reports = [borderline_point(params, e, alpha, rho, tolerance) for e in sorted(eps_list, reverse=True)]
    terms = [r.theta_energy_term for r in reports if not r.eps_clamped]
    if len(terms) >= 2 and any(b > a * (1.0 + 1e-9) for a, b in zip(terms, terms[1:])):
        raise QuadratureError("slab energy term failed to decrease with the scale")
    return reports


# -- sphere map -----------------------------------------------------------------


@dataclass(frozen=True)
class SphereMapResult:
    eps: float
    delta: float
    rho: float
    radius: float
    slab_sampled: bool
    sample_points: list[tuple[float, ...]]
    energies: list[float]
    barycenters: list[tuple[float, ...]]
    degree: int
    max_energy: float
    max_barycenter_offset: float
    min_barycenter_norm: float
    fields: list | None = None  # (Field, EnergyReport) pairs when kept

    def as_dict(self) -> dict:
        return {
            k: getattr(self, k)
            for k in self.__dataclass_fields__
            if k != "fields"
        }


def build_sphere_map(
    params: FracParams,
    eps: float,
    domain: DomainSpec,
    n_samples: int = 16,
    rho: float | None = None,
    alpha: float | None = None,
    keep_fields: bool = False,
) -> SphereMapResult:
    """For each sampled center on the mid-shell sphere, cut the bubble into
    the domain, project to the Nehari set, and record energy and barycenter.

    The slab width delta = eps^alpha is generally far below the grid scale.
    Nodal sampling of such a cut would zero a full node column, charging an
    h-wide notch for a delta-wide cut; since the true cost of the cut is
    negligible by construction (that is the point of the alpha coupling),
    an unresolvable slab factor (transition under two cells) is omitted
    from the samples and reported via ``slab_sampled``.
    """
    if params.N != domain.dim:
        raise ValueError("params and domain dimension mismatch")
    if alpha is None:
        if params.N - 1 - 2 * params.s > 0:
            alpha = 1.25 * (params.N - 2 * params.s) / (params.N - 1 - 2 * params.s)
        else:
            alpha = 1.5
    if rho is None:
        rho = 0.8 * domain.max_bump_radius
    radius = domain.sphere_radius
    borderline = params.N == 2 and abs(params.s - 0.5) <= 1e-12
    delta = eps**alpha
    if borderline:
        eps_min = (math.log(1.0 / THETA_MIN)) ** (-1.0 / alpha)
        theta = math.exp(-(max(eps, eps_min) ** (-alpha)))
        lam = eps ** (1.0 + alpha) * theta
        delta = lam * theta

    if params.N == 2:
        if n_samples < 16:
            raise ValueError("need at least 16 circle samples")
        angles = 2.0 * math.pi * np.arange(n_samples) / n_samples
        points = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        points, _ = icosphere()

    d_norm = normalization_d(params)
    h = eps / 12.0
    # the slab transition ends where the factor reaches 1; below two cells
    # it cannot be represented and is omitted (see docstring)
    transition_end = (lam / theta) if borderline else 2.0 * delta
    slab_sampled = transition_end >= 2.0 * h
    energies, betas, kept = [], [], []
    for point in points:
        z = radius * point
        grid = _sweep_grid(z, rho, h)
        mesh = grid.meshgrid()
        r_sq = sum((m - c) ** 2 for m, c in zip(mesh, z))
        if not slab_sampled:
            slab = 1.0
        elif borderline:
            slab = omega_theta_lambda_profile(mesh[0], theta, lam)
        else:
            slab_r = np.abs(mesh[0]) if params.N == 2 else np.sqrt(mesh[0] ** 2 + mesh[1] ** 2)
            slab = omega_profile(slab_r / delta)
        vals = slab * psi_bump_profile(np.sqrt(r_sq), rho) * bubble_values(r_sq, eps, d_norm, params)
        u = Field(grid, vals, nonnegative=True)
        rep = energy(u, params)
        proj = nehari_project(u, params, report=rep)
        scale = (rep.seminorm_sq / rep.mass) ** (1.0 / (params.two_star - 2.0))
        energies.append(
            EnergyReport.from_norms(
                scale**2 * rep.seminorm_sq,
                scale**params.two_star * rep.mass,
                params.two_star,
            ).energy
        )
        beta = barycenter(proj, params, domain.r3)
        if not np.linalg.norm(beta) > 0.0:
            raise ValueError(f"zero barycenter at sample z={z}; degree undefined")
        betas.append(beta)
        if keep_fields:
            proj_rep = EnergyReport.from_norms(
                scale**2 * rep.seminorm_sq,
                scale**params.two_star * rep.mass,
                params.two_star,
            )
            kept.append((proj.copy_with(proj.values, nonnegative=True), proj_rep))

    betas_arr = np.stack(betas)
    degree = sphere_map_degree(points, betas_arr)
    norm_betas = betas_arr / np.linalg.norm(betas_arr, axis=1)[:, None]
    offsets = np.linalg.norm(norm_betas - points, axis=1)
    return SphereMapResult(
        eps=eps,
        delta=delta,
        rho=rho,
        radius=radius,
        slab_sampled=slab_sampled,
        sample_points=[tuple(map(float, radius * p)) for p in points],
        energies=[float(e) for e in energies],
        barycenters=[tuple(map(float, b)) for b in betas],
        degree=degree,
        max_energy=float(max(energies)),
        max_barycenter_offset=float(offsets.max()),
        min_barycenter_norm=float(np.linalg.norm(betas_arr, axis=1).min()),
        fields=kept if keep_fields else None,
    )


# -- barycenter lower bound ------------------------------------------------------


@dataclass(frozen=True)
class BarycenterCheck:
    count: int
    min_norm: float
    min_margin: float
    threshold: float
    passed: bool

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def check_barycenter_lower_bound(
    params: FracParams,
    domain: DomainSpec,
    fields_with_reports: list[tuple[Field, EnergyReport]],
    energy_margin: float = 0.25,
) -> BarycenterCheck:
    """Every admissible low-energy Nehari field must keep its barycenter at
    norm >= R0/2.

    Preconditions (violators are rejected, not failed): residual <= 1e-8
    relative, energy <= (1 + margin) c_inf, support inside the R3 ball.
    """
    threshold = domain.r0 / 2.0
    norms = []
    for idx, (u, rep) in enumerate(fields_with_reports):
        if abs(rep.nehari_residual) > 1e-8 * rep.seminorm_sq:
            raise ValueError(f"field {idx} is off the Nehari set (precondition)")
        if rep.energy > (1.0 + energy_margin) * params.c_inf:
            raise ValueError(
                f"field {idx} energy {rep.energy:.4g} is above the low-energy "
                f"precondition (c_inf = {params.c_inf:.4g}, margin {energy_margin})"
            )
        mesh = u.grid.meshgrid()
        r_sq = sum(m * m for m in mesh)
        outside = np.abs(u.values)[r_sq > domain.r3**2]
        if outside.size and outside.max() > 1e-12 * max(np.abs(u.values).max(), 1e-300):
            raise ValueError(f"field {idx} is not supported in the R3 ball (precondition)")
        norms.append(float(np.linalg.norm(barycenter(u, params, domain.r3))))
    if not norms:
        raise ValueError("no admissible fields supplied")
    min_norm = min(norms)
    if min_norm < threshold:
        offender = int(np.argmin(norms))
        rep = fields_with_reports[offender][1]
        raise RuntimeError(
            f"barycenter lower bound violated: field {offender} has |beta| = "
            f"{min_norm:.4g} < R0/2 = {threshold:.4g} at energy {rep.energy:.4g}"
        )
    return BarycenterCheck(
        count=len(norms),
        min_norm=min_norm,
        min_margin=min_norm - threshold,
        threshold=threshold,
        passed=True,
    )
