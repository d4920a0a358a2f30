"""Closed-form and quadrature-derived constants of the fractional critical problem.

Conventions used throughout the package:

* the energy seminorm is normalized so that the kernel-side double integral
  with prefactor ``C(N,s)/2`` equals the Fourier-side integral
  ``int |xi|^(2s) |Fu(xi)|^2 dxi`` under the unitary transform;
* ``two_star = 2N/(N-2s)`` is the critical exponent, ``S(N,s)`` the sharp
  Sobolev constant, and ``c_inf = (s/N) * S(N,s)^(N/2s)`` the minimal energy
  on the positive Nehari manifold of the whole space.

All operations here are pure functions of ``(N, s)``; ``FracParams`` caches
them once at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

from .errors import QuadratureError

__all__ = [
    "FracParams",
    "critical_exponent",
    "sharp_sobolev_constant",
    "kernel_constant",
    "minimal_energy",
    "bootstrap_exponents",
]

# Relative accuracy target for the kernel-constant quadrature.
KERNEL_CONSTANT_RTOL = 1e-8

# Terms kept in the power series of the singular inner integral.  The terms
# decay like 1/(2k)!, so 24 terms are far below double precision already.
_SERIES_TERMS = 24


def _validate_order(N: int, s: float) -> None:
    if not isinstance(N, (int,)) or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    if not (0.0 < s < 1.0):
        raise ValueError(f"s must lie in (0, 1), got {s!r}")


def critical_exponent(N: int, s: float) -> float:
    """Critical Sobolev exponent 2N/(N - 2s)."""
    _validate_order(N, s)
    if N <= 2 * s:
        raise ValueError(f"critical exponent undefined: need N > 2s, got N={N}, s={s}")
    return 2.0 * N / (N - 2.0 * s)


def sharp_sobolev_constant(N: int, s: float) -> float:
    """Sharp constant of the fractional Sobolev embedding.

    Evaluated through log-gamma to keep 1 ulp-level accuracy also when the
    gamma ratios get large.
    """
    _validate_order(N, s)
    if s >= N / 2.0:
        raise ValueError(f"sharp constant requires s < N/2, got N={N}, s={s}")
    log_value = (
        2.0 * s * math.log(2.0)
        + s * math.log(math.pi)
        + math.lgamma((N + 2.0 * s) / 2.0)
        - math.lgamma((N - 2.0 * s) / 2.0)
        + (2.0 * s / N) * (math.lgamma(N / 2.0) - math.lgamma(N))
    )
    return math.exp(log_value)


def _halfline_cosine_integral(s: float) -> tuple[float, float]:
    """``int_0^inf (1 - cos t) / t^(1+2s) dt`` with an error estimate.

    Split at t = 1.  On (0, 1] the 1-cos singularity is summed as a power
    series; on [1, inf) the non-oscillatory part integrates in closed form
    and the cosine tail goes to QUADPACK's Fourier-weight routine.
    """
    # inner part: sum_k (-1)^(k+1) / ((2k)! (2k - 2s))
    inner = 0.0
    term_mag = 0.0
    for k in range(1, _SERIES_TERMS + 1):
        term_mag = 1.0 / (math.factorial(2 * k) * (2 * k - 2.0 * s))
        inner += term_mag if k % 2 == 1 else -term_mag
    series_err = term_mag  # alternating series: below the last term kept

    tail_cos, tail_err = quad(
        lambda t: t ** (-1.0 - 2.0 * s), 1.0, math.inf, weight="cos", wvar=1.0
    )
    value = inner + 1.0 / (2.0 * s) - tail_cos
    return value, series_err + tail_err


def kernel_constant(N: int, s: float) -> float:
    """Normalization constant of the singular kernel, by quadrature.

    The defining N-dimensional integral is split radially at ``|xi| = 1``;
    the angular factor reduces exactly to a sphere moment of ``|sigma_1|^(2s)``
    and the radial part to a half-line integral handled by series plus
    Fourier-weighted quadrature (see ``_halfline_cosine_integral``).

    Raises ``QuadratureError`` when the achieved relative error estimate
    exceeds ``KERNEL_CONSTANT_RTOL``.
    """
    _validate_order(N, s)
    radial, radial_err = _halfline_cosine_integral(s)
    # int_{S^{N-1}} |sigma_1|^(2s) dsigma  (equals 2 for N = 1)
    angular = 2.0 * math.pi ** ((N - 1) / 2.0) * math.exp(
        math.lgamma(s + 0.5) - math.lgamma(s + N / 2.0)
    )
    integral = radial * angular
    rel_err = radial_err / radial if radial > 0 else math.inf
    if not math.isfinite(integral) or integral <= 0 or rel_err > KERNEL_CONSTANT_RTOL:
        raise QuadratureError(
            f"kernel constant quadrature did not converge for N={N}, s={s}: "
            f"achieved relative error {rel_err:.3e}",
            achieved=rel_err,
        )
    return 1.0 / integral


def minimal_energy(N: int, s: float) -> float:
    """Minimal Nehari energy (s/N) * S(N,s)^(N/2s)."""
    if N <= 2 * s:
        raise ValueError(f"minimal energy requires N > 2s, got N={N}, s={s}")
    return (s / N) * sharp_sobolev_constant(N, s) ** (N / (2.0 * s))


def bootstrap_exponents(N: int, s: float, count: int) -> list[float]:
    """Integrability-exponent ladder p0, p1, ... of the regularity bootstrap.

    Starts at p0 = 2*(2*+1)/2 and iterates p_{n+1} = gamma^2 (p_n + 2 - 2*)
    with gamma^2 = 2*/2.  The map has fixed point 2*, and the start lies
    strictly above it, so the sequence increases without bound.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    two_star = critical_exponent(N, s)
    gamma_sq = two_star / 2.0
    p = two_star * (two_star + 1.0) / 2.0
    seq = [p]
    for _ in range(count - 1):
        p = gamma_sq * (p + 2.0 - two_star)
        seq.append(p)
    return seq


@dataclass(frozen=True)
class FracParams:
    """Dimension, order, and the derived constants, computed once."""

    N: int
    s: float
    two_star: float
    c_kernel: float
    s_sharp: float
    c_inf: float

    @classmethod
    def make(cls, N: int, s: float) -> "FracParams":
        two_star = critical_exponent(N, s)  # validates N > 2s
        s_sharp = sharp_sobolev_constant(N, s)
        return cls(
            N=N,
            s=s,
            two_star=two_star,
            c_kernel=kernel_constant(N, s),
            s_sharp=s_sharp,
            c_inf=(s / N) * s_sharp ** (N / (2.0 * s)),
        )

    def __post_init__(self):
        if self.N <= 2 * self.s:
            raise ValueError(f"need N > 2s, got N={self.N}, s={self.s}")
        if self.two_star <= 2 or self.c_kernel <= 0 or self.s_sharp <= 0:
            raise ValueError("derived constants violate their invariants")

    @property
    def mass_at_minimum(self) -> float:
        """(N/s) * c_inf: the shared value of energy and mass of an extremal."""
        return (self.N / self.s) * self.c_inf

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "s": self.s,
            "two_star": self.two_star,
            "C": self.c_kernel,
            "S": self.s_sharp,
            "c_inf": self.c_inf,
        }
