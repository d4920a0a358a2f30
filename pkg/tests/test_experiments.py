import math

import numpy as np
import pytest

from fracbubble.domain import DomainSpec
from fracbubble.experiments import (
    RateFitError,
    borderline_point,
    build_sphere_map,
    capacity_seminorm_sq,
    check_barycenter_lower_bound,
    fit_power_with_correction,
    fit_rate,
    run_truncation_sweep,
    verify_borderline,
    verify_capacity_decay,
    verify_lower_mass,
    verify_upper_energy,
)


class TestRateFit:
    x = 0.2 * np.array([1 / 64, 1 / 32, 1 / 16, 1 / 8])

    @pytest.mark.parametrize("p", [0.5, 1.0, 1.5])
    def test_exact_recovery_with_floor(self, p):
        y = 0.037 + 2.3 * self.x**p
        rep = fit_rate("delta", self.x, y, expected=p)
        assert rep.slope == pytest.approx(p, abs=1e-9)
        assert rep.baseline == pytest.approx(0.037, rel=1e-6)
        assert rep.passed

    def test_flat_data_rejected(self):
        with pytest.raises(RateFitError, match="flat"):
            fit_rate("delta", self.x, np.full(4, 0.21), expected=1.0)

    def test_nonmonotone_rejected(self):
        with pytest.raises(RateFitError, match="monotone"):
            fit_rate("delta", self.x, np.array([0.1, 0.3, 0.2, 0.5]), expected=1.0)

    def test_needs_four_points(self):
        with pytest.raises(ValueError):
            fit_rate("delta", self.x[:3], self.x[:3], expected=1.0)

    def test_needs_geometric_spacing(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        with pytest.raises(ValueError, match="geometric"):
            fit_rate("delta", x, x, expected=1.0)

    @pytest.mark.parametrize("p", [0.5, 1.5])
    def test_two_term_exact_recovery(self, p):
        y = 4.0 * self.x**p - 7.0 * self.x if p < 1 else 4.0 * self.x**p + 2.0 * self.x
        rep = fit_power_with_correction("delta", self.x, y, expected=p)
        assert rep.slope == pytest.approx(p, abs=2e-3)
        assert rep.passed

    def test_two_term_rejects_nonpositive(self):
        with pytest.raises(RateFitError):
            fit_power_with_correction("delta", self.x, np.array([-1.0, 0.5, 1.0, 2.0]), expected=0.5)


class TestCapacity:
    def test_decay_band(self):
        rep = verify_capacity_decay([1e-1, 1e-2, 1e-3])
        assert rep.passed
        assert rep.variation <= 2.0
        assert rep.scale_invariance_error <= 0.01
        # products roughly level: each within the band of the mean
        mean = sum(rep.products) / len(rep.products)
        assert all(0.5 * mean <= m <= 2.0 * mean for m in rep.products)

    def test_scale_invariance_explicit(self):
        base = capacity_seminorm_sq(1e-2, lam=1.0)
        for lam in (0.25, 0.0625):
            assert capacity_seminorm_sq(1e-2, lam=lam) == pytest.approx(base, rel=0.01)

    def test_theta_guard(self):
        with pytest.raises(ValueError):
            verify_capacity_decay([0.9])
        with pytest.raises(ValueError):
            capacity_seminorm_sq(1.5)


@pytest.fixture(scope="module")
def mini_sweep(params_2_quarter):
    import warnings

    eps = 0.2
    deltas = [eps / 64, eps / 32, eps / 16, eps / 8]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sweep = run_truncation_sweep(
            params_2_quarter, eps, deltas, z=(0.0, 2.5), rho=0.2
        )
    return sweep


class TestTruncationSweep:
    def test_single_pass_consistency(self, mini_sweep):
        assert len(mini_sweep.seminorms) == len(mini_sweep.masses) == 4
        assert all(s > 0 for s in mini_sweep.seminorms)
        # mass deficit positive and below the whole-space mass
        for m in mini_sweep.masses:
            assert 0.0 < mini_sweep.mass_at_minimum - m < mini_sweep.mass_at_minimum
        # slab cost positive, increasing with the width
        assert all(c > 0 for c in mini_sweep.slab_costs)
        assert all(b > a for a, b in zip(mini_sweep.slab_costs, mini_sweep.slab_costs[1:]))

    def test_energy_rate(self, params_2_quarter, mini_sweep):
        rep = verify_upper_energy(
            params_2_quarter, mini_sweep.eps, mini_sweep.deltas, mini_sweep.z,
            tolerance=0.25, sweep=mini_sweep,
        )
        assert rep.expected == pytest.approx(0.5)
        assert rep.passed

    def test_mass_rate(self, params_2_quarter, mini_sweep):
        rep = verify_lower_mass(
            params_2_quarter, mini_sweep.eps, mini_sweep.deltas, mini_sweep.z,
            tolerance=0.2, sweep=mini_sweep,
        )
        assert rep.expected == pytest.approx(1.0)
        assert rep.passed

    def test_energy_rate_needs_positive_exponent(self, params_2_half):
        with pytest.raises(ValueError):
            verify_upper_energy(params_2_half, 0.2, [0.01, 0.02, 0.04, 0.08], (0.0, 2.5))

    def test_width_validation(self, params_2_quarter):
        with pytest.raises(ValueError):
            run_truncation_sweep(params_2_quarter, 0.2, [0.1, 0.3], (0.0, 2.5))


class TestBorderline:
    def test_point_structure(self, params_2_half, quiet):
        rep = borderline_point(params_2_half, 0.35, alpha=1.5)
        assert rep.theta == pytest.approx(math.exp(-(0.35**-1.5)), rel=1e-12)
        assert rep.lam < rep.theta < rep.eps
        assert not rep.eps_clamped
        assert rep.theta_energy_term > 0
        assert rep.mass_loss_term > 0
        # the mass side of the construction is within its allowance
        assert rep.mass_bound_holds

    def test_eps_clamped(self, params_2_half, quiet):
        rep = borderline_point(params_2_half, 0.05, alpha=1.5)
        assert rep.eps_clamped
        assert rep.theta >= 1e-4 * (1 - 1e-9)

    def test_requires_borderline_orders(self, params_2_quarter):
        with pytest.raises(ValueError):
            borderline_point(params_2_quarter, 0.3)

    def test_terms_decrease_with_scale(self, params_2_half, quiet):
        reports = verify_borderline(params_2_half, [0.45, 0.3], alpha=1.5)
        assert reports[0].theta_energy_term >= reports[1].theta_energy_term
        assert reports[0].mass_loss_term >= reports[1].mass_loss_term


@pytest.fixture(scope="module")
def small_sphere_map(params_2_quarter):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_sphere_map(
            params_2_quarter,
            eps=0.12,
            domain=DomainSpec(r0=2.0, r1=4.0, r2=6.0, r3=8.0),
            n_samples=16,
            keep_fields=True,
        )


class TestSphereMap:
    def test_degree_one(self, small_sphere_map):
        assert small_sphere_map.degree == 1

    def test_barycenters_near_centers(self, small_sphere_map):
        assert small_sphere_map.max_barycenter_offset < 1.0
        assert small_sphere_map.min_barycenter_norm > 0.0

    def test_energies_near_minimal(self, small_sphere_map, params_2_quarter):
        assert small_sphere_map.max_energy <= 1.3 * params_2_quarter.c_inf

    def test_sample_count_guard(self, params_2_quarter):
        with pytest.raises(ValueError):
            build_sphere_map(params_2_quarter, 0.15, DomainSpec(), n_samples=8)

    def test_barycenter_lower_bound(self, small_sphere_map, params_2_quarter):
        domain = DomainSpec(r0=2.0, r1=4.0, r2=6.0, r3=8.0)
        check = check_barycenter_lower_bound(
            params_2_quarter, domain, small_sphere_map.fields
        )
        assert check.passed
        assert check.min_norm >= domain.r0 / 2.0
        assert check.count == 16

    def test_precondition_rejects_off_manifold(self, small_sphere_map, params_2_quarter):
        from fracbubble.nehari import EnergyReport

        domain = DomainSpec(r0=2.0, r1=4.0, r2=6.0, r3=8.0)
        u, rep = small_sphere_map.fields[0]
        bad = EnergyReport.from_norms(rep.seminorm_sq, 0.5 * rep.seminorm_sq, params_2_quarter.two_star)
        with pytest.raises(ValueError, match="Nehari"):
            check_barycenter_lower_bound(params_2_quarter, domain, [(u, bad)])

    def test_precondition_rejects_high_energy(self, small_sphere_map, params_2_quarter):
        from fracbubble.nehari import EnergyReport

        domain = DomainSpec(r0=2.0, r1=4.0, r2=6.0, r3=8.0)
        u, rep = small_sphere_map.fields[0]
        bad = EnergyReport.from_norms(100.0, 100.0, params_2_quarter.two_star)
        with pytest.raises(ValueError, match="energy"):
            check_barycenter_lower_bound(params_2_quarter, domain, [(u, bad)])
