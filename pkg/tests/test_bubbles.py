import numpy as np
import pytest

from fracbubble import FracParams
from fracbubble.bubbles import (
    BubbleSpec,
    CutoffSpec,
    borderline_bubble,
    cutoff_profile,
    eta_theta_profile,
    normalization_d,
    omega_profile,
    psi_bump_profile,
    talenti,
    talenti_norms,
    truncated_bubble,
)
from fracbubble.errors import ResolutionError
from fracbubble.fields import Grid


def test_psi_bump_plateau_and_support():
    rho = 0.3
    r = np.array([0.0, 0.2, rho, 1.99 * rho, 2 * rho, 5.0])
    vals = psi_bump_profile(r, rho)
    assert vals[0] == 1.0 and vals[1] == 1.0 and vals[2] == 1.0
    assert 0.0 < vals[3] < 1.0 or vals[3] == 0.0  # deep in the ramp
    assert vals[4] == 0.0 and vals[5] == 0.0
    assert np.all((0.0 <= vals) & (vals <= 1.0))


def test_omega_plateau_and_support():
    t = np.array([-3.0, -2.0, -1.5, -1.0, 0.0, 1.0, 1.5, 2.0, 3.0])
    vals = omega_profile(t)
    assert vals[3] == 0.0 and vals[4] == 0.0 and vals[5] == 0.0
    assert vals[1] == 1.0 and vals[0] == 1.0 and vals[-2] == 1.0 and vals[-1] == 1.0
    assert 0.0 < vals[2] < 1.0


def test_eta_theta_plateau_support_monotone():
    theta = 1e-3
    r_theta = 1.0 / theta
    assert eta_theta_profile(1.0, theta) == 1.0
    assert eta_theta_profile(0.0, theta) == 1.0
    assert eta_theta_profile(r_theta, theta) == 0.0
    assert eta_theta_profile(2 * r_theta, theta) == 0.0
    rr = np.geomspace(1.0, r_theta, 200)
    vals = eta_theta_profile(rr, theta)
    assert np.all(np.diff(vals) <= 1e-14)
    assert np.all((0.0 <= vals) & (vals <= 1.0))


def test_cutoff_spec_validation_and_roundtrip():
    with pytest.raises(ValueError):
        CutoffSpec(kind="unknown")
    with pytest.raises(ValueError):
        CutoffSpec(kind="psi_bump")
    with pytest.raises(ValueError):
        CutoffSpec(kind="eta_theta", theta=2.0)
    spec = CutoffSpec(kind="omega_theta_lambda", theta=1e-2, lam=1e-3)
    assert spec.r_theta == pytest.approx(100.0)
    assert CutoffSpec.from_dict(spec.to_dict()) == spec


def test_cutoff_profile_dispatch_points():
    psi = CutoffSpec(kind="psi_bump", rho=0.25)
    assert cutoff_profile(psi, np.array([0.1, 0.2])) == pytest.approx(1.0)
    om = CutoffSpec(kind="omega_delta", delta=0.1)
    assert cutoff_profile(om, np.array([0.05])) == 0.0
    assert cutoff_profile(om, np.array([0.3])) == 1.0
    bl = CutoffSpec(kind="omega_theta_lambda", theta=1e-2, lam=0.01)
    assert cutoff_profile(bl, 0.005) == 0.0


def test_bubble_spec_roundtrip():
    spec = BubbleSpec(eps=0.3, z=(0.0, 2.5), d=1.01)
    assert BubbleSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        BubbleSpec(eps=-1.0, z=(0.0,), d=1.0)


def test_talenti_center_value_and_symmetry(params_2_half, quiet):
    spec = BubbleSpec(eps=0.4, z=(0.25, -0.5), d=1.2)
    g = Grid.centered((0.25, -0.5), 2.0, 65)
    u = talenti(spec, g, params_2_half)
    center = np.unravel_index(np.argmax(u.values), u.values.shape)
    # node at the center exists by construction of the centered odd grid
    expect = 1.2 * 0.4 ** (-(2 - 1.0) / 2.0)
    assert u.values[center] == pytest.approx(expect, rel=1e-14)
    # radial symmetry about the center
    assert np.allclose(u.values, u.values[::-1, :], atol=1e-14)
    assert np.allclose(u.values, u.values[:, ::-1], atol=1e-14)


def test_talenti_resolution_warning(params_2_half):
    spec = BubbleSpec(eps=0.05, z=(0.0, 0.0), d=1.0)
    g = Grid.centered((0.0, 0.0), 2.0, 33)
    with pytest.warns(UserWarning, match="resolve"):
        talenti(spec, g, params_2_half)


def test_truncated_bubble_supports(params_2_quarter, quiet):
    eps, delta, rho = 0.2, 0.04, 0.2
    z = (0.0, 2.5)
    h = delta / 4.0
    n = int(2 * (2 * rho / h + 6)) + 1
    g = Grid.centered(z, (n - 1) / 2 * h, n)
    u = truncated_bubble(eps, delta, z, g, params_2_quarter, rho=rho)
    x, y = g.meshgrid()
    assert np.all(u.values[np.abs(x) <= delta] == 0.0)
    r = np.sqrt((x - z[0]) ** 2 + (y - z[1]) ** 2)
    assert np.all(u.values[r >= 2 * rho] == 0.0)
    assert u.values.min() >= 0.0
    full = talenti(BubbleSpec.for_params(params_2_quarter, eps, z), g, params_2_quarter)
    assert np.all(u.values <= full.values + 1e-15)


def test_truncated_bubble_validation(params_2_quarter):
    g = Grid.centered((0.0, 2.5), 0.5, 33)
    with pytest.raises(ValueError):
        truncated_bubble(0.05, 0.1, (0.0, 2.5), g, params_2_quarter)
    with pytest.raises(ResolutionError):
        truncated_bubble(0.2, 0.01, (0.0, 2.5), g, params_2_quarter)


def test_borderline_bubble_core_and_validation(params_2_half, params_2_quarter, quiet):
    eps, theta, lam = 0.3, 1e-2, 1e-3
    g = Grid.centered((0.0, 2.5), 0.5, 81)
    u = borderline_bubble(eps, theta, lam, (0.0, 2.5), g, params_2_half)
    x, _ = g.meshgrid()
    assert np.all(u.values[np.abs(x) <= lam] == 0.0)
    with pytest.raises(ValueError):
        borderline_bubble(eps, theta, lam, (0.0, 2.5), g, params_2_quarter)
    with pytest.raises(ValueError):
        borderline_bubble(0.3, 0.5, 0.6, (0.0, 2.5), g, params_2_half)


def test_normalization_scale_independent(quiet):
    p = FracParams.make(1, 0.25)
    d_half = normalization_d(p, eps=0.5)
    d_one = normalization_d(p, eps=1.0)
    assert d_half == pytest.approx(d_one, rel=5e-3)


def test_talenti_identity_quick(params_2_half, quiet):
    norms = talenti_norms(params_2_half)
    target = params_2_half.mass_at_minimum
    assert norms.seminorm == pytest.approx(target, rel=0.01)
    assert norms.mass == pytest.approx(target, rel=0.01)
    assert norms.rayleigh == pytest.approx(params_2_half.s_sharp, rel=0.01)
    assert norms.uncertainty < 0.01
