import math

import numpy as np
import pytest

from fracbubble.graded1d import (
    double_integral_even,
    geometric_breakpoints,
    inverse_square_kernel,
    power_kernel,
)

# whole-line double integral of (f(x)-f(y))^2 / (x-y)^2 for f = exp(-x^2/2):
# via the autocorrelation identity it equals 2 pi exactly
GAUSS_DOUBLE = 2.0 * math.pi


def test_gaussian_oracle():
    bp = np.concatenate((np.linspace(0, 4, 33), np.linspace(4.25, 12, 32)))
    q = double_integral_even(lambda x: np.exp(-(x**2) / 2.0), bp, gl_order=12)
    assert q == pytest.approx(GAUSS_DOUBLE, rel=1e-5)


def test_breakpoint_validation():
    with pytest.raises(ValueError):
        geometric_breakpoints(2.0, 1.0)
    bp = geometric_breakpoints(1.0, 100.0, per_decade=6)
    assert bp[0] == 0.0 and bp[1] == 1.0
    assert bp[-1] == pytest.approx(100.0)
    assert np.all(np.diff(bp) > 0)
    with pytest.raises(ValueError):
        double_integral_even(lambda x: x, np.array([0.5, 1.0]))


def test_power_kernel_validation():
    with pytest.raises(ValueError):
        power_kernel(1.0)
    with pytest.raises(ValueError):
        power_kernel(2.5)
    k = power_kernel(1.5)
    assert k.diag2 == 0.0
    assert float(k.tail(np.array(4.0))) == pytest.approx(2.0 * 4.0**-0.5, rel=1e-12)


def test_inverse_square_tail():
    k = inverse_square_kernel()
    assert float(k.tail(np.array(5.0))) == pytest.approx(0.2, rel=1e-14)
    assert k.diag2 == 1.0
