import math

import numpy as np
import pytest

from slipstab.errors import ConfigError
from slipstab.model import (
    SlipConfig,
    boundary_bound_constant,
    constant_c0,
    critical_viscosity,
    critical_viscosity_closed_form,
    cubic_profile_values,
    derived_constants,
    maximizer_cubic,
)


def test_config_validation():
    with pytest.raises(ConfigError):
        SlipConfig(1.0, 1.0, 0.0)
    with pytest.raises(ConfigError):
        SlipConfig(1.0, 1.0, -0.1)
    with pytest.raises(ConfigError):
        SlipConfig(float("nan"), 1.0, 1.0)
    SlipConfig(-3.0, 2.0, 0.7)  # mixed signs are legitimate


def test_closed_form_branches():
    assert critical_viscosity_closed_form(SlipConfig(-1, -1, 1.0)) == 0.0
    assert critical_viscosity_closed_form(SlipConfig(1, 1, 1.0)) == pytest.approx(1 / 6)
    assert critical_viscosity_closed_form(SlipConfig(0, 1, 1.0)) == pytest.approx(1 / 3)
    assert critical_viscosity_closed_form(SlipConfig(1, 0, 1.0)) == pytest.approx(1 / 3)


def test_closed_form_mu_independent():
    for mu in (0.01, 1.0, 50.0):
        assert critical_viscosity_closed_form(SlipConfig(2, -1, mu)) == pytest.approx(
            critical_viscosity_closed_form(SlipConfig(2, -1, 1.0))
        )


def test_positive_iff_some_positive_coefficient():
    for k0 in (-2.0, -0.5, 0.0, 0.5, 2.0):
        for k1 in (-2.0, -0.5, 0.0, 0.5, 2.0):
            cfg = SlipConfig(k0, k1, 1.0)
            if max(k0, k1) > 0:
                assert critical_viscosity_closed_form(cfg) > 0
                assert critical_viscosity(cfg) > 0
            else:
                assert critical_viscosity_closed_form(cfg) == 0.0
                assert critical_viscosity(cfg) == 0.0


def test_symmetry_in_coefficients():
    for k0, k1 in [(2.0, 0.5), (-1.0, 3.0), (0.0, 1.0)]:
        a = critical_viscosity_closed_form(SlipConfig(k0, k1, 1.0))
        b = critical_viscosity_closed_form(SlipConfig(k1, k0, 1.0))
        assert a == pytest.approx(b, rel=1e-15)


def test_equal_coefficient_branch_disagrees_with_general_formula():
    # the dedicated branch gives k/6 while the general expression evaluated
    # at k1=k0=k gives k/2; the variational value (critical_viscosity) sides
    # with the general expression, as the functionals module verifies
    k = 1.0
    cfg = SlipConfig(k, k, 1.0)
    assert critical_viscosity_closed_form(cfg) == pytest.approx(k / 6)
    assert critical_viscosity(cfg) == pytest.approx(k / 2)


def test_cubic_satisfies_its_defining_equations():
    for k0, k1 in [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0), (2.0, 0.5), (-1.0, 2.0), (3.0, 0.5)]:
        cfg = SlipConfig(k0, k1, 1.0)
        b, a = maximizer_cubic(cfg)
        mu_c = critical_viscosity_closed_form(cfg)
        assert abs((k0 - k1) * b * b - 2.0 * k0 * b + k1) < 1e-12
        assert abs(mu_c - ((k0 - k1) * b / 6.0 + k1 / 6.0)) < 1e-12
        assert a > 0


def test_cubic_examples():
    b, _ = maximizer_cubic(SlipConfig(1.0, 1.0, 1.0))
    assert b == pytest.approx(0.5)
    b, _ = maximizer_cubic(SlipConfig(1.0, 0.0, 1.0))
    assert b == pytest.approx(2.0)
    assert critical_viscosity_closed_form(SlipConfig(1.0, 0.0, 1.0)) == pytest.approx(1 / 3)


def test_cubic_normalization_against_polynomial_integral():
    # oracle: integrate (psi'')^2 exactly with numpy polynomial arithmetic
    for k0, k1 in [(1.0, 0.0), (2.0, 0.5), (1.0, 1.0)]:
        b, a = maximizer_cubic(SlipConfig(k0, k1, 1.0))
        poly = a * np.polynomial.Polynomial([0.0, b, -(1.0 + b), 1.0])
        dd = poly.deriv(2)
        integral = (dd**2).integ()
        assert 0.5 * (integral(1.0) - integral(0.0)) == pytest.approx(1.0, rel=1e-13)


def test_cubic_requires_positive_threshold():
    with pytest.raises(ConfigError):
        maximizer_cubic(SlipConfig(-1.0, -1.0, 1.0))


def test_constant_c0_examples():
    assert constant_c0(SlipConfig(1, 1, 1.0)) == pytest.approx(3.0)
    assert constant_c0(SlipConfig(0, 0, 1.0)) == 0.0
    assert constant_c0(SlipConfig(-2, 1, 0.5)) == pytest.approx(9.0)


def test_constant_c0_is_endpoint_maximum():
    # oracle: brute-force the quadratic over a fine y sample
    for k0, k1, mu in [(1.0, -2.0, 0.3), (2.0, 0.5, 1.7), (-1.0, -1.0, 0.2)]:
        cfg = SlipConfig(k0, k1, mu)
        y = np.linspace(0.0, 1.0, 20001)
        brute = np.max(abs(k1 + k0) + ((k1 + k0) * y - k0) ** 2 / mu)
        assert constant_c0(cfg) == pytest.approx(brute, rel=1e-9)


def test_derived_constants_bundle():
    d = derived_constants(SlipConfig(1.0, 0.0, 2.0))
    assert d.mu_c == pytest.approx(1 / 3)
    assert d.b_max == pytest.approx(2.0)
    assert d.c0 == pytest.approx(1.0 + 1.0 / 2.0)
    d0 = derived_constants(SlipConfig(-1.0, -2.0, 1.0))
    assert d0.mu_c == 0.0 and d0.b_max is None and d0.a_norm is None


def test_cubic_profile_values_matches_horner():
    b, a = maximizer_cubic(SlipConfig(2.0, 0.5, 1.0))
    y = np.linspace(0, 1, 11)
    assert cubic_profile_values(b, a, y) == pytest.approx(a * y * (y - 1) * (y - b))


def test_boundary_bound_constant_positive():
    assert boundary_bound_constant(SlipConfig(1.0, -2.0, 1.0)) == pytest.approx(1.0 + 4.0)
