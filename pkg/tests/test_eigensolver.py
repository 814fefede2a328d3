import math

import numpy as np
import pytest

from slipstab.eigensolver import (
    DispersionRoot,
    ModeProblem,
    boundary_residual,
    dispersion_det,
    dispersion_lambda,
    mode_equation_residual,
    recover_mode,
    refine_lambda_dispersion,
    solve_principal_eigen,
    vertical_momentum_residual,
)
from slipstab.errors import BracketFailure, ConfigError
from slipstab.functionals import default_grid
from slipstab.model import SlipConfig, constant_c0, critical_viscosity

# frozen regression value, computed once from the dispersion-determinant
# root at (k0=k1=1, mu=0.05, xi2=1) and cross-checked by collocation
PINNED_LAMBDA = 19.116903771571


def test_mode_problem_validation(unstable_cfg):
    with pytest.raises(ConfigError):
        ModeProblem(unstable_cfg, -1.0)


def test_pinned_growth_rate(unstable_cfg, grid96):
    sp = solve_principal_eigen(ModeProblem(unstable_cfg, 1.0), grid96)
    assert sp.lam == pytest.approx(PINNED_LAMBDA, rel=1e-6)
    assert sp.method == "discrete"


def test_normalisation_and_boundary_residuals(unstable_cfg, grid96):
    for xi2 in (0.0, 1.0, 7.0):
        prob = ModeProblem(unstable_cfg, xi2)
        sp = solve_principal_eigen(prob, grid96)
        g = sp.psi.grid
        dpsi = g.d1 @ sp.psi.values
        j = 0.5 * (xi2 * g.quad(sp.psi.values**2) + g.quad(dpsi**2))
        assert j == pytest.approx(1.0, abs=1e-10)
        assert boundary_residual(sp, unstable_cfg) < 1e-8
        assert dpsi[0] >= 0.0  # deterministic sign fix


def test_stable_viscosity_bound(stable_cfg, grid96):
    # above the critical viscosity the whole curve sits below mu_c - mu
    bound = critical_viscosity(stable_cfg) - stable_cfg.mu
    for xi2 in (0.0, 0.5, 2.0, 8.0):
        sp = solve_principal_eigen(ModeProblem(stable_cfg, xi2), grid96)
        assert sp.lam <= bound + 1e-9


def test_route_agreement_on_matrix(grid96):
    configs = [(1, 1, 0.05), (1, 1, 0.8), (0, 1, 0.1), (1, -1, 0.1), (-2, 1, 0.15)]
    for k0, k1, mu in configs:
        cfg = SlipConfig(k0, k1, mu)
        for xi2 in (0.5, 3.0):
            prob = ModeProblem(cfg, xi2)
            sp = solve_principal_eigen(prob, grid96)
            root = refine_lambda_dispersion(prob, sp.lam)
            assert sp.lam == pytest.approx(root.lam, rel=1e-6, abs=1e-8)
            assert root.det_residual < 1e-10
            assert root.m**2 == pytest.approx(complex(xi2 + root.lam / mu), rel=1e-9)


def test_grid_doubling_check_passes(unstable_cfg):
    solve_principal_eigen(ModeProblem(unstable_cfg, 2.0), default_grid(96), check=True)


def test_dispersion_scan_finds_positive_roots(unstable_cfg):
    prob = ModeProblem(unstable_cfg, 1.0)
    roots = dispersion_lambda(prob, (1e-3, constant_c0(unstable_cfg)), samples=600)
    assert roots, "expected growing roots below the critical frequency"
    top = max(r.lam for r in roots)
    assert top == pytest.approx(PINNED_LAMBDA, rel=1e-6)
    assert all(r.det_residual < 1e-10 for r in roots)


def test_dispersion_no_positive_roots_when_stable(stable_cfg):
    prob = ModeProblem(stable_cfg, 1.0)
    roots = dispersion_lambda(prob, (1e-6, constant_c0(stable_cfg)), samples=400)
    assert roots == []


def test_dispersion_bracket_validation(unstable_cfg):
    prob = ModeProblem(unstable_cfg, 1.0)
    with pytest.raises(BracketFailure):
        dispersion_lambda(prob, (2.0, 1.0))
    with pytest.raises(BracketFailure):
        dispersion_det(prob, 1e9)  # basis overflow guard
    with pytest.raises(ConfigError):
        dispersion_det(ModeProblem(unstable_cfg, 0.0), 1.0)


def test_determinant_continuous_through_zero(unstable_cfg):
    # the divided-difference basis removes the confluent degeneracy at
    # lambda = 0, so the determinant stays smooth across it
    prob = ModeProblem(unstable_cfg, 4.0)
    lams = np.linspace(-1e-3, 1e-3, 9)
    vals = np.array([dispersion_det(prob, l) for l in lams])
    diffs = np.abs(np.diff(vals))
    assert np.max(diffs) < 10.0 * np.median(diffs) + 1e-12


def test_recover_mode_relations(unstable_cfg, grid96):
    prob = ModeProblem(unstable_cfg, 1.0)
    sp = recover_mode(solve_principal_eigen(prob, grid96), prob)
    xi = math.sqrt(prob.xi2)
    g = sp.psi.grid
    # incompressibility: xi*phi + psi' = 0 nodewise
    incomp = xi * sp.phi.values + g.d1 @ sp.psi.values
    assert np.max(np.abs(incomp)) < 1e-8
    assert vertical_momentum_residual(sp, prob) < 1e-6
    # doubling the eigenfunction doubles the recovered amplitudes
    import dataclasses

    from slipstab.functionals import Profile

    doubled_sp = dataclasses.replace(sp, psi=Profile(g, 2.0 * sp.psi.values))
    doubled = recover_mode(doubled_sp, prob)
    assert doubled.phi.values == pytest.approx(2.0 * sp.phi.values, rel=1e-10)
    assert doubled.pi.values == pytest.approx(2.0 * sp.pi.values, rel=1e-10)


def test_recover_mode_frequency_sign_flip(unstable_cfg, grid96):
    # substituting the opposite frequency sign flips the horizontal
    # amplitude and leaves the vertical amplitude and pressure unchanged
    prob = ModeProblem(unstable_cfg, 1.0)
    sp = solve_principal_eigen(prob, grid96)
    plus = recover_mode(sp, prob, xi_sign=1)
    minus = recover_mode(sp, prob, xi_sign=-1)
    assert minus.phi.values == pytest.approx(-plus.phi.values, rel=1e-12)
    assert minus.pi.values == pytest.approx(plus.pi.values, rel=1e-12)
    assert minus.psi.values == pytest.approx(plus.psi.values)


def test_recover_mode_rejects_zero_frequency(unstable_cfg, grid96):
    sp = solve_principal_eigen(ModeProblem(unstable_cfg, 0.0), grid96)
    with pytest.raises(ConfigError):
        recover_mode(sp, ModeProblem(unstable_cfg, 0.0))


def test_interior_equation_residual(unstable_cfg, grid96):
    prob = ModeProblem(unstable_cfg, 2.0)
    sp = solve_principal_eigen(prob, grid96)
    assert mode_equation_residual(sp, prob) < 1e-3  # roundoff of the stiff rows


def test_zero_frequency_branch(unstable_cfg, grid96):
    # at xi2 = 0 the problem reduces to the fourth-order/second-order pencil;
    # the equal-coefficient maximum has an independent transcendental oracle:
    # the odd Robin mode mu*m*coth(m/2) = k with rate mu*m^2
    from scipy.optimize import brentq

    mu, k = unstable_cfg.mu, unstable_cfg.k1
    m = brentq(lambda m: mu * m / math.tanh(m / 2.0) - k, 1e-6, 1e3, xtol=1e-12)
    oracle = mu * m * m
    sp = solve_principal_eigen(ModeProblem(unstable_cfg, 0.0), grid96)
    assert sp.lam == pytest.approx(oracle, rel=1e-6)
