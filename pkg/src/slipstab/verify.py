"""Built-in property suite behind the `verify` subcommand.

A compact re-run of the toolkit's defining identities at reduced sizes:
closed-form against variational thresholds, eigenvalue route agreement,
the sign trichotomy, curve monotonicity, the energy law, the spectral
inequality and pressure recovery.  Each check returns (name, ok, detail).
"""

from __future__ import annotations

import math

import numpy as np

from .eigensolver import (
    ModeProblem,
    boundary_residual,
    refine_lambda_dispersion,
    solve_principal_eigen,
)
from .functionals import default_grid, maximize_Z_on_sphere
from .model import (
    SlipConfig,
    constant_c0,
    critical_viscosity,
    critical_viscosity_closed_form,
    maximizer_cubic,
)
from .modes import eigenmode_state
from .simulator import (
    FlowState,
    Stepper,
    energy_audit,
    key_inequality_gap,
    l2_norm,
    recover_pressure,
)
from .thresholds import capital_lambda, critical_frequency


def run_property_suite(fast: bool = False):
    checks = [
        _check_thresholds,
        _check_cubic,
        _check_route_agreement,
        _check_trichotomy,
        _check_monotone,
        _check_energy_law,
        _check_key_inequality,
        _check_linear_growth,
        _check_pressure,
    ]
    if fast:
        checks = checks[:5]
    rows = []
    for check in checks:
        try:
            rows.append(check())
        except Exception as exc:  # a crashed check is a failed check
            rows.append((check.__name__.lstrip("_"), False, f"raised {exc!r}"))
    return rows, all(ok for _, ok, _ in rows)


def _check_thresholds():
    grid = default_grid(128)
    worst = 0.0
    for k0, k1 in [(-1.0, -1.0), (0.0, 1.0), (2.0, 0.5), (1.0, 1.0)]:
        cfg = SlipConfig(k0, k1, 1.0)
        numeric, _ = maximize_Z_on_sphere(cfg, grid)
        target = critical_viscosity(cfg)
        worst = max(worst, abs(numeric - target) / max(1.0, abs(target)))
    ok = worst < 1e-6
    return ("threshold closed form vs variational", ok, f"worst rel err {worst:.2e}")


def _check_cubic():
    worst = 0.0
    for k0, k1 in [(1.0, 0.0), (2.0, 0.5), (1.0, 1.0), (-1.0, 2.0)]:
        cfg = SlipConfig(k0, k1, 1.0)
        b, a = maximizer_cubic(cfg)
        mu_c = critical_viscosity_closed_form(cfg)
        worst = max(worst, abs((k0 - k1) * b * b - 2 * k0 * b + k1))
        worst = max(worst, abs(mu_c - ((k0 - k1) * b / 6.0 + k1 / 6.0)))
    ok = worst < 1e-12
    return ("critical cubic consistency", ok, f"worst residual {worst:.2e}")


def _check_route_agreement():
    grid = default_grid(96)
    worst = 0.0
    for k0, k1, mu in [(1, 1, 0.05), (0, 1, 0.1), (1, -1, 0.1), (1, 1, 0.8)]:
        for xi2 in (0.5, 2.0):
            prob = ModeProblem(SlipConfig(k0, k1, mu), xi2)
            sp = solve_principal_eigen(prob, grid)
            root = refine_lambda_dispersion(prob, sp.lam)
            worst = max(worst, abs(sp.lam - root.lam) / max(1e-8, abs(root.lam)))
    ok = worst < 1e-6
    return ("eigenvalue route agreement", ok, f"worst rel err {worst:.2e}")


def _check_trichotomy():
    cfg = SlipConfig(1.0, 1.0, 0.05)
    grid = default_grid(96)
    cf = critical_frequency(cfg, default_grid(128))
    lam_mid = solve_principal_eigen(ModeProblem(cfg, 0.5 * cf.xi_c2), grid).lam
    lam_at = solve_principal_eigen(ModeProblem(cfg, cf.xi_c2), grid).lam
    lam_out = solve_principal_eigen(ModeProblem(cfg, 1.5 * cf.xi_c2), grid).lam
    stable = SlipConfig(1.0, 1.0, 0.8)
    lam_stab = capital_lambda(stable)
    bound = critical_viscosity(stable) - stable.mu
    ok = lam_mid > 0 and abs(lam_at) < 1e-6 and lam_out < 0 and lam_stab <= bound + 1e-9
    return (
        "sign trichotomy",
        ok,
        f"inside {lam_mid:.3f}, neutral {lam_at:.1e}, beyond {lam_out:.3f}, stable max {lam_stab:.3f}",
    )


def _check_monotone():
    cfg = SlipConfig(1.0, 1.0, 0.05)
    grid = default_grid(96)
    xs = np.linspace(0.0, 40.0, 9)
    lams = [solve_principal_eigen(ModeProblem(cfg, x), grid).lam for x in xs]
    mono = all(a > b for a, b in zip(lams, lams[1:]))
    lip = constant_c0(cfg) + 2.0 * cfg.mu
    bound_ok = all(
        abs(lams[i] - lams[i + 1]) <= lip * (xs[i + 1] - xs[i]) + 1e-9
        for i in range(len(xs) - 1)
    )
    return ("dispersion curve monotone + Lipschitz", mono and bound_ok, f"{len(xs)} samples")


def _check_energy_law():
    cfg = SlipConfig(1.0, 1.0, 0.8)
    grid = default_grid(96)
    length = 2.0 * math.pi
    seed, _ = eigenmode_state(cfg, 1, length, 16, grid, amplitude=0.05)
    residuals = {}
    for dt in (4e-3, 2e-3):
        stepper = Stepper(cfg, grid, length, 16, dt, mode="nonlinear")
        hist = stepper.run(seed, int(round(0.5 / dt)))
        residuals[dt] = float(np.max(energy_audit(hist, cfg).residual()))
    ratio = residuals[4e-3] / residuals[2e-3]
    ok = residuals[2e-3] < 1e-6 and 2.5 < ratio < 6.0
    return (
        "energy law order-2",
        ok,
        f"residual {residuals[2e-3]:.2e}, halving ratio {ratio:.2f}",
    )


def _check_key_inequality():
    cfg = SlipConfig(1.0, 1.0, 0.05)
    grid = default_grid(96)
    lam0 = capital_lambda(cfg)
    rng = np.random.default_rng(11)
    worst = -np.inf
    y = grid.nodes
    for _ in range(20):
        psi = np.zeros((3, grid.n), dtype=complex)
        for i in range(3):
            cr = rng.standard_normal(24) * np.exp(-0.3 * np.arange(24))
            ci = rng.standard_normal(24) * np.exp(-0.3 * np.arange(24))
            poly = np.polynomial.Polynomial(cr)(2 * y - 1) + 1j * np.polynomial.Polynomial(ci)(2 * y - 1)
            psi[i] = y * (1.0 - y) * poly
        state = FlowState(period_l=2 * math.pi, grid=grid, psi_hat=psi, mean_flow=np.zeros(grid.n))
        scale = l2_norm(state)
        state.psi_hat /= scale
        worst = max(worst, key_inequality_gap(state, cfg, lam0))
    ok = worst <= 1e-8
    return ("spectral energy inequality", ok, f"max gap {worst:.2e}")


def _check_linear_growth():
    cfg = SlipConfig(1.0, 1.0, 0.05)
    grid = default_grid(96)
    length = 2.0 * math.pi
    state, sp = eigenmode_state(cfg, 1, length, 4, grid, amplitude=1e-3)
    dt = 0.02 / abs(sp.lam)
    steps = int(round(2.0 / abs(sp.lam) / dt))
    stepper = Stepper(cfg, grid, length, 4, dt, mode="linear")
    hist = stepper.run(state, steps, record_every=steps)
    ratio = l2_norm(hist[-1]) / l2_norm(hist[0])
    err = abs(ratio / math.exp(sp.lam * steps * dt) - 1.0)
    return ("linear amplification", err < 1e-4, f"rel err {err:.2e}")


def _check_pressure():
    cfg = SlipConfig(1.0, 1.0, 0.05)
    grid = default_grid(96)
    state, sp = eigenmode_state(cfg, 1, 2.0 * math.pi, 2, grid, amplitude=1e-3)
    pf = recover_pressure(state, "linear", cfg)
    expected = 0.5e-3 * sp.pi.values
    err = float(np.max(np.abs(pf.q_hat[0] - expected)) / np.max(np.abs(expected)))
    ok = err < 1e-5 and pf.momentum_residual < 1e-6
    return ("pressure recovery", ok, f"rel err {err:.2e}, residual {pf.momentum_residual:.2e}")
