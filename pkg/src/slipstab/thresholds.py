"""Critical frequency and growth envelopes.

The shifted production quotient N*(s2) is the largest generalized
eigenvalue of the net-production form against the frequency-shifted
gradient form.  It is strictly decreasing in s2, so s2/N*(s2) crosses one
exactly once; that crossing is the critical squared frequency, the point
where the principal growth rate changes sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .eigensolver import ModeProblem, solve_principal_eigen
from .errors import BracketFailure, ConfigError, ConvergenceFailure
from .functionals import Grid1D, default_grid, n_star_forms, smooth_dirichlet_basis
from .model import SlipConfig, critical_viscosity


@dataclass
class CriticalFrequency:
    """Fixed point of the shifted production quotient."""

    xi_c2: float
    n_star_at_fixed_point: float
    iterations: int
    bracket_history: list[tuple[float, float]] = field(default_factory=list)


@dataclass
class GrowthEnvelope:
    """Extreme growth rates over a frequency band inside the unstable window."""

    lambda_f: float
    capital_lambda: float
    support: tuple[float, float]


def n_star(s2: float, cfg: SlipConfig, grid: Grid1D | None = None) -> float:
    """Supremum of the shifted production quotient at squared frequency s2.

    Positive exactly when the viscosity sits below the critical one.  The
    generalized symmetric eigenproblem is projected onto a smooth
    polynomial subspace sized to resolve the maximiser's boundary layers;
    this keeps the extremal eigenvalue reproducible to ~1e-11 where the
    full nodal pencil would carry an eps * n^4 noise floor.
    """
    if s2 < 0:
        raise ConfigError("s2 must be nonnegative")
    if grid is None:
        grid = default_grid(128)
    # cap: quadrature of the form matrices stays exact on the basis
    # polynomials only while their product degree fits the grid
    k_max = min((grid.n - 3) // 2, max(48, int(2.5 * np.sqrt(s2)) + 24))
    a, b = n_star_forms(cfg, s2, grid)
    p = smooth_dirichlet_basis(grid, k_max)
    try:
        vals = eigh(p.T @ a @ p, p.T @ b @ p, eigvals_only=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise ConvergenceFailure(f"n_star eigensolve failed: {exc}") from None
    return float(vals[-1])


def critical_frequency(
    cfg: SlipConfig, grid: Grid1D | None = None
) -> CriticalFrequency | None:
    """Unique squared frequency where the growth rate vanishes.

    Returns None when the viscosity is at or above critical (no unstable
    window).  Otherwise brackets the root of s2 - N*(s2), which is strictly
    increasing, and bisects with a secant polish until the defining
    identity holds to 1e-10.
    """
    if grid is None:
        grid = default_grid(128)
    if cfg.mu >= critical_viscosity(cfg):
        return None

    def gap(s2: float) -> float:
        return s2 - n_star(s2, cfg, grid)

    lo, hi = 1e-6, 1.0
    history: list[tuple[float, float]] = []
    iterations = 0
    while gap(lo) >= 0.0:
        lo *= 0.25
        iterations += 1
        if lo < 1e-300:
            raise BracketFailure(
                f"no sign change: production quotient stays below s2 down to s2={lo:.3e}"
            )
    while gap(hi) <= 0.0:
        hi *= 2.0
        iterations += 1
        if hi > 1e12:
            raise BracketFailure(
                f"no sign change: production quotient stays above s2 up to s2={hi:.3e}"
            )
    history.append((lo, hi))
    # monotone gap makes plain bisection certified; run it down to machine
    # width so the fixed-point identity holds to 1e-10 absolute even when
    # the gap has a shallow slope through the root
    eps = np.finfo(float).eps
    for _ in range(120):
        if hi - lo <= 8.0 * eps * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        iterations += 1
        if gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        history.append((lo, hi))
    s = 0.5 * (lo + hi)
    value = n_star(s, cfg, grid)
    if abs(s - value) > 1e-10:
        raise ConvergenceFailure(
            f"fixed point not resolved: s2={s!r} vs N*={value!r}"
        )
    return CriticalFrequency(
        xi_c2=float(s),
        n_star_at_fixed_point=float(value),
        iterations=iterations,
        bracket_history=history,
    )


def capital_lambda(cfg: SlipConfig, grid: Grid1D | None = None) -> float:
    """Maximum of the dispersion curve, attained at zero frequency."""
    eigen_grid = default_grid(96) if grid is None else grid
    return solve_principal_eigen(ModeProblem(cfg, 0.0), eigen_grid).lam


def growth_envelope(
    cfg: SlipConfig,
    support: tuple[float, float],
    grid: Grid1D | None = None,
    samples: int = 33,
) -> GrowthEnvelope:
    """Smallest and largest growth rates relevant to a synthesis band.

    The band must be a closed subinterval of the open unstable window.
    The infimum over the band is taken as the minimum over a dense sample
    (monotone decay makes it the right endpoint); the maximum of the curve
    is the zero-frequency rate.
    """
    a, b = float(support[0]), float(support[1])
    if not (0.0 < a <= b):
        raise ConfigError(f"support ({a}, {b}) must sit inside (0, xi_c2)")
    cf = critical_frequency(cfg, grid)
    if cf is None:
        raise ConfigError("growth envelope undefined: viscosity at or above critical")
    if b >= cf.xi_c2:
        raise ConfigError(
            f"support ({a}, {b}) must sit inside (0, {cf.xi_c2:.6g})"
        )
    eigen_grid = default_grid(96)
    xs = np.linspace(a, b, samples)
    lams = np.array(
        [solve_principal_eigen(ModeProblem(cfg, x), eigen_grid).lam for x in xs]
    )
    lam_f = float(np.min(lams))
    lam0 = capital_lambda(cfg)
    if lam_f <= 0.0:
        raise ConvergenceFailure(
            f"growth rate not positive on the support (min {lam_f:.3e}); "
            "support may touch the neutral frequency"
        )
    return GrowthEnvelope(lambda_f=lam_f, capital_lambda=lam0, support=(a, b))
