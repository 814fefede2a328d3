"""Principal growth rate of the fourth-order normal-mode problem.

Two independent routes to the same number:

* a generalized eigenproblem from Chebyshev collocation, with the four
  boundary conditions imposed exactly through a null-space basis, and
* a root search on the 4x4 boundary-condition determinant built from the
  closed-form solution basis of the constant-coefficient mode equation.

The second route exploits that the mode equation factorises into
(d^2/dy^2 - xi^2)(mu (d^2/dy^2 - xi^2) - lambda) psi = 0, so solutions are
spanned by exp(+-xi y) and exp(+-m y) with m^2 = xi^2 + lambda/mu.  The
basis used below is written in terms of functions entire in m^2, with the
confluent limit m -> xi (lambda -> 0) handled by divided differences, so
the determinant is continuous across every degeneracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig, lu_factor, lu_solve, null_space

from .errors import BracketFailure, ConfigError, ConvergenceFailure
from .functionals import Grid1D, Profile, default_grid, smooth_derivative
from .model import SlipConfig

_IMAG_TOL = 1e-8
_OVERFLOW_M = 700.0


@dataclass(frozen=True)
class ModeProblem:
    """One normal-mode eigenvalue problem: parameters plus squared frequency."""

    cfg: SlipConfig
    xi2: float

    def __post_init__(self):
        if self.xi2 < 0:
            raise ConfigError(f"xi2 must be nonnegative, got {self.xi2}")


@dataclass
class SpectrumPoint:
    """Principal growth rate and eigenfunction at one squared frequency."""

    xi2: float
    lam: float
    psi: Profile
    phi: Profile | None = None
    pi: Profile | None = None
    method: str = "discrete"


@dataclass
class DispersionRoot:
    """A root of the boundary-condition determinant."""

    lam: float
    m: complex
    det_residual: float


# ---------------------------------------------------------------------------
# collocation route
# ---------------------------------------------------------------------------


def constraint_matrix(cfg: SlipConfig, grid: Grid1D) -> np.ndarray:
    """Rows of the four boundary conditions, scaled to unit row norm."""
    n = grid.n
    rows = np.zeros((4, n))
    rows[0, 0] = 1.0
    rows[1, -1] = 1.0
    rows[2] = grid.d2[-1] - (cfg.k1 / cfg.mu) * grid.d1[-1]
    rows[3] = grid.d2[0] + (cfg.k0 / cfg.mu) * grid.d1[0]
    return rows / np.linalg.norm(rows, axis=1)[:, None]


_null_cache: dict[tuple, np.ndarray] = {}


def boundary_null_basis(cfg: SlipConfig, grid: Grid1D) -> np.ndarray:
    """Orthonormal basis of grid functions satisfying all four boundary rows."""
    key = (grid.n, cfg.k0, cfg.k1, cfg.mu)
    if key not in _null_cache:
        basis = null_space(constraint_matrix(cfg, grid))
        if basis.shape[1] != grid.n - 4:
            raise ConvergenceFailure("boundary constraint rows are rank deficient")
        _null_cache[key] = basis
    return _null_cache[key]


def mode_operators(prob: ModeProblem, grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    """Stiffness/mass pair: -mu*(D4 - 2 xi2 D2 + xi4) and (xi2 - D2)."""
    xi2, mu = prob.xi2, prob.cfg.mu
    eye = np.eye(grid.n)
    a = -mu * (grid.d4 - 2.0 * xi2 * grid.d2 + xi2**2 * eye)
    b = xi2 * eye - grid.d2
    return a, b


def solve_principal_eigen(
    prob: ModeProblem, grid: Grid1D | None = None, check: bool = False
) -> SpectrumPoint:
    """Largest growth rate and its eigenfunction at one squared frequency.

    The mode equation is collocated at interior nodes on the null space of
    the boundary rows, so the returned eigenfunction satisfies all four
    boundary conditions to roundoff.  The eigenfunction is normalised to
    unit J and its initial slope is made nonnegative for reproducibility.
    With check=True a grid-doubling test guards against under-resolution.
    """
    if grid is None:
        grid = default_grid(96)
    if grid.n < 64:
        raise ConfigError("solve_principal_eigen needs a grid with n >= 64")
    lam, psi = _principal_pair(prob, grid)
    if check:
        lam2, _ = _principal_pair(prob, default_grid(2 * grid.n))
        if abs(lam2 - lam) > 1e-8 * max(1.0, abs(lam)):
            raise ConvergenceFailure(
                f"grid too coarse at n={grid.n}: lambda moves from "
                f"{lam:.12e} to {lam2:.12e} on doubling"
            )
    return SpectrumPoint(xi2=prob.xi2, lam=lam, psi=Profile(grid, psi), method="discrete")


def _principal_pair(prob: ModeProblem, grid: Grid1D) -> tuple[float, np.ndarray]:
    basis = boundary_null_basis(prob.cfg, grid)
    a, b = mode_operators(prob, grid)
    a_c = a[2:-2] @ basis
    b_c = b[2:-2] @ basis
    # row equilibration: collocation rows near the walls carry the huge
    # corner entries of D4; scaling rows to unit size keeps the eigensolve
    # backward error from concentrating there (eigenvalues are invariant)
    scale = np.maximum(
        np.max(np.abs(a_c), axis=1), np.max(np.abs(b_c), axis=1)
    )
    a_c = a_c / scale[:, None]
    b_c = b_c / scale[:, None]
    try:
        vals, vecs = eig(a_c, b_c)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise ConvergenceFailure(f"collocation eigensolve failed: {exc}") from None
    finite = np.isfinite(vals)
    real = np.abs(vals.imag) <= _IMAG_TOL * np.maximum(1.0, np.abs(vals.real))
    keep = finite & real
    if not np.any(keep):
        raise ConvergenceFailure("no real finite eigenvalue survived filtering")
    idx_keep = np.nonzero(keep)[0]
    best = idx_keep[np.argmax(vals.real[idx_keep])]
    lam = float(vals.real[best])
    v = vecs[:, best].real
    if np.linalg.norm(v) < 1e-12 * np.linalg.norm(np.abs(vecs[:, best])):
        v = vecs[:, best].imag
    # one inverse-iteration step with a least-squares Rayleigh update: the
    # QZ eigenvector carries O(eps*cond) dust from neighbouring modes that
    # high derivatives downstream would amplify
    try:
        lu = lu_factor(a_c - lam * b_c)
        w = lu_solve(lu, b_c @ v)
        nw = np.linalg.norm(w)
        if np.all(np.isfinite(w)) and nw > 0:
            v = w / nw
            r_a = a_c @ v
            r_b = b_c @ v
            lam = float((r_b @ r_a) / (r_b @ r_b))
    except np.linalg.LinAlgError:
        pass
    psi = _normalize_mode(basis @ v, prob.xi2, grid)
    return lam, psi


def _normalize_mode(psi: np.ndarray, xi2: float, grid: Grid1D) -> np.ndarray:
    dpsi = grid.d1 @ psi
    j = 0.5 * (xi2 * grid.quad(psi**2) + grid.quad(dpsi**2))
    psi = psi / math.sqrt(j)
    slope0 = grid.d1[0] @ psi
    anchor = slope0 if abs(slope0) > 1e-10 else grid.d1[-1] @ psi
    if anchor < 0:
        psi = -psi
    return psi


def boundary_residual(sp: SpectrumPoint, cfg: SlipConfig) -> float:
    """Max-norm residual of the four boundary conditions on the eigenfunction."""
    g = sp.psi.grid
    v = sp.psi.values
    dp = g.d1 @ v
    ddp = g.d2 @ v
    return max(
        abs(v[0]),
        abs(v[-1]),
        abs(ddp[-1] - (cfg.k1 / cfg.mu) * dp[-1]),
        abs(ddp[0] + (cfg.k0 / cfg.mu) * dp[0]),
    )


def mode_equation_residual(sp: SpectrumPoint, prob: ModeProblem) -> float:
    """Interior max-norm residual of the fourth-order mode equation."""
    g = sp.psi.grid
    a, b = mode_operators(prob, g)
    r = (a - sp.lam * b) @ sp.psi.values
    return float(np.max(np.abs(r[2:-2])))


# ---------------------------------------------------------------------------
# dispersion-determinant route
# ---------------------------------------------------------------------------


def _cs_pair(z: float) -> tuple[float, float, float]:
    """(C, S, C-S) at y=1 for the entire functions C=cosh(sqrt(z)),
    S=sinh(sqrt(z))/sqrt(z); trig branch for z<0, series near z=0 and for
    the difference when cancellation would bite."""
    if abs(z) < 1e-3:
        c = 1.0 + z / 2.0 + z**2 / 24.0 + z**3 / 720.0 + z**4 / 40320.0
        s = 1.0 + z / 6.0 + z**2 / 120.0 + z**3 / 5040.0 + z**4 / 362880.0
        p = z / 3.0 + z**2 / 30.0 + z**3 / 840.0 + z**4 / 45360.0
        return c, s, p
    if z > 0:
        r = math.sqrt(z)
        c = math.cosh(r)
        s = math.sinh(r) / r
    else:
        r = math.sqrt(-z)
        c = math.cos(r)
        s = math.sin(r) / r
    return c, s, c - s


def dispersion_det(prob: ModeProblem, lam: float) -> float:
    """Normalised boundary-condition determinant D(lambda).

    Columns are the four basis solutions {C(xi2), S(xi2), dd C, dd S} where
    dd g = (g(m2) - g(xi2))/(m2 - xi2); rows are psi(0)=0, psi(1)=0 and the
    two wall stress conditions.  Columns are scaled to unit max entry, so
    only the sign and smallness of the value are meaningful.
    """
    xi2, mu = prob.xi2, prob.cfg.mu
    k0, k1 = prob.cfg.k0, prob.cfg.k1
    if xi2 <= 0:
        raise ConfigError("dispersion determinant requires xi2 > 0")
    z0 = xi2
    z1 = xi2 + lam / mu
    if z1 > 0 and math.sqrt(z1) > _OVERFLOW_M:
        raise BracketFailure(
            f"auxiliary root m={math.sqrt(z1):.1f} overflows the basis; shrink the bracket"
        )
    c0, s0, p0 = _cs_pair(z0)
    delta = z1 - z0
    if abs(delta) > 1e-4 * max(1.0, abs(z0)):
        c1, s1, _ = _cs_pair(z1)
        f3 = (c1 - c0) / delta
        f4 = (s1 - s0) / delta
        f3p = (z1 * s1 - z0 * s0) / delta
        f3pp = (z1 * c1 - z0 * c0) / delta
    else:
        # three-term Taylor expansions of the divided differences in
        # Delta = m2 - xi2 about xi2 (z below), entire in z
        z = z0
        dC = s0 / 2.0
        d2C = p0 / (4.0 * z)
        d3C = (z * s0 - 3.0 * p0) / (8.0 * z**2)
        dS = p0 / (2.0 * z)
        d2S = (z * s0 - 3.0 * p0) / (4.0 * z**2)
        d3S = (z * c0 - 6.0 * z * s0 + 15.0 * p0) / (8.0 * z**3)
        dG = (c0 + s0) / 2.0
        d2G = p0 / (4.0 * z) + s0 / 4.0
        d3G = (z * s0 - 3.0 * p0) / (8.0 * z**2) + p0 / (8.0 * z)
        dH = c0 + z * s0 / 2.0
        d2H = s0 + p0 / 4.0
        d3H = 3.0 * p0 / (8.0 * z) + s0 / 8.0
        f3 = dC + 0.5 * delta * d2C + delta**2 / 6.0 * d3C
        f4 = dS + 0.5 * delta * d2S + delta**2 / 6.0 * d3S
        f3p = dG + 0.5 * delta * d2G + delta**2 / 6.0 * d3G
        f3pp = dH + 0.5 * delta * d2H + delta**2 / 6.0 * d3H
    f4p = f3
    f4pp = f3p

    # rows: value at 0, value at 1, mu psi''(1) - k1 psi'(1), mu psi''(0) + k0 psi'(0)
    mat = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [c0, s0, f3, f4],
            [
                mu * z0 * c0 - k1 * z0 * s0,
                mu * z0 * s0 - k1 * c0,
                mu * f3pp - k1 * f3p,
                mu * f4pp - k1 * f4p,
            ],
            [mu * z0, k0, mu, 0.0],
        ]
    )
    scale = np.maximum(np.max(np.abs(mat), axis=0), 1e-300)
    return float(np.linalg.det(mat / scale))


def dispersion_lambda(
    prob: ModeProblem, bracket: tuple[float, float], samples: int = 512
) -> list[DispersionRoot]:
    """All sign-change roots of the dispersion determinant in a bracket.

    The bracket is scanned on a uniform grid and every sign change is
    refined by bisection to an absolute tolerance of 1e-12 (relative for
    large roots).  Roots separated by less than the scan resolution are
    not distinguished.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise BracketFailure(f"invalid bracket ({lo}, {hi})")
    grid = np.linspace(lo, hi, samples)
    vals = np.array([dispersion_det(prob, lam) for lam in grid])
    roots: list[DispersionRoot] = []
    for i in range(samples - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(_make_root(prob, a))
            continue
        if fa * fb < 0:
            roots.append(_make_root(prob, _bisect(prob, a, b, fa, fb)))
    if vals[-1] == 0.0:
        roots.append(_make_root(prob, hi))
    return roots


def _bisect(prob: ModeProblem, a: float, b: float, fa: float, fb: float) -> float:
    for _ in range(200):
        mid = 0.5 * (a + b)
        if (b - a) <= 1e-12 * max(1.0, abs(mid)):
            return mid
        fm = dispersion_det(prob, mid)
        if fm == 0.0:
            return mid
        if fa * fm < 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def _make_root(prob: ModeProblem, lam: float) -> DispersionRoot:
    m = complex(prob.xi2 + lam / prob.cfg.mu) ** 0.5
    return DispersionRoot(lam=lam, m=m, det_residual=abs(dispersion_det(prob, lam)))


def refine_lambda_dispersion(prob: ModeProblem, guess: float) -> DispersionRoot:
    """Dispersion root nearest an externally computed growth rate."""
    width = max(1e-4, 1e-4 * abs(guess))
    for _ in range(8):
        roots = dispersion_lambda(prob, (guess - width, guess + width), samples=64)
        if roots:
            return min(roots, key=lambda r: abs(r.lam - guess))
        width *= 4.0
    raise BracketFailure(
        f"no determinant root within {width:.3e} of lambda={guess:.6e} at xi2={prob.xi2}"
    )


# ---------------------------------------------------------------------------
# full mode recovery
# ---------------------------------------------------------------------------


def recover_mode(sp: SpectrumPoint, prob: ModeProblem, xi_sign: int = 1) -> SpectrumPoint:
    """Fill in the horizontal amplitude and pressure amplitude of a mode.

    phi = -psi'/xi from incompressibility, pi from the horizontal momentum
    balance.  Undefined at xi2 = 0, where the mean flow is governed by its
    own heat equation instead.
    """
    if prob.xi2 <= 0:
        raise ConfigError("mode recovery requires xi2 > 0")
    if xi_sign not in (1, -1):
        raise ConfigError("xi_sign must be +1 or -1")
    g = sp.psi.grid
    mu = prob.cfg.mu
    xi = xi_sign * math.sqrt(prob.xi2)
    psi = sp.psi.values
    # derivatives through the filtered coefficient series: the third
    # derivative of the raw nodal vector would amplify the eigensolve noise
    # floor beyond usefulness near the walls
    dpsi = smooth_derivative(g, psi, 1)
    dddpsi = smooth_derivative(g, psi, 3)
    phi = -dpsi / xi
    ddphi = -dddpsi / xi
    pi = (sp.lam * phi + mu * prob.xi2 * phi - mu * ddphi) / xi
    pi = np.asarray(pi, dtype=float)
    return SpectrumPoint(
        xi2=sp.xi2,
        lam=sp.lam,
        psi=sp.psi,
        phi=Profile(g, phi, label="phi"),
        pi=Profile(g, pi, label="pi"),
        method=sp.method,
    )


def vertical_momentum_residual(sp: SpectrumPoint, prob: ModeProblem) -> float:
    """Scaled max-norm residual of the vertical momentum balance.

    The residual is normalised by the largest term entering the balance, so
    the value is meaningful uniformly across stiff parameter regimes where
    the raw terms reach 1e3..1e4.
    """
    if sp.pi is None:
        raise ConfigError("mode has no pressure amplitude; call recover_mode first")
    g = sp.psi.grid
    mu = prob.cfg.mu
    psi = np.asarray(sp.psi.values, dtype=float)
    dpi = smooth_derivative(g, sp.pi.values, 1)
    ddpsi = smooth_derivative(g, psi, 2)
    terms = sp.lam * psi + dpi + mu * prob.xi2 * psi - mu * ddpsi
    scale = max(
        np.max(np.abs(sp.lam * psi)),
        np.max(np.abs(dpi)),
        np.max(np.abs(mu * prob.xi2 * psi)),
        np.max(np.abs(mu * ddpsi)),
        1e-300,
    )
    return float(np.max(np.abs(terms)) / scale)


def lambda_curve(cfg: SlipConfig, xi2_values, grid: Grid1D | None = None) -> np.ndarray:
    """Principal growth rate sampled over a list of squared frequencies."""
    return np.array(
        [solve_principal_eigen(ModeProblem(cfg, x), grid).lam for x in xi2_values]
    )
