"""Growing-mode synthesis: frequency-band superpositions of eigenmodes.

A smooth compactly supported cutoff selects a band of unstable
frequencies; the synthesized field integrates the per-frequency eigenmode
against it, either by Gauss-Legendre quadrature (continuous-integral
evaluation) or on the discrete frequency comb of an x-periodic strip (for
hand-off to the simulator).  Real-valuedness is built in: the horizontal
amplitude is odd in the frequency, the others even.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigensolver import ModeProblem, SpectrumPoint, recover_mode, solve_principal_eigen
from .errors import ConfigError
from .functionals import Grid1D, default_grid
from .model import SlipConfig, critical_viscosity
from .simulator import FlowState, h2_norm
from .thresholds import critical_frequency, growth_envelope


@dataclass(frozen=True)
class Cutoff:
    """Infinitely smooth bump in squared-frequency space, zero outside its support."""

    center: float
    halfwidth: float
    amplitude: float = 1.0
    kind: str = "smooth-bump"

    def __post_init__(self):
        if self.kind != "smooth-bump":
            raise ConfigError(f"unsupported cutoff kind {self.kind!r}")
        if self.halfwidth <= 0:
            raise ConfigError("cutoff halfwidth must be positive")
        if self.center - self.halfwidth <= 0:
            raise ConfigError("cutoff support must stay inside (0, xi_c2)")

    @property
    def support(self) -> tuple[float, float]:
        return (self.center - self.halfwidth, self.center + self.halfwidth)

    def __call__(self, s2):
        s2 = np.asarray(s2, dtype=float)
        out = np.zeros_like(s2)
        d2 = (s2 - self.center) ** 2 - self.halfwidth**2
        inside = d2 < 0
        out[inside] = self.amplitude * np.exp(1.0 / d2[inside])
        return out if out.ndim else float(out)


def default_cutoff(xi_c2: float, amplitude: float = 1.0) -> Cutoff:
    """Band centred on half the critical frequency with quarter-width."""
    return Cutoff(center=0.5 * xi_c2, halfwidth=0.25 * xi_c2, amplitude=amplitude)


@dataclass
class SynthesizedMode:
    """Frequency nodes, weights and recovered eigenmodes for one synthesis."""

    xi_values: np.ndarray
    weights: np.ndarray
    f_values: np.ndarray
    per_xi_modes: list[SpectrumPoint]
    lambda_f: float
    capital_lambda: float
    comb_indices: list[int] = field(default_factory=list)


@dataclass
class FieldSamples:
    """Velocity and pressure sampled on an x times y grid."""

    x: np.ndarray
    y: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    q: np.ndarray


def _check_support(cutoff: Cutoff, cfg: SlipConfig, grid: Grid1D, xi_c2: float | None) -> float:
    if cfg.mu >= critical_viscosity(cfg):
        raise ConfigError("mode synthesis requires an unstable viscosity")
    if xi_c2 is None:
        xi_c2 = critical_frequency(cfg, default_grid(max(grid.n, 96))).xi_c2
    lo, hi = cutoff.support
    if not (0.0 < lo and hi < xi_c2):
        raise ConfigError(
            f"cutoff support ({lo:.6g}, {hi:.6g}) escapes (0, {xi_c2:.6g})"
        )
    return xi_c2


def comb_frequencies(cutoff: Cutoff, period_l: float) -> list[int]:
    """Comb indices n with squared frequency strictly inside the support."""
    lo, hi = cutoff.support
    step = 2.0 * math.pi / period_l
    n_lo = int(math.floor(math.sqrt(lo) / step)) + 1
    n_hi = int(math.floor(math.sqrt(hi) / step))
    return [n for n in range(max(n_lo, 1), n_hi + 1) if lo < (n * step) ** 2 < hi]


def default_period(cutoff: Cutoff, points: int = 3) -> float:
    """Smallest period placing `points` comb frequencies inside the support."""
    lo, hi = cutoff.support
    length = (points + 0.5) * 2.0 * math.pi / (math.sqrt(hi) - math.sqrt(lo))
    while len(comb_frequencies(cutoff, length)) < points:
        length *= 1.1
    return length


def build_synthesis(
    cutoff: Cutoff,
    cfg: SlipConfig,
    grid: Grid1D | None = None,
    method: str = "quadrature",
    period_l: float | None = None,
    n_points: int = 64,
    xi_c2: float | None = None,
) -> SynthesizedMode:
    """Solve the per-frequency eigenmodes a synthesis needs.

    method="quadrature" places Gauss-Legendre nodes in frequency across the
    support; method="comb" uses the discrete frequencies of an x-periodic
    strip (weights 2*pi/period, the Riemann comb of the integral).
    """
    if grid is None:
        grid = default_grid(96)
    xi_c2 = _check_support(cutoff, cfg, grid, xi_c2)
    env = growth_envelope(cfg, cutoff.support, grid)
    comb_idx: list[int] = []
    if method == "quadrature":
        lo, hi = cutoff.support
        nodes, weights = np.polynomial.legendre.leggauss(n_points)
        xi_lo, xi_hi = math.sqrt(lo), math.sqrt(hi)
        xis = 0.5 * (xi_hi - xi_lo) * nodes + 0.5 * (xi_hi + xi_lo)
        wts = 0.5 * (xi_hi - xi_lo) * weights
    elif method == "comb":
        if period_l is None:
            period_l = default_period(cutoff)
        comb_idx = comb_frequencies(cutoff, period_l)
        if not comb_idx:
            raise ConfigError(
                f"no comb frequency of period {period_l:.6g} falls in the support"
            )
        xis = 2.0 * math.pi * np.array(comb_idx, dtype=float) / period_l
        wts = np.full(len(comb_idx), 2.0 * math.pi / period_l)
    else:
        raise ConfigError(f"unknown synthesis method {method!r}")

    specs = []
    for xi in xis:
        sp = solve_principal_eigen(ModeProblem(cfg, xi**2), grid)
        specs.append(recover_mode(sp, ModeProblem(cfg, xi**2)))
    return SynthesizedMode(
        xi_values=xis,
        weights=wts,
        f_values=cutoff(xis**2),
        per_xi_modes=specs,
        lambda_f=env.lambda_f,
        capital_lambda=env.capital_lambda,
        comb_indices=comb_idx,
    )


def synthesize(
    cutoff: Cutoff,
    cfg: SlipConfig,
    t: float,
    x_samples,
    grid: Grid1D | None = None,
    method: str = "quadrature",
    period_l: float | None = None,
    xi_c2: float | None = None,
    synthesis: SynthesizedMode | None = None,
) -> FieldSamples:
    """Evaluate the synthesized growing mode at time t on given x samples.

    The field is real by construction and divergence-free to eigenmode
    tolerance; passing a prebuilt synthesis skips the eigenmode solves.
    """
    if t < 0:
        raise ConfigError("time must be nonnegative")
    if grid is None:
        grid = default_grid(96)
    if synthesis is None:
        synthesis = build_synthesis(
            cutoff, cfg, grid, method=method, period_l=period_l, xi_c2=xi_c2
        )
    x = np.asarray(x_samples, dtype=float)
    y = synthesis.per_xi_modes[0].psi.grid.nodes
    u1 = np.zeros((len(x), len(y)))
    u2 = np.zeros((len(x), len(y)))
    q = np.zeros((len(x), len(y)))
    for xi, w, fval, sp in zip(
        synthesis.xi_values, synthesis.weights, synthesis.f_values, synthesis.per_xi_modes
    ):
        if fval == 0.0:
            continue
        amp = (w / math.pi) * fval * math.exp(sp.lam * t)
        sin_x = np.sin(x * xi)[:, None]
        cos_x = np.cos(x * xi)[:, None]
        u1 += amp * sin_x * sp.phi.values[None, :]
        u2 += amp * cos_x * sp.psi.values[None, :]
        q += amp * cos_x * sp.pi.values[None, :]
    return FieldSamples(x=x, y=y, u1=u1, u2=u2, q=q)


def comb_flow_state(
    synthesis: SynthesizedMode,
    period_l: float,
    grid: Grid1D,
    t: float = 0.0,
    n_modes: int | None = None,
) -> FlowState:
    """Pack a comb synthesis into the simulator's state representation."""
    if not synthesis.comb_indices:
        raise ConfigError("flow-state packing needs a comb synthesis")
    if n_modes is None:
        n_modes = max(synthesis.comb_indices)
    if n_modes < max(synthesis.comb_indices):
        raise ConfigError("n_modes cannot drop the highest comb frequency")
    psi_hat = np.zeros((n_modes, grid.n), dtype=complex)
    for n, xi, w, fval, sp in zip(
        synthesis.comb_indices,
        synthesis.xi_values,
        synthesis.weights,
        synthesis.f_values,
        synthesis.per_xi_modes,
    ):
        amp = (w / math.pi) * fval * math.exp(sp.lam * t)
        # u2 of this mode is amp * psi(y) cos(xi x); in complex Fourier
        # convention that is a streamfunction coefficient i*amp*psi/(2 xi)
        psi_hat[n - 1] = 0.5j * amp * sp.psi.values / xi
    return FlowState(
        period_l=period_l, grid=grid, psi_hat=psi_hat, mean_flow=np.zeros(grid.n), time=t
    )


def normalized_seed(
    cutoff: Cutoff,
    cfg: SlipConfig,
    grid: Grid1D | None = None,
    period_l: float | None = None,
    n_modes: int | None = None,
    xi_c2: float | None = None,
) -> FlowState:
    """Comb-synthesized initial field rescaled to unit discrete H2 norm.

    The normalisation is performed a posteriori on the packed state, so
    the returned field satisfies it to roundoff regardless of the cutoff
    amplitude.
    """
    if grid is None:
        grid = default_grid(64)
    eigen_grid = default_grid(96)
    if period_l is None:
        period_l = default_period(cutoff)
    synthesis = build_synthesis(
        cutoff, cfg, eigen_grid, method="comb", period_l=period_l, xi_c2=xi_c2
    )
    # re-sample eigenfunction data onto the simulator grid if it differs
    state = comb_flow_state(synthesis, period_l, eigen_grid, n_modes=n_modes)
    if grid is not eigen_grid:
        state = _resample_state(state, grid, cfg)
    norm = h2_norm(state)
    if norm <= 1e-14:
        raise ConfigError("cutoff produces a zero seed (degenerate amplitude or band)")
    state.psi_hat /= norm
    return state


def _resample_state(state: FlowState, grid: Grid1D, cfg: SlipConfig) -> FlowState:
    """Project the state's profiles onto another grid's boundary subspace."""
    from scipy.interpolate import BarycentricInterpolator

    src = state.grid.nodes
    psi_new = np.zeros((state.n_modes, grid.n), dtype=complex)
    for i in range(state.n_modes):
        interp_r = BarycentricInterpolator(src, state.psi_hat[i].real)
        interp_i = BarycentricInterpolator(src, state.psi_hat[i].imag)
        psi_new[i] = interp_r(grid.nodes) + 1j * interp_i(grid.nodes)
    basis = boundary_null_basis_for(cfg, grid)
    psi_new = (psi_new @ basis) @ basis.T
    mean = BarycentricInterpolator(src, state.mean_flow)(grid.nodes)
    return FlowState(
        period_l=state.period_l,
        grid=grid,
        psi_hat=psi_new,
        mean_flow=mean,
        time=state.time,
    )


def boundary_null_basis_for(cfg: SlipConfig, grid: Grid1D) -> np.ndarray:
    from .eigensolver import boundary_null_basis

    return boundary_null_basis(cfg, grid)


def eigenmode_state(
    cfg: SlipConfig,
    n_index: int,
    period_l: float,
    n_modes: int,
    grid: Grid1D | None = None,
    amplitude: float = 1.0,
) -> tuple[FlowState, SpectrumPoint]:
    """Single-eigenmode flow state (mode n_index of the comb) and its data."""
    if grid is None:
        grid = default_grid(96)
    if not (1 <= n_index <= n_modes):
        raise ConfigError("n_index must lie within the carried modes")
    xi = 2.0 * math.pi * n_index / period_l
    prob = ModeProblem(cfg, xi**2)
    sp = recover_mode(solve_principal_eigen(prob, grid), prob)
    psi_hat = np.zeros((n_modes, grid.n), dtype=complex)
    psi_hat[n_index - 1] = 0.5j * amplitude * sp.psi.values / xi
    state = FlowState(
        period_l=period_l, grid=grid, psi_hat=psi_hat, mean_flow=np.zeros(grid.n)
    )
    return state, sp
