"""Time integration of the perturbed flow on an x-periodic strip.

The flow is carried as one streamfunction coefficient profile per Fourier
mode in x plus a real mean flow, so incompressibility and the wall-normal
no-penetration condition are structural.  Each mode advances by
Crank-Nicolson on its fourth-order diffusion operator and Adams-Bashforth
on the advection source (forward Euler bootstraps the first step); the
mean flow advances by the same scheme on its Robin heat equation.  All
solves act on the null space of the boundary-condition rows, so the
Navier-slip conditions hold to roundoff throughout a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import lu_factor, lu_solve, null_space

from .eigensolver import boundary_null_basis, mode_operators, ModeProblem
from .errors import ConfigError, TimeStepError
from .functionals import Grid1D, default_grid, smooth_derivative
from .model import SlipConfig

__all__ = [
    "FlowState",
    "EnergyLedger",
    "EscapeReport",
    "DecayReport",
    "PressureField",
    "Stepper",
    "step",
    "energy_audit",
    "escape_experiment",
    "decay_experiment",
    "recover_pressure",
    "key_inequality_gap",
    "zero_state",
]


# ---------------------------------------------------------------------------
# state container and diagnostics
# ---------------------------------------------------------------------------


@dataclass
class FlowState:
    """Divergence-free field: per-mode streamfunction profiles plus mean flow.

    psi_hat[i] is the complex streamfunction coefficient profile of
    horizontal wavenumber 2*pi*(i+1)/period_l; the velocity of mode n is
    (psi_hat_n', -i xi_n psi_hat_n) e^(i xi_n x) plus conjugate.  mean_flow
    is the x-independent horizontal velocity.
    """

    period_l: float
    grid: Grid1D
    psi_hat: np.ndarray
    mean_flow: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.psi_hat = np.asarray(self.psi_hat, dtype=complex)
        self.mean_flow = np.asarray(self.mean_flow, dtype=float)
        if self.period_l <= 0:
            raise ConfigError("period must be positive")
        if self.psi_hat.ndim != 2 or self.psi_hat.shape[1] != self.grid.n:
            raise ConfigError(
                f"psi_hat must be (n_modes, {self.grid.n}), got {self.psi_hat.shape}"
            )
        if self.mean_flow.shape != (self.grid.n,):
            raise ConfigError("mean_flow length must match the grid")

    @property
    def n_modes(self) -> int:
        return self.psi_hat.shape[0]

    def xis(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(1, self.n_modes + 1) / self.period_l

    def velocity_hats(self) -> tuple[np.ndarray, np.ndarray]:
        """(u1_hat, u2_hat) per mode, shapes (n_modes, ny)."""
        u1 = self.psi_hat @ self.grid.d1.T
        u2 = -1j * self.xis()[:, None] * self.psi_hat
        return u1, u2


def zero_state(grid: Grid1D, period_l: float, n_modes: int, time: float = 0.0) -> FlowState:
    return FlowState(
        period_l=period_l,
        grid=grid,
        psi_hat=np.zeros((n_modes, grid.n), dtype=complex),
        mean_flow=np.zeros(grid.n),
        time=time,
    )


def _mode_weight_sums(state: FlowState, arrays) -> float:
    """Sum of y-quadratures of |a|^2 over all modes, doubled for conjugates."""
    w = state.grid.weights
    return 2.0 * float(sum(np.sum((np.abs(a) ** 2) @ w) for a in arrays))


def kinetic_energy(state: FlowState) -> float:
    """Half the squared L2 norm over one period."""
    w = state.grid.weights
    u1, u2 = state.velocity_hats()
    mode_part = _mode_weight_sums(state, [u1, u2])
    mean_part = float((state.mean_flow**2) @ w)
    return 0.5 * state.period_l * (mode_part + mean_part)


def l2_norm(state: FlowState) -> float:
    return math.sqrt(2.0 * kinetic_energy(state))


def dissipation_rate(state: FlowState, cfg: SlipConfig) -> float:
    """mu times the squared H1 seminorm over one period."""
    g = state.grid
    w = g.weights
    u1, u2 = state.velocity_hats()
    xi = state.xis()[:, None]
    du1 = u1 @ g.d1.T
    du2 = u2 @ g.d1.T
    mode_part = _mode_weight_sums(state, [xi * u1, xi * u2, du1, du2])
    mean_part = float(((g.d1 @ state.mean_flow) ** 2) @ w)
    return cfg.mu * state.period_l * (mode_part + mean_part)


def production_rate(state: FlowState, cfg: SlipConfig) -> float:
    """Boundary production of kinetic energy per unit time."""
    u1, _ = state.velocity_hats()
    top = 2.0 * float(np.sum(np.abs(u1[:, -1]) ** 2)) + state.mean_flow[-1] ** 2
    bot = 2.0 * float(np.sum(np.abs(u1[:, 0]) ** 2)) + state.mean_flow[0] ** 2
    return state.period_l * (cfg.k1 * top + cfg.k0 * bot)


def h1_norm(state: FlowState) -> float:
    g = state.grid
    w = g.weights
    u1, u2 = state.velocity_hats()
    xi = state.xis()[:, None]
    grad = _mode_weight_sums(state, [xi * u1, xi * u2, u1 @ g.d1.T, u2 @ g.d1.T])
    grad += float(((g.d1 @ state.mean_flow) ** 2) @ w)
    return math.sqrt(l2_norm(state) ** 2 + state.period_l * grad)


def h2_norm(state: FlowState) -> float:
    g = state.grid
    w = g.weights
    u1, u2 = state.velocity_hats()
    xi = state.xis()[:, None]
    du = [u1 @ g.d1.T, u2 @ g.d1.T]
    dd = [u1 @ g.d2.T, u2 @ g.d2.T]
    second = _mode_weight_sums(
        state,
        [xi**2 * u1, xi**2 * u2, xi * du[0], xi * du[1], dd[0], dd[1]],
    )
    second += float(((g.d2 @ state.mean_flow) ** 2) @ w)
    return math.sqrt(h1_norm(state) ** 2 + state.period_l * second)


def navier_slip_residual(state: FlowState, cfg: SlipConfig) -> float:
    """Max-norm residual of the slip conditions over all modes and the mean."""
    g = state.grid
    res = 0.0
    for prof in list(state.psi_hat):
        dd = g.d2 @ prof
        d = g.d1 @ prof
        res = max(
            res,
            abs(prof[0]),
            abs(prof[-1]),
            abs(dd[-1] - (cfg.k1 / cfg.mu) * d[-1]),
            abs(dd[0] + (cfg.k0 / cfg.mu) * d[0]),
        )
    dm = g.d1 @ state.mean_flow
    res = max(
        res,
        abs(dm[-1] - (cfg.k1 / cfg.mu) * state.mean_flow[-1]),
        abs(dm[0] + (cfg.k0 / cfg.mu) * state.mean_flow[0]),
    )
    return float(res)


def divergence_residual(state: FlowState) -> float:
    """Structurally zero; kept as an explicit audit of the representation."""
    u1, u2 = state.velocity_hats()
    xi = state.xis()[:, None]
    div = 1j * xi * u1 + u2 @ state.grid.d1.T
    if div.size == 0:
        return 0.0
    return float(np.max(np.abs(div)))


def velocity_fields(state: FlowState, nx: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x, u1, u2) sampled on nx uniform x points; arrays (nx, ny)."""
    u1h, u2h = state.velocity_hats()
    u1 = _to_physical(u1h, state.mean_flow, nx, state.grid.n)
    u2 = _to_physical(u2h, np.zeros(state.grid.n), nx, state.grid.n)
    x = np.arange(nx) * state.period_l / nx
    return x, u1, u2


def _to_physical(mode_hats: np.ndarray, mean: np.ndarray, nx: int, ny: int) -> np.ndarray:
    n_modes = mode_hats.shape[0]
    if nx < 2 * (n_modes + 1):
        raise ConfigError(f"nx={nx} cannot carry {n_modes} modes")
    spec = np.zeros((nx // 2 + 1, ny), dtype=complex)
    spec[0] = nx * mean
    spec[1 : n_modes + 1] = nx * mode_hats
    return np.fft.irfft(spec, n=nx, axis=0)


# ---------------------------------------------------------------------------
# time stepper
# ---------------------------------------------------------------------------


class Stepper:
    """IMEX integrator for the linear or nonlinear perturbed flow.

    Crank-Nicolson treats the per-mode fourth-order diffusion operator and
    the mean-flow Robin heat operator implicitly; the advection source is
    explicit two-step Adams-Bashforth, bootstrapped by one forward-Euler
    step.  Step-size guidance: dt <= 0.5 * dx_min / max|u| (advection) and
    dt <= 0.1/|Lambda| for growth/decay-rate fits; reproducing e^(lambda t)
    amplitudes to 1e-4 over |lambda| t <= 2 needs dt <= 0.02/|lambda|.

    A Stepper instance owns the Adams-Bashforth history, so one instance
    should advance one trajectory.
    """

    def __init__(
        self,
        cfg: SlipConfig,
        grid: Grid1D,
        period_l: float,
        n_modes: int,
        dt: float,
        mode: str = "nonlinear",
        dealias: bool = True,
    ):
        if mode not in ("linear", "nonlinear"):
            raise ConfigError(f"mode must be linear or nonlinear, got {mode!r}")
        if dt <= 0:
            raise ConfigError("dt must be positive")
        if n_modes < 1:
            raise ConfigError("need at least one Fourier mode")
        self.cfg = cfg
        self.grid = grid
        self.period_l = period_l
        self.n_modes = n_modes
        self.dt = dt
        self.mode = mode
        self.nx = _dealias_points(n_modes) if dealias else max(2 * (n_modes + 1), 8)
        self.basis = boundary_null_basis(cfg, grid)
        self._prev_source = None

        self._mode_solvers = []
        eyeful = np.eye(grid.n)
        for i in range(n_modes):
            xi = 2.0 * np.pi * (i + 1) / period_l
            a, b = mode_operators(ModeProblem(cfg, xi**2), grid)
            a_c = a[2:-2] @ self.basis
            b_c = b[2:-2] @ self.basis
            m1 = b_c - 0.5 * dt * a_c
            m2 = b_c + 0.5 * dt * a_c
            try:
                lu = lu_factor(m1)
            except np.linalg.LinAlgError:
                raise TimeStepError(f"singular boundary solve for mode {i + 1}")
            if not np.all(np.isfinite(lu[0])):
                raise TimeStepError(f"singular boundary solve for mode {i + 1}")
            self._mode_solvers.append((lu, m2))

        rows = np.zeros((2, grid.n))
        rows[0] = grid.d1[0] + (cfg.k0 / cfg.mu) * eyeful[0]
        rows[1] = grid.d1[-1] - (cfg.k1 / cfg.mu) * eyeful[-1]
        rows /= np.linalg.norm(rows, axis=1)[:, None]
        self.mean_basis = null_space(rows)
        am = cfg.mu * grid.d2[1:-1] @ self.mean_basis
        bm = self.mean_basis[1:-1]
        self._mean_lu = lu_factor(bm - 0.5 * dt * am)
        self._mean_m2 = bm + 0.5 * dt * am

        nodes = grid.nodes
        self._dy = np.minimum(
            np.diff(nodes, prepend=nodes[0] - (nodes[1] - nodes[0])),
            np.diff(nodes, append=nodes[-1] + (nodes[-1] - nodes[-2])),
        )

    # -- sources ------------------------------------------------------------

    def advection(self, state: FlowState) -> tuple[np.ndarray, np.ndarray]:
        """(-u.grad omega per mode, -d/dy of the mean Reynolds stress)."""
        mode_src, mean_src, _ = self._advection_and_cfl(state)
        return mode_src, mean_src

    def _advection_and_cfl(self, state: FlowState):
        g = state.grid
        xi = state.xis()[:, None]
        u1h, u2h = state.velocity_hats()
        omega = xi**2 * state.psi_hat - state.psi_hat @ g.d2.T
        omega_mean = -(g.d1 @ state.mean_flow)

        u1 = _to_physical(u1h, state.mean_flow, self.nx, g.n)
        u2 = _to_physical(u2h, np.zeros(g.n), self.nx, g.n)
        om_x = _to_physical(1j * xi * omega, np.zeros(g.n), self.nx, g.n)
        om_y = _to_physical(omega @ g.d1.T, g.d1 @ omega_mean, self.nx, g.n)

        adv = u1 * om_x + u2 * om_y
        spec = np.fft.rfft(adv, axis=0) / self.nx
        mode_src = -spec[1 : self.n_modes + 1]

        stress = 2.0 * np.sum(np.real(u1h * np.conj(u2h)), axis=0)
        mean_src = -(g.d1 @ stress)
        return mode_src, mean_src, self._cfl_from_physical(state, u1, u2)

    def _cfl_from_physical(self, state: FlowState, u1, u2) -> float:
        dx = state.period_l / self.nx
        vmax1 = max(float(np.max(np.abs(u1))), 1e-14)
        limit = 0.5 * dx / vmax1
        v2 = np.maximum(np.max(np.abs(u2), axis=0), 1e-14)
        limit = min(limit, 0.5 * float(np.min(self._dy / v2)))
        return limit

    def cfl_limit(self, state: FlowState) -> float:
        """Largest advective dt the scheme advertises for this state.

        Horizontal: half a cell crossing at the peak speed.  Vertical: the
        same criterion applied per layer, since the wall-normal velocity
        vanishes at the walls exactly where the collocation layers cluster.
        """
        u1h, u2h = state.velocity_hats()
        u1 = _to_physical(u1h, state.mean_flow, self.nx, state.grid.n)
        u2 = _to_physical(u2h, np.zeros(state.grid.n), self.nx, state.grid.n)
        return self._cfl_from_physical(state, u1, u2)

    # -- stepping -----------------------------------------------------------

    def step(self, state: FlowState) -> FlowState:
        if state.n_modes != self.n_modes or state.grid is not self.grid:
            raise ConfigError("state layout does not match this stepper")
        if self.mode == "nonlinear":
            mode_src, mean_src, cfl = self._advection_and_cfl(state)
            if self.dt > cfl:
                raise TimeStepError(
                    f"dt={self.dt:.3e} violates the advective limit "
                    f"{cfl:.3e} at t={state.time:.3f}"
                )
        else:
            mode_src = np.zeros((self.n_modes, self.grid.n), dtype=complex)
            mean_src = np.zeros(self.grid.n)

        if self._prev_source is None:
            eff_mode, eff_mean = mode_src, mean_src
        else:
            prev_mode, prev_mean = self._prev_source
            eff_mode = 1.5 * mode_src - 0.5 * prev_mode
            eff_mean = 1.5 * mean_src - 0.5 * prev_mean
        self._prev_source = (mode_src, mean_src)

        v_all = state.psi_hat @ self.basis
        src_all = eff_mode[:, 2:-2]
        v_new = np.empty_like(v_all)
        for i, (lu, m2) in enumerate(self._mode_solvers):
            rhs = m2 @ v_all[i] + self.dt * src_all[i]
            v_new[i] = lu_solve(lu, rhs, check_finite=False)
        new_psi = v_new @ self.basis.T
        if not np.all(np.isfinite(new_psi)):
            raise TimeStepError(f"non-finite solution at t={state.time:.3f}")

        w = self.mean_basis.T @ state.mean_flow
        rhs_m = self._mean_m2 @ w + self.dt * eff_mean[1:-1]
        new_mean = self.mean_basis @ lu_solve(self._mean_lu, rhs_m, check_finite=False)

        return FlowState(
            period_l=state.period_l,
            grid=state.grid,
            psi_hat=new_psi,
            mean_flow=new_mean,
            time=state.time + self.dt,
        )

    def run(self, state: FlowState, n_steps: int, record_every: int = 1) -> list[FlowState]:
        """Advance n_steps, returning the recorded trajectory (initial included)."""
        out = [state]
        for k in range(n_steps):
            state = self.step(state)
            if (k + 1) % record_every == 0:
                out.append(state)
        return out

    def reset(self):
        """Drop the Adams-Bashforth history (restart from a fresh trajectory)."""
        self._prev_source = None


def _dealias_points(n_modes: int) -> int:
    nx = 3 * (n_modes + 1)
    return nx + (nx % 2)


def step(state: FlowState, dt: float, mode: str, cfg: SlipConfig) -> FlowState:
    """Single IMEX-Euler step.  Multi-step runs should use a Stepper, which
    carries the Adams-Bashforth history between steps."""
    return Stepper(
        cfg, state.grid, state.period_l, state.n_modes, dt, mode
    ).step(state)


# ---------------------------------------------------------------------------
# energy accounting
# ---------------------------------------------------------------------------


@dataclass
class EnergyLedger:
    """Time series of the energy-law ingredients for one run."""

    times: np.ndarray
    kinetic: np.ndarray
    dissipation_integral: np.ndarray
    boundary_production_integral: np.ndarray
    l2: np.ndarray
    h1: np.ndarray
    h2: np.ndarray

    def residual(self) -> np.ndarray:
        """Deviation from the energy law at each recorded time."""
        return np.abs(
            self.kinetic
            - self.kinetic[0]
            + self.dissipation_integral
            - self.boundary_production_integral
        )

    def rows(self):
        res = self.residual()
        for i in range(len(self.times)):
            yield (
                self.times[i],
                self.kinetic[i],
                self.dissipation_integral[i],
                self.boundary_production_integral[i],
                self.l2[i],
                self.h1[i],
                self.h2[i],
                res[i],
            )


def energy_audit(history: list[FlowState], cfg: SlipConfig) -> EnergyLedger:
    """Kinetic energy, time-integrated dissipation/production and norms.

    Requires a uniformly spaced history; the running time integrals use the
    trapezoid rule, consistent with the stepper's second-order accuracy.
    """
    if not history:
        raise ConfigError("history is empty")
    times = np.array([s.time for s in history])
    if len(times) > 1:
        dts = np.diff(times)
        if np.max(np.abs(dts - dts[0])) > 1e-9 * max(abs(dts[0]), 1e-12):
            raise ConfigError("energy audit needs a uniformly sampled history")
    kin = np.array([kinetic_energy(s) for s in history])
    dis = np.array([dissipation_rate(s, cfg) for s in history])
    pro = np.array([production_rate(s, cfg) for s in history])
    l2 = np.sqrt(2.0 * kin)
    h1 = np.array([h1_norm(s) for s in history])
    h2 = np.array([h2_norm(s) for s in history])
    return EnergyLedger(
        times=times,
        kinetic=kin,
        dissipation_integral=_cumtrapz(dis, times),
        boundary_production_integral=_cumtrapz(pro, times),
        l2=l2,
        h1=h1,
        h2=h2,
    )


def _cumtrapz(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    if len(values) > 1:
        inc = 0.5 * (values[1:] + values[:-1]) * np.diff(times)
        out[1:] = np.cumsum(inc)
    return out


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


@dataclass
class EscapeReport:
    """Outcome of one escape-time experiment."""

    delta: float
    epsilon: float
    escape_time: float | None
    predicted_time: float
    growth_fit: float
    lambda_f: float
    capital_lambda: float
    times: np.ndarray = field(repr=False, default=None)
    l2_history: np.ndarray = field(repr=False, default=None)


@dataclass
class DecayReport:
    """Fitted decay rates plus the full energy ledger of the run."""

    ledger: EnergyLedger
    l2_rate: float
    h1_rate: float
    h2_rate: float
    capital_lambda: float


def _fit_rate(times: np.ndarray, values: np.ndarray) -> float:
    if len(times) < 3:
        raise ConfigError("not enough samples to fit a rate")
    return float(np.polyfit(times, np.log(values), 1)[0])


def escape_experiment(
    cfg: SlipConfig,
    cutoff,
    delta: float,
    epsilon: float,
    horizon: float,
    grid: Grid1D | None = None,
    period_l: float | None = None,
    n_modes: int | None = None,
    dt: float | None = None,
) -> EscapeReport:
    """Seed the nonlinear flow at amplitude delta and time its escape.

    The seed is the unit-norm synthesized growing mode of the cutoff band.
    The early-time exponent is fitted while the L2 norm stays below
    10*delta; the escape time is the first crossing of epsilon, refined by
    log-linear interpolation between steps.
    """
    from .modes import normalized_seed
    from .thresholds import growth_envelope

    if delta >= epsilon:
        raise ConfigError("delta must be below the escape threshold epsilon")
    if grid is None:
        grid = default_grid(64)
    env = growth_envelope(cfg, cutoff.support, default_grid(96))
    seed = normalized_seed(cutoff, cfg, grid, period_l=period_l, n_modes=n_modes)
    seed = replace(seed, psi_hat=seed.psi_hat * delta, mean_flow=seed.mean_flow * delta)
    if dt is None:
        dt = 0.05 / env.capital_lambda
    stepper = Stepper(cfg, grid, seed.period_l, seed.n_modes, dt, mode="nonlinear")

    times = [0.0]
    norms = [l2_norm(seed)]
    state = seed
    n_steps = int(math.ceil(horizon / dt))
    escape_time = None
    for _ in range(n_steps):
        state = stepper.step(state)
        times.append(state.time)
        norms.append(l2_norm(state))
        if norms[-1] >= epsilon:
            t0, t1 = times[-2], times[-1]
            v0, v1 = norms[-2], norms[-1]
            escape_time = t0 + (t1 - t0) * (
                (math.log(epsilon) - math.log(v0)) / (math.log(v1) - math.log(v0))
            )
            break
    times = np.array(times)
    norms = np.array(norms)

    window = (np.arange(len(norms)) >= 2) & (norms <= 10.0 * delta)
    if np.count_nonzero(window) < 4:
        window = np.arange(len(norms)) >= 2
    growth_fit = _fit_rate(times[window], norms[window])
    predicted = math.log(epsilon / delta) / growth_fit
    return EscapeReport(
        delta=delta,
        epsilon=epsilon,
        escape_time=escape_time,
        predicted_time=predicted,
        growth_fit=growth_fit,
        lambda_f=env.lambda_f,
        capital_lambda=env.capital_lambda,
        times=times,
        l2_history=norms,
    )


def decay_experiment(
    cfg: SlipConfig,
    seed: FlowState,
    horizon: float,
    dt: float | None = None,
    record_every: int = 1,
) -> DecayReport:
    """Nonlinear run above the critical viscosity with fitted decay rates.

    Rates are least-squares slopes of the log norms over the window where
    the run stays within 1% of a linear twin (nonlinearity negligible),
    preferring the stretch where the L2 norm falls by a decade.
    """
    from .model import critical_viscosity
    from .thresholds import capital_lambda as _capital_lambda

    if cfg.mu < critical_viscosity(cfg):
        raise ConfigError("decay experiment requires viscosity at or above critical")
    lam0 = _capital_lambda(cfg)
    xi1 = 2.0 * np.pi / seed.period_l
    from .eigensolver import solve_principal_eigen

    lam1 = solve_principal_eigen(ModeProblem(cfg, xi1**2)).lam
    rate_scale = max(abs(lam0), abs(lam1), 1e-3)
    if dt is None:
        dt = 0.1 / rate_scale
    n_steps = int(math.ceil(horizon / dt))

    nl = Stepper(cfg, seed.grid, seed.period_l, seed.n_modes, dt, mode="nonlinear")
    lin = Stepper(cfg, seed.grid, seed.period_l, seed.n_modes, dt, mode="linear")
    hist_nl = nl.run(seed, n_steps, record_every)
    hist_lin = lin.run(seed, n_steps, record_every)
    ledger = energy_audit(hist_nl, cfg)

    l2_lin = np.array([l2_norm(s) for s in hist_lin])
    valid = np.abs(ledger.l2 - l2_lin) <= 0.01 * np.maximum(l2_lin, 1e-300)
    valid &= ledger.l2 > 0
    valid[:2] = False
    idx = np.nonzero(valid)[0]
    if len(idx) < 4:
        raise ConfigError("decay window too short; extend the horizon or reduce dt")
    stop = idx[-1]
    decade = np.nonzero(ledger.l2[idx] <= 0.1 * ledger.l2[idx[0]])[0]
    if len(decade):
        stop = idx[decade[0]]
    window = idx[idx <= stop]
    return DecayReport(
        ledger=ledger,
        l2_rate=_fit_rate(ledger.times[window], ledger.l2[window]),
        h1_rate=_fit_rate(ledger.times[window], ledger.h1[window]),
        h2_rate=_fit_rate(ledger.times[window], ledger.h2[window]),
        capital_lambda=lam0,
    )


# ---------------------------------------------------------------------------
# pressure recovery
# ---------------------------------------------------------------------------


@dataclass
class PressureField:
    """Per-mode pressure coefficients; the x-mean pressure is gauged away."""

    q_hat: np.ndarray
    momentum_residual: float


def recover_pressure(state: FlowState, mode: str, cfg: SlipConfig) -> PressureField:
    """Pressure from the per-mode Stokes balance.

    The instantaneous time derivative comes from the vorticity equation
    evaluated on the current state (not a finite difference in time); the
    horizontal momentum balance then yields the pressure coefficient, and
    the returned residual is the vertical momentum balance left over,
    scaled by its largest term.
    """
    if mode not in ("linear", "nonlinear"):
        raise ConfigError(f"mode must be linear or nonlinear, got {mode!r}")
    g = state.grid
    mu = cfg.mu
    xi = state.xis()[:, None]
    u1h, u2h = state.velocity_hats()
    omega = xi**2 * state.psi_hat - state.psi_hat @ g.d2.T

    nx = _dealias_points(state.n_modes)
    if mode == "nonlinear":
        u1 = _to_physical(u1h, state.mean_flow, nx, g.n)
        u2 = _to_physical(u2h, np.zeros(g.n), nx, g.n)
        om_x = _to_physical(1j * xi * omega, np.zeros(g.n), nx, g.n)
        om_y = _to_physical(omega @ g.d1.T, -(g.d2 @ state.mean_flow), nx, g.n)
        adv_omega = np.fft.rfft(u1 * om_x + u2 * om_y, axis=0)[1 : state.n_modes + 1] / nx
        u1x = _to_physical(1j * xi * u1h, np.zeros(g.n), nx, g.n)
        u1y = _to_physical(u1h @ g.d1.T, g.d1 @ state.mean_flow, nx, g.n)
        u2x = _to_physical(1j * xi * u2h, np.zeros(g.n), nx, g.n)
        u2y = _to_physical(u2h @ g.d1.T, np.zeros(g.n), nx, g.n)
        adv1 = np.fft.rfft(u1 * u1x + u2 * u1y, axis=0)[1 : state.n_modes + 1] / nx
        adv2 = np.fft.rfft(u1 * u2x + u2 * u2y, axis=0)[1 : state.n_modes + 1] / nx
    else:
        adv_omega = np.zeros_like(state.psi_hat)
        adv1 = np.zeros_like(state.psi_hat)
        adv2 = np.zeros_like(state.psi_hat)

    q_hat = np.empty_like(state.psi_hat)
    worst = 0.0
    eyeful = np.eye(g.n)
    for i in range(state.n_modes):
        x1 = float(xi[i, 0])
        psi = state.psi_hat[i]
        # all y-derivatives through the filtered coefficient pipeline: the
        # balance reaches the fourth derivative of the streamfunction and
        # plain matrix differentiation would drown the residual in noise
        d1psi = smooth_derivative(g, psi, 1)
        d2psi = smooth_derivative(g, psi, 2)
        d3psi = smooth_derivative(g, psi, 3)
        d4psi = smooth_derivative(g, psi, 4)
        om = x1**2 * psi - d2psi
        om_dd = x1**2 * d2psi - d4psi
        om_t = mu * (om_dd - x1**2 * om) - adv_omega[i]
        poisson = x1**2 * eyeful - g.d2
        poisson[0] = eyeful[0]
        poisson[-1] = eyeful[-1]
        rhs = om_t.copy()
        rhs[0] = 0.0
        rhs[-1] = 0.0
        psi_t = np.linalg.solve(poisson, rhs)
        u1_t = smooth_derivative(g, psi_t, 1)
        u2_t = -1j * x1 * psi_t
        f1 = -u1_t - adv1[i]
        f2 = -u2_t - adv2[i]
        q = (f1 + mu * (d3psi - x1**2 * d1psi)) / (1j * x1)
        q_hat[i] = q
        visc2 = mu * (-1j * x1) * (d2psi - x1**2 * psi)
        dq = smooth_derivative(g, q, 1)
        resid = -visc2 + dq - f2
        scale = max(
            float(np.max(np.abs(visc2))),
            float(np.max(np.abs(dq))),
            float(np.max(np.abs(f2))),
            1e-300,
        )
        worst = max(worst, float(np.max(np.abs(resid))) / scale)
    return PressureField(q_hat=q_hat, momentum_residual=worst)


# ---------------------------------------------------------------------------
# spectral inequality audit
# ---------------------------------------------------------------------------


def key_inequality_gap(state: FlowState, cfg: SlipConfig, capital_lambda: float) -> float:
    """Left side minus right side of the spectral energy bound.

    Negative (up to roundoff slack) for every divergence-free state with
    no mean-flow component: boundary production minus dissipation is
    dominated by capital_lambda times the squared L2 norm.
    """
    lhs = production_rate(state, cfg) - dissipation_rate(state, cfg)
    rhs = capital_lambda * l2_norm(state) ** 2
    return lhs - rhs
