"""Command-line front end.

Every subcommand writes a small report bundle: a plain-text manifest that
echoes every parameter actually used (explicit or default) plus CSV data
files, and for field-producing commands a plain-text field dump per
snapshot.  Data files carry no timestamps and use fixed summation orders,
so identical invocations produce byte-identical data.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, SlipstabError
from .functionals import Grid1D, default_grid, maximize_Z_on_sphere
from .model import (
    SlipConfig,
    constant_c0,
    critical_viscosity,
    critical_viscosity_closed_form,
    derived_constants,
)
from .eigensolver import (
    ModeProblem,
    boundary_residual,
    refine_lambda_dispersion,
    solve_principal_eigen,
)
from .thresholds import capital_lambda, critical_frequency
from .simulator import (
    FlowState,
    Stepper,
    decay_experiment,
    energy_audit,
    escape_experiment,
    l2_norm,
)
from . import modes as modes_mod

_FMT = "{:.17g}"


@dataclass
class RunConfig:
    """One resolved invocation: the command plus its full parameter map."""

    command: str
    parameters: dict

    def __post_init__(self):
        if self.command not in _COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")


@dataclass
class ReportBundle:
    """Where a run wrote its manifest and data files."""

    outdir: Path
    manifest: Path
    data_files: list[Path] = dc_field(default_factory=list)


def _outdir(params: dict) -> Path:
    base = params.get("outdir") or os.environ.get("SLIPSTAB_OUTDIR", "slipstab-out")
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(outdir: Path, config: RunConfig, data_files: list[Path]) -> Path:
    lines = [
        "slipstab manifest",
        f"version = {__version__}",
        f"command = {config.command}",
        f"written = {time.strftime('%Y-%m-%dT%H:%M:%S%z')}",
    ]
    for key in sorted(config.parameters):
        lines.append(f"{key} = {config.parameters[key]!r}")
    for f in data_files:
        lines.append(f"data = {f.name}")
    path = outdir / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(c) for c in row) + "\n")
    return path


def _format_cell(c) -> str:
    if isinstance(c, float):
        return _FMT.format(c)
    if c is None:
        return ""
    return str(c)


def write_field_dump(path: Path, state: FlowState) -> Path:
    """Plain-text snapshot: header lines, then real/imag rows per mode, then mean."""
    with open(path, "w") as fh:
        fh.write("# slipstab field dump\n")
        fh.write(f"period_l {_FMT.format(state.period_l)}\n")
        fh.write(f"n_modes {state.n_modes}\n")
        fh.write(f"grid_n {state.grid.n}\n")
        fh.write(f"time {_FMT.format(state.time)}\n")
        for i in range(state.n_modes):
            re = " ".join(_FMT.format(v) for v in state.psi_hat[i].real)
            im = " ".join(_FMT.format(v) for v in state.psi_hat[i].imag)
            fh.write(f"mode {i + 1} re {re}\n")
            fh.write(f"mode {i + 1} im {im}\n")
        fh.write("mean " + " ".join(_FMT.format(v) for v in state.mean_flow) + "\n")
    return path


def load_field_dump(path) -> FlowState:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or not lines[0].startswith("# slipstab field dump"):
        raise ConfigError(f"{path} is not a field dump")
    header = {}
    idx = 1
    for key in ("period_l", "n_modes", "grid_n", "time"):
        name, value = lines[idx].split()
        if name != key:
            raise ConfigError(f"malformed dump header at line {idx + 1}")
        header[key] = float(value)
        idx += 1
    n_modes = int(header["n_modes"])
    grid = default_grid(int(header["grid_n"]))
    psi = np.zeros((n_modes, grid.n), dtype=complex)
    for i in range(n_modes):
        re = np.array([float(v) for v in lines[idx].split()[3:]])
        im = np.array([float(v) for v in lines[idx + 1].split()[3:]])
        psi[i] = re + 1j * im
        idx += 2
    mean = np.array([float(v) for v in lines[idx].split()[1:]])
    return FlowState(
        period_l=header["period_l"],
        grid=grid,
        psi_hat=psi,
        mean_flow=mean,
        time=header["time"],
    )


def parse_range(spec: str) -> list[float]:
    """start:step:stop inclusive (within half a step), or a single value."""
    parts = spec.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ConfigError(f"range must be value or start:step:stop, got {spec!r}")
    start, step, stop = (float(p) for p in parts)
    if step <= 0:
        raise ConfigError(f"range step must be positive in {spec!r}")
    n = int(math.floor((stop - start) / step + 0.5))
    values = [start + i * step for i in range(n + 1)]
    return [v for v in values if v <= stop + 0.5 * step]


def _cfg_from(params: dict) -> SlipConfig:
    return SlipConfig(k0=params["k0"], k1=params["k1"], mu=params.get("mu", 1.0))


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------


def _run_critical_viscosity(config: RunConfig, outdir: Path) -> list[Path]:
    p = config.parameters
    cfg = _cfg_from(p)
    grid = default_grid(p["n"])
    numeric, _ = maximize_Z_on_sphere(cfg, grid)
    d = derived_constants(cfg)
    rows = [
        (
            cfg.k0,
            cfg.k1,
            cfg.mu,
            d.mu_c,
            critical_viscosity(cfg),
            numeric,
            d.b_max,
            d.a_norm,
            d.c0,
        )
    ]
    return [
        _write_csv(
            outdir / "critical_viscosity.csv",
            ["k0", "k1", "mu", "closed_form", "variational", "variational_numeric", "b", "a", "c0"],
            rows,
        )
    ]


def _run_dispersion(config: RunConfig, outdir: Path) -> list[Path]:
    p = config.parameters
    cfg = _cfg_from(p)
    grid = default_grid(p["n"])
    rows = []
    for xi2 in parse_range(p["xi2"]):
        sp = solve_principal_eigen(ModeProblem(cfg, xi2), grid)
        rows.append((xi2, sp.lam, "discrete", boundary_residual(sp, cfg)))
        if xi2 > 0:
            root = refine_lambda_dispersion(ModeProblem(cfg, xi2), sp.lam)
            rows.append((xi2, root.lam, "dispersion", root.det_residual))
    return [
        _write_csv(outdir / "dispersion.csv", ["xi2", "lambda", "method", "residual"], rows)
    ]


def _run_critical_frequency(config: RunConfig, outdir: Path) -> list[Path]:
    p = config.parameters
    cfg = _cfg_from(p)
    grid = default_grid(p["n"])
    cf = critical_frequency(cfg, grid)
    mu_c = critical_viscosity(cfg)
    if cf is None:
        rows = [(cfg.k0, cfg.k1, cfg.mu, mu_c, None, None, 0)]
    else:
        rows = [
            (cfg.k0, cfg.k1, cfg.mu, mu_c, cf.xi_c2, cf.n_star_at_fixed_point, cf.iterations)
        ]
    return [
        _write_csv(
            outdir / "critical_frequency.csv",
            ["k0", "k1", "mu", "mu_c", "xi_c2", "n_star", "iterations"],
            rows,
        )
    ]


def _cutoff_from(p: dict, cfg: SlipConfig, grid: Grid1D) -> modes_mod.Cutoff:
    cf = critical_frequency(cfg, default_grid(128))
    if cf is None:
        raise ConfigError("no unstable band: viscosity at or above critical")
    center = p.get("center") or 0.5 * cf.xi_c2
    halfwidth = p.get("halfwidth") or 0.25 * cf.xi_c2
    p["center"], p["halfwidth"] = center, halfwidth
    p["xi_c2"] = cf.xi_c2
    return modes_mod.Cutoff(center=center, halfwidth=halfwidth, amplitude=p.get("amplitude", 1.0))


def _run_synthesize(config: RunConfig, outdir: Path) -> list[Path]:
    p = config.parameters
    cfg = _cfg_from(p)
    grid = default_grid(p["n"])
    cutoff = _cutoff_from(p, cfg, grid)
    x = np.linspace(0.0, p["x_max"], p["x_count"])
    fields = modes_mod.synthesize(
        cutoff, cfg, p["t"], x, grid, method=p["method"], period_l=p.get("L"), xi_c2=p["xi_c2"]
    )
    rows = []
    for i, xv in enumerate(fields.x):
        for j, yv in enumerate(fields.y):
            rows.append((xv, yv, fields.u1[i, j], fields.u2[i, j], fields.q[i, j]))
    return [
        _write_csv(outdir / "synthesized_field.csv", ["x", "y", "u1", "u2", "q"], rows)
    ]


def _simulate_seed(p: dict, cfg: SlipConfig, grid: Grid1D) -> FlowState:
    if p.get("seed_file"):
        state = load_field_dump(p["seed_file"])
        return state
    kind = p.get("seed", "eigenmode")
    if kind == "cutoff":
        cutoff = _cutoff_from(p, cfg, grid)
        state = modes_mod.normalized_seed(
            cutoff, cfg, grid, period_l=p.get("L"), n_modes=p.get("n_modes")
        )
        psi = state.psi_hat * p["amplitude"]
        return FlowState(
            period_l=state.period_l,
            grid=state.grid,
            psi_hat=psi,
            mean_flow=state.mean_flow * p["amplitude"],
        )
    if kind == "eigenmode":
        length = p.get("L") or 2.0 * math.pi
        n_modes = p.get("n_modes") or 8
        p["L"], p["n_modes"] = length, n_modes
        state, _ = modes_mod.eigenmode_state(
            cfg, p["mode_index"], length, n_modes, grid, amplitude=p["amplitude"]
        )
        return state
    raise ConfigError(f"unknown seed kind {kind!r}")


def _run_simulate(config: RunConfig, outdir: Path) -> list[Path]:
    p = config.parameters
    cfg = _cfg_from(p)
    grid = default_grid(p["n"])
    state = _simulate_seed(p, cfg, grid)
    dt = p.get("dt")
    if dt is None:
        lam0 = capital_lambda(cfg)
        dt = 0.1 / max(abs(lam0), 1e-2)
        p["dt"] = dt
    stepper = Stepper(cfg, state.grid, state.period_l, state.n_modes, dt, mode=p["mode"])
    history = stepper.run(state, p["steps"], record_every=p["record_every"])
    ledger = energy_audit(history, cfg)
    files = [
        _write_csv(
            outdir / "ledger.csv",
            ["time", "kinetic", "dissipation", "production", "l2", "h1", "h2", "residual"],
            ledger.rows(),
        ),
        write_field_dump(outdir / "field_final.txt", history[-1]),
    ]
    if p.get("dump_every"):
        for i, st in enumerate(history):
            if i % p["dump_every"] == 0:
                files.append(write_field_dump(outdir / f"field_{i:05d}.txt", st))
    return files


def _run_escape(config: RunConfig, outdir: Path) -> list[Path]:
    p = config.parameters
    cfg = _cfg_from(p)
    grid = default_grid(p["n"])
    cutoff = _cutoff_from(p, cfg, grid)
    report = escape_experiment(
        cfg,
        cutoff,
        p["delta"],
        p["epsilon"],
        p["horizon"],
        grid=grid,
        period_l=p.get("L"),
        n_modes=p.get("n_modes"),
        dt=p.get("dt"),
    )
    files = [
        _write_csv(
            outdir / "escape.csv",
            [
                "delta",
                "epsilon",
                "escape_time",
                "predicted_time",
                "growth_fit",
                "lambda_f",
                "capital_lambda",
            ],
            [
                (
                    report.delta,
                    report.epsilon,
                    report.escape_time,
                    report.predicted_time,
                    report.growth_fit,
                    report.lambda_f,
                    report.capital_lambda,
                )
            ],
        ),
        _write_csv(
            outdir / "escape_history.csv",
            ["time", "l2"],
            zip(report.times, report.l2_history),
        ),
    ]
    return files


def _run_decay(config: RunConfig, outdir: Path) -> list[Path]:
    p = config.parameters
    cfg = _cfg_from(p)
    grid = default_grid(p["n"])
    length = p.get("L") or 2.0 * math.pi
    p["L"] = length
    seed, _ = modes_mod.eigenmode_state(
        cfg, p["mode_index"], length, p.get("n_modes") or 8, grid, amplitude=p["amplitude"]
    )
    report = decay_experiment(cfg, seed, p["horizon"], dt=p.get("dt"))
    files = [
        _write_csv(
            outdir / "decay_rates.csv",
            ["k0", "k1", "mu", "l2_rate", "h1_rate", "h2_rate", "capital_lambda"],
            [(cfg.k0, cfg.k1, cfg.mu, report.l2_rate, report.h1_rate, report.h2_rate, report.capital_lambda)],
        ),
        _write_csv(
            outdir / "ledger.csv",
            ["time", "kinetic", "dissipation", "production", "l2", "h1", "h2", "residual"],
            report.ledger.rows(),
        ),
    ]
    return files


def _sweep_cell(k0: float, k1: float, mu: float, n: int):
    cfg = SlipConfig(k0, k1, mu)
    mu_c = critical_viscosity(cfg)
    lam0 = capital_lambda(cfg)
    if mu > mu_c:
        flag = "stable"
    elif mu == mu_c and mu_c > 0:
        flag = "neutral"
    elif mu_c == 0.0:
        flag = "stable"
    else:
        flag = "unstable"
    xi_c2 = None
    if flag == "unstable":
        cf = critical_frequency(cfg, default_grid(n))
        xi_c2 = cf.xi_c2 if cf is not None else None
    return (k0, k1, mu, mu_c, flag, xi_c2, lam0, "")


def _run_sweep(config: RunConfig, outdir: Path) -> list[Path]:
    p = config.parameters
    cells = [
        (k0, k1, mu)
        for k0 in parse_range(p["k0"])
        for k1 in parse_range(p["k1"])
        for mu in parse_range(p["mu"])
    ]
    if not cells:
        raise ConfigError("sweep grid is empty")
    n = p["n"]

    def work(cell):
        try:
            return _sweep_cell(*cell, n)
        except SlipstabError as exc:
            k0, k1, mu = cell
            return (k0, k1, mu, None, "error", None, None, str(exc))

    workers = min(p.get("workers") or (os.cpu_count() or 1), len(cells))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(work, cells))
    else:
        rows = [work(c) for c in cells]
    return [
        _write_csv(
            outdir / "sweep.csv",
            ["k0", "k1", "mu", "mu_c", "stable_flag", "xi_c2", "lambda_max", "error"],
            rows,
        )
    ]


def _run_verify(config: RunConfig, outdir: Path) -> list[Path]:
    from .verify import run_property_suite

    rows, all_ok = run_property_suite(fast=config.parameters.get("fast", False))
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    files = [
        _write_csv(outdir / "verify.csv", ["check", "status", "detail"],
                   [(n, "pass" if ok else "fail", d) for n, ok, d in rows])
    ]
    if not all_ok:
        raise SlipstabError("verification suite reported failures")
    return files


_COMMANDS = {
    "critical-viscosity": _run_critical_viscosity,
    "dispersion": _run_dispersion,
    "critical-frequency": _run_critical_frequency,
    "synthesize": _run_synthesize,
    "simulate": _run_simulate,
    "escape": _run_escape,
    "decay": _run_decay,
    "verify": _run_verify,
    "sweep": _run_sweep,
}


def run(config: RunConfig) -> ReportBundle:
    """Dispatch a resolved run configuration and write its report bundle."""
    outdir = _outdir(config.parameters)
    data_files = _COMMANDS[config.command](config, outdir)
    manifest = _write_manifest(outdir, config, data_files)
    return ReportBundle(outdir=outdir, manifest=manifest, data_files=data_files)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(sub, mu_required=True, n_default=96):
    sub.add_argument("--k0", type=float, required=True, help="slip coefficient at y=0")
    sub.add_argument("--k1", type=float, required=True, help="slip coefficient at y=1")
    sub.add_argument("--mu", type=float, required=mu_required, default=1.0, help="viscosity")
    sub.add_argument("--n", type=int, default=n_default, help="collocation nodes")
    sub.add_argument("-o", "--outdir", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="slipstab",
        description="Stability toolkit for plane channel flow with Navier-slip walls",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("critical-viscosity", help="closed-form vs variational threshold")
    _add_common(s, mu_required=False, n_default=128)

    s = sub.add_parser("dispersion", help="growth-rate curve over squared frequencies")
    _add_common(s)
    s.add_argument("--xi2", required=True, help="value or start:step:stop")

    s = sub.add_parser("critical-frequency", help="neutral squared frequency")
    _add_common(s, n_default=128)

    s = sub.add_parser("synthesize", help="evaluate a synthesized growing mode")
    _add_common(s)
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--center", type=float, default=None)
    s.add_argument("--halfwidth", type=float, default=None)
    s.add_argument("--amplitude", type=float, default=1.0)
    s.add_argument("--method", choices=["quadrature", "comb"], default="quadrature")
    s.add_argument("--L", type=float, default=None, help="strip period (comb method)")
    s.add_argument("--x-count", dest="x_count", type=int, default=33)
    s.add_argument("--x-max", dest="x_max", type=float, default=2.0 * math.pi)

    s = sub.add_parser("simulate", help="time-integrate the perturbed flow")
    _add_common(s)
    s.add_argument("--mode", choices=["linear", "nonlinear"], default="nonlinear")
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--L", type=float, default=None)
    s.add_argument("--n-modes", dest="n_modes", type=int, default=None)
    s.add_argument("--amplitude", type=float, default=1e-3)
    s.add_argument("--seed", choices=["eigenmode", "cutoff"], default="eigenmode")
    s.add_argument("--seed-file", dest="seed_file", default=None)
    s.add_argument("--mode-index", dest="mode_index", type=int, default=1)
    s.add_argument("--center", type=float, default=None)
    s.add_argument("--halfwidth", type=float, default=None)
    s.add_argument("--record-every", dest="record_every", type=int, default=1)
    s.add_argument("--dump-every", dest="dump_every", type=int, default=0)

    s = sub.add_parser("escape", help="nonlinear escape-time experiment")
    _add_common(s, n_default=64)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--horizon", type=float, required=True)
    s.add_argument("--center", type=float, default=None)
    s.add_argument("--halfwidth", type=float, default=None)
    s.add_argument("--L", type=float, default=None)
    s.add_argument("--n-modes", dest="n_modes", type=int, default=None)
    s.add_argument("--dt", type=float, default=None)

    s = sub.add_parser("decay", help="nonlinear decay-rate experiment")
    _add_common(s, n_default=64)
    s.add_argument("--horizon", type=float, required=True)
    s.add_argument("--amplitude", type=float, default=1e-4)
    s.add_argument("--mode-index", dest="mode_index", type=int, default=1)
    s.add_argument("--L", type=float, default=None)
    s.add_argument("--n-modes", dest="n_modes", type=int, default=None)
    s.add_argument("--dt", type=float, default=None)

    s = sub.add_parser("verify", help="run the built-in property suite")
    s.add_argument("--fast", action="store_true")
    s.add_argument("-o", "--outdir", default=None)

    s = sub.add_parser("sweep", help="phase-diagram sweep over (k0, k1, mu)")
    s.add_argument("--k0", required=True, help="value or start:step:stop")
    s.add_argument("--k1", required=True, help="value or start:step:stop")
    s.add_argument("--mu", required=True, help="value or start:step:stop")
    s.add_argument("--n", type=int, default=96)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("-o", "--outdir", default=None)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad flags, which matches the config-error code
        return int(exc.code) if exc.code else 0
    params = {k: v for k, v in vars(args).items() if k != "command"}
    try:
        config = RunConfig(command=args.command, parameters=params)
        bundle = run(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SlipstabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {bundle.manifest}")
    for f in bundle.data_files:
        print(f"wrote {f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
