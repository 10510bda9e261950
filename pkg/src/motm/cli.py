"""Command line experiments; every command writes a CSV table.

    motm smile|derivs|converge|mgf-limit|digital --config <file> [options]

Floats are written with 17 significant digits and every row carries a status.
The exit code is 0 unless a row ends with an error status (1) or the
arguments are invalid (2).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import plotting
from .bs import OptionQuery, bs_implied_vol
from .config import ModelSpec, bundled_config, load_config
from .energy import curvature_from_energy, skew_from_energy
from .errors import MotmError, RegimeError, UnsupportedOrderError
from .expansions import (
    MOTMSchedule,
    implied_vol_expansion,
    log_price_first_order,
    log_price_refined,
    log_price_second_order,
)
from .moderate import rescaled_cgf
from .oracles import MCConfig, mc_price

__all__ = ["main", "build_parser"]

OK = "ok"
ERROR_PREFIX = "error"


class UsageError(Exception):
    pass


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def _write_csv(columns, rows, out) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns + ["status"])
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns] + [row.get("status", OK)])
    text = buf.getvalue()
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
    return text


def _map_rows(fn, items, threads):
    """Evaluate rows, keeping the grid order whatever the thread count."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _guarded(fn):
    def run(x):
        try:
            return fn(x)
        except MotmError as exc:
            return {"status": f"{ERROR_PREFIX}: {type(exc).__name__}: {exc}"}
    return run


def _model(args) -> ModelSpec:
    path = Path(args.config)
    if path.is_file():
        return load_config(path)
    try:
        return bundled_config(args.config)
    except FileNotFoundError:
        raise UsageError(f"config {args.config!r} is neither a file nor a bundled config") from None


def _schedule(args) -> MOTMSchedule:
    return MOTMSchedule(theta=args.theta, beta=args.beta)


def _geometric(t_min, t_max, n):
    if not 0 < t_min <= t_max:
        raise UsageError("need 0 < tmin <= tmax")
    if n < 1:
        raise UsageError("n must be positive")
    if n == 1:
        return [float(t_max)]
    return [float(x) for x in np.geomspace(t_min, t_max, n)]


def _require_exact(spec: ModelSpec, command: str):
    if not spec.has_exact_pricer:
        raise UsageError(f"'{command}' needs an exact pricer (bs or heston), got '{spec.kind}'")


# ------------------------------------------------------------------ commands


def cmd_smile(args):
    spec = _model(args)
    _require_exact(spec, "smile")
    sched = _schedule(args)
    e = spec.energy_data()
    grid = _geometric(args.tmin, args.tmax, args.n)
    implied_vol_expansion(e, sched, grid[0])  # regime errors before any pricing

    @_guarded
    def row(t):
        k = sched.k(t)
        approx = implied_vol_expansion(e, sched, t)
        exact = bs_implied_vol(OptionQuery.from_log_moneyness(k, t), log_price=spec.log_call(k, t))
        return {"t": t, "k_t": k, "iv_exact": exact, "iv_approx": approx, "abs_diff": abs(exact - approx)}

    rows = [dict(r, t=t, k_t=sched.k(t)) for t, r in zip(grid, _map_rows(row, grid, args.threads))]
    columns = ["t", "k_t", "iv_exact", "iv_approx", "abs_diff"]
    if args.figure:
        plotting.smile_figure(rows, args.figure, title=f"theta={args.theta}, beta={args.beta}")
    return columns, rows


def cmd_derivs(args):
    spec = _model(args)
    e = spec.energy_data()
    row = {"lam2": e.lam2, "lam3": e.lam3, "lam4": e.lam4, "gamma0": e.gamma0,
           "sigma0": e.sigma0, "skew": skew_from_energy(e)}
    missing = []
    if e.lam4 is not None:
        row["curvature"] = curvature_from_energy(e)
    else:
        missing.append("lam4")
    if e.gamma0 is None:
        missing.append("gamma0")
    if missing:
        row["status"] = "unavailable: " + " ".join(missing)
    return ["lam2", "lam3", "lam4", "gamma0", "sigma0", "skew", "curvature"], [row]


def cmd_converge(args):
    spec = _model(args)
    _require_exact(spec, "converge")
    sched = _schedule(args)
    e = spec.energy_data()
    if args.decades < 1:
        raise UsageError("decades must be positive")
    grid = [args.tmax * 10.0 ** (-j) for j in range(args.decades)]

    @_guarded
    def row(t):
        notes = []
        out = {"log_c_first": log_price_first_order(e, sched, t).log_price}
        try:
            out["log_c_second"] = log_price_second_order(e, sched, t).log_price
        except RegimeError:
            notes.append("out-of-regime")
        try:
            out["log_c_refined"] = log_price_refined(e, sched, t).log_price
        except UnsupportedOrderError:
            notes.append("unsupported-order")
        out["log_c_exact"] = spec.log_call(sched.k(t), t)
        if "log_c_refined" in out:
            out["residual_refined"] = out["log_c_exact"] - out["log_c_refined"]
        if notes:
            out["status"] = " ".join(notes)
        return out

    rows = [dict(r, t=t, k=sched.k(t)) for t, r in zip(grid, _map_rows(row, grid, args.threads))]
    columns = ["t", "k", "log_c_exact", "log_c_first", "log_c_second", "log_c_refined", "residual_refined"]
    if args.figure:
        plotting.converge_figure(rows, args.figure, title=f"theta={args.theta}, beta={args.beta}")
    return columns, rows


def cmd_mgf_limit(args):
    spec = _model(args)
    _require_exact(spec, "mgf-limit")
    v0 = spec.spot_variance
    for beta in args.beta_list:
        if not 0 < beta < 0.5:
            raise UsageError(f"beta must lie in (0, 1/2), got {beta}")
    cells = [(p, beta, t) for p in args.p for beta in args.beta_list for t in args.t]

    @_guarded
    def row(cell):
        p, beta, t = cell
        value = rescaled_cgf(spec.log_mgf, p, beta, t)
        target = 0.5 * v0 * p * p
        if value == math.inf:
            return {"target": target, "status": "exploded"}
        err = abs(value - target) / abs(target) if target else abs(value - target)
        return {"rescaled_value": value, "target": target, "rel_err": err}

    rows = [dict(r, p=c[0], beta=c[1], t=c[2]) for c, r in zip(cells, _map_rows(row, cells, args.threads))]
    return ["p", "beta", "t", "rescaled_value", "target", "rel_err"], rows


def cmd_digital(args):
    spec = _model(args)
    _require_exact(spec, "digital")
    sched = _schedule(args)
    v0 = spec.spot_variance
    if spec.kind == "heston" and not spec.explosion_time(2.0) > 0:
        raise UsageError("the second moment explodes immediately; the transfer does not apply")
    mc = MCConfig(paths=args.mc, steps=args.steps, seed=args.seed) if args.mc else None

    @_guarded
    def row(t):
        k = sched.k(t)
        scale = t / (k * k)
        log_c = spec.log_call(k, t)
        log_p = spec.log_digital(k, t)
        out = {"scaled_log_call": scale * log_c, "scaled_log_digital": scale * log_p,
               "digital": math.exp(log_p)}
        if mc is not None:
            # blocks run in parallel inside; rows stay sequential for a fixed order
            r = mc_price(spec, OptionQuery.from_log_moneyness(k, t), mc, digital=True, threads=args.threads)
            out.update(mc_digital=r.value, mc_std_err=r.error_estimate,
                       mc_log_digital=math.log(r.value) if r.value > 0 else -math.inf)
        return out

    threads = 1 if mc is not None else args.threads
    rows = [dict(r, t=t, k=sched.k(t), md_limit=-0.5 / v0)
            for t, r in zip(args.t, _map_rows(row, args.t, threads))]
    columns = ["t", "k", "scaled_log_call", "scaled_log_digital", "md_limit", "digital"]
    if mc is not None:
        columns += ["mc_digital", "mc_std_err", "mc_log_digital"]
    if args.figure:
        plotting.digital_figure(rows, args.figure, title=f"theta={args.theta}, beta={args.beta}")
    return columns, rows


# ------------------------------------------------------------------ parser


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, schedule=False, figure=False):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=fn)
        p.add_argument("--config", required=True,
                       help="model config JSON file, or the name of a bundled config such as heston_fig2")
        p.add_argument("--out", default=None, help="CSV output path (default: standard output)")
        p.add_argument("--threads", type=_positive_int, default=1,
                       help="worker threads; output does not depend on this")
        if schedule:
            p.add_argument("--theta", type=float, default=0.4)
            p.add_argument("--beta", type=float, default=0.3)
        if figure:
            p.add_argument("--figure", default=None, help="also render a PNG figure to this path")
        return p

    p = add("smile", cmd_smile, "exact vs expansion implied volatility along k_t", schedule=True, figure=True)
    p.add_argument("--tmin", type=float, default=0.01)
    p.add_argument("--tmax", type=float, default=2.0)
    p.add_argument("--n", type=int, default=50)

    add("derivs", cmd_derivs, "energy derivatives, skew and curvature")

    p = add("converge", cmd_converge, "exact log price against the truncated expansions",
            schedule=True, figure=True)
    p.add_argument("--decades", type=int, default=3)
    p.add_argument("--tmax", type=float, default=0.1)

    p = add("mgf-limit", cmd_mgf_limit, "rescaled cgf against its quadratic limit")
    p.add_argument("--p", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    p.add_argument("--beta", dest="beta_list", type=float, nargs="+", default=[0.25, 0.4])
    p.add_argument("--t", type=float, nargs="+", default=[1e-3, 1e-4, 1e-5])

    p = add("digital", cmd_digital, "call and digital tails against the moderate deviation limit",
            schedule=True, figure=True)
    p.add_argument("--t", type=float, nargs="+", default=[0.1, 0.01, 0.001])
    p.add_argument("--mc", type=int, default=0, help="Monte Carlo paths for the digital (0: off)")
    p.add_argument("--steps", type=_positive_int, default=400, help="Monte Carlo time steps per year")
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        columns, rows = args.func(args)
    except (UsageError, MotmError) as exc:
        parser.exit(2, f"motm {args.command}: error: {exc}\n")
    _write_csv(columns, rows, args.out)
    failed = any(str(r.get("status", OK)).startswith(ERROR_PREFIX) for r in rows)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
