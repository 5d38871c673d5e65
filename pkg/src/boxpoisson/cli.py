"""Command-line harness: solve, converge, bench, tables.

Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from contextlib import nullcontext

import numpy as np

from . import solver as sv
from .config import RunConfig, load_config
from .errors import NUMERICAL_ERRORS, ConfigError
from .examples import BUILTINS, default_geometry
from .extension import sample_grid
from .geometry import build_geometry
from .quadtree import RefinementRule, dump_tree_csv
from .tables import build_near_tables, default_cache_path

log = logging.getLogger("boxpoisson")

VOLUME_COLUMNS = ["N_Omega", "N_V", "t_V", "N_Omega_per_t_V", "N_V_per_t_V"]
QBX_COLUMNS = ["N_Omega", "t_QP", "t_QE", "N_Omega_per_t_QP_plus_t_QE", "N_Omega_per_t_QE"]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def fitted_order(n_omega, errors):
    """Least-squares slope of log E against log N_Omega, returned as an order in h
    (= -2 x slope for uniform refinement in 2D)."""
    x = np.log(np.asarray(n_omega, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    slope = np.polyfit(x, y, 1)[0]
    return float(-2.0 * slope)


# ------------------------------------------------------------------ problem assembly
def geometry_from_config(cfg: RunConfig):
    gc = cfg.geometry
    if gc.builtin == "default":
        return default_geometry(gc.panels)
    return build_geometry(gc.curves, gc.panels, box_padding=gc.padding, box=gc.box)


def make_problem(cfg: RunConfig, geom, level=None, tolerance=None) -> sv.PoissonProblem:
    b = BUILTINS[cfg.problem]
    s = cfg.solver
    if level is None and tolerance is None:
        level = s.level
    if level is not None:
        rule = RefinementRule(0.0, s.weighting, level)
    else:
        rule = RefinementRule(s.tolerance if tolerance is None else tolerance, s.weighting, s.max_level)
    return sv.PoissonProblem(geom, b.f, b.u, s.extension, rule, s.eps_v, s.qbx_order, s.version, f_global=b.f)


def _diag_header():
    return VOLUME_COLUMNS + ["t_QP", "t_QE", "M", "n_leaves", "max_level", "t_ext", "t_tree", "f_l1", "interp_error",
                             "C_Omega", "a_priori_bound", "p_fmm"]


def _diag_row(d: sv.Diagnostics):
    return d.volume_row() + [d.t_qp, d.t_qe, d.m, d.n_leaves, d.max_level, d.t_ext, d.t_tree, d.f_l1, d.interp_error,
                             d.c_omega, d.bound, d.p_fmm]


# ------------------------------------------------------------------ commands
def cmd_solve(cfg: RunConfig, out, seed):
    geom = geometry_from_config(cfg)
    sol = sv.solve(make_problem(cfg, geom), seed=seed)
    b = BUILTINS[cfg.problem]
    pre = os.path.join(out, cfg.output.prefix)
    write_csv(pre + "_diagnostics.csv", _diag_header(), [_diag_row(sol.diagnostics)])
    pts = sv.sample_domain(geom, cfg.study.samples, seed)
    rep = sv.error_report(sol, b.u, b.grad, seed=seed, points=pts)
    write_csv(pre + "_errors.csv", ["problem", "N_Omega", "E_u", "E_grad", "n_samples", "seed"],
              [[cfg.problem, sol.diagnostics.n_omega, rep["E_u"], rep["E_grad"], rep["n_samples"], seed]])
    if cfg.output.sample_field:
        u, g = sv.eval_solution(sol, pts, np.ones(len(pts), np.int8))
        write_csv(pre + "_field.csv", ["x", "y", "u", "u_x", "u_y"], np.column_stack([pts, u, g]).tolist())
        write_csv(pre + "_extension.csv", ["x", "y", "f_e"], sample_grid(sol.extension).tolist())
    if cfg.output.tree_dumps:
        dump_tree_csv(sol.tree, pre + "_tree.csv")
    print(f"{cfg.problem}: N_Omega={sol.diagnostics.n_omega} E(u)={rep['E_u']:.3e} E(grad u)={rep['E_grad']:.3e}")
    return sol, rep


def _study_runs(cfg):
    runs = [("uniform", lv, None) for lv in cfg.study.levels]
    runs += [("adaptive", None, tol) for tol in cfg.study.tolerances]
    if not runs:
        raise ConfigError(f"{cfg.source}: [study] needs levels or tolerances")
    return runs


def cmd_converge(cfg: RunConfig, out, seed):
    if len(cfg.study.levels) + len(cfg.study.tolerances) < 3:
        raise ConfigError(f"{cfg.source}: [study] needs at least 3 levels or tolerances for a convergence study")
    geom = geometry_from_config(cfg)
    b = BUILTINS[cfg.problem]
    pts = sv.sample_domain(geom, cfg.study.samples, seed)  # same samples for every level
    rows = []
    for kind, lv, tol in _study_runs(cfg):
        sol = sv.solve(make_problem(cfg, geom, lv, tol), seed=seed)
        rep = sv.error_report(sol, b.u, b.grad, seed=seed, points=pts)
        d = sol.diagnostics
        rows.append([kind, -1 if lv is None else lv, 0.0 if tol is None else tol, d.n_omega, d.n_leaves, rep["E_u"],
                     rep["E_grad"]])
        print(f"{kind} level={lv} tol={tol}: N_Omega={d.n_omega} E(u)={rep['E_u']:.3e} E(grad u)={rep['E_grad']:.3e}")
        if cfg.output.tree_dumps:
            tag = f"L{lv}" if lv is not None else f"tol{tol:g}"
            dump_tree_csv(sol.tree, os.path.join(out, f"{cfg.output.prefix}_tree_{tag}.csv"))
    pre = os.path.join(out, cfg.output.prefix)
    write_csv(pre + "_convergence.csv", ["tree", "level", "tolerance", "N_Omega", "n_leaves", "E_u", "E_grad"], rows)
    orders = []
    for kind in ("uniform", "adaptive"):
        sel = [r for r in rows if r[0] == kind]
        if len(sel) >= 2:
            o_u = fitted_order([r[3] for r in sel], [r[5] for r in sel])
            o_g = fitted_order([r[3] for r in sel], [r[6] for r in sel])
            orders.append([kind, len(sel), o_u, o_g])
            print(f"{kind}: fitted order in h, potential {o_u:.2f}, gradient {o_g:.2f}")
    write_csv(pre + "_orders.csv", ["tree", "n_runs", "order_u", "order_grad"], orders)
    return rows, orders


def cmd_bench(cfg: RunConfig, out, seed):
    geom = geometry_from_config(cfg)
    vol, qb = [], []
    for kind, lv, tol in _study_runs(cfg):
        sol = sv.solve(make_problem(cfg, geom, lv, tol), seed=seed)
        d = sol.diagnostics
        vol.append([kind, -1 if lv is None else lv, 0.0 if tol is None else tol] + d.volume_row())
        qb.append([kind, -1 if lv is None else lv, 0.0 if tol is None else tol] + d.qbx_row())
        print(f"{kind} level={lv} tol={tol}: N_Omega={d.n_omega} N_V={d.n_v} t_V={d.t_v:.3f} "
              f"t_QP={d.t_qp:.3f} t_QE={d.t_qe:.3f}")
        if cfg.output.tree_dumps:
            tag = f"L{lv}" if lv is not None else f"tol{tol:g}"
            dump_tree_csv(sol.tree, os.path.join(out, f"{cfg.output.prefix}_tree_{tag}.csv"))
    pre = os.path.join(out, cfg.output.prefix)
    head = ["tree", "level", "tolerance"]
    write_csv(pre + "_volume_times.csv", head + VOLUME_COLUMNS, vol)
    write_csv(pre + "_qbx_times.csv", head + QBX_COLUMNS, qb)
    return vol, qb


def cmd_tables(cfg: RunConfig, out, seed):
    path = default_cache_path()
    tabs = build_near_tables(cache_path=path, use_cache=True)
    print(f"{len(tabs.tables)} near-field tables cached at {path}")
    return tabs


COMMANDS = {"solve": cmd_solve, "converge": cmd_converge, "bench": cmd_bench, "tables": cmd_tables}


def build_parser():
    p = argparse.ArgumentParser(prog="boxpoisson", description="Adaptive box-code Poisson solver")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="run configuration (INI)")
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.add_argument("--threads", type=int, help="BLAS thread limit")
    p.add_argument("--seed", type=int, help="sampling seed (unsigned 64-bit, overrides [study] seed)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        seed = cfg.study.seed if args.seed is None else args.seed
        if not 0 <= seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be positive")
        out = args.out or cfg.output.dir
        os.makedirs(out, exist_ok=True)
        if args.threads is not None:
            from threadpoolctl import threadpool_limits

            limit = threadpool_limits(args.threads)
        else:
            limit = nullcontext()
        with limit:
            COMMANDS[args.command](cfg, out, seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
