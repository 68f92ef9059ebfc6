"""Command-line front end.

Exit codes: 0 success, 1 tolerance or expectation failure, 2 configuration
error, 3 integration diverged.
"""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    IntegrationDiverged,
    LiegeoError,
    NumericalRankAmbiguous,
    UnknownName,
)
from .figures import FIGURE_NAMES, compute_figure
from .filtration import CATALOG_NAMES, catalog, generate_hull
from .flows import CHAIN_KINDS, integrate
from .geodesics import euler_solution_arr, group_solution_arr
from .integrals import (
    PolySystem,
    rank2_so3_system,
    rank2_system,
    search_integrals,
    so4_known_integrals,
)
from .io import (
    load_config,
    trajectory_rows,
    write_csv,
    write_json,
    write_trajectory_csv,
)

log = logging.getLogger("liegeo")

EXIT_OK, EXIT_TOL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3
SIMULATE_TOL = 1e-8
COMPARE_TOL = 1e-6


def _setup_logging():
    level = os.environ.get("LIEGEO_LOG", "WARNING").upper()
    if level.isdigit():
        lvl = int(level)
    else:
        lvl = getattr(logging, level, logging.WARNING)
    logging.basicConfig(level=lvl, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


# ---------------------------------------------------------------- helpers

def _apply_overrides(cfg, args):
    if getattr(args, "step", None) is not None:
        cfg.step = args.step
    if getattr(args, "t_end", None) is not None:
        cfg.t_end = args.t_end
    if getattr(args, "tol", None) is not None:
        cfg.tol = args.tol
    return cfg


def _out_path(args, cfg_path: str, n_configs: int, suffix: str):
    """Output file for one config: --out itself, or a file inside --out for batches."""
    if args.out is None:
        return None
    out = Path(args.out)
    if n_configs > 1:
        out.mkdir(parents=True, exist_ok=True)
        return out / (Path(cfg_path).stem + suffix)
    return out


def _run_simulate(cfg_path, args, n_configs):
    out = io.StringIO()
    cfg = _apply_overrides(load_config(cfg_path, seed=args.seed), args)
    if cfg.spec is None:
        raise ConfigError("simulate needs a [field]")
    traj = integrate(cfg.spec, cfg.g0, cfg.x0, t_end=cfg.t_end, step=cfg.step,
                     monitors=cfg.monitors, reorthonormalize=cfg.reorthonormalize,
                     record_every=cfg.record_every)
    path = _out_path(args, cfg_path, n_configs, ".csv")
    if path is None:
        write_trajectory_csv(out, traj, include_g=cfg.write_g)
    else:
        write_trajectory_csv(path, traj, include_g=cfg.write_g)
        if args.plot:
            from .plotting import plot_drift
            plot_drift(traj.times, traj.monitors, path.with_name(path.stem + "_drift." + args.plot),
                       title=cfg.name)
    tol = SIMULATE_TOL if cfg.tol is None else cfg.tol
    drift = traj.drift()
    worst = max(drift.values(), default=0.0)
    summary = [f"# {cfg.name}: {cfg.spec.kind}, {len(traj) - 1} recorded steps, t_end={cfg.t_end!r}"]
    summary += [f"drift {k} {v:.3e}" for k, v in drift.items()]
    ok = worst <= tol
    summary.append(f"max drift {worst:.3e} (tol {tol:.1e}) {'ok' if ok else 'FAIL'}")
    return (EXIT_OK if ok else EXIT_TOL), out.getvalue(), "\n".join(summary) + "\n"


def _run_compare(cfg_path, args, n_configs):
    cfg = _apply_overrides(load_config(cfg_path, seed=args.seed), args)
    spec = cfg.spec
    if spec is None or spec.kind not in CHAIN_KINDS:
        raise ConfigError("compare needs a chain field (sub-riemannian-chain)")
    if spec.kind == "general-bogoyavlensky":
        raise ConfigError("compare has no closed form for a general A_0 operator")
    traj = integrate(spec, cfg.g0, cfg.x0, t_end=cfg.t_end, step=cfg.step, monitors=[],
                     reorthonormalize=cfg.reorthonormalize, record_every=cfg.record_every)
    f, s = spec.filtration, spec.s
    xs = euler_solution_arr(f, s, cfg.x0.coeffs, traj.times)
    gs = group_solution_arr(f, s, cfg.g0.mat, cfg.x0.coeffs, traj.times)
    dev_g = float(np.max(np.linalg.norm(gs - traj.g, axis=(-2, -1))))
    dev_x = float(np.max(np.linalg.norm(xs - traj.x, axis=-1)))
    tol = COMPARE_TOL if cfg.tol is None else cfg.tol
    ok = max(dev_g, dev_x) <= tol
    path = _out_path(args, cfg_path, n_configs, ".csv")
    if path is not None:
        h1, r1 = trajectory_rows(traj.times, xs, f.n, gs, source="closed-form")
        _, r2 = trajectory_rows(traj.times, traj.x, f.n, traj.g, source="ode")
        write_csv(path, h1, r1 + r2)
    text = (f"# {cfg.name}: {f.name or 'custom chain'}, s={list(s)}, step={cfg.step!r}\n"
            f"group deviation {dev_g:.3e}\nmomentum deviation {dev_x:.3e}\n"
            f"max deviation {max(dev_g, dev_x):.3e} (tol {tol:.1e}) {'ok' if ok else 'FAIL'}\n")
    return (EXIT_OK if ok else EXIT_TOL), "", text


def _run_hull(cfg_path, args, n_configs):
    cfg = load_config(cfg_path, seed=args.seed)
    if cfg.hull is None:
        raise ConfigError("hull needs a [hull] table")
    return _hull_report(cfg.hull, args, _out_path(args, cfg_path, n_configs, ".json"), cfg.name)


def _hull_report(h, args, path, name):
    rep = generate_hull(h["n"], h["seed"], names=h["names"])
    ambient = h["n"] * (h["n"] - 1) // 2
    lines = [f"# {name}: so({h['n']})", f"hull dimension {rep.dim} of {ambient}"]
    lines += [f"  {word} -> {dim}" for word, dim in rep.certificate]
    if path is not None:
        write_json(path, {"n": h["n"], "dim": rep.dim, "ambient_dim": ambient,
                          "certificate": [[w, d] for w, d in rep.certificate]})
    return EXIT_OK, "", "\n".join(lines) + "\n"


def _search_system(sd: dict):
    system = sd.get("system", "rank2-so4")
    nu = tuple(float(v) for v in sd.get("nu", (1.0, 0.5)))
    known_names = list(sd.get("known", ["H", "I1", "I2"] if system == "rank2-so4" else []))
    if system == "rank2-so4":
        sys_ = rank2_system(*nu)
        table = so4_known_integrals(*nu)
        keep = None
    elif system == "rank2-so3":
        sys_ = rank2_so3_system(*nu)
        table = so4_known_integrals(*nu)
        keep = ["x_23", "x_24", "x_34"]
    else:
        sys_ = PolySystem.zero(int(sd.get("m", 3)))
        table, keep = {}, None
    unknown = [k for k in known_names if k not in table]
    if unknown:
        raise ConfigError(f"unknown known integrals {unknown}; available: {sorted(table)}")
    known = [table[k] if keep is None else rank2_system(*nu).restrict_poly(table[k], keep)
             for k in known_names]
    known = [p for p in known if p]
    return sys_, known, {"system": system, "nu": list(nu), "known": known_names}


def _search_report(sd, args, path, name):
    sys_, known, meta = _search_system(sd)
    res = search_integrals(sys_, int(sd.get("degree", 2)), known)
    report = {**meta, **res.report()}
    code = EXIT_OK
    if args.expect_none and res.new_integrals:
        code = EXIT_TOL
    if path is not None:
        write_json(path, report)
        return code, "", f"# {name}: {len(res.new_integrals)} new integrals, report in {path}\n"
    buf = io.StringIO()
    write_json(buf, report)
    return code, buf.getvalue(), ""


def _run_search(cfg_path, args, n_configs):
    cfg = load_config(cfg_path, seed=args.seed)
    if cfg.search is None:
        raise ConfigError("search-integrals needs a [search] table")
    return _search_report(cfg.search, args, _out_path(args, cfg_path, n_configs, ".json"), cfg.name)


RUNNERS = {
    "simulate": _run_simulate,
    "compare": _run_compare,
    "hull": _run_hull,
    "search-integrals": _run_search,
}


def _guarded(cmd, cfg_path, args, n_configs):
    try:
        return RUNNERS[cmd](cfg_path, args, n_configs)
    except IntegrationDiverged as exc:
        return EXIT_DIVERGED, "", f"error: {cfg_path}: integration diverged: {exc}\n"
    except NumericalRankAmbiguous as exc:
        return EXIT_TOL, "", f"error: {cfg_path}: {exc} (gap {exc.gap:.2e})\n"
    except (ConfigError, LiegeoError, OSError, KeyError, ValueError) as exc:
        return EXIT_CONFIG, "", f"error: {cfg_path}: {exc}\n"


def _run_configs(cmd, args) -> int:
    configs = args.config or []
    if not configs:
        print(f"error: {cmd} needs --config", file=sys.stderr)
        return EXIT_CONFIG
    n = len(configs)
    if args.jobs > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_guarded, [cmd] * n, configs, [args] * n, [n] * n))
    else:
        results = [_guarded(cmd, c, args, n) for c in configs]
    for code, out, err in results:
        sys.stdout.write(out)
        # summaries go to stdout unless stdout carries CSV/JSON data
        (sys.stderr if out or code == EXIT_CONFIG or code == EXIT_DIVERGED else sys.stdout).write(err)
    return max(code for code, _, _ in results)


# --------------------------------------------------------- direct commands

def _cmd_figure(args) -> int:
    try:
        fs, traj, pts = compute_figure(args.name, t_end=args.t_end, step=args.step)
    except UnknownName as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationDiverged as exc:
        print(f"error: integration diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    header = ["t"] + ["x_" + lab[2:] for lab in fs.projection]
    rows = [[repr(float(t))] + [repr(float(v)) for v in p] for t, p in zip(traj.times, pts)]
    path = Path(args.out) if args.out else Path(f"{args.name}.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(path, header, rows)
    print(f"# {fs.name}: {fs.description}")
    print(f"wrote {path} ({len(rows)} points)")
    for k, v in traj.monitors.items():
        print(f"level {k} {v[0]:.12g} drift {np.max(np.abs(v - v[0])):.3e}")
    if args.plot:
        from .plotting import plot_projection
        img = plot_projection(pts, header[1:], path.with_suffix("." + args.plot), title=fs.name)
        print(f"wrote {img}")
    return EXIT_OK


def _cmd_catalog(args) -> int:
    if args.name:
        try:
            entry = catalog(args.name)
        except (UnknownName, LiegeoError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        f = entry.filtration
        print(f"{entry.name}: {entry.description}")
        print(f"  so({f.n}), level dims {list(f.dims)}, complement dims {list(f.complement_dims)}")
        print(f"  default index set {sorted(entry.index_set)}, s {list(entry.s)}")
        return EXIT_OK
    for name in CATALOG_NAMES:
        if "(" in name:
            print(f"{name:24s} (parametric)")
            continue
        entry = catalog(name)
        print(f"{name:24s} so({entry.filtration.n}) dims {list(entry.filtration.dims)}  {entry.description}")
    return EXIT_OK


def _cmd_hull_direct(args) -> int:
    from .filtration import two_generator_seed
    h = {"n": args.two_generators, "seed": two_generator_seed(args.two_generators), "names": ["v1", "v2"]}
    code, _, text = _hull_report(h, args, Path(args.out) if args.out else None, "two-generators")
    sys.stdout.write(text)
    return code


def _cmd_search_direct(args) -> int:
    sd = {"system": args.system, "degree": args.degree}
    if args.nu:
        sd["nu"] = args.nu
    if args.known is not None:
        sd["known"] = [k for k in args.known.split(",") if k]
    try:
        code, out, err = _search_report(sd, args, Path(args.out) if args.out else None, args.system)
    except NumericalRankAmbiguous as exc:
        print(f"error: {exc} (gap {exc.gap:.2e})", file=sys.stderr)
        return EXIT_TOL
    except (ConfigError, LiegeoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(out)
    sys.stdout.write(err)
    return code


# ------------------------------------------------------------------ parser

def _common(p, config=True, run=True):
    if config:
        p.add_argument("--config", action="append", metavar="PATH",
                       help="TOML or JSON run config; repeat for a batch")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers for a batch")
        p.add_argument("--seed", type=int, default=0, help="seed for random initial data")
    p.add_argument("--out", metavar="PATH", help="output file (directory for a batch)")
    if run:
        p.add_argument("--step", type=float, help="RK4 step")
        p.add_argument("--t-end", dest="t_end", type=float, help="final time")
        p.add_argument("--tol", type=float, help="pass/fail tolerance")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="liegeo", description="Sub-Riemannian geodesic flows on SO(n).")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a trajectory and report monitor drift")
    _common(p)
    p.add_argument("--plot", choices=("png", "svg", "pdf"), help="also save a drift plot")

    p = sub.add_parser("compare", help="closed-form geodesic vs RK4")
    _common(p)

    p = sub.add_parser("hull", help="bracket-generated hull of seed vectors")
    _common(p, run=False)
    p.add_argument("--two-generators", type=int, metavar="N", help="use the two-generator seed in so(N)")

    p = sub.add_parser("figure", help="emit a built-in projected curve")
    p.add_argument("name", choices=FIGURE_NAMES)
    _common(p, config=False)
    p.add_argument("--plot", choices=("png", "svg", "pdf"), help="also render the curve")

    p = sub.add_parser("search-integrals", help="polynomial first integrals up to a degree")
    _common(p, run=False)
    p.add_argument("--system", default="rank2-so4", choices=("rank2-so4", "rank2-so3", "zero"))
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--nu", type=float, nargs=2, metavar=("NU1", "NU2"))
    p.add_argument("--known", help="comma-separated names among H,I1,I2")
    p.add_argument("--expect-none", action="store_true",
                   help="exit 1 if any new integral is found")

    p = sub.add_parser("catalog", help="list built-in filtrations")
    p.add_argument("name", nargs="?")
    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    cmd = args.command
    if cmd == "figure":
        return _cmd_figure(args)
    if cmd == "catalog":
        return _cmd_catalog(args)
    if cmd == "hull" and not args.config:
        if args.two_generators is None:
            print("error: hull needs --config or --two-generators", file=sys.stderr)
            return EXIT_CONFIG
        return _cmd_hull_direct(args)
    if cmd == "search-integrals" and not args.config:
        return _cmd_search_direct(args)
    return _run_configs(cmd, args)


if __name__ == "__main__":
    sys.exit(main())
