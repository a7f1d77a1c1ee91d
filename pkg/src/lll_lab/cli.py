"""Command-line front end: ``lll-lab <subcommand> ...``.

Exit codes: 0 success, 1 a check failed, 2 usage error.  Every file written is
accompanied by ``<file>.manifest.json`` recording the command, parameters,
seed, truncation, tool version, outputs and wall-clock time.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("lll-lab")
    except PackageNotFoundError:
        return "0+unknown"


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Path):
        return str(v)
    return v


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


class Session:
    """Collects output paths and writes one manifest per output file."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.t0 = time.perf_counter()
        self.outputs: list[str] = []

    def write_json(self, path, obj) -> None:
        Path(path).write_text(_dump(obj) + "\n")
        self.outputs.append(str(path))

    def write_text(self, path, text: str) -> None:
        Path(path).write_text(text)
        self.outputs.append(str(path))

    def track(self, path) -> None:
        self.outputs.append(str(path))

    def close(self) -> None:
        params = {k: v for k, v in vars(self.args).items() if k not in ("func", "config")}
        manifest = {
            "command": self.args.command,
            "parameters": params,
            "seed": params.get("seed"),
            "N": params.get("n"),
            "version": _version(),
            "outputs": self.outputs,
            "wall_clock_seconds": time.perf_counter() - self.t0,
        }
        for out in self.outputs:
            Path(out + ".manifest.json").write_text(_dump(manifest) + "\n")


def _emit(session: Session, obj, out) -> None:
    if out:
        session.write_json(out, obj)
    else:
        print(_dump(obj))


def _load_state(path) -> np.ndarray:
    from .fock import CoeffState

    return CoeffState.load(path).coeffs


def _complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


# ---------------------------------------------------------------------------
# subcommands

def _make_wave(args):
    from . import catalog

    fam = args.family
    if fam == "phi_n_alpha":
        return catalog.make_phi_n_alpha(args.index, args.alpha, args.n)
    if fam == "psi_b":
        return catalog.make_psi_b(args.b, args.n)
    if fam == "chi_alpha":
        return catalog.make_chi_alpha(args.alpha, args.n)
    if fam == "v_k":
        return catalog.make_v_k(args.alpha, args.k, args.n)
    if fam == "tempered_deg2":
        return catalog.make_tempered_deg2(args.variant, args.s, args.n, amplitude=args.amplitude)
    raise SystemExit(f"unknown family {fam!r}")


def cmd_catalog(args, session) -> int:
    from .catalog import FAMILIES
    from .fock import CoeffState

    if args.action == "list":
        for name, desc in FAMILIES.items():
            print(f"{name:14s} {desc}")
        return EXIT_OK
    wave = _make_wave(args)
    meta = wave.metadata()
    if args.output:
        CoeffState(wave.coeffs).save(args.output, metadata=_jsonable(meta))
        session.track(args.output)
    print(_dump(meta))
    return EXIT_OK


def cmd_residual(args, session) -> int:
    from .catalog import certify, fit_multipliers

    c = _load_state(args.state)
    if args.lam is None or args.mu is None:
        lam, mu, res = fit_multipliers(c, args.window)
        out = {"lambda": lam, "mu": mu, "residual": res, "fitted": True}
    else:
        out = {"lambda": args.lam, "mu": args.mu, "residual": certify(c, args.lam, args.mu, args.window), "fitted": False}
    out["stationary"] = out["residual"] < args.tol
    _emit(session, out, args.output)
    return EXIT_OK if out["stationary"] else EXIT_FAIL


def cmd_simulate(args, session) -> int:
    from .dynamics import IntegrationError, IntegratorConfig, MultiplierSpec, run
    from .fock import random_state

    if args.init:
        c0 = _load_state(args.init)
    else:
        if args.seed is None:
            raise SystemExit("--seed is required for random initial data")
        c0 = random_state(args.n, np.random.default_rng(args.seed), kind=args.kind)
    cfg = IntegratorConfig(args.method, dt=args.dt, t_end=args.t_end, snapshot_stride=args.stride)
    if args.multiplier == "random_class" and args.multiplier_seed is None:
        raise SystemExit("--multiplier-seed is required for random multipliers")
    mult = MultiplierSpec(args.multiplier, k=args.multiplier_k, seed=args.multiplier_seed)
    try:
        sim = run(c0, cfg, mult, weights=args.weights, track_manifold=args.track_manifold)
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    summary = sim.summary()
    if args.output:
        sim.write_jsonl(args.output)
        session.track(args.output)
        session.write_json(args.output + ".summary.json", summary)
    else:
        print(_dump(summary))
    return EXIT_OK


def cmd_minimize(args, session) -> int:
    from .fock import CoeffState
    from .variational import multistart, minimize_gmu

    if args.init:
        results = [minimize_gmu(args.mu, args.n, init=_load_state(args.init), spectrum=args.spectrum,
                                count_zeros=args.count_zeros)]
    else:
        if not args.seeds:
            raise SystemExit("--seeds is required without --init")
        results = multistart(args.mu, args.n, args.seeds, workers=args.workers)
    best = min(results, key=lambda r: r.objective)
    if not args.init and (args.spectrum or args.count_zeros):
        best = minimize_gmu(args.mu, args.n, init=best.minimizer, spectrum=args.spectrum, count_zeros=args.count_zeros)
    out = best.as_dict()
    out["all_objectives"] = [r.objective for r in results]
    if args.output:
        CoeffState(best.minimizer).save(args.output, metadata=_jsonable(out))
        session.track(args.output)
    print(_dump(out))
    return EXIT_OK if best.converged else EXIT_FAIL


def cmd_minimize_p(args, session) -> int:
    from .fock import CoeffState, magnetic_momentum
    from .variational import minimize_p_fixed

    H0 = args.h0 if args.h0 is not None else args.gamma * args.m0**2 / (8 * math.pi)
    res = minimize_p_fixed(H0, args.m0, args.n, seeds=args.seeds, spectrum=args.spectrum,
                           count_zeros=args.count_zeros)
    out = res.as_dict()
    out["Q_abs"] = abs(magnetic_momentum(res.minimizer))
    if args.output:
        CoeffState(res.minimizer).save(args.output, metadata=_jsonable(out))
        session.track(args.output)
    print(_dump(out))
    return EXIT_OK if res.converged else EXIT_FAIL


def cmd_sweep_mu(args, session) -> int:
    from concurrent.futures import ProcessPoolExecutor

    from .variational import sweep_mu

    mus = np.linspace(args.mu_min, args.mu_max, args.num)
    if args.workers > 1:
        chunks = np.array_split(mus, args.workers)
        with ProcessPoolExecutor(max_workers=args.workers) as ex:
            rows = [r for part in ex.map(sweep_mu, chunks, [args.n] * len(chunks)) for r in part]
    else:
        rows = sweep_mu(mus, args.n)
    fields = list(rows[0])
    lines = [",".join(fields)]
    for r in rows:
        lines.append(",".join("%.17g" % r[f] for f in fields))
    text = "\n".join(lines) + "\n"
    if args.output:
        session.write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_zeros(args, session) -> int:
    from .zeros import find_zeros, jensen_count_check

    c = _load_state(args.state)
    rep = find_zeros(c, radius=args.radius)
    out = rep.as_dict()
    out["count"] = rep.count
    if args.jensen is not None:
        out["jensen"] = jensen_count_check(c, args.jensen).as_dict()
    if args.counts_csv:
        rows = ["R,N"] + ["%.17g,%d" % (r, n) for r, n in rep.counts]
        session.write_text(args.counts_csv, "\n".join(rows) + "\n")
    _emit(session, out, args.output)
    return EXIT_OK


def cmd_stability(args, session) -> int:
    from .stability import linearize_phi_n, nonlinear_instability_experiment

    out = {}
    target = args.target
    if target != "psi_b":
        out["linearization"] = linearize_phi_n(int(target), args.k_max).as_dict()
    if args.t_end > 0:
        exp = nonlinear_instability_experiment(target if target == "psi_b" else int(target), args.eps, args.t_end,
                                               N=args.n, dt=args.dt, seed=args.seed, b=args.b)
        out["experiment"] = exp.as_dict()
        if args.trace_csv:
            rows = ["t,distance"] + ["%.17g,%.17g" % (t, d) for t, d in zip(exp.times, exp.distance)]
            session.write_text(args.trace_csv, "\n".join(rows) + "\n")
    _emit(session, out, args.output)
    return EXIT_OK


def cmd_bifurcate(args, session) -> int:
    from .fock import CoeffState
    from .stability import ContinuationError, branch_slope, continue_branch, fit_coefficient_envelope, remainder_check

    try:
        pts = continue_branch(args.k0, args.s_max, args.ds, N=args.n)
    except ContinuationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = ["s,b,residual,K,eps,file"]
    for i, p in enumerate(pts):
        name = f"branch_k{args.k0}_{i:04d}.json"
        K, eps = fit_coefficient_envelope(p.state)
        CoeffState(p.state).save(outdir / name, metadata=_jsonable({**p.as_row(), "K": K, "eps": eps, "k0": args.k0}))
        session.track(str(outdir / name))
        rows.append("%.17g,%.17g,%.17g,%.17g,%.17g,%s" % (p.s, p.b, p.residual, K, eps, name))
    session.write_text(str(outdir / "index.csv"), "\n".join(rows) + "\n")
    summary = {"points": len(pts), "s_reached": pts[-1].s, "b_first": pts[0].b, "remainder": remainder_check(pts, args.k0)}
    if len(pts) >= 2:
        summary["db_ds"] = branch_slope(pts)
    print(_dump(summary))
    return EXIT_OK if abs(pts[-1].s - args.s_max) < 1e-12 else EXIT_FAIL


def cmd_convert_h(args, session) -> int:
    from .variational import physical_to_mu

    try:
        conv = physical_to_mu(args.h, args.na, args.omega2)
    except ValueError as exc:
        raise SystemExit(str(exc))
    out = conv.as_dict()
    out["classification"] = ("mu < kappa0: every local or global minimizer has infinitely many zeros"
                             if conv.below_kappa0 else
                             "mu > kappa1: the Gaussian is the unique global minimizer" if conv.above_kappa1 else
                             "kappa0 <= mu <= kappa1: not covered by either threshold")
    _emit(session, out, args.output)
    return EXIT_OK


def cmd_dict_check(args, session) -> int:
    from .fock import bargmann_dictionary_check

    rep = bargmann_dictionary_check(alpha=args.alpha, kmax=args.kmax)
    out = rep.as_dict()
    _emit(session, out, args.output)
    return EXIT_OK if rep.max_deviation < args.tol else EXIT_FAIL


def cmd_repro(args, session) -> int:
    from .acceptance import CRITERIA, resolve, run_check

    if args.criterion == "list":
        for cid, (name, _, runtime) in CRITERIA.items():
            print(f"{cid:>2}  {name:16s} {runtime}")
        return EXIT_OK
    keys = list(CRITERIA) if args.criterion == "all" else [args.criterion]
    try:
        ids = [resolve(k) for k in keys]
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_USAGE
    ok = True
    results = []
    for cid in ids:
        res = run_check(cid)
        print("\n".join(res.lines()), flush=True)
        ok &= res.passed
        results.append(res.as_dict())
    if args.output:
        session.write_json(args.output, results)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lll-lab", description="Lowest-Landau-level nonlinear Schroedinger toolkit.")
    p.add_argument("--config", help="INI file; a [defaults] section and per-command sections supply defaults")
    p.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = p.add_subparsers(dest="command", metavar="command")

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("simulate", cmd_simulate, "integrate i dc/dt = N(c) and record conserved quantities")
    sp.add_argument("--init", help="initial coefficient file (JSON)")
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--kind", choices=["localized", "flat"], default="localized")
    sp.add_argument("--method", choices=["rk4", "implicit_midpoint"], default="rk4")
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--t-end", type=float, default=1.0)
    sp.add_argument("--stride", type=int, default=100)
    sp.add_argument("--weights", type=float, nargs="*", default=[])
    sp.add_argument("--multiplier", choices=["none", "random_class"], default="none")
    sp.add_argument("--multiplier-k", type=float, default=0.0)
    sp.add_argument("--multiplier-seed", type=int)
    sp.add_argument("--track-manifold", action="store_true")
    sp.add_argument("-o", "--output", help="JSON-lines snapshot stream")

    sp = add("catalog", cmd_catalog, "list or emit explicit stationary waves")
    sp.add_argument("action", choices=["list", "emit"])
    sp.add_argument("--family", default="phi_n_alpha",
                    choices=["phi_n_alpha", "psi_b", "chi_alpha", "v_k", "tempered_deg2"])
    sp.add_argument("--n", type=int, default=96)
    sp.add_argument("--index", type=int, default=0, help="n for phi_n_alpha")
    sp.add_argument("--alpha", type=_complex, default=1.0)
    sp.add_argument("--b", type=float, default=1.0)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--variant", choices=["gauss2", "z_gauss2"], default="gauss2")
    sp.add_argument("--s", type=float, default=0.0, help="s for gauss2, r for z_gauss2")
    sp.add_argument("--amplitude", type=float, default=1.0)
    sp.add_argument("-o", "--output")

    sp = add("residual", cmd_residual, "stationarity residual of a coefficient file")
    sp.add_argument("state")
    sp.add_argument("--lam", type=float)
    sp.add_argument("--mu", type=float)
    sp.add_argument("--window", type=int)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("-o", "--output")

    sp = add("minimize", cmd_minimize, "minimize G_mu = 8 pi H + mu P on the mass sphere")
    sp.add_argument("--mu", type=float, required=True)
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--seeds", type=int, nargs="+")
    sp.add_argument("--init")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--spectrum", action="store_true")
    sp.add_argument("--count-zeros", action="store_true")
    sp.add_argument("-o", "--output")

    sp = add("minimize-p", cmd_minimize_p, "minimize P at fixed H and M")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--gamma", type=float, help="8 pi H / M^2")
    g.add_argument("--h0", type=float)
    sp.add_argument("--m0", type=float, default=1.0)
    sp.add_argument("--n", type=int, default=48)
    sp.add_argument("--seeds", type=int, nargs="+", required=True)
    sp.add_argument("--spectrum", action="store_true")
    sp.add_argument("--count-zeros", action="store_true")
    sp.add_argument("-o", "--output")

    sp = add("sweep-mu", cmd_sweep_mu, "restricted Hessian minima at phi_0 and phi_1 over a mu grid (CSV)")
    sp.add_argument("--mu-min", type=float, default=0.05)
    sp.add_argument("--mu-max", type=float, default=1.2)
    sp.add_argument("--num", type=int, default=24)
    sp.add_argument("--n", type=int, default=32)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("-o", "--output")

    sp = add("zeros", cmd_zeros, "zeros of a state inside its trusted radius")
    sp.add_argument("state")
    sp.add_argument("--radius", type=float)
    sp.add_argument("--jensen", type=float, metavar="R", help="also run the Jensen check at radius R")
    sp.add_argument("--counts-csv")
    sp.add_argument("-o", "--output")

    sp = add("stability", cmd_stability, "linearization around phi_n and perturbed evolutions")
    sp.add_argument("target", help="n for phi_n, or psi_b")
    sp.add_argument("--k-max", type=int)
    sp.add_argument("--eps", type=float, default=1e-4)
    sp.add_argument("--t-end", type=float, default=0.0)
    sp.add_argument("--n", type=int, default=32)
    sp.add_argument("--dt", type=float, default=0.05)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--b", type=float, default=1.0)
    sp.add_argument("--trace-csv")
    sp.add_argument("-o", "--output")

    sp = add("bifurcate", cmd_bifurcate, "continue the branch leaving phi_0 along phi_k0")
    sp.add_argument("--k0", type=int, default=2)
    sp.add_argument("--s-max", type=float, default=0.05)
    sp.add_argument("--ds", type=float, default=0.005)
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--outdir", required=True)

    sp = add("convert-h", cmd_convert_h, "map (h, Na, Omega^2) to mu and classify against the thresholds")
    sp.add_argument("--h", type=float, required=True)
    sp.add_argument("--na", type=float, required=True)
    sp.add_argument("--omega2", type=float, required=True)
    sp.add_argument("-o", "--output")

    sp = add("dict-check", cmd_dict_check, "closed-form coefficient rows vs quadrature projections")
    sp.add_argument("--alpha", type=_complex, default=0.5)
    sp.add_argument("--kmax", type=int, default=20)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("-o", "--output")

    sp = add("repro", cmd_repro, "run an acceptance check by number or name ('list', 'all')")
    sp.add_argument("criterion")
    sp.add_argument("-o", "--output")
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = configparser.ConfigParser()
    if not cfg.read(known.config):
        parser.error(f"cannot read config file {known.config}")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in subparsers.choices.items():
        values = dict(cfg["defaults"]) if cfg.has_section("defaults") else {}
        if cfg.has_section(name):
            values.update(cfg[name])
        by_dest = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, raw in values.items():
            dest = key.replace("-", "_")
            action = by_dest.get(dest)
            if action is None:
                continue
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                defaults[dest] = cfg.BOOLEAN_STATES.get(raw.lower(), False)
            elif action.nargs in ("*", "+"):
                conv = action.type or str
                defaults[dest] = [conv(x) for x in raw.split()]
            else:
                defaults[dest] = (action.type or str)(raw)
            action.required = False
        sp.set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    session = Session(args)
    try:
        code = args.func(args, session)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(f"lll-lab {args.command}: {exc.code}", file=sys.stderr)
            return EXIT_USAGE
        raise
    except (ValueError, FileNotFoundError) as exc:
        print(f"lll-lab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    session.close()
    return code


if __name__ == "__main__":
    sys.exit(main())
