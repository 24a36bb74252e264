"""Command line entry point: ``incompat-lab <command> [flags]``."""

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import jointmeas, sdp, symspace
from .jointmeas import BUILTIN_POVMS, Configuration, Povm, UnsupportedConfiguration, verify_povm
from .observables import (
    BUILTIN_SETS, InvalidSetError, ObservableSet, is_equatorial, n_sytet, random_set, theta_family,
)

EXIT_OK, EXIT_FAIL, EXIT_NUMERIC, EXIT_USAGE, EXIT_SCHEMA, EXIT_IO = 0, 1, 2, 64, 65, 73

SURDS = [
    ("sqrt(3)/2", math.sqrt(3) / 2),
    ("2*sqrt(2)/3", 2 * math.sqrt(2) / 3),
    ("1/sqrt(3)", 1 / math.sqrt(3)),
    ("1/sqrt(2)", 1 / math.sqrt(2)),
    ("3*(sqrt(3)-sqrt(2))", 3 * (math.sqrt(3) - math.sqrt(2))),
    ("1", 1.0),
]


class UsageError(Exception):
    pass


class SchemaError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x):
    return f"{x:.12g}"


def nearest_surd(x, tol=1e-9):
    for name, val in SURDS:
        if abs(x - val) <= tol:
            return name
    return None


def _show_lambda(x):
    s = nearest_surd(x)
    return fmt(x) + (f"  (~ {s})" if s else "")


def parse_set(spec):
    """Built-in name, ``theta:<rad>``, ``nsytet:<n>:<rotfile>`` or a JSON path."""
    try:
        if spec in BUILTIN_SETS:
            return BUILTIN_SETS[spec]()
        if spec.startswith("theta:"):
            return theta_family(float(spec.split(":", 1)[1]))
        if spec.startswith("nsytet:"):
            _, n, path = spec.split(":", 2)
            with open(path) as fh:
                rots = json.load(fh)
            return n_sytet(int(n), [np.array(r, dtype=float) for r in rots])
    except (ValueError, InvalidSetError) as exc:
        raise UsageError(f"bad set spec {spec!r}: {exc}") from exc
    except OSError as exc:
        raise UsageError(f"cannot read {spec!r}: {exc}") from exc
    try:
        with open(spec) as fh:
            return ObservableSet.from_json(json.load(fh))
    except OSError as exc:
        raise UsageError(f"unknown set {spec!r} (not a built-in and not readable)") from exc
    except (ValueError, InvalidSetError) as exc:
        raise SchemaError(f"{spec}: {exc}") from exc


def parse_config(spec):
    try:
        return Configuration.parse(spec)
    except (ValueError, UnsupportedConfiguration) as exc:
        raise UsageError(f"bad configuration {spec!r}: {exc}") from exc


def _tol(args):
    tol = args.tol if args.tol is not None else sdp.default_tol()
    if not 1e-12 <= tol <= 1e-3:
        raise UsageError("--tol must lie in [1e-12, 1e-3]")
    return tol


def _emit(args, obj, text):
    if args.format == "json":
        print(json.dumps(obj, indent=2, default=float))
    else:
        print(text)


def cmd_threshold(args):
    obs = parse_set(args.set)
    config = parse_config(args.config)
    if config.kind == "parallel" and config.k > jointmeas.MAX_PARALLEL:
        raise UsageError(f"parallel:{config.k} unsupported (k <= {jointmeas.MAX_PARALLEL})")
    rep = sdp.solve(sdp.assemble_threshold_sdp(obs, config), _tol(args), args.method)
    obj = {"set": obs.label, "config": str(config), **rep.to_json()}
    lines = [
        f"set        {obs.label}",
        f"config     {config}",
        f"status     {rep.status}",
        f"lambda*    {_show_lambda(rep.lambda_star)}" + ("  [boundary]" if rep.boundary else ""),
        f"residual   {rep.primal_residual:.3g}",
        f"dual gap   {rep.dual_gap:.3g}",
        f"iterations {rep.iterations}",
        f"time       {rep.wall_time:.3f} s",
    ]
    _emit(args, obj, "\n".join(lines))
    return EXIT_OK if rep.status == "optimal" else EXIT_NUMERIC


def _load_povm(args):
    spec = args.povm
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name not in BUILTIN_POVMS:
            raise UsageError(f"unknown built-in POVM {name!r}; choose from {sorted(BUILTIN_POVMS)}")
        build, set_fn, config, lam = BUILTIN_POVMS[name]
        return build(), set_fn(), config, lam
    if spec.startswith("file:"):
        path = spec.split(":", 1)[1]
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
        try:
            povm = Povm.from_json(raw)
            obs = ObservableSet.from_json(raw["set"]) if "set" in raw else None
            config = Configuration.parse(raw["config"]) if "config" in raw else None
        except (ValueError, KeyError, InvalidSetError) as exc:
            raise SchemaError(f"{path}: {exc}") from exc
        if args.set:
            obs = parse_set(args.set)
        if args.config:
            config = parse_config(args.config)
        if obs is None or config is None:
            raise UsageError("file POVMs need a set and configuration (in the file or via --set/--config)")
        if len(obs) != povm.n_observables or config.copies != povm.copies:
            raise SchemaError(
                f"POVM has N={povm.n_observables}, copies={povm.copies}; "
                f"set has N={len(obs)}, configuration {config} has {config.copies} copies")
        return povm, obs, config, raw.get("lambda")
    raise UsageError("--povm must be builtin:<name> or file:<path>")


def cmd_verify(args):
    povm, obs, config, claimed = _load_povm(args)
    lam = args.__dict__.get("lambda")
    lam = claimed if lam is None else lam
    if lam is None or not 0 <= lam <= 1:
        raise UsageError("--lambda in [0, 1] is required")
    tol = args.tol if args.tol is not None else 1e-6
    rep = verify_povm(povm, config, obs, lam, tol)
    lines = [f"lambda        {fmt(lam)}", f"config        {config}"]
    for item in rep.per_constraint:
        lines.append(f"  r={item['r']} a={item['a']:+d}  residual {item['residual']:.3g}")
    lines += [
        f"completeness  {rep.completeness_residual:.3g}",
        f"min eig       {rep.min_eigenvalue:.3g}",
        f"max residual  {rep.max_residual:.3g}",
        f"result        {'PASS' if rep.passed else 'FAIL'} (tol {tol:g})",
    ]
    _emit(args, rep.to_json(), "\n".join(lines))
    return EXIT_OK if rep.passed else EXIT_FAIL


def _grid(args):
    if args.grid is None:
        return sdp.default_grid()
    if args.grid < 1:
        raise UsageError("--grid must be >= 1")
    if args.grid == 1:
        return [math.pi / 2]
    return sdp.default_grid(args.grid)


def cmd_sweep(args):
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    grid = _grid(args)
    tol = _tol(args)
    out = args.out or "sweep.csv"
    # check the path before spending minutes on solves
    try:
        open(out, "a").close()
    except OSError as exc:
        print(f"cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    rows = sdp.sweep_theta(grid, tol, args.workers)
    summary = sdp.reversal_regions(rows, tol=tol) if len(rows) > 1 else {
        "theta_ref": sdp.MUB_THETA, "regions": [], "below_ref": [], "above_ref": [], "strict_regions": []}
    summary["n_points"] = len(rows)
    summary["n_failed"] = sum(r.status2 != "optimal" or r.status11 != "optimal" for r in rows)
    summary_path = out.rsplit(".", 1)[0] + ".summary.json"
    try:
        with open(out, "w", newline="") as fh:
            fh.write(sdp.sweep_csv(rows))
        with open(summary_path, "w") as fh:
            json.dump(summary, fh, indent=2)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(rows)} rows to {out}; region summary in {summary_path}")
    print(f"regions: {len(summary['regions'])} (below ref {len(summary['below_ref'])}, "
          f"above ref {len(summary['above_ref'])})")
    return EXIT_OK if summary["n_failed"] == 0 else EXIT_NUMERIC


def cmd_no_comparison(args):
    tol = _tol(args)
    rows = [
        ("SyTri", BUILTIN_SETS["sytri"](), "parallel:3"),
        ("SyTri", BUILTIN_SETS["sytri"](), "antiparallel"),
        ("SyTet", BUILTIN_SETS["sytet"](), "parallel:3"),
        ("SyTet", BUILTIN_SETS["sytet"](), "antiparallel"),
        ("MUB", BUILTIN_SETS["mub"](), "parallel:2"),
        ("MUB", BUILTIN_SETS["mub"](), "antiparallel"),
    ]
    values = {}
    lines = [f"{'set':6} {'config':13} {'lambda*':>16}  status"]
    status_ok = True
    for name, obs, cfg in rows:
        rep = sdp.solve(sdp.assemble_threshold_sdp(obs, Configuration.parse(cfg)), tol)
        values[(name, cfg)] = rep.lambda_star
        status_ok &= rep.status == "optimal"
        lines.append(f"{name:6} {cfg:13} {fmt(rep.lambda_star):>16}  {rep.status}"
                     + (f"  ~ {nearest_surd(rep.lambda_star)}" if nearest_surd(rep.lambda_star) else ""))
    one = lambda x: x >= 1 - 10 * tol
    checks = {
        "sytri_parallel3_is_1": one(values[("SyTri", "parallel:3")]),
        "sytri_antiparallel_below_1": not one(values[("SyTri", "antiparallel")]),
        "sytet_parallel3_below_1": not one(values[("SyTet", "parallel:3")]),
        "sytet_antiparallel_is_1": one(values[("SyTet", "antiparallel")]),
    }
    lines.append("")
    lines += [f"{k:28} {'ok' if v else 'FAILED'}" for k, v in checks.items()]
    obj = {"values": {f"{k[0]}/{k[1]}": v for k, v in values.items()}, "checks": checks}
    _emit(args, obj, "\n".join(lines))
    if not status_ok:
        return EXIT_NUMERIC
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


def cmd_prop_check(args):
    tol = _tol(args)
    rng = np.random.default_rng(args.seed)
    if args.set:
        sets = [parse_set(args.set)]
    else:
        sets = [random_set(3, rng, equatorial=True) for _ in range(args.random)]
    lines = [f"seed {args.seed}"]
    results = []
    ok = True
    for obs in sets:
        k = args.copies if args.copies else len(obs) - 1
        wit = symspace.prop1_orthogonality_witness(obs, k)
        entry = {"set": obs.label, "N": len(obs), "copies": k, **wit.to_json()}
        good = wit.complement_dim == 2**k - (k + 1) and wit.perfect_joint_measurement_impossible
        lines.append(f"{obs.label}: copies {k}, Sym dim {wit.sym_dim}, complement dim "
                     f"{wit.complement_dim}, spans Sym: {wit.spans_symmetric}")
        if k >= 2 and len(obs) <= 4 and k <= jointmeas.MAX_PARALLEL:
            lam_k = sdp.threshold(obs, Configuration.parallel(k), tol)
            entry["lambda_parallel"] = lam_k
            good &= lam_k < 1 - 1e-6
            lines.append(f"  lambda^[{k}] = {fmt(lam_k)}")
        planar, normal = is_equatorial(obs)
        if planar and len(obs) <= 4:
            l2 = sdp.threshold(obs, Configuration.parallel(2), tol)
            l11 = sdp.threshold(obs, Configuration.antiparallel(), tol)
            entry.update(lambda_parallel2=l2, lambda_antiparallel11=l11, equatorial_gap=abs(l2 - l11))
            good &= abs(l2 - l11) < 2e-6
            lines.append(f"  equatorial: lambda^[2] = {fmt(l2)}, lambda^[1|1] = {fmt(l11)}, "
                         f"|diff| = {abs(l2 - l11):.3g}")
        entry["pass"] = bool(good)
        ok &= good
        results.append(entry)
    lines.append("PASS" if ok else "FAIL")
    _emit(args, {"seed": args.seed, "results": results, "pass": bool(ok)}, "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def build_parser():
    p = _Parser(prog="incompat-lab", description="Joint measurability thresholds for qubit spin observables.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--tol", type=float)
        sp.add_argument("--format", choices=["text", "json", "csv"], default="text")

    sp = sub.add_parser("threshold", help="optimal sharpness for a set and configuration")
    sp.add_argument("--set", required=True)
    sp.add_argument("--config", default="single")
    sp.add_argument("--method", choices=["direct", "bisection"], default="direct")
    common(sp)
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("verify", help="check a POVM certificate")
    sp.add_argument("--povm", required=True, help="builtin:<name> or file:<path>")
    sp.add_argument("--lambda", type=float, dest="lambda")
    sp.add_argument("--set")
    sp.add_argument("--config")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="two-copy thresholds over the theta family")
    sp.add_argument("--grid", type=int, help="number of interior points (default 199)")
    sp.add_argument("--out")
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("no-comparison", help="table showing reversed ordering across configurations")
    common(sp)
    sp.set_defaults(func=cmd_no_comparison)

    sp = sub.add_parser("prop-check", help="copy-number and equatorial property checks")
    sp.add_argument("--set")
    sp.add_argument("--copies", type=int)
    sp.add_argument("--random", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_prop_check)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except sdp.SolverError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
