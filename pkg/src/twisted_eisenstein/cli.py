"""Command line front end.

Exit codes: 0 success, 2 parse or configuration error, 3 violated mathematical
precondition (convergence cone, non-splitting symbol, matrix outside the group).
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys

import numpy as np

from . import linalg
from .config import ENV_PREFIX, ConfigError, RunConfig, fixture_path
from .eisenstein import (LinearFormTable, OutsideConvergence, classical_eisenstein,
                         combined_series, coset_sample, enumerate_cosets, shift_residual,
                         sl3_twisted_partial_sum, twisted_eisenstein)
from .lie import ParabolicType, cone_contains, iwasawa, sl2_parameter
from .modsym import (InvisibleSymbol, NotASplitting, SubspaceTuple, norm, projective_point,
                     reduce_to_unimodular)
from .periods import (NotInGroup, PeriodCocycle, UnsupportedCusp, ap_point_count,
                      local_L_factor, parse_eigen_data)

EXIT_PARSE = 2
EXIT_MATH = 3


class UsageError(ValueError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def fmt_complex(z: complex) -> str:
    return f"{fmt(z.real)} {fmt(z.imag)}"


def ndjson(record: dict) -> str:
    def enc(v):
        if isinstance(v, float):
            return "null" if not math.isfinite(v) else fmt(v)
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(enc(x) for x in v) + "]"
        return json.dumps(v)
    return "{" + ", ".join(f"{json.dumps(k)}: {enc(v)}" for k, v in record.items()) + "}"


def parse_matrix(text: str):
    try:
        rows = [tuple(int(x) for x in r.split(",")) for r in text.split(";")]
        return linalg.as_matrix(rows)
    except ValueError as exc:
        raise UsageError(f"cannot parse matrix {text!r}; use rows like '1,1;0,1'") from exc


def parse_float_matrix(text: str) -> np.ndarray:
    try:
        m = np.array([[float(x) for x in r.split(",")] for r in text.split(";")])
    except ValueError as exc:
        raise UsageError(f"cannot parse matrix {text!r}") from exc
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise UsageError("matrix must be square")
    return m


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise UsageError(f"cannot parse complex number {text!r}") from exc


def parse_vector(text: str) -> list[complex]:
    try:
        return [parse_complex(x) for x in text.split(",")]
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(f"cannot parse vector {text!r}") from exc


def load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    for name in ("bound", "tolerance", "tail_constant", "workers", "max_terms"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    return cfg.validate()


# ---------------------------------------------------------------------------


def cmd_reduce(args, out):
    try:
        w = SubspaceTuple.parse(args.symbol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    chain = reduce_to_unimodular(w)
    print(f"symbol [{w}]", file=out)
    print(f"norm {norm(w)}", file=out)
    print(f"length {len(chain)}", file=out)
    print(chain.format(), file=out)


def cmd_period(args, out):
    cfg = load_config(args)
    gamma = parse_matrix(args.gamma)
    if len(gamma) != 2:
        raise UsageError("gamma must be a 2x2 matrix")
    cocycle = PeriodCocycle(cfg.form(), cfg.tolerance)
    value = cocycle.value(gamma)
    print(f"[gamma]_f {fmt_complex(value)}", file=out)
    print(f"phi(gamma.Xi(inf,0)) {fmt_complex(value + cocycle.phi_inf_zero)}", file=out)
    print(f"-L(1,f) {fmt(cocycle.phi_inf_zero)}", file=out)


def cmd_eisenstein(args, out):
    cfg = load_config(args)
    z = parse_complex(args.z)
    if args.t is not None:
        t = parse_complex(args.t)
        if not cone_contains(sl2_parameter(t), ParabolicType.minimal(2)):
            raise OutsideConvergence(
                f"Re t = {t.real!r} <= 1/2: the series only converges for Re t > 1/2")
        s, key, param = t + 0.5, "t", t
    else:
        s = parse_complex(args.s) if args.s is not None else 2.0
        key, param = "s", s
    if s.real <= 1:
        raise OutsideConvergence(f"Re s = {s.real!r} <= 1: the series only converges for Re s > 1")
    cocycle = None
    if args.twisted or args.verify_shift:
        cocycle = PeriodCocycle(cfg.form(), cfg.tolerance)
        level = cfg.level
    else:
        level = args.level if args.level is not None else cfg.level
    cosets = enumerate_cosets(level, cfg.bound)
    if args.twisted and key == "t":
        try:
            w = SubspaceTuple.parse(args.symbol)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        res = combined_series(t, z, w, cocycle, cosets, cfg.tail_constant, cfg.workers)
    elif args.twisted:
        res = twisted_eisenstein(z, s, cosets, cocycle, cfg.tail_constant, cfg.workers)
    else:
        res = classical_eisenstein(z, s, cosets, cfg.tail_constant, cfg.workers)
    record = res.record("s")
    record[key] = [complex(param).real, complex(param).imag]
    if key == "t":
        record.pop("s")
    record["level"] = level
    record["twisted"] = bool(args.twisted)
    if args.verify_shift:
        gamma = parse_matrix(args.verify_shift)
        r, b = shift_residual(gamma, z, s, cosets, cocycle, cfg.tail_constant, cfg.workers)
        record["shift_residual"] = r
        record["shift_bound"] = b
    print(ndjson(record), file=out)


def cmd_sl3(args, out):
    if args.action == "point":
        try:
            w = SubspaceTuple.parse(args.symbol)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        print(projective_point(w, args.modulus), file=out)
    elif args.action == "lfactor":
        path = args.eigen or fixture_path("gamma0_53_eigen.txt")
        try:
            data = parse_eigen_data(open(path).read())
        except OSError as exc:
            raise UsageError(f"cannot read eigen data: {exc}") from exc
        if args.p not in data:
            raise UsageError(f"no eigenvalue for p = {args.p} in {path}")
        coeffs = local_L_factor(data[args.p], args.p, args.level)
        print(" ".join(str(c) for c in coeffs), file=out)
    else:
        path = args.table or fixture_path("table_p2_f5.txt")
        try:
            table = LinearFormTable.parse(open(path).read())
        except OSError as exc:
            raise UsageError(f"cannot read table: {exc}") from exc
        bad = table.validate()
        if bad:
            print(f"warning: table fails the relation set at {len(bad)} points", file=sys.stderr)
        try:
            w = SubspaceTuple.parse(args.symbol)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        lam = np.array([c.real for c in parse_vector(args.lam)])
        g = parse_float_matrix(args.g) if args.g else np.eye(3)
        sample = coset_sample(table.modulus, args.samples, random.Random(args.seed))
        value = sl3_twisted_partial_sum(w, table, lam, g, sample)
        print(ndjson({"modulus": table.modulus, "samples": len(sample),
                      "value_re": value.real, "value_im": value.imag}), file=out)


def cmd_iwasawa(args, out):
    g = parse_float_matrix(args.matrix)
    data = iwasawa(g)
    for name, m in (("p", data.p_part), ("k", data.k_part)):
        print(name, file=out)
        for row in m:
            print(" ".join(fmt(x) for x in row), file=out)


def cmd_cone(args, out):
    if args.t is not None:
        lam = sl2_parameter(parse_complex(args.t))
        P = ParabolicType.minimal(2)
    else:
        if args.lam is None:
            raise UsageError("give --t or --lambda")
        lam = np.array(parse_vector(args.lam))
        comp = tuple(int(x) for x in args.composition.split(",")) if args.composition else (1,) * len(lam)
        P = ParabolicType(comp)
    print("inside" if cone_contains(lam, P) else "outside", file=out)


def cmd_ap(args, out):
    cfg = load_config(args)
    print(ap_point_count(cfg.curve_obj(), args.p), file=out)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tweis",
        description="Modular symbols and Eisenstein series twisted by modular symbols.",
        epilog=f"Numeric options can also be set through {ENV_PREFIX}<NAME> environment "
               f"variables, e.g. {ENV_PREFIX}BOUND=400.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=str(fixture_path("curve_11a.yaml")),
                       help="YAML run configuration (default: the level 11 fixture)")
        p.add_argument("--bound", type=int)
        p.add_argument("--tolerance", type=float)
        p.add_argument("--tail-constant", dest="tail_constant", type=float)
        p.add_argument("--max-terms", dest="max_terms", type=int)
        p.add_argument("--workers", type=int)

    p = sub.add_parser("reduce", help="unimodular decomposition of a symbol")
    p.add_argument("symbol", help='columns as "1,0 5,2"')
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("period", help="period cocycle [gamma]_f and phi values")
    common(p)
    p.add_argument("gamma", help="matrix rows, e.g. '1,0;11,1'")
    p.set_defaults(func=cmd_period)

    p = sub.add_parser("eisenstein", help="classical or twisted Eisenstein partial sums")
    common(p)
    p.add_argument("--z", default="1j")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--s")
    grp.add_argument("--t")
    p.add_argument("--level", type=int, help="level of an untwisted series (default: config)")
    p.add_argument("--twisted", action="store_true",
                   help="twisted series; with --t, the combined series of --symbol")
    p.add_argument("--symbol", default="1,0 0,1",
                   help="compatible tuple for the combined series (default: the standard one)")
    p.add_argument("--verify-shift", dest="verify_shift", metavar="GAMMA")
    p.set_defaults(func=cmd_eisenstein)

    p = sub.add_parser("sl3", help="SL_3 points, local L-factors and partial sums")
    p.add_argument("action", choices=["point", "lfactor", "partial-sum"])
    p.add_argument("--symbol", default="1,0,0 0,1,0 0,0,1")
    p.add_argument("--modulus", type=int, default=53)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--level", type=int, default=53)
    p.add_argument("--eigen")
    p.add_argument("--table")
    p.add_argument("--lambda", dest="lam", default="1.6,0,-1.6")
    p.add_argument("--g")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sl3)

    p = sub.add_parser("iwasawa", help="Iwasawa decomposition g = p k")
    p.add_argument("matrix", help="rows, e.g. '2,0;0,0.5'")
    p.set_defaults(func=cmd_iwasawa)

    p = sub.add_parser("cone-check", help="test the convergence cone")
    p.add_argument("--t")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--composition")
    p.set_defaults(func=cmd_cone)

    p = sub.add_parser("ap", help="a_p by point counting")
    common(p)
    p.add_argument("p", type=int)
    p.set_defaults(func=cmd_ap)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else 0
    try:
        args.func(args, out)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OutsideConvergence, NotASplitting, NotInGroup, UnsupportedCusp,
            InvisibleSymbol) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH
    return 0


if __name__ == "__main__":
    sys.exit(main())
