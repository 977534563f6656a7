"""Command line entry point: ``python -m clnrd`` or ``clnrd``.

Exit codes: 0 success, 1 assertion or verdict failure, 2 usage, 3 validation.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .errors import ReproductionFailed, ToolkitError
from .io import EXAMPLES, RunRecord, emit_csv, parse_problem, reproduce

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INVALID = 0, 1, 2, 3

RD_COLUMNS = ("d2", "lower_bits", "upper_bits", "gap_bits", "cln_margin")


def _caps(text: str | None) -> dict | None:
    if not text:
        return None
    out = {}
    for part in text.split(","):
        name, _, val = part.partition("=")
        if not val:
            raise argparse.ArgumentTypeError(f"caps entries look like C=5, got {part!r}")
        out[name.strip()] = int(val)
    return out


def _grid(text: str) -> list[float]:
    """``0,0.1,0.2`` or ``start:stop:step`` (stop included)."""
    if ":" in text:
        a, b, s = (float(v) for v in text.split(":"))
        n = int(round((b - a) / s))
        return [round(a + k * s, 12) for k in range(n + 1)]
    return [float(v) for v in text.split(",")]


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _opts(args):
    from .simplex_opt import OptOptions
    try:
        return OptOptions(restarts=args.restarts, seed=args.seed)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _given(inst, name: str | None):
    """Map a ``--given`` value to a conditioning map: a component name, psi1/psi2, or none."""
    if name in (None, "", "none"):
        return None
    if inst.components is not None:
        for i, c in enumerate(inst.components):
            if c.name == name:
                return inst.component_map(i)
    if name in ("psi1", "psi2", "Xt1", "Xt2"):
        (p,) = inst.need_psi(int(name[-1]))
        return p
    raise argparse.ArgumentTypeError(f"unknown --given {name!r}")


def _out(args, rows, columns):
    text = emit_csv(rows, columns, args.out)
    if args.out is None:
        sys.stdout.write(text)


def _record(args, command, inst, results, t0):
    if getattr(args, "record", None):
        rec = RunRecord(command, inst.digest() if inst is not None else None, args.seed,
                        {k: v for k, v in vars(args).items() if k not in ("func", "record")},
                        results, wall_time=time.perf_counter() - t0)
        with open(args.record, "w") as f:
            f.write(rec.to_json() + "\n")


# -- commands ---------------------------------------------------------------

def cmd_classify(args) -> int:
    from .classifiers import cln_margin, is_physically_degraded, markov_residual, stochastic_degradedness
    t0 = time.perf_counter()
    inst = parse_problem(args.instance)
    rel = args.relation
    if rel == "degraded":
        r = markov_residual(inst.joint, ["X"], ["Y2"], ["Y1"])
        holds = is_physically_degraded(inst.joint)
        row = {"relation": rel, "verdict": "holds" if holds else "fails", "margin": r}
    elif rel == "stochastic":
        res = stochastic_degradedness(inst.joint)
        holds = res.feasible
        row = {"relation": rel, "verdict": "holds" if holds else "fails", "margin": res.margin}
    else:
        L = _given(inst, args.given) if rel == "cln" else None
        v = cln_margin(inst.joint, L, _opts(args))
        holds = v.holds
        row = {"relation": rel, "verdict": v.verdict, "margin": v.margin_bits}
    row["given"] = args.given or ""
    _out(args, [row], ("relation", "given", "verdict", "margin"))
    _record(args, "classify", inst, row, t0)
    return EXIT_OK if holds else EXIT_FAIL


def cmd_solve_rd(args) -> int:
    from . import rd
    t0 = time.perf_counter()
    inst = parse_problem(args.instance)
    opts = _opts(args)
    d1, d2 = args.d1, args.d2
    if d1 == 0 and inst.psi[0] is not None and not args.hb_only:
        r = rd.theorem3_rate(inst, d2, opts)
        row = {"d2": d2, "lower_bits": r.lower_bits, "upper_bits": r.upper_bits, "gap_bits": r.gap_bits,
               "cln_margin": r.condition_checks.get("converse_margin", r.condition_checks["cln_margin"])}
    else:
        up = rd.hb_upper_bound(inst, d1, d2, opts, caps=args.caps)
        row = {"d2": d2, "lower_bits": None, "upper_bits": up.value, "gap_bits": None, "cln_margin": None}
    _out(args, [row], RD_COLUMNS)
    _record(args, "solve rd", inst, row, t0)
    return EXIT_OK


def cmd_solve_sr(args) -> int:
    from . import sr
    t0 = time.perf_counter()
    inst = parse_problem(args.instance)
    opts = _opts(args)
    if args.scalable:
        rep = sr.theorem6_region(inst, opts)
        t = rep.corner.thresholds if rep.corner else (None, None)
        row = {"kind": f"scalable-case-{rep.case}" if rep.case else "scalable-unmatched",
               "r1": t[0], "r12": t[1], "r123": None}
    else:
        if args.d3 is None:
            raise argparse.ArgumentTypeError("solve sr needs --d3 unless --scalable is given")
        rep = sr.theorem5_region(inst, args.d3, opts)
        c = rep.corner if rep.exact else rep.inner
        row = {"kind": "exact" if rep.exact else "inner", "r1": c.thresholds[0], "r12": c.thresholds[1],
               "r123": c.thresholds[2]}
        rows = [row]
        if not rep.exact:
            o = rep.outer.thresholds
            rows.append({"kind": "outer", "r1": o[0], "r12": o[1], "r123": o[2]})
        _out(args, rows, ("kind", "r1", "r12", "r123"))
        _record(args, "solve sr", inst, rows, t0)
        return EXIT_OK
    _out(args, [row], ("kind", "r1", "r12", "r123"))
    _record(args, "solve sr", inst, row, t0)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .rd import rd_curve_sweep
    t0 = time.perf_counter()
    inst = parse_problem(args.instance)
    rows = rd_curve_sweep(inst, args.d2, _opts(args), with_upper=not args.no_upper)
    out = [{c: getattr(r, c) for c in RD_COLUMNS} for r in rows]
    _out(args, out, RD_COLUMNS)
    _record(args, "sweep", inst, out, t0)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .identities import (csiszar_residual, random_letterization_instance, random_pairs_joint,
                             single_letterize, telescoping_residual)
    t0 = time.perf_counter()
    rng = np.random.default_rng(args.seed)
    tel, csz, let, mk = [], [], [], []
    for k in range(args.trials):
        j = random_pairs_joint(rng, 1 + k % 3)
        tel.append(telescoping_residual(j))
        csz.append(csiszar_residual(j))
    for k in range(args.letterization_trials):
        base, ch = random_letterization_instance(rng, 2)
        rep = single_letterize(base, ch, 2)
        let.append(rep.residual)
        mk.append(rep.markov_residual)
    rows = [
        {"identity": "telescoping", "trials": len(tel), "max_residual": max(tel, default=0.0), "tolerance": 1e-10},
        {"identity": "csiszar-sum", "trials": len(csz), "max_residual": max(csz, default=0.0), "tolerance": 1e-10},
        {"identity": "single-letterization", "trials": len(let), "max_residual": max(let, default=0.0),
         "tolerance": 1e-9},
        {"identity": "letterization-markov", "trials": len(mk), "max_residual": max(mk, default=0.0),
         "tolerance": 1e-9},
    ]
    for r in rows:
        r["pass"] = r["max_residual"] < r["tolerance"]
    _out(args, rows, ("identity", "trials", "max_residual", "tolerance", "pass"))
    _record(args, "verify-identities", None, rows, t0)
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL


def cmd_reproduce(args) -> int:
    t0 = time.perf_counter()
    rep = reproduce(args.example, _opts(args), raise_on_fail=False)
    for line in rep.lines():
        print(line)
    print(f"{'PASS' if rep.ok else 'FAIL'} {args.example}")
    _record(args, "reproduce", None, [c.__dict__ for c in rep.checks], t0)
    return EXIT_OK if rep.ok else EXIT_FAIL


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clnrd", description="Rate-distortion bounds with side information.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("--instance", required=True, help="problem file (JSON)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--restarts", type=_positive, default=16)
        sp.add_argument("--out", help="CSV output path (default stdout)")
        sp.add_argument("--record", help="write a JSON run record here")

    c = sub.add_parser("classify", help="test an ordering between Y2 and Y1")
    common(c)
    c.add_argument("--relation", choices=("cln", "less-noisy", "degraded", "stochastic"), default="cln")
    c.add_argument("--given", help="component name (e.g. X1) or psi1/psi2")
    c.set_defaults(func=cmd_classify)

    s = sub.add_parser("solve", help="solve an rd or sr problem")
    ss = s.add_subparsers(dest="problem", required=True)
    r = ss.add_parser("rd")
    common(r)
    r.add_argument("--d1", type=float, default=0.0)
    r.add_argument("--d2", type=float, default=0.0)
    r.add_argument("--caps", type=_caps, help="auxiliary caps, e.g. C=5,A=5,B=5")
    r.add_argument("--hb-only", action="store_true", help="report only the achievable upper bound")
    r.set_defaults(func=cmd_solve_rd)
    q = ss.add_parser("sr")
    common(q)
    q.add_argument("--d3", type=float)
    q.add_argument("--scalable", action="store_true")
    q.set_defaults(func=cmd_solve_sr)

    w = sub.add_parser("sweep", help="lower/upper bounds over a D2 grid")
    common(w)
    w.add_argument("--d2", type=_grid, required=True, help="comma list or start:stop:step")
    w.add_argument("--no-upper", action="store_true", help="skip the upper-bound solves")
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify-identities", help="numeric checks of the entropy identities")
    common(v, instance=False)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--letterization-trials", type=int, default=25)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("reproduce", help="re-derive a worked example")
    common(e, instance=False)
    e.add_argument("example", choices=EXAMPLES)
    e.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ReproductionFailed as e:
        print(str(e), file=sys.stderr)
        return EXIT_FAIL
    except ToolkitError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
