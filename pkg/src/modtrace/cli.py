"""Command line interface: trace tables, series reports and check suites.

Reports are JSON on stdout (``--format csv`` for trace tables). Exit codes:
0 success, 1 domain error, 2 precision failure. ``MT_THREADS`` caps the
number of worker processes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from modtrace import genseries, traces, verify
from modtrace.errors import DomainError, PrecisionError
from modtrace.qseries import ModularFunctionInput, builtin, load_input
from modtrace.quadforms import Group

EXIT_OK, EXIT_DOMAIN, EXIT_PRECISION = 0, 1, 2


@dataclass
class ReportDocument:
    command: list[str]
    input: str
    rows: list[dict] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    wall_clock: float | None = None

    def to_json(self) -> dict:
        doc = {"command": self.command, "input": self.input, "rows": self.rows}
        doc.update(self.extra)
        if self.wall_clock is not None:
            doc["wall_clock_s"] = round(self.wall_clock, 3)
        return doc


def _num(z: complex) -> dict:
    z = complex(z)
    return {"re": repr(z.real), "im": repr(z.imag)}


def resolve_function(spec: str, group: str | None = None) -> ModularFunctionInput:
    if spec.startswith("file:"):
        f = load_input(spec[5:])
    else:
        f = builtin(spec)
    if group is not None and Group.parse(group) != f.group:
        raise DomainError(f"{f.name} is given for {f.group.name}, not {group}")
    return f


def _discriminants(args) -> list[int]:
    if args.d is not None:
        return [args.d]
    if args.dmin is None or args.dmax is None:
        raise DomainError("give --d or both --dmin and --dmax")
    if args.dmin > args.dmax:
        raise DomainError("--dmin exceeds --dmax")
    return [d for d in range(args.dmin, args.dmax + 1) if d % 4 in (0, 1)]


def trace_rows(f: ModularFunctionInput, d: int, variants: tuple[str, ...], tol: float) -> list[dict]:
    rows = []
    for variant in variants:
        if variant != variants[0] and not (d > 0 and traces.is_square(d)):
            break  # the variants only differ at square discriminants
        res = traces.trace(f, d, variant=variant, tol=tol)
        row = {"d": d, "method": res.method, "value": _num(res.value), "error": repr(float(res.error))}
        if d > 0 and traces.is_square(d):
            row["variant"] = variant
        exact = _exact_value(f, d)
        if exact is not None:
            row["exact"] = str(exact)
        rows.append(row)
    return rows


def _exact_value(f: ModularFunctionInput, d: int) -> Fraction | None:
    if d == 0:
        return traces.trace_zero(f)
    if d < 0 and d % 4 in (0, 1) and f.order == 0 and f.is_holomorphic:
        return f.aplus[0] * traces.trace_cm_exact_constant(d, f.group)
    return None


def _trace_job(job):
    return trace_rows(*job)


def cmd_trace(args) -> ReportDocument:
    f = resolve_function(args.f, args.group)
    variants = ("ei", "digamma") if args.variant == "both" else (args.variant,)
    jobs = [(f, d, variants, args.prec) for d in _discriminants(args)]
    workers = genseries._workers(None)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_trace_job, jobs))
    else:
        chunks = [_trace_job(j) for j in jobs]
    rows = [r for chunk in chunks for r in chunk]
    doc = ReportDocument([], f.name, rows)
    if len(variants) == 2:
        diffs = {}
        for r in rows:
            if "variant" in r:
                diffs.setdefault(r["d"], []).append(complex(float(r["value"]["re"]), float(r["value"]["im"])))
        doc.extra["variant_agreement"] = {str(d): repr(abs(v[0] - v[1])) for d, v in diffs.items() if len(v) == 2}
    return doc


def _parse_tau(text: str) -> complex:
    try:
        u, v = (float(s) for s in text.split(","))
    except ValueError as exc:
        raise DomainError(f"--tau expects u,v, got {text!r}") from exc
    return complex(u, v)


def cmd_series(args) -> ReportDocument:
    f = resolve_function(args.f)
    ctx = traces.LatticeContext(convention=args.convention)
    S = genseries.assemble(f, ctx=ctx, d_max=args.dmax, variant=args.variant, tol=args.prec)
    doc = ReportDocument([], f.name, [t.to_json() for t in S.terms])
    doc.extra["series"] = {"d_max": S.d_max, "weight": str(S.weight), "convention": ctx.convention}
    if args.tau is not None:
        tau = _parse_tau(args.tau)
        val = genseries.evaluate_H(S, tau)
        doc.extra["evaluation"] = {"tau": _num(tau), "value": _num(val.value), "last_term": repr(val.last_term)}
    return doc


def cmd_verify(args) -> ReportDocument:
    checks = verify.run(args.suite, seed=args.seed)
    if args.suite in ("kernel", "all"):
        checks += verify.eta_singularities()
    doc = ReportDocument([], f"suite:{args.suite}", [c.to_json() for c in checks])
    doc.extra["passed"] = all(c.passed for c in checks)
    return doc


def cmd_lvalue(args) -> ReportDocument:
    f = resolve_function(args.f)
    ei_side, contour_side, err = traces.central_value_sides(f, tol=args.prec)
    rows = [{"side": "exponential-integral sum", "value": _num(ei_side)},
            {"side": "digamma contour", "value": _num(contour_side)}]
    doc = ReportDocument([], f.name, rows)
    doc.extra["difference"] = repr(abs(ei_side - contour_side))
    doc.extra["error"] = repr(float(err))
    return doc


def trace_csv(doc: ReportDocument) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "variant", "method", "re", "im", "exact", "error"])
    for r in doc.rows:
        w.writerow([r["d"], r.get("variant", ""), r["method"], r["value"]["re"], r["value"]["im"],
                    r.get("exact", ""), r["error"]])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--timing", action="store_true", help="include wall-clock time (breaks byte identity)")
    p = argparse.ArgumentParser(prog="modtrace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, f_default="j1"):
        sp.add_argument("--f", default=f_default, help="j1 | jm:<m> | const | file:<path>")
        sp.add_argument("--prec", type=float, default=1e-10, help="target absolute error")

    t = sub.add_parser("trace", parents=[shared], help="table of traces tr_d(f)")
    common(t)
    t.add_argument("--d", type=int)
    t.add_argument("--dmin", type=int)
    t.add_argument("--dmax", type=int)
    t.add_argument("--group", help="gamma1 | gamma0star:<p>; must match the input")
    t.add_argument("--variant", choices=("ei", "digamma", "both"), default="ei")
    t.add_argument("--format", choices=("json", "csv"), default="json")
    t.set_defaults(run=cmd_trace)

    s = sub.add_parser("series", parents=[shared], help="assemble the generating series")
    common(s)
    s.add_argument("--dmax", type=int, default=16)
    s.add_argument("--tau", help="evaluate at u,v")
    s.add_argument("--convention", choices=("intro", "lattice"), default="intro")
    s.add_argument("--variant", choices=("ei", "digamma"), default="ei")
    s.set_defaults(run=cmd_series)

    v = sub.add_parser("verify", parents=[shared], help="run residual check suites")
    v.add_argument("--suite", choices=verify.SUITES + ("all",), default="all")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(run=cmd_verify)

    lv = sub.add_parser("lvalue", parents=[shared], help="both sides of the central value identity")
    common(lv)
    lv.set_defaults(run=cmd_lvalue)
    return p


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        doc = args.run(args)
    except DomainError as exc:
        _emit({"command": argv, "error": {"kind": "domain", "message": str(exc)}})
        return EXIT_DOMAIN
    except PrecisionError as exc:
        _emit({"command": argv, "error": {"kind": "precision", "message": str(exc)}})
        return EXIT_PRECISION
    doc.command = argv
    if args.timing:
        doc.wall_clock = time.perf_counter() - start
    if args.command == "trace" and args.format == "csv":
        sys.stdout.write(trace_csv(doc))
    else:
        _emit(doc.to_json())
    if args.command == "verify" and not doc.extra["passed"]:
        return EXIT_PRECISION
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
