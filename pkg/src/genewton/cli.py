"""Command-line interface: ``genewton {solve,certify,oracle,catalog}``.

``--problem`` accepts a problem file, a directory of ``*.json`` files (batch
mode, ``--out`` must then be a directory) or a catalog name such as
``ncp-sqrt`` or ``affine-box-nd:n=8,seed=3``.

Exit codes: 0 converged / certified, 2 certificate infeasible (solve still
converged), 3 not converged or solver failure, 64 malformed input.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import report as rpt
from .errors import CertificateInfeasible, DegeneracyError, GEError, NotPositiveError, ProblemFormatError
from .inner import ENUM_MAX_N, AffineGE, enumerate_oracle, forward_backward, semismooth_newton
from .majorant import scalar_sequence
from .monotone import BoxOperator, ZeroOperator
from .newton import feasibility_margins, verify_constants, build_certificate, newton_step, solve
from .problems import CATALOG, catalog_problem, load_problem

EXIT_OK = 0
EXIT_UNCERTIFIED = 2
EXIT_FAILED = 3
EXIT_USAGE = 64

log = logging.getLogger("genewton")


class UsageError(Exception):
    pass


def _resolve(spec: str):
    """Map ``--problem`` to a list of ``(stem, ProblemFile)``."""
    path = Path(spec)
    if path.is_dir():
        files = sorted(path.glob("*.json"))
        if not files:
            raise UsageError(f"no *.json problem files in {spec}")
        return [(f.stem, load_problem(f)) for f in files]
    if path.is_file():
        return [(path.stem, load_problem(path))]
    name, _, argstr = spec.partition(":")
    if name in CATALOG:
        params = {}
        for item in filter(None, argstr.split(",")):
            k, _, v = item.partition("=")
            params[k.strip()] = v.strip()
        try:
            return [(name, catalog_problem(name, **params))]
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad catalog parameters {argstr!r}: {exc}")
    raise UsageError(f"{spec!r} is neither a problem file, a directory nor a catalog name "
                     f"({', '.join(sorted(CATALOG))})")


def _label(stem, pf):
    return pf.name or stem


def run_solve(pf, stem, args):
    p = pf.to_problem()
    cfg = pf.to_config(tol_outer=args.tol, max_outer=args.max_iter, method=args.method,
                       seed=args.seed)
    trace = solve(p, cfg)
    code = {"converged": EXIT_OK, "certificate_infeasible": EXIT_UNCERTIFIED}.get(trace.status, EXIT_FAILED)
    return rpt.solve_report(_label(stem, pf), trace, args.method, args.seed), code


def run_certify(pf, stem, args):
    p = pf.to_problem()
    cfg = pf.to_config(seed=args.seed)
    out = {"schema": rpt.SCHEMA, "command": "certify", "problem": _label(stem, pf)}
    x1 = newton_step(p, p.x0, method=args.method)
    out["x1"] = x1
    if cfg.mode == "none":
        out.update(feasible=False, certificate=None, margins={}, t_values=[],
                   warnings=["no certificate data (mode none)"])
        return out, EXIT_UNCERTIFIED
    out["margins"] = feasibility_margins(p, cfg, x1)
    warnings = []
    try:
        cert = build_certificate(p, cfg, x1)
    except CertificateInfeasible as exc:
        cert = None
        warnings.append(f"certificate infeasible: {exc}")
    if cert is not None:
        warnings += verify_constants(p, cfg)
    feasible = cert is not None and not warnings
    out["feasible"] = feasible
    out["certificate"] = None if cert is None else rpt.certificate_block(cert)
    if cert is not None:
        seq = scalar_sequence(cert.spec, tol=1e-15, max_iter=100, cert=cert)
        out["t_values"] = seq.t_values
        out["scalar_converged"] = seq.converged
    else:
        out["t_values"] = []
    out["warnings"] = warnings
    return out, EXIT_OK if feasible else EXIT_UNCERTIFIED


def run_oracle(pf, stem, args):
    if pf.n > ENUM_MAX_N:
        raise UsageError(f"oracle enumerates 3^n active sets and is limited to n <= {ENUM_MAX_N}; "
                         f"problem has n = {pf.n}")
    T = pf.operator()
    if not isinstance(T, (BoxOperator, ZeroOperator)):
        raise UsageError("oracle needs a box (or zero) operator T")
    M, q = pf.affine_data()
    ge = AffineGE(M, q, T)
    sols = {
        "enumeration": enumerate_oracle(ge),
        "active_set_newton": semismooth_newton(ge, tol=1e-12),
        "forward_backward": forward_backward(ge, tol=1e-12),
    }
    names = list(sols)
    agreement = {a: {b: float(np.max(np.abs(sols[a].z - sols[b].z))) for b in names} for a in names}
    out = {
        "schema": rpt.SCHEMA, "command": "oracle", "problem": _label(stem, pf), "n": pf.n,
        "solutions": {k: v.z for k, v in sols.items()},
        "residuals": {k: v.residual for k, v in sols.items()},
        "iterations": {k: v.iterations for k, v in sols.items()},
        "agreement": agreement,
        "max_disagreement": max(max(row.values()) for row in agreement.values()),
    }
    return out, EXIT_OK


def _emit(text, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _render(report, fmt):
    if fmt == "csv":
        return rpt.to_csv(report)
    return rpt.dumps(report)


def _run(args):
    runner = {"solve": run_solve, "certify": run_certify, "oracle": run_oracle}[args.command]
    items = _resolve(args.problem)
    batch = Path(args.problem).is_dir()
    if batch:
        if args.out is None:
            raise UsageError("batch mode needs --out DIR")
        os.makedirs(args.out, exist_ok=True)
    worst = EXIT_OK
    for stem, pf in items:
        try:
            report, code = runner(pf, stem, args)
        except DegeneracyError as exc:
            print(f"{stem}: {exc} patterns={exc.patterns}", file=sys.stderr)
            code, report = EXIT_FAILED, None
        except NotPositiveError as exc:
            print(f"{stem}: {exc}", file=sys.stderr)
            code, report = EXIT_USAGE, None
        except GEError as exc:
            print(f"{stem}: {exc}", file=sys.stderr)
            code, report = EXIT_FAILED, None
        if report is not None:
            text = _render(report, args.report)
            out = None
            if batch:
                out = os.path.join(args.out, f"{stem}.{args.report}")
            elif args.out is not None:
                out = args.out
            _emit(text, out)
        worst = max(worst, code)
    return worst


def _catalog(args):
    if args.write is None:
        for name in sorted(CATALOG):
            print(name)
        return EXIT_OK
    os.makedirs(args.write, exist_ok=True)
    for name in sorted(CATALOG):
        pf = catalog_problem(name)
        with open(os.path.join(args.write, f"{name}.json"), "w", encoding="utf-8") as fh:
            fh.write(pf.dumps())
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="genewton", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--problem", required=True, help="problem file, directory or catalog name")
        sp.add_argument("--report", choices=("json", "csv"), default="json")
        sp.add_argument("--out", default=None, help="output file (directory in batch mode)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--method", choices=("auto", "ssn", "fb"), default="auto")

    s = sub.add_parser("solve", help="run the Newton iteration")
    common(s)
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--max-iter", type=int, default=50)
    common(sub.add_parser("certify", help="first step plus certificate, no full solve"))
    common(sub.add_parser("oracle", help="compare inner solvers against enumeration"))
    c = sub.add_parser("catalog", help="list or export catalog problems")
    c.add_argument("--write", metavar="DIR", default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "catalog":
            return _catalog(args)
        return _run(args)
    except ProblemFormatError as exc:
        print(f"malformed problem: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
