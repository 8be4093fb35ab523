"""Command-line front end: constraint analysis, trajectory simulation,
grid quantization, and the acceptance suite.

Exit codes: 0 success, 1 analysis contradiction, 2 I/O error, 3 any
acceptance criterion failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import eom, expr, hjpde, integrability, legendre, quantize, systems, verify
from .expr import parse as parse_expr
from .integrability import InconsistentDynamicsError
from .legendre import AnalysisError

EXIT_OK = 0
EXIT_CONTRADICTION = 1
EXIT_IO = 2
EXIT_VERIFY = 3

FLOAT_FMT = "%.17g"


def _load(selector):
    try:
        return systems.load_system(selector)
    except OSError as e:
        raise _IOFailure(f"cannot read system definition: {e}")


class _IOFailure(Exception):
    pass


def _analyzed(selector, seed):
    sys_ = _load(selector)
    legendre.analyze(sys_, seed=seed)
    return hjpde.build_constraints(sys_, seed=seed)


def _parse_span(text):
    lo, _, hi = text.partition(":")
    return float(lo), float(hi)


def _parse_initial(text, hj):
    """Parse "q=1,p=0" style initial data.

    A key with several comma-separated values ("p=3,0,0") spreads over the
    like-named symbols in declaration order; unnamed symbols default to 0.
    """
    q_syms = list(hj.q_symbols)
    p_syms = list(hj.p_symbols)
    groups = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "=" in piece:
            key, _, val = piece.partition("=")
            groups.append((key.strip(), [float(val)]))
        else:
            if not groups:
                raise ValueError(f"value {piece!r} has no key")
            groups[-1][1].append(float(piece))
    values = {s: 0.0 for s in q_syms + p_syms}
    for key, vals in groups:
        if len(vals) == 1 and key in values:
            values[key] = vals[0]
            continue
        if key == "p" or key.startswith("p"):
            targets = p_syms
        elif key == "q":
            targets = q_syms
        else:
            raise ValueError(f"unknown initial symbol {key!r}")
        if len(vals) > len(targets):
            raise ValueError(f"too many values for {key!r}")
        for s, v in zip(targets, vals):
            values[s] = v
    return values


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    try:
        return open(path, "w", newline=""), True
    except OSError as e:
        raise _IOFailure(f"cannot open output {path!r}: {e}")


def cmd_analyze(args):
    hj = _analyzed(args.system, args.seed)
    report = hjpde.report_dict(hj)
    report["schema"] = 1
    rep = integrability.consistency_iterate(hj, seed=args.seed)
    report["integrability"] = rep.to_dict()
    problems = hjpde.structural_checks(hj)
    if problems:
        report["structural_warnings"] = problems
    out, close = _open_out(args.output)
    json.dump(report, out, indent=2, sort_keys=True)
    out.write("\n")
    if close:
        out.close()
    return EXIT_OK


def cmd_simulate(args):
    hj = _analyzed(args.system, args.seed)
    em = eom.derive_eom(hj)
    initial = _parse_initial(args.initial, hj)
    t0, t1 = _parse_span(args.t_span)
    traj = eom.integrate(em, initial, (t0, t1), args.dt)
    names = traj.names[:-1]
    header = [traj.parameter] + names + ["Z", "constraint_residual"]
    out, close = _open_out(args.output)
    w = csv.writer(out)
    w.writerow(header)
    for i, t in enumerate(traj.params):
        row = [FLOAT_FMT % t]
        row += [FLOAT_FMT % v for v in traj.data[i]]
        row.append(FLOAT_FMT % traj.residuals[i])
        w.writerow(row)
    if close:
        out.close()
    worst = float(traj.residuals.max())
    if worst > args.tol_surface:
        print(f"warning: constraint residual {worst:.3e} exceeds "
              f"--tol-surface {args.tol_surface:.1e}", file=sys.stderr)
    return EXIT_OK


def _parse_kv_numbers(text):
    out = {}
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        key, _, val = piece.partition("=")
        out[key.strip()] = float(val)
    return out


def _parse_initial_state(text, grid, domain, boundary):
    if not text.startswith("gaussian:") and text != "gaussian":
        raise ValueError(f"unsupported initial state {text!r}")
    opts = _parse_kv_numbers(text.partition(":")[2]) if ":" in text else {}
    return quantize.gaussian_packet(
        center=opts.pop("center", 0.0), width=opts.pop("width", 1.0),
        k=opts.pop("k", 0.0), grid=grid, domain=domain, boundary=boundary)


def cmd_quantize(args):
    if (args.potential is None) == (args.relativistic is None):
        raise ValueError("exactly one of --potential/--relativistic required")
    domain = _parse_span(args.domain)
    if args.potential is not None:
        h = parse_expr(f"p^2/2 + ({args.potential})")
        op = quantize.build_operator(h, "q", "p", grid=args.grid,
                                     domain=domain)
        boundary = "dirichlet"
    else:
        params = _parse_kv_numbers(args.relativistic)
        params.setdefault("m", 1.0)
        params.setdefault("c", 1.0)
        op = quantize.build_operator(parse_expr("sqrt(p^2 + m^2*c^2)"),
                                     "q", "p", grid=args.grid, domain=domain,
                                     parameters=params)
        boundary = "periodic"
    wf = _parse_initial_state(args.initial, args.grid, domain, boundary)
    out, close = _open_out(args.output)
    w = csv.writer(out)
    w.writerow(["t", "x", "re", "im"])

    def dump(state):
        for x, psi in zip(state.x, state.psi):
            w.writerow([FLOAT_FMT % state.t, FLOAT_FMT % x,
                        FLOAT_FMT % psi.real, FLOAT_FMT % psi.imag])

    dump(wf)
    done = 0
    every = args.snapshot_every or args.steps
    while done < args.steps:
        s = min(every, args.steps - done)
        wf = quantize.evolve(wf, op, args.dt, s)
        done += s
        dump(wf)
    if close:
        out.close()
    return EXIT_OK


def cmd_verify(args):
    results = verify.run_all(seed=args.seed, out=sys.stdout)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="hjdyn",
        description="Constraint analysis, simulation and quantization of "
                    "singular Lagrangian systems.")
    p.add_argument("--seed", type=int, default=None,
                   help="probe-point RNG seed (default: HJDYN_SEED env or 0)")
    p.add_argument("--tol-zero", type=float, default=1e-9,
                   help="numeric zero-test threshold")
    p.add_argument("--tol-surface", type=float, default=1e-8,
                   help="acceptable on-surface constraint residual")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="constraint + integrability report")
    pa.add_argument("--system", required=True,
                    help="template:<id>?k=v or a definition file path")
    pa.add_argument("--output", default=None, help="JSON path (default stdout)")
    pa.set_defaults(fn=cmd_analyze)

    ps = sub.add_parser("simulate", help="integrate the equations of motion")
    ps.add_argument("--system", required=True)
    ps.add_argument("--initial", required=True, help='e.g. "q=1,p=0"')
    ps.add_argument("--t-span", default="0:10", help="lo:hi")
    ps.add_argument("--dt", type=float, default=1e-3)
    ps.add_argument("--output", default=None, help="CSV path (default stdout)")
    ps.set_defaults(fn=cmd_simulate)

    pq = sub.add_parser("quantize", help="grid Schrodinger evolution")
    pq.add_argument("--potential", default=None, help='V(q), e.g. "q^2/2"')
    pq.add_argument("--relativistic", default=None, help='e.g. "m=1,c=1"')
    pq.add_argument("--initial", default="gaussian:center=0,width=1,k=0")
    pq.add_argument("--grid", type=int, default=quantize.DEFAULT_GRID)
    pq.add_argument("--domain", default="-10:10")
    pq.add_argument("--dt", type=float, default=quantize.DEFAULT_DT)
    pq.add_argument("--steps", type=int, default=10000)
    pq.add_argument("--snapshot-every", type=int, default=100)
    pq.add_argument("--output", default=None, help="CSV path (default stdout)")
    pq.set_defaults(fn=cmd_quantize)

    pv = sub.add_parser("verify", help="run the acceptance suite")
    pv.set_defaults(fn=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    expr.DEFAULT_ZERO_TOL = args.tol_zero
    if args.seed is None:
        args.seed = expr.default_seed()
    try:
        return args.fn(args)
    except _IOFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (InconsistentDynamicsError, AnalysisError,
            eom.SimulationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONTRADICTION
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONTRADICTION


if __name__ == "__main__":
    sys.exit(main())
