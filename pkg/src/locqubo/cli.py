"""Command-line entry point: ``locqubo <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .builders import build_qubo, decode
from .errors import LocQuboError
from .heuristics import SaConfig, TabuConfig, simulated_annealing, tabu_search
from .instances import FAMILIES, instance_from_dict
from .qubo import brute_force_min, export_qubo, import_qubo
from .quantum import QaoaConfig, run_qaoa, run_ws_qaoa
from .relaxations import (
    load_sdp_solution,
    lp_relaxation,
    sdp_relaxation_data,
    solve_lp,
)
from .warmstart import strategy_C, strategy_L, strategy_R, strategy_S


def _load_input(path, formulation=None, penalty=None):
    """Return ``(instance or None, QuboModel)`` from an instance or QUBO file."""
    raw = Path(path).read_bytes()
    try:
        data = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError):
        data = None
    if isinstance(data, dict) and data.get("family") in FAMILIES and "coeffs" not in data:
        inst = instance_from_dict(data)
        return inst, build_qubo(inst, formulation, penalty=penalty)
    q = import_qubo(raw)
    return q.instance, q


def _bits_str(bits):
    return "".join(map(str, bits))


def _solution_dict(q, bits, energy):
    out = {"bits": _bits_str(bits), "energy": _jsonable(energy)}
    if q.family is not None and q.instance is not None:
        sol = decode(q, bits)
        out.update(feasible=sol.feasible, objective=_jsonable(sol.original_objective),
                   opened=list(sol.opened), violations=list(sol.violations))
    return out


def _jsonable(v):
    if hasattr(v, "denominator"):
        return int(v) if v.denominator == 1 else float(v)
    return v


def _write(text, out):
    if isinstance(text, bytes):
        text = text.decode()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _qaoa_cfg(a):
    return QaoaConfig(layers=a.layers, shots=a.shots, seed=a.seed, max_iter=a.max_iter, tol=a.tol)


def _warmstart(a, inst, q):
    s = a.strategy
    if s == "R":
        return strategy_R(q, a.eps)
    if s == "S":
        if not a.sdp:
            raise SystemExit("strategy S needs --sdp Y.json")
        return strategy_S(load_sdp_solution(a.sdp), a.eps)
    if inst is None:
        raise SystemExit(f"strategy {s} needs an instance file, not a bare QUBO")
    if s == "L":
        return strategy_L(inst, a.formulation, a.eps)
    return strategy_C(inst, a.formulation, q, a.eps)


def cmd_build(a):
    _, q = _load_input(a.input, a.formulation, a.penalty)
    _write(export_qubo(q, a.format), a.output)


def cmd_solve_exact(a):
    _, q = _load_input(a.input, a.formulation)
    bits, e, unique = brute_force_min(q)
    out = _solution_dict(q, bits, e)
    out["unique"] = unique
    _write(json.dumps(out), a.output)


def cmd_solve_sa(a):
    _, q = _load_input(a.input, a.formulation)
    res = simulated_annealing(q, SaConfig(num_reads=a.reads, num_sweeps=a.sweeps, seed=a.seed))
    out = _solution_dict(q, *res[0])
    out["reads"] = [[_bits_str(b), _jsonable(e)] for b, e in res]
    _write(json.dumps(out), a.output)


def cmd_solve_tabu(a):
    _, q = _load_input(a.input, a.formulation)
    res = tabu_search(q, TabuConfig(num_restarts=a.restarts, seed=a.seed))
    out = _solution_dict(q, *res[0])
    out["runs"] = [[_bits_str(b), _jsonable(e)] for b, e in res]
    _write(json.dumps(out), a.output)


def cmd_solve_qaoa(a):
    _, q = _load_input(a.input, a.formulation)
    _write(run_qaoa(q, _qaoa_cfg(a)).to_json(), a.output)


def cmd_solve_wsqaoa(a):
    inst, q = _load_input(a.input, a.formulation)
    ws = _warmstart(a, inst, q)
    _write(run_ws_qaoa(q, ws, _qaoa_cfg(a)).to_json(), a.output)


def cmd_warmstart(a):
    inst, q = _load_input(a.input, a.formulation)
    _write(_warmstart(a, inst, q).to_json(), a.output)


def cmd_lp(a):
    inst, _ = _load_input(a.input, a.formulation)
    lp = lp_relaxation(inst, a.formulation)
    res = solve_lp(lp)
    out = {
        "status": res.status,
        "objective": str(res.objective),
        "objective_float": float(res.objective),
        "integral": res.is_integral,
        "x": {name: str(v) for name, v in zip(lp.names, res.x)},
    }
    _write(json.dumps(out, indent=1), a.output)


def cmd_sdp_data(a):
    _, q = _load_input(a.input, a.formulation)
    _write(sdp_relaxation_data(q).to_json(), a.output)


def cmd_experiment(a):
    plan = harness.load_plan(a.plan)
    reports = harness.run_experiment(plan)
    _write(harness.emit_report(reports, a.format), a.output)
    for method, count in harness.feasibility_table(reports):
        print(f"{method}\t{count}", file=sys.stderr)


def cmd_report(a):
    reports = harness.load_reports(Path(a.report).read_bytes())
    _write(harness.emit_report(reports, a.format), a.output)


def build_parser():
    ap = argparse.ArgumentParser(prog="locqubo", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("input", help="instance JSON or QUBO file")
        p.add_argument("--formulation", default=None,
                       help="FCFLP formulation: aggregated or disaggregated")
        p.add_argument("-o", "--output", default=None)
        p.set_defaults(func=func)
        return p

    def quantum_flags(p):
        p.add_argument("--layers", type=int, default=1)
        p.add_argument("--shots", type=int, default=8000)
        p.add_argument("--seed", type=int, default=123)
        p.add_argument("--max-iter", type=int, default=50)
        p.add_argument("--tol", type=float, default=1e-4)

    def ws_flags(p):
        p.add_argument("--strategy", choices=["R", "S", "L", "C"], required=True)
        p.add_argument("--eps", type=float, default=0.1)
        p.add_argument("--sdp", default=None, help="solved lifted matrix Y (JSON) for strategy S")

    p = common("build", cmd_build, "instance -> QUBO file")
    p.add_argument("--penalty", type=float, default=None)
    p.add_argument("--format", choices=["json", "sparse-coo-text"], default="json")
    common("solve-exact", cmd_solve_exact, "brute-force global minimum")
    p = common("solve-sa", cmd_solve_sa, "simulated annealing")
    p.add_argument("--reads", type=int, default=20)
    p.add_argument("--sweeps", type=int, default=SaConfig.num_sweeps)
    p.add_argument("--seed", type=int, default=0)
    p = common("solve-tabu", cmd_solve_tabu, "tabu search")
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    quantum_flags(common("solve-qaoa", cmd_solve_qaoa, "QAOA statevector simulation"))
    p = common("solve-wsqaoa", cmd_solve_wsqaoa, "warm-start QAOA")
    quantum_flags(p)
    ws_flags(p)
    ws_flags(common("warmstart", cmd_warmstart, "emit a warm-start point"))
    common("lp", cmd_lp, "solve the LP relaxation exactly")
    common("sdp-data", cmd_sdp_data, "emit lifted SDP relaxation data")

    p = sub.add_parser("experiment", help="run a plan file")
    p.add_argument("plan")
    p.add_argument("--format", choices=["json", "csv", "plotdata"], default="json")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_experiment)
    p = sub.add_parser("report", help="convert a JSON report")
    p.add_argument("report")
    p.add_argument("--format", choices=["csv", "plotdata", "json"], default="csv")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (LocQuboError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
