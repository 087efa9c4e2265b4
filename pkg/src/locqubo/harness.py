"""Experiment runner: method grids over built-in instances, feasibility
tables, objective-value ratios, relative frequencies and report files."""

from __future__ import annotations

import csv
import io
import json
import re
import time
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .builders import build_qubo, decode
from .heuristics import SaConfig, TabuConfig, simulated_annealing, tabu_search
from .instances import builtin_instances
from .qubo import brute_force_min
from .quantum import QaoaConfig, run_qaoa, run_ws_qaoa
from .warmstart import strategy_C, strategy_L, strategy_R, strategy_S

CSV_COLUMNS = ("instance", "method", "feasible", "z_method", "z_exact", "ratio", "rel_freq",
               "runtime_ms")

_METHOD_PATTERNS = (
    ("SA", re.compile(r"^SA-(\d+)$")),
    ("Tabu", re.compile(r"^Tabu-(\d+)$")),
    ("QAOA", re.compile(r"^QAOA-(\d+)$")),
    ("WS-QAOA", re.compile(r"^WS-QAOA-(\d+)-([RSLC])$")),
)


@dataclass(frozen=True)
class MethodSpec:
    """Parsed method name: ``SA-20`` is ``("SA", 20, None)``."""

    algorithm: str
    param: int
    strategy: str | None = None


def parse_method(name):
    """Parse ``SA-k``, ``Tabu-k``, ``QAOA-p`` or ``WS-QAOA-p-{R,S,L,C}``."""
    for algo, pat in _METHOD_PATTERNS:
        m = pat.match(name)
        if m:
            param = int(m.group(1))
            if algo == "SA" and param < 1 or algo in ("QAOA", "WS-QAOA") and param < 1:
                break
            return MethodSpec(algo, param, m.group(2) if algo == "WS-QAOA" else None)
    raise ValueError(f"unrecognised method name {name!r}")


@dataclass
class ExperimentPlan:
    """Instances (family, size, 1-based indices) crossed with method names.

    ``sdp_dir`` holds externally solved lifted matrices named
    ``<instance name>.json`` for the S strategy.
    """

    family: str
    size: int
    methods: list = field(default_factory=list)
    p: int | None = None
    indices: list | None = None
    formulation: str | None = None
    seed_base: int = 0
    eps: float = 0.1
    shots: int = 8000
    max_iter: int = 50
    tol: float = 1e-4
    sa_sweeps: int | None = None
    sdp_dir: str | None = None

    def __post_init__(self):
        self.methods = list(self.methods)
        for m in self.methods:
            parse_method(m)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def load_plan(path):
    return ExperimentPlan.from_dict(json.loads(Path(path).read_text()))


@dataclass
class RunReport:
    """One (instance, method) cell. ``status`` is ok, failed or skipped."""

    instance: str
    instance_index: int
    method: str
    feasible: bool
    z_method: object
    z_exact: object
    ratio: float | None
    rel_freq: float | None
    runtime_ms: float
    status: str = "ok"
    best_sample: str = ""
    error: str = ""

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def cell_seed(seed_base, index, method):
    """Deterministic per-cell seed from the seed base, instance index and method."""
    ss = np.random.SeedSequence([seed_base, index, zlib.crc32(method.encode())])
    return int(ss.generate_state(1)[0])


def _num(v):
    """Rationals with unit denominator become ints; others floats."""
    if hasattr(v, "denominator"):
        return int(v) if v.denominator == 1 else float(v)
    return v


def _ratio(z, z_exact):
    if z_exact == 0:
        return 1.0 if z == 0 else None
    return float(z) / float(z_exact)


def _load_Y(plan, inst):
    if plan.sdp_dir is None:
        return None
    path = Path(plan.sdp_dir) / f"{inst.name}.json"
    if not path.exists():
        return None
    data = json.loads(path.read_text())
    return np.array(data["Y"] if isinstance(data, dict) else data, dtype=float)


def _execute(plan, spec, method, inst, q, seed):
    """Run one method; return ``(bits, rel_freq)`` or ``None`` when skipped."""
    if spec.algorithm in ("SA", "Tabu"):
        if spec.algorithm == "SA":
            cfg = SaConfig(num_reads=spec.param, seed=seed)
            if plan.sa_sweeps is not None:
                cfg.num_sweeps = plan.sa_sweeps
            res = simulated_annealing(q, cfg)
        else:
            res = tabu_search(q, TabuConfig(num_restarts=spec.param, seed=seed))
        best = res[0][0]
        return best, sum(b == best for b, _ in res) / len(res)
    cfg = QaoaConfig(layers=spec.param, shots=plan.shots, seed=seed, max_iter=plan.max_iter,
                     tol=plan.tol)
    if spec.algorithm == "QAOA":
        r = run_qaoa(q, cfg)
    else:
        s = spec.strategy
        if s == "R":
            ws = strategy_R(q, plan.eps)
        elif s == "L":
            ws = strategy_L(inst, plan.formulation, plan.eps)
        elif s == "C":
            ws = strategy_C(inst, plan.formulation, q, plan.eps)
        else:
            Y = _load_Y(plan, inst)
            if Y is None:
                return None
            ws = strategy_S(Y, plan.eps)
        r = run_ws_qaoa(q, ws, cfg)
    return r.best_bits, r.rel_freq


def run_experiment(plan, instances=None):
    """Run every (instance, method) cell of ``plan``.

    ``instances`` overrides the built-in table lookup. Failures inside a cell
    are captured in its report and never abort the batch.
    """
    if instances is None:
        instances = builtin_instances(plan.family, plan.size, plan.p)
    chosen = plan.indices or list(range(1, len(instances) + 1))
    reports = []
    for idx in chosen:
        inst = instances[idx - 1]
        q = build_qubo(inst, plan.formulation)
        z_exact = None
        for method in plan.methods:
            spec = parse_method(method)
            t0 = time.perf_counter()
            rep = RunReport(instance=inst.name, instance_index=idx, method=method,
                            feasible=False, z_method=None, z_exact=None, ratio=None,
                            rel_freq=None, runtime_ms=0.0)
            try:
                if z_exact is None:
                    opt_bits, _, _ = brute_force_min(q)
                    z_exact = _num(decode(q, opt_bits).original_objective)
                rep.z_exact = z_exact
                out = _execute(plan, spec, method, inst, q, cell_seed(plan.seed_base, idx, method))
                if out is None:
                    rep.status = "skipped"
                else:
                    bits, freq = out
                    sol = decode(q, bits)
                    rep.best_sample = "".join(map(str, bits))
                    rep.rel_freq = float(freq)
                    rep.feasible = bool(sol.feasible)
                    if sol.feasible:
                        rep.z_method = _num(sol.original_objective)
                        rep.ratio = _ratio(rep.z_method, z_exact)
            except Exception as exc:  # recorded per cell
                rep.status = "failed"
                rep.error = f"{type(exc).__name__}: {exc}"
            rep.runtime_ms = (time.perf_counter() - t0) * 1000.0
            reports.append(rep)
    return reports


def feasibility_table(reports):
    """``[(method, feasible_count), ...]`` in first-appearance order."""
    counts = {}
    for r in reports:
        counts.setdefault(r.method, 0)
        counts[r.method] += bool(r.feasible)
    return list(counts.items())


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(reports, format="csv"):
    """Serialise reports as ``csv``, ``json`` or ``plotdata`` bytes.

    ``plotdata`` is JSON with per-method ``[instance_index, value]`` series
    for ratios (infeasible cells omitted) and relative frequencies.
    """
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in reports:
            w.writerow([r.instance, r.method, str(bool(r.feasible)).lower(), _cell(r.z_method),
                        _cell(r.z_exact), _cell(r.ratio), _cell(r.rel_freq),
                        f"{r.runtime_ms:.3f}"])
        return buf.getvalue().encode()
    if format == "json":
        return json.dumps([r.to_dict() for r in reports], indent=1).encode()
    if format == "plotdata":
        ratio, freq = {}, {}
        for r in reports:
            ratio.setdefault(r.method, [])
            freq.setdefault(r.method, [])
            if r.feasible and r.ratio is not None:
                ratio[r.method].append([r.instance_index, r.ratio])
            if r.rel_freq is not None:
                freq[r.method].append([r.instance_index, r.rel_freq])
        return json.dumps({"ratio": ratio, "rel_freq": freq}, indent=1).encode()
    raise ValueError(f"unknown report format {format!r}")


def load_reports(data):
    """Inverse of ``emit_report(..., "json")``."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode()
    return [RunReport.from_dict(d) for d in json.loads(data)]
