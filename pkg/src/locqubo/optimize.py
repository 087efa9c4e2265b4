"""Derivative-free Nelder-Mead minimiser with a strict evaluation budget."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    n_evals: int
    trace: list = field(default_factory=list)
    converged: bool = False


def nelder_mead(f, x0, max_evals=50, tol=1e-4):
    """Minimise ``f`` from ``x0`` using at most ``max_evals`` evaluations.

    Standard coefficients: reflection 1, expansion 2, contraction 1/2,
    shrink 1/2. The initial simplex perturbs each coordinate by 5% (0.00025
    for zero coordinates). Stops when both the spread of simplex values and
    the simplex diameter fall below ``tol``.

    ``trace`` records the best value seen after each evaluation, so it is
    non-increasing. With ``max_evals == 0`` no evaluation is made and
    ``fun`` is ``nan``.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    trace = []
    best = {"x": x0.copy(), "f": np.inf}

    class _Budget(Exception):
        pass

    def evaluate(x):
        if len(trace) >= max_evals:
            raise _Budget
        v = float(f(x))
        if v < best["f"]:
            best["x"], best["f"] = x.copy(), v
        trace.append(best["f"])
        return v

    converged = False
    try:
        sim = [x0.copy()]
        for i in range(n):
            y = x0.copy()
            y[i] = y[i] * 1.05 if y[i] != 0 else 0.00025
            sim.append(y)
        sim = np.array(sim)
        fs = np.array([evaluate(s) for s in sim])
        while True:
            order = np.argsort(fs, kind="stable")
            sim, fs = sim[order], fs[order]
            if (np.max(np.abs(fs[1:] - fs[0]), initial=0.0) <= tol
                    and np.max(np.abs(sim[1:] - sim[0]), initial=0.0) <= tol):
                converged = True
                break
            centroid = sim[:-1].mean(axis=0)
            xr = centroid + (centroid - sim[-1])
            fr = evaluate(xr)
            if fr < fs[0]:
                xe = centroid + 2.0 * (centroid - sim[-1])
                fe = evaluate(xe)
                sim[-1], fs[-1] = (xe, fe) if fe < fr else (xr, fr)
                continue
            if fr < fs[-2]:
                sim[-1], fs[-1] = xr, fr
                continue
            if fr < fs[-1]:
                xc = centroid + 0.5 * (xr - centroid)
                fc = evaluate(xc)
                if fc <= fr:
                    sim[-1], fs[-1] = xc, fc
                    continue
            else:
                xc = centroid + 0.5 * (sim[-1] - centroid)
                fc = evaluate(xc)
                if fc < fs[-1]:
                    sim[-1], fs[-1] = xc, fc
                    continue
            for i in range(1, n + 1):
                sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                fs[i] = evaluate(sim[i])
    except _Budget:
        pass
    fun = best["f"] if trace else float("nan")
    return OptimizeResult(x=best["x"], fun=fun, n_evals=len(trace), trace=trace,
                          converged=converged)
