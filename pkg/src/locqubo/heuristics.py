"""Classical QUBO heuristics: simulated annealing and tabu search.

Both return one candidate per read (or run), sorted by ascending energy.
Read ``r`` uses its own stream ``SeedSequence([seed, r])``, so a read's
result does not depend on how many reads are requested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qubo import energy

_TEMP_STREAM = 2**32 - 1
_BATCH = 512
_CHUNK = 200


@dataclass
class SaConfig:
    """Simulated annealing settings.

    ``t_hot=None`` picks the largest single-flip energy change at a random
    point.
    """

    num_reads: int = 20
    num_sweeps: int = 20000
    seed: int = 0
    t_hot: float | None = None
    t_cold: float = 0.01

    def __post_init__(self):
        if self.num_reads < 1 or self.num_sweeps < 1:
            raise ValueError("num_reads and num_sweeps must be >= 1")


@dataclass
class TabuConfig:
    """Tabu search settings. ``max_stagnation=None`` means ``5 * n * n`` moves."""

    num_restarts: int = 0
    seed: int = 0
    tenure: int | None = None
    max_stagnation: int | None = None

    def __post_init__(self):
        if self.num_restarts < 0:
            raise ValueError("num_restarts must be >= 0")


def _parts(q):
    """Diagonal vector and symmetric off-diagonal coupling matrix."""
    n = q.n_vars
    diag = np.zeros(n)
    S = np.zeros((n, n))
    for (i, j), v in q.coeffs.items():
        if i == j:
            diag[i] += float(v)
        else:
            S[i, j] += float(v)
            S[j, i] += float(v)
    return diag, S


def flip_deltas(diag, S, x):
    """Energy change of flipping each bit of ``x`` (works row-wise on 2-D ``x``)."""
    x = np.asarray(x, dtype=float)
    return (1.0 - 2.0 * x) * (diag + x @ S)


def _hot_temperature(diag, S, n, seed):
    rng = np.random.default_rng(np.random.SeedSequence([seed, _TEMP_STREAM]))
    x = rng.integers(0, 2, n)
    dmax = float(np.max(np.abs(flip_deltas(diag, S, x))))
    return dmax


def _finish(q, bits_list):
    scored = [(energy(q, b), r, b) for r, b in enumerate(bits_list)]
    scored.sort(key=lambda t: (t[0], t[1]))
    return [(b, e) for e, _, b in scored]


def simulated_annealing(q, cfg=None):
    """Single-flip Metropolis annealing on a geometric temperature schedule.

    Returns:
        List of ``(bits, energy)`` per read, ascending by exact energy. Each
        entry is the best state visited by that read.
    """
    cfg = cfg or SaConfig()
    n = q.n_vars
    diag, S = _parts(q)
    t_hot = cfg.t_hot if cfg.t_hot is not None else _hot_temperature(diag, S, n, cfg.seed)
    if not t_hot > cfg.t_cold:
        t_hot = max(10.0 * cfg.t_cold, 1.0)
    sweeps = cfg.num_sweeps
    if sweeps == 1:
        temps = np.array([cfg.t_cold])
    else:
        temps = t_hot * (cfg.t_cold / t_hot) ** (np.arange(sweeps) / (sweeps - 1))

    results = []
    for start in range(0, cfg.num_reads, _BATCH):
        reads = range(start, min(start + _BATCH, cfg.num_reads))
        rngs = [np.random.default_rng(np.random.SeedSequence([cfg.seed, r])) for r in reads]
        # variable-major layout keeps the per-variable rows contiguous
        x = np.array([g.integers(0, 2, n) for g in rngs], dtype=float).T.copy()
        field = S @ x
        e = np.einsum("ir,ir->r", x, diag[:, None] + 0.5 * field)
        best_e = e.copy()
        best_x = x.copy()
        for c0 in range(0, sweeps, _CHUNK):
            c1 = min(c0 + _CHUNK, sweeps)
            # uniforms drawn chunk by chunk; the per-read stream is unchanged
            logu = np.log(np.stack([g.random((c1 - c0, n)) for g in rngs], axis=2))
            for k in range(c0, c1):
                # Metropolis: accept iff u < exp(-delta / T)
                thresh = -temps[k] * logu[k - c0]
                for i in range(n):
                    flip = 1.0 - 2.0 * x[i]
                    delta = flip * (diag[i] + field[i])
                    accept = delta <= thresh[i]
                    if not accept.any():
                        continue
                    step = flip * accept
                    x[i] += step
                    field += S[:, i, None] * step
                e = np.einsum("ir,ir->r", x, diag[:, None] + 0.5 * field)
                better = e < best_e
                if better.any():
                    best_e[better] = e[better]
                    best_x[:, better] = x[:, better]
        results.extend([int(v) for v in row] for row in np.rint(best_x.T).astype(int))
    return _finish(q, results)


def _tabu_run(diag, S, n, rng, tenure, max_stag):
    x = rng.integers(0, 2, n).astype(float)
    field = x @ S
    e = float(np.dot(x, diag + 0.5 * field))
    best_e, best_x = e, x.copy()
    tabu_until = np.zeros(n, dtype=np.int64)
    it = stag = 0
    while stag < max_stag:
        it += 1
        delta = (1.0 - 2.0 * x) * (diag + field)
        allowed = (tabu_until < it) | (e + delta < best_e)
        if allowed.any():
            cand = np.where(allowed, delta, np.inf)
            i = int(np.argmin(cand))
        else:  # everything tabu: take the move released soonest
            i = int(np.argmin(tabu_until))
        step = 1.0 - 2.0 * x[i]
        x[i] += step
        field += step * S[i]
        e += float(delta[i])
        tabu_until[i] = it + tenure
        if e < best_e:
            best_e, best_x = e, x.copy()
            stag = 0
        else:
            stag += 1
    return [int(v) for v in best_x]


def tabu_search(q, cfg=None):
    """Steepest-descent single-flip tabu search with aspiration.

    Performs ``1 + num_restarts`` independent runs from random starts. A
    flipped bit stays tabu for ``tenure`` moves (default ``max(7, n // 4)``)
    unless the move would beat the run's best energy. A run stops after
    ``max_stagnation`` moves without improving its best.

    Returns:
        List of ``(bits, energy)`` per run, ascending by exact energy.
    """
    cfg = cfg or TabuConfig()
    n = q.n_vars
    diag, S = _parts(q)
    tenure = cfg.tenure if cfg.tenure is not None else max(7, n // 4)
    max_stag = cfg.max_stagnation if cfg.max_stagnation is not None else 5 * n * n
    results = []
    for r in range(1 + cfg.num_restarts):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, r]))
        results.append(_tabu_run(diag, S, n, rng, tenure, max_stag))
    return _finish(q, results)
