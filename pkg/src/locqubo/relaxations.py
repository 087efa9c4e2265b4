"""Continuous relaxations: LP relaxations with an exact simplex solver, the
box-constrained QUBO relaxation, and SDP relaxation data."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    Infeasible,
    NotNormalized,
    ShapeMismatch,
    Unbounded,
    UnsupportedFamily,
)
from .instances import FcflpInstance, PMedianInstance

INF = None  # marker for an absent upper bound


@dataclass
class LinearProgram:
    """``min c x`` s.t. ``A_eq x = b_eq``, ``A_ub x <= b_ub``, ``0 <= x <= 1``."""

    c: list
    A_eq: list = field(default_factory=list)
    b_eq: list = field(default_factory=list)
    A_ub: list = field(default_factory=list)
    b_ub: list = field(default_factory=list)
    names: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.c)
        for rows, rhs, tag in ((self.A_eq, self.b_eq, "eq"), (self.A_ub, self.b_ub, "ub")):
            if len(rows) != len(rhs) or any(len(r) != n for r in rows):
                raise ShapeMismatch(f"{tag} rows inconsistent with {n} columns")

    @property
    def n(self):
        return len(self.c)


@dataclass
class LpResult:
    """Optimal basic solution with exact rational values."""

    x: list
    objective: Fraction
    status: str = "optimal"

    @property
    def x_float(self):
        return np.array([float(v) for v in self.x])

    @property
    def is_integral(self):
        return all(v.denominator == 1 for v in self.x)


def _frac(v):
    return v if isinstance(v, Fraction) else Fraction(v)


def _canonical_rows(rows, rhs):
    pairs = sorted(
        (tuple(_frac(a) for a in r), _frac(b)) for r, b in zip(rows, rhs)
    )
    return [list(r) for r, _ in pairs], [b for _, b in pairs]


class _Simplex:
    """Dense bounded-variable primal simplex on an exact rational tableau.

    Columns have lower bound 0 and upper bound ``ub[j]`` (``None`` = +inf).
    Entering and leaving choices follow Bland's smallest-index rule.
    """

    def __init__(self, A, b, ub):
        self.m, self.N = len(A), len(ub)
        self.T = [row[:] for row in A]
        self.ub = ub
        self.at_upper = [False] * self.N
        self.basis = [None] * self.m
        self.xB = b[:]

    def values(self):
        x = [Fraction(0)] * self.N
        for j in range(self.N):
            if self.at_upper[j]:
                x[j] = self.ub[j]
        for r, j in enumerate(self.basis):
            x[j] = self.xB[r]
        return x

    def pivot(self, r, j):
        """Make ``j`` basic in row ``r`` at its current value.

        ``xB`` holds actual basic values, so only the tableau rows change.
        """
        self.xB[r] = self.ub[j] if self.at_upper[j] else Fraction(0)
        self.at_upper[self.basis[r]] = False
        self.at_upper[j] = False
        piv = self.T[r][j]
        row = [a / piv for a in self.T[r]]
        self.T[r] = row
        for i in range(self.m):
            if i != r and self.T[i][j] != 0:
                f = self.T[i][j]
                self.T[i] = [a - f * b for a, b in zip(self.T[i], row)]
        self.basis[r] = j

    def optimize(self, cost, allowed):
        """Minimise ``cost`` (full column vector) over the current basis."""
        while True:
            basic = set(self.basis)
            cb = [cost[j] for j in self.basis]
            enter = None
            for j in allowed:
                if j in basic:
                    continue
                d = cost[j] - sum(cb[i] * self.T[i][j] for i in range(self.m) if self.T[i][j])
                if (not self.at_upper[j] and d < 0) or (self.at_upper[j] and d > 0):
                    enter = j
                    break
            if enter is None:
                return
            j = enter
            sign = -1 if self.at_upper[j] else 1
            best_t, leave, leave_to_upper = self.ub[j], None, False
            for i in range(self.m):
                alpha = sign * self.T[i][j]
                if alpha > 0:
                    t, to_upper = self.xB[i] / alpha, False
                elif alpha < 0 and self.ub[self.basis[i]] is not None:
                    t, to_upper = (self.ub[self.basis[i]] - self.xB[i]) / (-alpha), True
                else:
                    continue
                if best_t is None or t < best_t or (
                    t == best_t and leave is not None and self.basis[i] < self.basis[leave]
                ):
                    best_t, leave, leave_to_upper = t, i, to_upper
            if best_t is None:
                raise Unbounded("objective is unbounded below")
            t = best_t
            for i in range(self.m):
                if self.T[i][j]:
                    self.xB[i] -= sign * t * self.T[i][j]
            if leave is None:
                self.at_upper[j] = not self.at_upper[j]
                continue
            entering_value = (self.ub[j] if self.at_upper[j] else 0) + sign * t
            old = self.basis[leave]
            self.pivot(leave, j)
            self.at_upper[old] = leave_to_upper
            self.xB[leave] = entering_value


def solve_lp(lp):
    """Solve a :class:`LinearProgram` exactly.

    Rows are put in a canonical sorted order first, so the result does not
    depend on the order in which constraints were supplied.

    Raises:
        Infeasible: no point satisfies the constraints.
        Unbounded: cannot happen with the ``[0, 1]`` bounds; kept for safety.
    """
    n = lp.n
    A_eq, b_eq = _canonical_rows(lp.A_eq, lp.b_eq)
    A_ub, b_ub = _canonical_rows(lp.A_ub, lp.b_ub)
    m_ub, m = len(A_ub), len(A_eq) + len(A_ub)
    # columns: structural | inequality slacks | artificials
    N = n + m_ub + m
    ub = [Fraction(1)] * n + [INF] * m_ub + [INF] * m
    A, b = [], []
    for r, row in enumerate(A_eq + A_ub):
        full = row + [Fraction(0)] * (m_ub + m)
        if r >= len(A_eq):
            full[n + r - len(A_eq)] = Fraction(1)
        rhs = (b_eq + b_ub)[r]
        if rhs < 0:
            full = [-a for a in full]
            rhs = -rhs
        full[n + m_ub + r] = Fraction(1)
        A.append(full)
        b.append(rhs)
    sx = _Simplex(A, b, ub)
    sx.basis = list(range(n + m_ub, N))
    phase1 = [Fraction(0)] * (n + m_ub) + [Fraction(1)] * m
    sx.optimize(phase1, range(N))
    if sum(v for v, j in zip(sx.xB, sx.basis) if j >= n + m_ub) != 0:
        raise Infeasible("linear program has no feasible point")
    # drive remaining (zero-valued) artificials out of the basis
    keep = []
    for r in range(sx.m):
        if sx.basis[r] >= n + m_ub:
            col = next((j for j in range(n + m_ub) if sx.T[r][j] != 0), None)
            if col is None:
                continue  # redundant row
            sx.pivot(r, col)
        keep.append(r)
    sx.T = [sx.T[r][: n + m_ub] for r in keep]
    sx.xB = [sx.xB[r] for r in keep]
    sx.basis = [sx.basis[r] for r in keep]
    sx.m, sx.N = len(keep), n + m_ub
    sx.ub = sx.ub[: n + m_ub]
    sx.at_upper = sx.at_upper[: n + m_ub]
    cost = [_frac(v) for v in lp.c] + [Fraction(0)] * m_ub
    sx.optimize(cost, range(n + m_ub))
    x = sx.values()[:n]
    return LpResult(x=x, objective=sum(ci * xi for ci, xi in zip(cost, x)))


def lp_relaxation(inst, formulation=None):
    """Continuous relaxation of the p-Median or FCFLP integer program.

    Column order matches the QUBO builders' primary variables: ``x`` row-major
    then ``y``.

    Args:
        inst: A p-Median or FCFLP instance.
        formulation: For FCFLP, ``"aggregated"`` or ``"disaggregated"``
            (``"fcflp-"`` prefixes are accepted). Ignored for p-Median.
    """
    if isinstance(inst, PMedianInstance):
        n = inst.n
        nv = n * n + n
        c = [inst.demand[j] * inst.cost[i][j] for i in range(n) for j in range(n)] + [0] * n
        A_eq, b_eq, A_ub, b_ub = [], [], [], []
        for j in range(n):
            row = [0] * nv
            for i in range(n):
                row[i * n + j] = 1
            A_eq.append(row)
            b_eq.append(1)
        row = [0] * nv
        for i in range(n):
            row[n * n + i] = 1
        A_eq.append(row)
        b_eq.append(inst.p)
        for i in range(n):
            for j in range(n):
                row = [0] * nv
                row[i * n + j], row[n * n + i] = 1, -1
                A_ub.append(row)
                b_ub.append(0)
        names = [f"x[{i},{j}]" for i in range(n) for j in range(n)] + [f"y[{i}]" for i in range(n)]
        return LinearProgram(c, A_eq, b_eq, A_ub, b_ub, names)
    if isinstance(inst, FcflpInstance):
        form = (formulation or "aggregated").replace("fcflp-", "")
        if form not in ("aggregated", "disaggregated"):
            raise UnsupportedFamily(f"unknown FCFLP formulation {formulation!r}")
        n, d, q = inst.n, inst.demand, inst.capacity
        nv = n * n + n
        c = [inst.cost[i][j] for i in range(n) for j in range(n)] + list(inst.fixed_cost)
        A_eq, b_eq, A_ub, b_ub = [], [], [], []
        for j in range(n):
            row = [0] * nv
            for i in range(n):
                row[i * n + j] = 1
            A_eq.append(row)
            b_eq.append(1)
        for i in range(n):
            row = [0] * nv
            for j in range(n):
                row[i * n + j] = d[j]
            if form == "aggregated":
                row[n * n + i] = -q[i]
                b_ub.append(0)
            else:
                b_ub.append(q[i])
            A_ub.append(row)
        if form == "disaggregated":
            for i in range(n):
                for j in range(n):
                    row = [0] * nv
                    row[i * n + j], row[n * n + i] = 1, -1
                    A_ub.append(row)
                    b_ub.append(0)
        names = [f"x[{i},{j}]" for i in range(n) for j in range(n)] + [f"y[{i}]" for i in range(n)]
        return LinearProgram(c, A_eq, b_eq, A_ub, b_ub, names)
    raise UnsupportedFamily(f"no LP relaxation for {getattr(inst, 'family', type(inst).__name__)}")


# ---------------------------------------------------------------------------
# box relaxation


@dataclass
class BoxResult:
    """Local minimiser of ``x^T U x + offset`` over ``[0, 1]^n``."""

    x: np.ndarray
    energy: float
    converged: bool
    iterations: int


def box_energy(q, x):
    x = np.asarray(x, dtype=float)
    return float(x @ q.matrix() @ x + q.offset)


def minimize_box_qubo(q, x0, tol=1e-6, max_iter=None):
    """Projected gradient descent with Armijo backtracking on the unit box.

    The diagonal is treated as a quadratic term, i.e. the continuous objective
    is ``x^T U x + offset``. Stops when the projected-gradient residual
    ``max|x - clip(x - grad)|`` drops below ``tol`` or after
    ``max_iter`` iterations (default ``10 * n**2``).
    """
    x = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0)
    n = q.n_vars
    if x.shape != (n,):
        raise ShapeMismatch(f"start point has shape {x.shape}, expected ({n},)")
    U = q.matrix()
    S = U + U.T
    max_iter = 10 * n * n if max_iter is None else max_iter
    lip = float(np.linalg.norm(S, 2)) if n else 0.0
    step = 1.0 / lip if lip > 0 else 1.0
    f = float(x @ U @ x)
    it = 0
    converged = False
    while True:
        g = S @ x
        if np.max(np.abs(x - np.clip(x - g, 0.0, 1.0)), initial=0.0) <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        alpha = step * 2.0
        while True:
            xn = np.clip(x - alpha * g, 0.0, 1.0)
            fn = float(xn @ U @ xn)
            if fn <= f + 1e-4 * float(g @ (xn - x)) or alpha < 1e-18:
                break
            alpha *= 0.5
        if fn > f:
            break
        step = alpha
        x, f = xn, fn
    return BoxResult(x=x, energy=f + float(q.offset), converged=converged, iterations=it)


# ---------------------------------------------------------------------------
# SDP relaxation data


@dataclass
class SdpRelaxationData:
    """Lifted relaxation ``min <C, Y>`` s.t. ``<A_k, Y> = b_k``, ``Y >= 0``.

    ``constraints[0]`` fixes ``Y_11 = 1``; ``constraints[i]`` for ``i >= 1``
    links ``Y_{i+1,i+1}`` to ``Y_{1,i+1}``.
    """

    dim: int
    objective: np.ndarray
    constraints: list

    def to_json(self):
        return json.dumps({
            "dim": self.dim,
            "objective": self.objective.tolist(),
            "constraints": [{"A": A.tolist(), "b": b} for A, b in self.constraints],
        })

    @classmethod
    def from_json(cls, text):
        p = json.loads(text)
        return cls(
            dim=p["dim"],
            objective=np.array(p["objective"], dtype=float),
            constraints=[(np.array(c["A"], dtype=float), c["b"]) for c in p["constraints"]],
        )


def sdp_relaxation_data(q):
    """Build the lifted objective ``[[c, 0], [0, Q_sym]]`` and linking constraints."""
    n = q.n_vars
    U = q.matrix()
    C = np.zeros((n + 1, n + 1))
    C[0, 0] = q.offset
    C[1:, 1:] = (U + U.T) / 2.0
    E0 = np.zeros((n + 1, n + 1))
    E0[0, 0] = 1.0
    cons = [(E0, 1.0)]
    for i in range(n):
        A = np.zeros((n + 1, n + 1))
        A[0, i + 1] = A[i + 1, 0] = -0.5
        A[i + 1, i + 1] = 1.0
        cons.append((A, 0.0))
    return SdpRelaxationData(dim=n + 1, objective=C, constraints=cons)


def extract_sdp_warmstart(Y):
    """First-row entries ``Y[0, 1:]`` of a normalised lifted matrix, clamped to [0, 1]."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != Y.shape[1] or Y.shape[0] < 2:
        raise ShapeMismatch(f"expected a square matrix of size >= 2, got {Y.shape}")
    if not np.allclose(Y, Y.T, atol=1e-8):
        raise ShapeMismatch("matrix is not symmetric")
    if abs(Y[0, 0] - 1.0) > 1e-6:
        raise NotNormalized(f"Y[0,0] = {Y[0, 0]} is not 1")
    return np.clip(Y[0, 1:], 0.0, 1.0)


def load_sdp_solution(path):
    """Read a lifted matrix from JSON (``{"Y": [[...]]}`` or a bare nested list)."""
    with open(path) as fh:
        p = json.load(fh)
    return np.array(p["Y"] if isinstance(p, dict) else p, dtype=float)
