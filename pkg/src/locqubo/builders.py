"""QUBO builders for the six location problems, plus a feasibility-aware decoder.

Every builder assembles named penalty blocks as exact polynomial terms and sums
them into a :class:`~locqubo.qubo.QuboModel`. The blocks are available
separately through :func:`hamiltonian_blocks`, which the tests use to check
each penalty in isolation.

Variable layout (all indices 0-based):

* p-Median: ``x[i,j]`` facility-major, then ``y[i]``.
* p-Center: ``x[i,j]``, ``y[i]``, ``z[k]`` (objective bits), ``s[j,k]``, ``u[k]``.
* FCFLP: ``x[i,j]``, ``y[i]``, ``s[i,k]`` (capacity slack bits).
* GAP: ``x[i,j]`` for open sites ``i`` in ascending order, then ``s[i,k]``.
* DOMP: ``x[j]``, ``y[i,j]``, ``s[i,j]``, ``u[i,k,j]``, ``w[i,k,j,t]``, ``v[i,k]``.
* DMPFLP: ``x[i,j,t]``, ``zo[i,t]``, ``zc[i,t]``, ``y[i,t,k]``, ``u[t,k]``.

Slack bit ``k`` always has weight ``2**k``.
"""

from __future__ import annotations

import warnings
from functools import lru_cache
from dataclasses import dataclass, field

from .errors import LengthMismatch, UnknownFamily, UnsupportedFamily
from .instances import (
    DmpflpInstance,
    DompInstance,
    FcflpInstance,
    GapInstance,
    PCenterInstance,
    PMedianInstance,
)
from .qubo import QuboModel, VariableMap, energy, penalty_bound


class PenaltyWarning(UserWarning):
    """A user-supplied penalty is not above the equivalence bound."""


def slack_bits(upper):
    """Bits needed to represent every integer in ``[0, upper]``."""
    return int(upper).bit_length()


@dataclass(frozen=True)
class SlackEncoding:
    """Binary encoding of an integer slack owned by one constraint."""

    owner: tuple
    indices: tuple
    upper: int

    @property
    def weights(self):
        return tuple(2**k for k in range(len(self.indices)))

    @property
    def represented_max(self):
        return 2 ** len(self.indices) - 1

    def value(self, x):
        return sum(w * x[i] for w, i in zip(self.weights, self.indices))

    def encode(self, value):
        """Bits of ``value`` (must lie in the represented range)."""
        value = int(value)
        if not 0 <= value <= self.represented_max:
            raise ValueError(f"slack value {value} not representable")
        return [(value >> k) & 1 for k in range(len(self.indices))]


class Terms:
    """Exact accumulator for a quadratic pseudo-Boolean polynomial."""

    def __init__(self):
        self.const = 0
        self.coeffs = {}

    def add_const(self, c):
        self.const += c

    def add_linear(self, i, c):
        if c:
            self.coeffs[(i, i)] = self.coeffs.get((i, i), 0) + c

    def add_quad(self, i, j, c):
        if i > j:
            i, j = j, i
        if c:
            self.coeffs[(i, j)] = self.coeffs.get((i, j), 0) + c

    def add_square(self, weight, const, lin):
        """Add ``weight * (const + sum a * x_i)**2`` for ``lin = [(i, a), ...]``."""
        merged = {}
        for i, a in lin:
            merged[i] = merged.get(i, 0) + a
        items = sorted((i, a) for i, a in merged.items() if a)
        self.const += weight * const * const
        for k, (i, a) in enumerate(items):
            self.add_linear(i, weight * (a * a + 2 * const * a))
            for j, b in items[k + 1:]:
                self.add_quad(i, j, 2 * weight * a * b)

    def add_product_not(self, weight, i, j):
        """Add ``weight * x_i * (1 - x_j)``."""
        self.add_linear(i, weight)
        self.add_quad(i, j, -weight)

    def evaluate(self, x):
        total = self.const
        for (i, j), v in self.coeffs.items():
            if x[i] and x[j]:
                total += v
        return total

    def __iadd__(self, other):
        self.const += other.const
        for (i, j), v in other.coeffs.items():
            self.add_quad(i, j, v)
        return self


def table1_penalty(kind, vars, P):
    """Penalty terms for the three simple constraint shapes.

    Args:
        kind: ``"pair-at-most-one"`` (``x_i + x_j <= 1``), ``"leq-coupling"``
            (``x_i <= x_j``) or ``"set-at-most-one"`` (``sum x <= 1``).
        vars: Variable indices; two for the pair kinds, any number for the set.
        P: Penalty weight.

    Returns:
        A :class:`Terms` object holding the contributions.
    """
    t = Terms()
    if kind == "pair-at-most-one":
        i, j = vars
        t.add_quad(i, j, P)
    elif kind == "leq-coupling":
        i, j = vars
        t.add_product_not(P, i, j)
    elif kind == "set-at-most-one":
        vs = list(vars)
        for a in range(len(vs)):
            for b in range(a + 1, len(vs)):
                t.add_quad(vs[a], vs[b], P)
    else:
        raise ValueError(f"unknown penalty kind {kind!r}")
    return t


def _resolve_penalty(bound, penalty):
    if penalty is None:
        return bound
    if penalty < bound:
        warnings.warn(
            f"penalty {penalty} is below the equivalence bound {bound}",
            PenaltyWarning,
            stacklevel=4,
        )
    return penalty


def _slack_block(vm, kind, owner, upper):
    idx = [vm.add(kind, *owner, k) for k in range(slack_bits(upper))]
    return SlackEncoding(owner=tuple(owner), indices=tuple(idx), upper=int(upper))


def _lin(enc, sign=1):
    return [(i, sign * w) for i, w in zip(enc.indices, enc.weights)]


# ---------------------------------------------------------------------------
# per-family block construction


def _pmedian_blocks(inst, penalty):
    n, d, c = inst.n, inst.demand, inst.cost
    P = _resolve_penalty(penalty_bound([d[j] * c[i][j] for i in range(n) for j in range(n)]),
                         penalty)
    vm = VariableMap()
    x = {(i, j): vm.add("x", i, j) for i in range(n) for j in range(n)}
    y = {i: vm.add("y", i) for i in range(n)}
    obj, assign, link, card = Terms(), Terms(), Terms(), Terms()
    for (i, j), k in x.items():
        obj.add_linear(k, d[j] * c[i][j])
        link.add_product_not(P, k, y[i])
    for j in range(n):
        assign.add_square(P, 1, [(x[i, j], -1) for i in range(n)])
    card.add_square(P, inst.p, [(y[i], -1) for i in range(n)])
    blocks = {"objective": obj, "assign": assign, "link": link, "cardinality": card}
    return vm, blocks, P, []


def _pcenter_blocks(inst, penalty):
    n, dist, p = inst.n, inst.distance, inst.p
    dmin, dmax = inst.d_min, inst.d_max
    lz = slack_bits(dmax - dmin)
    P = _resolve_penalty(penalty_bound([2**k for k in range(lz)]), penalty)
    vm = VariableMap()
    x = {(i, j): vm.add("x", i, j) for i in range(n) for j in range(n)}
    y = {i: vm.add("y", i) for i in range(n)}
    z = [vm.add("z", k) for k in range(lz)]
    senc = [_slack_block(vm, "s", (j,), dmax) for j in range(n)]
    uenc = _slack_block(vm, "u", (), p)
    zlin = [(zk, 2**k) for k, zk in enumerate(z)]
    obj, assign, radius, link, card = Terms(), Terms(), Terms(), Terms(), Terms()
    obj.add_const(dmin)
    for i, w in zlin:
        obj.add_linear(i, w)
    for j in range(n):
        assign.add_square(P, 1, [(x[i, j], -1) for i in range(n)])
        radius.add_square(
            P, dmin,
            zlin + _lin(senc[j], -1) + [(x[i, j], -dist[i][j]) for i in range(n)],
        )
    for (i, j), k in x.items():
        link.add_product_not(P, k, y[i])
    card.add_square(P, p, [(y[i], -1) for i in range(n)] + _lin(uenc, -1))
    blocks = {"objective": obj, "assign": assign, "radius": radius, "link": link,
              "cardinality": card}
    return vm, blocks, P, senc + [uenc]


def _fcflp_blocks(inst, penalty, formulation):
    if formulation not in ("aggregated", "disaggregated"):
        raise ValueError(f"unknown FCFLP formulation {formulation!r}")
    n, d, q, f, c = inst.n, inst.demand, inst.capacity, inst.fixed_cost, inst.cost
    P = _resolve_penalty(penalty_bound(list(f) + [c[i][j] for i in range(n) for j in range(n)]),
                         penalty)
    vm = VariableMap()
    x = {(i, j): vm.add("x", i, j) for i in range(n) for j in range(n)}
    y = {i: vm.add("y", i) for i in range(n)}
    enc = [_slack_block(vm, "s", (i,), q[i]) for i in range(n)]
    obj, assign, cap = Terms(), Terms(), Terms()
    for i in range(n):
        obj.add_linear(y[i], f[i])
    for (i, j), k in x.items():
        obj.add_linear(k, c[i][j])
    for j in range(n):
        assign.add_square(P, 1, [(x[i, j], -1) for i in range(n)])
    for i in range(n):
        xs = [(x[i, j], -d[j]) for j in range(n)] + _lin(enc[i], -1)
        if formulation == "aggregated":
            cap.add_square(P, 0, [(y[i], q[i])] + xs)
        else:
            cap.add_square(P, q[i], xs)
    blocks = {"objective": obj, "assign": assign, "capacity": cap}
    if formulation == "disaggregated":
        link = Terms()
        for (i, j), k in x.items():
            link.add_product_not(P, k, y[i])
        blocks["link"] = link
    return vm, blocks, P, enc


def _gap_blocks(inst, penalty):
    S, n, d, q, c = inst.open_sites, inst.n, inst.demand, inst.capacity, inst.cost
    P = _resolve_penalty(penalty_bound([c[i][j] for i in S for j in range(n)]), penalty)
    vm = VariableMap()
    x = {(i, j): vm.add("x", i, j) for i in S for j in range(n)}
    enc = [_slack_block(vm, "s", (i,), q[i]) for i in S]
    obj, assign, cap = Terms(), Terms(), Terms()
    for (i, j), k in x.items():
        obj.add_linear(k, c[i][j])
    for j in range(n):
        assign.add_square(P, 1, [(x[i, j], -1) for i in S])
    for e, i in zip(enc, S):
        cap.add_square(P, q[i], [(x[i, j], -d[j]) for j in range(n)] + _lin(e, -1))
    return vm, {"objective": obj, "assign": assign, "capacity": cap}, P, enc


DOMP_BLOCKS = ("facility_count", "assign", "assign_open", "rank_col", "rank_row",
               "mc_s", "mc_y", "mc_lower", "monotone")


def _domp_blocks(inst, penalty):
    M, N, c, lam = inst.M, inst.N, inst.cost, inst.lam
    SC = inst.sc
    P = _resolve_penalty(
        penalty_bound([lam[i] * c[k][j] for i in range(M) for k in range(M) for j in range(M)]),
        penalty,
    )
    R = range(M)
    vm = VariableMap()
    x = [vm.add("x", j) for j in R]
    y = {(i, j): vm.add("y", i, j) for i in R for j in R}
    s = {(i, j): vm.add("s", i, j) for i in R for j in R}
    u = {(i, k, j): vm.add("u", i, k, j) for i in R for k in R for j in R}
    w = {(i, k, j, t): vm.add("w", i, k, j, t) for i in R for k in R for j in R for t in (0, 1)}
    enc = [_slack_block(vm, "v", (i,), SC) for i in range(M - 1)]
    b = {name: Terms() for name in ("objective",) + DOMP_BLOCKS}
    for (i, k, j), idx in u.items():
        b["objective"].add_linear(idx, lam[i] * c[k][j])
        b["mc_s"].add_product_not(P, idx, s[i, k])
        b["mc_y"].add_product_not(P, idx, y[k, j])
        b["mc_lower"].add_square(
            P, -1, [(idx, -1), (s[i, k], 1), (y[k, j], 1), (w[i, k, j, 0], 1), (w[i, k, j, 1], 2)]
        )
    b["facility_count"].add_square(P, -N, [(xj, 1) for xj in x])
    for i in R:
        b["assign"].add_square(P, -1, [(y[i, j], 1) for j in R])
        b["rank_row"].add_square(P, -1, [(s[i, j], 1) for j in R])
        b["rank_col"].add_square(P, -1, [(s[j, i], 1) for j in R])
        for j in R:
            b["assign_open"].add_product_not(P, y[i, j], x[j])
    for i in range(M - 1):
        lin = []
        for k in R:
            for j in R:
                lin += [(u[i, k, j], c[k][j]), (u[i + 1, k, j], -c[k][j])]
        b["monotone"].add_square(P, 0, lin + _lin(enc[i]))
    return vm, b, P, enc


def _dmpflp_blocks(inst, penalty):
    n, T, p = inst.n, inst.periods, inst.p
    c, g, h, m = inst.cost, inst.open_cost, inst.close_cost, inst.open_limit
    N = range(n)
    P = _resolve_penalty(
        penalty_bound([c[i][j][t] for i in N for j in N for t in range(T)]
                      + [g[i][t] for i in N for t in range(T)]
                      + [h[i][t] for i in N for t in range(T)]),
        penalty,
    )
    vm = VariableMap()
    x = {(i, j, t): vm.add("x", i, j, t) for i in N for j in N for t in range(T)}
    zo = {(i, t): vm.add("zo", i, t) for i in N for t in range(T)}
    zc = {(i, t): vm.add("zc", i, t) for i in N for t in range(T)}
    yenc = {(i, t): _slack_block(vm, "y", (i, t), n) for i in N for t in range(T)}
    uenc = [_slack_block(vm, "u", (t,), m[t]) for t in range(T)]
    b = {k: Terms() for k in ("objective", "assign", "open_link", "count", "open_limit",
                              "balance")}
    for (i, j, t), k in x.items():
        b["objective"].add_linear(k, c[i][j][t])
    for (i, t), k in zo.items():
        b["objective"].add_linear(k, g[i][t])
    for (i, t), k in zc.items():
        b["objective"].add_linear(k, h[i][t])
    for t in range(T):
        for j in N:
            b["assign"].add_square(P, 1, [(x[i, j, t], -1) for i in N])
        for i in N:
            b["open_link"].add_square(
                P, 0, [(x[i, i, t], n)] + [(x[i, j, t], -1) for j in N] + _lin(yenc[i, t], -1)
            )
        b["count"].add_square(P, p, [(x[i, i, t], -1) for i in N])
        b["open_limit"].add_square(P, m[t], _lin(uenc[t], -1) + [(zo[i, t], -1) for i in N])
        if t >= 1:
            for i in N:
                b["balance"].add_square(
                    P, 0, [(x[i, i, t], 1), (x[i, i, t - 1], -1), (zc[i, t - 1], 1),
                           (zo[i, t], -1)]
                )
    return vm, b, P, [yenc[k] for k in sorted(yenc)] + uenc


def _dispatch(inst, formulation, penalty):
    if isinstance(inst, PMedianInstance):
        return "pmedian", None, _pmedian_blocks(inst, penalty)
    if isinstance(inst, PCenterInstance):
        return "pcenter", None, _pcenter_blocks(inst, penalty)
    if isinstance(inst, FcflpInstance):
        form = formulation or "aggregated"
        return "fcflp", form, _fcflp_blocks(inst, penalty, form)
    if isinstance(inst, GapInstance):
        return "gap", None, _gap_blocks(inst, penalty)
    if isinstance(inst, DompInstance):
        return "domp", None, _domp_blocks(inst, penalty)
    if isinstance(inst, DmpflpInstance):
        return "dmpflp", None, _dmpflp_blocks(inst, penalty)
    raise UnknownFamily(type(inst).__name__)


def _to_model(vm, terms, **kw):
    return QuboModel(n_vars=len(vm), coeffs=dict(terms.coeffs), offset=terms.const, var_map=vm,
                     **kw)


def hamiltonian_blocks(inst, formulation=None, penalty=None):
    """Return ``{block_name: QuboModel}`` with one model per Hamiltonian term.

    All block models share the variable layout of the full model; their
    energies sum to the full model's energy.
    """
    family, form, (vm, blocks, P, _) = _dispatch(inst, formulation, penalty)
    return {name: _to_model(vm, t, penalty=P, family=family, formulation=form, instance=inst)
            for name, t in blocks.items()}


def build_qubo(inst, formulation=None, penalty=None):
    """Build the penalised QUBO for any supported instance type."""
    family, form, (vm, blocks, P, _) = _dispatch(inst, formulation, penalty)
    total = Terms()
    for t in blocks.values():
        total += t
    return _to_model(vm, total, penalty=P, family=family, formulation=form, instance=inst)


def build_pmedian(inst, penalty=None):
    """p-Median QUBO with ``n**2 + n`` variables and offset ``P (n + p**2)``."""
    return build_qubo(inst, penalty=penalty)


def build_pcenter(inst, penalty=None):
    """p-Center QUBO; the objective bits encode ``z - d_min``."""
    return build_qubo(inst, penalty=penalty)


def build_fcflp_aggregated(inst, penalty=None):
    """FCFLP QUBO with the aggregated capacity/coupling rows ``d x + s = q y``."""
    return build_qubo(inst, formulation="aggregated", penalty=penalty)


def build_fcflp_disaggregated(inst, penalty=None):
    """FCFLP QUBO with capacity rows ``d x + s = q`` and pairwise ``x <= y`` terms."""
    return build_qubo(inst, formulation="disaggregated", penalty=penalty)


def build_gap(inst, penalty=None):
    """Generalized assignment QUBO over the instance's open sites."""
    return build_qubo(inst, penalty=penalty)


def build_domp(inst, penalty=None):
    """Ordered median QUBO with McCormick-linearised rank products."""
    return build_qubo(inst, penalty=penalty)


def build_dmpflp(inst, penalty=None):
    """Multi-period p-Median QUBO with opening and closing decisions."""
    return build_qubo(inst, penalty=penalty)


@lru_cache(maxsize=64)
def _cached_encodings(inst, formulation):
    return tuple(_dispatch(inst, formulation, None)[2][3])


@lru_cache(maxsize=64)
def _cached_objective(inst, formulation):
    return hamiltonian_blocks(inst, formulation)["objective"]


def slack_encodings(q):
    """Slack encodings of a built model, in variable order."""
    return _cached_encodings(q.instance, q.formulation)


def penalty_energy(q, x):
    """Energy minus the objective block: the total penalty paid by ``x``."""
    return energy(q, x) - energy(_cached_objective(q.instance, q.formulation), x)


# ---------------------------------------------------------------------------
# decoding


@dataclass
class StructuredSolution:
    """Decoded sample.

    Attributes:
        family: Problem tag.
        values: Named variable values, e.g. ``values["x"][(i, j)]``.
        opened: Sorted 0-based sites with an open facility.
        assignment: ``client -> facility`` for clients assigned exactly once.
        feasible: All original constraints hold (``violations`` is empty).
        violations: ``(constraint_id, residual)`` pairs for original constraints.
        slack_violations: Encoding mismatches of slack/auxiliary variables.
            These are not original constraints but make the penalty nonzero.
        objective: Original objective evaluated on the decoded variables.
        original_objective: ``objective`` when feasible, else ``None``.
    """

    family: str
    values: dict
    opened: tuple
    assignment: dict
    feasible: bool
    violations: list
    slack_violations: list = field(default_factory=list)
    objective: object = None
    original_objective: object = None

    @property
    def consistent(self):
        """Feasible and every slack/auxiliary encoding matches its residual."""
        return self.feasible and not self.slack_violations


def _values(q, x):
    vals = {}
    for idx, (kind, *key) in enumerate(q.var_map):
        vals.setdefault(kind, {})[tuple(key) if len(key) != 1 else key[0]] = x[idx]
    return vals


def _assign_map(xv, sites, clients):
    out = {}
    for j in clients:
        hits = [i for i in sites if xv[(i, j)]]
        if len(hits) == 1:
            out[j] = hits[0]
    return out


def decode(q, x):
    """Reconstruct named variables and check the original constraints."""
    if q.family is None or q.instance is None:
        raise UnknownFamily("model carries no family metadata")
    x = [int(b) for b in x]
    if len(x) != q.n_vars:
        raise LengthMismatch(f"bitstring has length {len(x)}, model has {q.n_vars} variables")
    fn = _DECODERS.get(q.family)
    if fn is None:
        raise UnknownFamily(q.family)
    vals = _values(q, x)
    viol, slack, opened, assign, obj = fn(q, x, vals)
    feasible = not viol
    return StructuredSolution(
        family=q.family, values=vals, opened=tuple(sorted(opened)), assignment=assign,
        feasible=feasible, violations=viol, slack_violations=slack, objective=obj,
        original_objective=obj if feasible else None,
    )


def _check_assign(viol, xv, sites, clients, tag="assign"):
    for j in clients:
        r = 1 - sum(xv[(i, j)] for i in sites)
        if r:
            viol.append(((tag, j), r))


def _check_link(viol, xv, yv, sites, clients):
    for i in sites:
        for j in clients:
            if xv[(i, j)] > yv[i]:
                viol.append((("link", i, j), 1))


def _check_slack(slack, enc, x, required, tag):
    got = enc.value(x)
    if got != required:
        slack.append(((tag, *enc.owner), got - required))


def _decode_pmedian(q, x, v):
    inst = q.instance
    n = inst.n
    xv, yv = v["x"], v["y"]
    viol = []
    _check_assign(viol, xv, range(n), range(n))
    _check_link(viol, xv, yv, range(n), range(n))
    r = inst.p - sum(yv.values())
    if r:
        viol.append((("cardinality",), r))
    obj = sum(inst.demand[j] * inst.cost[i][j] * xv[(i, j)] for i in range(n) for j in range(n))
    opened = [i for i in range(n) if yv[i]]
    return viol, [], opened, _assign_map(xv, range(n), range(n)), obj


def _decode_pcenter(q, x, v):
    inst = q.instance
    n, d = inst.n, inst.distance
    xv, yv = v["x"], v["y"]
    encs = {enc.owner: enc for enc in slack_encodings(q)}
    zbits = v.get("z", {})
    z = inst.d_min + sum(2**k * b for k, b in zbits.items())
    viol, slack = [], []
    _check_assign(viol, xv, range(n), range(n))
    for j in range(n):
        load = sum(d[i][j] * xv[(i, j)] for i in range(n))
        if load > z:
            viol.append((("radius", j), load - z))
        _check_slack(slack, encs[(j,)], x, z - load, "slack_radius")
    _check_link(viol, xv, yv, range(n), range(n))
    open_count = sum(yv.values())
    if open_count > inst.p:
        viol.append((("cardinality",), open_count - inst.p))
    _check_slack(slack, encs[()], x, inst.p - open_count, "slack_cardinality")
    opened = [i for i in range(n) if yv[i]]
    return viol, slack, opened, _assign_map(xv, range(n), range(n)), z


def _decode_fcflp(q, x, v):
    inst = q.instance
    n, d, cap = inst.n, inst.demand, inst.capacity
    xv, yv = v["x"], v["y"]
    viol, slack = [], []
    _check_assign(viol, xv, range(n), range(n))
    agg = q.formulation == "aggregated"
    for enc in slack_encodings(q):
        i = enc.owner[0]
        load = sum(d[j] * xv[(i, j)] for j in range(n))
        limit = cap[i] * yv[i] if agg else cap[i]
        if load > limit:
            viol.append((("capacity", i), load - limit))
        _check_slack(slack, enc, x, limit - load, "slack_capacity")
    if not agg:
        _check_link(viol, xv, yv, range(n), range(n))
    obj = sum(inst.fixed_cost[i] * yv[i] for i in range(n)) + sum(
        inst.cost[i][j] * xv[(i, j)] for i in range(n) for j in range(n)
    )
    opened = [i for i in range(n) if yv[i]]
    return viol, slack, opened, _assign_map(xv, range(n), range(n)), obj


def _decode_gap(q, x, v):
    inst = q.instance
    S, n, d = inst.open_sites, inst.n, inst.demand
    xv = v["x"]
    viol, slack = [], []
    _check_assign(viol, xv, S, range(n))
    for enc in slack_encodings(q):
        i = enc.owner[0]
        load = sum(d[j] * xv[(i, j)] for j in range(n))
        if load > inst.capacity[i]:
            viol.append((("capacity", i), load - inst.capacity[i]))
        _check_slack(slack, enc, x, inst.capacity[i] - load, "slack_capacity")
    obj = sum(inst.cost[i][j] * xv[(i, j)] for i in S for j in range(n))
    return viol, slack, list(S), _assign_map(xv, S, range(n)), obj


def _decode_domp(q, x, v):
    inst = q.instance
    M, c, lam = inst.M, inst.cost, inst.lam
    R = range(M)
    xv, yv, sv, uv, wv = v["x"], v["y"], v["s"], v["u"], v["w"]
    viol, slack = [], []
    r = sum(xv.values()) - inst.N
    if r:
        viol.append((("facility_count",), r))
    for i in R:
        r = sum(yv[(i, j)] for j in R) - 1
        if r:
            viol.append((("assign", i), r))
        for j in R:
            if yv[(i, j)] > xv[j]:
                viol.append((("assign_open", i, j), 1))
    for j in R:
        r = sum(sv[(i, j)] for i in R) - 1
        if r:
            viol.append((("rank_col", j), r))
    for i in R:
        r = sum(sv[(i, j)] for j in R) - 1
        if r:
            viol.append((("rank_row", i), r))
    client_cost = [sum(yv[(k, j)] * c[k][j] for j in R) for k in R]
    rank_cost = [sum(sv[(i, k)] * client_cost[k] for k in R) for i in R]
    for i in range(M - 1):
        if rank_cost[i] > rank_cost[i + 1]:
            viol.append((("monotone", i), rank_cost[i] - rank_cost[i + 1]))
    for i in R:
        for k in R:
            for j in R:
                prod = sv[(i, k)] * yv[(k, j)]
                if uv[(i, k, j)] != prod:
                    slack.append((("aux_u", i, k, j), uv[(i, k, j)] - prod))
                need = uv[(i, k, j)] - sv[(i, k)] - yv[(k, j)] + 1
                got = wv[(i, k, j, 0)] + 2 * wv[(i, k, j, 1)]
                if got != need:
                    slack.append((("aux_w", i, k, j), got - need))
    u_cost = [sum(c[k][j] * uv[(i, k, j)] for k in R for j in R) for i in R]
    for enc in slack_encodings(q):
        i = enc.owner[0]
        _check_slack(slack, enc, x, u_cost[i + 1] - u_cost[i], "slack_monotone")
    obj = sum(lam[i] * rank_cost[i] for i in R)
    opened = [j for j in R if xv[j]]
    return viol, slack, opened, _assign_map({(j, i): yv[(i, j)] for i in R for j in R}, R, R), obj


def _decode_dmpflp(q, x, v):
    inst = q.instance
    n, T = inst.n, inst.periods
    N = range(n)
    xv, zo, zc = v["x"], v["zo"], v["zc"]
    viol, slack = [], []
    encs = {enc.owner: enc for enc in slack_encodings(q)}
    for t in range(T):
        for j in N:
            r = 1 - sum(xv[(i, j, t)] for i in N)
            if r:
                viol.append((("assign", j, t), r))
        for i in N:
            load = sum(xv[(i, j, t)] for j in N)
            if load > n * xv[(i, i, t)]:
                viol.append((("open_link", i, t), load - n * xv[(i, i, t)]))
            _check_slack(slack, encs[(i, t)], x, n * xv[(i, i, t)] - load, "slack_open_link")
        r = inst.p - sum(xv[(i, i, t)] for i in N)
        if r:
            viol.append((("count", t), r))
        opens = sum(zo[(i, t)] for i in N)
        if opens > inst.open_limit[t]:
            viol.append((("open_limit", t), opens - inst.open_limit[t]))
        _check_slack(slack, encs[(t,)], x, inst.open_limit[t] - opens, "slack_open_limit")
        if t >= 1:
            for i in N:
                r = xv[(i, i, t)] - xv[(i, i, t - 1)] + zc[(i, t - 1)] - zo[(i, t)]
                if r:
                    viol.append((("balance", i, t), r))
    obj = (
        sum(inst.cost[i][j][t] * xv[(i, j, t)] for i in N for j in N for t in range(T))
        + sum(inst.open_cost[i][t] * zo[(i, t)] for i in N for t in range(T))
        + sum(inst.close_cost[i][t] * zc[(i, t)] for i in N for t in range(T))
    )
    opened = [i for i in N if any(xv[(i, i, t)] for t in range(T))]
    assign = {}
    for t in range(T):
        for j in N:
            hits = [i for i in N if xv[(i, j, t)]]
            if len(hits) == 1:
                assign[(j, t)] = hits[0]
    return viol, slack, opened, assign, obj


_DECODERS = {
    "pmedian": _decode_pmedian,
    "pcenter": _decode_pcenter,
    "fcflp": _decode_fcflp,
    "gap": _decode_gap,
    "domp": _decode_domp,
    "dmpflp": _decode_dmpflp,
}


def encode_solution(q, **parts):
    """Bitstring with the given named values set; all other bits are zero.

    ``parts`` maps a variable kind to ``{key: bit}``; keys follow the var map
    (a bare int for one-index kinds).
    """
    x = [0] * q.n_vars
    for kind, mapping in parts.items():
        for key, bit in mapping.items():
            key = key if isinstance(key, tuple) else (key,)
            x[q.var_map.index(kind, *key)] = int(bit)
    return x


def complete_slacks(q, x):
    """Set every slack and auxiliary bit to its consistent value for ``x``'s
    primary variables. Residuals outside the represented range leave the bits
    as they are. Returns a new bitstring."""
    x = list(x)
    sol = decode(q, x)
    vm = q.var_map
    if q.family == "domp":
        M = q.instance.M
        R = range(M)
        v = sol.values
        for i in R:
            for k in R:
                for j in R:
                    u = v["s"][(i, k)] * v["y"][(k, j)]
                    x[vm.index("u", i, k, j)] = u
                    need = 1 + u - v["s"][(i, k)] - v["y"][(k, j)]
                    x[vm.index("w", i, k, j, 0)] = need & 1
                    x[vm.index("w", i, k, j, 1)] = need >> 1
        sol = decode(q, x)
    for (tag, *owner), resid in sol.slack_violations:
        enc = _find_encoding(q, tag, tuple(owner))
        if enc is None:
            continue
        required = enc.value(x) - resid
        if 0 <= required <= enc.represented_max:
            for i, b in zip(enc.indices, enc.encode(required)):
                x[i] = b
    return x


def _find_encoding(q, tag, owner):
    for enc in slack_encodings(q):
        if enc.owner == owner:
            return enc
    return None
