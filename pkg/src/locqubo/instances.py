"""Problem-instance data types, JSON I/O, built-in tables and random generation.

Six location-science families are supported. Each instance is an immutable
dataclass whose matrices are stored as nested tuples so that equality and
hashing are exact. Site and client indices are 0-based throughout.

Cost orientation differs between families and follows the usual model
notation: for p-Median, p-Center, FCFLP and GAP ``cost[i][j]`` is the cost of
serving client ``j`` from facility ``i``; for DOMP ``cost[k][j]`` is the cost
of serving client ``k`` from facility ``j``.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .errors import ParseError, UnknownFamily, UnknownTable, ValidationError

FAMILIES = ("pmedian", "pcenter", "fcflp", "gap", "domp", "dmpflp")


class RealCostWarning(UserWarning):
    """Non-integral cost data was loaded; exact matrix oracles do not apply."""


class CapacityWarning(UserWarning):
    """Total capacity is below total demand, so the instance is infeasible."""


def _as_number(v):
    if isinstance(v, bool):
        raise TypeError("boolean is not a number")
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return int(v) if v.is_integer() else v


def _vector(name, values, *, integer=False):
    try:
        out = tuple(_as_number(v) for v in values)
    except (TypeError, ValueError):
        raise ValidationError(name, "expected a list of numbers") from None
    if integer and any(not isinstance(v, int) for v in out):
        raise ValidationError(name, "entries must be integers")
    return out


def _matrix(name, rows, shape, *, integer=False):
    try:
        out = tuple(_vector(name, r, integer=integer) for r in rows)
    except TypeError:
        raise ValidationError(name, "expected a nested list") from None
    if len(out) != shape[0] or any(len(r) != shape[1] for r in out):
        raise ValidationError(name, f"expected shape {shape}")
    return out


def _flag_reals(name, values):
    if any(isinstance(v, float) for v in np.ravel(np.asarray(values, dtype=object))):
        warnings.warn(f"{name} contains non-integral values", RealCostWarning, stacklevel=3)


def _nonneg(name, values):
    if np.any(np.asarray(values, dtype=float) < 0):
        raise ValidationError(name, "entries must be nonnegative")


@dataclass(frozen=True)
class PMedianInstance:
    """Demand-weighted p-Median data: open ``p`` of ``n`` sites."""

    n: int
    p: int
    demand: tuple
    cost: tuple
    name: str = ""
    family = "pmedian"

    def __post_init__(self):
        object.__setattr__(self, "demand", _vector("demand", self.demand, integer=True))
        object.__setattr__(self, "cost", _matrix("cost", self.cost, (self.n, self.n)))
        if len(self.demand) != self.n:
            raise ValidationError("demand", f"expected length {self.n}")
        if not 1 <= self.p < self.n:
            raise ValidationError("p", "requires 1 <= p < n")
        if min(self.demand) < 1:
            raise ValidationError("demand", "entries must be >= 1")
        _nonneg("cost", self.cost)
        _flag_reals("cost", self.cost)


@dataclass(frozen=True)
class PCenterInstance:
    """p-Center data with integral distances ``distance[i][j]``."""

    n: int
    p: int
    distance: tuple
    name: str = ""
    family = "pcenter"

    def __post_init__(self):
        object.__setattr__(
            self, "distance", _matrix("distance", self.distance, (self.n, self.n), integer=True)
        )
        if not 1 <= self.p < self.n:
            raise ValidationError("p", "requires 1 <= p < n")
        _nonneg("distance", self.distance)

    @property
    def d_max(self):
        return max(max(r) for r in self.distance)

    @property
    def d_min(self):
        return min(min(r) for r in self.distance)


@dataclass(frozen=True)
class FcflpInstance:
    """Capacitated fixed-charge facility location data."""

    n: int
    demand: tuple
    capacity: tuple
    fixed_cost: tuple
    cost: tuple
    name: str = ""
    family = "fcflp"

    def __post_init__(self):
        object.__setattr__(self, "demand", _vector("demand", self.demand, integer=True))
        object.__setattr__(self, "capacity", _vector("capacity", self.capacity, integer=True))
        object.__setattr__(self, "fixed_cost", _vector("fixed_cost", self.fixed_cost))
        object.__setattr__(self, "cost", _matrix("cost", self.cost, (self.n, self.n)))
        for fname in ("demand", "capacity", "fixed_cost"):
            if len(getattr(self, fname)) != self.n:
                raise ValidationError(fname, f"expected length {self.n}")
        if min(self.demand) < 1:
            raise ValidationError("demand", "entries must be >= 1")
        if min(self.capacity) < 1:
            raise ValidationError("capacity", "entries must be >= 1")
        _nonneg("fixed_cost", self.fixed_cost)
        _nonneg("cost", self.cost)
        _flag_reals("fixed_cost", self.fixed_cost)
        _flag_reals("cost", self.cost)
        if sum(self.capacity) < sum(self.demand):
            warnings.warn("total capacity below total demand", CapacityWarning, stacklevel=3)


@dataclass(frozen=True)
class GapInstance:
    """Generalized assignment data over a fixed set of open sites.

    ``capacity`` and ``cost`` are indexed by site over all ``n`` sites; only
    the rows listed in ``open_sites`` enter the model.
    """

    n: int
    open_sites: tuple
    demand: tuple
    capacity: tuple
    cost: tuple
    name: str = ""
    family = "gap"

    def __post_init__(self):
        object.__setattr__(self, "open_sites", _vector("open_sites", self.open_sites, integer=True))
        object.__setattr__(self, "demand", _vector("demand", self.demand, integer=True))
        object.__setattr__(self, "capacity", _vector("capacity", self.capacity, integer=True))
        object.__setattr__(self, "cost", _matrix("cost", self.cost, (self.n, self.n)))
        if not self.open_sites:
            raise ValidationError("open_sites", "must be nonempty")
        if len(set(self.open_sites)) != len(self.open_sites) or not all(
            0 <= i < self.n for i in self.open_sites
        ):
            raise ValidationError("open_sites", "must be distinct site indices in [0, n)")
        object.__setattr__(self, "open_sites", tuple(sorted(self.open_sites)))
        for fname in ("demand", "capacity"):
            if len(getattr(self, fname)) != self.n:
                raise ValidationError(fname, f"expected length {self.n}")
        if min(self.demand) < 1:
            raise ValidationError("demand", "entries must be >= 1")
        if min(self.capacity[i] for i in self.open_sites) < 1:
            raise ValidationError("capacity", "entries must be >= 1")
        _nonneg("cost", self.cost)
        _flag_reals("cost", self.cost)


@dataclass(frozen=True)
class DompInstance:
    """Discrete ordered median data: ``M`` sites, open ``N``, rank weights ``lam``."""

    M: int
    N: int
    cost: tuple
    lam: tuple
    name: str = ""
    family = "domp"

    def __post_init__(self):
        object.__setattr__(self, "cost", _matrix("cost", self.cost, (self.M, self.M), integer=True))
        object.__setattr__(self, "lam", _vector("lambda", self.lam))
        if len(self.lam) != self.M:
            raise ValidationError("lambda", f"expected length {self.M}")
        if not 1 <= self.N < self.M:
            raise ValidationError("p", "requires 1 <= N < M")
        _nonneg("cost", self.cost)
        _nonneg("lambda", self.lam)

    @property
    def sc(self):
        return sum(sum(r) for r in self.cost)


@dataclass(frozen=True)
class DmpflpInstance:
    """Multi-period p-Median data with opening/closing costs.

    ``cost`` has shape (n, n, T), ``open_cost``/``close_cost`` (n, T) and
    ``open_limit`` has length T.
    """

    n: int
    p: int
    periods: int
    cost: tuple
    open_cost: tuple
    close_cost: tuple
    open_limit: tuple
    name: str = ""
    family = "dmpflp"

    def __post_init__(self):
        n, T = self.n, self.periods
        if T < 1:
            raise ValidationError("periods", "must be >= 1")
        try:
            cost = tuple(_matrix("cost", plane, (n, T)) for plane in self.cost)
        except ValidationError:
            raise
        if len(cost) != n:
            raise ValidationError("cost", f"expected shape {(n, n, T)}")
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "open_cost", _matrix("open_cost", self.open_cost, (n, T)))
        object.__setattr__(self, "close_cost", _matrix("close_cost", self.close_cost, (n, T)))
        object.__setattr__(
            self, "open_limit", _vector("open_limit", self.open_limit, integer=True)
        )
        if len(self.open_limit) != T:
            raise ValidationError("open_limit", f"expected length {T}")
        if not 1 <= self.p < n:
            raise ValidationError("p", "requires 1 <= p < n")
        if min(self.open_limit) < 0:
            raise ValidationError("open_limit", "entries must be >= 0")
        for fname in ("cost", "open_cost", "close_cost"):
            _nonneg(fname, getattr(self, fname))


ProblemInstance = Union[
    PMedianInstance, PCenterInstance, FcflpInstance, GapInstance, DompInstance, DmpflpInstance
]

# JSON key -> dataclass field, per family
_SCHEMA = {
    "pmedian": (PMedianInstance, {"n": "n", "p": "p", "demand": "demand", "cost": "cost"}),
    "pcenter": (PCenterInstance, {"n": "n", "p": "p", "distance": "distance"}),
    "fcflp": (
        FcflpInstance,
        {"n": "n", "demand": "demand", "capacity": "capacity",
         "fixed_cost": "fixed_cost", "cost": "cost"},
    ),
    "gap": (
        GapInstance,
        {"n": "n", "open_sites": "open_sites", "demand": "demand",
         "capacity": "capacity", "cost": "cost"},
    ),
    "domp": (DompInstance, {"n": "M", "p": "N", "cost": "cost", "lambda": "lam"}),
    "dmpflp": (
        DmpflpInstance,
        {"n": "n", "p": "p", "periods": "periods", "cost": "cost", "open_cost": "open_cost",
         "close_cost": "close_cost", "open_limit": "open_limit"},
    ),
}


def _to_lists(v):
    if isinstance(v, tuple):
        return [_to_lists(x) for x in v]
    return v


def instance_to_dict(inst):
    """Serialize an instance to the JSON-ready schema dictionary."""
    _, keys = _SCHEMA[inst.family]
    out = {"family": inst.family}
    for key, attr in keys.items():
        out[key] = _to_lists(getattr(inst, attr))
    if inst.name:
        out["name"] = inst.name
    return out


def instance_from_dict(data, family=None):
    """Build and validate an instance from a schema dictionary."""
    if not isinstance(data, dict):
        raise ParseError("instance JSON must be an object")
    fam = data.get("family", family)
    if fam is None:
        raise ValidationError("family", "missing")
    if family is not None and fam != family:
        raise ValidationError("family", f"file declares {fam!r}, expected {family!r}")
    if fam not in _SCHEMA:
        raise UnknownFamily(fam)
    cls, keys = _SCHEMA[fam]
    unknown = set(data) - set(keys) - {"family", "name"}
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown key")
    missing = set(keys) - set(data)
    if missing:
        raise ValidationError(sorted(missing)[0], "missing")
    kwargs = {attr: data[key] for key, attr in keys.items()}
    for attr in ("n", "p", "M", "N", "periods"):
        if attr in kwargs and (isinstance(kwargs[attr], bool) or not isinstance(kwargs[attr], int)):
            raise ValidationError(attr, "must be an integer")
    return cls(name=data.get("name", ""), **kwargs)


def load_instance(path, family=None):
    """Read a JSON instance file and return the validated instance."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return instance_from_dict(data, family)


def dump_instance(inst, path=None):
    """Return the instance as JSON text, optionally writing it to ``path``."""
    text = json.dumps(instance_to_dict(inst), indent=2)
    if path is not None:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------------------
# Built-in instance data (n = 3 and n = 4)

_PMEDIAN_3 = [
    ([9, 8, 4], [[1, 9, 1], [8, 0, 2], [8, 7, 0]]),
    ([9, 7, 4], [[1, 5, 3], [2, 0, 6], [9, 4, 0]]),
    ([3, 5, 3], [[1, 2, 4], [6, 0, 3], [4, 3, 0]]),
    ([7, 7, 8], [[1, 6, 3], [3, 1, 9], [5, 2, 0]]),
    ([7, 3, 5], [[0, 5, 9], [4, 1, 9], [7, 3, 1]]),
    ([4, 4, 9], [[1, 4, 2], [3, 1, 6], [6, 1, 1]]),
    ([8, 6, 6], [[1, 5, 4], [5, 1, 6], [8, 5, 0]]),
    ([9, 3, 5], [[1, 7, 5], [4, 1, 7], [9, 4, 1]]),
    ([6, 5, 7], [[1, 6, 5], [3, 1, 2], [7, 2, 1]]),
    ([8, 5, 7], [[0, 1, 9], [2, 0, 1], [5, 5, 0]]),
]

_PMEDIAN_4 = [
    ([4, 4, 13, 11], [[2, 11, 13, 6], [14, 0, 15, 11], [5, 14, 1, 6], [5, 12, 15, 2]]),
    ([6, 15, 8, 12], [[0, 15, 3, 2], [2, 1, 5, 7], [3, 13, 1, 6], [5, 3, 15, 2]]),
    ([7, 11, 12, 6], [[1, 9, 9, 6], [3, 1, 12, 12], [10, 11, 1, 15], [3, 3, 6, 2]]),
    ([7, 9, 4, 4], [[0, 5, 3, 11], [12, 1, 14, 11], [16, 5, 1, 3], [13, 4, 12, 1]]),
    ([9, 11, 15, 8], [[1, 11, 6, 11], [11, 1, 15, 10], [10, 2, 2, 10], [11, 12, 9, 2]]),
    ([10, 12, 13, 16], [[0, 9, 12, 16], [16, 0, 4, 2], [6, 12, 0, 10], [10, 2, 5, 0]]),
    ([9, 7, 9, 15], [[2, 8, 7, 4], [10, 2, 8, 12], [9, 15, 2, 16], [9, 13, 16, 0]]),
    ([16, 10, 16, 12], [[2, 3, 8, 16], [10, 1, 14, 3], [2, 12, 2, 9], [4, 10, 12, 2]]),
    ([8, 10, 7, 15], [[1, 2, 15, 15], [11, 1, 7, 11], [10, 2, 0, 13], [16, 7, 13, 2]]),
    ([6, 8, 11, 5], [[2, 7, 13, 2], [15, 0, 3, 8], [6, 12, 1, 2], [2, 7, 13, 2]]),
]

# (demand, cost, fixed cost, capacity)
_FCFLP_3 = [
    ([3, 8, 10], [[0, 4, 4], [9, 0, 2], [5, 5, 0]], [25, 9, 17], [12, 10, 10]),
    ([7, 10, 6], [[0, 2, 7], [1, 0, 6], [3, 7, 0]], [17, 17, 1], [10, 13, 12]),
    ([3, 8, 9], [[1, 3, 5], [7, 1, 4], [3, 8, 1]], [16, 9, 2], [12, 13, 11]),
    ([8, 10, 3], [[0, 1, 9], [9, 0, 5], [2, 4, 0]], [9, 2, 3], [15, 10, 16]),
    ([6, 5, 8], [[1, 4, 4], [8, 0, 6], [8, 8, 1]], [10, 17, 26], [8, 13, 9]),
    ([8, 3, 3], [[0, 2, 4], [2, 0, 8], [7, 8, 1]], [8, 23, 11], [13, 9, 10]),
    ([6, 10, 7], [[1, 5, 4], [3, 1, 1], [8, 7, 1]], [16, 2, 23], [10, 14, 12]),
    ([4, 8, 10], [[0, 4, 5], [2, 1, 2], [2, 9, 1]], [26, 13, 11], [13, 14, 10]),
    ([4, 10, 3], [[1, 6, 4], [8, 1, 4], [9, 6, 1]], [6, 19, 1], [14, 10, 10]),
    ([7, 5, 9], [[1, 5, 1], [7, 1, 8], [8, 8, 0]], [2, 6, 15], [13, 10, 9]),
]

_DEFAULT_P = {3: 1, 4: 2}


def builtin_instances(family, size, p=None):
    """Return the ten tabulated instances for ``(family, size)`` in table order.

    Supported keys are ``("pmedian", 3)``, ``("pmedian", 4)`` and
    ``("fcflp", 3)``. The p-Median tables carry no ``p``; it defaults to 1
    for ``n = 3`` and 2 for ``n = 4`` and may be overridden.
    """
    if family == "pmedian" and size in (3, 4):
        table = _PMEDIAN_3 if size == 3 else _PMEDIAN_4
        p = _DEFAULT_P[size] if p is None else p
        return [
            PMedianInstance(n=size, p=p, demand=d, cost=c, name=f"pmedian-{size}-{k}")
            for k, (d, c) in enumerate(table, start=1)
        ]
    if family == "fcflp" and size == 3:
        return [
            FcflpInstance(n=3, demand=d, capacity=q, fixed_cost=f, cost=c, name=f"fcflp-3-{k}")
            for k, (d, c, f, q) in enumerate(_FCFLP_3, start=1)
        ]
    raise UnknownTable(f"no built-in table for ({family!r}, {size})")


# ---------------------------------------------------------------------------
# Random generation

DEFAULT_RANGES = {
    "pmedian": {"demand": (1, 10), "cost": (1, 15), "self_cost": (0, 2)},
    "pcenter": {"distance": (1, 3), "self_distance": (0, 1)},
    "fcflp": {"demand": (3, 10), "capacity": (8, 15), "fixed_cost": (1, 26),
              "cost": (1, 9), "self_cost": (0, 1)},
    "gap": {"demand": (1, 6), "capacity": (4, 12), "cost": (1, 9),
            "self_cost": (0, 1), "open": (2, 2)},
    "domp": {"cost": (1, 5), "self_cost": (0, 1), "lambda": (0, 2)},
    "dmpflp": {"periods": (2, 2), "cost": (1, 9), "self_cost": (0, 1),
               "open_cost": (0, 5), "close_cost": (0, 5), "open_limit": (1, 2)},
}


def _site_costs(rng, n, rng_off, rng_diag):
    c = rng.integers(rng_off[0], rng_off[1] + 1, size=(n, n))
    np.fill_diagonal(c, rng.integers(rng_diag[0], rng_diag[1] + 1, size=n))
    return c.tolist()


def _assignment_exists(n_clients, sites, demand, capacity):
    for assign in itertools.product(sites, repeat=n_clients):
        load = dict.fromkeys(sites, 0)
        for j, i in enumerate(assign):
            load[i] += demand[j]
        if all(load[i] <= capacity[i] for i in sites):
            return True
    return False


def random_instance(family, n, seed, ranges=None, p=None):
    """Draw a reproducible random instance.

    Off-diagonal costs come from ``ranges["cost"]`` while self-service costs
    come from the smaller ``ranges["self_cost"]``. ``p`` (or ``N`` for DOMP,
    ``|S|`` for GAP via ``ranges["open"]``) is drawn when not given.
    Capacitated families are redrawn until at least one capacity-respecting
    assignment exists (checked exhaustively for ``n <= 7``).
    """
    if family not in DEFAULT_RANGES:
        raise UnknownFamily(family)
    if n < 2:
        raise ValidationError("n", "must be >= 2")
    r = dict(DEFAULT_RANGES[family])
    r.update(ranges or {})
    rng = np.random.default_rng(seed)

    def draw(key, size=None):
        lo, hi = r[key]
        return rng.integers(lo, hi + 1, size=size)

    pp = p if p is not None else int(rng.integers(1, n))
    name = f"{family}-rand-{n}-{seed}"
    if family == "pmedian":
        return PMedianInstance(n=n, p=pp, demand=draw("demand", n).tolist(),
                               cost=_site_costs(rng, n, r["cost"], r["self_cost"]), name=name)
    if family == "pcenter":
        return PCenterInstance(n=n, p=pp, name=name,
                               distance=_site_costs(rng, n, r["distance"], r["self_distance"]))
    if family == "domp":
        return DompInstance(M=n, N=pp, cost=_site_costs(rng, n, r["cost"], r["self_cost"]),
                            lam=draw("lambda", n).tolist(), name=name)
    if family == "dmpflp":
        T = int(draw("periods"))
        cost = [[[int(draw("self_cost" if i == j else "cost")) for _ in range(T)]
                 for j in range(n)] for i in range(n)]
        return DmpflpInstance(n=n, p=pp, periods=T, cost=cost,
                              open_cost=draw("open_cost", (n, T)).tolist(),
                              close_cost=draw("close_cost", (n, T)).tolist(),
                              open_limit=draw("open_limit", T).tolist(), name=name)
    while True:
        demand = draw("demand", n).tolist()
        capacity = draw("capacity", n).tolist()
        cost = _site_costs(rng, n, r["cost"], r["self_cost"])
        if family == "fcflp":
            sites = list(range(n))
        else:
            k = int(draw("open")) if p is None else p
            sites = sorted(rng.choice(n, size=min(k, n), replace=False).tolist())
        if sum(capacity[i] for i in sites) < sum(demand):
            continue
        if n <= 7 and not _assignment_exists(n, sites, demand, capacity):
            continue
        break
    if family == "fcflp":
        return FcflpInstance(n=n, demand=demand, capacity=capacity,
                             fixed_cost=draw("fixed_cost", n).tolist(), cost=cost, name=name)
    return GapInstance(n=n, open_sites=sites, demand=demand, capacity=capacity,
                       cost=cost, name=name)
