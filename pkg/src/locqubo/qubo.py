"""Core QUBO data structure, energy evaluation, Ising conversion and exact search.

A :class:`QuboModel` stores an upper-triangular coefficient map ``(i, j) -> v``
with ``i <= j``; diagonal entries are linear terms because ``x_i**2 == x_i``.
Bitstrings are sequences of 0/1 of length ``n_vars`` where position ``i`` is
variable ``i``. Where a bitstring is packed into an integer basis index, bit
``i`` of the index is variable ``i`` (little-endian), matching the qubit order
used by the statevector simulator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import CapExceeded, LengthMismatch, ParseError

BRUTE_FORCE_CAP = 30
_LOW_BITS = 22


def _clean(v):
    """Normalise a coefficient to int when integral, else float."""
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else float(v)
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return int(v)
    v = float(v)
    return int(v) if v.is_integer() and abs(v) < 2**53 else v


class VariableMap:
    """Ordered bijection between variable descriptors and indices.

    A descriptor is a tuple ``(kind, *indices)`` such as ``("x", 0, 2)`` or
    ``("s", 1, 3)``. Indices inside descriptors are 0-based.
    """

    def __init__(self, descriptors=()):
        self._desc = []
        self._index = {}
        for d in descriptors:
            self.add(*d)

    def add(self, kind, *idx):
        d = (kind, *[int(i) for i in idx])
        if d in self._index:
            raise ValueError(f"duplicate variable {d}")
        self._index[d] = len(self._desc)
        self._desc.append(d)
        return self._index[d]

    def index(self, kind, *idx):
        return self._index[(kind, *idx)]

    def get(self, kind, *idx, default=None):
        return self._index.get((kind, *idx), default)

    def descriptor(self, i):
        return self._desc[i]

    def kind_indices(self, kind):
        """Indices of all variables of ``kind`` in map order."""
        return [i for i, d in enumerate(self._desc) if d[0] == kind]

    def name(self, i):
        kind, *idx = self._desc[i]
        return f"{kind}[{','.join(map(str, idx))}]"

    def __len__(self):
        return len(self._desc)

    def __iter__(self):
        return iter(self._desc)

    def __eq__(self, other):
        return isinstance(other, VariableMap) and self._desc == other._desc

    def to_list(self):
        return [list(d) for d in self._desc]

    @classmethod
    def from_list(cls, items):
        return cls(tuple(d) for d in items)


@dataclass(eq=True)
class QuboModel:
    """Upper-triangular QUBO ``sum_{i<=j} Q_ij x_i x_j + offset``.

    Attributes:
        n_vars: Number of binary variables.
        coeffs: Mapping ``(i, j) -> value`` with ``i <= j`` and no zeros.
        offset: Constant term.
        penalty: Penalty parameter used at build time (``None`` if unknown).
        var_map: Variable descriptors; empty for anonymous models.
        family: Source problem tag, or ``None``.
        formulation: Variant tag (FCFLP ``"aggregated"``/``"disaggregated"``).
        instance: The source instance, needed by ``decode``.
    """

    n_vars: int
    coeffs: dict
    offset: object = 0
    penalty: Optional[object] = None
    var_map: VariableMap = field(default_factory=VariableMap)
    family: Optional[str] = None
    formulation: Optional[str] = None
    instance: object = None

    def __post_init__(self):
        folded = {}
        for (i, j), v in self.coeffs.items():
            i, j = int(i), int(j)
            if i > j:
                i, j = j, i
            if not 0 <= i <= j < self.n_vars:
                raise ValueError(f"coefficient index {(i, j)} out of range")
            folded[(i, j)] = folded.get((i, j), 0) + v
        self.coeffs = {k: _clean(v) for k, v in sorted(folded.items()) if v != 0}
        self.offset = _clean(self.offset)
        if self.penalty is not None:
            self.penalty = _clean(self.penalty)

    @classmethod
    def from_matrix(cls, Q, offset=0, **kw):
        """Build from a square matrix; lower-triangle entries are folded up."""
        Q = np.asarray(Q)
        n = Q.shape[0]
        coeffs = {}
        for i, j in zip(*np.nonzero(Q)):
            key = (int(min(i, j)), int(max(i, j)))
            coeffs[key] = coeffs.get(key, 0) + Q[i, j].item()
        return cls(n_vars=n, coeffs=coeffs, offset=offset, **kw)

    def matrix(self):
        """Dense upper-triangular float64 coefficient matrix."""
        U = np.zeros((self.n_vars, self.n_vars))
        for (i, j), v in self.coeffs.items():
            U[i, j] = v
        return U

    def entry(self, i, j):
        return self.coeffs.get((min(i, j), max(i, j)), 0)


def _as_bits(q, x):
    x = [int(b) for b in x]
    if len(x) != q.n_vars:
        raise LengthMismatch(f"bitstring has length {len(x)}, model has {q.n_vars} variables")
    if any(b not in (0, 1) for b in x):
        raise ValueError("bitstring entries must be 0 or 1")
    return x


def energy(q, x):
    """Exact energy of bitstring ``x`` (integer arithmetic on integer models)."""
    x = _as_bits(q, x)
    total = q.offset
    for (i, j), v in q.coeffs.items():
        if x[i] and x[j]:
            total += v
    return total


def energies(q, X):
    """Vectorised float energies for a batch of bitstrings (rows of ``X``)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != q.n_vars:
        raise LengthMismatch("bitstring length does not match model")
    U = q.matrix()
    return np.einsum("ri,ij,rj->r", X, U, X) + q.offset


def index_to_bits(k, n):
    """Little-endian unpack of a basis index into a bit list."""
    return [(int(k) >> i) & 1 for i in range(n)]


def bits_to_index(x):
    return sum(int(b) << i for i, b in enumerate(x))


def penalty_bound(costs):
    """Return ``sum(|c_i|) + 1``, a penalty strictly above the objective range."""
    return _clean(sum(abs(c) for c in costs) + 1)


# ---------------------------------------------------------------------------
# Ising conversion


@dataclass
class IsingModel:
    """Spin model ``H(z) = -sum_{i<j} J_ij z_i z_j - sum_i h_i z_i + constant``."""

    n: int
    couplings: dict
    fields: list
    constant: object

    def energy(self, z):
        z = [int(v) for v in z]
        if len(z) != self.n:
            raise LengthMismatch("spin vector length does not match model")
        total = self.constant
        for (i, j), J in self.couplings.items():
            total -= J * z[i] * z[j]
        for i, h in enumerate(self.fields):
            total -= h * z[i]
        return total


def to_ising(q):
    """Convert via ``x = (1 + z) / 2``. Uses exact rational arithmetic."""
    n = q.n_vars
    J = {}
    h = [Fraction(0)] * n
    const = Fraction(q.offset)
    for (i, j), v in q.coeffs.items():
        v = Fraction(v)
        if i == j:
            h[i] -= v / 2
            const += v / 2
        else:
            J[(i, j)] = -v / 4
            h[i] -= v / 4
            h[j] -= v / 4
            const += v / 4
    return IsingModel(
        n=n,
        couplings={k: _clean(v) for k, v in J.items() if v != 0},
        fields=[_clean(v) for v in h],
        constant=_clean(const),
    )


# ---------------------------------------------------------------------------
# Full energy table and exact minimisation


def _linear_table(weights):
    """Table over all 2^k patterns of ``sum_j weights[j] * bit_j``."""
    t = np.zeros(1)
    for w in weights:
        t = np.concatenate((t, t + w))
    return t


def _partial_table(U, offset, nbits):
    """Energy table over the first ``nbits`` variables (others fixed to 0)."""
    t = np.array([float(offset)])
    for i in range(nbits):
        lin = _linear_table(U[:i, i]) + U[i, i]
        t = np.concatenate((t, t + lin))
    return t


def energy_table(q):
    """Float64 energies of all ``2**n`` basis states, little-endian order."""
    if q.n_vars > 25:
        raise CapExceeded(f"energy table limited to 25 variables, got {q.n_vars}")
    return _partial_table(q.matrix(), q.offset, q.n_vars)


def _reverse_bits(idx, n):
    idx = np.asarray(idx, dtype=np.int64)
    out = np.zeros_like(idx)
    for b in range(n):
        out |= ((idx >> b) & 1) << (n - 1 - b)
    return out


def brute_force_min(q):
    """Exhaustive global minimum.

    Returns:
        ``(bits, energy, is_unique)``. Among ties the lexicographically
        smallest bitstring ``(x_0, x_1, ...)`` is chosen. ``energy`` is exact.

    Raises:
        CapExceeded: if ``n_vars > 30``.
    """
    n = q.n_vars
    if n > BRUTE_FORCE_CAP:
        raise CapExceeded(f"brute force limited to {BRUTE_FORCE_CAP} variables, got {n}")
    if n == 0:
        return [], q.offset, True
    U = q.matrix()
    L = min(n, _LOW_BITS)
    H = n - L
    V = _partial_table(U, q.offset, L)
    cols = [_linear_table(U[:L, j]) for j in range(L, n)]
    high = [0] * H

    best = np.inf
    count = 0
    best_key = None

    def scan(vec, high_val):
        nonlocal best, count, best_key
        m = float(vec.min())
        tol = 1e-9 * max(1.0, abs(m))
        if m < best - tol:
            best, count, best_key = m, 0, None
        if m > best + tol:
            return
        cand = np.flatnonzero(vec <= best + 1e-9 * max(1.0, abs(best)))
        count += len(cand)
        full = cand.astype(np.int64) | (np.int64(high_val) << L)
        key = int(_reverse_bits(full, n).min())
        best_key = key if best_key is None else min(best_key, key)

    scan(V, 0)
    for g in range(1, 2**H):
        b = (g & -g).bit_length() - 1  # bit flipped in Gray order
        j = L + b
        delta = cols[b] + U[j, j]
        for k, hk in enumerate(high):
            if hk and k != b:
                delta = delta + U[min(L + k, j), max(L + k, j)]
        if high[b]:
            V -= delta
        else:
            V += delta
        high[b] ^= 1
        scan(V, bits_to_index(high))

    idx = int(_reverse_bits([best_key], n)[0])
    bits = index_to_bits(idx, n)
    return bits, energy(q, bits), count == 1


# ---------------------------------------------------------------------------
# Serialisation


def _fmt(v):
    return str(v) if isinstance(v, int) else repr(float(v))


def _num(s):
    try:
        return int(s)
    except ValueError:
        return _clean(float(s))


def export_qubo(q, format="json"):
    """Serialise to ``"sparse-coo-text"`` or ``"json"``; returns bytes."""
    if format == "sparse-coo-text":
        lines = [f"{q.n_vars} {_fmt(q.offset)}"]
        lines += [f"{i} {j} {_fmt(v)}" for (i, j), v in sorted(q.coeffs.items())]
        return ("\n".join(lines) + "\n").encode()
    if format == "json":
        from .instances import instance_to_dict

        payload = {
            "n_vars": q.n_vars,
            "offset": q.offset,
            "penalty": q.penalty,
            "family": q.family,
            "formulation": q.formulation,
            "var_map": q.var_map.to_list(),
            "coeffs": [[i, j, v] for (i, j), v in sorted(q.coeffs.items())],
            "instance": instance_to_dict(q.instance) if q.instance is not None else None,
        }
        return json.dumps(payload).encode()
    raise ValueError(f"unknown format {format!r}")


def import_qubo(data):
    """Parse bytes produced by :func:`export_qubo` (format auto-detected)."""
    text = data.decode() if isinstance(data, (bytes, bytearray)) else str(data)
    stripped = text.lstrip()
    if stripped.startswith("{"):
        from .instances import instance_from_dict

        try:
            p = json.loads(text)
            coeffs = {(int(i), int(j)): v for i, j, v in p["coeffs"]}
            inst = p.get("instance")
            return QuboModel(
                n_vars=int(p["n_vars"]),
                coeffs=coeffs,
                offset=p.get("offset", 0),
                penalty=p.get("penalty"),
                var_map=VariableMap.from_list(p.get("var_map", [])),
                family=p.get("family"),
                formulation=p.get("formulation"),
                instance=instance_from_dict(inst) if inst is not None else None,
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid QUBO JSON: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty QUBO file")
    try:
        head = lines[0].split()
        if len(head) != 2:
            raise ValueError("header must be 'n_vars offset'")
        n = int(head[0])
        coeffs = {}
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 3:
                raise ValueError(f"bad line {ln!r}")
            i, j = int(parts[0]), int(parts[1])
            if (i, j) in coeffs:
                raise ValueError(f"duplicate entry ({i}, {j})")
            coeffs[(i, j)] = _num(parts[2])
        return QuboModel(n_vars=n, coeffs=coeffs, offset=_num(head[1]))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
