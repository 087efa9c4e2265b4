"""Noise-free statevector simulation of QAOA and warm-start QAOA.

Amplitudes are little-endian: qubit ``i`` is bit ``i`` of the basis index,
and qubit ``i`` carries QUBO variable ``i``. Rotation conventions are
``R_Y(a) = exp(-i a Y / 2)`` and ``R_Z(a) = exp(-i a Z / 2)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import pi

import numpy as np

from .errors import SizeMismatch, TooManyQubits
from .optimize import nelder_mead
from .qubo import energy, energy_table, index_to_bits

MAX_QUBITS = 25


@dataclass
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def norm(self):
        return float(np.sqrt(np.sum(self.probabilities())))

    def copy(self):
        return Statevector(self.n_qubits, self.amplitudes.copy())


def _guard(n):
    if n > MAX_QUBITS:
        raise TooManyQubits(f"{n} qubits exceeds the {MAX_QUBITS}-qubit limit")
    if n < 1:
        raise ValueError("need at least one qubit")


def prepare_uniform(n):
    """``|+>^n``."""
    _guard(n)
    return Statevector(n, np.full(2**n, 2.0 ** (-n / 2), dtype=np.complex128))


def prepare_warmstart(thetas):
    """Product state ``R_Y(theta_i)|0>`` on every qubit."""
    thetas = np.asarray(thetas, dtype=float)
    n = thetas.size
    _guard(n)
    amp = np.ones(1, dtype=np.complex128)
    for th in thetas:  # qubit i becomes the next most significant bit
        amp = np.concatenate((amp * np.cos(th / 2), amp * np.sin(th / 2)))
    return Statevector(n, amp)


def _apply_1q(amp, n, i, g):
    """In-place single-qubit gate ``g`` (2x2) on qubit ``i``."""
    v = amp.reshape(-1, 2, 2**i)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = g[0, 0] * a0 + g[0, 1] * a1
    v[:, 1, :] = g[1, 0] * a0 + g[1, 1] * a1


def x_mixer_gate(beta):
    """``exp(-i beta X)``."""
    c, s = np.cos(beta), np.sin(beta)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(a):
    c, s = np.cos(a / 2), np.sin(a / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz(a):
    return np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])


def ws_mixer_gate(beta, theta):
    """``R_Y(theta) R_Z(2 beta) R_Y(-theta)``, i.e. ``exp(-i beta (sin t X + cos t Z))``.

    At ``theta = pi/2`` this is exactly ``exp(-i beta X)``, the standard mixer.
    """
    return ry(theta) @ rz(2.0 * beta) @ ry(-theta)


def _check(s, n):
    if s.n_qubits != n:
        raise SizeMismatch(f"state has {s.n_qubits} qubits, expected {n}")


def apply_cost_phase(s, q, gamma, table=None):
    """Multiply each amplitude by ``exp(-i gamma C(k))``."""
    _check(s, q.n_vars)
    table = energy_table(q) if table is None else table
    return Statevector(s.n_qubits, s.amplitudes * np.exp(-1j * gamma * table))


def apply_x_mixer(s, beta):
    out = s.amplitudes.copy()
    g = x_mixer_gate(beta)
    for i in range(s.n_qubits):
        _apply_1q(out, s.n_qubits, i, g)
    return Statevector(s.n_qubits, out)


def apply_ws_mixer(s, beta, thetas):
    thetas = np.asarray(thetas, dtype=float)
    if thetas.size != s.n_qubits:
        raise SizeMismatch(f"{thetas.size} angles for {s.n_qubits} qubits")
    out = s.amplitudes.copy()
    for i, th in enumerate(thetas):
        _apply_1q(out, s.n_qubits, i, ws_mixer_gate(beta, th))
    return Statevector(s.n_qubits, out)


def expectation(s, q, table=None):
    """``sum_k |a_k|^2 C(k)``."""
    _check(s, q.n_vars)
    table = energy_table(q) if table is None else table
    return float(np.dot(s.probabilities(), table))


def sample(s, shots, seed=None):
    """Multinomial measurement counts ``{basis_index: count}``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = s.probabilities()
    p = p / p.sum()
    counts = np.random.default_rng(seed).multinomial(shots, p)
    idx = np.flatnonzero(counts)
    return {int(k): int(counts[k]) for k in idx}


def bitstring(k, n):
    """Basis index to a ``"x0x1..."`` string (variable 0 first)."""
    return "".join(str(b) for b in index_to_bits(k, n))


# ---------------------------------------------------------------------------
# variational loop


@dataclass
class QaoaConfig:
    """Circuit depth, sampling and optimiser settings.

    ``initial_beta``/``initial_gamma`` apply to every layer.
    """

    layers: int = 1
    shots: int = 8000
    seed: int = 123
    max_iter: int = 50
    tol: float = 1e-4
    initial_beta: float = pi / 4
    initial_gamma: float = pi / 8

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")


@dataclass
class QaoaResult:
    beta: list
    gamma: list
    expectation: float
    counts: dict
    best_bits: list
    best_energy: object
    best_count: int
    shots: int
    trace: list = field(default_factory=list)
    feasible: object = None

    @property
    def rel_freq(self):
        return self.best_count / self.shots

    def to_json(self):
        n = len(self.best_bits)
        width = max(1, (n + 3) // 4)
        return json.dumps({
            "beta": list(self.beta),
            "gamma": list(self.gamma),
            "expectation": self.expectation,
            "trace": list(self.trace),
            "counts": {format(k, f"0{width}x"): v for k, v in sorted(self.counts.items())},
            "best_sample": "".join(map(str, self.best_bits)),
            "best_energy": self.best_energy,
            "best_count": self.best_count,
            "shots": self.shots,
            "rel_freq": self.rel_freq,
            "feasible": self.feasible,
        })


def _circuit(n, table, params, init, mixer):
    p = len(params) // 2
    amp = init.copy()
    for layer in range(p):
        beta, gamma = params[layer], params[p + layer]
        amp *= np.exp(-1j * gamma * table)
        for i in range(n):
            _apply_1q(amp, n, i, mixer(beta, i))
    return amp


def _run(q, cfg, init, mixer):
    n = q.n_vars
    _guard(n)
    table = energy_table(q)
    x0 = np.array([cfg.initial_beta] * cfg.layers + [cfg.initial_gamma] * cfg.layers)

    def objective(params):
        amp = _circuit(n, table, params, init, mixer)
        return float(np.dot(np.abs(amp) ** 2, table))

    opt = nelder_mead(objective, x0, max_evals=cfg.max_iter, tol=cfg.tol)
    params = opt.x
    amp = _circuit(n, table, params, init, mixer)
    state = Statevector(n, amp)
    counts = sample(state, cfg.shots, cfg.seed)
    # lowest sampled energy; ties go to the more frequent, then lower index
    best_k = min(counts, key=lambda k: (table[k], -counts[k], k))
    bits = index_to_bits(best_k, n)
    feasible = None
    if q.family is not None and q.instance is not None:
        from .builders import decode

        feasible = decode(q, bits).feasible
    return QaoaResult(
        beta=params[: cfg.layers].tolist(),
        gamma=params[cfg.layers:].tolist(),
        expectation=float(np.dot(state.probabilities(), table)),
        counts=counts,
        best_bits=bits,
        best_energy=energy(q, bits),
        best_count=counts[best_k],
        shots=cfg.shots,
        trace=opt.trace,
        feasible=feasible,
    )


def run_qaoa(q, cfg=None):
    """Standard QAOA: ``|+>^n`` start and ``exp(-i beta X)`` mixers."""
    cfg = cfg or QaoaConfig()
    _guard(q.n_vars)
    init = prepare_uniform(q.n_vars).amplitudes
    gates = {}

    def mixer(beta, i):
        if beta not in gates:
            gates.clear()
            gates[beta] = x_mixer_gate(beta)
        return gates[beta]

    return _run(q, cfg, init, mixer)


def run_ws_qaoa(q, ws, cfg=None):
    """Warm-start QAOA using ``ws.thetas`` for both the initial state and mixer."""
    cfg = cfg or QaoaConfig()
    thetas = np.asarray(ws.thetas, dtype=float)
    if thetas.size != q.n_vars:
        raise SizeMismatch(f"{thetas.size} angles for {q.n_vars} variables")
    _guard(q.n_vars)
    init = prepare_warmstart(thetas).amplitudes

    def mixer(beta, i):
        return ws_mixer_gate(beta, thetas[i])

    return _run(q, cfg, init, mixer)
