"""Warm-start points for WS-QAOA: strategies R, S, L and C, the l-infinity
ball projection, and the rotation angles."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import floor

import numpy as np

from .builders import slack_bits
from .errors import EpsOutOfRange, UnsupportedFamily
from .instances import FcflpInstance, PMedianInstance
from .relaxations import extract_sdp_warmstart, lp_relaxation, minimize_box_qubo, solve_lp

STRATEGIES = ("R", "S", "L", "C")


def project_ball(x, eps):
    """Clamp every component to ``[eps, 1 - eps]``."""
    if not 0 < eps <= 0.5:
        raise EpsOutOfRange(f"eps must lie in (0, 0.5], got {eps}")
    return np.clip(np.asarray(x, dtype=float), eps, 1.0 - eps)


def rotation_angles(x):
    """``theta_i = 2 * arcsin(sqrt(x_i))``."""
    return 2.0 * np.arcsin(np.sqrt(np.clip(np.asarray(x, dtype=float), 0.0, 1.0)))


@dataclass
class WarmStartPoint:
    """A warm start before and after projection, with its rotation angles.

    ``epsilon == 0`` marks an unprojected point built by
    :func:`unprojected_warmstart`.
    """

    raw: np.ndarray
    projected: np.ndarray
    epsilon: float
    strategy: str
    thetas: np.ndarray

    @classmethod
    def from_raw(cls, raw, eps, strategy):
        raw = np.clip(np.asarray(raw, dtype=float), 0.0, 1.0)
        projected = project_ball(raw, eps)
        return cls(raw=raw, projected=projected, epsilon=float(eps), strategy=strategy,
                   thetas=rotation_angles(projected))

    def to_json(self):
        return json.dumps({
            "raw": self.raw.tolist(),
            "projected": self.projected.tolist(),
            "eps": self.epsilon,
            "strategy": self.strategy,
            "thetas": self.thetas.tolist(),
        })

    @classmethod
    def from_json(cls, text):
        p = json.loads(text)
        return cls(raw=np.array(p["raw"]), projected=np.array(p["projected"]),
                   epsilon=p["eps"], strategy=p["strategy"], thetas=np.array(p["thetas"]))


def unprojected_warmstart(raw, strategy="L"):
    """Warm start that skips the projection, so integral inputs give
    ``theta in {0, pi}``. Useful only to exhibit the reachability issue."""
    raw = np.clip(np.asarray(raw, dtype=float), 0.0, 1.0)
    return WarmStartPoint(raw=raw, projected=raw.copy(), epsilon=0.0, strategy=strategy,
                          thetas=rotation_angles(raw))


def strategy_R(q, eps=0.1):
    """Local minimum of the box relaxation started at the cube centre."""
    res = minimize_box_qubo(q, np.full(q.n_vars, 0.5))
    return WarmStartPoint.from_raw(res.x, eps, "R")


def strategy_S(Y, eps=0.1):
    """First row of an externally solved lifted SDP matrix."""
    return WarmStartPoint.from_raw(extract_sdp_warmstart(Y), eps, "S")


def residual_slack_bits(capacity, demand, xbar_row):
    """Bits of ``floor(q - sum_j d_j xbar_j)``, computed exactly.

    ``xbar_row`` may hold Fractions or floats; floats are converted exactly.
    The residual is clamped into the representable range ``[0, 2**l - 1]``.
    """
    ell = slack_bits(capacity)
    resid = Fraction(capacity) - sum(Fraction(d) * Fraction(v) for d, v in zip(demand, xbar_row))
    value = min(max(floor(resid), 0), 2**ell - 1)
    return [(value >> k) & 1 for k in range(ell)]


def lp_point(inst, formulation=None):
    """Raw L-strategy vector in builder variable order (exact Fractions)."""
    if not isinstance(inst, (PMedianInstance, FcflpInstance)):
        raise UnsupportedFamily(f"strategy L needs an LP relaxation; got {inst.family}")
    res = solve_lp(lp_relaxation(inst, formulation))
    point = list(res.x)
    if isinstance(inst, FcflpInstance):
        n = inst.n
        for i in range(n):
            row = res.x[i * n:(i + 1) * n]
            point += [Fraction(b) for b in residual_slack_bits(inst.capacity[i], inst.demand, row)]
    return point


def strategy_L(inst, formulation=None, eps=0.1):
    """LP relaxation optimum, extended with residual-capacity slack bits for FCFLP."""
    raw = np.array([float(v) for v in lp_point(inst, formulation)])
    return WarmStartPoint.from_raw(raw, eps, "L")


def strategy_C(inst, formulation, q, eps=0.1):
    """Box relaxation started from the L-strategy point."""
    start = np.array([float(v) for v in lp_point(inst, formulation)])
    res = minimize_box_qubo(q, start)
    return WarmStartPoint.from_raw(res.x, eps, "C")
