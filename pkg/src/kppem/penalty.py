"""
SCAD and l1 penalties on regression coefficients.

For a coefficient b, with s = sqrt(n)|b|, the SCAD derivative is

    p'(b) = gamma sqrt(n)                       if s <= gamma
          = sqrt(n) (a gamma - s)_+ / (a - 1)   if s >  gamma

and the value is its integral from 0. The l1 penalty is the linear piece
gamma sqrt(n)|b| extended to the whole line.

The composite mixture penalty weights each component's coefficient
penalty by its mixing proportion and a block weight lambda_k:

    p_n(theta) = sum_k lambda_k pi_k sum_j p_gamma_k(beta_kj)  (+ guard)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import NotDifferentiable

NONE, L1, SCAD = "none", "l1", "scad"
KINDS = (NONE, L1, SCAD)


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty family and tuning constants.

    Parameters
    ----------
    kind : {"none", "l1", "scad"}
    gamma : tuple of float
        One threshold per component (must be > 0).
    a : float
        SCAD knee, > 2.
    lam : tuple of float
        Nonnegative block weights lambda_k.
    n_scale : int
        Sample size entering the sqrt(n) scaling.
    guard_enabled : bool
        Add the coercivity hinge sum_kj max(|beta_kj| - guard_threshold, 0).
    guard_threshold : float
    """

    kind: str = NONE
    gamma: tuple = (1.0,)
    a: float = 10.0
    lam: tuple = (1.0,)
    n_scale: int = 1
    guard_enabled: bool = False
    guard_threshold: float = 1e6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        gamma = tuple(float(g) for g in np.atleast_1d(self.gamma))
        lam = tuple(float(v) for v in np.atleast_1d(self.lam))
        if len(lam) == 1 and len(gamma) > 1:
            lam = lam * len(gamma)
        if len(lam) != len(gamma):
            raise ValueError("gamma and lam must have one entry per component")
        if any(not g > 0 for g in gamma):
            raise ValueError("gamma must be positive")
        if any(not v >= 0 for v in lam):
            raise ValueError("lam must be nonnegative")
        if not self.a > 2:
            raise ValueError("SCAD requires a > 2")
        if int(self.n_scale) < 1:
            raise ValueError("n_scale must be a positive integer")
        if not self.guard_threshold > 0:
            raise ValueError("guard_threshold must be positive")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "n_scale", int(self.n_scale))
        object.__setattr__(self, "a", float(self.a))

    @classmethod
    def none(cls, K: int = 1, n: int = 1) -> "PenaltySpec":
        return cls(kind=NONE, gamma=(1.0,) * K, lam=(1.0,) * K, n_scale=n)

    @classmethod
    def shared(cls, kind: str, gamma: float, K: int, n: int, a: float = 10.0,
               lam: float | Sequence[float] = 1.0, **kw) -> "PenaltySpec":
        """Same gamma for every component."""
        lam = (float(lam),) * K if np.isscalar(lam) else tuple(lam)
        return cls(kind=kind, gamma=(float(gamma),) * K, a=a, lam=lam, n_scale=n, **kw)

    @property
    def K(self) -> int:
        return len(self.gamma)

    def with_n(self, n: int) -> "PenaltySpec":
        return PenaltySpec(self.kind, self.gamma, self.a, self.lam, n, self.guard_enabled,
                           self.guard_threshold)


class SubInterval(NamedTuple):
    lo: float
    hi: float

    def distance(self, x: float) -> float:
        """Distance from x to the interval; 0 iff x lies inside."""
        if x < self.lo:
            return self.lo - x
        if x > self.hi:
            return x - self.hi
        return 0.0

    def __add__(self, other):
        return SubInterval(self.lo + other.lo, self.hi + other.hi)

    def scale(self, c: float) -> "SubInterval":
        lo, hi = c * self.lo, c * self.hi
        return SubInterval(min(lo, hi), max(lo, hi))


# --- SCAD scalar pieces ---------------------------------------------------

def scad_derivative(b: float, gamma: float, a: float, n: int) -> float:
    if b == 0:
        raise NotDifferentiable("SCAD is not differentiable at 0; use scad_subdifferential")
    rn = math.sqrt(n)
    s = rn * abs(b)
    if s <= gamma:
        d = gamma * rn
    else:
        d = rn * max(a * gamma - s, 0.0) / (a - 1.0)
    return math.copysign(d, b)


def scad_value(b: float, gamma: float, a: float, n: int) -> float:
    s = math.sqrt(n) * abs(b)
    if s <= gamma:
        return gamma * s
    if s <= a * gamma:
        return gamma**2 + (a * gamma * (s - gamma) - 0.5 * (s**2 - gamma**2)) / (a - 1.0)
    return 0.5 * gamma**2 * (a + 1.0)


def scad_subdifferential(b: float, gamma: float, a: float, n: int) -> SubInterval:
    if b == 0:
        h = gamma * math.sqrt(n)
        return SubInterval(-h, h)
    d = scad_derivative(b, gamma, a, n)
    return SubInterval(d, d)


def _scalar_objective(b, z, w, mu, gamma, a, n):
    return 0.5 * w * (b - z) ** 2 + mu * scad_value(b, gamma, a, n)


def scad_prox(z: float, w: float, mu: float, gamma: float, a: float, n: int) -> float:
    """Global minimizer of 0.5 w (b - z)^2 + mu p_gamma(b).

    The objective is piecewise quadratic, so the minimizer is one of a
    handful of per-zone candidates; all are evaluated and the best kept.
    Ties go to 0, then to the smaller |b|.
    """
    if mu == 0:
        return float(z)
    rn = math.sqrt(n)
    az = abs(z)
    knee1 = gamma / rn
    knee2 = a * gamma / rn
    cands = [0.0, knee1, knee2]
    # linear zone
    cands.append(min(max(az - mu * gamma * rn / w, 0.0), knee1))
    # concave-quadratic zone; stationary point only when the zone is convex
    curv = w - mu * n / (a - 1.0)
    if curv > 0:
        b2 = (w * az - mu * rn * a * gamma / (a - 1.0)) / curv
        cands.append(min(max(b2, knee1), knee2))
    # flat zone
    cands.append(max(az, knee2))
    best, best_val = 0.0, _scalar_objective(0.0, az, w, mu, gamma, a, n)
    tie = 1e-14 * (1.0 + abs(best_val))
    for c in cands[1:]:
        v = _scalar_objective(c, az, w, mu, gamma, a, n)
        if v < best_val - tie or (abs(v - best_val) <= tie and c < best):
            best, best_val = c, v
            tie = 1e-14 * (1.0 + abs(best_val))
    return math.copysign(best, z) if best != 0 else 0.0


# --- l1 scalar pieces -----------------------------------------------------

def l1_value(b: float, gamma: float, n: int) -> float:
    return gamma * math.sqrt(n) * abs(b)


def l1_subdifferential(b: float, gamma: float, n: int) -> SubInterval:
    h = gamma * math.sqrt(n)
    if b == 0:
        return SubInterval(-h, h)
    d = math.copysign(h, b)
    return SubInterval(d, d)


def l1_prox(z: float, w: float, mu: float, gamma: float, n: int) -> float:
    thr = mu * gamma * math.sqrt(n) / w
    if abs(z) <= thr:
        return 0.0
    return math.copysign(abs(z) - thr, z)


# --- dispatch on PenaltySpec ----------------------------------------------

def scalar_value(spec: PenaltySpec, k: int, b: float) -> float:
    if spec.kind == SCAD:
        return scad_value(b, spec.gamma[k], spec.a, spec.n_scale)
    if spec.kind == L1:
        return l1_value(b, spec.gamma[k], spec.n_scale)
    return 0.0


def scalar_subdifferential(spec: PenaltySpec, k: int, b: float) -> SubInterval:
    if spec.kind == SCAD:
        return scad_subdifferential(b, spec.gamma[k], spec.a, spec.n_scale)
    if spec.kind == L1:
        return l1_subdifferential(b, spec.gamma[k], spec.n_scale)
    return SubInterval(0.0, 0.0)


def guard_subdifferential(b: float, threshold: float) -> SubInterval:
    ab = abs(b)
    if ab < threshold:
        return SubInterval(0.0, 0.0)
    s = 1.0 if b > 0 else -1.0
    if ab > threshold:
        return SubInterval(s, s)
    return SubInterval(min(0.0, s), max(0.0, s))


def component_cost(spec: PenaltySpec, k: int, beta_k) -> float:
    """c_k = lambda_k sum_j p_gamma_k(beta_kj), the coefficient of pi_k in p_n."""
    if spec.kind == NONE:
        return 0.0
    return spec.lam[k] * sum(scalar_value(spec, k, float(b)) for b in beta_k)


def component_costs(params, spec: PenaltySpec) -> np.ndarray:
    return np.array([component_cost(spec, k, params.beta[k]) for k in range(params.K)])


def coercivity_guard(beta, threshold: float) -> float:
    """Hinge sum_kj max(|beta_kj| - threshold, 0)."""
    return float(np.sum(np.maximum(np.abs(np.asarray(beta, dtype=float)) - threshold, 0.0)))


def composite_penalty(params, spec: PenaltySpec) -> float:
    """p_n(theta) = sum_k lambda_k pi_k sum_j p(beta_kj), plus the guard when enabled."""
    if spec.kind != NONE and spec.K != params.K:
        raise ValueError(f"penalty has {spec.K} components, params have {params.K}")
    val = 0.0
    if spec.kind != NONE:
        for k in range(params.K):
            if params.pi[k] > 0:
                val += params.pi[k] * component_cost(spec, k, params.beta[k])
    if spec.guard_enabled:
        val += coercivity_guard(params.beta, spec.guard_threshold)
    return val


def penalized_prox(spec: PenaltySpec, k: int, z: float, w: float, mu: float) -> float:
    """argmin_b 0.5 w (b - z)^2 + mu p_k(b) (+ guard hinge if enabled)."""
    if spec.kind == SCAD:
        b = scad_prox(z, w, mu, spec.gamma[k], spec.a, spec.n_scale)
    elif spec.kind == L1:
        b = l1_prox(z, w, mu, spec.gamma[k], spec.n_scale)
    else:
        b = float(z)
    if not spec.guard_enabled or abs(b) <= spec.guard_threshold:
        return b

    T = spec.guard_threshold

    def obj(c):
        return 0.5 * w * (c - z) ** 2 + mu * scalar_value(spec, k, c) + max(abs(c) - T, 0.0)

    # beyond T the hinge adds slope 1; compare the shrunk point with the threshold itself
    out = math.copysign(max(abs(z) - (1.0 + mu * _slope_far(spec, k)) / w, T), z)
    edge = math.copysign(T, z)
    return min((out, edge, b), key=lambda c: (obj(c), abs(c)))


def _slope_far(spec, k):
    # penalty slope at very large |b|: 0 for SCAD (flat), gamma sqrt(n) for l1
    if spec.kind == L1:
        return spec.gamma[k] * math.sqrt(spec.n_scale)
    return 0.0
