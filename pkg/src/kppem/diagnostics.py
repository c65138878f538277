"""
Executable checks of the convergence theory.

* ``audit_trace`` replays the per-step ascent inequality
  F(new) - F(old) >= beta_k * I_y(new, old) over a fit trace.
* ``kkt_residual`` measures how far a point is from satisfying
  0 in grad l_y - d p_n (Clarke subdifferential), with the simplex
  constraint on pi handled through its tangent cone.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import FrozenSet

import numpy as np

from . import model
from .model import Dataset, MixtureParams
from .penalty import (NONE, PenaltySpec, SubInterval, component_costs, guard_subdifferential,
                      scalar_subdifferential)
from .solver import FitResult, FitTrace, objective


@dataclass(frozen=True)
class LedgerReport:
    monotone_ok: bool
    worst_violation: float
    proximal_final: float
    iterate_gap_final: float
    steps: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class KktReport:
    residual_beta: np.ndarray
    residual_pi: float
    residual_sigma2: float
    active_components: FrozenSet[int]
    max_residual: float

    def to_dict(self):
        return {
            "residual_beta": self.residual_beta.tolist(),
            "residual_pi": self.residual_pi,
            "residual_sigma2": self.residual_sigma2,
            "active_components": sorted(self.active_components),
            "max_residual": self.max_residual,
        }


def audit_trace(trace: FitTrace, slack: float = 1e-8) -> LedgerReport:
    """Check F(theta^{k+1}) - F(theta^k) >= beta_k I_y(theta^{k+1}, theta^k) at every step.

    ``worst_violation`` is the largest value of beta_k * I - (F_new - F_old);
    it is <= 0 on a clean trace and equals the injected drop when a single
    objective entry is lowered with a zero proximal term.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    F = trace.objectives
    excess = trace.column("beta_k") * trace.column("proximal") - np.diff(F)
    worst = float(np.max(excess))
    gap = 0.0
    if len(trace.snapshots) >= 2:
        last = trace.rows[-1].sweep
        first_of_last = next(i for i, r in enumerate(trace.rows) if r.sweep == last)
        steps = dict(zip(trace.snapshot_steps, trace.snapshots))
        if first_of_last in steps and len(trace.rows) in steps:
            gap = model.param_distance(steps[len(trace.rows)], steps[first_of_last])
        else:
            gap = model.param_distance(trace.snapshots[-1], trace.snapshots[-2])
    return LedgerReport(
        monotone_ok=worst <= slack,
        worst_violation=worst,
        proximal_final=float(trace.rows[-1].beta_k * trace.rows[-1].proximal),
        iterate_gap_final=gap,
        steps=len(trace),
    )


def _pi_gradient(params, penalty, data):
    g_pi, g_beta, g_s2 = model.log_likelihood_grad(params, data)
    if penalty.kind != NONE:
        g_pi = g_pi - component_costs(params, penalty)
    return g_pi, g_beta, g_s2


def simplex_tangent_residual(grad, pi) -> float:
    """Norm of the KKT violation of maximizing along ``grad`` over the simplex at ``pi``.

    Free coordinates (pi_k > 0) must share a common gradient value nu;
    coordinates at the boundary must not exceed it.
    """
    grad = np.asarray(grad, dtype=float)
    free = np.asarray(pi) > 0
    nu = float(np.mean(grad[free]))
    parts = np.where(free, grad - nu, np.maximum(grad - nu, 0.0))
    return float(np.linalg.norm(parts))


def kkt_residual(params: MixtureParams, penalty: PenaltySpec, data: Dataset) -> KktReport:
    """Nonsmooth first-order residuals at ``params``.

    residual_beta[k, j] is the distance from dl/dbeta_kj to the interval
    lambda_k pi_k dp(beta_kj) (+ guard). Rows of components with pi_k = 0
    are reported but left out of ``max_residual``.
    """
    g_pi, g_beta, g_s2 = _pi_gradient(params, penalty, data)
    K, P = params.beta.shape
    res_beta = np.zeros((K, P))
    for k in range(K):
        weight = penalty.lam[k] * params.pi[k] if penalty.kind != NONE else 0.0
        for j in range(P):
            b = float(params.beta[k, j])
            iv = scalar_subdifferential(penalty, k, b).scale(weight) if weight else SubInterval(0.0, 0.0)
            if penalty.guard_enabled:
                iv = iv + guard_subdifferential(b, penalty.guard_threshold)
            res_beta[k, j] = iv.distance(float(g_beta[k, j]))
    active = frozenset(int(k) for k in np.flatnonzero(params.pi == 0))
    res_pi = simplex_tangent_residual(g_pi, params.pi) if K > 1 else 0.0
    res_s2 = abs(float(g_s2))
    live = [k for k in range(K) if k not in active]
    parts = [res_pi, res_s2]
    if live:
        parts.append(float(np.max(res_beta[live])))
    return KktReport(res_beta, res_pi, res_s2, active, float(max(parts)))


@dataclass(frozen=True)
class Comparison:
    objective_a: float
    objective_b: float
    kkt_a: float
    kkt_b: float
    distance: float
    min_pi_a: float
    min_pi_b: float

    def to_dict(self):
        return asdict(self)


def compare_runs(a: FitResult, b: FitResult, penalty: PenaltySpec, data: Dataset) -> Comparison:
    return Comparison(
        objective_a=objective(a.params, penalty, data),
        objective_b=objective(b.params, penalty, data),
        kkt_a=kkt_residual(a.params, penalty, data).max_residual,
        kkt_b=kkt_residual(b.params, penalty, data).max_residual,
        distance=model.param_distance(a.params, b.params),
        min_pi_a=float(a.params.pi.min()),
        min_pi_b=float(b.params.pi.min()),
    )


def iterate_bound(data: Dataset, K: int) -> float:
    """Heuristic norm ceiling for iterates on ``data``.

    Coefficients are bounded by a generous multiple of the least-squares scale
    ||y|| / s_min(X), variances by the total sum of squares; used only as a
    boundedness probe.
    """
    s = np.linalg.svd(data.X, compute_uv=False)
    s_min = float(s[-1]) if s[-1] > 0 else float(s[s > 0][-1])
    ynorm = float(np.linalg.norm(data.y))
    beta_scale = 100.0 * ynorm / s_min
    sigma_scale = 10.0 * float(np.sum(data.y**2)) / data.n + 1.0
    return math.sqrt(1.0 + K * data.P * beta_scale**2 + sigma_scale**2)
