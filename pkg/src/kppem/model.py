"""
Finite mixture of linear regressions with a shared variance.

    y_i ~ sum_k pi_k N(x_i . beta_k, sigma2)

All density arithmetic is carried out in log-space. Responsibilities
smaller than ``RESP_CLAMP`` are set to exactly zero in the E-step so that
components with vanishing weight are visible as an active constraint. The
Kullback term takes the anchor's support from the E-step but evaluates the
candidate's responsibilities unclamped, so it is infinite only where
pi_k = 0 on that support.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateRow, NonFinite, OutsideDomain

if TYPE_CHECKING:
    from .penalty import PenaltySpec

LOG_2PI = float(np.log(2.0 * np.pi))
RESP_CLAMP = 1e-300
_LOG_RESP_CLAMP = float(np.log(RESP_CLAMP))
SIMPLEX_TOL = 1e-12


def _frozen(a, ndim, name):
    a = np.array(a, dtype=float, ndmin=ndim)
    if a.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Transform:
    """Column standardization applied to the covariates: x_std = (x - mean) / scale."""

    mean: np.ndarray
    scale: np.ndarray

    def to_original_scale(self, beta):
        """Map coefficients fitted on the standardized scale back.

        Returns ``(coef, offset)`` such that ``x_orig @ coef + offset`` equals
        ``x_std @ beta`` row for row. Works for a single vector or a K x P matrix.
        """
        beta = np.asarray(beta, dtype=float)
        coef = beta / self.scale
        offset = -(coef @ self.mean)
        return coef, offset


@dataclass(frozen=True)
class Dataset:
    """Responses ``y`` (n,) and covariates ``X`` (n, P)."""

    y: np.ndarray
    X: np.ndarray
    columns: Optional[tuple] = None
    transform: Optional[Transform] = None

    def __post_init__(self):
        y = _frozen(self.y, 1, "y")
        X = _frozen(self.X, 2, "X")
        if y.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("need n >= 1 and P >= 1")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def P(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class MixtureParams:
    """theta = (pi, beta_1..beta_K, sigma2).

    ``pi`` has length K, ``beta`` is K x P (row k is beta_k), ``sigma2`` > 0.
    """

    pi: np.ndarray
    beta: np.ndarray
    sigma2: float

    def __post_init__(self):
        pi = _frozen(self.pi, 1, "pi")
        beta = _frozen(self.beta, 2, "beta")
        sigma2 = float(self.sigma2)
        if pi.shape[0] < 1:
            raise ValueError("need K >= 1")
        if beta.shape[0] != pi.shape[0]:
            raise ValueError(f"beta has {beta.shape[0]} rows but pi has {pi.shape[0]} entries")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"pi is not a probability vector: {pi}")
        if not (np.isfinite(sigma2) and sigma2 > 0):
            raise ValueError(f"sigma2 must be positive and finite, got {sigma2}")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def K(self) -> int:
        return self.pi.shape[0]

    @property
    def P(self) -> int:
        return self.beta.shape[1]

    def replace(self, **changes) -> "MixtureParams":
        kw = dict(pi=self.pi, beta=self.beta, sigma2=self.sigma2)
        kw.update(changes)
        return MixtureParams(**kw)

    def flat(self) -> np.ndarray:
        """Stacked parameter vector (pi, beta row-major, sigma2)."""
        return np.concatenate([self.pi, self.beta.ravel(), [self.sigma2]])

    def to_dict(self) -> dict:
        return {"pi": self.pi.tolist(), "beta": self.beta.tolist(), "sigma2": self.sigma2}

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureParams":
        return cls(pi=d["pi"], beta=d["beta"], sigma2=d["sigma2"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "MixtureParams":
        return cls.from_dict(json.loads(s))


def param_distance(a: MixtureParams, b: MixtureParams) -> float:
    """Euclidean distance between stacked parameter vectors."""
    return float(np.linalg.norm(a.flat() - b.flat()))


def _check_shapes(params: MixtureParams, data: Dataset):
    if params.P != data.P:
        raise ValueError(f"params have P={params.P} but data has P={data.P}")


def residuals(params: MixtureParams, data: Dataset) -> np.ndarray:
    """r_ik = y_i - x_i . beta_k, shape (n, K)."""
    _check_shapes(params, data)
    return data.y[:, None] - data.X @ params.beta.T


def component_log_density(params: MixtureParams, data: Dataset) -> np.ndarray:
    """log N(y_i; x_i . beta_k, sigma2), shape (n, K)."""
    r = residuals(params, data)
    with np.errstate(over="ignore"):
        return -0.5 * (LOG_2PI + np.log(params.sigma2)) - r**2 / (2.0 * params.sigma2)


def _log_joint(params, data):
    with np.errstate(divide="ignore"):
        log_pi = np.log(params.pi)
    out = component_log_density(params, data) + log_pi[None, :]
    if np.isnan(out).any():
        raise NonFinite("NaN in component log-densities")
    return out


def log_likelihood(params: MixtureParams, data: Dataset) -> float:
    """Observed-data log-likelihood sum_i log sum_k pi_k N(y_i; x_i beta_k, sigma2)."""
    lj = _log_joint(params, data)
    val = float(np.sum(logsumexp(lj, axis=1)))
    if np.isnan(val):
        raise NonFinite("log-likelihood is NaN")
    return val


def log_responsibilities(params: MixtureParams, data: Dataset, clamp: bool = True) -> np.ndarray:
    """log t_ik.

    With ``clamp`` (the E-step default) entries below ``RESP_CLAMP`` become
    -inf and rows are renormalized; without it, -inf appears only for pi_k = 0.
    """
    lj = _log_joint(params, data)
    lse = logsumexp(lj, axis=1, keepdims=True)
    if not np.all(np.isfinite(lse)):
        bad = int(np.flatnonzero(~np.isfinite(lse[:, 0]))[0])
        raise DegenerateRow(f"all component densities vanish at observation {bad}")
    lt = lj - lse
    if not clamp:
        return lt
    lt[lt < _LOG_RESP_CLAMP] = -np.inf
    return lt - logsumexp(lt, axis=1, keepdims=True)


def responsibilities(params: MixtureParams, data: Dataset) -> np.ndarray:
    """E-step: the (n, K) row-stochastic matrix t_ik(theta)."""
    return np.exp(log_responsibilities(params, data))


def _pi_term(weights, pi):
    # 0 * log 0 = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = weights * np.log(pi)[None, :]
    return float(np.sum(np.where(weights != 0, terms, 0.0)))


def q_function(params: MixtureParams, anchor_resp: np.ndarray, data: Dataset) -> float:
    """Expected complete-data log-likelihood under fixed responsibilities (no penalty)."""
    t = np.asarray(anchor_resp, dtype=float)
    r = residuals(params, data)
    s2 = params.sigma2
    smooth = -0.5 * (LOG_2PI + np.log(s2)) * t.sum() - np.sum(t * r**2) / (2.0 * s2)
    return _pi_term(t, params.pi) + float(smooth)


def candidate_log_responsibilities(params: MixtureParams, data: Dataset, support) -> np.ndarray:
    """E-step log t_ik(params), except that entries on ``support`` are never clamped.

    Keeps I_y(theta, theta) = 0 exactly while avoiding a spurious infinite
    Kullback term when a tiny-but-positive anchor responsibility sits next to
    a candidate value that would fall under the clamp.
    """
    lt = log_responsibilities(params, data)
    fill = support & ~np.isfinite(lt)
    if np.any(fill):
        lt[fill] = log_responsibilities(params, data, clamp=False)[fill]
    return lt


def kl_divergence(params: MixtureParams, anchor: MixtureParams, data: Dataset) -> float:
    """I_y(params, anchor) = sum_ik t_ik(anchor) log(t_ik(anchor) / t_ik(params)).

    The sum runs over the E-step support of ``anchor``.
    """
    lt_bar = log_responsibilities(anchor, data)
    support = np.isfinite(lt_bar)
    lt = candidate_log_responsibilities(params, data, support)
    if np.any(support & ~np.isfinite(lt)):
        raise OutsideDomain("t_ik(params) = 0 where t_ik(anchor) > 0")
    diff = np.where(support, lt_bar - np.where(support, lt, 0.0), 0.0)
    val = float(np.sum(np.exp(lt_bar) * diff))
    return max(val, 0.0)


def penalized_objective(params: MixtureParams, anchor: MixtureParams, beta_relax: float,
                        penalty: "PenaltySpec", data: Dataset) -> float:
    """F_beta(theta, anchor) = l_y(theta) - p_n(theta) - beta_relax * I_y(theta, anchor)."""
    from .penalty import composite_penalty

    val = log_likelihood(params, data) - composite_penalty(params, penalty)
    if beta_relax != 0:
        val -= beta_relax * kl_divergence(params, anchor, data)
    return val


def log_likelihood_grad(params: MixtureParams, data: Dataset):
    """Gradient of the log-likelihood.

    ``pi`` is treated as a free vector (not constrained to the simplex).

    Returns
    -------
    g_pi : ndarray (K,)
    g_beta : ndarray (K, P)
    g_sigma2 : float
    """
    comp = component_log_density(params, data)
    lj = _log_joint(params, data)
    lse = logsumexp(lj, axis=1, keepdims=True)
    g_pi = np.exp(comp - lse).sum(axis=0)
    t = responsibilities(params, data)
    r = residuals(params, data)
    s2 = params.sigma2
    g_beta = (t * r).T @ data.X / s2
    g_sigma2 = float(np.sum(t * (r**2 / (2.0 * s2**2) - 1.0 / (2.0 * s2))))
    return g_pi, g_beta, g_sigma2
