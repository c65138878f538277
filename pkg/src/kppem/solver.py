"""
Space-alternating penalized Kullback-proximal iteration.

Each step maximizes

    F_beta(theta, anchor) = l_y(theta) - p_n(theta) - beta * I_y(theta, anchor)

over one block of coordinates with all other coordinates frozen, where the
anchor is the current iterate. Blocks are visited cyclically in the order
(pi & sigma2), beta_1, ..., beta_K. With beta = 1 each block step is an
exact penalized EM update.

Inner maximizers
----------------
beta = 1
    Closed form for (pi, sigma2); exact coordinate descent with the scalar
    penalty prox for each beta_k.
beta < 1
    Minorize-maximize: l_y >= Q(.; t(theta')) + const, so the block
    objective is minorized by a weighted Q with weights
    (1 - beta) t(theta') + beta t(anchor). Each MM step reuses the beta = 1
    machinery with those weights.
beta > 1
    Proximal gradient with backtracking for beta_k; SLSQP for
    (pi, sigma2). Only non-decreasing steps are accepted.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
from scipy import optimize

from . import model
from .errors import InnerSolverFailure, InvalidInit, OutsideDomain, RootBracketFailure
from .model import Dataset, MixtureParams
from .penalty import NONE, PenaltySpec, component_costs, composite_penalty, penalized_prox
from .rng import stream

EXACT, APPROXIMATE = "exact", "approximate"
ALTERNATING, JOINT = "alternating", "joint"


# --- configuration ---------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("constant relaxation must be positive")


@dataclass(frozen=True)
class GeometricDecay:
    """beta_s = max(beta0 * rho**s, beta_min), with limit beta_min > 0."""

    beta0: float = 1.0
    rho: float = 0.5
    beta_min: float = 0.1

    def __post_init__(self):
        if not (self.beta0 > 0 and 0 < self.rho <= 1 and self.beta_min > 0):
            raise ValueError("GeometricDecay needs beta0 > 0, 0 < rho <= 1, beta_min > 0")


Schedule = Union[Constant, GeometricDecay]


@dataclass(frozen=True)
class SolverConfig:
    schedule: Schedule = Constant(1.0)
    pi_update: str = EXACT
    blocks: str = ALTERNATING
    max_sweeps: int = 500
    tol_param: float = 1e-8
    tol_objective: float = 1e-10
    sigma2_floor: float = 1e-8
    inner_max_iter: int = 500
    inner_tol: float = 1e-12
    seed: int = 0
    snapshot_every: int = 1

    def __post_init__(self):
        if self.pi_update not in (EXACT, APPROXIMATE):
            raise ValueError(f"pi_update must be 'exact' or 'approximate', got {self.pi_update!r}")
        if self.blocks not in (ALTERNATING, JOINT):
            raise ValueError(f"blocks must be 'alternating' or 'joint', got {self.blocks!r}")
        if not isinstance(self.schedule, (Constant, GeometricDecay)):
            raise ValueError("schedule must be Constant or GeometricDecay")
        for name in ("tol_param", "tol_objective", "sigma2_floor", "inner_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("max_sweeps", "inner_max_iter", "snapshot_every"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")


def beta_schedule_value(cfg: SolverConfig, sweep: int) -> float:
    s = cfg.schedule
    if isinstance(s, Constant):
        return float(s.value)
    return float(max(s.beta0 * s.rho**sweep, s.beta_min))


@dataclass(frozen=True)
class Block:
    """Either the (pi, sigma2) block (``k is None``) or the coefficient vector beta_k."""

    k: Optional[int] = None

    @classmethod
    def pi_sigma2(cls) -> "Block":
        return cls(None)

    @classmethod
    def beta(cls, k: int) -> "Block":
        return cls(int(k))

    @property
    def label(self) -> str:
        return "pi_sigma2" if self.k is None else f"beta_{self.k}"


def block_order(K: int) -> List[Block]:
    return [Block.pi_sigma2()] + [Block.beta(k) for k in range(K)]


@dataclass(frozen=True)
class InitStrategy:
    """Starting-point recipe.

    Observations are sorted by y and cut into K equal slices; each slice
    gets a least-squares fit. ``pi_start`` overrides the slice fractions.
    Extra starts perturb the coefficients with a seeded Gaussian and the
    run with the best final objective wins.
    """

    pi_start: Optional[tuple] = None
    n_starts: int = 1
    perturb_scale: float = 0.5


# --- trace -----------------------------------------------------------------

@dataclass(frozen=True)
class TraceRow:
    sweep: int
    block: str
    beta_k: float
    objective: float
    proximal: float
    min_pi: float
    elapsed: float


TRACE_COLUMNS = ("sweep", "block", "beta_k", "objective", "proximal", "min_pi", "dist_to_final")


@dataclass
class FitTrace:
    """Per-step ledger. ``objective0`` and ``snapshots[0]`` describe the start point."""

    objective0: float
    rows: List[TraceRow] = field(default_factory=list)
    snapshots: List[MixtureParams] = field(default_factory=list)
    snapshot_steps: List[int] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([self.objective0] + [r.objective for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def pi_path(self) -> np.ndarray:
        """Mixing proportions at each stored snapshot, shape (len(snapshots), K)."""
        return np.array([s.pi for s in self.snapshots])

    def dist_to_final(self, final: MixtureParams) -> np.ndarray:
        """Distance to ``final`` per row; NaN for rows without a stored snapshot."""
        out = np.full(len(self.rows), np.nan)
        for step, snap in zip(self.snapshot_steps, self.snapshots):
            if step > 0:
                out[step - 1] = model.param_distance(snap, final)
        return out

    def to_csv(self, path, final: MixtureParams):
        import csv

        dist = self.dist_to_final(final)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for r, d in zip(self.rows, dist):
                w.writerow([r.sweep, r.block] + [repr(float(v)) for v in
                                                  (r.beta_k, r.objective, r.proximal, r.min_pi, d)])


@dataclass(frozen=True)
class FitResult:
    params: MixtureParams
    trace: FitTrace
    converged: bool
    sweeps: int
    objective: float


# --- helpers ---------------------------------------------------------------

def objective(params: MixtureParams, penalty: PenaltySpec, data: Dataset) -> float:
    """Merit function F = l_y - p_n."""
    return model.log_likelihood(params, data) - composite_penalty(params, penalty)


def _relaxed_objective(params, log_t_bar, beta_relax, penalty, data):
    """F_beta(params, anchor) written through the anchor's log-responsibilities."""
    F = objective(params, penalty, data)
    if beta_relax == 0:
        return F
    support = np.isfinite(log_t_bar)
    lt = model.candidate_log_responsibilities(params, data, support)
    if np.any(support & ~np.isfinite(lt)):
        return -np.inf
    diff = np.where(support, log_t_bar - np.where(support, lt, 0.0), 0.0)
    kl = max(float(np.sum(np.exp(log_t_bar) * diff)), 0.0)
    return F - beta_relax * kl


def _sigma2_closed_form(weights, params, data, floor):
    r = model.residuals(params, data)
    return max(float(np.sum(weights * r**2)) / data.n, floor)


def _column_share(counts):
    # shared by both pi-updates so they agree bit for bit when all c_k coincide
    return counts / counts.sum()


def _simplex_multiplier(counts, costs):
    """Maximize sum_k n_k log pi_k - sum_k c_k pi_k over the simplex.

    Stationarity gives pi_k = n_k / (mu + c_k); mu is the root of
    sum_k n_k / (mu + c_k) = 1, which is decreasing in mu on the admissible range.
    """
    counts = np.asarray(counts, dtype=float)
    costs = np.asarray(costs, dtype=float)
    active = counts > 0
    if not np.any(active):
        raise RootBracketFailure("all component counts are zero")
    if not np.all(np.isfinite(costs[active])):
        raise RootBracketFailure("non-finite component costs")
    if np.ptp(costs[active]) == 0:
        return _column_share(counts)
    pi = np.zeros_like(counts)
    na, ca = counts[active], costs[active]
    kstar = int(np.argmin(ca))
    lower = -ca[kstar]

    def f(mu):
        return float(np.sum(na / (mu + ca))) - 1.0

    lo = lower + 0.5 * na[kstar]
    hi = lower + na.sum()
    flo, fhi = f(lo), f(hi)
    if not (flo > 0 and fhi <= 0):
        raise RootBracketFailure(f"cannot bracket multiplier: f({lo})={flo}, f({hi})={fhi}")
    mu = hi if fhi == 0 else optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                                             maxiter=500)
    pi[active] = na / (mu + ca)
    return pi / pi.sum()


def pi_sigma_update_exact(resp, params: MixtureParams, penalty: PenaltySpec, data: Dataset,
                          cfg: SolverConfig):
    """Exact (pi, sigma2) maximizer of the penalized Q-function given responsibilities.

    Because p_n is linear in pi with slopes c_k, the pi-update is not the
    column mean of ``resp`` unless all c_k coincide.
    """
    resp = np.asarray(resp, dtype=float)
    counts = resp.sum(axis=0)
    costs = component_costs(params, penalty) if penalty.kind != NONE else np.zeros(params.K)
    pi = _simplex_multiplier(counts, costs)
    sigma2 = _sigma2_closed_form(resp, params, data, cfg.sigma2_floor)
    return pi, sigma2


def pi_sigma_update_approx(resp, params: MixtureParams, data: Dataset, cfg: SolverConfig):
    """Column-mean pi-update (ignores the pi-dependence of the penalty)."""
    resp = np.asarray(resp, dtype=float)
    pi = _column_share(resp.sum(axis=0))
    sigma2 = _sigma2_closed_form(resp, params, data, cfg.sigma2_floor)
    return pi, sigma2


def _weighted_beta_solve(k, w, params, penalty, data, cfg):
    """argmax_b  -sum_i w_i (y_i - x_i b)^2 / (2 sigma2) - lambda_k pi_k sum_j p(b_j) - guard."""
    b = params.beta[k].astype(float).copy()
    if not np.any(w):
        return b
    X = data.X
    s2 = params.sigma2
    G = (X.T * w) @ X / s2
    h = X.T @ (w * data.y) / s2
    mu = penalty.lam[k] * params.pi[k] if penalty.kind != NONE else 0.0
    if mu == 0 and not penalty.guard_enabled:
        # nearest solution to the incumbent when G is singular
        delta = np.linalg.lstsq(G, h - G @ b, rcond=None)[0]
        return b + delta
    diag = np.diag(G).copy()
    P = b.shape[0]
    for _ in range(cfg.inner_max_iter * 10):
        biggest = 0.0
        for j in range(P):
            old = b[j]
            if diag[j] <= 0:
                new = 0.0 if mu > 0 else old
            else:
                z = old + (h[j] - G[j] @ b) / diag[j]
                new = penalized_prox(penalty, k, z, diag[j], mu)
            if new != old:
                b[j] = new
                biggest = max(biggest, abs(new - old))
        if biggest <= cfg.inner_tol * max(1.0, float(np.max(np.abs(b)))):
            break
    return b


def beta_block_update(k: int, resp, params: MixtureParams, beta_relax: float,
                      penalty: PenaltySpec, data: Dataset, cfg: SolverConfig) -> np.ndarray:
    """Maximize F_beta over beta_k; ``resp`` are the anchor responsibilities."""
    resp = np.asarray(resp, dtype=float)
    if beta_relax == 1:
        return _weighted_beta_solve(k, resp[:, k], params, penalty, data, cfg)
    with np.errstate(divide="ignore"):
        log_t_bar = np.log(resp)
    if beta_relax < 1:
        return _beta_mm(k, resp, log_t_bar, params, beta_relax, penalty, data, cfg)
    return _beta_proxgrad(k, resp, log_t_bar, params, beta_relax, penalty, data, cfg)


def _beta_mm(k, resp, log_t_bar, params, beta_relax, penalty, data, cfg):
    cur = params
    val = _relaxed_objective(cur, log_t_bar, beta_relax, penalty, data)
    for _ in range(cfg.inner_max_iter):
        w = (1.0 - beta_relax) * model.responsibilities(cur, data)[:, k] + beta_relax * resp[:, k]
        b = _weighted_beta_solve(k, w, cur, penalty, data, cfg)
        cand = cur.replace(beta=_with_row(cur.beta, k, b))
        cval = _relaxed_objective(cand, log_t_bar, beta_relax, penalty, data)
        if not cval >= val:
            break
        step = float(np.max(np.abs(cand.beta[k] - cur.beta[k])))
        cur, val = cand, cval
        if step <= cfg.inner_tol * max(1.0, float(np.max(np.abs(b)))):
            break
    return cur.beta[k].copy()


def _beta_proxgrad(k, resp, log_t_bar, params, beta_relax, penalty, data, cfg):
    mu = penalty.lam[k] * params.pi[k] if penalty.kind != NONE else 0.0

    def smooth(p):
        return (_relaxed_objective(p, log_t_bar, beta_relax, penalty, data)
                + _beta_penalty(p, k, mu, penalty))

    cur = params
    s_cur = smooth(cur)
    X = data.X
    L = float(np.linalg.norm(X, 2)) ** 2 * beta_relax / cur.sigma2
    eta = 1.0 / max(L, 1e-12)
    for _ in range(cfg.inner_max_iter):
        t = model.responsibilities(cur, data)[:, k]
        w = (1.0 - beta_relax) * t + beta_relax * resp[:, k]
        r = data.y - X @ cur.beta[k]
        g = X.T @ (w * r) / cur.sigma2
        b0 = cur.beta[k]
        accepted = False
        for _ in range(60):
            b = np.array([penalized_prox(penalty, k, float(z), 1.0 / eta, mu)
                          for z in b0 + eta * g])
            d = b - b0
            cand = cur.replace(beta=_with_row(cur.beta, k, b))
            s_new = smooth(cand)
            if s_new >= s_cur + g @ d - (d @ d) / (2 * eta):
                accepted = True
                break
            eta *= 0.5
        if not accepted or not np.any(d):
            break
        cur, s_cur = cand, s_new
        if float(np.max(np.abs(d))) <= cfg.inner_tol * max(1.0, float(np.max(np.abs(b)))):
            break
        eta *= 2.0
    return cur.beta[k].copy()


def _beta_penalty(p, k, mu, penalty):
    from .penalty import coercivity_guard, component_cost

    val = 0.0
    if mu > 0:
        val += p.pi[k] * component_cost(penalty, k, p.beta[k])
    if penalty.guard_enabled:
        val += coercivity_guard(p.beta[k], penalty.guard_threshold)
    return val


def _with_row(beta, k, row):
    out = np.array(beta, dtype=float)
    out[k] = row
    return out


def _pi_sigma_relaxed(current, resp, log_t_bar, beta_relax, penalty, data, cfg):
    """(pi, sigma2) block for beta != 1."""
    cur = current
    val = _relaxed_objective(cur, log_t_bar, beta_relax, penalty, data)
    if beta_relax < 1:
        for _ in range(cfg.inner_max_iter):
            w = (1.0 - beta_relax) * model.responsibilities(cur, data) + beta_relax * resp
            pi, s2 = pi_sigma_update_exact(w, cur, penalty, data, cfg)
            cand = cur.replace(pi=pi, sigma2=s2)
            cval = _relaxed_objective(cand, log_t_bar, beta_relax, penalty, data)
            if not cval >= val:
                break
            step = float(np.max(np.abs(cand.flat() - cur.flat())))
            cur, val = cand, cval
            if step <= cfg.inner_tol:
                break
        return cur.pi, cur.sigma2

    K = cur.K
    floor = math.log(cfg.sigma2_floor)

    def negF(x):
        pi = np.clip(x[:K], 0.0, None)
        if pi.sum() <= 0:
            return 1e300
        try:
            p = cur.replace(pi=pi / pi.sum(), sigma2=math.exp(x[K]))
            v = _relaxed_objective(p, log_t_bar, beta_relax, penalty, data)
        except (ValueError, OutsideDomain):
            return 1e300
        return -v if np.isfinite(v) else 1e300

    x0 = np.concatenate([cur.pi, [math.log(cur.sigma2)]])
    res = optimize.minimize(
        negF, x0, method="SLSQP",
        bounds=[(0.0, 1.0)] * K + [(floor, None)],
        constraints=[{"type": "eq", "fun": lambda x: np.sum(x[:K]) - 1.0}],
        options={"maxiter": cfg.inner_max_iter, "ftol": 1e-14},
    )
    pi = np.clip(res.x[:K], 0.0, None)
    if pi.sum() > 0:
        cand = cur.replace(pi=pi / pi.sum(), sigma2=max(math.exp(res.x[K]), cfg.sigma2_floor))
        if _relaxed_objective(cand, log_t_bar, beta_relax, penalty, data) > val:
            return cand.pi, cand.sigma2
    return cur.pi, cur.sigma2


def kpp_block_step(current: MixtureParams, block: Block, beta_relax: float, penalty: PenaltySpec,
                   data: Dataset, cfg: SolverConfig,
                   anchor: Optional[MixtureParams] = None) -> MixtureParams:
    """One block maximization of F_beta(., anchor); the anchor defaults to ``current``.

    Raises
    ------
    InnerSolverFailure
        If the candidate lowers F_beta by more than rounding noise.
    """
    if not beta_relax > 0:
        raise ValueError("beta_relax must be positive")
    anchor = current if anchor is None else anchor
    log_t_bar = model.log_responsibilities(anchor, data)
    resp = np.exp(log_t_bar)

    unchecked = False
    if block.k is None:
        if cfg.pi_update == APPROXIMATE:
            # not an ascent step in general: ties are broken as below, decreases let through
            pi, s2 = pi_sigma_update_approx(resp, current, data, cfg)
            unchecked = True
        elif beta_relax == 1:
            pi, s2 = pi_sigma_update_exact(resp, current, penalty, data, cfg)
        else:
            pi, s2 = _pi_sigma_relaxed(current, resp, log_t_bar, beta_relax, penalty, data, cfg)
        cand = current.replace(pi=pi, sigma2=s2)
    else:
        b = beta_block_update(block.k, resp, current, beta_relax, penalty, data, cfg)
        cand = current.replace(beta=_with_row(current.beta, block.k, b))

    old = _relaxed_objective(current, log_t_bar, beta_relax, penalty, data)
    new = _relaxed_objective(cand, log_t_bar, beta_relax, penalty, data)
    if new >= old:
        return cand
    if old - new <= 1e-10 * (1.0 + abs(old)):
        return current
    if unchecked:
        return cand
    raise InnerSolverFailure(
        f"{block.label} update lowered F_beta from {old!r} to {new!r} (beta={beta_relax})")


def _joint_step(current, beta_relax, penalty, data, cfg):
    """R = 1: maximize F_beta(., current) over all coordinates by inner block cycling."""
    order = [Block.beta(k) for k in range(current.K)] + [Block.pi_sigma2()]
    theta = current
    for _ in range(cfg.inner_max_iter):
        prev = theta
        for b in order:
            theta = kpp_block_step(theta, b, beta_relax, penalty, data, cfg, anchor=current)
        gap = float(np.max(np.abs(theta.flat() - prev.flat())))
        if gap <= cfg.inner_tol * max(1.0, float(np.max(np.abs(theta.flat())))):
            break
    return theta


# --- initialization --------------------------------------------------------

def initial_params(data: Dataset, K: int, strategy: InitStrategy, cfg: SolverConfig,
                   start: int = 0) -> MixtureParams:
    order = np.argsort(data.y, kind="stable")
    slices = np.array_split(order, K)
    beta = np.zeros((K, data.P))
    sq = 0.0
    for k, idx in enumerate(slices):
        if len(idx):
            beta[k] = np.linalg.lstsq(data.X[idx], data.y[idx], rcond=None)[0]
            sq += float(np.sum((data.y[idx] - data.X[idx] @ beta[k]) ** 2))
    sigma2 = sq / data.n
    if not sigma2 > cfg.sigma2_floor:
        sigma2 = max(float(np.var(data.y)), 1.0)
    if strategy.pi_start is not None:
        pi = np.asarray(strategy.pi_start, dtype=float)
        if pi.shape != (K,):
            raise InvalidInit(f"pi_start must have {K} entries")
    else:
        pi = np.array([len(s) for s in slices], dtype=float) / data.n
    if start > 0:
        rng = stream(cfg.seed, "init", start)
        scale = strategy.perturb_scale * max(float(np.std(data.y)), 1e-12)
        beta = beta + scale * rng.standard_normal(beta.shape)
    try:
        return MixtureParams(pi=pi, beta=beta, sigma2=sigma2)
    except ValueError as e:
        raise InvalidInit(str(e)) from e


def effective_penalty(penalty: PenaltySpec, data: Dataset) -> PenaltySpec:
    """Switch the coercivity guard on when X lacks full column rank.

    Without it the likelihood is flat along null-space directions of X and
    the iterates need not stay bounded.
    """
    if penalty.guard_enabled or np.linalg.matrix_rank(data.X) == data.P:
        return penalty
    return dataclasses.replace(penalty, guard_enabled=True)


def _validate_init(init, data, K):
    if init.K != K or init.P != data.P:
        raise InvalidInit(f"init has K={init.K}, P={init.P}; expected K={K}, P={data.P}")
    return init


# --- driver ----------------------------------------------------------------

def fit(data: Dataset, K: int, init: Union[MixtureParams, InitStrategy, None] = None,
        penalty: Optional[PenaltySpec] = None, cfg: Optional[SolverConfig] = None) -> FitResult:
    """Run the space-alternating penalized KPP iteration from one or more starts.

    Parameters
    ----------
    data : Dataset
    K : int
        Number of mixture components.
    init : MixtureParams or InitStrategy, optional
        Explicit start, or a recipe (default: quantile slices of y).
    penalty : PenaltySpec, optional
        Defaults to no penalty. ``n_scale`` is used as given. The coercivity
        guard is switched on for rank-deficient X (see ``effective_penalty``).
    cfg : SolverConfig, optional

    Returns
    -------
    FitResult
        The best run (highest final F) when several starts are requested.
    """
    if K < 1:
        raise InvalidInit("K must be >= 1")
    cfg = cfg or SolverConfig()
    penalty = penalty or PenaltySpec.none(K, data.n)
    if penalty.kind != NONE and penalty.K != K:
        raise ValueError(f"penalty has {penalty.K} components but K={K}")
    penalty = effective_penalty(penalty, data)
    if isinstance(init, MixtureParams):
        starts = [_validate_init(init, data, K)]
    else:
        strategy = init or InitStrategy()
        starts = [initial_params(data, K, strategy, cfg, s) for s in range(strategy.n_starts)]
    best = None
    for start in starts:
        res = _run(data, start, penalty, cfg)
        if best is None or res.objective > best.objective:
            best = res
    return best


def _run(data, start, penalty, cfg):
    t0 = time.perf_counter()
    current = start
    F = objective(current, penalty, data)
    trace = FitTrace(objective0=F, snapshots=[current], snapshot_steps=[0])
    blocks = block_order(current.K)
    converged = False
    sweeps = 0
    for sweep in range(cfg.max_sweeps):
        beta_s = beta_schedule_value(cfg, sweep)
        sweep_start, F_start = current, F
        steps = ([None] if cfg.blocks == JOINT else blocks)
        for b in steps:
            if b is None:
                new = _joint_step(current, beta_s, penalty, data, cfg)
                label = "joint"
            else:
                new = kpp_block_step(current, b, beta_s, penalty, data, cfg)
                label = b.label
            prox = model.kl_divergence(new, current, data)
            F = objective(new, penalty, data)
            trace.rows.append(TraceRow(sweep, label, beta_s, F, prox, float(new.pi.min()),
                                       time.perf_counter() - t0))
            step = len(trace.rows)
            if step % cfg.snapshot_every == 0:
                trace.snapshots.append(new)
                trace.snapshot_steps.append(step)
            current = new
        sweeps = sweep + 1
        gap = model.param_distance(current, sweep_start)
        if gap < cfg.tol_param and abs(F - F_start) < cfg.tol_objective:
            converged = True
            break
    if trace.snapshot_steps[-1] != len(trace.rows):
        trace.snapshots.append(current)
        trace.snapshot_steps.append(len(trace.rows))
    return FitResult(params=current, trace=trace, converged=converged, sweeps=sweeps, objective=F)
