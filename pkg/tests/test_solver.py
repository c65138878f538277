import math

import numpy as np
import pytest
from conftest import random_params, textbook_ecm_sweep, textbook_em_sweep, two_component
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from kppem import model
from kppem.data import SimSpec, simulate
from kppem.diagnostics import audit_trace, iterate_bound
from kppem.errors import InvalidInit, RootBracketFailure
from kppem.model import Dataset, MixtureParams
from kppem.penalty import PenaltySpec
from kppem.solver import (Block, Constant, GeometricDecay, InitStrategy, SolverConfig,
                          _simplex_multiplier, beta_block_update, beta_schedule_value,
                          block_order, fit, kpp_block_step, pi_sigma_update_approx,
                          pi_sigma_update_exact)


def ols(data):
    beta = np.linalg.lstsq(data.X, data.y, rcond=None)[0]
    return beta, float(np.mean((data.y - data.X @ beta) ** 2))


def regression_data(n=100, P=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, P))
    return Dataset(y=X @ rng.standard_normal(P) + rng.standard_normal(n), X=X)


# --- schedules and configuration --------------------------------------------

def test_schedule_values():
    assert beta_schedule_value(SolverConfig(schedule=Constant(1.0)), 123) == 1.0
    geo = SolverConfig(schedule=GeometricDecay(1.0, 0.5, 0.1))
    assert beta_schedule_value(geo, 10) == 0.1
    assert beta_schedule_value(geo, 2) == 0.25


@pytest.mark.parametrize("bad", [dict(pi_update="fast"), dict(blocks="all"), dict(tol_param=0.0),
                                 dict(max_sweeps=0)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SolverConfig(**bad)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Constant(0.0)
    with pytest.raises(ValueError):
        GeometricDecay(1.0, 0.5, 0.0)


def test_block_order():
    assert [b.label for b in block_order(2)] == ["pi_sigma2", "beta_0", "beta_1"]


# --- pi / sigma2 updates ---------------------------------------------------

def test_simplex_multiplier_worked_example():
    pi = _simplex_multiplier([6.0, 4.0], [0.0, 1.0])
    mu = (9 + math.sqrt(105)) / 2
    np.testing.assert_allclose(pi, [6 / mu, 4 / (mu + 1)], rtol=1e-12)
    assert pi.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(pi, [0.6235, 0.3765], atol=1e-4)


def test_simplex_multiplier_zero_count_and_equal_costs():
    np.testing.assert_array_equal(_simplex_multiplier([5.0, 0.0, 5.0], [1.0, 2.0, 3.0])[1], 0.0)
    np.testing.assert_allclose(_simplex_multiplier([6.0, 4.0], [2.0, 2.0]), [0.6, 0.4])
    with pytest.raises(RootBracketFailure):
        _simplex_multiplier([0.0, 0.0], [1.0, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.1, 50), min_size=2, max_size=5), st.data())
def test_simplex_multiplier_matches_constrained_optimizer(counts, draw):
    costs = draw.draw(st.lists(st.floats(0, 30), min_size=len(counts), max_size=len(counts)))
    counts, costs = np.array(counts), np.array(costs)
    pi = _simplex_multiplier(counts, costs)

    def neg(p):
        return -(counts @ np.log(np.maximum(p, 1e-300)) - costs @ p)

    res = optimize.minimize(neg, np.full(len(counts), 1 / len(counts)), method="SLSQP",
                            bounds=[(1e-12, 1)] * len(counts),
                            constraints=[{"type": "eq", "fun": lambda p: p.sum() - 1}],
                            options={"ftol": 1e-14, "maxiter": 500})
    assert -neg(pi) >= -res.fun - 1e-7


def test_exact_update_equals_column_means_without_penalty(small_mixture):
    data, truth, _ = small_mixture
    resp = model.responsibilities(truth, data)
    cfg = SolverConfig()
    pi_e, s_e = pi_sigma_update_exact(resp, truth, PenaltySpec.none(2, data.n), data, cfg)
    pi_a, s_a = pi_sigma_update_approx(resp, truth, data, cfg)
    np.testing.assert_allclose(pi_e, resp.mean(axis=0), rtol=1e-14)
    np.testing.assert_allclose(pi_e, pi_a, rtol=1e-14)
    assert s_e == s_a
    r = model.residuals(truth, data)
    assert s_e == pytest.approx(float(np.sum(resp * r**2)) / data.n, rel=1e-14)


def test_approx_update_worked_examples():
    data = regression_data(n=10, P=1)
    params = MixtureParams(pi=[0.5, 0.5], beta=[[0.0], [0.0]], sigma2=1.0)
    resp = np.zeros((10, 2))
    resp[:6, 0] = resp[6:, 1] = 1.0
    pi, _ = pi_sigma_update_approx(resp, params, data, SolverConfig())
    np.testing.assert_allclose(pi, [0.6, 0.4])
    pi, _ = pi_sigma_update_approx(np.full((10, 2), 0.5), params, data, SolverConfig())
    np.testing.assert_allclose(pi, [0.5, 0.5])


def test_exact_update_penalized_column():
    data = regression_data(n=10, P=1)
    spec = PenaltySpec.shared("l1", 1.0, 2, 1)
    params = MixtureParams(pi=[0.5, 0.5], beta=[[0.0], [1.0]], sigma2=1.0)   # c = (0, 1)
    resp = np.zeros((10, 2))
    resp[:6, 0] = resp[6:, 1] = 1.0
    pi, _ = pi_sigma_update_exact(resp, params, spec, data, SolverConfig())
    np.testing.assert_allclose(pi, [0.6235, 0.3765], atol=1e-4)
    resp = np.column_stack([np.ones(10), np.zeros(10)])
    pi, _ = pi_sigma_update_exact(resp, params, spec, data, SolverConfig())
    assert pi[1] == 0.0


def test_sigma2_floor():
    X = np.eye(3)
    data = Dataset(y=np.array([1.0, 2.0, 3.0]), X=X)
    params = MixtureParams(pi=[1.0], beta=[[1.0, 2.0, 3.0]], sigma2=1.0)
    _, s2 = pi_sigma_update_exact(np.ones((3, 1)), params, PenaltySpec.none(1, 3), data,
                                  SolverConfig(sigma2_floor=1e-6))
    assert s2 == 1e-6


# --- beta updates ----------------------------------------------------------

def test_beta_block_k1_is_ols():
    data = regression_data()
    start = MixtureParams(pi=[1.0], beta=[[0.0, 0.0, 0.0]], sigma2=1.0)
    b = beta_block_update(0, np.ones((data.n, 1)), start, 1.0, PenaltySpec.none(1, data.n), data,
                          SolverConfig())
    np.testing.assert_allclose(b, ols(data)[0], rtol=1e-10, atol=1e-12)


def test_block_step_fixed_point():
    data = regression_data()
    beta, s2 = ols(data)
    at_opt = MixtureParams(pi=[1.0], beta=[beta], sigma2=s2)
    for block in block_order(1):
        out = kpp_block_step(at_opt, block, 1.0, PenaltySpec.none(1, data.n), data, SolverConfig())
        assert model.param_distance(out, at_opt) <= 1e-10


def test_block_step_touches_only_its_block(small_mixture):
    data, truth, _ = small_mixture
    start = truth.replace(beta=truth.beta + 0.3)
    spec = PenaltySpec.shared("scad", 0.5, 2, data.n)
    out = kpp_block_step(start, Block.beta(1), 1.0, spec, data, SolverConfig())
    np.testing.assert_array_equal(out.beta[0], start.beta[0])
    np.testing.assert_array_equal(out.pi, start.pi)
    assert out.sigma2 == start.sigma2
    out = kpp_block_step(start, Block.pi_sigma2(), 1.0, spec, data, SolverConfig())
    np.testing.assert_array_equal(out.beta, start.beta)


@pytest.mark.parametrize("beta_relax", [0.3, 1.0, 2.0])
@pytest.mark.parametrize("kind", ["none", "l1", "scad"])
def test_block_step_satisfies_ascent_inequality(small_mixture, beta_relax, kind):
    data, truth, _ = small_mixture
    spec = PenaltySpec.shared(kind, 0.3, 2, data.n)
    cur = truth.replace(beta=truth.beta * 0.5, pi=[0.5, 0.5], sigma2=1.0)
    for block in block_order(2) * 2:
        new = kpp_block_step(cur, block, beta_relax, spec, data, SolverConfig())
        gain = model.log_likelihood(new, data) - model.log_likelihood(cur, data)
        from kppem.penalty import composite_penalty
        gain -= composite_penalty(new, spec) - composite_penalty(cur, spec)
        assert gain >= beta_relax * model.kl_divergence(cur, new, data) - 1e-8
        assert gain >= beta_relax * model.kl_divergence(new, cur, data) - 1e-8
        cur = new


# --- full fits -------------------------------------------------------------

def test_k1_fit_matches_ols():
    data = regression_data(seed=3)
    res = fit(data, 1)
    beta, s2 = ols(data)
    assert res.converged and res.sweeps <= 2
    np.testing.assert_allclose(res.params.beta[0], beta, atol=1e-6)
    assert res.params.sigma2 == pytest.approx(s2, abs=1e-6)


def test_recovers_well_separated_mixture():
    data, truth, _ = two_component(n=2000, seed=11)
    res = fit(data, 2, cfg=SolverConfig(tol_param=1e-10))
    est = res.params
    order = np.argsort(est.beta[:, 0])[::-1]          # truth has beta_0[0] > beta_1[0]
    # standard error of a coefficient ~ sigma / sqrt(n_k)
    se = math.sqrt(truth.sigma2 / (data.n * truth.pi.min()))
    np.testing.assert_allclose(est.beta[order], truth.beta, atol=5 * se)
    np.testing.assert_allclose(est.pi[order], truth.pi, atol=5 * math.sqrt(0.25 / data.n))


@pytest.mark.parametrize("seed", range(4))
def test_one_joint_sweep_is_textbook_em(seed):
    rng = np.random.default_rng(seed)
    data, _, _ = two_component(n=150, P=3, seed=seed)
    start = random_params(rng, 2, 3)
    res = fit(data, 2, start, cfg=SolverConfig(max_sweeps=1, blocks="joint"))
    pi, beta, s2 = textbook_em_sweep(start.pi, start.beta, start.sigma2, data.X, data.y)
    np.testing.assert_allclose(res.params.pi, pi, rtol=0, atol=1e-10)
    np.testing.assert_allclose(res.params.beta, beta, rtol=0, atol=1e-10)
    assert abs(res.params.sigma2 - s2) <= 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_one_alternating_sweep_is_cyclic_ecm(seed):
    rng = np.random.default_rng(100 + seed)
    data, _, _ = two_component(n=150, P=3, seed=seed)
    start = random_params(rng, 2, 3)
    res = fit(data, 2, start, cfg=SolverConfig(max_sweeps=1))
    pi, beta, s2 = textbook_ecm_sweep(start.pi, start.beta, start.sigma2, data.X, data.y)
    np.testing.assert_allclose(res.params.pi, pi, rtol=0, atol=1e-10)
    np.testing.assert_allclose(res.params.beta, beta, rtol=0, atol=1e-10)
    assert abs(res.params.sigma2 - s2) <= 1e-10


def test_approximate_equals_exact_without_penalty(small_mixture):
    data, _, _ = small_mixture
    a = fit(data, 2, cfg=SolverConfig(max_sweeps=50))
    b = fit(data, 2, cfg=SolverConfig(max_sweeps=50, pi_update="approximate"))
    assert model.param_distance(a.params, b.params) <= 1e-10


@pytest.mark.parametrize("schedule", [Constant(1.0), GeometricDecay(1.0, 0.5, 0.2), Constant(1.5)])
@pytest.mark.parametrize("kind,gamma", [("none", 1.0), ("l1", 0.05), ("scad", 0.5)])
def test_fits_are_monotone_bounded_and_settle(small_mixture, schedule, kind, gamma):
    data, _, _ = small_mixture
    spec = PenaltySpec.shared(kind, gamma, 2, data.n)
    cfg = SolverConfig(schedule=schedule, max_sweeps=200)
    res = fit(data, 2, penalty=spec, cfg=cfg)
    # ascent inequality in the order the trace records, and in the literal argument order
    report = audit_trace(res.trace)
    assert report.monotone_ok, report
    snaps = res.trace.snapshots
    for i, row in enumerate(res.trace.rows):
        assert row.proximal >= -1e-12
        literal = model.kl_divergence(snaps[i], snaps[i + 1], data)
        assert res.trace.objectives[i + 1] - res.trace.objectives[i] >= row.beta_k * literal - 1e-8
    # bounded iterates
    bound = iterate_bound(data, 2)
    assert max(np.linalg.norm(s.flat()) for s in snaps) <= bound
    # proximal term at the final accepted sweep
    if res.converged:
        assert report.proximal_final <= 10 * cfg.tol_objective


def test_determinism(small_mixture):
    data, _, _ = small_mixture
    spec = PenaltySpec.shared("scad", 0.5, 2, data.n)
    cfg = SolverConfig(max_sweeps=30, seed=4)
    init = InitStrategy(n_starts=3)
    a = fit(data, 2, init, spec, cfg)
    b = fit(data, 2, init, spec, cfg)
    assert [(r.block, r.objective, r.proximal) for r in a.trace.rows] == \
           [(r.block, r.objective, r.proximal) for r in b.trace.rows]
    np.testing.assert_array_equal(a.params.flat(), b.params.flat())


def test_multistart_keeps_best(small_mixture):
    data, _, _ = small_mixture
    single = fit(data, 2, InitStrategy(n_starts=1), cfg=SolverConfig(max_sweeps=40))
    multi = fit(data, 2, InitStrategy(n_starts=4), cfg=SolverConfig(max_sweeps=40))
    assert multi.objective >= single.objective - 1e-12


def test_invalid_init():
    data = regression_data()
    with pytest.raises(InvalidInit):
        fit(data, 0)
    with pytest.raises(InvalidInit):
        fit(data, 2, MixtureParams(pi=[1.0], beta=[[0.0, 0.0, 0.0]], sigma2=1.0))
    with pytest.raises(InvalidInit):
        fit(data, 2, InitStrategy(pi_start=(0.3, 0.3, 0.4)))


def test_boundary_pi_is_representable():
    # a component with no support collapses to pi = 0 and stays there
    truth = MixtureParams(pi=[1.0], beta=[[1.0, -1.0]], sigma2=0.1)
    X = 1.0 + np.abs(np.random.default_rng(2).standard_normal((200, 2)))
    data, _ = simulate(SimSpec(n=200, true_params=truth, seed=2, covariates=X))
    start = MixtureParams(pi=[0.5, 0.5], beta=[[1.0, -1.0], [40.0, 40.0]], sigma2=0.1)
    res = fit(data, 2, start, cfg=SolverConfig(max_sweeps=20))
    assert res.params.pi[1] == 0.0
    assert res.params.pi.sum() == pytest.approx(1.0, abs=1e-12)


def test_guard_enabled_for_rank_deficient_design():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((60, 1))
    X = np.hstack([x, 2 * x])
    data = Dataset(y=3 * x[:, 0] + 0.1 * rng.standard_normal(60), X=X)
    from kppem.solver import effective_penalty
    assert effective_penalty(PenaltySpec.none(1, 60), data).guard_enabled
    assert not effective_penalty(PenaltySpec.none(1, 60), regression_data()).guard_enabled
    res = fit(data, 1)
    assert res.converged
    np.testing.assert_allclose(X @ res.params.beta[0], X @ np.linalg.lstsq(X, data.y, rcond=None)[0],
                               atol=1e-8)
