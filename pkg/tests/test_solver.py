import numpy as np
import pytest

from beamsculpt import model, objective, oracle
from beamsculpt.metrics import beamforming_density
from beamsculpt.model import SystemConfig
from beamsculpt.objective import DualState
from beamsculpt.prox import PenaltyParams
from beamsculpt.solver import (SolverAbort, SolverParams, dual_update, initialize_primal,
                               primal_update, prox_fixed_point_residual, solve)

SMALL = SystemConfig(n_tx=4, n_users=2, power_budget=4.0, bandwidth_hz=1e6, min_rate_bps=(0.0, 0.0))


def setup_small(seed=0):
    h = model.generate_channel(SMALL, seed)
    w = initialize_primal(SMALL, seed)
    return h, w


class TestInitialize:
    @pytest.mark.parametrize("seed", [0, 1, 99])
    def test_power_budget_met(self, default_config, seed):
        w = initialize_primal(default_config, seed)
        assert objective.power(w) == pytest.approx(2000.0, rel=1e-9)

    def test_deterministic_and_seed_sensitive(self, default_config):
        a, b = initialize_primal(default_config, 1), initialize_primal(default_config, 1)
        np.testing.assert_array_equal(a, b)
        c = initialize_primal(default_config, 2)
        assert np.all(a != c)


class TestPrimalUpdate:
    def test_ascent_without_penalty(self):
        h, w = setup_small()
        duals = DualState.zeros(2)
        params = SolverParams(eta_x_init=1e-3)
        step = primal_update(w, duals, h, PenaltyParams(0.0, np.zeros((4, 2))), SMALL, params)
        before = objective.rates_nats(w, h, 1.0).sum()
        after = objective.rates_nats(step.w, h, 1.0).sum()
        assert after >= before

    def test_reliable_array_is_plain_gradient_step(self):
        h, w = setup_small()
        duals = DualState.constant(2, 0.04, 0.06, 0.05)
        step = primal_update(w, duals, h, PenaltyParams(333.4, np.ones((4, 2))), SMALL, SolverParams())
        expected = w + step.eta * objective.smooth_gradient(w, h, SMALL, duals)
        np.testing.assert_array_equal(step.w, expected)

    def test_accepted_eta_on_geometric_grid(self):
        params = SolverParams(eta_x_init=5.0, backtrack_shrink=0.5)
        h, w = setup_small(3)
        duals = DualState.constant(2, 0.0, 0.0, 1.0)
        step = primal_update(w, duals, h, PenaltyParams(1.0, model.generate_reliability(SMALL, 3)),
                             SMALL, params)
        assert step.backtracks > 0
        assert step.eta == 5.0 * 0.5 ** step.backtracks
        assert not step.line_search_failed

    def test_sufficient_increase_holds_when_accepted(self):
        h, w = setup_small(4)
        duals = DualState.constant(2, 0.1, 0.0, 0.5)
        pen = PenaltyParams(2.0, model.generate_reliability(SMALL, 4))
        step = primal_update(w, duals, h, pen, SMALL, SolverParams(eta_x_init=3.0))
        g = objective.smooth_gradient(w, h, SMALL, duals)
        d = step.w - w
        lower = (objective.smooth_value(w, h, SMALL, duals) + np.vdot(g, d).real
                 - np.vdot(d, d).real / (2 * step.eta))
        assert objective.smooth_value(step.w, h, SMALL, duals) >= lower - 1e-9

    def test_max_backtracks_flagged(self):
        h, w = setup_small()
        duals = DualState.constant(2, mu=50.0)
        params = SolverParams(eta_x_init=1e3, max_backtracks=1)
        step = primal_update(w, duals, h, PenaltyParams(0.0, np.ones((4, 2))), SMALL, params)
        assert step.line_search_failed and step.backtracks == 1
        assert step.eta == 500.0

    def test_non_finite_gradient_aborts(self):
        h, w = setup_small()
        h[0, 0] = np.nan
        with pytest.raises(SolverAbort, match="non-finite"):
            primal_update(w, DualState.zeros(2), h, PenaltyParams(0.0, np.ones((4, 2))), SMALL,
                          SolverParams())


class TestDualUpdate:
    def test_fixed_point_when_satisfied(self):
        cfg = SystemConfig(n_tx=2, n_users=2, bandwidth_hz=2.0, power_budget=10.0, min_rate_bps=(0.5, 0.5))
        d = dual_update(DualState.zeros(2), np.array([2.0, 3.0]), 5.0, cfg,
                        SolverParams(enable_lambda2=True))
        assert np.all(d.lambda1 == 0) and np.all(d.lambda2 == 0) and d.mu == 0

    def test_mu_arithmetic(self):
        cfg = SystemConfig(n_tx=2, n_users=1, power_budget=10.0)
        d = dual_update(DualState.zeros(1), np.array([1.0]), 11.0, cfg, SolverParams())
        assert d.mu == pytest.approx(0.025, abs=1e-15)

    def test_lambda1_grows_on_violation(self):
        cfg = SystemConfig(n_tx=2, n_users=1, bandwidth_hz=1.0, min_rate_bps=(1.0,))
        d = dual_update(DualState.zeros(1), np.array([0.0]), 1.0, cfg, SolverParams(dual_step=0.1))
        assert d.lambda1[0] == pytest.approx(0.1 * np.log(2))

    def test_lambda1_decays_to_zero(self):
        cfg = SystemConfig(n_tx=2, n_users=2, bandwidth_hz=2.0, min_rate_bps=(0.5, 0.5))
        params = SolverParams()
        d = DualState.constant(2, 0.04, 0.06, 0.0)
        history = [d.lambda1.copy()]
        for _ in range(100):
            d = dual_update(d, cfg.min_rate_nats + 0.1, cfg.power_budget, cfg, params)
            history.append(d.lambda1.copy())
        history = np.array(history)
        assert np.all(np.diff(history, axis=0) <= 0)
        assert np.all(history[-1] == 0)
        assert np.all(d.lambda2 == 0)

    def test_lambda2_disabled(self):
        cfg = SystemConfig(n_tx=2, n_users=1)
        d = dual_update(DualState.constant(1, 0.0, 0.5, 0.0), np.array([0.0]), 1.0, cfg,
                        SolverParams(enable_lambda2=False))
        assert d.lambda2[0] == 0.0

    def test_frozen(self):
        cfg = SystemConfig(n_tx=2, n_users=1)
        d0 = DualState.constant(1, 0.3, 0.2, 0.1)
        assert dual_update(d0, np.array([0.0]), 1e6, cfg, SolverParams(freeze_duals=True)) is d0


def single_user_case(seed):
    cfg = SystemConfig(n_tx=4, n_users=1, power_budget=1.0, noise_variance=1.0, min_rate_bps=(0.0,))
    return cfg, model.generate_channel(cfg, seed)


class TestSolve:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_single_user_reaches_mrt_rate(self, seed):
        cfg, h = single_user_case(seed)
        res = solve(h, np.ones((4, 1)), cfg, SolverParams(), seed)
        _, optimum = oracle.single_user_optimum(h[:, 0], 1.0, 1.0)
        assert abs(res.trace.rates[-1, 0] - optimum) / optimum < 0.01
        assert res.iterations <= 3000

    def test_reliable_array_ignores_sparsity_weight(self):
        cfg, h = SMALL, model.generate_channel(SMALL, 5)
        params = SolverParams(max_iters=400)
        a = solve(h, np.ones((4, 2)), cfg, params, 5, sparsity_weight=0.0)
        b = solve(h, np.ones((4, 2)), cfg, params, 5, sparsity_weight=1e6)
        np.testing.assert_array_equal(a.w_final, b.w_final)
        np.testing.assert_array_equal(a.trace.objective, b.trace.objective)
        np.testing.assert_array_equal(a.trace.mu, b.trace.mu)

    def test_deterministic(self):
        h = model.generate_channel(SMALL, 2)
        beta = model.generate_reliability(SMALL, 2)
        a = solve(h, beta, SMALL, SolverParams(max_iters=300), 2, 1.0)
        b = solve(h, beta, SMALL, SolverParams(max_iters=300), 2, 1.0)
        np.testing.assert_array_equal(a.w_final, b.w_final)
        for name in ("objective", "power", "lambda1", "lambda2", "mu", "eta", "primal_change"):
            np.testing.assert_array_equal(getattr(a.trace, name), getattr(b.trace, name))

    def test_duals_nonnegative_and_eta_bounded(self):
        h = model.generate_channel(SMALL, 6)
        beta = model.generate_reliability(SMALL, 6)
        res = solve(h, beta, SMALL.replace(min_rate_bps=(5e5, 5e5)), SolverParams(max_iters=500), 6, 0.5)
        t = res.trace
        assert np.all(t.lambda1 >= 0) and np.all(t.lambda2 >= 0) and np.all(t.mu >= 0)
        assert np.all(t.eta <= SolverParams().eta_x_init)
        assert len(t) == res.iterations

    def test_monotone_sum_rate_with_frozen_duals(self):
        h = model.generate_channel(SMALL, 7)
        params = SolverParams(max_iters=300, lambda1_init=0, lambda2_init=0, mu_init=0,
                              freeze_duals=True)
        res = solve(h, np.zeros((4, 2)), SMALL, params, 7, sparsity_weight=0.0)
        total = res.trace.rates.sum(axis=1)
        assert np.all(np.diff(total) >= -1e-12 * np.abs(total[1:]))

    def test_converged_run_is_prox_fixed_point(self):
        cfg, h = single_user_case(0)
        res = solve(h, np.ones((4, 1)), cfg, SolverParams(), 0)
        assert res.converged
        assert res.trace.primal_change[-1] < 1e-12
        assert prox_fixed_point_residual(res, h, np.ones((4, 1)), cfg, 0.0) < 1e-11

    def test_dead_antenna_row_switched_off(self):
        cfg = SystemConfig(n_tx=16, n_users=2)
        beta = np.ones((16, 2))
        beta[3] = 0.0
        h = model.generate_channel(cfg, 1)
        res = solve(h, beta, cfg, SolverParams(max_iters=300), 1, sparsity_weight=3.334)
        assert np.all(res.w_final[3] == 0)
        others = np.delete(res.w_final, 3, axis=0)
        assert np.all(others != 0)

    def test_snapshots_and_trace_agree(self):
        h = model.generate_channel(SMALL, 8)
        beta = model.generate_reliability(SMALL, 8)
        res = solve(h, beta, SMALL, SolverParams(max_iters=250, snapshot_every=100), 8, 0.3)
        assert sorted(res.trace.snapshots) == [0, 100, 200, 249]
        np.testing.assert_array_equal(res.trace.snapshots[249], res.w_final)
        for k, w in res.trace.snapshots.items():
            assert res.trace.power[k] == pytest.approx(objective.power(w), rel=1e-14)

    def test_bad_shapes(self):
        with pytest.raises(ValueError):
            solve(np.zeros((3, 2), complex), np.ones((4, 2)), SMALL, SolverParams(), 0)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            SolverParams(backtrack_shrink=1.0)
        with pytest.raises(ValueError):
            SolverParams(eta_x_init=0)

    @pytest.mark.slow
    def test_full_scale_high_gamma(self, default_config):
        h = model.generate_channel(default_config, 0)
        beta = model.generate_reliability(default_config, 0)
        res = solve(h, beta, default_config, SolverParams(), 0, sparsity_weight=333.4)
        assert beamforming_density(res.w_final) < 100.0
        assert objective.power(res.w_final) <= 2000.0 * (1 + 1e-3)
