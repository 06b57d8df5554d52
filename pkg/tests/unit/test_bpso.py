"""Unit tests for the binary particle swarm optimizer."""

import numpy as np
import pytest
from scipy.special import expit

from pipeline.bench.synthetic import onemax
from services.data.schema import BitMask
from services.optimizers.bpso import PsoConfig, Swarm, init_swarm, pso_run, pso_step
from services.shared.errors import EvaluationError


def _converged_swarm(particles: int, length: int, velocity: float) -> Swarm:
    """Every particle sits on the all-ones gbest with the given velocity in every bit."""
    ones = np.ones((particles, length), dtype=bool)
    fitness = np.ones(particles)
    return Swarm(
        positions=ones,
        velocities=np.full((particles, length), velocity),
        fitness=fitness,
        pbest_positions=ones.copy(),
        pbest_fitness=fitness.copy(),
        gbest_position=ones[0].copy(),
        gbest_fitness=1.0,
    )


class TestPsoStep:
    """Tests for pso_step."""

    def test_zero_velocity_at_gbest_stays_zero(self) -> None:
        """Should keep zero velocities and resample bits with probability 0.5."""
        swarm = _converged_swarm(100, 100, 0.0)

        nxt = pso_step(swarm, PsoConfig(particles=100), onemax, np.random.default_rng(0))

        assert (nxt.velocities == 0.0).all()
        assert abs(nxt.positions.mean() - 0.5) < 0.03

    def test_clamped_velocity_sets_bits_with_sigmoid_six(self) -> None:
        """v = +v_max = 6 should give P(bit = 1) = sigmoid(6), about 0.9975."""
        cfg = PsoConfig(particles=100, w=1.0)
        swarm = _converged_swarm(100, 100, cfg.v_max)

        nxt = pso_step(swarm, cfg, onemax, np.random.default_rng(1))

        assert (nxt.velocities == cfg.v_max).all()
        assert expit(6.0) == pytest.approx(0.9975, abs=1e-4)
        assert nxt.positions.mean() > 0.99

    def test_velocity_clamped(self) -> None:
        rng = np.random.default_rng(2)
        cfg = PsoConfig(particles=10, w=5.0, v_max=2.0)
        swarm = init_swarm(cfg, 12, onemax, rng)

        nxt = pso_step(swarm, cfg, onemax, rng)

        assert np.abs(nxt.velocities).max() <= 2.0

    def test_ties_keep_personal_best(self) -> None:
        """Should only replace pbest on strict improvement."""
        rng = np.random.default_rng(3)
        cfg = PsoConfig(particles=8)
        swarm = init_swarm(cfg, 30, lambda g: 0.5, rng)

        nxt = pso_step(swarm, cfg, lambda g: 0.5, rng)

        np.testing.assert_array_equal(nxt.pbest_positions, swarm.pbest_positions)
        np.testing.assert_array_equal(nxt.gbest_position, swarm.gbest_position)

    def test_gbest_is_best_pbest(self) -> None:
        rng = np.random.default_rng(4)
        cfg = PsoConfig(particles=12)
        swarm = init_swarm(cfg, 15, onemax, rng)
        for _ in range(5):
            swarm = pso_step(swarm, cfg, onemax, rng)

        assert swarm.gbest_fitness == swarm.pbest_fitness.max()
        assert swarm.iteration == 5


class TestPsoRun:
    """Tests for pso_run."""

    @pytest.mark.parametrize("seed", range(10))
    def test_onemax_converges(self, seed: int) -> None:
        """Should find all-ones for L=20 with 50 particles within 100 iterations."""
        cfg = PsoConfig(particles=50, t_max=100, no_change_limit=100, seed=seed)

        best, report = pso_run(cfg, 20, onemax)

        assert best.all()
        assert report.best_fitness == 1.0

    def test_t_max_zero_returns_initial_gbest(self) -> None:
        cfg = PsoConfig(particles=10, t_max=0, seed=6)
        initial = init_swarm(cfg, 8, onemax, np.random.default_rng(6))

        best, report = pso_run(cfg, 8, onemax)

        assert len(report.records) == 1
        np.testing.assert_array_equal(best, initial.gbest_position)

    def test_constant_fitness_stops_after_no_change_limit(self) -> None:
        cfg = PsoConfig(particles=6, t_max=100, no_change_limit=4, seed=0)

        _, report = pso_run(cfg, 10, lambda g: 0.5)

        assert len(report.records) == 5

    def test_deterministic(self) -> None:
        """Should produce identical gbest trajectories for identical seeds."""
        cfg = PsoConfig(particles=10, t_max=15, seed=21)

        _, a = pso_run(cfg, 18, onemax)
        _, b = pso_run(cfg, 18, onemax)

        assert a.trajectory() == b.trajectory()
        assert a.best_mask == b.best_mask

    def test_failure_carries_partial_report(self) -> None:
        calls = {"n": 0}

        def flaky(g: BitMask) -> float:
            calls["n"] += 1
            if calls["n"] > 15:
                raise ValueError("bad subset")
            return onemax(g)

        with pytest.raises(EvaluationError) as exc_info:
            pso_run(PsoConfig(particles=10, t_max=10, seed=0), 12, flaky)

        assert isinstance(exc_info.value.__cause__, ValueError)
        assert len(exc_info.value.partial_report.records) == 1
