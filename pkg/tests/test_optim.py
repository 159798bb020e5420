import numpy as np
import pytest

from schwarzpinn.optim import AdamState, adam_init, adam_step, lr_schedule


class TestLrSchedule:
    def test_epoch_zero(self):
        assert lr_schedule(0.01, 0.9, 0) == 0.01

    def test_two_epochs(self):
        assert lr_schedule(0.01, 0.9, 2) == pytest.approx(0.0081, abs=1e-15)

    def test_no_decay_identity(self):
        for k in (0, 1, 5, 100):
            assert lr_schedule(0.01, 1.0, k) == 0.01


class TestAdamStep:
    def test_first_step_hand_case(self):
        # unit gradient, zero init: bias correction gives a step of ~lr
        state = adam_init(1, lr0=0.01, lr_decay=1.0)
        params = np.zeros(1)
        adam_step(state, params, np.ones(1))
        expected = -0.01 * 1.0 / (1.0 + 1e-8)
        assert params[0] == pytest.approx(expected, abs=1e-12)
        assert params[0] == pytest.approx(-0.0099999999, abs=1e-10)
        assert state.step == 1

    def test_zero_gradient_fixed_point(self):
        state = adam_init(3, lr0=0.01)
        params = np.array([1.0, -2.0, 0.5])
        before = params.copy()
        adam_step(state, params, np.zeros(3))
        assert np.array_equal(params, before)

    def test_first_step_bounded_by_lr(self, rng=np.random.default_rng(0)):
        for _ in range(20):
            state = adam_init(4, lr0=0.01, lr_decay=1.0)
            params = np.zeros(4)
            adam_step(state, params, rng.normal(size=4) * 10.0 ** rng.integers(-3, 4))
            assert np.all(np.abs(params) <= 0.01 + 1e-12)

    def test_sign_equivariance_on_first_step(self):
        g = np.array([0.3, -2.0, 5.0])
        s1, s2 = adam_init(3), adam_init(3)
        p1, p2 = np.zeros(3), np.zeros(3)
        adam_step(s1, p1, g)
        adam_step(s2, p2, -g)
        assert np.allclose(p1, -p2, atol=1e-15)

    def test_quadratic_minimization(self):
        # drive f(theta) = |theta|^2 from (1, 1) to near zero in 500 steps
        state = adam_init(2, lr0=0.01, lr_decay=1.0)
        params = np.array([1.0, 1.0])
        for _ in range(500):
            adam_step(state, params, 2.0 * params)
        assert np.linalg.norm(params) <= 1e-3

    def test_rejects_non_finite_gradient(self):
        state = adam_init(2)
        with pytest.raises(FloatingPointError):
            adam_step(state, np.zeros(2), np.array([1.0, np.nan]))

    def test_rejects_wrong_length(self):
        state = adam_init(2)
        with pytest.raises(ValueError):
            adam_step(state, np.zeros(2), np.zeros(3))

    def test_decay_applied_per_epoch(self):
        s1, s2 = adam_init(1, lr0=0.01, lr_decay=0.5), adam_init(1, lr0=0.01, lr_decay=0.5)
        p1, p2 = np.zeros(1), np.zeros(1)
        adam_step(s1, p1, np.ones(1), epoch=0)
        adam_step(s2, p2, np.ones(1), epoch=1)
        assert p2[0] == pytest.approx(0.5 * p1[0], rel=1e-12)


class TestStateSerialization:
    def test_round_trip_bit_exact(self):
        state = adam_init(5, lr0=0.003, lr_decay=0.97)
        params = np.ones(5)
        rng = np.random.default_rng(1)
        for _ in range(7):
            adam_step(state, params, rng.normal(size=5))
        restored = AdamState.from_dict(state.to_dict())
        assert np.array_equal(restored.m, state.m)
        assert np.array_equal(restored.v, state.v)
        assert restored.step == state.step
        assert restored.lr0 == state.lr0

        # identical future trajectories
        p2 = params.copy()
        g = rng.normal(size=5)
        adam_step(state, params, g.copy())
        adam_step(restored, p2, g.copy())
        assert np.array_equal(params, p2)

    def test_reset(self):
        state = adam_init(2)
        adam_step(state, np.zeros(2), np.ones(2))
        state.reset()
        assert state.step == 0
        assert np.all(state.m == 0.0) and np.all(state.v == 0.0)
