import numpy as np
import pytest

from graphit import autodiff as ad
from graphit.optim import Adam, GradientError, halving_lr, warmup_lr


def params_with_grads(grads: dict):
    params = {}
    for name, g in grads.items():
        t = ad.parameter(np.zeros_like(np.asarray(g, dtype=float)), name)
        t.grad = np.asarray(g, dtype=float)
        params[name] = t
    return params


class TestAdam:
    def test_zero_grad_zero_decay_no_change(self):
        params = params_with_grads({"w": np.zeros(3)})
        before = params["w"].value.copy()
        Adam(params, lr=0.1).step()
        assert np.array_equal(params["w"].value, before)

    def test_first_step_magnitude_near_lr(self):
        g = np.array([0.3, -2.0, 10.0])
        params = params_with_grads({"w": g})
        Adam(params, lr=1e-3).step()
        update = -params["w"].value
        # first step: m_hat = g, v_hat = g^2, so step = lr * g/(|g| + eps)
        assert np.allclose(np.abs(update), 1e-3, rtol=1e-4)
        assert np.array_equal(np.sign(-update), np.sign(-g))

    def test_identical_grads_identical_updates(self):
        g = np.array([1.7, -0.4])
        params = params_with_grads({"a": g, "b": g})
        Adam(params, lr=0.01, weight_decay=0.1).step()
        assert np.array_equal(params["a"].value, params["b"].value)

    def test_gradient_scale_invariance_of_direction(self):
        g = np.array([0.5, -1.5, 2.0])
        updates = []
        for c in (1.0, 7.3):
            params = params_with_grads({"w": c * g})
            Adam(params, lr=1e-3).step()
            updates.append(-params["w"].value)
        assert np.allclose(updates[0], updates[1], atol=1e-9)

    def test_weight_decay_pulls_toward_zero(self):
        t = ad.parameter(np.array([10.0]), "w")
        t.grad = np.zeros(1)
        Adam({"w": t}, lr=0.1, weight_decay=0.01).step()
        assert t.value[0] < 10.0

    def test_non_finite_gradient_names_parameter(self):
        params = params_with_grads({"w": np.array([np.nan])})
        with pytest.raises(GradientError, match="'w'"):
            Adam(params, lr=0.1).step()

    def test_state_round_trip(self):
        params = params_with_grads({"w": np.array([1.0, 2.0])})
        opt = Adam(params, lr=0.1)
        opt.step()
        state = opt.state()
        other = Adam(params, lr=0.1)
        other.load_state(state)
        assert other.step_count == 1
        assert np.array_equal(other.m["w"], opt.m["w"])
        assert np.array_equal(other.v["w"], opt.v["w"])


class TestSchedules:
    def test_halving_breakpoints(self):
        base = 1e-3
        assert halving_lr(base, 0) == base
        assert halving_lr(base, 49) == base
        assert halving_lr(base, 50) == base / 2
        assert halving_lr(base, 100) == base / 4
        assert halving_lr(base, 299) == base / 32

    def test_warmup_peak_at_warmup_step(self):
        assert abs(warmup_lr(1e-3, 2000, 2000) - 1e-3) < 1e-15

    def test_warmup_linear_ramp(self):
        assert abs(warmup_lr(1e-3, 500, 2000) - 0.25e-3) < 1e-12

    def test_warmup_step_zero(self):
        assert warmup_lr(1e-3, 0) == 0.0

    def test_warmup_decays_after_peak(self):
        peak = warmup_lr(1e-3, 2000, 2000)
        later = warmup_lr(1e-3, 8000, 2000)
        assert later < peak
        assert abs(later - 1e-3 * np.sqrt(2000 / 8000)) < 1e-12

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            halving_lr(1e-3, -1)
        with pytest.raises(ValueError):
            warmup_lr(1e-3, -5)
