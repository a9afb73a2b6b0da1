import numpy as np
import pytest

from dronewatch.nets import (
    AdamState,
    Checkpoint,
    LrSchedule,
    Mlp,
    adam_update,
    backward,
    clip_grad_norm,
    forward,
    load_checkpoint,
    make_mlp,
    orthogonal,
    save_checkpoint,
)
from dronewatch.schemas import SchemaError


def naive_forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Independent straight-line reimplementation of the same arithmetic."""
    a = x.copy()
    n_layers = len(net.weights)
    for i in range(n_layers):
        z = np.zeros(net.sizes[i + 1])
        for j in range(net.sizes[i + 1]):
            acc = net.biases[i][j]
            for k in range(net.sizes[i]):
                acc += a[k] * net.weights[i][k, j]
            z[j] = acc
        a = np.tanh(z) if i < n_layers - 1 else z
    return a


def loss_for_fd(net: Mlp, x: np.ndarray, upstream: np.ndarray) -> float:
    return float(np.dot(upstream, forward(net, x)))


def fd_gradients(net: Mlp, x: np.ndarray, upstream: np.ndarray, h: float = 1e-5):
    grads = []
    for p in net.params():
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_for_fd(net, x, upstream)
            flat[i] = orig - h
            down = loss_for_fd(net, x, upstream)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        grads.append(g)
    return grads


class TestForward:
    def test_zero_network_outputs_zero(self):
        net = make_mlp(5, 3, np.random.default_rng(0))
        for w in net.weights:
            w[:] = 0.0
        assert np.array_equal(forward(net, np.ones(5)), np.zeros(3))

    def test_zero_input_zero_hidden(self):
        # tanh(0) = 0, so with zero biases the output is the last layer bias.
        net = make_mlp(4, 2, np.random.default_rng(1))
        net.biases[-1][:] = 7.0
        assert np.allclose(forward(net, np.zeros(4)), 7.0)

    def test_matches_straight_line_oracle(self):
        rng = np.random.default_rng(2)
        net = make_mlp(6, 4, rng)
        for _ in range(5):
            x = rng.standard_normal(6)
            assert np.allclose(forward(net, x), naive_forward(net, x), atol=1e-12)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(3)
        net = make_mlp(8, 3, rng)
        xs = rng.standard_normal((10, 8))
        batch = forward(net, xs)
        for i, x in enumerate(xs):
            assert np.allclose(batch[i], forward(net, x), atol=1e-14)

    def test_dimension_mismatch_rejected(self):
        net = make_mlp(5, 2, np.random.default_rng(0))
        with pytest.raises(ValueError, match="width"):
            forward(net, np.zeros(6))


class TestBackward:
    def test_linear_outer_product(self):
        # Single linear layer: gradient of u.(Wx+b) w.r.t. W is x u^T.
        rng = np.random.default_rng(4)
        net = make_mlp(5, 3, rng, hidden=())
        x = rng.standard_normal(5)
        u = rng.standard_normal(3)
        grads, dx = backward(net, x, u)
        assert np.allclose(grads[0], np.outer(x, u), atol=1e-12)
        assert np.allclose(grads[1], u, atol=1e-12)
        assert np.allclose(dx, net.weights[0] @ u, atol=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        net = make_mlp(4, 3, rng, hidden=(8, 8))
        x = rng.standard_normal(4)
        u = rng.standard_normal(3)
        analytic, _ = backward(net, x, u)
        numeric = fd_gradients(net, x, u)
        for a, n in zip(analytic, numeric):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
            assert np.max(np.abs(a - n) / denom) < 1e-4

    def test_zero_upstream_zero_gradients(self):
        rng = np.random.default_rng(6)
        net = make_mlp(4, 2, rng)
        grads, dx = backward(net, rng.standard_normal(4), np.zeros(2))
        assert all(np.all(g == 0) for g in grads)
        assert np.all(dx == 0)


class TestAdam:
    def test_first_step_hand_computed(self):
        # One scalar parameter: m-hat = v-hat = g, step = lr/(1 + eps).
        p = [np.array([1.0])]
        g = [np.array([1.0])]
        state = AdamState.for_params(p)
        adam_update(p, g, state, lr=3e-4)
        expected = 1.0 - 3e-4 / (1.0 + 1e-8)
        assert p[0][0] == pytest.approx(expected, abs=1e-15)
        assert state.t == 1

    def test_zero_gradients_leave_params_unchanged(self):
        rng = np.random.default_rng(7)
        net = make_mlp(4, 2, rng)
        before = [p.copy() for p in net.params()]
        state = AdamState.for_params(net.params())
        for _ in range(50):
            adam_update(net.params(), [np.zeros_like(p) for p in net.params()], state, 1e-3)
        for b, a in zip(before, net.params()):
            assert np.array_equal(b, a)

    def test_replicas_identical_after_100_steps(self):
        rng = np.random.default_rng(8)
        nets = [make_mlp(4, 2, np.random.default_rng(8)) for _ in range(2)]
        states = [AdamState.for_params(n.params()) for n in nets]
        for step in range(100):
            grads = [rng.standard_normal(p.shape) for p in nets[0].params()]
            for net, st in zip(nets, states):
                adam_update(net.params(), [g.copy() for g in grads], st, 3e-4)
        for a, b in zip(nets[0].params(), nets[1].params()):
            assert np.array_equal(a, b)

    def test_nonfinite_gradient_rejected_with_index(self):
        p = [np.array([1.0]), np.array([2.0])]
        g = [np.array([0.1]), np.array([np.nan])]
        state = AdamState.for_params(p)
        with pytest.raises(ValueError, match="parameter 1"):
            adam_update(p, g, state, 1e-3)

    def test_step_bounded_for_constant_gradients(self):
        # With a constant gradient sign and magnitude, |update| <= lr.
        rng = np.random.default_rng(9)
        p = [rng.standard_normal(20)]
        g = [rng.standard_normal(20)]
        state = AdamState.for_params(p)
        lr = 3e-4
        for _ in range(200):
            before = p[0].copy()
            adam_update(p, [g[0].copy()], state, lr)
            assert np.max(np.abs(p[0] - before)) <= lr * (1 + 1e-6)


class TestLrSchedule:
    def test_initial_value(self):
        assert LrSchedule(3e-4, 100).lr_at(0) == pytest.approx(3e-4)

    def test_midpoint(self):
        assert LrSchedule(3e-4, 100).lr_at(50) == pytest.approx(1.5e-4)

    def test_clamps_to_zero(self):
        sched = LrSchedule(3e-4, 100)
        assert sched.lr_at(100) == 0.0
        assert sched.lr_at(250) == 0.0


class TestInit:
    def test_orthogonal_columns(self):
        rng = np.random.default_rng(10)
        w = orthogonal(rng, 64, 32, gain=1.0)
        assert np.allclose(w.T @ w, np.eye(32), atol=1e-10)

    def test_seeded_init_is_reproducible(self):
        a = make_mlp(96, 32, np.random.default_rng(42), out_gain=0.01)
        b = make_mlp(96, 32, np.random.default_rng(42), out_gain=0.01)
        for pa, pb in zip(a.params(), b.params()):
            assert np.array_equal(pa, pb)

    def test_parameter_count(self):
        net = make_mlp(96, 32, np.random.default_rng(0))
        expected = 96 * 64 + 64 + 64 * 64 + 64 + 64 * 32 + 32
        assert net.n_params == expected


class TestClipGradNorm:
    def test_scales_down_to_max_norm(self):
        grads = [np.full(4, 3.0)]
        norm = clip_grad_norm(grads, 0.5)
        assert norm == pytest.approx(6.0)
        assert np.linalg.norm(grads[0]) == pytest.approx(0.5, rel=1e-9)

    def test_leaves_small_gradients_alone(self):
        grads = [np.full(4, 0.01)]
        clip_grad_norm(grads, 0.5)
        assert np.allclose(grads[0], 0.01)


class TestCheckpoint:
    def _checkpoint(self):
        rng = np.random.default_rng(11)
        policy = make_mlp(96, 32, rng, out_gain=0.01)
        value = make_mlp(96, 1, rng)
        return Checkpoint(
            policy=policy,
            value=value,
            adam_policy=AdamState.for_params(policy.params()),
            adam_value=AdamState.for_params(value.params()),
            updates_done=3,
            samples_done=1000,
            config={"ppo": {"seed": 1}},
        )

    def test_round_trip_bit_exact(self, tmp_path):
        ckpt = self._checkpoint()
        path = tmp_path / "ckpt.json"
        save_checkpoint(ckpt, path)
        loaded = load_checkpoint(path)
        for a, b in zip(ckpt.policy.params(), loaded.policy.params()):
            assert np.array_equal(a, b)
        assert loaded.updates_done == 3
        assert loaded.samples_done == 1000
        assert loaded.config == ckpt.config

    def test_tampered_config_hash_rejected(self, tmp_path):
        import json

        ckpt = self._checkpoint()
        path = tmp_path / "ckpt.json"
        save_checkpoint(ckpt, path)
        doc = json.loads(path.read_text())
        doc["config"]["ppo"]["seed"] = 999
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError, match="hash"):
            load_checkpoint(path)
