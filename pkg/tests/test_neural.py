import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qaoa_rl.agent.neural import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    AdamState,
    GaussianPolicy,
    MlpParams,
    adam_step,
    clamp_log_std,
    from_checkpoint,
    gaussian_log_prob,
    gaussian_sample,
    load_checkpoint,
    log_prob_gradients,
    make_policy,
    make_value,
    mlp_forward,
    mlp_gradients,
    mlp_init,
    policy_mean,
    save_checkpoint,
    to_checkpoint,
    value_predict,
)
from qaoa_rl.errors import CheckpointError, InvalidInputError


def zeroed(params: MlpParams) -> MlpParams:
    return MlpParams.from_arrays([np.zeros_like(a) for a in params.arrays()])


def test_init_is_seeded():
    a = mlp_init((2, 32, 16, 2), seed=3)
    b = mlp_init((2, 32, 16, 2), seed=3)
    c = mlp_init((2, 32, 16, 2), seed=4)
    for x, y in zip(a.arrays(), b.arrays()):
        assert np.array_equal(x, y)
    assert not np.array_equal(a.weights[0], c.weights[0])
    assert a.sizes == (2, 32, 16, 2)
    assert all(np.all(bias == 0.0) for bias in a.biases)


def test_zero_parameters_give_zero_output():
    net = zeroed(mlp_init((2, 8, 2), seed=0))
    assert_allclose(mlp_forward(net, np.array([0.3, -1.0])), [0.0, 0.0])
    assert mlp_forward(net, np.ones((5, 2))).shape == (5, 2)


def test_forward_rejects_wrong_input_size():
    with pytest.raises(InvalidInputError):
        mlp_forward(mlp_init((2, 4, 1), seed=0), np.ones(3))


def test_gradients_match_central_differences():
    rng = np.random.default_rng(7)
    params = mlp_init((3, 5, 4, 2), seed=11)
    params.biases = [rng.normal(scale=0.3, size=b.shape) for b in params.biases]
    x = rng.normal(size=(7, 3))
    upstream = rng.normal(size=(7, 2))
    analytic = mlp_gradients(params, x, upstream).arrays()

    def loss(arrays):
        return float(np.sum(upstream * mlp_forward(MlpParams.from_arrays(arrays), x)))

    h = 1e-6
    base = params.arrays()
    for k, array in enumerate(base):
        numeric = np.zeros_like(array)
        for idx in np.ndindex(array.shape):
            plus = [a.copy() for a in base]
            minus = [a.copy() for a in base]
            plus[k][idx] += h
            minus[k][idx] -= h
            numeric[idx] = (loss(plus) - loss(minus)) / (2 * h)
        scale = max(np.max(np.abs(numeric)), 1e-8)
        assert np.max(np.abs(analytic[k] - numeric)) / scale <= 1e-5


def test_log_prob_of_unit_gaussian():
    policy = make_policy(2, 2, (4,), seed=0, init_log_std=0.0)
    policy = GaussianPolicy(mean_net=zeroed(policy.mean_net), log_std=np.zeros(2))
    logp = gaussian_log_prob(policy, np.zeros((1, 2)), np.array([[1.0, 0.0]]))
    assert logp[0] == pytest.approx(-0.5 - math.log(2 * math.pi))


def test_log_prob_gradient_of_log_std(rng):
    policy = make_policy(2, 2, (4,), seed=1, init_log_std=-0.5)
    obs = rng.normal(size=(6, 2))
    actions = rng.normal(size=(6, 2))
    upstream = rng.normal(size=6)
    grads = log_prob_gradients(policy, obs, actions, upstream)
    h = 1e-6
    for i in range(2):
        up = GaussianPolicy(mean_net=policy.mean_net, log_std=policy.log_std.copy())
        down = GaussianPolicy(mean_net=policy.mean_net, log_std=policy.log_std.copy())
        up.log_std[i] += h
        down.log_std[i] -= h
        numeric = (
            np.sum(upstream * gaussian_log_prob(up, obs, actions))
            - np.sum(upstream * gaussian_log_prob(down, obs, actions))
        ) / (2 * h)
        assert grads.log_std[i] == pytest.approx(numeric, rel=1e-6)


def test_log_density_is_normalized():
    policy = make_policy(2, 2, (8,), seed=4)
    policy.log_std = np.array([-0.5, 0.2])
    x = np.array([0.3, -0.7])
    mean = policy_mean(policy, x)
    sigma = np.exp(policy.log_std)
    axes = [np.linspace(m - 10 * s, m + 10 * s, 401) for m, s in zip(mean, sigma)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)
    density = np.exp(gaussian_log_prob(policy, np.tile(x, (len(grid), 1)), grid))
    cell = (axes[0][1] - axes[0][0]) * (axes[1][1] - axes[1][0])
    assert density.sum() * cell == pytest.approx(1.0, rel=1e-6)


def test_sample_mean_matches_policy_mean():
    policy = make_policy(2, 2, (8,), seed=4)
    x = np.array([0.3, -0.7])
    rng = np.random.default_rng(9)
    samples = np.array([gaussian_sample(policy, x, rng)[0] for _ in range(4000)])
    stderr = np.exp(policy.log_std) / math.sqrt(len(samples))
    assert np.all(np.abs(samples.mean(axis=0) - policy_mean(policy, x)) < 5 * stderr)


def test_sample_is_reproducible():
    policy = make_policy(2, 2, (8,), seed=0)
    a1, lp1 = gaussian_sample(policy, np.array([0.0, -1.0]), np.random.default_rng(5))
    a2, lp2 = gaussian_sample(policy, np.array([0.0, -1.0]), np.random.default_rng(5))
    assert np.array_equal(a1, a2)
    assert lp1 == lp2


def test_clamp_log_std():
    policy = make_policy(2, 2, (4,), seed=0)
    policy.log_std = np.array([-9.0, 3.0])
    assert_allclose(clamp_log_std(policy).log_std, [LOG_STD_MIN, LOG_STD_MAX])


def test_adam_first_step():
    moments = AdamState.zeros_like([np.zeros(3)])
    (updated,) = adam_step([np.zeros(3)], [np.array([1.0, -2.0, 0.0])], moments, lr=1e-3, t=1)
    assert_allclose(updated, [-1e-3, 1e-3, 0.0], atol=1e-10)
    assert moments.t == 1


def test_adam_zero_gradient_keeps_parameters():
    params = [np.array([0.5, -0.25])]
    moments = AdamState.zeros_like(params)
    for t in range(1, 4):
        params = adam_step(params, [np.zeros(2)], moments, lr=1e-2, t=t)
    assert_allclose(params[0], [0.5, -0.25])
    with pytest.raises(InvalidInputError):
        adam_step(params, [np.zeros(2)], moments, lr=1e-2, t=0)


def test_adam_step_size_is_bounded_by_learning_rate():
    params = [np.array([0.0, 1.0, -2.0])]
    grad = [np.array([3.0, -0.01, 1e3])]
    moments = AdamState.zeros_like(params)
    lr = 1e-2
    for t in range(1, 201):
        updated = adam_step(params, grad, moments, lr=lr, t=t)
        assert np.max(np.abs(updated[0] - params[0])) <= lr * (1 + 1e-9)
        params = updated


def test_value_head_shape():
    value = make_value(2, (8, 4), seed=0)
    assert value_predict(value, np.zeros((3, 2))).shape == (3,)
    assert np.ndim(value_predict(value, np.zeros(2))) == 0


def test_checkpoint_round_trip(tmp_path):
    policy = make_policy(2, 2, (32, 16), seed=0)
    value = make_value(2, (32, 16), seed=1)
    path = save_checkpoint(to_checkpoint(policy, value, "intensive", {"p": 3}), tmp_path / "ckpt.json")
    ckpt = load_checkpoint(path)
    assert ckpt.arch == [2, 32, 16, 2]
    assert ckpt.meta == {"p": 3}
    restored, restored_value = from_checkpoint(ckpt)
    for a, b in zip(policy.arrays() + value.net.arrays(), restored.arrays() + restored_value.net.arrays()):
        assert np.array_equal(a, b)


def test_checkpoint_errors(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)
    ckpt = to_checkpoint(make_policy(2, 2, (4,), seed=0), make_value(2, (4,), seed=0), "intensive")
    with pytest.raises(CheckpointError):
        from_checkpoint(ckpt.model_copy(update={"arch": [3, 4, 2]}))
    with pytest.raises(CheckpointError):
        from_checkpoint(ckpt.model_copy(update={"log_std": [0.0]}))
