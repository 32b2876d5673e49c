# qaoa_rl/agent/neural.py
"""Small dense networks with hand-written backpropagation, the Gaussian policy
head, the value head, Adam and the JSON checkpoint format."""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from qaoa_rl.errors import CheckpointError, InvalidInputError
from qaoa_rl.types import ACTION_HIGH, ACTION_LOW, LayerWeights, ObsMode, PolicyCheckpoint

logger = logging.getLogger(__name__)

LOG_STD_MIN = -5.0
LOG_STD_MAX = 1.0
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class MlpParams:
    """Weights stored as (fan_in, fan_out); hidden layers ReLU, output linear."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]

    @property
    def sizes(self) -> Tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    def arrays(self) -> List[np.ndarray]:
        return list(self.weights) + list(self.biases)

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray]) -> "MlpParams":
        half = len(arrays) // 2
        return cls(weights=list(arrays[:half]), biases=list(arrays[half:]))

    def copy(self) -> "MlpParams":
        return MlpParams.from_arrays([a.copy() for a in self.arrays()])


@dataclass
class GaussianPolicy:
    mean_net: MlpParams
    log_std: np.ndarray

    def arrays(self) -> List[np.ndarray]:
        return self.mean_net.arrays() + [self.log_std]

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray]) -> "GaussianPolicy":
        return cls(mean_net=MlpParams.from_arrays(arrays[:-1]), log_std=arrays[-1])


@dataclass
class ValueNet:
    net: MlpParams


@dataclass
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, arrays: Sequence[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(a) for a in arrays], v=[np.zeros_like(a) for a in arrays])


def mlp_init(sizes: Sequence[int], seed: int) -> MlpParams:
    """He-scaled normal weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) * math.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights=weights, biases=biases)


def _as_batch(params: MlpParams, x: np.ndarray) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != params.sizes[0]:
        raise InvalidInputError(f"Network expects inputs of size {params.sizes[0]}, got shape {x.shape}")
    return batch, single


def _forward_with_cache(params: MlpParams, batch: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray], List[np.ndarray]]:
    activations = [batch]
    pre_activations = []
    last = len(params.weights) - 1
    a = batch
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        pre_activations.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        activations.append(a)
    return a, activations, pre_activations


def mlp_forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    batch, single = _as_batch(params, x)
    y, _, _ = _forward_with_cache(params, batch)
    return y[0] if single else y


def mlp_gradients(params: MlpParams, x: np.ndarray, upstream: np.ndarray) -> MlpParams:
    """Gradients of sum(upstream * mlp_forward(params, x)) with respect to the parameters."""
    batch, single = _as_batch(params, x)
    delta = np.asarray(upstream, dtype=float)
    delta = delta[None, :] if single else delta
    if delta.shape != (batch.shape[0], params.sizes[-1]):
        raise InvalidInputError(f"Upstream gradient shape {delta.shape} does not match network output")
    _, activations, pre_activations = _forward_with_cache(params, batch)
    grad_w: List[np.ndarray] = [np.empty(0)] * len(params.weights)
    grad_b: List[np.ndarray] = [np.empty(0)] * len(params.weights)
    for i in range(len(params.weights) - 1, -1, -1):
        grad_w[i] = activations[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i].T) * (pre_activations[i - 1] > 0.0)
    return MlpParams(weights=grad_w, biases=grad_b)


def make_policy(obs_size: int, n_actions: int, hidden: Sequence[int], seed: int, init_log_std: float = -0.5) -> GaussianPolicy:
    net = mlp_init((obs_size, *hidden, n_actions), seed)
    return GaussianPolicy(mean_net=net, log_std=np.full(n_actions, float(init_log_std)))


def make_value(obs_size: int, hidden: Sequence[int], seed: int) -> ValueNet:
    return ValueNet(net=mlp_init((obs_size, *hidden, 1), seed))


def policy_mean(policy: GaussianPolicy, obs: np.ndarray) -> np.ndarray:
    return mlp_forward(policy.mean_net, obs)


def value_predict(value: ValueNet, obs: np.ndarray) -> np.ndarray:
    out = mlp_forward(value.net, obs)
    return out[..., 0]


def gaussian_log_prob(policy: GaussianPolicy, obs: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Diagonal-Gaussian log density of raw (unclipped) actions."""
    mean = policy_mean(policy, obs)
    z = (np.asarray(actions, dtype=float) - mean) * np.exp(-policy.log_std)
    return -0.5 * np.sum(z**2, axis=-1) - np.sum(policy.log_std) - 0.5 * policy.log_std.size * LOG_2PI


def gaussian_sample(policy: GaussianPolicy, obs: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, float]:
    mean = policy_mean(policy, obs)
    action = mean + np.exp(policy.log_std) * rng.standard_normal(mean.shape)
    return action, float(gaussian_log_prob(policy, obs, action))


def log_prob_gradients(
    policy: GaussianPolicy, obs: np.ndarray, actions: np.ndarray, upstream: np.ndarray
) -> GaussianPolicy:
    """Gradient of sum_i upstream_i * logp_i, packed in the policy's own layout."""
    mean = policy_mean(policy, obs)
    inv_var = np.exp(-2.0 * policy.log_std)
    diff = np.asarray(actions, dtype=float) - mean
    upstream = np.asarray(upstream, dtype=float)
    d_mean = upstream[:, None] * diff * inv_var
    d_log_std = np.sum(upstream[:, None] * (diff**2 * inv_var - 1.0), axis=0)
    return GaussianPolicy(mean_net=mlp_gradients(policy.mean_net, obs, d_mean), log_std=d_log_std)


def clamp_log_std(policy: GaussianPolicy) -> GaussianPolicy:
    return GaussianPolicy(mean_net=policy.mean_net, log_std=np.clip(policy.log_std, LOG_STD_MIN, LOG_STD_MAX))


def adam_step(
    params: Sequence[np.ndarray], grads: Sequence[np.ndarray], moments: AdamState, lr: float, t: int
) -> List[np.ndarray]:
    """One bias-corrected Adam step (descent on grads); updates ``moments`` in place."""
    if t < 1:
        raise InvalidInputError(f"Adam step counter starts at 1, got {t}")
    moments.t = t
    updated = []
    for i, (p, g) in enumerate(zip(params, grads)):
        moments.m[i] = ADAM_BETA1 * moments.m[i] + (1.0 - ADAM_BETA1) * g
        moments.v[i] = ADAM_BETA2 * moments.v[i] + (1.0 - ADAM_BETA2) * g * g
        m_hat = moments.m[i] / (1.0 - ADAM_BETA1**t)
        v_hat = moments.v[i] / (1.0 - ADAM_BETA2**t)
        updated.append(p - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS))
    return updated


def _layers_out(params: MlpParams) -> List[LayerWeights]:
    return [LayerWeights(w=w.tolist(), b=b.tolist()) for w, b in zip(params.weights, params.biases)]


def _layers_in(layers: List[LayerWeights], arch: List[int], label: str) -> MlpParams:
    if len(layers) != len(arch) - 1:
        raise CheckpointError(f"{label}: {len(layers)} layers stored for architecture {arch}")
    weights, biases = [], []
    for i, layer in enumerate(layers):
        w = np.asarray(layer.w, dtype=float)
        b = np.asarray(layer.b, dtype=float)
        if w.shape != (arch[i], arch[i + 1]) or b.shape != (arch[i + 1],):
            raise CheckpointError(f"{label}: layer {i} has shapes {w.shape}/{b.shape}, architecture says {arch}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise CheckpointError(f"{label}: layer {i} contains non-finite values")
        weights.append(w)
        biases.append(b)
    return MlpParams(weights=weights, biases=biases)


def to_checkpoint(
    policy: GaussianPolicy, value: ValueNet, obs_mode: ObsMode, meta: Optional[Dict[str, Any]] = None
) -> PolicyCheckpoint:
    return PolicyCheckpoint(
        arch=list(policy.mean_net.sizes),
        weights=_layers_out(policy.mean_net),
        log_std=policy.log_std.tolist(),
        value_arch=list(value.net.sizes),
        value_weights=_layers_out(value.net),
        obs_mode=obs_mode,
        action_bounds=[ACTION_LOW, ACTION_HIGH],
        meta=dict(meta or {}),
    )


def from_checkpoint(ckpt: PolicyCheckpoint) -> Tuple[GaussianPolicy, ValueNet]:
    mean_net = _layers_in(ckpt.weights, ckpt.arch, "policy")
    value_net = _layers_in(ckpt.value_weights, ckpt.value_arch, "value")
    if len(ckpt.log_std) != ckpt.arch[-1]:
        raise CheckpointError(f"log_std has {len(ckpt.log_std)} entries for {ckpt.arch[-1]} actions")
    if ckpt.value_arch[0] != ckpt.arch[0] or ckpt.value_arch[-1] != 1:
        raise CheckpointError(f"Value architecture {ckpt.value_arch} incompatible with policy {ckpt.arch}")
    return GaussianPolicy(mean_net=mean_net, log_std=np.asarray(ckpt.log_std, dtype=float)), ValueNet(net=value_net)


def save_checkpoint(ckpt: PolicyCheckpoint, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(ckpt.model_dump_json() + "\n", encoding="utf-8")
    return path


def load_checkpoint(path: Union[str, Path]) -> PolicyCheckpoint:
    path = Path(path)
    try:
        return PolicyCheckpoint.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e
    except ValidationError as e:
        raise CheckpointError(f"Malformed checkpoint {path}: {e}") from e
