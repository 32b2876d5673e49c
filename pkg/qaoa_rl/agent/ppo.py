# qaoa_rl/agent/ppo.py
"""Clipped-surrogate PPO: epochs of frozen-policy episode collection followed by
one full-batch policy update and one value regression."""
import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from qaoa_rl.agent.neural import (
    AdamState,
    GaussianPolicy,
    MlpParams,
    ValueNet,
    adam_step,
    clamp_log_std,
    from_checkpoint,
    gaussian_log_prob,
    log_prob_gradients,
    make_policy,
    make_value,
    mlp_gradients,
    policy_mean,
    save_checkpoint,
    to_checkpoint,
    value_predict,
)
from qaoa_rl.backends import create_backend, resolve_backend_name
from qaoa_rl.chain import classical_extremes, residual_energy_density, schedule_to_s
from qaoa_rl.env import QaoaEnv, observation_size
from qaoa_rl.errors import CheckpointError, InvalidInputError, NumericalError
from qaoa_rl.types import ChainSpec, EpisodeConfig, PolicyCheckpoint, ResultRecord, TrainConfig
from qaoa_rl.utils.artifacts import TRAINING_LOG_FIELDS, CsvLog

logger = logging.getLogger(__name__)

EnvFactory = Callable[[], QaoaEnv]
N_ACTIONS = 2
ADV_STD_FLOOR = 1e-12
EVAL_STREAM = 2**31 - 1


@dataclass
class RolloutBuffer:
    """One epoch of experience in episode-major order (index = episode * P + t)."""

    n_episodes: int
    p_steps: int
    obs: np.ndarray
    actions: np.ndarray
    logp: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    terminal_energies: np.ndarray
    terminal_eps: np.ndarray
    advantages: Optional[np.ndarray] = None
    raw_advantages: Optional[np.ndarray] = None
    returns: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.n_episodes * self.p_steps

    @property
    def episode_rewards(self) -> np.ndarray:
        return self.rewards.reshape(self.n_episodes, self.p_steps).sum(axis=1)


@dataclass
class UpdateStats:
    policy_loss: float
    value_loss: float
    kl: float
    clip_frac: float
    policy_steps: int
    stopped_early: bool


@dataclass
class PpoOptimizers:
    policy: AdamState
    value: AdamState

    @classmethod
    def for_networks(cls, policy: GaussianPolicy, value: ValueNet) -> "PpoOptimizers":
        return cls(policy=AdamState.zeros_like(policy.arrays()), value=AdamState.zeros_like(value.net.arrays()))


@dataclass
class TrainingResult:
    checkpoint: PolicyCheckpoint
    log: List[Dict[str, Any]] = field(default_factory=list)
    periodic_checkpoints: List[Path] = field(default_factory=list)


def episode_rngs(master_seed: int, stream: int, count: int) -> List[np.random.Generator]:
    """Independent generators per episode, fixed by (master_seed, stream) alone."""
    return [np.random.default_rng(np.random.SeedSequence([master_seed, stream, i])) for i in range(count)]


def _map(executor: Optional[Executor], fn: Callable, items: Sequence) -> List:
    if executor is None:
        return [fn(item) for item in items]
    return list(executor.map(fn, items))


def collect_epoch(
    env_factory: EnvFactory,
    policy: GaussianPolicy,
    value: ValueNet,
    cfg: TrainConfig,
    epoch_index: int,
    executor: Optional[Executor] = None,
) -> RolloutBuffer:
    n_ep, p = cfg.n_episodes_per_epoch, cfg.p_steps
    envs = [env_factory() for _ in range(n_ep)]
    rngs = episode_rngs(cfg.master_seed, epoch_index, n_ep)
    obs = np.stack([env.reset().features for env in envs])
    obs_steps, act_steps, logp_steps, val_steps, rew_steps = [], [], [], [], []
    std = np.exp(policy.log_std)
    for _ in range(p):
        noise = np.stack([rng.standard_normal(N_ACTIONS) for rng in rngs])
        actions = policy_mean(policy, obs) + std * noise
        obs_steps.append(obs)
        act_steps.append(actions)
        logp_steps.append(gaussian_log_prob(policy, obs, actions))
        val_steps.append(value_predict(value, obs))
        results = _map(executor, lambda i: envs[i].step(actions[i]), range(n_ep))
        obs = np.stack([o.features for o, _, _ in results])
        rew_steps.append(np.array([r for _, r, _ in results]))

    def episode_major(steps: List[np.ndarray]) -> np.ndarray:
        stacked = np.stack(steps, axis=1)
        return stacked.reshape(n_ep * p, *stacked.shape[2:])

    energies = np.array([env.last_record.energy for env in envs])
    eps = np.array(
        [residual_energy_density(e, env.extremes) if env.extremes is not None else np.nan for e, env in zip(energies, envs)]
    )
    return RolloutBuffer(
        n_episodes=n_ep,
        p_steps=p,
        obs=episode_major(obs_steps),
        actions=episode_major(act_steps),
        logp=episode_major(logp_steps),
        values=episode_major(val_steps),
        rewards=episode_major(rew_steps),
        terminal_energies=energies,
        terminal_eps=eps,
    )


def compute_gae(buffer: RolloutBuffer, discount: float, lam: float) -> RolloutBuffer:
    """GAE-lambda advantages with a zero terminal bootstrap, normalized over the epoch."""
    shape = (buffer.n_episodes, buffer.p_steps)
    rewards = buffer.rewards.reshape(shape)
    values = buffer.values.reshape(shape)
    next_values = np.concatenate([values[:, 1:], np.zeros((shape[0], 1))], axis=1)
    deltas = rewards + discount * next_values - values
    adv = np.zeros(shape)
    running = np.zeros(shape[0])
    for t in range(shape[1] - 1, -1, -1):
        running = deltas[:, t] + discount * lam * running
        adv[:, t] = running
    raw = adv.reshape(-1)
    centred = raw - raw.mean()
    std = centred.std()
    buffer.raw_advantages = raw
    buffer.advantages = centred / std if std > ADV_STD_FLOOR else centred
    buffer.returns = (adv + values).reshape(-1)
    return buffer


def clipped_surrogate(
    policy: GaussianPolicy, buffer: RolloutBuffer, clip_ratio: float
) -> Tuple[float, GaussianPolicy, Dict[str, float]]:
    """Objective mean(min(rho A, clip(rho) A)) and its gradient with respect to the policy."""
    logp = gaussian_log_prob(policy, buffer.obs, buffer.actions)
    ratio = np.exp(logp - buffer.logp)
    adv = buffer.advantages
    clipped = np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
    objective = float(np.mean(np.minimum(ratio * adv, clipped * adv)))
    unclipped = ((adv >= 0.0) & (ratio <= 1.0 + clip_ratio)) | ((adv < 0.0) & (ratio >= 1.0 - clip_ratio))
    upstream = np.where(unclipped, ratio * adv, 0.0) / len(adv)
    grads = log_prob_gradients(policy, buffer.obs, buffer.actions, upstream)
    info = {
        "kl": float(np.mean(buffer.logp - logp)),
        "clip_frac": float(np.mean(np.abs(ratio - 1.0) > clip_ratio)),
    }
    return objective, grads, info


def ppo_update(
    policy: GaussianPolicy,
    value: ValueNet,
    buffer: RolloutBuffer,
    cfg: TrainConfig,
    optimizers: Optional[PpoOptimizers] = None,
) -> Tuple[GaussianPolicy, ValueNet, UpdateStats]:
    if buffer.advantages is None:
        raise InvalidInputError("compute_gae must run before ppo_update")
    optimizers = optimizers or PpoOptimizers.for_networks(policy, value)

    first_loss: Optional[float] = None
    info = {"kl": 0.0, "clip_frac": 0.0}
    steps = 0
    stopped_early = False
    for _ in range(cfg.policy_iters):
        objective, grads, info = clipped_surrogate(policy, buffer, cfg.clip_ratio)
        if not np.isfinite(objective):
            raise NumericalError(f"Non-finite policy objective {objective} (log_std={policy.log_std.tolist()})")
        if first_loss is None:
            first_loss = -objective
        if info["kl"] > cfg.kl_stop:
            stopped_early = True
            logger.debug(f"Early stop after {steps} policy steps: KL {info['kl']:.5f} > {cfg.kl_stop}")
            break
        ascent = [-g for g in grads.arrays()]
        arrays = adam_step(policy.arrays(), ascent, optimizers.policy, cfg.policy_lr, optimizers.policy.t + 1)
        policy = clamp_log_std(GaussianPolicy.from_arrays(arrays))
        steps += 1
    if not stopped_early:
        _, _, info = clipped_surrogate(policy, buffer, cfg.clip_ratio)

    first_value_loss: Optional[float] = None
    obs, returns, n = buffer.obs, buffer.returns, len(buffer)
    for _ in range(cfg.value_iters):
        residual = value_predict(value, obs) - returns
        loss = float(np.mean(residual**2))
        if not np.isfinite(loss):
            raise NumericalError(f"Non-finite value loss {loss}")
        if first_value_loss is None:
            first_value_loss = loss
        grads = mlp_gradients(value.net, obs, (2.0 * residual / n)[:, None])
        arrays = adam_step(value.net.arrays(), grads.arrays(), optimizers.value, cfg.value_lr, optimizers.value.t + 1)
        value = ValueNet(net=MlpParams.from_arrays(arrays))

    stats = UpdateStats(
        policy_loss=float(first_loss),
        value_loss=float(first_value_loss),
        kl=info["kl"],
        clip_frac=info["clip_frac"],
        policy_steps=steps,
        stopped_early=stopped_early,
    )
    return policy, value, stats


def init_networks(cfg: TrainConfig, obs_size: int) -> Tuple[GaussianPolicy, ValueNet]:
    policy_seed, value_seed = np.random.SeedSequence(cfg.master_seed).generate_state(2)
    policy = make_policy(obs_size, N_ACTIONS, cfg.hidden_sizes, int(policy_seed), cfg.init_log_std)
    value = make_value(obs_size, cfg.hidden_sizes, int(value_seed))
    return policy, value


def make_env_factory(spec: ChainSpec, cfg: EpisodeConfig) -> EnvFactory:
    backend = create_backend(cfg.backend, spec)
    return lambda: QaoaEnv(spec, cfg, backend)


def checkpoint_meta(spec: ChainSpec, cfg: TrainConfig, epochs_done: int) -> Dict[str, Any]:
    return {
        "n_sites": spec.n_sites,
        "p_steps": cfg.p_steps,
        "reward_mode": cfg.reward_mode,
        "include_step": cfg.include_step,
        "master_seed": cfg.master_seed,
        "epochs": epochs_done,
        "backend": cfg.backend,
    }


def train(
    spec: ChainSpec,
    cfg: TrainConfig,
    checkpoint_path: Optional[Union[str, Path]] = None,
    log_path: Optional[Union[str, Path]] = None,
    executor: Optional[Executor] = None,
) -> TrainingResult:
    cfg = cfg.model_copy(update={"backend": resolve_backend_name(cfg.backend, spec)})
    episode_cfg = cfg.episode_config()
    env_factory = make_env_factory(spec, episode_cfg)
    policy, value = init_networks(cfg, observation_size(spec.n_sites, cfg.obs_mode, cfg.include_step))
    optimizers = PpoOptimizers.for_networks(policy, value)
    csv_log = CsvLog(log_path, TRAINING_LOG_FIELDS) if log_path else None
    rows: List[Dict[str, Any]] = []
    periodic_paths: List[Path] = []
    report_every = max(1, cfg.n_epochs // 16)
    logger.info(
        f"Training PPO on N={spec.n_sites}, P={cfg.p_steps}: {cfg.n_epochs} epochs x "
        f"{cfg.n_episodes_per_epoch} episodes, backend={cfg.backend}, seed={cfg.master_seed}"
    )
    try:
        for epoch in range(cfg.n_epochs):
            buffer = compute_gae(
                collect_epoch(env_factory, policy, value, cfg, epoch, executor), cfg.discount, cfg.gae_lambda
            )
            policy, value, stats = ppo_update(policy, value, buffer, cfg, optimizers)
            row = {
                "epoch": epoch,
                "mean_reward": float(np.mean(buffer.episode_rewards)),
                "mean_eps": float(np.mean(buffer.terminal_eps)),
                "kl": stats.kl,
                "clip_frac": stats.clip_frac,
                "policy_loss": stats.policy_loss,
                "value_loss": stats.value_loss,
            }
            rows.append(row)
            if csv_log:
                csv_log.write(row)
            if (epoch + 1) % report_every == 0 or epoch == cfg.n_epochs - 1:
                logger.info(
                    f"epoch {epoch + 1}/{cfg.n_epochs}: mean reward {row['mean_reward']:.6f}, "
                    f"mean eps {row['mean_eps']:.6f}, kl {stats.kl:.5f}"
                )
            if checkpoint_path and cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0 \
                    and epoch + 1 < cfg.n_epochs:
                periodic = Path(checkpoint_path).with_suffix(f".epoch{epoch + 1}.json")
                save_checkpoint(to_checkpoint(policy, value, cfg.obs_mode, checkpoint_meta(spec, cfg, epoch + 1)), periodic)
                periodic_paths.append(periodic)
                logger.debug(f"Periodic checkpoint written to {periodic}")
    finally:
        if csv_log:
            csv_log.close()

    checkpoint = to_checkpoint(policy, value, cfg.obs_mode, checkpoint_meta(spec, cfg, cfg.n_epochs))
    if checkpoint_path:
        save_checkpoint(checkpoint, checkpoint_path)
    return TrainingResult(checkpoint=checkpoint, log=rows, periodic_checkpoints=periodic_paths)


def moving_average(values: Sequence[float], window: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if window < 1 or values.size < window:
        return np.empty(0)
    kernel = np.ones(window) / window
    return np.convolve(values, kernel, mode="valid")


def evaluate(
    checkpoint: PolicyCheckpoint,
    spec: ChainSpec,
    runs: int,
    deterministic: bool = False,
    seed: int = 0,
    backend: str = "auto",
    p_steps: Optional[int] = None,
    executor: Optional[Executor] = None,
    traces: Optional[List[List[Dict[str, Any]]]] = None,
) -> List[ResultRecord]:
    """Run complete test episodes; stochastic sampling unless ``deterministic`` (mean action)."""
    extremes = classical_extremes(spec)
    policy, _ = from_checkpoint(checkpoint)
    meta = checkpoint.meta
    include_step = bool(meta.get("include_step", False))
    expected = observation_size(spec.n_sites, checkpoint.obs_mode, include_step)
    if checkpoint.arch[0] != expected:
        raise CheckpointError(
            f"Checkpoint expects {checkpoint.arch[0]} inputs but obs_mode '{checkpoint.obs_mode}' "
            f"on N={spec.n_sites} yields {expected}"
        )
    p = p_steps or meta.get("p_steps")
    if not p:
        raise CheckpointError("Checkpoint does not record p_steps; pass p_steps explicitly")
    episode_cfg = EpisodeConfig(
        p_steps=int(p),
        backend=resolve_backend_name(backend, spec),
        reward_mode=meta.get("reward_mode", "raw"),
        obs_mode=checkpoint.obs_mode,
        include_step=include_step,
    )
    env_factory = make_env_factory(spec, episode_cfg)
    rngs = episode_rngs(seed, EVAL_STREAM, runs)

    def run_episode(run_id: int) -> Tuple[ResultRecord, List[Dict[str, Any]]]:
        env = env_factory()
        obs = env.reset()
        reward, done = 0.0, False
        while not done:
            mean = policy_mean(policy, obs.features)
            action = mean if deterministic else mean + np.exp(policy.log_std) * rngs[run_id].standard_normal(N_ACTIONS)
            obs, reward, done = env.step(action)
        sched = env.schedule()
        e_p = env.last_record.energy
        record = ResultRecord(
            run_id=run_id,
            p=sched.p,
            n=spec.n_sites,
            seed=seed,
            schedule=sched,
            e_p=e_p,
            eps=residual_energy_density(e_p, extremes),
            s_t=tuple(schedule_to_s(sched, strict=False)),
            reward=reward,
        )
        return record, env.trace

    outcomes = _map(executor, run_episode, range(runs))
    if traces is not None:
        traces.extend(trace for _, trace in outcomes)
    return [record for record, _ in outcomes]
