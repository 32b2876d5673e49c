import logging

from ..agent.neural import load_checkpoint
from ..agent.ppo import train
from ..errors import CheckpointError
from ..pocketflow import Node
from ..types import TrainConfig

logger = logging.getLogger(__name__)


class TrainPolicyNode(Node):
    """Runs PPO on ``shared['spec']``.

    ``params`` may override ``p`` and ``seed`` (sweeps) and the output paths;
    otherwise ``shared['train_config']`` and ``shared['checkpoint_path']`` apply.
    """

    def prep(self, shared):
        cfg: TrainConfig = shared["train_config"]
        overrides = {}
        if shared.get("backend"):
            overrides["backend"] = shared["backend"]
        if "p" in self.params:
            overrides["p_steps"] = self.params["p"]
        if "seed" in self.params:
            overrides["master_seed"] = self.params["seed"]
        if overrides:
            cfg = TrainConfig.model_validate({**cfg.model_dump(), **overrides})
        return {
            "spec": shared["spec"],
            "cfg": cfg,
            "checkpoint_path": self.params.get("checkpoint_path", shared.get("checkpoint_path")),
            "log_path": self.params.get("log_path", shared.get("log_path")),
            "executor": self.params.get("executor"),
        }

    def exec(self, prep_res):
        return train(
            prep_res["spec"],
            prep_res["cfg"],
            checkpoint_path=prep_res["checkpoint_path"],
            log_path=prep_res["log_path"],
            executor=prep_res["executor"],
        )

    def post(self, shared, prep_res, exec_res):
        shared["checkpoint"] = exec_res.checkpoint
        shared["training_log"] = exec_res.log
        outputs = shared.setdefault("outputs", [])
        for key in ("checkpoint_path", "log_path"):
            if prep_res[key]:
                outputs.append(str(prep_res[key]))
        outputs.extend(str(path) for path in exec_res.periodic_checkpoints)
        if exec_res.log:
            last = exec_res.log[-1]
            logger.info(f"Training done: final mean reward {last['mean_reward']:.6f}, mean eps {last['mean_eps']:.6f}")
        return "default"


class LoadCheckpointNode(Node):
    """Loads ``shared['checkpoint_path']``; with ``shared['require_intensive']`` only N-independent inputs pass."""

    def prep(self, shared):
        return shared["checkpoint_path"], bool(shared.get("require_intensive"))

    def exec(self, prep_res):
        path, require_intensive = prep_res
        ckpt = load_checkpoint(path)
        if require_intensive and ckpt.obs_mode != "intensive":
            raise CheckpointError(
                f"Checkpoint {path} uses '{ckpt.obs_mode}' observations, which depend on the chain size; "
                "transfer to another N needs a policy trained on intensive observations"
            )
        return ckpt

    def post(self, shared, prep_res, exec_res):
        shared["checkpoint"] = exec_res
        logger.info(f"Loaded checkpoint {prep_res[0]} (arch {exec_res.arch}, obs_mode {exec_res.obs_mode})")
        return "default"
