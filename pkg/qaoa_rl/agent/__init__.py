from .neural import GaussianPolicy, MlpParams, ValueNet, load_checkpoint, save_checkpoint
from .ppo import TrainingResult, evaluate, train

__all__ = [
    "GaussianPolicy",
    "MlpParams",
    "ValueNet",
    "TrainingResult",
    "evaluate",
    "load_checkpoint",
    "save_checkpoint",
    "train",
]
