from .evaluation_nodes import REFINE_ACTION, BaselineNode, EvaluatePolicyNode, RefineSchedulesNode
from .instance_nodes import LoadInstanceNode
from .output_nodes import CollectSweepNode, WriteBaselineNode, WriteResultsNode, WriteSweepNode
from .training_nodes import LoadCheckpointNode, TrainPolicyNode

__all__ = [
    "REFINE_ACTION",
    "BaselineNode",
    "CollectSweepNode",
    "EvaluatePolicyNode",
    "LoadCheckpointNode",
    "LoadInstanceNode",
    "RefineSchedulesNode",
    "TrainPolicyNode",
    "WriteBaselineNode",
    "WriteResultsNode",
    "WriteSweepNode",
]
