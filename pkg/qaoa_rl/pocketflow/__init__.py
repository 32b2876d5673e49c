from .base import (
    BaseNode,
    BatchFlow,
    BatchNode,
    Flow,
    Node,
    ParallelBatchNode,
)

__all__ = [
    "BaseNode",
    "Node",
    "BatchNode",
    "ParallelBatchNode",
    "Flow",
    "BatchFlow",
]
