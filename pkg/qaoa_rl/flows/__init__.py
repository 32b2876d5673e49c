from .experiment_flows import (
    SweepFlow,
    create_baseline_flow,
    create_sweep_flow,
    create_test_flow,
    create_train_flow,
)

__all__ = [
    "SweepFlow",
    "create_baseline_flow",
    "create_sweep_flow",
    "create_test_flow",
    "create_train_flow",
]
