import logging
from pathlib import Path

from ..nodes import (
    REFINE_ACTION,
    BaselineNode,
    CollectSweepNode,
    EvaluatePolicyNode,
    LoadCheckpointNode,
    LoadInstanceNode,
    RefineSchedulesNode,
    TrainPolicyNode,
    WriteBaselineNode,
    WriteResultsNode,
    WriteSweepNode,
)
from ..pocketflow import BatchFlow, Flow

logger = logging.getLogger(__name__)


def create_train_flow() -> Flow:
    load_instance = LoadInstanceNode()
    load_instance >> TrainPolicyNode()
    return Flow(start=load_instance)


def create_test_flow() -> Flow:
    """Also serves transfer: set ``shared['require_intensive']`` to guard the checkpoint."""
    load_instance = LoadInstanceNode()
    load_checkpoint = LoadCheckpointNode()
    evaluate = EvaluatePolicyNode()
    refine = RefineSchedulesNode()
    write_results = WriteResultsNode()

    load_instance >> load_checkpoint >> evaluate
    evaluate >> write_results
    evaluate - REFINE_ACTION >> refine
    refine >> write_results
    return Flow(start=load_instance)


class SweepFlow(BatchFlow):
    """Train, test and optionally refine once per (p, seed) pair."""

    def prep(self, shared):
        out_csv = Path(shared["out_csv"])
        ckpt_dir = out_csv.parent / f"{out_csv.stem}_checkpoints"
        batches = []
        for p in shared["p_list"]:
            for seed in shared["seeds"]:
                tag = f"p{p:02d}_seed{seed}"
                batches.append(
                    {
                        "p": p,
                        "seed": seed,
                        "checkpoint_path": str(ckpt_dir / f"{tag}.json"),
                        "log_path": str(ckpt_dir / f"{tag}.log.csv"),
                    }
                )
        logger.info(f"Sweep over {len(shared['p_list'])} depths x {len(shared['seeds'])} seeds")
        return batches

    def post(self, shared, prep_res, exec_res):
        return "default"


def create_sweep_flow() -> Flow:
    train = TrainPolicyNode()
    evaluate = EvaluatePolicyNode()
    refine = RefineSchedulesNode()
    collect = CollectSweepNode()
    train >> evaluate
    evaluate >> collect
    evaluate - REFINE_ACTION >> refine
    refine >> collect

    load_instance = LoadInstanceNode()
    sweep = SweepFlow(start=train)
    load_instance >> sweep >> WriteSweepNode()
    return Flow(start=load_instance)


def create_baseline_flow() -> Flow:
    load_instance = LoadInstanceNode()
    load_instance >> BaselineNode() >> WriteBaselineNode()
    return Flow(start=load_instance)
