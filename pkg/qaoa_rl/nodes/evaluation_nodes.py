import logging

import numpy as np

from ..agent.ppo import evaluate
from ..backends import create_backend
from ..pocketflow import Node, ParallelBatchNode
from ..schedule_opt import iterative_baseline, local_optimize, summarize_reports

logger = logging.getLogger(__name__)

REFINE_ACTION = "refine"


def _optimizer_settings(shared):
    settings = shared.get("optimizer")
    if settings is None:
        return {}
    return {"fd_step": settings.fd_step, "gtol": settings.gtol, "maxiter": settings.maxiter}


class EvaluatePolicyNode(Node):
    """Test episodes of ``shared['checkpoint']``; returns "refine" when local optimization is on."""

    def prep(self, shared):
        return {
            "checkpoint": shared["checkpoint"],
            "spec": shared["spec"],
            "runs": shared["runs"],
            "deterministic": bool(shared.get("deterministic")),
            "seed": self.params.get("seed", shared.get("seed", 0)),
            "backend": shared.get("backend", "auto"),
            "executor": self.params.get("executor"),
            "keep_traces": bool(shared.get("trace_dir")),
        }

    def exec(self, prep_res):
        traces = [] if prep_res["keep_traces"] else None
        records = evaluate(
            prep_res["checkpoint"],
            prep_res["spec"],
            prep_res["runs"],
            deterministic=prep_res["deterministic"],
            seed=prep_res["seed"],
            backend=prep_res["backend"],
            executor=prep_res["executor"],
            traces=traces,
        )
        return records, traces

    def post(self, shared, prep_res, exec_res):
        records, traces = exec_res
        shared["records"] = records
        shared["traces"] = traces
        eps = np.array([r.eps for r in records])
        logger.info(f"Evaluated {len(records)} runs: mean eps {eps.mean():.6e}, best {eps.min():.6e}")
        return REFINE_ACTION if shared.get("localopt") else "default"


class RefineSchedulesNode(ParallelBatchNode):
    """BFGS refinement of every evaluated schedule, one schedule per worker."""

    def prep(self, shared):
        spec = shared["spec"]
        backend = create_backend(shared.get("backend", "auto"), spec)
        settings = _optimizer_settings(shared)
        return [(spec, record.schedule, backend, settings) for record in shared["records"]]

    def exec(self, item):
        spec, schedule, backend, settings = item
        return local_optimize(spec, schedule, backend, **settings)

    def post(self, shared, prep_res, exec_res):
        summary = summarize_reports(exec_res)
        shared["records"] = [
            record.model_copy(update={"eps_refined": report.eps_final, "refined_schedule": report.final})
            for record, report in zip(shared["records"], exec_res)
        ]
        shared["refine_summary"] = summary
        return "default"


class BaselineNode(Node):
    """Iterative smooth-schedule construction up to ``shared['p_max']``."""

    def prep(self, shared):
        spec = shared["spec"]
        settings = shared.get("optimizer")
        return {
            "spec": spec,
            "p_max": shared["p_max"],
            "backend": create_backend(shared.get("backend", "auto"), spec),
            "executor": self.params.get("executor"),
            "grid_points": settings.grid_points if settings is not None else 64,
            "optimizer": _optimizer_settings(shared),
        }

    def exec(self, prep_res):
        return iterative_baseline(
            prep_res["spec"],
            prep_res["p_max"],
            prep_res["backend"],
            executor=prep_res["executor"],
            grid_points=prep_res["grid_points"],
            **prep_res["optimizer"],
        )

    def post(self, shared, prep_res, exec_res):
        shared["baseline"] = exec_res
        return "default"
