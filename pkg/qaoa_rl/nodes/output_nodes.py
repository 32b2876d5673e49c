import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..chain import qaoa_bound, schedule_to_s
from ..env import write_trace
from ..pocketflow import Node
from ..schedule_opt import report_row
from ..types import ResultRecord
from ..utils.artifacts import OPTIMIZE_REPORT_FIELDS, RESULT_FIELDS, save_rows_csv, save_schedule

logger = logging.getLogger(__name__)

SWEEP_FIELDS = ["p", "bound", "n_runs", "eps_mean", "eps_std", "eps_refined_mean", "eps_refined_std", "eps_best"]
BASELINE_FIELDS = ["p", "t", "gamma", "beta", "s", "eps"]


def _mean_std(values: Sequence[float]):
    if not values:
        return None, None
    arr = np.asarray(values, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def sweep_rows(results: Dict[int, List[ResultRecord]], n_sites: int) -> List[Dict[str, Any]]:
    """Mean and sample standard deviation of eps (and refined eps) per depth, with the depth bound."""
    rows = []
    for p in sorted(results):
        records = results[p]
        eps = [r.eps for r in records]
        refined = [r.eps_refined for r in records if r.eps_refined is not None]
        eps_mean, eps_std = _mean_std(eps)
        ref_mean, ref_std = _mean_std(refined)
        rows.append(
            {
                "p": p,
                "bound": qaoa_bound(p, n_sites),
                "n_runs": len(records),
                "eps_mean": eps_mean,
                "eps_std": eps_std,
                "eps_refined_mean": ref_mean,
                "eps_refined_std": ref_std,
                "eps_best": min(eps + refined),
            }
        )
    return rows


class WriteResultsNode(Node):
    """Schedules to JSON (one file per run), the result table to CSV, traces to JSON lines."""

    def prep(self, shared):
        out_csv = Path(shared["out_csv"])
        trace_dir: Optional[str] = shared.get("trace_dir")
        return {
            "records": shared["records"],
            "out_csv": out_csv,
            "schedule_dir": out_csv.parent / "schedules",
            "traces": shared.get("traces") if trace_dir else None,
            "trace_dir": Path(trace_dir) if trace_dir else None,
            "refine_summary": shared.get("refine_summary"),
        }

    def exec(self, prep_res):
        stem = prep_res["out_csv"].stem
        outputs: List[str] = []
        records: List[ResultRecord] = []
        for record in prep_res["records"]:
            sched_path = save_schedule(record.schedule, prep_res["schedule_dir"] / f"{stem}_run{record.run_id:03d}.json")
            outputs.append(str(sched_path))
            if record.refined_schedule is not None:
                refined_path = prep_res["schedule_dir"] / f"{stem}_run{record.run_id:03d}_refined.json"
                outputs.append(str(save_schedule(record.refined_schedule, refined_path)))
            records.append(record.model_copy(update={"schedule_path": str(sched_path)}))
        rows = [record.model_dump(include=set(RESULT_FIELDS)) for record in records]
        outputs.append(str(save_rows_csv(prep_res["out_csv"], rows, RESULT_FIELDS)))
        summary = prep_res["refine_summary"]
        if summary is not None:
            report_csv = prep_res["out_csv"].with_name(f"{stem}.localopt.csv")
            report_rows = [{"run_id": r.run_id, **report_row(rep)} for r, rep in zip(records, summary.reports)]
            outputs.append(str(save_rows_csv(report_csv, report_rows, ["run_id", *OPTIMIZE_REPORT_FIELDS])))
        if prep_res["traces"] is not None:
            for record, trace in zip(records, prep_res["traces"]):
                outputs.append(str(write_trace(trace, prep_res["trace_dir"] / f"{stem}_run{record.run_id:03d}.jsonl")))
        return records, rows, outputs

    def post(self, shared, prep_res, exec_res):
        records, rows, outputs = exec_res
        shared["records"] = records
        shared["result_rows"] = rows
        shared.setdefault("outputs", []).extend(outputs)
        logger.info(f"Wrote {len(rows)} result rows to {prep_res['out_csv']}")
        return "default"


class CollectSweepNode(Node):
    """Files the current (p, seed) records under ``shared['sweep_results'][p]``."""

    def prep(self, shared):
        return self.params["p"], shared["records"]

    def post(self, shared, prep_res, exec_res):
        p, records = prep_res
        shared.setdefault("sweep_results", {}).setdefault(p, []).extend(records)
        return "default"


class WriteSweepNode(Node):
    def prep(self, shared):
        return shared.get("sweep_results", {}), shared["spec"].n_sites, Path(shared["out_csv"])

    def exec(self, prep_res):
        results, n_sites, out_csv = prep_res
        rows = sweep_rows(results, n_sites)
        return rows, save_rows_csv(out_csv, rows, SWEEP_FIELDS)

    def post(self, shared, prep_res, exec_res):
        rows, path = exec_res
        shared["sweep_rows"] = rows
        shared.setdefault("outputs", []).append(str(path))
        return "default"


class WriteBaselineNode(Node):
    """One CSV row per layer and depth, plus a schedule file per depth."""

    def prep(self, shared):
        return shared["baseline"], Path(shared["out_csv"])

    def exec(self, prep_res):
        levels, out_csv = prep_res
        rows: List[Dict[str, Any]] = []
        outputs: List[str] = []
        for level in levels:
            s_values = schedule_to_s(level.schedule, strict=False)
            for t, (gamma, beta, s) in enumerate(zip(level.schedule.gammas, level.schedule.betas, s_values), start=1):
                rows.append({"p": level.p, "t": t, "gamma": gamma, "beta": beta, "s": s, "eps": level.eps})
            sched_path = out_csv.parent / f"{out_csv.stem}_p{level.p:02d}.json"
            outputs.append(str(save_schedule(level.schedule, sched_path)))
        outputs.append(str(save_rows_csv(out_csv, rows, BASELINE_FIELDS)))
        return rows, outputs

    def post(self, shared, prep_res, exec_res):
        rows, outputs = exec_res
        shared["baseline_rows"] = rows
        shared.setdefault("outputs", []).extend(outputs)
        return "default"
