# qaoa_rl/schedule_opt.py
"""BFGS refinement of QAOA schedules and the iterative smooth-schedule baseline."""
import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from qaoa_rl.backends import SimulatorBackend
from qaoa_rl.chain import classical_extremes, residual_energy_density
from qaoa_rl.errors import InvalidInputError, NumericalError
from qaoa_rl.types import ChainSpec, OptimizeReport, ResultRecord, Schedule

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
GTOL = 1e-8
MAX_ITERS = 500
GRID_POINTS = 64

Objective = Callable[[Union[Schedule, np.ndarray]], float]


class BaselineLevel(NamedTuple):
    p: int
    schedule: Schedule
    eps: float


@dataclass
class RefineSummary:
    reports: List[OptimizeReport]
    best_index: int

    @property
    def best(self) -> OptimizeReport:
        return self.reports[self.best_index]


def energy_objective(spec: ChainSpec, backend: SimulatorBackend) -> Objective:
    """E_P as a function of a Schedule or of the flat vector (gammas, betas)."""
    if backend.spec != spec:
        raise InvalidInputError("Backend was built for a different chain instance")

    def objective(sched: Union[Schedule, np.ndarray]) -> float:
        if not isinstance(sched, Schedule):
            sched = Schedule.from_vector(sched)
        energy = backend.final_energy(sched)
        if not math.isfinite(energy):
            raise NumericalError(f"Non-finite energy for schedule {sched}")
        return energy

    return objective


def _map(executor: Optional[Executor], fn: Callable, items: Sequence) -> List:
    if executor is None:
        return [fn(item) for item in items]
    return list(executor.map(fn, items))


def finite_difference_gradient(
    objective: Objective,
    x: np.ndarray,
    step: float = FD_STEP,
    order: int = 2,
    executor: Optional[Executor] = None,
) -> np.ndarray:
    """Central differences of second (default) or fourth order."""
    x = np.asarray(x, dtype=float)
    if order == 2:
        offsets, weights = (1.0, -1.0), (0.5, -0.5)
    elif order == 4:
        offsets, weights = (2.0, 1.0, -1.0, -2.0), (-1.0 / 12, 8.0 / 12, -8.0 / 12, 1.0 / 12)
    else:
        raise InvalidInputError(f"Unsupported finite-difference order {order}")
    points = []
    for i in range(x.size):
        for off in offsets:
            shifted = x.copy()
            shifted[i] += off * step
            points.append(shifted)
    values = np.asarray(_map(executor, objective, points)).reshape(x.size, len(offsets))
    return values @ np.asarray(weights) / step


def local_optimize(
    spec: ChainSpec,
    init: Schedule,
    backend: SimulatorBackend,
    fd_step: float = FD_STEP,
    gtol: float = GTOL,
    maxiter: int = MAX_ITERS,
    executor: Optional[Executor] = None,
) -> OptimizeReport:
    """Unconstrained BFGS over the 2P angles with finite-difference gradients."""
    objective = energy_objective(spec, backend)
    extremes = classical_extremes(spec)
    x0 = init.as_vector()
    best: Dict[str, object] = {"f": math.inf, "x": x0}

    def tracked(x: np.ndarray) -> float:
        value = objective(x)
        if value < best["f"]:
            best["f"], best["x"] = value, np.array(x, copy=True)
        return value

    f0 = tracked(x0)
    result = minimize(
        tracked,
        x0,
        method="BFGS",
        jac=lambda x: finite_difference_gradient(objective, x, fd_step, executor=executor),
        options={"gtol": gtol, "maxiter": maxiter, "norm": np.inf},
    )
    x_final, f_final = np.asarray(result.x, dtype=float), float(result.fun)
    if best["f"] < f_final:
        x_final, f_final = best["x"], float(best["f"])
    if f_final > f0:
        x_final, f_final = x0, f0
    gnorm = float(np.max(np.abs(finite_difference_gradient(objective, x_final, fd_step, executor=executor))))
    converged = bool(result.success) or gnorm <= gtol
    if not converged:
        logger.warning(f"BFGS stopped without convergence at P={init.p}: {result.message} (|g|_inf={gnorm:.2e})")
    return OptimizeReport(
        p=init.p,
        initial=init,
        final=Schedule.from_vector(x_final),
        eps_init=residual_energy_density(f0, extremes),
        eps_final=residual_energy_density(f_final, extremes),
        e_final=f_final,
        iters=int(result.nit),
        gnorm=gnorm,
        converged=converged,
    )


def grid_search_p1(
    spec: ChainSpec, backend: SimulatorBackend, points: int = GRID_POINTS, executor: Optional[Executor] = None
) -> Schedule:
    """Best single layer on a points x points grid over [0, pi/2]^2."""
    objective = energy_objective(spec, backend)
    axis = np.linspace(0.0, math.pi / 2, points)
    candidates = [np.array([g, b]) for g in axis for b in axis]
    energies = _map(executor, objective, candidates)
    return Schedule.from_vector(candidates[int(np.argmin(energies))])


def interpolate_schedule(sched: Schedule, p_new: int) -> Schedule:
    """Linear re-interpolation of both angle sequences onto p_new layers."""
    old_grid = np.linspace(0.0, 1.0, sched.p)
    new_grid = np.linspace(0.0, 1.0, p_new)
    gammas = np.interp(new_grid, old_grid, sched.gammas)
    betas = np.interp(new_grid, old_grid, sched.betas)
    return Schedule(gammas=tuple(gammas.tolist()), betas=tuple(betas.tolist()))


def iterative_baseline(
    spec: ChainSpec,
    p_max: int,
    backend: SimulatorBackend,
    executor: Optional[Executor] = None,
    grid_points: int = GRID_POINTS,
    **optimizer: Any,
) -> List[BaselineLevel]:
    """P=1 from a grid search, then each depth started from the re-interpolated previous optimum."""
    if p_max < 1:
        raise InvalidInputError(f"p_max must be >= 1, got {p_max}")
    start = grid_search_p1(spec, backend, grid_points, executor)
    report = local_optimize(spec, start, backend, executor=executor, **optimizer)
    levels = [BaselineLevel(1, report.final, report.eps_final)]
    logger.info(f"Baseline P=1: eps={report.eps_final:.10f}")
    for p in range(2, p_max + 1):
        previous = levels[-1]
        report = local_optimize(spec, interpolate_schedule(previous.schedule, p), backend, executor=executor, **optimizer)
        if report.eps_final > previous.eps:
            # Padding with an identity layer reproduces the previous energy exactly.
            padded = Schedule(gammas=previous.schedule.gammas + (0.0,), betas=previous.schedule.betas + (0.0,))
            fallback = local_optimize(spec, padded, backend, executor=executor, **optimizer)
            logger.debug(f"Interpolated start at P={p} lost to padded start: {report.eps_final} vs {fallback.eps_final}")
            if fallback.eps_final < report.eps_final:
                report = fallback
        levels.append(BaselineLevel(p, report.final, report.eps_final))
        logger.info(f"Baseline P={p}: eps={report.eps_final:.10f}")
    return levels


def refine(
    records: Sequence[ResultRecord],
    spec: ChainSpec,
    backend: SimulatorBackend,
    executor: Optional[Executor] = None,
) -> RefineSummary:
    """Local optimization of every evaluated schedule (RL+LO)."""
    if not records:
        raise InvalidInputError("refine needs at least one evaluated schedule")
    reports = [local_optimize(spec, record.schedule, backend, executor=executor) for record in records]
    return summarize_reports(reports)


def summarize_reports(reports: Sequence[OptimizeReport]) -> RefineSummary:
    best_index = int(np.argmin([r.eps_final for r in reports]))
    logger.info(f"Refined {len(reports)} schedules; best eps {reports[best_index].eps_final:.10f}")
    return RefineSummary(reports=list(reports), best_index=best_index)


def report_row(report: OptimizeReport) -> Dict[str, object]:
    return {
        "p": report.p,
        "eps_init": report.eps_init,
        "eps_final": report.eps_final,
        "iters": report.iters,
        "gnorm": report.gnorm,
        "converged": report.converged,
    }
