# qaoa_rl/pocketflow/base.py
"""Minimal node-graph runtime: nodes do prep -> exec -> post on a shared dict,
and the action string returned by post picks the next node."""
import copy
import logging
import time
import warnings
from concurrent.futures import Executor, ThreadPoolExecutor
from typing import Any, Dict, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

Shared = Dict[str, Any]
Params = Dict[str, Any]
DEFAULT_ACTION = "default"

N = TypeVar("N", bound="BaseNode")


class BaseNode:
    def __init__(self):
        self.params: Params = {}
        self.successors: Dict[str, "BaseNode"] = {}

    def set_params(self, params: Params) -> None:
        self.params = params

    def next(self, node: N, action: str = DEFAULT_ACTION) -> N:
        if action in self.successors:
            warnings.warn(f"Overwriting successor for action '{action}'")
        self.successors[action] = node
        return node

    def prep(self, shared: Shared) -> Any:
        pass

    def exec(self, prep_res: Any) -> Any:
        pass

    def post(self, shared: Shared, prep_res: Any, exec_res: Any) -> Optional[str]:
        pass

    def _exec(self, prep_res: Any) -> Any:
        return self.exec(prep_res)

    def _run(self, shared: Shared) -> Optional[str]:
        prep_res = self.prep(shared)
        exec_res = self._exec(prep_res)
        return self.post(shared, prep_res, exec_res)

    def run(self, shared: Shared) -> Optional[str]:
        if self.successors:
            warnings.warn("Node won't run successors. Use Flow.")
        return self._run(shared)

    def __rshift__(self, other: N) -> N:
        return self.next(other)

    def __sub__(self, action: str) -> "_ConditionalTransition":
        if isinstance(action, str):
            return _ConditionalTransition(self, action)
        raise TypeError("Action must be a string")


class _ConditionalTransition:
    def __init__(self, src: BaseNode, action: str):
        self.src, self.action = src, action

    def __rshift__(self, tgt: N) -> N:
        return self.src.next(tgt, self.action)


class Node(BaseNode):
    """A node whose exec is retried ``max_retries`` times before exec_fallback."""

    def __init__(self, max_retries: int = 1, wait: float = 0):
        super().__init__()
        self.max_retries, self.wait = max_retries, wait
        self.cur_retry = 0

    def exec_fallback(self, prep_res: Any, exc: Exception) -> Any:
        raise exc

    def _exec(self, prep_res: Any) -> Any:
        for self.cur_retry in range(self.max_retries):
            try:
                return self.exec(prep_res)
            except Exception as e:
                if self.cur_retry == self.max_retries - 1:
                    return self.exec_fallback(prep_res, e)
                logger.debug(f"{type(self).__name__} retry {self.cur_retry + 1}/{self.max_retries}: {e}")
                if self.wait > 0:
                    time.sleep(self.wait)


class BatchNode(Node):
    """exec runs once per item of the iterable returned by prep."""

    def _exec(self, items: Optional[Iterable[Any]]) -> List[Any]:
        return [super(BatchNode, self)._exec(item) for item in (items or [])]


class ParallelBatchNode(BatchNode):
    """BatchNode whose items run on a thread pool; result order follows item order.

    Uses ``params["executor"]`` when a flow provides one, otherwise a private pool
    of ``max_workers`` threads.
    """

    def __init__(self, max_retries: int = 1, wait: float = 0, max_workers: Optional[int] = None):
        super().__init__(max_retries, wait)
        self.max_workers = max_workers

    def _exec(self, items: Optional[Iterable[Any]]) -> List[Any]:
        items = list(items or [])
        run_one = super(BatchNode, self)._exec
        executor: Optional[Executor] = self.params.get("executor")
        if executor is not None:
            return list(executor.map(run_one, items))
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            return list(pool.map(run_one, items))


class Flow(BaseNode):
    def __init__(self, start: Optional[BaseNode] = None):
        super().__init__()
        self.start_node = start

    def start(self, start: N) -> N:
        self.start_node = start
        return start

    def get_next_node(self, curr: BaseNode, action: Optional[str]) -> Optional[BaseNode]:
        nxt = curr.successors.get(action or DEFAULT_ACTION)
        if not nxt and curr.successors:
            warnings.warn(f"Flow ends: '{action}' not found in {list(curr.successors)}")
        return nxt

    def _orch(self, shared: Shared, params: Optional[Params] = None) -> Optional[str]:
        curr = copy.copy(self.start_node)
        p = params or {**self.params}
        last_action: Optional[str] = None
        while curr:
            curr.set_params(p)
            last_action = curr._run(shared)
            curr = copy.copy(self.get_next_node(curr, last_action))
        return last_action

    def _run(self, shared: Shared) -> Optional[str]:
        prep_res = self.prep(shared)
        outcome = self._orch(shared)
        return self.post(shared, prep_res, outcome)

    def post(self, shared: Shared, prep_res: Any, exec_res: Any) -> Optional[str]:
        return exec_res


class BatchFlow(Flow):
    """Runs the whole graph once per parameter dict returned by prep."""

    def _run(self, shared: Shared) -> Optional[str]:
        batches = self.prep(shared) or []
        for batch_params in batches:
            self._orch(shared, {**self.params, **batch_params})
        return self.post(shared, batches, None)
