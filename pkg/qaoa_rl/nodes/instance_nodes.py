import logging

from ..backends import AUTO_ORACLE_MAX_SITES, resolve_backend_name
from ..chain import load_instance
from ..errors import InvalidInputError
from ..pocketflow import Node

logger = logging.getLogger(__name__)


class LoadInstanceNode(Node):
    """Puts the chain in ``shared['spec']`` and turns ``shared['backend']`` into a concrete simulator name.

    A spec already in the store is kept; otherwise ``shared['instance_path']`` is read.
    """

    def prep(self, shared):
        path = None
        if shared.get("spec") is None:
            path = shared.get("instance_path")
            if not path:
                raise InvalidInputError("An instance file is required (--instance)")
        return path, shared.get("backend", "auto"), shared.get("oracle_max_sites", AUTO_ORACLE_MAX_SITES)

    def exec(self, prep_res):
        path, backend, oracle_max_sites = prep_res
        spec = load_instance(path) if path else None
        return spec, backend, oracle_max_sites

    def post(self, shared, prep_res, exec_res):
        spec, backend, oracle_max_sites = exec_res
        if spec is not None:
            shared["spec"] = spec
            shared.setdefault("instances", []).append(str(prep_res[0]))
            logger.info(f"Loaded instance {prep_res[0]}: N={spec.n_sites}, uniform={spec.is_uniform}")
        shared["backend"] = resolve_backend_name(backend, shared["spec"], oracle_max_sites)
        logger.debug(f"Backend '{backend}' resolved to '{shared['backend']}'")
        return "default"
