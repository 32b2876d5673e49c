# qaoa_rl/utils/artifacts.py
"""CSV/JSON writers shared by the experiment commands."""
import csv
import logging
import uuid
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, ValidationError

from qaoa_rl.errors import InvalidInputError
from qaoa_rl.types import RunManifest, Schedule

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRAINING_LOG_FIELDS = ["epoch", "mean_reward", "mean_eps", "kl", "clip_frac", "policy_loss", "value_loss"]
RESULT_FIELDS = ["run_id", "p", "n", "seed", "eps", "eps_refined", "e_p", "reward", "schedule_path"]
OPTIMIZE_REPORT_FIELDS = ["p", "eps_init", "eps_final", "iters", "gnorm", "converged"]
MANIFEST_FILE = "manifests.jsonl"


class ScheduleFile(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    p: int
    gammas: List[float]
    betas: List[float]


def ensure_parent(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def save_rows_csv(path: PathLike, rows: Sequence[Dict[str, Any]], fieldnames: Sequence[str]) -> Path:
    path = ensure_parent(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in fieldnames})
    return path


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    return value


class CsvLog:
    """Row-at-a-time CSV writer; every row is flushed so partial logs survive a crash."""

    def __init__(self, path: PathLike, fieldnames: Sequence[str]):
        self.path = ensure_parent(path)
        self.fieldnames = list(fieldnames)
        self._fh = self.path.open("w", newline="", encoding="utf-8")
        self._writer = csv.DictWriter(self._fh, fieldnames=self.fieldnames)
        self._writer.writeheader()
        self._fh.flush()

    def write(self, row: Dict[str, Any]) -> None:
        self._writer.writerow({k: _cell(row.get(k)) for k in self.fieldnames})
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self) -> "CsvLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def save_schedule(sched: Schedule, path: PathLike) -> Path:
    path = ensure_parent(path)
    record = ScheduleFile(p=sched.p, gammas=list(sched.gammas), betas=list(sched.betas))
    path.write_text(record.model_dump_json() + "\n", encoding="utf-8")
    return path


def load_schedule(path: PathLike) -> Schedule:
    path = Path(path)
    try:
        record = ScheduleFile.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise InvalidInputError(f"Cannot read schedule file {path}: {e}") from e
    except ValidationError as e:
        raise InvalidInputError(f"Malformed schedule file {path}: {e}") from e
    if record.p != len(record.gammas):
        raise InvalidInputError(f"Schedule file {path} declares p={record.p} but holds {len(record.gammas)} layers")
    return Schedule(gammas=tuple(record.gammas), betas=tuple(record.betas))


def code_version() -> str:
    try:
        return metadata.version("qaoa-rl")
    except metadata.PackageNotFoundError:
        from qaoa_rl import __version__

        return __version__


def start_manifest(command: str, config: Dict[str, Any], master_seed: Optional[int] = None) -> RunManifest:
    return RunManifest(
        run_id=uuid.uuid4().hex,
        command=command,
        config=config,
        master_seed=master_seed,
        code_version=code_version(),
        started_at=datetime.now(timezone.utc),
    )


def append_manifest(manifest: RunManifest, directory: PathLike) -> Path:
    """Manifests are only ever appended, one JSON object per line."""
    path = ensure_parent(Path(directory) / MANIFEST_FILE)
    finished = manifest.model_copy(update={"finished_at": datetime.now(timezone.utc)})
    with path.open("a", encoding="utf-8") as fh:
        fh.write(finished.model_dump_json() + "\n")
    logger.info(f"Run manifest {finished.run_id} appended to {path}")
    return path
