"""
Atomic file output and deterministic JSON.
"""

import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Optional

import numpy as np

from utils.errors import RenderError

DEFAULT_OUTPUT_DIR = "output"


def output_dir() -> Path:
    return Path(os.environ.get("MOEBIUS_OUTPUT_DIR", DEFAULT_OUTPUT_DIR))


def resolve_output(path: Optional[str], default_name: str) -> Path:
    if path:
        return Path(path)
    return output_dir() / default_name


def _json_default(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    if hasattr(value, "to_dict"):
        return value.to_dict()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def dumps(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default)


@contextmanager
def atomic_path(path: Path, suffix: str = "") -> Iterator[Path]:
    """Yield a temporary sibling of `path`; rename it over `path` when the block succeeds."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=suffix or path.suffix)
        os.close(fd)
    except OSError as e:
        raise RenderError(f"cannot write {path}: {e}") from e
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    except OSError as e:
        raise RenderError(f"cannot write {path}: {e}") from e
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
