# -*- coding: utf-8 -*-
"""Data persistency, intrinsic options.

- **JSON**: configurations, states and records, with sorted keys
- **JSON lines**: streamed trajectories, suite cells and audit logs
- **NetCDF**: loss trajectories, through `xarray`

"""
import json
import logging
import pathlib
from collections.abc import Iterable
from typing import Optional, Union

import numpy as np
import yaml

logger = logging.getLogger(__name__)

PathLike = Union[str, pathlib.Path]

FLUSH_EVERY = 100


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, pathlib.Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def dumps(data) -> str:
    """Deterministic JSON text: sorted keys, 2-space indentation."""
    return json.dumps(data, sort_keys=True, indent=2, default=_default) + "\n"


def write_json(data, path: PathLike) -> pathlib.Path:
    path = pathlib.Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(data), encoding="utf-8")
    except OSError as err:
        raise OSError(f"Unable to write {path}: {err}") from err
    logger.info("Written %s", path)
    return path


def read_json(path: PathLike):
    path = pathlib.Path(path)
    with path.open("r", encoding="utf-8") as fd:
        return json.load(fd)


def load_config(path: PathLike, known: Optional[Iterable[str]] = None) -> dict:
    """Load a JSON or YAML configuration mapping.

    Parameters
    ----------
    path: str or pathlib.Path
        configuration file, JSON being a subset of YAML
    known: iterable(str) or None
        accepted top-level keys, anything else is rejected

    Raises
    ------
    ValueError
        if the file does not hold a mapping, or holds unknown keys

    """
    path = pathlib.Path(path)
    logger.debug("Reading configuration %s", path)
    data = yaml.safe_load(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"Configuration {path} must contain a mapping")
    if known is not None:
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ValueError(f"Unknown configuration keys in {path}: {unknown}")
    return data


def read_jsonl(path: PathLike) -> list:
    path = pathlib.Path(path)
    with path.open("r", encoding="utf-8") as fd:
        return [json.loads(line) for line in fd if line.strip()]


def write_jsonl(rows: Iterable, path: PathLike) -> pathlib.Path:
    with JsonLinesWriter(path) as writer:
        for row in rows:
            writer.write(row)
    return writer.path


class JsonLinesWriter:
    """Append one compact JSON object per line, flushing periodically.

    Objects exposing ``to_dict`` are converted first.

    """

    def __init__(self, path: PathLike, flush_every: int = FLUSH_EVERY, append: bool = False):
        self.path = pathlib.Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.flush_every = flush_every
        self._fd = self.path.open("a" if append else "w", encoding="utf-8")
        self._pending = 0

    def write(self, row):
        if hasattr(row, "to_dict"):
            row = row.to_dict()
        self._fd.write(json.dumps(row, sort_keys=True, default=_default) + "\n")
        self._pending += 1
        if self._pending >= self.flush_every:
            self.flush()

    def flush(self):
        self._fd.flush()
        self._pending = 0

    def close(self):
        if not self._fd.closed:
            self.flush()
            self._fd.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class TrajectoryWriter(JsonLinesWriter):
    """Stream of per-step loss breakdowns."""


def dump_trajectory(trajectory, path: PathLike) -> pathlib.Path:
    """Write a trajectory to NetCDF, as its ``step x term`` dataset."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trajectory.to_dataset().to_netcdf(path)
    logger.info("Written %s", path)
    return path
