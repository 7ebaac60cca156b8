# -*- coding: utf-8 -*-
"""Protein-signaling consensus graph, as a user-supplied adjacency CSV.

The file has a header row with the 11 variable names and 11 rows of ``0``/``1``
entries, row ``i`` column ``j`` standing for the edge ``i -> j``.

"""
import logging
import pathlib
from typing import Union

import numpy as np
import pandas as pd

from ..causal_model import BinaryGraph, Context
from .generators import GroundTruth

logger = logging.getLogger(__name__)

N_VARIABLES = 11


class FormatError(ValueError):
    """Adjacency file does not follow the expected format."""


def load_sachs(path: Union[str, pathlib.Path]) -> tuple[GroundTruth, list[str]]:
    """Read and validate a consensus adjacency.

    Raises
    ------
    FormatError
        on a wrong number of variables, non-binary entries or a directed cycle

    """
    path = pathlib.Path(path)
    logger.debug("Reading %s", path)
    try:
        table = pd.read_csv(path, header=0)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise FormatError(f"Unable to parse {path}: {err}") from err

    names = [str(c).strip() for c in table.columns]
    if len(names) != N_VARIABLES or table.shape != (N_VARIABLES, N_VARIABLES):
        raise FormatError(
            f"Expected a {N_VARIABLES}x{N_VARIABLES} adjacency, got {table.shape} in {path}"
        )
    values = table.to_numpy()
    if not np.isin(values, (0, 1)).all():
        raise FormatError(f"Adjacency entries of {path} must be 0 or 1")
    if np.any(np.diag(values)):
        raise FormatError(f"Self-loops in {path}")

    graph = BinaryGraph(Context.range(N_VARIABLES), values.astype(bool))
    cycle = graph.find_cycle()
    if cycle is not None:
        raise FormatError(
            f"Directed cycle through {[names[v] for v in cycle]} in {path}"
        )
    return GroundTruth(graph, names=tuple(names)), names


def write_sachs(truth: GroundTruth, names, path: Union[str, pathlib.Path]) -> pathlib.Path:
    path = pathlib.Path(path)
    table = pd.DataFrame(truth.graph.adjacency.astype(int), columns=list(names))
    table.to_csv(path, index=False)
    return path
