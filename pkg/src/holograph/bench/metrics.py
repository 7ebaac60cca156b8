# -*- coding: utf-8 -*-
"""Structural comparison of estimated and true graphs."""
import collections
import logging
from collections.abc import Iterable

import numpy as np

from ..causal_model import BinaryGraph

logger = logging.getLogger(__name__)


class InvalidComparison(ValueError):
    """Graphs cannot be compared (size mismatch or cyclic input)."""


def _check_sizes(estimated: BinaryGraph, truth: BinaryGraph):
    if estimated.n != truth.n:
        raise InvalidComparison(f"Cannot compare graphs of size {estimated.n} and {truth.n}")


def shd(estimated: BinaryGraph, truth: BinaryGraph) -> int:
    """Structural Hamming distance.

    One unit per variable pair whose edges differ: a missing or extra
    adjacency, a reversal, or a single edge against a two-way one.

    """
    _check_sizes(estimated, truth)
    a, b = estimated.adjacency, truth.adjacency
    differ = (a != b) | (a.T != b.T)
    return int(np.sum(np.triu(differ, k=1)))


def f1(estimated: BinaryGraph, truth: BinaryGraph) -> float:
    """F1 score over directed edges, zero without true positives."""
    _check_sizes(estimated, truth)
    a, b = estimated.adjacency, truth.adjacency
    tp = int(np.sum(a & b))
    if tp == 0:
        return 0.0
    precision = tp / int(np.sum(a))
    recall = tp / int(np.sum(b))
    return 2 * precision * recall / (precision + recall)


def d_separated(graph: BinaryGraph, x: int, y: int, Z: Iterable[int] = ()) -> bool:
    """Whether ``x`` and ``y`` are d-separated by ``Z`` (local positions).

    Bayes-ball reachability: a trail may pass an unobserved node in any
    non-collider configuration, and a collider only when it has a descendant
    in ``Z``.

    """
    Z = set(Z)
    if x in Z or y in Z:
        raise ValueError(f"Endpoints {x}, {y} must not be conditioned on")
    opened = set()
    for z in Z:
        opened |= graph.ancestors(z)

    # "up": reached from a child, "down": reached from a parent
    queue = collections.deque([(x, "up")])
    visited = set()
    while queue:
        v, direction = queue.popleft()
        if (v, direction) in visited:
            continue
        visited.add((v, direction))
        if v == y:
            return False
        if direction == "up" and v not in Z:
            queue.extend((p, "up") for p in graph.parents(v))
            queue.extend((c, "down") for c in graph.children(v))
        elif direction == "down":
            if v not in Z:
                queue.extend((c, "down") for c in graph.children(v))
            if v in opened:
                queue.extend((p, "up") for p in graph.parents(v))
    return True


def _without_edges(graph: BinaryGraph, edges) -> BinaryGraph:
    adjacency = np.array(graph.adjacency)
    for a, b in edges:
        adjacency[a, b] = False
    return BinaryGraph(graph.context, adjacency)


def valid_adjustment(truth: BinaryGraph, x: int, y: int, Z: set) -> bool:
    """Adjustment criterion for the effect of ``x`` on ``y`` in a DAG.

    ``Z`` must avoid every descendant of the nodes on proper causal paths, and
    block all non-causal paths once the first edges of causal paths are
    removed.

    """
    causal = (truth.descendants(x) - {x}) & truth.ancestors(y)
    forbidden = set()
    for c in causal:
        forbidden |= truth.descendants(c)
    if Z & forbidden:
        return False
    backdoor = _without_edges(truth, [(x, c) for c in truth.children(x) if c in causal])
    return d_separated(backdoor, x, y, Z)


def sid(estimated: BinaryGraph, truth: BinaryGraph) -> int:
    """Structural intervention distance.

    For every ordered pair ``(i, j)``: when the estimate predicts no effect of
    ``i`` on ``j`` (``j`` not a descendant), it errs iff the truth has one;
    otherwise it errs iff the estimated parents of ``i`` are not a valid
    adjustment set in the truth.

    Raises
    ------
    InvalidComparison
        on size mismatch or a cyclic graph

    """
    _check_sizes(estimated, truth)
    if not (estimated.is_acyclic() and truth.is_acyclic()):
        raise InvalidComparison("Structural intervention distance needs acyclic graphs")
    mistakes = 0
    for i in range(truth.n):
        estimated_de = estimated.descendants(i)
        true_de = truth.descendants(i)
        parents = set(estimated.parents(i))
        for j in range(truth.n):
            if i == j:
                continue
            if j not in estimated_de:
                mistakes += j in true_de
            elif not valid_adjustment(truth, i, j, parents):
                mistakes += 1
    return mistakes


def break_cycles(graph: BinaryGraph, weights: np.ndarray) -> BinaryGraph:
    """Drop the weakest edge of some directed cycle until none is left."""
    adjacency = np.array(graph.adjacency)
    current = graph
    removed = 0
    while (cycle := current.find_cycle()) is not None:
        edges = list(zip(cycle, cycle[1:] + cycle[:1]))
        a, b = min(edges, key=lambda e: (abs(weights[e]), e))
        adjacency[a, b] = False
        current = BinaryGraph(graph.context, adjacency)
        removed += 1
    if removed:
        logger.debug("Removed %d edge(s) to break cycles", removed)
    return current
