# -*- coding: utf-8 -*-
"""Seeded random ground-truth graphs."""
import dataclasses
import itertools
import logging
from typing import Optional

import numpy as np

from .. import causal_model, latent_projection
from ..causal_model import BinaryGraph, CausalState, Context

logger = logging.getLogger(__name__)

WEIGHT_RANGE = (0.5, 0.9)
LATENT_EDGE_PROB = 0.15


@dataclasses.dataclass(frozen=True)
class GroundTruth:
    """True graph over observed variables.

    Attributes
    ----------
    graph: BinaryGraph
        acyclic true graph
    latent_pairs: tuple
        sorted pairs of observed ids sharing a hidden parent
    names: tuple(str) or None
        variable names, when known

    """

    graph: BinaryGraph
    latent_pairs: tuple[tuple[int, int], ...] = ()
    names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        cycle = self.graph.find_cycle()
        if cycle is not None:
            raise ValueError(f"Ground truth has a directed cycle through {cycle}")
        ids = set(self.graph.context.ids)
        for pair in self.latent_pairs:
            if not set(pair) <= ids or pair[0] == pair[1]:
                raise ValueError(f"Invalid latent pair {pair}")


def _forward_mask(rank: np.ndarray) -> np.ndarray:
    return rank[:, np.newaxis] < rank[np.newaxis, :]


def gen_er(n: int, p: float, seed: int) -> GroundTruth:
    """Erdos-Renyi DAG along a random topological order."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"Edge probability must lie in (0, 1), got {p}")
    rng = np.random.default_rng(seed)
    rank = np.empty(n, dtype=int)
    rank[rng.permutation(n)] = np.arange(n)
    adjacency = _forward_mask(rank) & (rng.random((n, n)) < p)
    return GroundTruth(BinaryGraph(Context.range(n), adjacency))


def gen_sf(n: int, avg_degree: float, seed: int) -> GroundTruth:
    """Scale-free DAG by preferential attachment.

    Node ``t`` attaches to ``round(avg_degree / 2)`` earlier nodes drawn with
    probability proportional to degree plus one; edges point old to new.

    """
    if avg_degree < 1:
        raise ValueError(f"Average degree must be at least 1, got {avg_degree}")
    rng = np.random.default_rng(seed)
    m = max(1, int(round(avg_degree / 2)))
    adjacency = np.zeros((n, n), dtype=bool)
    degree = np.zeros(n)
    for t in range(1, n):
        weights = degree[:t] + 1
        targets = rng.choice(t, size=min(m, t), replace=False, p=weights / weights.sum())
        adjacency[targets, t] = True
        degree[targets] += 1
        degree[t] += len(targets)
    return GroundTruth(BinaryGraph(Context.range(n), adjacency))


def _signed_weights(adjacency: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    magnitude = rng.uniform(*WEIGHT_RANGE, size=adjacency.shape)
    sign = rng.choice([-1.0, 1.0], size=adjacency.shape)
    return np.where(adjacency, magnitude * sign, 0.0)


def gen_latent(
    n_obs: int,
    n_latent: int,
    seed: int,
    p: float = LATENT_EDGE_PROB,
    threshold: float = 0.3,
) -> tuple[GroundTruth, CausalState]:
    """DAG with hidden confounders, and its observed projection.

    Observed variables get ids ``0, ..., n_obs - 1``, hidden ones the following
    ids. Hidden variables sit in the first half of the topological order, and
    the outgoing edges of each are redrawn until it has at least two observed
    children.

    Returns
    -------
    GroundTruth
        discretized projection onto the observed variables, with the pairs of
        observed variables sharing a hidden parent
    CausalState
        the full linear SEM (unit noise)

    """
    if n_latent < 1:
        raise ValueError(f"At least one latent variable is needed, got {n_latent}")
    n = n_obs + n_latent
    rng = np.random.default_rng(seed)

    order = rng.permutation(n)
    half = max(n_latent, n // 2)
    latent = set(rng.choice(order[:half], size=n_latent, replace=False).tolist())
    # relabel: observed first, then latent, each keeping its relative order
    labels = [v for v in order if v not in latent] + [v for v in order if v in latent]
    relabel = np.empty(n, dtype=int)
    relabel[labels] = np.arange(n)
    rank = np.empty(n, dtype=int)
    rank[relabel[order]] = np.arange(n)

    adjacency = _forward_mask(rank) & (rng.random((n, n)) < p)
    observed = np.arange(n_obs)
    for h in range(n_obs, n):
        later = observed[rank[observed] > rank[h]]
        if later.size < 2:
            raise ValueError(f"Latent variable {h} cannot get two observed children")
        while adjacency[h, later].sum() < 2:
            adjacency[h, later] = rng.random(later.size) < p

    full = CausalState(Context.range(n), _signed_weights(adjacency, rng), np.eye(n))
    marginal = latent_projection.project(full, Context.range(n_obs))
    graph = causal_model.discretize(marginal, threshold)

    pairs = set()
    for h in range(n_obs, n):
        children = np.flatnonzero(adjacency[h, :n_obs]).tolist()
        pairs.update(itertools.combinations(sorted(children), 2))
    logger.debug(
        "Latent DAG: %d observed, %d hidden, %d confounded pairs", n_obs, n_latent, len(pairs)
    )
    return GroundTruth(graph, tuple(sorted(pairs))), full
