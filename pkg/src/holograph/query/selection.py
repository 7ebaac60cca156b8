# -*- coding: utf-8 -*-
"""Expected-free-energy ranking of oracle queries.

A candidate scores ``-(epistemic + instrumental)``: the lower, the more useful.
Epistemic value peaks where the edge belief sits on the decision boundary,
instrumental value measures how much overlapping sections disagree on it.

"""
import dataclasses
import logging
from collections.abc import Iterable, Sequence
from typing import Optional

import numpy as np

from .. import sheaf
from ..causal_model import CausalState
from ..latent_projection import EPS, projection_of
from ..sheaf import ContextCover
from .oracle import Budget, BudgetExhausted, QueryCandidate, QueryKind

logger = logging.getLogger(__name__)

KIND_MIX = {
    QueryKind.EDGE_EXISTENCE: 45,
    QueryKind.DIRECTION: 25,
    QueryKind.MECHANISM: 20,
    QueryKind.CONFOUNDER: 10,
}


@dataclasses.dataclass(frozen=True)
class QueryConfig:
    """Query round settings.

    ``random_selection`` samples uniformly among the qualifying candidates
    instead of ranking them.

    """

    k: int = 5
    uncertainty_threshold: float = 0.3
    epistemic_weight: float = 1.0
    instrumental_weight: float = 1.0
    random_selection: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"At least one query per round, got k={self.k}")

    @classmethod
    def from_dict(cls, data: dict) -> "QueryConfig":
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def epistemic_value(w: float) -> float:
    b = min(max(abs(w), 0.0), 1.0)
    # rounded so that boundary beliefs compare exactly against thresholds
    return round(1.0 - 2.0 * abs(b - 0.5), 12)


def disagreement(
    sections: Sequence[CausalState], cover: ContextCover, eps: float = EPS
) -> np.ndarray:
    """Squared ``W`` disagreement per variable pair, summed over part pairs.

    Indexed by positions in the cover ground.

    """
    n = len(cover.ground)
    total = np.zeros((n, n))
    for i, j, common in cover.pairwise_intersections:
        a = projection_of(sections[i], common, eps)
        b = projection_of(sections[j], common, eps)
        pos = cover.ground.positions(common)
        total[np.ix_(pos, pos)] += (a.W - b.W) ** 2
    return total


def instrumental_value(
    i: int, j: int, sections: Sequence[CausalState], cover: ContextCover, eps: float = EPS
) -> float:
    a, b = cover.ground.positions((i, j))
    return float(disagreement(sections, cover, eps)[a, b])


def _candidates(
    sections: Sequence[CausalState],
    cover: ContextCover,
    uncertainty_threshold: float,
    exclude: Iterable[tuple[int, int]],
    epistemic_weight: float,
    instrumental_weight: float,
    eps: float,
) -> list[QueryCandidate]:
    W, _ = sheaf.average_sections(sections, cover)
    D = disagreement(sections, cover, eps)
    skip = set(exclude)
    ids = cover.ground.ids
    candidates = []
    for a, i in enumerate(ids):
        for b, j in enumerate(ids):
            if a == b or (i, j) in skip:
                continue
            epistemic = epistemic_value(W[a, b])
            if not epistemic > uncertainty_threshold:
                continue
            instrumental = float(D[a, b])
            candidates.append(
                QueryCandidate(
                    QueryKind.EDGE_EXISTENCE,
                    i,
                    j,
                    epistemic=epistemic,
                    instrumental=instrumental,
                    efe_score=-(epistemic_weight * epistemic + instrumental_weight * instrumental),
                )
            )
    candidates.sort(key=lambda c: (c.efe_score, c.i, c.j))
    return candidates


def select_queries(
    sections: Sequence[CausalState],
    cover: ContextCover,
    budget: Budget,
    k: int = 5,
    uncertainty_threshold: float = 0.3,
    exclude: Iterable[tuple[int, int]] = (),
    epistemic_weight: float = 1.0,
    instrumental_weight: float = 1.0,
    eps: float = EPS,
) -> list[QueryCandidate]:
    """Pick the ``k`` lowest-EFE pairs whose epistemic value exceeds the threshold.

    Parameters
    ----------
    sections: sequence of CausalState
        current sections, one per cover part
    cover: ContextCover
        their cover
    budget: Budget
        never more candidates than remaining queries are returned
    k: int
        maximum number of candidates
    uncertainty_threshold: float
        candidates need a strictly larger epistemic value
    exclude: iterable of (int, int)
        ordered pairs not to ask again
    epistemic_weight, instrumental_weight: float
        weights of the two EFE terms

    Returns
    -------
    list(QueryCandidate)
        edge-existence candidates, best first, ties broken by ``(i, j)``

    Raises
    ------
    BudgetExhausted
        if the budget has no query left

    """
    if k < 1:
        raise ValueError(f"At least one query per round, got k={k}")
    if budget.exhausted:
        raise BudgetExhausted(f"No budget left after {budget.used_queries} queries")
    candidates = _candidates(
        sections,
        cover,
        uncertainty_threshold,
        exclude,
        epistemic_weight,
        instrumental_weight,
        eps,
    )
    return candidates[: min(k, budget.remaining_queries)]


def select_random_queries(
    sections: Sequence[CausalState],
    cover: ContextCover,
    budget: Budget,
    rng: np.random.Generator,
    k: int = 5,
    uncertainty_threshold: float = 0.3,
    exclude: Iterable[tuple[int, int]] = (),
    eps: float = EPS,
) -> list[QueryCandidate]:
    """Uniform sample of the candidates `select_queries` would rank."""
    if budget.exhausted:
        raise BudgetExhausted(f"No budget left after {budget.used_queries} queries")
    candidates = _candidates(sections, cover, uncertainty_threshold, exclude, 1.0, 1.0, eps)
    size = min(k, budget.remaining_queries, len(candidates))
    picked = rng.choice(len(candidates), size=size, replace=False) if size else []
    return [candidates[p] for p in picked]


class KindScheduler:
    """Deterministic smooth weighted round-robin over query kinds.

    Over every cycle of ``sum(weights)`` draws, each kind is drawn exactly its
    weight times, spread as evenly as possible.

    """

    def __init__(self, weights: Optional[dict] = None):
        self.weights = dict(KIND_MIX if weights is None else weights)
        if any(w < 0 for w in self.weights.values()) or sum(self.weights.values()) <= 0:
            raise ValueError(f"Invalid kind weights {self.weights}")
        self._current = {kind: 0 for kind in self.weights}

    def __iter__(self):
        return self

    def __next__(self) -> QueryKind:
        total = sum(self.weights.values())
        for kind, weight in self.weights.items():
            self._current[kind] += weight
        chosen = max(self._current, key=lambda kind: self._current[kind])
        self._current[chosen] -= total
        return chosen
