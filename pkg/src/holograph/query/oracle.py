# -*- coding: utf-8 -*-
"""Query types, budget accounting and the ground-truth simulator."""
import collections
import dataclasses
import enum
import logging
import threading
from collections.abc import Iterable, Sequence

import numpy as np

from ..causal_model import BinaryGraph
from ..objective import EdgeBelief

logger = logging.getLogger(__name__)


class BudgetExhausted(RuntimeError):
    """No query or token budget left for another request."""


class QueryKind(enum.Enum):
    EDGE_EXISTENCE = "EdgeExistence"
    DIRECTION = "Direction"
    MECHANISM = "Mechanism"
    CONFOUNDER = "Confounder"


@dataclasses.dataclass(frozen=True)
class QueryCandidate:
    """Question about the variable pair ``(i, j)``, with its selection scores."""

    kind: QueryKind
    i: int
    j: int
    epistemic: float = 0.0
    instrumental: float = 0.0
    efe_score: float = 0.0

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError(f"Query on a single variable ({self.i}, {self.j})")
        if not 0.0 <= self.epistemic <= 1.0:
            raise ValueError(f"Epistemic value must lie in [0, 1], got {self.epistemic}")


@dataclasses.dataclass(frozen=True)
class OracleAnswer:
    belief: float
    confidence: float
    tokens_used: int = 0
    raw_text: str = ""

    def __post_init__(self):
        if not (0.0 <= self.belief <= 1.0 and 0.0 <= self.confidence <= 1.0):
            raise ValueError(
                f"Belief and confidence must lie in [0, 1], got {self.belief}, {self.confidence}"
            )
        if self.tokens_used < 0:
            raise ValueError(f"Negative token count {self.tokens_used}")


@dataclasses.dataclass
class Budget:
    """Query and token allowance, shared by every oracle of a run.

    Counters only grow, and never past their maxima. A query must be reserved
    before its request is sent.

    """

    max_queries: int = 100
    max_tokens: int = 500_000
    used_queries: int = 0
    used_tokens: int = 0
    by_kind: collections.Counter = dataclasses.field(default_factory=collections.Counter)
    _lock: threading.Lock = dataclasses.field(
        default_factory=threading.Lock, init=False, repr=False, compare=False
    )

    @property
    def remaining_queries(self) -> int:
        return self.max_queries - self.used_queries

    @property
    def exhausted(self) -> bool:
        return self.used_queries >= self.max_queries or self.used_tokens >= self.max_tokens

    def reserve(self, kind: QueryKind):
        """Book one query of the given kind.

        Raises
        ------
        BudgetExhausted
            if no query or token is left

        """
        with self._lock:
            if self.exhausted:
                raise BudgetExhausted(
                    f"Budget exhausted: {self.used_queries}/{self.max_queries} queries, "
                    f"{self.used_tokens}/{self.max_tokens} tokens"
                )
            self.used_queries += 1
            self.by_kind[kind.value] += 1

    def charge(self, tokens: int):
        """Add consumed tokens, clamped at the maximum."""
        with self._lock:
            total = self.used_tokens + max(0, int(tokens))
            if total > self.max_tokens:
                logger.warning(
                    "Token usage %d exceeds the budget of %d, clamping", total, self.max_tokens
                )
                total = self.max_tokens
            self.used_tokens = total

    def to_dict(self) -> dict:
        return dict(
            max_queries=self.max_queries,
            max_tokens=self.max_tokens,
            used_queries=self.used_queries,
            used_tokens=self.used_tokens,
            by_kind={k.value: self.by_kind.get(k.value, 0) for k in QueryKind},
        )


def _relation_holds(query: QueryCandidate, truth: BinaryGraph, latent_pairs) -> bool:
    if query.kind is QueryKind.CONFOUNDER:
        return frozenset((query.i, query.j)) in latent_pairs
    a, b = truth.context.positions((query.i, query.j))
    if query.kind is QueryKind.DIRECTION:
        return bool(truth.adjacency[a, b] and not truth.adjacency[b, a])
    return bool(truth.adjacency[a, b])


def simulated_oracle(
    query: QueryCandidate,
    truth: BinaryGraph,
    noise_rate: float = 0.0,
    seed: int = 0,
    latent_pairs: Iterable[tuple[int, int]] = (),
) -> OracleAnswer:
    """Answer a query from the true graph, with seeded flips.

    The answer is 0.95 when the relation holds and 0.05 otherwise, flipped with
    probability ``noise_rate``. The flip only depends on ``(query, seed)``.
    Direction queries on a pair with no edge either way get a neutral belief
    with zero confidence.

    """
    if not 0.0 <= noise_rate < 0.5:
        raise ValueError(f"noise_rate must lie in [0, 0.5), got {noise_rate}")
    if query.kind is QueryKind.DIRECTION:
        a, b = truth.context.positions((query.i, query.j))
        if not (truth.adjacency[a, b] or truth.adjacency[b, a]):
            return OracleAnswer(0.5, 0.0)

    pairs = {frozenset(p) for p in latent_pairs}
    holds = _relation_holds(query, truth, pairs)
    kind_index = list(QueryKind).index(query.kind)
    rng = np.random.default_rng([seed, kind_index, query.i, query.j])
    if rng.random() < noise_rate:
        holds = not holds
    return OracleAnswer(0.95 if holds else 0.05, 1.0 - noise_rate)


class SimulatedOracle:
    """Budgeted callable wrapper of `simulated_oracle`."""

    def __init__(
        self,
        truth: BinaryGraph,
        budget: Budget,
        noise_rate: float = 0.0,
        seed: int = 0,
        latent_pairs: Iterable[tuple[int, int]] = (),
    ):
        self.truth = truth
        self.budget = budget
        self.noise_rate = noise_rate
        self.seed = seed
        self.latent_pairs = tuple(latent_pairs)

    def __call__(self, query: QueryCandidate) -> OracleAnswer:
        self.budget.reserve(query.kind)
        return simulated_oracle(
            query, self.truth, self.noise_rate, self.seed, self.latent_pairs
        )


def answers_to_beliefs(
    answers: Sequence[tuple[QueryCandidate, OracleAnswer]]
) -> list[EdgeBelief]:
    """Edge beliefs from oracle answers, later answers replacing earlier ones.

    Direction answers constrain both orientations; confounder answers give no
    edge belief.

    """
    beliefs: dict[tuple[int, int], EdgeBelief] = {}
    for query, answer in answers:
        if query.kind is QueryKind.CONFOUNDER:
            logger.debug(
                "Confounder answer on (%d, %d): %.2f", query.i, query.j, answer.belief
            )
            continue
        beliefs[query.i, query.j] = EdgeBelief(
            query.i, query.j, answer.belief, answer.confidence
        )
        if query.kind is QueryKind.DIRECTION:
            beliefs[query.j, query.i] = EdgeBelief(
                query.j, query.i, 1.0 - answer.belief, answer.confidence
            )
    return list(beliefs.values())
