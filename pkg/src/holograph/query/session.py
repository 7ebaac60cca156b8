# -*- coding: utf-8 -*-
"""Query rounds plugged into the optimization loop."""
import dataclasses
import enum
import logging
from collections.abc import Callable, Sequence

import numpy as np

from ..causal_model import CausalState
from ..latent_projection import EPS
from ..objective import EdgeBelief
from ..sheaf import ContextCover
from . import selection
from .llm import EndpointConfig
from .oracle import Budget, BudgetExhausted, OracleAnswer, QueryCandidate, answers_to_beliefs
from .selection import KindScheduler, QueryConfig

logger = logging.getLogger(__name__)

Oracle = Callable[[QueryCandidate], OracleAnswer]


class OracleKind(enum.Enum):
    SIMULATED = "simulated"
    LLM = "llm"
    NONE = "none"


@dataclasses.dataclass(frozen=True)
class OracleConfig:
    """Which oracle answers, under which budget.

    ``fast`` selects the cheaper variant: ``fast_noise_rate`` for the
    simulator, ``endpoint.fast_model`` for the LLM.

    """

    kind: OracleKind = OracleKind.SIMULATED
    noise_rate: float = 0.0
    fast_noise_rate: float = 0.2
    fast: bool = False
    max_queries: int = 100
    max_tokens: int = 500_000
    query: QueryConfig = QueryConfig()
    endpoint: EndpointConfig = EndpointConfig()

    @property
    def effective_noise_rate(self) -> float:
        return self.fast_noise_rate if self.fast else self.noise_rate

    @classmethod
    def from_dict(cls, data: dict) -> "OracleConfig":
        data = dict(data)
        if "kind" in data:
            data["kind"] = OracleKind(data["kind"])
        if "query" in data:
            data["query"] = QueryConfig.from_dict(data["query"])
        if "endpoint" in data:
            data["endpoint"] = EndpointConfig.from_dict(data["endpoint"])
        return cls(**data)

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["kind"] = self.kind.value
        return data

    def budget(self) -> Budget:
        return Budget(max_queries=self.max_queries, max_tokens=self.max_tokens)


class QuerySession:
    """Oracle hook for `holograph.optimizer.fit`.

    Every call runs one round: select candidates among pairs not yet asked,
    give each the next kind of the schedule, ask the oracle, and return the
    beliefs accumulated so far. Once the budget runs out, rounds stop asking.

    """

    def __init__(
        self,
        cover: ContextCover,
        oracle: Oracle,
        budget: Budget,
        config: QueryConfig = QueryConfig(),
        seed: int = 0,
        eps: float = EPS,
    ):
        self.cover = cover
        self.oracle = oracle
        self.budget = budget
        self.config = config
        self.eps = eps
        self.scheduler = KindScheduler()
        self.rng = np.random.default_rng(seed)
        self.answers: list[tuple[QueryCandidate, OracleAnswer]] = []
        self.asked: set[tuple[int, int]] = set()
        self.beliefs: list[EdgeBelief] = []
        self.exhausted = False

    def _select(self, sections: Sequence[CausalState]) -> list[QueryCandidate]:
        cfg = self.config
        if cfg.random_selection:
            return selection.select_random_queries(
                sections,
                self.cover,
                self.budget,
                self.rng,
                cfg.k,
                cfg.uncertainty_threshold,
                self.asked,
                self.eps,
            )
        return selection.select_queries(
            sections,
            self.cover,
            self.budget,
            cfg.k,
            cfg.uncertainty_threshold,
            self.asked,
            cfg.epistemic_weight,
            cfg.instrumental_weight,
            self.eps,
        )

    def __call__(self, step: int, sections: Sequence[CausalState]) -> list[EdgeBelief]:
        if self.exhausted:
            return self.beliefs
        try:
            for candidate in self._select(sections):
                query = dataclasses.replace(candidate, kind=next(self.scheduler))
                answer = self.oracle(query)
                self.answers.append((query, answer))
                self.asked.add((query.i, query.j))
        except BudgetExhausted:
            self.exhausted = True
            logger.info(
                "Query budget exhausted at step %d after %d answers", step, len(self.answers)
            )
        self.beliefs = answers_to_beliefs(self.answers)
        logger.debug("Step %d: %d answers, %d beliefs", step, len(self.answers), len(self.beliefs))
        return self.beliefs

    @property
    def counts(self) -> dict:
        """Number of answered queries per kind."""
        counts = {kind.value: 0 for kind in selection.KIND_MIX}
        for query, _ in self.answers:
            counts[query.kind.value] += 1
        return counts
