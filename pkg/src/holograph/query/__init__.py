# -*- coding: utf-8 -*-
"""Active querying of an oracle about causal relations."""
from .llm import EndpointConfig, LLMOracle, OracleUnavailable, llm_oracle
from .oracle import (
    Budget,
    BudgetExhausted,
    OracleAnswer,
    QueryCandidate,
    QueryKind,
    SimulatedOracle,
    answers_to_beliefs,
    simulated_oracle,
)
from .selection import (
    KindScheduler,
    QueryConfig,
    epistemic_value,
    instrumental_value,
    select_queries,
)
from .session import OracleConfig, OracleKind, QuerySession
