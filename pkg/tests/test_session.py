import numpy as np

from holograph.causal_model import BinaryGraph, CausalState, Context
from holograph.query.oracle import Budget, QueryKind, SimulatedOracle
from holograph.query.selection import QueryConfig
from holograph.query.session import OracleConfig, OracleKind, QuerySession
from holograph.sheaf import ContextCover


def _setup(n=4, max_queries=100, **query):
    ground = Context.range(n)
    cover = ContextCover.trivial(ground)
    truth = BinaryGraph(ground, np.triu(np.ones((n, n), dtype=bool), k=1))
    sections = [CausalState(ground, np.full((n, n), 0.5), np.eye(n))]
    budget = Budget(max_queries=max_queries)
    session = QuerySession(cover, SimulatedOracle(truth, budget), budget, QueryConfig(**query))
    return session, sections, budget


def test_oracle_config():
    config = OracleConfig(kind=OracleKind.LLM, noise_rate=0.1, query=QueryConfig(k=2))
    assert OracleConfig.from_dict(config.to_dict()) == config
    assert config.effective_noise_rate == 0.1
    fast = OracleConfig(fast=True)
    assert fast.effective_noise_rate == 0.2
    assert fast.budget().max_queries == 100


def test_session_rounds():
    session, sections, budget = _setup(k=3)
    beliefs = session(0, sections)
    assert len(session.answers) == 3
    assert budget.used_queries == 3
    kinds = [q.kind for q, _ in session.answers]
    assert kinds == [QueryKind.EDGE_EXISTENCE, QueryKind.DIRECTION, QueryKind.MECHANISM]
    assert len(beliefs) >= 3

    session(50, sections)
    pairs = [(q.i, q.j) for q, _ in session.answers]
    assert len(pairs) == len(set(pairs)) == 6
    assert sum(session.counts.values()) == 6


def test_session_budget_exhaustion():
    session, sections, budget = _setup(max_queries=4, k=3)
    session(0, sections)
    beliefs = session(50, sections)
    assert budget.used_queries == 4
    assert not session.exhausted
    assert session(100, sections) == beliefs
    assert session.exhausted
    assert budget.used_queries == 4


def test_session_random_selection():
    session, sections, _ = _setup(k=2, random_selection=True)
    session(0, sections)
    assert len(session.answers) == 2
