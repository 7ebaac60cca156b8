import numpy as np
import pytest

from holograph.causal_model import BinaryGraph, Context
from holograph.objective import EdgeBelief
from holograph.query.oracle import (
    Budget,
    BudgetExhausted,
    OracleAnswer,
    QueryCandidate,
    QueryKind,
    SimulatedOracle,
    answers_to_beliefs,
    simulated_oracle,
)


def _chain():
    # 0 -> 1 -> 2
    adjacency = np.zeros((3, 3), dtype=bool)
    adjacency[0, 1] = adjacency[1, 2] = True
    return BinaryGraph(Context.range(3), adjacency)


def test_candidate_validation():
    with pytest.raises(ValueError):
        QueryCandidate(QueryKind.DIRECTION, 2, 2)
    with pytest.raises(ValueError):
        OracleAnswer(1.2, 0.5)


def test_budget():
    budget = Budget(max_queries=2, max_tokens=10)
    budget.reserve(QueryKind.DIRECTION)
    budget.charge(4)
    assert budget.remaining_queries == 1
    assert not budget.exhausted
    budget.charge(50)
    assert budget.used_tokens == 10
    assert budget.exhausted
    with pytest.raises(BudgetExhausted):
        budget.reserve(QueryKind.DIRECTION)
    assert budget.to_dict()["by_kind"] == {
        "EdgeExistence": 0,
        "Direction": 1,
        "Mechanism": 0,
        "Confounder": 0,
    }


def test_simulated_answers():
    truth = _chain()
    edge = QueryCandidate(QueryKind.EDGE_EXISTENCE, 0, 1)
    missing = QueryCandidate(QueryKind.EDGE_EXISTENCE, 0, 2)
    assert simulated_oracle(edge, truth) == OracleAnswer(0.95, 1.0)
    assert simulated_oracle(missing, truth).belief == 0.05

    backwards = QueryCandidate(QueryKind.DIRECTION, 2, 1)
    assert simulated_oracle(backwards, truth).belief == 0.05
    unrelated = QueryCandidate(QueryKind.DIRECTION, 0, 2)
    assert simulated_oracle(unrelated, truth) == OracleAnswer(0.5, 0.0)

    confounded = QueryCandidate(QueryKind.CONFOUNDER, 2, 0)
    assert simulated_oracle(confounded, truth, latent_pairs=[(0, 2)]).belief == 0.95
    assert simulated_oracle(confounded, truth).belief == 0.05

    with pytest.raises(ValueError):
        simulated_oracle(edge, truth, noise_rate=0.5)


def test_simulated_noise_is_seeded():
    truth = _chain()
    queries = [
        QueryCandidate(kind, i, j)
        for kind in (QueryKind.EDGE_EXISTENCE, QueryKind.MECHANISM)
        for i in range(3)
        for j in range(3)
        if i != j
    ]
    first = [simulated_oracle(q, truth, 0.4, seed=9) for q in queries]
    second = [simulated_oracle(q, truth, 0.4, seed=9) for q in queries]
    assert first == second
    assert all(a.confidence == pytest.approx(0.6) for a in first)
    assert all(a.belief in (0.05, 0.95) for a in first)


def test_simulated_oracle_budget():
    budget = Budget(max_queries=100)
    oracle = SimulatedOracle(_chain(), budget)
    query = QueryCandidate(QueryKind.EDGE_EXISTENCE, 0, 1)
    for _ in range(100):
        oracle(query)
    with pytest.raises(BudgetExhausted):
        oracle(query)
    assert budget.used_queries == 100


def test_answers_to_beliefs():
    assert answers_to_beliefs([]) == []

    direction = QueryCandidate(QueryKind.DIRECTION, 2, 5)
    beliefs = answers_to_beliefs([(direction, OracleAnswer(0.9, 0.8))])
    assert beliefs[0] == EdgeBelief(2, 5, 0.9, 0.8)
    assert beliefs[1].i == 5 and beliefs[1].j == 2
    assert beliefs[1].belief == pytest.approx(0.1)

    edge = QueryCandidate(QueryKind.EDGE_EXISTENCE, 1, 3)
    confounder = QueryCandidate(QueryKind.CONFOUNDER, 1, 3)
    beliefs = answers_to_beliefs(
        [
            (edge, OracleAnswer(0.95, 1.0)),
            (confounder, OracleAnswer(0.95, 1.0)),
            (edge, OracleAnswer(0.05, 0.5)),
        ]
    )
    assert beliefs == [EdgeBelief(1, 3, 0.05, 0.5)]
