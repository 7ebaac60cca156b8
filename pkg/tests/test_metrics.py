import functools
import itertools

import numpy as np
import pytest

from holograph.bench import generators, metrics
from holograph.causal_model import BinaryGraph, Context


def _graph(n, edges):
    adjacency = np.zeros((n, n), dtype=bool)
    for a, b in edges:
        adjacency[a, b] = True
    return BinaryGraph(Context.range(n), adjacency)


def _all_dags(n):
    off = [(i, j) for i in range(n) for j in range(n) if i != j]
    dags = []
    for mask in itertools.product((False, True), repeat=len(off)):
        graph = _graph(n, [e for e, on in zip(off, mask) if on])
        if graph.is_acyclic():
            dags.append(graph)
    return dags


def _shd_oracle(a, b):
    def state(g, i, j):
        return (bool(g.adjacency[i, j]), bool(g.adjacency[j, i]))

    return sum(
        state(a, i, j) != state(b, i, j) for i, j in itertools.combinations(range(a.n), 2)
    )


def _f1_oracle(a, b):
    tp = fp = fn = 0
    for i, j in itertools.permutations(range(a.n), 2):
        tp += a.adjacency[i, j] and b.adjacency[i, j]
        fp += a.adjacency[i, j] and not b.adjacency[i, j]
        fn += b.adjacency[i, j] and not a.adjacency[i, j]
    return 0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn)


def _paths(graph, x, y):
    """Simple trails from x to y in the skeleton."""
    skeleton = graph.adjacency | graph.adjacency.T
    stack = [[x]]
    while stack:
        path = stack.pop()
        if path[-1] == y:
            yield path
            continue
        for v in np.flatnonzero(skeleton[path[-1]]).tolist():
            if v not in path:
                stack.append(path + [v])


def _open(graph, path, Z):
    for prev, v, nxt in zip(path, path[1:], path[2:]):
        collider = graph.adjacency[prev, v] and graph.adjacency[nxt, v]
        if collider and not graph.descendants(v) & Z:
            return False
        if not collider and v in Z:
            return False
    return True


def _d_separated_oracle(graph, x, y, Z):
    return not any(_open(graph, p, Z) for p in _paths(graph, x, y))


def _directed(graph, path):
    return all(graph.adjacency[a, b] for a, b in zip(path, path[1:]))


def _valid_adjustment_oracle(truth, i, j, Z):
    paths = list(_paths(truth, i, j))
    causal = {v for p in paths if _directed(truth, p) for v in p[1:]}
    forbidden = set().union(*(truth.descendants(c) for c in causal))
    return not Z & forbidden and not any(
        _open(truth, p, Z) for p in paths if not _directed(truth, p)
    )


def _sid_oracle(estimated, truth, valid=_valid_adjustment_oracle):
    mistakes = 0
    for i, j in itertools.permutations(range(truth.n), 2):
        if j not in estimated.descendants(i):
            mistakes += j in truth.descendants(i)
            continue
        mistakes += not valid(truth, i, j, frozenset(estimated.parents(i)))
    return mistakes


def test_shd_examples():
    g = _graph(3, [(0, 1), (1, 2)])
    assert metrics.shd(g, g) == 0
    assert metrics.shd(_graph(3, [(1, 0), (1, 2)]), g) == 1
    assert metrics.shd(_graph(3, [(0, 1), (1, 0), (1, 2)]), g) == 1
    with pytest.raises(metrics.InvalidComparison):
        metrics.shd(_graph(2, []), g)


def test_f1_examples():
    g = _graph(3, [(0, 1), (1, 2)])
    assert metrics.f1(g, g) == 1.0
    assert metrics.f1(_graph(3, []), g) == 0.0
    assert metrics.f1(_graph(3, [(0, 1), (2, 0)]), g) == pytest.approx(0.5)


def test_sid_examples():
    truth = _graph(2, [(0, 1)])
    assert metrics.sid(truth, truth) == 0
    assert metrics.sid(_graph(2, []), truth) == 1
    with pytest.raises(metrics.InvalidComparison):
        metrics.sid(_graph(2, [(0, 1), (1, 0)]), truth)


def test_d_separation_examples():
    chain = _graph(3, [(0, 1), (1, 2)])
    assert metrics.d_separated(chain, 0, 2, {1})
    assert not metrics.d_separated(chain, 0, 2)

    collider = _graph(3, [(0, 1), (2, 1)])
    assert metrics.d_separated(collider, 0, 2)
    assert not metrics.d_separated(collider, 0, 2, {1})

    # conditioning on a descendant of the collider opens it too
    collider = _graph(4, [(0, 1), (2, 1), (1, 3)])
    assert not metrics.d_separated(collider, 0, 2, {3})

    with pytest.raises(ValueError):
        metrics.d_separated(chain, 0, 2, {0})


@pytest.mark.parametrize("n", [2, 3])
def test_metrics_against_oracles(n):
    dags = _all_dags(n)
    for a, b in itertools.product(dags, repeat=2):
        assert metrics.shd(a, b) == _shd_oracle(a, b)
        assert metrics.f1(a, b) == pytest.approx(_f1_oracle(a, b))
        assert metrics.sid(a, b) == _sid_oracle(a, b)


@pytest.mark.parametrize("n", [3, 4])
def test_d_separation_against_oracle(n):
    for graph in _all_dags(n):
        for x, y in itertools.combinations(range(n), 2):
            rest = [v for v in range(n) if v not in (x, y)]
            for size in range(len(rest) + 1):
                for Z in itertools.combinations(rest, size):
                    Z = set(Z)
                    assert metrics.d_separated(graph, x, y, Z) == _d_separated_oracle(
                        graph, x, y, Z
                    )


@pytest.mark.slow
def test_metrics_against_oracles_four_nodes():
    dags = _all_dags(4)
    assert len(dags) == 543
    for a, b in itertools.product(dags, repeat=2):
        assert metrics.shd(a, b) == _shd_oracle(a, b)
        assert metrics.f1(a, b) == pytest.approx(_f1_oracle(a, b))
    # graphs hold arrays, so the cache keys on their position in ``dags``
    index = {id(g): k for k, g in enumerate(dags)}
    cached = functools.lru_cache(maxsize=None)(
        lambda k, i, j, Z: _valid_adjustment_oracle(dags[k], i, j, Z)
    )

    def valid(truth, i, j, Z):
        return cached(index[id(truth)], i, j, Z)

    for a, b in itertools.product(dags, repeat=2):
        assert metrics.sid(a, b) == _sid_oracle(a, b, valid)


def test_sid_of_itself():
    for seed in range(100):
        graph = generators.gen_er(8, 0.3, seed).graph
        assert metrics.sid(graph, graph) == 0


def test_break_cycles():
    graph = _graph(3, [(0, 1), (1, 2), (2, 0)])
    weights = np.zeros((3, 3))
    weights[0, 1], weights[1, 2], weights[2, 0] = 0.9, 0.4, 0.7
    acyclic = metrics.break_cycles(graph, weights)
    assert acyclic.is_acyclic()
    assert acyclic.edges() == [(0, 1), (2, 0)]
