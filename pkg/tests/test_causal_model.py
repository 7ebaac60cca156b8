import numpy as np
import pytest

from holograph import causal_model
from holograph.causal_model import BinaryGraph, CausalState, Context


def test_context():
    ctx = Context.of([5, 1, 3, 3])
    assert ctx.ids == (1, 3, 5)
    assert len(ctx) == 3
    assert 3 in ctx
    assert ctx.positions([5, 1]).tolist() == [2, 0]
    assert ctx.intersection(Context((3, 7))) == Context((3,))
    assert ctx.intersection(Context((0,))) is None
    assert ctx.difference(Context((1, 3, 5))) is None

    with pytest.raises(causal_model.InvalidContext):
        Context((2, 1))
    with pytest.raises(causal_model.InvalidContext):
        Context(())
    with pytest.raises(causal_model.InvalidContext):
        ctx.positions([4])


def test_new_state():
    state = causal_model.new_state(3, 0.0, 42)
    np.testing.assert_array_equal(state.W, np.zeros((3, 3)))
    np.testing.assert_array_equal(state.L, np.eye(3))

    single = causal_model.new_state(1, 0.5, 7)
    np.testing.assert_array_equal(single.W, [[0.0]])
    np.testing.assert_array_equal(single.L, [[1.0]])

    a = causal_model.new_state(6, 0.3, 11)
    b = causal_model.new_state(6, 0.3, 11)
    np.testing.assert_array_equal(a.W, b.W)
    np.testing.assert_array_equal(a.L, b.L)
    assert np.all(np.diag(a.W) == 0)
    assert np.max(np.abs(a.W)) <= 0.3

    with pytest.raises(causal_model.InvalidDimension):
        causal_model.new_state(0, 0.1, 0)


def test_state_invariants():
    W = np.ones((2, 2))
    L = np.array([[-2.0, 5.0], [1.0, 3.0]])
    state = CausalState(Context.range(2), W, L)
    np.testing.assert_array_equal(np.diag(state.W), [0.0, 0.0])
    # upper part dropped, negative column flipped
    np.testing.assert_array_equal(state.L, [[2.0, 0.0], [-1.0, 3.0]])
    assert not state.W.flags.writeable

    with pytest.raises(causal_model.InvalidDimension):
        CausalState(Context.range(3), W, L)


def test_covariance():
    state = CausalState(Context.range(2), np.zeros((2, 2)), np.eye(2))
    np.testing.assert_array_equal(causal_model.covariance(state), np.eye(2))

    state = CausalState(Context.range(2), np.zeros((2, 2)), [[1, 0], [2, 1]])
    np.testing.assert_array_equal(causal_model.covariance(state), [[1, 2], [2, 5]])


def test_state_dict():
    state = causal_model.new_state(4, 0.5, 3, context=Context((2, 4, 6, 8)))
    back = CausalState.from_dict(state.to_dict())
    assert back.context == state.context
    np.testing.assert_array_equal(back.W, state.W)
    np.testing.assert_array_equal(back.L, state.L)


def test_discretize():
    W = np.zeros((2, 2))
    W[0, 1] = 0.29
    state = CausalState(Context.range(2), W, np.eye(2))
    assert causal_model.discretize(state, 0.3).n_edges == 0
    W[0, 1] = 0.31
    state = CausalState(Context.range(2), W, np.eye(2))
    assert causal_model.discretize(state, 0.3).edges() == [(0, 1)]

    W[0, 1] = 0.02
    state = CausalState(Context.range(2), W, np.eye(2))
    assert causal_model.discretize(state, 0.01).edges() == [(0, 1)]

    empty = causal_model.new_state(5, 0.0, 0)
    assert causal_model.discretize(empty, 0.3).n_edges == 0

    with pytest.raises(ValueError):
        causal_model.discretize(empty, 0.0)


def test_frobenius_norm():
    assert causal_model.frobenius_norm(np.zeros((3, 3))) == 0.0
    assert causal_model.frobenius_norm([[3, 4], [0, 0]]) == 5.0


def test_graph_traversal():
    # 0 -> 1 -> 2, 3 isolated
    adjacency = np.zeros((4, 4), dtype=bool)
    adjacency[0, 1] = adjacency[1, 2] = True
    graph = BinaryGraph(Context.range(4), adjacency)
    assert graph.descendants(0) == {0, 1, 2}
    assert graph.ancestors(2) == {0, 1, 2}
    assert graph.parents(1) == [0]
    assert graph.children(3) == []
    assert graph.is_acyclic()

    adjacency[2, 0] = True
    cyclic = BinaryGraph(Context.range(4), adjacency)
    assert sorted(cyclic.find_cycle()) == [0, 1, 2]


def test_stack_states():
    states = [causal_model.new_state(3, 0.2, s) for s in range(2)]
    params = causal_model.stack_states(states)
    params[0][0][0, 0] = 1.0
    back = causal_model.unstack_states([s.context for s in states], params)
    assert back[0].W[0, 0] == 0.0
    np.testing.assert_array_equal(back[1].W, states[1].W)
