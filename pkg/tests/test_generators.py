import numpy as np
import pytest

from holograph.bench import generators
from holograph.causal_model import BinaryGraph, Context


def test_er_is_seeded_dag():
    first = generators.gen_er(30, 0.2, seed=5)
    second = generators.gen_er(30, 0.2, seed=5)
    np.testing.assert_array_equal(first.graph.adjacency, second.graph.adjacency)
    assert first.graph.is_acyclic()
    assert first.graph.n_edges > 0
    assert generators.gen_er(30, 1e-9, seed=5).graph.n_edges == 0
    assert not np.array_equal(
        first.graph.adjacency, generators.gen_er(30, 0.2, seed=6).graph.adjacency
    )


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1])
def test_er_invalid_probability(p):
    with pytest.raises(ValueError):
        generators.gen_er(5, p, seed=0)


def test_sf():
    assert generators.gen_sf(2, 2.0, seed=3).graph.edges() == [(0, 1)]

    truth = generators.gen_sf(50, 2.0, seed=3)
    assert truth.graph.is_acyclic()
    assert truth.graph.n_edges == 49
    # edges run from older to newer nodes
    assert all(a < b for a, b in truth.graph.edges())

    assert generators.gen_sf(50, 4.0, seed=3).graph.n_edges == 2 * 50 - 3
    with pytest.raises(ValueError):
        generators.gen_sf(10, 0.5, seed=3)


def test_latent():
    truth, full = generators.gen_latent(20, 3, seed=11)
    assert truth.graph.n == 20
    assert truth.graph.is_acyclic()
    assert truth.latent_pairs
    assert all(0 <= a < b < 20 for a, b in truth.latent_pairs)

    assert full.n == 23
    for h in range(20, 23):
        assert np.count_nonzero(full.W[h, :20]) >= 2
    magnitudes = np.abs(full.W[full.W != 0])
    assert np.all((magnitudes >= 0.5) & (magnitudes <= 0.9))

    again, _ = generators.gen_latent(20, 3, seed=11)
    np.testing.assert_array_equal(again.graph.adjacency, truth.graph.adjacency)
    assert again.latent_pairs == truth.latent_pairs

    with pytest.raises(ValueError):
        generators.gen_latent(20, 0, seed=11)


def test_ground_truth_validation():
    cyclic = np.zeros((2, 2), dtype=bool)
    cyclic[0, 1] = cyclic[1, 0] = True
    with pytest.raises(ValueError):
        generators.GroundTruth(BinaryGraph(Context.range(2), cyclic))
    with pytest.raises(ValueError):
        generators.GroundTruth(BinaryGraph.empty(Context.range(2)), latent_pairs=((0, 5),))
