import numpy as np
import pytest

from holograph import causal_model, latent_projection
from holograph.causal_model import CausalState, Context


def _random_state(n, rng, scale=0.3):
    W = rng.uniform(-scale, scale, size=(n, n))
    L = np.eye(n) + 0.1 * np.tril(rng.standard_normal((n, n)), k=-1)
    return CausalState(Context.range(n), W, L)


def test_partition_full_context():
    state = _random_state(4, np.random.default_rng(0))
    p = latent_projection.partition(state, state.context)
    assert p.hidden is None
    np.testing.assert_array_equal(p.W_OO, state.W)
    assert p.W_HH.shape == (0, 0)
    assert p.W_OH.shape == (4, 0)

    with pytest.raises(causal_model.InvalidContext):
        latent_projection.partition(state, Context((1, 9)))


def test_partition_symmetric_covariance():
    state = _random_state(5, np.random.default_rng(1))
    p = latent_projection.partition(state, Context((0, 2, 4)))
    assert p.hidden == Context((1, 3))
    np.testing.assert_array_equal(p.M_HO, p.M_OH.T)


def test_absorption_examples():
    W = np.zeros((3, 3))
    W[0, 1] = 0.4
    W[0, 2] = -0.2
    state = CausalState(Context.range(3), W, np.eye(3))
    p = latent_projection.partition(state, Context((0,)))
    np.testing.assert_allclose(latent_projection.absorption(p).A, p.W_OH)

    W = np.array([[0.0, 0.3], [0.0, 0.0]])
    # a single hidden variable cannot carry a self-loop, build the block directly
    p = latent_projection.partition(CausalState(Context.range(2), W, np.eye(2)), Context((0,)))
    p = latent_projection.BlockPartition(**{**p.__dict__, "W_HH": np.array([[0.5]])})
    np.testing.assert_allclose(latent_projection.absorption(p).A, [[0.6]])


def test_nonconvergent_hidden_block():
    W = np.zeros((3, 3))
    W[1, 2] = W[2, 1] = 1.5
    state = CausalState(Context.range(3), W, np.eye(3))
    with pytest.raises(latent_projection.NonConvergentHiddenBlock):
        latent_projection.project(state, Context((0,)))


def test_spectral_radius():
    assert latent_projection.spectral_radius(np.zeros((0, 0))) == 0.0
    assert latent_projection.spectral_radius(np.diag([0.2, -0.7])) == pytest.approx(0.7)
    rotation = 0.5 * np.array([[0.0, -1.0], [1.0, 0.0]])
    assert latent_projection.spectral_radius(rotation) == pytest.approx(0.5)


def test_absorption_neumann_series():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        n = int(rng.integers(4, 12))
        W = rng.standard_normal((n, n))
        np.fill_diagonal(W, 0.0)
        k = int(rng.integers(1, n - 1))
        hid = np.sort(rng.choice(n, size=k, replace=False))
        obs = np.setdiff1d(np.arange(n), hid)
        # a Frobenius norm of 0.6 bounds every power of the hidden block
        norm = np.linalg.norm(W[np.ix_(hid, hid)])
        if norm > 0.6:
            W[np.ix_(hid, hid)] *= 0.6 / norm
        state = CausalState(Context.range(n), W, np.eye(n))
        p = latent_projection.partition(state, Context(tuple(obs)))
        A = latent_projection.absorption(p).A

        series = np.zeros_like(A)
        term = p.W_OH.copy()
        errors = []
        for _ in range(61):
            series += term
            term = term @ p.W_HH
            errors.append(np.linalg.norm(A - series))
        assert errors[-1] < 1e-10
        assert errors[-1] <= errors[10] + 1e-12


def test_project_identity():
    state = _random_state(6, np.random.default_rng(3))
    assert latent_projection.project(state, state.context) is state


def test_project_chain():
    # 0 -> 1 -> 2, hiding the mediator
    W = np.zeros((3, 3))
    W[0, 1] = 0.5
    W[1, 2] = 0.4
    state = CausalState(Context.range(3), W, np.eye(3))
    image = latent_projection.project(state, Context((0, 2)))
    assert image.context == Context((0, 2))
    np.testing.assert_allclose(image.W, [[0.0, 0.2], [0.0, 0.0]], atol=1e-15)
    np.testing.assert_allclose(causal_model.covariance(image), [[1.25, 0.0], [0.0, 1.0]])


def test_refactor_clamps():
    M = np.array([[1.0, 1.0], [1.0, 1.0]])
    L = latent_projection.refactor(M, eps=1e-6)
    np.testing.assert_allclose(L @ L.T, M, atol=1e-5)
    assert np.all(np.diag(L) > 0)


def test_pullback_finite_differences():
    rng = np.random.default_rng(5)
    n = 6
    W = rng.uniform(-0.3, 0.3, size=(n, n))
    np.fill_diagonal(W, 0.0)
    B = rng.standard_normal((n, n))
    M = B @ B.T + n * np.eye(n)
    obs = np.array([0, 2, 3])
    hid = np.array([1, 4, 5])
    gW = rng.standard_normal((3, 3))
    gM = rng.standard_normal((3, 3))

    def scalar(W, M):
        proj = latent_projection.Projection(W, M, obs, hid)
        return np.sum(gW * proj.W) + np.sum(gM * proj.M)

    dW, dM = latent_projection.Projection(W, M, obs, hid).pullback(gW, gM)
    h = 1e-5
    for i in range(n):
        for j in range(n):
            step = np.zeros((n, n))
            step[i, j] = h
            if i != j:
                fd = (scalar(W + step, M) - scalar(W - step, M)) / (2 * h)
                assert dW[i, j] == pytest.approx(fd, abs=1e-6)
            # covariances only move symmetrically
            step = step + step.T if i != j else step
            expected = dM[i, j] + dM[j, i] if i != j else dM[i, i]
            fd = (scalar(W, M + step) - scalar(W, M - step)) / (2 * h)
            assert expected == pytest.approx(fd, abs=1e-6)
