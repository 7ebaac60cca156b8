# -*- coding: utf-8 -*-
"""Algebraic latent projection, the restriction morphism of the presheaf.

Marginalizing the hidden block ``H = U \\ O`` of a state over ``U`` gives

.. math::

    A = W_{OH} (I - W_{HH})^{-1}

    \\tilde{W} = W_{OO} + A W_{HO}

    \\tilde{M} = M_{OO} + A M_{HH} A^T + M_{OH} A^T + A M_{HO}

The inverse is never formed: ``(I - W_HH)`` is LU-factorized once and reused,
both for the forward map and for the reverse-mode derivative in
`Projection.pullback`.

"""
import dataclasses
import logging
import warnings
from typing import Optional

import numpy as np
import scipy.linalg

from . import causal_model
from .causal_model import CausalState, Context

logger = logging.getLogger(__name__)

EPS = 1e-6
"""Regularization for inversions and eigenvalue floor."""

POWER_STEPS = 100
POWER_TOL = 1e-10


class NonConvergentHiddenBlock(ArithmeticError):
    """Spectral radius of the hidden block reaches one, the Neumann series diverges."""


def spectral_radius(
    W: np.ndarray, steps: int = POWER_STEPS, tol: float = POWER_TOL
) -> float:
    """Estimate the spectral radius of a square matrix.

    Power iteration on a fixed pseudo-random start vector. When the iteration
    does not settle within ``steps`` (complex or tied dominant eigenvalues), the
    exact eigenvalues are computed instead.

    """
    k = W.shape[0]
    if k == 0:
        return 0.0

    x = np.random.default_rng(0).standard_normal(k)
    x /= np.linalg.norm(x)
    previous = None
    for _ in range(steps):
        y = W @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
        if previous is not None and abs(norm - previous) <= tol * max(norm, 1.0):
            return float(norm)
        previous = norm

    return float(np.max(np.abs(scipy.linalg.eigvals(W))))


def check_hidden_block(W_HH: np.ndarray):
    """Ensure the Neumann series of ``W_HH`` converges.

    ``||W_HH||_F < 1`` bounds the spectral radius and is accepted directly.

    Raises
    ------
    NonConvergentHiddenBlock
        if the spectral radius is at least one

    """
    if W_HH.size == 0 or causal_model.frobenius_norm(W_HH) < 1.0:
        return
    radius = spectral_radius(W_HH)
    if radius >= 1.0:
        raise NonConvergentHiddenBlock(
            f"Spectral radius of the hidden block is {radius:.6g} >= 1"
        )


@dataclasses.dataclass(frozen=True)
class BlockPartition:
    """Observed/hidden blocks of ``W`` and ``M``.

    ``hidden`` is ``None`` when the observed context is the whole one, in which
    case every hidden block is empty.

    """

    observed: Context
    hidden: Optional[Context]
    W_OO: np.ndarray
    W_OH: np.ndarray
    W_HO: np.ndarray
    W_HH: np.ndarray
    M_OO: np.ndarray
    M_OH: np.ndarray
    M_HO: np.ndarray
    M_HH: np.ndarray


@dataclasses.dataclass(frozen=True)
class AbsorptionMatrix:
    """Total effect of observed variables on hidden ones, through hidden paths."""

    A: np.ndarray


def _split(state: CausalState, observed: Context) -> tuple[np.ndarray, np.ndarray]:
    if not observed.issubset(state.context):
        raise causal_model.InvalidContext(
            f"Observed context {observed.ids} is not contained in {state.context.ids}"
        )
    hidden = state.context.difference(observed)
    obs = state.context.positions(observed)
    hid = (
        state.context.positions(hidden) if hidden is not None else np.zeros(0, dtype=int)
    )
    return obs, hid


def partition(state: CausalState, observed: Context) -> BlockPartition:
    """Split a state into observed and hidden blocks, in context order.

    Raises
    ------
    InvalidContext
        if ``observed`` is not contained in the state context

    """
    obs, hid = _split(state, observed)
    W = state.W
    M = causal_model.covariance(state)
    return BlockPartition(
        observed=observed,
        hidden=state.context.difference(observed),
        W_OO=W[np.ix_(obs, obs)],
        W_OH=W[np.ix_(obs, hid)],
        W_HO=W[np.ix_(hid, obs)],
        W_HH=W[np.ix_(hid, hid)],
        M_OO=M[np.ix_(obs, obs)],
        M_OH=M[np.ix_(obs, hid)],
        M_HO=M[np.ix_(obs, hid)].T,
        M_HH=M[np.ix_(hid, hid)],
    )


class _HiddenSolver:
    """LU factorization of ``I - W_HH``, regularized only if the plain one fails."""

    def __init__(self, W_HH: np.ndarray, eps: float):
        k = W_HH.shape[0]
        system = np.eye(k) - W_HH
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                self.lu = scipy.linalg.lu_factor(system, check_finite=True)
        except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError, ValueError):
            logger.warning(
                "Singular hidden system of size %d, regularizing with eps=%g", k, eps
            )
            self.lu = scipy.linalg.lu_factor(system + eps * np.eye(k))

    def solve(self, rhs: np.ndarray, transposed: bool = False) -> np.ndarray:
        """Solve ``(I - W_HH) X = rhs``, or the transposed system."""
        return scipy.linalg.lu_solve(self.lu, rhs, trans=1 if transposed else 0)


def absorption(p: BlockPartition, eps: float = EPS) -> AbsorptionMatrix:
    """Absorption matrix ``W_OH (I - W_HH)^{-1}`` of a partition.

    Raises
    ------
    NonConvergentHiddenBlock
        if the spectral radius of ``W_HH`` is at least one

    """
    if p.hidden is None:
        return AbsorptionMatrix(np.zeros((len(p.observed), 0)))
    check_hidden_block(p.W_HH)
    solver = _HiddenSolver(p.W_HH, eps)
    return AbsorptionMatrix(solver.solve(p.W_OH.T, transposed=True).T)


class Projection:
    """Latent projection of raw ``(W, M)`` arrays onto observed positions.

    Keeps what is needed by `pullback`, the reverse-mode derivative of the map
    ``(W, M) -> (W~, M~)``, so that loss terms built on projections can be
    differentiated exactly.

    Parameters
    ----------
    W: np.ndarray
        full edge weights
    M: np.ndarray
        full (symmetric) error covariance
    obs: np.ndarray
        observed positions
    hid: np.ndarray
        hidden positions, complement of ``obs``
    eps: float
        regularization used if the hidden system is singular

    """

    def __init__(
        self,
        W: np.ndarray,
        M: np.ndarray,
        obs: np.ndarray,
        hid: np.ndarray,
        eps: float = EPS,
    ):
        self.n = W.shape[0]
        self.obs = obs
        self.hid = hid

        W_OO = W[np.ix_(obs, obs)]
        M_OO = M[np.ix_(obs, obs)]
        if hid.size == 0:
            self.A = np.zeros((obs.size, 0))
            self.W = W_OO.copy()
            np.fill_diagonal(self.W, 0.0)
            self.M = M_OO.copy()
            return

        self.W_HO = W[np.ix_(hid, obs)]
        W_HH = W[np.ix_(hid, hid)]
        self.M_OH = M[np.ix_(obs, hid)]
        self.M_HH = M[np.ix_(hid, hid)]
        check_hidden_block(W_HH)

        self.solver = _HiddenSolver(W_HH, eps)
        A = self.solver.solve(W[np.ix_(obs, hid)].T, transposed=True).T
        self.A = A

        # loops closed through hidden variables are dropped, as in CausalState
        self.W = W_OO + A @ self.W_HO
        np.fill_diagonal(self.W, 0.0)
        cross = self.M_OH @ A.T
        M_proj = M_OO + A @ self.M_HH @ A.T + cross + cross.T
        self.M = (M_proj + M_proj.T) / 2

    def pullback(
        self, grad_W: np.ndarray, grad_M: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Gradients on the full ``(W, M)`` given gradients on ``(W~, M~)``.

        Returns
        -------
        np.ndarray
            gradient with respect to every entry of ``W``
        np.ndarray
            gradient with respect to every entry of ``M``, treating all of them
            as independent

        """
        obs, hid = self.obs, self.hid
        dW = np.zeros((self.n, self.n))
        dM = np.zeros((self.n, self.n))
        grad_M = (grad_M + grad_M.T) / 2
        grad_W = np.array(grad_W, dtype=float)
        np.fill_diagonal(grad_W, 0.0)

        dW[np.ix_(obs, obs)] = grad_W
        dM[np.ix_(obs, obs)] = grad_M
        if hid.size == 0:
            return dW, dM

        A = self.A
        dW[np.ix_(hid, obs)] = A.T @ grad_W
        dM[np.ix_(hid, hid)] = A.T @ grad_M @ A
        dM[np.ix_(obs, hid)] = grad_M @ A
        dM[np.ix_(hid, obs)] = A.T @ grad_M

        # grad_M is symmetric here, so the A M_HH A^T term contributes 2 grad_M A M_HH
        grad_A = (
            grad_W @ self.W_HO.T
            + 2 * grad_M @ A @ self.M_HH
            + 2 * grad_M @ self.M_OH
        )
        # A = W_OH N with N = (I - W_HH)^{-1}
        X = self.solver.solve(grad_A.T).T
        dW[np.ix_(obs, hid)] = X
        dW[np.ix_(hid, hid)] = A.T @ X
        return dW, dM


def refactor(M: np.ndarray, eps: float = EPS) -> np.ndarray:
    """Cholesky factor of a covariance, eigenvalues floored at ``eps``."""
    M = (M + M.T) / 2
    values, vectors = scipy.linalg.eigh(M)
    if values.min() < eps:
        logger.debug(
            "Clamping %d eigenvalue(s) below %g (min %.3g)",
            int(np.sum(values < eps)),
            eps,
            values.min(),
        )
        M = (vectors * np.maximum(values, eps)) @ vectors.T
        M = (M + M.T) / 2
    return scipy.linalg.cholesky(M, lower=True)


def project(state: CausalState, observed: Context, eps: float = EPS) -> CausalState:
    """Restrict a causal state to an observed subcontext.

    Projecting onto the whole context returns the state itself, untouched.

    Raises
    ------
    InvalidContext
        if ``observed`` is not contained in the state context
    NonConvergentHiddenBlock
        if the hidden block does not admit a convergent Neumann series

    """
    obs, hid = _split(state, observed)
    if hid.size == 0:
        return state
    proj = Projection(state.W, causal_model.covariance(state), obs, hid, eps)
    return CausalState(observed, proj.W, refactor(proj.M, eps))


def projection_of(state: CausalState, observed: Context, eps: float = EPS) -> Projection:
    """Differentiable `Projection` of a state (``M~`` left unfactored)."""
    obs, hid = _split(state, observed)
    return Projection(state.W, causal_model.covariance(state), obs, hid, eps)
