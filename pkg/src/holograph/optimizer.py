# -*- coding: utf-8 -*-
"""Natural gradient descent of the coherence objective.

The curvature is a diagonal Fisher estimate, the squared gradient plus a
Tikhonov term, floored from below so that every step stays bounded. A step
that makes a hidden block non-invertible, or increases the total loss, is
retried with half the learning rate.

"""
import dataclasses
import logging
from collections.abc import Callable, Sequence
from typing import Optional, Union

import numpy as np
import xarray as xr

from . import causal_model, latent_projection, objective
from .causal_model import CausalState
from .latent_projection import EPS
from .objective import EdgeBelief, LossBreakdown, LossWeights
from .sheaf import ContextCover

logger = logging.getLogger(__name__)

Params = list[tuple[np.ndarray, np.ndarray]]
OracleHook = Callable[[int, list[CausalState]], Sequence[EdgeBelief]]


@dataclasses.dataclass(frozen=True)
class OptimizerConfig:
    """Optimization hyperparameters.

    Attributes
    ----------
    learning_rate: float
        step size ``eta``
    max_steps: int
        iteration budget
    fisher_tikhonov: float
        Tikhonov term added to the squared gradient
    fisher_floor: float
        lower bound of every Fisher entry
    fisher_decay: float or None
        if set, the squared gradient is averaged exponentially with this decay
    use_natural_gradient: bool
        plain gradient descent when false
    weights: LossWeights
        loss term weights
    delta: float
        spectral margin
    query_interval: int
        steps between two oracle rounds
    tolerance: float
        early stop once the total loss falls below it
    obstruction_window: int
        plateau detection window
    obstruction_tol: float
        relative improvement below which a step counts as a plateau
    max_backtracks: int
        step halvings tried before a step is given up

    """

    learning_rate: float = 0.01
    max_steps: int = 1500
    fisher_tikhonov: float = 1e-4
    fisher_floor: float = 0.01
    fisher_decay: Optional[float] = None
    use_natural_gradient: bool = True
    weights: LossWeights = LossWeights()
    delta: float = 0.1
    eps: float = EPS
    query_interval: int = 50
    tolerance: float = 1e-8
    obstruction_window: int = 50
    obstruction_tol: float = 1e-3
    max_backtracks: int = 30

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.fisher_tikhonov <= 0 or self.fisher_floor <= 0:
            raise ValueError("fisher_tikhonov and fisher_floor must be positive")
        if self.fisher_decay is not None and not 0.0 <= self.fisher_decay < 1.0:
            raise ValueError(f"fisher_decay must lie in [0, 1), got {self.fisher_decay}")
        if self.max_steps < 0 or self.query_interval < 1:
            raise ValueError("max_steps must be nonnegative and query_interval positive")
        if self.max_backtracks < 0:
            raise ValueError(f"max_backtracks must be nonnegative, got {self.max_backtracks}")

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        data = dict(data)
        if "weights" in data:
            data["weights"] = LossWeights.from_dict(data["weights"])
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass
class Trajectory:
    """Loss history of one fit.

    ``steps`` holds the breakdown evaluated before each update, ``final`` the
    one of the returned sections.

    """

    steps: list[LossBreakdown] = dataclasses.field(default_factory=list)
    converged_at: Optional[int] = None
    obstructions: list[int] = dataclasses.field(default_factory=list)
    final: Optional[LossBreakdown] = None

    def __len__(self) -> int:
        return len(self.steps)

    def totals(self) -> list[float]:
        return [b.total for b in self.steps]

    def to_dataset(self) -> xr.Dataset:
        """Per-term loss series, indexed by step."""
        steps = np.arange(len(self.steps))
        ds = xr.Dataset(
            {
                term: ("step", np.array([getattr(b, term) for b in self.steps], dtype=float))
                for term in LossBreakdown.TERMS
            },
            coords=dict(step=steps),
        )
        ds.attrs["converged_at"] = -1 if self.converged_at is None else self.converged_at
        ds.attrs["n_obstructions"] = len(self.obstructions)
        ds.attrs["first_obstruction"] = self.obstructions[0] if self.obstructions else -1
        return ds


@dataclasses.dataclass(frozen=True)
class FisherDiagonal:
    """Diagonal Fisher estimate, one entry per ``W`` and ``L`` parameter.

    ``moments`` keeps the squared-gradient estimate before regularization, for
    exponential averaging.

    """

    entries: list[tuple[np.ndarray, np.ndarray]]
    moments: list[tuple[np.ndarray, np.ndarray]]

    def minimum(self) -> float:
        return min(float(min(fW.min(), fL.min())) for fW, fL in self.entries)


def fisher_diag(
    grad: Params, config: OptimizerConfig, previous: Optional[FisherDiagonal] = None
) -> FisherDiagonal:
    """Entries ``max(g^2 + tikhonov, floor)``, ``g^2`` possibly averaged."""
    moments = []
    for k, (gW, gL) in enumerate(grad):
        mW, mL = gW**2, gL**2
        if config.fisher_decay is not None and previous is not None:
            pW, pL = previous.moments[k]
            decay = config.fisher_decay
            mW = decay * pW + (1 - decay) * mW
            mL = decay * pL + (1 - decay) * mL
        moments.append((mW, mL))
    entries = [
        (
            np.maximum(mW + config.fisher_tikhonov, config.fisher_floor),
            np.maximum(mL + config.fisher_tikhonov, config.fisher_floor),
        )
        for mW, mL in moments
    ]
    return FisherDiagonal(entries, moments)


def _reproject(W: np.ndarray, L: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    np.fill_diagonal(W, 0.0)
    return W, causal_model.canonical_factor(L)


def natural_step(
    params: Params, grad: Params, fisher: FisherDiagonal, eta: float
) -> Params:
    """Preconditioned step ``param - eta * grad / fisher``, then re-projection."""
    return [
        _reproject(W - eta * (gW / fW), L - eta * (gL / fL))
        for (W, L), (gW, gL), (fW, fL) in zip(params, grad, fisher.entries)
    ]


def sgd_step(params: Params, grad: Params, eta: float) -> Params:
    return [
        _reproject(W - eta * gW, L - eta * gL)
        for (W, L), (gW, gL) in zip(params, grad)
    ]


def detect_obstruction(
    trajectory: Union[Trajectory, Sequence[LossBreakdown]],
    window: int = 50,
    rel_tol: float = 1e-3,
) -> list[int]:
    """Steps at which the descent loss plateaus without reaching zero.

    Step ``t`` is flagged when the relative descent improvement over the last
    ``window`` steps is below ``rel_tol`` while the descent loss is still above
    ``1e-6``.

    """
    if window < 2:
        raise ValueError(f"Obstruction window must be at least 2, got {window}")
    steps = trajectory.steps if isinstance(trajectory, Trajectory) else trajectory
    descent = [b.descent for b in steps]
    flagged = []
    for t in range(window, len(descent)):
        before, now = descent[t - window], descent[t]
        if now > 1e-6 and (before - now) / max(before, 1e-12) < rel_tol:
            flagged.append(t)
    return flagged


def fit(
    sections: Sequence[CausalState],
    cover: ContextCover,
    oracle_hook: Optional[OracleHook] = None,
    config: OptimizerConfig = OptimizerConfig(),
    writer=None,
) -> tuple[list[CausalState], Trajectory]:
    """Optimize local sections toward a coherent, acyclic, belief-aligned family.

    The loss never increases between two oracle rounds: rejected steps halve the
    learning rate, accepted ones double it back up to ``config.learning_rate``.
    If no step is accepted after ``config.max_backtracks`` halvings, the fit
    stops early.

    Parameters
    ----------
    sections: sequence of CausalState
        initial sections, one per cover part
    cover: ContextCover
        the cover the sections live on
    oracle_hook: callable or None
        called as ``hook(step, sections)`` at step 0 and every
        ``config.query_interval`` steps, returns the current beliefs
    config: OptimizerConfig
        hyperparameters
    writer: holograph.io.TrajectoryWriter or None
        receives every step breakdown

    Returns
    -------
    list(CausalState)
        the optimized sections
    Trajectory
        loss history, convergence step and plateau flags

    Raises
    ------
    NonFiniteGradient
        on non-finite loss or gradient, with the partial trajectory attached

    """
    contexts = [s.context for s in sections]
    params = causal_model.stack_states(sections)
    trajectory = Trajectory()
    beliefs: list[EdgeBelief] = []
    fisher = None
    eta = config.learning_rate
    # loss and gradient at params, under the current beliefs
    evaluated = None

    def evaluate(candidate: Params, step: int):
        try:
            return objective.loss_and_gradient(
                causal_model.unstack_states(contexts, candidate),
                cover,
                beliefs,
                config.weights,
                config.delta,
                config.eps,
            )
        except objective.NonFiniteGradient as err:
            err.trajectory = trajectory
            logger.error("Non-finite gradient at step %d", step)
            raise

    for step in range(config.max_steps):
        if oracle_hook is not None and step % config.query_interval == 0:
            beliefs = list(oracle_hook(step, causal_model.unstack_states(contexts, params)))
            evaluated = None
        if evaluated is None:
            evaluated = evaluate(params, step)
        breakdown, grad = evaluated

        trajectory.steps.append(breakdown)
        if writer is not None:
            writer.write(breakdown)
        logger.debug(
            "step %d: total %.6g (sem %.3g, desc %.3g, acyc %.3g, spectral %.3g)",
            step,
            breakdown.total,
            breakdown.semantic,
            breakdown.descent,
            breakdown.acyclicity,
            breakdown.spectral,
        )
        if breakdown.total < config.tolerance:
            trajectory.converged_at = step
            break

        if config.use_natural_gradient:
            fisher = fisher_diag(grad, config, fisher)
        # a step is taken only if the hidden blocks stay invertible and the
        # total does not grow, halving eta otherwise
        for _ in range(config.max_backtracks + 1):
            if config.use_natural_gradient:
                trial = natural_step(params, grad, fisher, eta)
            else:
                trial = sgd_step(params, grad, eta)
            try:
                candidate = evaluate(trial, step)
            except latent_projection.NonConvergentHiddenBlock:
                candidate = None
            if candidate is not None and candidate[0].total <= breakdown.total:
                break
            eta /= 2
            logger.debug("Step %d rejected, learning rate halved to %.3g", step, eta)
        else:
            logger.warning("No descent step found after step %d, stopping", step)
            break
        params, evaluated = trial, candidate
        eta = min(config.learning_rate, 2 * eta)

    final = causal_model.unstack_states(contexts, params)
    trajectory.final = objective.total_loss(
        final, cover, beliefs, config.weights, config.delta, config.eps
    )
    trajectory.obstructions = detect_obstruction(
        trajectory, config.obstruction_window, config.obstruction_tol
    )
    if trajectory.obstructions:
        logger.warning(
            "Descent loss plateaus from step %d (%d flagged steps)",
            trajectory.obstructions[0],
            len(trajectory.obstructions),
        )
    return final, trajectory
