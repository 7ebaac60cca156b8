# -*- coding: utf-8 -*-
"""Loss terms of the coherence objective and their exact gradients.

The total loss combines

- semantic energy, pulling edge magnitudes toward oracle beliefs,
- descent loss, the disagreement of overlapping sections,
- NOTEARS acyclicity ``tr(exp(W o W)) - n``,
- spectral penalty ``max(0, ||W||_F - (1 - delta))^2``.

Gradients are derived by hand; the projection part goes through
`holograph.latent_projection.Projection.pullback`.

"""
import dataclasses
import logging
from collections.abc import Sequence

import numpy as np
import scipy.linalg

from . import causal_model
from .causal_model import CausalState
from .latent_projection import EPS
from .latent_projection import projection_of
from .sheaf import ContextCover

logger = logging.getLogger(__name__)

W_SAT = 1.0
"""Edge magnitude at which the belief squash saturates."""


class DanglingBelief(KeyError):
    """A belief refers to a variable pair not held by any section."""


class NonFiniteGradient(FloatingPointError):
    """Loss or gradient evaluation produced non-finite values."""

    def __init__(self, message, breakdown=None):
        super().__init__(message)
        self.breakdown = breakdown
        self.trajectory = None


@dataclasses.dataclass(frozen=True)
class LossWeights:
    """Weights of the loss terms (the semantic one included)."""

    lambda_d: float = 1.0
    lambda_a: float = 1.0
    lambda_s: float = 0.1
    lambda_sem: float = 1.0

    def __post_init__(self):
        for field in dataclasses.fields(self):
            if getattr(self, field.name) < 0:
                raise ValueError(f"Loss weight {field.name} must be nonnegative")

    @classmethod
    def from_dict(cls, data: dict) -> "LossWeights":
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class EdgeBelief:
    """Prior on the existence of edge ``i -> j`` (global variable ids)."""

    i: int
    j: int
    belief: float
    confidence: float

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError(f"Belief on a self-loop ({self.i}, {self.j})")
        for name in ("belief", "confidence"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"Belief {name} must lie in [0, 1], got {value}")


@dataclasses.dataclass(frozen=True)
class LossBreakdown:
    semantic: float
    descent: float
    acyclicity: float
    spectral: float
    total: float

    TERMS = ("semantic", "descent", "acyclicity", "spectral", "total")

    @classmethod
    def compose(
        cls,
        weights: LossWeights,
        semantic: float,
        descent: float,
        acyclicity: float,
        spectral: float,
    ) -> "LossBreakdown":
        total = (
            weights.lambda_sem * semantic
            + weights.lambda_d * descent
            + weights.lambda_a * acyclicity
            + weights.lambda_s * spectral
        )
        return cls(semantic, descent, acyclicity, spectral, total)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite([getattr(self, t) for t in self.TERMS])))

    def to_dict(self) -> dict:
        return {t: getattr(self, t) for t in self.TERMS}

    @classmethod
    def from_dict(cls, data: dict) -> "LossBreakdown":
        return cls(**{t: float(data[t]) for t in cls.TERMS})


def _check_sections(sections: Sequence[CausalState], cover: ContextCover):
    if len(sections) != len(cover.parts):
        raise ValueError(f"Got {len(sections)} sections for {len(cover.parts)} parts")
    for section, part in zip(sections, cover.parts):
        if section.context != part:
            raise causal_model.InvalidContext(
                f"Section over {section.context.ids} does not match part {part.ids}"
            )


def _descent(
    sections: Sequence[CausalState], cover: ContextCover, eps: float, with_grad: bool
):
    value = 0.0
    grads = [
        (np.zeros((s.n, s.n)), np.zeros((s.n, s.n))) for s in sections
    ] if with_grad else None
    for i, j, common in cover.pairwise_intersections:
        a = projection_of(sections[i], common, eps)
        b = projection_of(sections[j], common, eps)
        rW = a.W - b.W
        rM = a.M - b.M
        value += float(np.sum(rW**2) + np.sum(rM**2))
        if with_grad:
            for k, proj, sign in ((i, a, 2.0), (j, b, -2.0)):
                dW, dM = proj.pullback(sign * rW, sign * rM)
                grads[k][0][...] += dW
                grads[k][1][...] += dM
    return value, grads


def descent_loss(
    sections: Sequence[CausalState], cover: ContextCover, eps: float = EPS
) -> float:
    """Squared Frobenius disagreement of overlapping sections.

    Sum over part pairs with nonempty intersection of the distance between both
    sections projected onto the intersection, on ``W`` and ``M``.

    """
    _check_sections(sections, cover)
    value, _ = _descent(sections, cover, eps, with_grad=False)
    return value


def acyclicity(W: np.ndarray) -> float:
    """NOTEARS constraint ``tr(exp(W o W)) - n``, zero exactly on DAGs."""
    W = np.asarray(W, dtype=float)
    return float(np.trace(scipy.linalg.expm(W * W)) - W.shape[0])


def acyclicity_grad(W: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    return scipy.linalg.expm(W * W).T * 2 * W


def spectral_penalty(W: np.ndarray, delta: float = 0.1) -> float:
    """Squared excess of ``||W||_F`` over the margin ``1 - delta``."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"Spectral margin delta must lie in (0, 1), got {delta}")
    excess = causal_model.frobenius_norm(W) - (1.0 - delta)
    return max(0.0, excess) ** 2


def spectral_penalty_grad(W: np.ndarray, delta: float = 0.1) -> np.ndarray:
    norm = causal_model.frobenius_norm(W)
    excess = norm - (1.0 - delta)
    if excess <= 0.0:
        return np.zeros_like(W, dtype=float)
    return 2 * excess * np.asarray(W, dtype=float) / norm


def _squash(w: float) -> float:
    return min(abs(w) / W_SAT, 1.0)


def _belief_sites(sections: Sequence[CausalState], belief: EdgeBelief):
    """Sections holding both endpoints, with local positions."""
    sites = []
    for k, section in enumerate(sections):
        if belief.i in section.context and belief.j in section.context:
            a, b = section.context.positions((belief.i, belief.j))
            sites.append((k, int(a), int(b)))
    if not sites:
        raise DanglingBelief(f"No section holds both variables of edge {belief.i}->{belief.j}")
    return sites


def _semantic(
    sections: Sequence[CausalState], beliefs: Sequence[EdgeBelief], with_grad: bool
):
    value = 0.0
    grads = [np.zeros((s.n, s.n)) for s in sections] if with_grad else None
    for belief in beliefs:
        for k, a, b in _belief_sites(sections, belief):
            w = sections[k].W[a, b]
            miss = _squash(w) - belief.belief
            value += belief.confidence * miss**2
            if with_grad and abs(w) < W_SAT:
                grads[k][a, b] += 2 * belief.confidence * miss * np.sign(w) / W_SAT
    return value, grads


def semantic_energy(
    sections: Sequence[CausalState], beliefs: Sequence[EdgeBelief]
) -> float:
    """Confidence-weighted squared gap between squashed edge weights and beliefs.

    Each belief counts once for every section whose context holds both of its
    variables.

    Raises
    ------
    DanglingBelief
        if no section holds both endpoints of some belief

    """
    value, _ = _semantic(sections, beliefs, with_grad=False)
    return value


def total_loss(
    sections: Sequence[CausalState],
    cover: ContextCover,
    beliefs: Sequence[EdgeBelief] = (),
    weights: LossWeights = LossWeights(),
    delta: float = 0.1,
    eps: float = EPS,
) -> LossBreakdown:
    """Weighted composition of all loss terms.

    Acyclicity and spectral penalty are summed over the ``W`` of every section.

    """
    _check_sections(sections, cover)
    descent, _ = _descent(sections, cover, eps, with_grad=False)
    semantic, _ = _semantic(sections, beliefs, with_grad=False)
    return LossBreakdown.compose(
        weights,
        semantic=semantic,
        descent=descent,
        acyclicity=sum(acyclicity(s.W) for s in sections),
        spectral=sum(spectral_penalty(s.W, delta) for s in sections),
    )


def loss_and_gradient(
    sections: Sequence[CausalState],
    cover: ContextCover,
    beliefs: Sequence[EdgeBelief] = (),
    weights: LossWeights = LossWeights(),
    delta: float = 0.1,
    eps: float = EPS,
) -> tuple[LossBreakdown, list[tuple[np.ndarray, np.ndarray]]]:
    """Loss breakdown and exact gradient on ``(W, L)`` of every section.

    ``W`` gradients have zero diagonal, ``L`` gradients are lower-triangular.

    Raises
    ------
    NonFiniteGradient
        if the loss or any gradient entry is not finite

    """
    _check_sections(sections, cover)
    descent, descent_grads = _descent(sections, cover, eps, with_grad=True)
    semantic, semantic_grads = _semantic(sections, beliefs, with_grad=True)
    breakdown = LossBreakdown.compose(
        weights,
        semantic=semantic,
        descent=descent,
        acyclicity=sum(acyclicity(s.W) for s in sections),
        spectral=sum(spectral_penalty(s.W, delta) for s in sections),
    )
    if not breakdown.is_finite():
        raise NonFiniteGradient(f"Non-finite loss {breakdown}", breakdown)

    grads = []
    for section, (dW, dM), sW in zip(sections, descent_grads, semantic_grads):
        gW = (
            weights.lambda_d * dW
            + weights.lambda_sem * sW
            + weights.lambda_a * acyclicity_grad(section.W)
            + weights.lambda_s * spectral_penalty_grad(section.W, delta)
        )
        np.fill_diagonal(gW, 0.0)
        gM = weights.lambda_d * dM
        gL = np.tril((gM + gM.T) @ section.L)
        if not (np.all(np.isfinite(gW)) and np.all(np.isfinite(gL))):
            raise NonFiniteGradient(f"Non-finite gradient at loss {breakdown}", breakdown)
        grads.append((gW, gL))
    return breakdown, grads


def gradient(
    sections: Sequence[CausalState],
    cover: ContextCover,
    beliefs: Sequence[EdgeBelief] = (),
    weights: LossWeights = LossWeights(),
    delta: float = 0.1,
    eps: float = EPS,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Gradient of `total_loss` on ``(W, L)`` of every section."""
    _, grads = loss_and_gradient(sections, cover, beliefs, weights, delta, eps)
    return grads
