# -*- coding: utf-8 -*-
"""Presheaf axioms, checked empirically on causal states.

Identity, Transitivity and Gluing are exact properties of the latent
projection on acyclic states; Locality is expected to fail, since the
restrictions to a cover do not pin down covariance entries of variable pairs
that never share a part.

"""
import concurrent.futures
import dataclasses
import enum
import logging
import math
from collections.abc import Callable, Sequence
from typing import Optional

import numpy as np
import pandas as pd
import scipy.optimize
import xarray as xr

from . import causal_model, latent_projection
from .causal_model import CausalState, Context
from .latent_projection import EPS, Projection

logger = logging.getLogger(__name__)

THRESHOLD = 1e-6
"""Pass threshold of every axiom check."""

COMPATIBILITY_LIMIT = 0.1
GLUE_STEPS = 200
GLUE_TOL = 1e-10
DIVERGED = 1e12
"""Residual reported for trial points whose hidden blocks diverge."""


class InvalidNesting(ValueError):
    """Contexts are not nested as ``Z <= V <= U``."""


class IncompatibleSections(ValueError):
    """Local sections disagree on their overlaps beyond tolerance."""


@dataclasses.dataclass(frozen=True)
class ContextCover:
    """Family of contexts covering a ground context.

    Attributes
    ----------
    ground: Context
        the covered context
    parts: tuple(Context)
        the cover members, each contained in ``ground``
    pairwise_intersections: tuple
        ``(i, j, V_ij)`` for every ``i < j`` with nonempty overlap

    """

    ground: Context
    parts: tuple[Context, ...]
    pairwise_intersections: tuple[tuple[int, int, Context], ...] = dataclasses.field(
        init=False, repr=False
    )

    def __post_init__(self):
        parts = tuple(self.parts)
        if len(parts) == 0:
            raise causal_model.InvalidContext("A cover needs at least one part")
        covered = set()
        for part in parts:
            if not part.issubset(self.ground):
                raise causal_model.InvalidContext(
                    f"Part {part.ids} is not contained in {self.ground.ids}"
                )
            covered |= set(part.ids)
        if covered != set(self.ground.ids):
            missing = sorted(set(self.ground.ids) - covered)
            raise causal_model.InvalidContext(f"Parts do not cover variables {missing}")

        intersections = []
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                common = parts[i].intersection(parts[j])
                if common is not None:
                    intersections.append((i, j, common))
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "pairwise_intersections", tuple(intersections))

    @classmethod
    def trivial(cls, ground: Context) -> "ContextCover":
        return cls(ground, (ground,))

    def __len__(self) -> int:
        return len(self.parts)


def random_cover(
    ground: Context, rng: np.random.Generator, fraction: float = 0.6
) -> ContextCover:
    """Random parts of size ``ceil(fraction * n)`` until the ground is covered.

    At least three parts are drawn for ``n >= 30``.

    """
    n = len(ground)
    size = max(1, math.ceil(fraction * n))
    min_parts = 3 if n >= 30 else 1
    ids = np.array(ground.ids)
    parts = []
    covered = set()
    while len(covered) < n or len(parts) < min_parts:
        part = Context.of(rng.choice(ids, size=size, replace=False))
        parts.append(part)
        covered |= set(part.ids)
    return ContextCover(ground, tuple(parts))


def overlapping_cover(
    ground: Context,
    n_parts: int = 3,
    fraction: float = 0.6,
    min_overlap: int = 2,
    seed: int = 0,
) -> ContextCover:
    """Circular windows over a random ordering of the ground variables.

    Consecutive windows (including last-to-first) share at least
    ``min_overlap`` variables. Grounds too small for ``n_parts`` windows get the
    trivial cover.

    """
    n = len(ground)
    step = math.ceil(n / n_parts)
    size = min(n, max(math.ceil(fraction * n), step + min_overlap))
    if n_parts < 2 or size >= n:
        return ContextCover.trivial(ground)

    order = np.random.default_rng(seed).permutation(np.array(ground.ids))
    parts = tuple(
        Context.of(order[(k * step + np.arange(size)) % n]) for k in range(n_parts)
    )
    return ContextCover(ground, parts)


class Axiom(enum.Enum):
    IDENTITY = "Identity"
    TRANSITIVITY = "Transitivity"
    LOCALITY = "Locality"
    GLUING = "Gluing"


@dataclasses.dataclass(frozen=True)
class AxiomReport:
    """Outcome of one axiom check.

    ``n``, ``seed`` and ``label`` are filled when the report belongs to a suite
    cell.

    """

    axiom: Axiom
    error: float
    threshold: float = THRESHOLD
    n: Optional[int] = None
    seed: Optional[int] = None
    label: Optional[str] = None

    def __post_init__(self):
        if not self.error >= 0:
            raise ValueError(f"Axiom error must be a nonnegative number, got {self.error}")

    @property
    def passed(self) -> bool:
        return self.error < self.threshold

    def to_dict(self) -> dict:
        return dict(
            n=self.n,
            seed=self.seed,
            label=self.label,
            axiom=self.axiom.value,
            error=self.error,
            threshold=self.threshold,
            passed=self.passed,
        )


def _state_distance(a_W, a_M, b_W, b_M) -> tuple[float, float]:
    return causal_model.frobenius_norm(a_W - b_W), causal_model.frobenius_norm(a_M - b_M)


def check_identity(state: CausalState) -> AxiomReport:
    """Max-abs change of ``(W, M)`` under projection onto the whole context."""
    image = latent_projection.project(state, state.context)
    error = max(
        float(np.max(np.abs(image.W - state.W))),
        float(np.max(np.abs(causal_model.covariance(image) - causal_model.covariance(state)))),
    )
    return AxiomReport(Axiom.IDENTITY, error)


def check_transitivity(
    state: CausalState, V: Context, Z: Context, eps: float = EPS
) -> AxiomReport:
    """Compare direct projection onto ``Z`` with the two-step one through ``V``.

    The two agree for acyclic states. Projections zero the diagonal, so a cycle
    from a variable of ``V - Z`` through variables outside ``V`` is kept by the
    direct projection and dropped by the intermediate one.

    Raises
    ------
    InvalidNesting
        unless ``Z <= V <= state.context``

    """
    if not (Z.issubset(V) and V.issubset(state.context)):
        raise InvalidNesting(
            f"Expected Z <= V <= U, got Z={Z.ids}, V={V.ids}, U={state.context.ids}"
        )
    direct = latent_projection.project(state, Z, eps)
    composed = latent_projection.project(latent_projection.project(state, V, eps), Z, eps)
    error = max(
        _state_distance(
            direct.W,
            causal_model.covariance(direct),
            composed.W,
            causal_model.covariance(composed),
        )
    )
    return AxiomReport(Axiom.TRANSITIVITY, error)


def average_sections(
    sections: Sequence[CausalState], cover: ContextCover
) -> tuple[np.ndarray, np.ndarray]:
    """Consensus global ``(W, M)`` over the cover ground.

    Each entry averages the sections whose context holds both variables; pairs
    never sharing a part stay zero.

    """
    n = len(cover.ground)
    W = np.zeros((n, n))
    M = np.zeros((n, n))
    counts = np.zeros((n, n))
    for section, part in zip(sections, cover.parts):
        if section.context != part:
            raise causal_model.InvalidContext(
                f"Section over {section.context.ids} does not match part {part.ids}"
            )
        pos = cover.ground.positions(part)
        block = np.ix_(pos, pos)
        W[block] += section.W
        M[block] += causal_model.covariance(section)
        counts[block] += 1
    seen = counts > 0
    W[seen] /= counts[seen]
    M[seen] /= counts[seen]
    return W, M


def compatibility(
    sections: Sequence[CausalState], cover: ContextCover, eps: float = EPS
) -> float:
    """Largest disagreement of two sections projected onto their overlap."""
    worst = 0.0
    for i, j, common in cover.pairwise_intersections:
        a = latent_projection.projection_of(sections[i], common, eps)
        b = latent_projection.projection_of(sections[j], common, eps)
        dW, dM = _state_distance(a.W, a.M, b.W, b.M)
        worst = max(worst, math.hypot(dW, dM))
    return worst


class _Packing:
    """Flat vector of the free parameters: off-diagonal ``W``, lower ``L``."""

    def __init__(self, n: int):
        self.n = n
        self.w_index = np.nonzero(~np.eye(n, dtype=bool))
        self.l_index = np.tril_indices(n)
        self.split = self.w_index[0].size

    def pack(self, W: np.ndarray, L: np.ndarray) -> np.ndarray:
        return np.concatenate([W[self.w_index], L[self.l_index]])

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        W = np.zeros((self.n, self.n))
        L = np.zeros((self.n, self.n))
        W[self.w_index] = x[: self.split]
        L[self.l_index] = x[self.split :]
        return W, L


def _glue_objective(
    W: np.ndarray,
    L: np.ndarray,
    locals: Sequence[CausalState],
    cover: ContextCover,
    eps: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Stacked projection residual and its gradient on ``(W, L)``."""
    M = L @ L.T
    M = (M + M.T) / 2
    value = 0.0
    grad_W = np.zeros_like(W)
    grad_M = np.zeros_like(M)
    everything = np.arange(len(cover.ground))
    for local, part in zip(locals, cover.parts):
        obs = cover.ground.positions(part)
        hid = np.setdiff1d(everything, obs)
        proj = Projection(W, M, obs, hid, eps)
        rW = proj.W - local.W
        rM = proj.M - causal_model.covariance(local)
        value += float(np.sum(rW**2) + np.sum(rM**2))
        dW, dM = proj.pullback(2 * rW, 2 * rM)
        grad_W += dW
        grad_M += dM
    np.fill_diagonal(grad_W, 0.0)
    grad_L = np.tril((grad_M + grad_M.T) @ L)
    return value, grad_W, grad_L


def glue_sections(
    locals: Sequence[CausalState],
    cover: ContextCover,
    eps: float = EPS,
    steps: int = GLUE_STEPS,
    tol: float = GLUE_TOL,
) -> tuple[CausalState, AxiomReport]:
    """Glue local sections into the global state that best reproduces them.

    The global state minimizes ``sum_i ||rho_{U_i}(global) - locals[i]||_F^2``
    (over both ``W`` and ``M``). It starts from the averaged overlapping entries
    and is refined by L-BFGS on the exact gradient of the stacked residual.

    Parameters
    ----------
    locals: sequence of CausalState
        one section per cover part, over that part
    cover: ContextCover
        the cover, whose ground is the context of the result
    eps: float
        projection regularization
    steps: int
        maximum number of refinement iterations
    tol: float
        stop once an iteration improves the residual by less than this

    Returns
    -------
    CausalState
        the glued global section
    AxiomReport
        Gluing report, whose error is the residual at the optimum

    Raises
    ------
    IncompatibleSections
        if two sections disagree on an overlap by more than 0.1

    """
    if len(locals) != len(cover.parts):
        raise ValueError(f"Got {len(locals)} sections for {len(cover.parts)} parts")
    if len(cover.parts) == 1:
        local = locals[0]
        if local.context != cover.ground:
            raise causal_model.InvalidContext(
                f"Section over {local.context.ids} does not match {cover.ground.ids}"
            )
        return local, AxiomReport(Axiom.GLUING, 0.0)

    disagreement = compatibility(locals, cover, eps)
    if disagreement > COMPATIBILITY_LIMIT:
        raise IncompatibleSections(
            f"Sections disagree on overlaps by {disagreement:.3g} > {COMPATIBILITY_LIMIT}"
        )
    if disagreement > THRESHOLD:
        logger.warning("Gluing sections compatible only up to %.3g", disagreement)

    W0, M0 = average_sections(locals, cover)
    packing = _Packing(len(cover.ground))

    def objective(x):
        W, L = packing.unpack(x)
        try:
            value, grad_W, grad_L = _glue_objective(W, L, locals, cover, eps)
        except latent_projection.NonConvergentHiddenBlock:
            # pushes the line search back
            return DIVERGED, np.zeros_like(x)
        return value, packing.pack(grad_W, grad_L)

    result = scipy.optimize.minimize(
        objective,
        packing.pack(W0, latent_projection.refactor(M0, eps)),
        jac=True,
        method="L-BFGS-B",
        options=dict(maxiter=steps, ftol=tol, gtol=1e-12),
    )
    logger.debug(
        "Gluing over %d parts: %d iterations, residual %.3g (%s)",
        len(cover.parts),
        result.nit,
        result.fun,
        result.message,
    )
    W, L = packing.unpack(result.x)
    glued = CausalState(cover.ground, W, L)
    residual, _, _ = _glue_objective(glued.W, glued.L, locals, cover, eps)
    return glued, AxiomReport(Axiom.GLUING, residual)


def restrict_to_cover(
    state: CausalState, cover: ContextCover, eps: float = EPS
) -> list[CausalState]:
    return [latent_projection.project(state, part, eps) for part in cover.parts]


def _locality_report(state: CausalState, glued: CausalState) -> AxiomReport:
    dW, dM = _state_distance(
        state.W,
        causal_model.covariance(state),
        glued.W,
        causal_model.covariance(glued),
    )
    return AxiomReport(Axiom.LOCALITY, math.hypot(dW, dM))


def check_locality(
    state: CausalState, cover: ContextCover, eps: float = EPS
) -> AxiomReport:
    """Distance between a state and the gluing of its own restrictions."""
    if cover.ground != state.context:
        raise causal_model.InvalidContext(
            f"Cover ground {cover.ground.ids} differs from context {state.context.ids}"
        )
    glued, _ = glue_sections(restrict_to_cover(state, cover, eps), cover, eps)
    return _locality_report(state, glued)


def random_acyclic_state(
    n: int, rng: np.random.Generator, max_norm: float = 0.9, noise: float = 0.1
) -> CausalState:
    """Dense random DAG state, rescaled so that ``||W||_F <= max_norm``.

    ``L`` is unit lower-triangular with Gaussian entries of scale ``noise``
    below the diagonal.

    """
    order = rng.permutation(n)
    upper = np.triu(rng.standard_normal((n, n)), k=1)
    W = np.zeros((n, n))
    W[np.ix_(order, order)] = upper
    norm = causal_model.frobenius_norm(W)
    if norm > max_norm:
        W *= max_norm / norm
    L = np.eye(n) + noise * np.tril(rng.standard_normal((n, n)), k=-1)
    return CausalState(Context.range(n), W, L)


def nested_contexts(
    ground: Context, rng: np.random.Generator
) -> tuple[Context, Context]:
    """Random ``Z <= V <= ground``, of sizes ``ceil(0.7 n)`` and ``ceil(0.4 n)``."""
    n = len(ground)
    V = Context.of(rng.choice(np.array(ground.ids), size=math.ceil(0.7 * n), replace=False))
    Z = Context.of(rng.choice(np.array(V.ids), size=math.ceil(0.4 * n), replace=False))
    return V, Z


def _suite_cell(n: int, seed: int, label: Optional[str], eps: float) -> list[AxiomReport]:
    rng = np.random.default_rng([n, seed])
    state = random_acyclic_state(n, rng)
    V, Z = nested_contexts(state.context, rng)
    cover = random_cover(state.context, rng)

    glued, gluing = glue_sections(restrict_to_cover(state, cover, eps), cover, eps)
    reports = [
        check_identity(state),
        check_transitivity(state, V, Z, eps),
        _locality_report(state, glued),
        gluing,
    ]
    cell = [dataclasses.replace(r, n=n, seed=seed, label=label) for r in reports]
    logger.info(
        "Suite cell n=%d seed=%d: %s",
        n,
        seed,
        ", ".join(f"{r.axiom.value}={r.error:.3g}" for r in cell),
    )
    return cell


def _run_cell(cell, label, eps, on_done):
    reports = _suite_cell(*cell, label, eps)
    if on_done is not None:
        on_done()
    return reports


def run_exactness_suite(
    sizes: Sequence[int],
    seeds: Sequence[int],
    label: Optional[str] = "X1",
    eps: float = EPS,
    workers: int = 1,
    on_done: Optional[Callable[[], None]] = None,
) -> list[AxiomReport]:
    """Check all four axioms on random states for every ``(n, seed)`` cell.

    Cells are independent and may run on ``workers`` threads; the output order
    is always size-major, then seed, then axiom. ``on_done`` is called after
    every finished cell.

    """
    if len(sizes) == 0 or len(seeds) == 0:
        raise ValueError("The exactness suite needs at least one size and one seed")
    cells = [(n, seed) for n in sizes for seed in seeds]
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda cell: _run_cell(cell, label, eps, on_done), cells))
    return [report for cell in results for report in cell]


def suite_errors(reports: Sequence[AxiomReport]) -> xr.DataArray:
    """Suite errors as a labelled ``n x seed x axiom`` array."""
    sizes = sorted({r.n for r in reports})
    seeds = sorted({r.seed for r in reports})
    axioms = [a.value for a in Axiom]
    errors = xr.DataArray(
        np.full((len(sizes), len(seeds), len(axioms)), np.nan),
        coords=dict(n=sizes, seed=seeds, axiom=axioms),
        dims=("n", "seed", "axiom"),
        name="error",
    )
    for r in reports:
        errors.loc[dict(n=r.n, seed=r.seed, axiom=r.axiom.value)] = r.error
    return errors


def summarize_suite(
    reports: Sequence[AxiomReport], threshold: float = THRESHOLD
) -> pd.DataFrame:
    """Pass rate and mean/std error per size and axiom, one row per size."""
    errors = suite_errors(reports)
    passed = (errors < threshold).where(errors.notnull())
    table = pd.DataFrame(index=pd.Index(errors.n.values, name="n"))
    for axiom in errors.axiom.values:
        table[f"{axiom}_pass_rate"] = passed.sel(axiom=axiom).mean("seed").values
        table[f"{axiom}_mean"] = errors.sel(axiom=axiom).mean("seed").values
        table[f"{axiom}_std"] = errors.sel(axiom=axiom).std("seed").values
    return table
