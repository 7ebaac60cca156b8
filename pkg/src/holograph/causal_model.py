# -*- coding: utf-8 -*-
"""Causal states over variable contexts.

A causal state is a linear SEM section ``(W, L)`` over an ordered context of
variable indices, with ``W[i, j]`` the weight of the directed edge ``i -> j``
(row is the source) and ``M = L L^T`` the error covariance.

"""
import dataclasses
from collections.abc import Iterable, Sequence
from typing import Optional

import numpy as np
import numpy.typing as npt


class InvalidDimension(ValueError):
    """Requested state or matrix has an invalid size."""


class InvalidContext(ValueError):
    """Context is malformed, or not contained where it should be."""


@dataclasses.dataclass(frozen=True)
class Context:
    """Ordered set of distinct variable indices.

    Attributes
    ----------
    ids: tuple(int)
        strictly increasing variable indices

    """

    ids: tuple[int, ...]

    def __post_init__(self):
        ids = tuple(int(i) for i in self.ids)
        if len(ids) == 0:
            raise InvalidContext("Context must contain at least one variable")
        if any(a >= b for a, b in zip(ids, ids[1:])):
            raise InvalidContext(f"Context ids must be strictly increasing, got {ids}")
        object.__setattr__(self, "ids", ids)

    @classmethod
    def of(cls, ids: Iterable[int]) -> "Context":
        """Build a context from any iterable, sorting and deduplicating."""
        return cls(tuple(sorted(set(int(i) for i in ids))))

    @classmethod
    def range(cls, n: int) -> "Context":
        """Context ``0, ..., n - 1``."""
        return cls(tuple(range(n)))

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def __contains__(self, item) -> bool:
        return item in self.ids

    def issubset(self, other: "Context") -> bool:
        return set(self.ids) <= set(other.ids)

    def positions(self, subset: Iterable[int]) -> np.ndarray:
        """Local positions of ``subset`` ids inside this context.

        Raises
        ------
        InvalidContext
            if any id of ``subset`` is not part of the context

        """
        lookup = {v: k for k, v in enumerate(self.ids)}
        try:
            return np.array([lookup[i] for i in subset], dtype=int)
        except KeyError as err:
            raise InvalidContext(
                f"Variable {err.args[0]} is not part of context {self.ids}"
            ) from err

    def intersection(self, other: "Context") -> Optional["Context"]:
        """Common ids, ``None`` when disjoint."""
        common = set(self.ids) & set(other.ids)
        return Context.of(common) if common else None

    def difference(self, other: "Context") -> Optional["Context"]:
        """Ids not in ``other``, ``None`` when nothing is left."""
        rest = set(self.ids) - set(other.ids)
        return Context.of(rest) if rest else None


def _frozen(array: npt.ArrayLike) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


def canonical_factor(L: np.ndarray) -> np.ndarray:
    """Lower-triangular part of ``L``, columns flipped to nonnegative diagonal.

    Flipping a column sign leaves ``L L^T`` unchanged.

    """
    L = np.tril(L)
    signs = np.where(np.diag(L) < 0, -1.0, 1.0)
    return L * signs[np.newaxis, :]


@dataclasses.dataclass(frozen=True)
class CausalState:
    """Presheaf section: edge weights and Cholesky factor of the error covariance.

    Construction enforces the representation invariants: ``diag(W) = 0``, ``L``
    lower-triangular with nonnegative diagonal. Arrays are stored read-only.

    Attributes
    ----------
    context: Context
        the variables the state is defined over
    W: np.ndarray
        edge weights, ``W[i, j]`` for ``i -> j``
    L: np.ndarray
        lower-triangular Cholesky factor of the error covariance

    """

    context: Context
    W: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        n = len(self.context)
        W = np.array(self.W, dtype=float)
        L = np.array(self.L, dtype=float)
        if W.shape != (n, n) or L.shape != (n, n):
            raise InvalidDimension(
                f"Expected {n}x{n} matrices for context {self.context.ids}, "
                f"got W {W.shape} and L {L.shape}"
            )
        np.fill_diagonal(W, 0.0)
        object.__setattr__(self, "W", _frozen(W))
        object.__setattr__(self, "L", _frozen(canonical_factor(L)))

    @property
    def n(self) -> int:
        return len(self.context)

    @property
    def M(self) -> np.ndarray:
        return covariance(self)

    def to_dict(self) -> dict:
        """Serializable representation, exact for finite doubles."""
        return dict(
            context=list(self.context.ids), W=self.W.tolist(), L=self.L.tolist()
        )

    @classmethod
    def from_dict(cls, data: dict) -> "CausalState":
        return cls(Context(tuple(data["context"])), data["W"], data["L"])


@dataclasses.dataclass(frozen=True)
class BinaryGraph:
    """Directed graph over a context, as a boolean adjacency matrix."""

    context: Context
    adjacency: np.ndarray

    def __post_init__(self):
        n = len(self.context)
        adjacency = np.array(self.adjacency, dtype=bool)
        if adjacency.shape != (n, n):
            raise InvalidDimension(
                f"Expected {n}x{n} adjacency, got {adjacency.shape}"
            )
        np.fill_diagonal(adjacency, False)
        adjacency.flags.writeable = False
        object.__setattr__(self, "adjacency", adjacency)

    @classmethod
    def empty(cls, context: Context) -> "BinaryGraph":
        n = len(context)
        return cls(context, np.zeros((n, n), dtype=bool))

    @property
    def n(self) -> int:
        return len(self.context)

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum())

    def edges(self) -> list[tuple[int, int]]:
        """Edges as pairs of local positions, in row-major order."""
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adjacency))]

    def parents(self, v: int) -> list[int]:
        return np.flatnonzero(self.adjacency[:, v]).tolist()

    def children(self, v: int) -> list[int]:
        return np.flatnonzero(self.adjacency[v, :]).tolist()

    def descendants(self, v: int) -> set[int]:
        """Nodes reachable from ``v`` along directed edges, ``v`` included."""
        seen = {v}
        stack = [v]
        while stack:
            u = stack.pop()
            for c in self.children(u):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def ancestors(self, v: int) -> set[int]:
        """Nodes with a directed path into ``v``, ``v`` included."""
        seen = {v}
        stack = [v]
        while stack:
            u = stack.pop()
            for p in self.parents(u):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def find_cycle(self) -> Optional[list[int]]:
        """Return the nodes of one directed cycle, or ``None`` if acyclic.

        Iterative depth-first search with white/grey/black coloring.

        """
        white, grey, black = 0, 1, 2
        color = [white] * self.n
        for root in range(self.n):
            if color[root] != white:
                continue
            path = [root]
            iterators = [iter(self.children(root))]
            color[root] = grey
            while iterators:
                child = next(iterators[-1], None)
                if child is None:
                    color[path.pop()] = black
                    iterators.pop()
                    continue
                if color[child] == grey:
                    return path[path.index(child) :]
                if color[child] == white:
                    color[child] = grey
                    path.append(child)
                    iterators.append(iter(self.children(child)))
        return None

    def is_acyclic(self) -> bool:
        return self.find_cycle() is None


def new_state(
    n: int, init_scale: float, seed: int, context: Optional[Context] = None
) -> CausalState:
    """Draw a fresh causal state.

    Parameters
    ----------
    n: int
        number of variables
    init_scale: float
        off-diagonal weights are uniform in ``[-init_scale, init_scale]``
    seed: int
        seed of the generator, the result is a pure function of the arguments
    context: Context or None
        variables to attach, default ``0, ..., n - 1``

    Returns
    -------
    CausalState
        state with random ``W`` and ``L = I``

    """
    if n < 1:
        raise InvalidDimension(f"A causal state needs at least one variable, got {n}")
    if init_scale < 0:
        raise ValueError(f"init_scale must be nonnegative, got {init_scale}")
    if context is None:
        context = Context.range(n)
    elif len(context) != n:
        raise InvalidDimension(f"Context of size {len(context)} given for n={n}")

    rng = np.random.default_rng(seed)
    W = rng.uniform(-init_scale, init_scale, size=(n, n))
    return CausalState(context, W, np.eye(n))


def covariance(state: CausalState) -> np.ndarray:
    """Error covariance ``M = L L^T``, exactly symmetric."""
    M = state.L @ state.L.T
    return (M + M.T) / 2


def discretize(state: CausalState, threshold: float) -> BinaryGraph:
    """Keep edges whose weight magnitude reaches ``threshold``."""
    if threshold <= 0:
        raise ValueError(f"Discretization threshold must be positive, got {threshold}")
    return BinaryGraph(state.context, np.abs(state.W) >= threshold)


def frobenius_norm(W: npt.ArrayLike) -> float:
    return float(np.sqrt(np.sum(np.square(W))))


def stack_states(states: Sequence[CausalState]) -> list[tuple[np.ndarray, np.ndarray]]:
    """Writable copies of the parameters of each state."""
    return [(np.array(s.W), np.array(s.L)) for s in states]


def unstack_states(
    contexts: Sequence[Context], params: Sequence[tuple[np.ndarray, np.ndarray]]
) -> list[CausalState]:
    """Inverse of `stack_states`, re-imposing the state invariants."""
    return [CausalState(c, W, L) for c, (W, L) in zip(contexts, params)]
