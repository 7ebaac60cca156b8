# -*- coding: utf-8 -*-
"""Benchmark runs: ground truth, cover, fit with queries, metrics, records."""
import concurrent.futures
import dataclasses
import enum
import logging
import pathlib
import time
from collections.abc import Callable
from typing import Optional, Union

import numpy as np

from .. import causal_model, io, sheaf
from ..causal_model import BinaryGraph, CausalState
from ..optimizer import OptimizerConfig, fit
from ..query.llm import LLMOracle
from ..query.oracle import SimulatedOracle
from ..query.session import OracleConfig, OracleKind, QuerySession
from . import generators, metrics, sachs

logger = logging.getLogger(__name__)

DEFAULT_SEEDS = (42, 43, 44, 45, 46)
METRICS = ("shd", "f1", "sid")


class Dataset(enum.Enum):
    ER = "er"
    SF = "sf"
    SACHS = "sachs"
    LATENT = "latent"


class Ablation(enum.Enum):
    """Full pipeline, or one component switched off or swapped."""

    FULL = "full"
    A1 = "a1"  # plain gradient descent
    A2 = "a2"  # no descent loss
    A3 = "a3"  # no spectral penalty
    A4 = "a4"  # random query selection
    A5 = "a5"  # fast oracle
    A6 = "a6"  # no oracle


@dataclasses.dataclass(frozen=True)
class CoverConfig:
    n_parts: int = 3
    fraction: float = 0.6
    min_overlap: int = 2

    @classmethod
    def from_dict(cls, data: dict) -> "CoverConfig":
        return cls(**data)


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Everything determining a benchmark run, apart from the oracle's replies."""

    name: str = "er20"
    dataset: Dataset = Dataset.ER
    n: int = 20
    edge_prob: float = 0.15
    avg_degree: float = 2.0
    n_latent: int = 0
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    ablation: Ablation = Ablation.FULL
    optimizer: OptimizerConfig = OptimizerConfig()
    oracle: OracleConfig = OracleConfig()
    cover: CoverConfig = CoverConfig()
    threshold: float = 0.3
    init_scale: float = 0.3
    sachs_path: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if len(self.seeds) == 0:
            raise ValueError("An experiment needs at least one seed")
        if self.dataset is Dataset.SACHS:
            object.__setattr__(self, "n", sachs.N_VARIABLES)
        if self.dataset is Dataset.LATENT and self.n_latent < 1:
            raise ValueError("Latent datasets need n_latent >= 1")
        if self.threshold <= 0:
            raise ValueError(f"Metric threshold must be positive, got {self.threshold}")

    def effective(self) -> "ExperimentConfig":
        """Configuration with the ablation applied."""
        opt, oracle = self.optimizer, self.oracle
        if self.ablation is Ablation.A1:
            opt = dataclasses.replace(opt, use_natural_gradient=False)
        elif self.ablation is Ablation.A2:
            opt = dataclasses.replace(opt, weights=dataclasses.replace(opt.weights, lambda_d=0.0))
        elif self.ablation is Ablation.A3:
            opt = dataclasses.replace(opt, weights=dataclasses.replace(opt.weights, lambda_s=0.0))
        elif self.ablation is Ablation.A4:
            oracle = dataclasses.replace(
                oracle, query=dataclasses.replace(oracle.query, random_selection=True)
            )
        elif self.ablation is Ablation.A5:
            oracle = dataclasses.replace(oracle, fast=True)
        elif self.ablation is Ablation.A6:
            oracle = dataclasses.replace(oracle, kind=OracleKind.NONE)
        return dataclasses.replace(self, optimizer=opt, oracle=oracle)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"Unknown experiment configuration keys {sorted(unknown)}")
        if "dataset" in data:
            data["dataset"] = Dataset(data["dataset"])
        if "ablation" in data:
            data["ablation"] = Ablation(data["ablation"])
        if "optimizer" in data:
            data["optimizer"] = OptimizerConfig.from_dict(data["optimizer"])
        if "oracle" in data:
            data["oracle"] = OracleConfig.from_dict(data["oracle"])
        if "cover" in data:
            data["cover"] = CoverConfig.from_dict(data["cover"])
        return cls(**data)

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["dataset"] = self.dataset.value
        data["ablation"] = self.ablation.value
        data["seeds"] = list(self.seeds)
        data["oracle"] = self.oracle.to_dict()
        return data


PRESETS = {
    "er20": dict(dataset=Dataset.ER, n=20, edge_prob=0.15),
    "er50": dict(dataset=Dataset.ER, n=50, edge_prob=0.15),
    "sf50": dict(dataset=Dataset.SF, n=50, avg_degree=2.0),
    "sachs": dict(dataset=Dataset.SACHS, n=sachs.N_VARIABLES),
    "latent-20-3": dict(dataset=Dataset.LATENT, n=20, n_latent=3),
    "latent-30-5": dict(dataset=Dataset.LATENT, n=30, n_latent=5),
    "latent-50-8": dict(dataset=Dataset.LATENT, n=50, n_latent=8),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    """Named benchmark configuration, with optional field overrides."""
    try:
        fields = PRESETS[name]
    except KeyError as err:
        raise ValueError(f"Unknown dataset preset '{name}', one of {list(PRESETS)}") from err
    return ExperimentConfig(name=name, **{**fields, **overrides})


@dataclasses.dataclass
class SeedResult:
    """Outcome of one seed; ``error`` is set instead of the metrics on failure."""

    seed: int
    shd: Optional[int] = None
    f1: Optional[float] = None
    sid: Optional[int] = None
    final: Optional[dict] = None
    budget: Optional[dict] = None
    trajectory: list = dataclasses.field(default_factory=list)
    converged_at: Optional[int] = None
    obstructions: list = dataclasses.field(default_factory=list)
    n_edges: Optional[int] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SeedResult":
        return cls(**data)


def aggregate(results: list) -> dict:
    """Mean and standard deviation of every metric over successful seeds."""
    done = [r for r in results if r.error is None]
    summary = {}
    for metric in METRICS + ("final_total",):
        if metric == "final_total":
            values = np.array([r.final["total"] for r in done], dtype=float)
        else:
            values = np.array([getattr(r, metric) for r in done], dtype=float)
        summary[metric] = dict(
            mean=float(values.mean()) if values.size else None,
            std=float(values.std()) if values.size else None,
        )
    summary["completed"] = len(done)
    return summary


@dataclasses.dataclass
class ExperimentRecord:
    """Persisted unit of a benchmark run.

    Wall-clock runtimes live in ``runtimes`` and are saved apart, so that the
    record itself only depends on the configuration.

    """

    config: dict
    seeds: list[SeedResult]
    aggregate: dict
    runtimes: dict = dataclasses.field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any(r.error is not None for r in self.seeds)

    def to_dict(self) -> dict:
        return dict(
            config=self.config,
            seeds=[r.to_dict() for r in self.seeds],
            aggregate=self.aggregate,
        )

    @classmethod
    def from_dict(cls, data: dict, runtimes: Optional[dict] = None) -> "ExperimentRecord":
        return cls(
            data["config"],
            [SeedResult.from_dict(r) for r in data["seeds"]],
            data["aggregate"],
            runtimes or {},
        )

    def save(self, out_dir: Union[str, pathlib.Path]) -> pathlib.Path:
        out_dir = pathlib.Path(out_dir)
        io.write_json(dict(runtime_seconds=self.runtimes), out_dir / "timings.json")
        return io.write_json(self.to_dict(), out_dir / "record.json")

    @classmethod
    def load(cls, path: Union[str, pathlib.Path]) -> "ExperimentRecord":
        path = pathlib.Path(path)
        timings = path.with_name("timings.json")
        runtimes = io.read_json(timings)["runtime_seconds"] if timings.exists() else {}
        return cls.from_dict(io.read_json(path), runtimes)


def ground_truth(
    config: ExperimentConfig, seed: int
) -> tuple[generators.GroundTruth, Optional[list]]:
    """Generate or load the true graph of a seed, with variable names if any."""
    if config.dataset is Dataset.ER:
        return generators.gen_er(config.n, config.edge_prob, seed), None
    if config.dataset is Dataset.SF:
        return generators.gen_sf(config.n, config.avg_degree, seed), None
    if config.dataset is Dataset.LATENT:
        truth, _ = generators.gen_latent(
            config.n, config.n_latent, seed, threshold=config.threshold
        )
        return truth, None
    if config.sachs_path is None:
        raise ValueError("The sachs dataset needs 'sachs_path' to the adjacency CSV")
    return sachs.load_sachs(config.sachs_path)


def estimate(
    sections: list[CausalState], cover: sheaf.ContextCover, threshold: float
) -> BinaryGraph:
    """Discretized consensus graph of fitted sections, made acyclic."""
    W, _ = sheaf.average_sections(sections, cover)
    graph = BinaryGraph(cover.ground, np.abs(W) >= threshold)
    return metrics.break_cycles(graph, W)


def run_seed(
    config: ExperimentConfig, seed: int, out_dir: Optional[pathlib.Path] = None
) -> SeedResult:
    """Run one seed of an (already ablated) configuration."""
    truth, names = ground_truth(config, seed)
    ground = truth.graph.context
    cover = sheaf.overlapping_cover(
        ground, config.cover.n_parts, config.cover.fraction, config.cover.min_overlap, seed
    )
    sections = [
        causal_model.new_state(len(part), config.init_scale, seed * 100 + k, context=part)
        for k, part in enumerate(cover.parts)
    ]

    budget = config.oracle.budget()
    oracle = None
    if config.oracle.kind is OracleKind.SIMULATED:
        oracle = SimulatedOracle(
            truth.graph,
            budget,
            config.oracle.effective_noise_rate,
            seed,
            truth.latent_pairs,
        )
    elif config.oracle.kind is OracleKind.LLM:
        oracle = LLMOracle(config.oracle.endpoint, budget, names, fast=config.oracle.fast)
    session = (
        QuerySession(cover, oracle, budget, config.oracle.query, seed)
        if oracle is not None
        else None
    )

    writer = None
    if out_dir is not None:
        writer = io.TrajectoryWriter(out_dir / f"trajectory_seed{seed}.jsonl")
    try:
        final, trajectory = fit(sections, cover, session, config.optimizer, writer)
    finally:
        if writer is not None:
            writer.close()
        if isinstance(oracle, LLMOracle):
            oracle.close()
    if out_dir is not None:
        io.dump_trajectory(trajectory, out_dir / f"trajectory_seed{seed}.nc")

    estimated = estimate(final, cover, config.threshold)
    usage = budget.to_dict()
    if session is not None:
        usage["answered_by_kind"] = session.counts
    return SeedResult(
        seed=seed,
        shd=metrics.shd(estimated, truth.graph),
        f1=metrics.f1(estimated, truth.graph),
        sid=metrics.sid(estimated, truth.graph),
        final=trajectory.final.to_dict(),
        budget=usage,
        trajectory=trajectory.totals(),
        converged_at=trajectory.converged_at,
        obstructions=trajectory.obstructions,
        n_edges=estimated.n_edges,
    )


def run_experiment(
    config: ExperimentConfig,
    out_dir: Optional[Union[str, pathlib.Path]] = None,
    on_done: Optional[Callable[[], None]] = None,
) -> ExperimentRecord:
    """Run every seed of a configuration and collect an `ExperimentRecord`.

    A failing seed is logged and recorded with its error; the others still run.
    When ``out_dir`` is given, trajectories and the record are written there.
    ``on_done`` is called after every finished seed.

    """
    effective = config.effective()
    out_dir = pathlib.Path(out_dir) if out_dir is not None else None

    def _one(seed: int) -> tuple[SeedResult, float]:
        logger.info("Running %s/%s, seed %d", config.name, config.ablation.value, seed)
        start = time.perf_counter()
        try:
            result = run_seed(effective, seed, out_dir)
        except Exception as err:  # recorded, the remaining seeds go on
            logger.error("Seed %d failed: %s: %s", seed, type(err).__name__, err)
            result = SeedResult(seed=seed, error=f"{type(err).__name__}: {err}")
        elapsed = time.perf_counter() - start
        logger.info("Seed %d done in %.1f s", seed, elapsed)
        if on_done is not None:
            on_done()
        return result, elapsed

    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
        outcomes = list(pool.map(_one, config.seeds))

    results = [r for r, _ in outcomes]
    record = ExperimentRecord(
        config=config.to_dict(),
        seeds=results,
        aggregate=aggregate(results),
        runtimes={str(r.seed): t for r, t in outcomes},
    )
    if out_dir is not None:
        record.save(out_dir)
    return record
