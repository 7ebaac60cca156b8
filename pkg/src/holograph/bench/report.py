# -*- coding: utf-8 -*-
"""Tables, summaries and plots of benchmark and suite results."""
import logging
import pathlib
from collections.abc import Sequence
from typing import Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .. import io, sheaf  # noqa: E402
from .experiment import METRICS, ExperimentRecord  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, pathlib.Path]


def load_records(in_dir: PathLike) -> list[ExperimentRecord]:
    """Every ``record.json`` below a directory, in path order."""
    paths = sorted(pathlib.Path(in_dir).glob("**/record.json"))
    return [ExperimentRecord.load(p) for p in paths]


def table(records: Sequence[ExperimentRecord]) -> pd.DataFrame:
    """One row per record, mean and std of every metric."""
    rows = []
    for record in records:
        config = record.config
        row = dict(
            name=config["name"],
            dataset=config["dataset"],
            ablation=config["ablation"],
            n=config["n"],
            completed=record.aggregate["completed"],
        )
        for metric in METRICS + ("final_total",):
            row[f"{metric}_mean"] = record.aggregate[metric]["mean"]
            row[f"{metric}_std"] = record.aggregate[metric]["std"]
        rows.append(row)
    return pd.DataFrame(rows)


def _plot(record: ExperimentRecord, path: pathlib.Path) -> pathlib.Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for result in record.seeds:
        if result.trajectory:
            ax.plot(result.trajectory, label=f"seed {result.seed}", linewidth=1)
    ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("total loss")
    ax.set_title(f"{record.config['name']} ({record.config['ablation']})")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def report(records: Sequence[ExperimentRecord], out_dir: PathLike) -> list[pathlib.Path]:
    """Write the aggregate CSV, a JSON summary and loss-trajectory plots.

    Raises
    ------
    OSError
        if the output directory cannot be written

    """
    if len(records) == 0:
        raise ValueError("Nothing to report")
    out_dir = pathlib.Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"Unable to create {out_dir}: {err}") from err

    written = []
    csv_path = out_dir / "aggregate.csv"
    table(records).to_csv(csv_path, index=False)
    written.append(csv_path)

    summary = [
        dict(config=r.config, aggregate=r.aggregate, failed=r.failed) for r in records
    ]
    written.append(io.write_json(summary, out_dir / "summary.json"))

    for k, record in enumerate(records):
        if any(result.trajectory for result in record.seeds):
            name = f"{k:02d}_{record.config['name']}_{record.config['ablation']}.svg"
            written.append(_plot(record, out_dir / name))
    logger.info("Report of %d record(s) written to %s", len(records), out_dir)
    return written


def write_suite(
    reports: Sequence[sheaf.AxiomReport], out_dir: PathLike
) -> tuple[pathlib.Path, pathlib.Path]:
    """Suite cells as JSON lines, and the per-size summary table as CSV."""
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = io.write_jsonl(
        (
            dict(n=r.n, seed=r.seed, axiom=r.axiom.value, error=r.error, passed=r.passed)
            for r in reports
        ),
        out_dir / "cells.jsonl",
    )
    csv_path = out_dir / "sheaf_table.csv"
    sheaf.summarize_suite(reports).to_csv(csv_path)
    logger.info("Suite results written to %s", out_dir)
    return cells, csv_path
