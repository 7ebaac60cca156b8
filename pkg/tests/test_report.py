import pandas as pd
import pytest

from holograph import io, sheaf
from holograph.bench import experiment, report
from holograph.bench.experiment import Ablation, ExperimentConfig, ExperimentRecord, SeedResult


def _record(ablation=Ablation.FULL):
    results = [
        SeedResult(seed=1, shd=2, f1=0.5, sid=4, final=dict(total=0.5), trajectory=[3.0, 1.0, 0.5]),
        SeedResult(seed=2, shd=4, f1=0.7, sid=6, final=dict(total=0.2), trajectory=[2.0, 0.2]),
    ]
    config = ExperimentConfig(name="er20", seeds=(1, 2), ablation=ablation)
    return ExperimentRecord(config.to_dict(), results, experiment.aggregate(results))


def test_table():
    frame = report.table([_record(), _record(Ablation.A6)])
    assert list(frame["ablation"]) == ["full", "a6"]
    assert frame.loc[0, "shd_mean"] == 3.0
    assert frame.loc[0, "shd_std"] == 1.0
    assert frame.loc[0, "completed"] == 2


def test_report(tmp_path):
    records = [_record(), _record(Ablation.A2)]
    written = report.report(records, tmp_path / "out")
    names = sorted(p.name for p in written)
    assert names == ["00_er20_full.svg", "01_er20_a2.svg", "aggregate.csv", "summary.json"]
    assert pd.read_csv(tmp_path / "out" / "aggregate.csv").shape[0] == 2
    summary = io.read_json(tmp_path / "out" / "summary.json")
    assert [s["failed"] for s in summary] == [False, False]
    assert (tmp_path / "out" / "00_er20_full.svg").read_text().lstrip().startswith("<?xml")

    with pytest.raises(ValueError):
        report.report([], tmp_path)


def test_load_records(tmp_path):
    _record().save(tmp_path / "a")
    _record(Ablation.A6).save(tmp_path / "b")
    records = report.load_records(tmp_path)
    assert [r.config["ablation"] for r in records] == ["full", "a6"]
    assert report.load_records(tmp_path / "missing") == []


def test_write_suite(tmp_path):
    reports = sheaf.run_exactness_suite([1], [0, 1])
    cells, table = report.write_suite(reports, tmp_path)
    rows = io.read_jsonl(cells)
    assert len(rows) == 8
    assert all(row["passed"] for row in rows)
    frame = pd.read_csv(table, index_col="n")
    assert frame.loc[1, "Identity_pass_rate"] == 1.0
