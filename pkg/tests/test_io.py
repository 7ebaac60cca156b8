import numpy as np
import pytest
import xarray as xr

from holograph import io
from holograph.objective import LossBreakdown
from holograph.optimizer import Trajectory


def test_dumps_deterministic():
    text = io.dumps({"b": np.float64(0.5), "a": np.arange(3)})
    assert text == '{\n  "a": [\n    0,\n    1,\n    2\n  ],\n  "b": 0.5\n}\n'
    with pytest.raises(TypeError):
        io.dumps({"a": object()})


def test_json_round_trip(tmp_path):
    path = io.write_json({"x": [1.5, 2]}, tmp_path / "nested" / "data.json")
    assert path.exists()
    assert io.read_json(path) == {"x": [1.5, 2]}


def test_write_json_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="Unable to write"):
        io.write_json({}, blocker / "data.json")


def test_load_config(tmp_path):
    yaml_path = tmp_path / "config.yaml"
    yaml_path.write_text("name: er20\nseeds: [42, 43]\n")
    assert io.load_config(yaml_path, ["name", "seeds"]) == {"name": "er20", "seeds": [42, 43]}

    json_path = tmp_path / "config.json"
    json_path.write_text('{"name": "er20", "colour": 1}')
    with pytest.raises(ValueError, match="colour"):
        io.load_config(json_path, ["name"])

    list_path = tmp_path / "list.yaml"
    list_path.write_text("- 1\n- 2\n")
    with pytest.raises(ValueError):
        io.load_config(list_path)


def test_json_lines(tmp_path):
    path = tmp_path / "rows.jsonl"
    rows = [LossBreakdown(0.0, 1.0, 2.0, 3.0, 6.0), {"a": 1}]
    io.write_jsonl(rows, path)
    back = io.read_jsonl(path)
    assert back[0]["total"] == 6.0
    assert back[1] == {"a": 1}

    with io.JsonLinesWriter(path, append=True) as writer:
        writer.write({"b": 2})
    assert len(io.read_jsonl(path)) == 3


def test_dump_trajectory(tmp_path):
    trajectory = Trajectory(
        [LossBreakdown(0.0, 1.0 / (t + 1), 0.0, 0.0, 1.0 / (t + 1)) for t in range(4)],
        converged_at=None,
        obstructions=[2, 3],
    )
    path = io.dump_trajectory(trajectory, tmp_path / "trajectory.nc")
    with xr.open_dataset(path) as ds:
        np.testing.assert_allclose(ds["descent"].values, [1.0, 0.5, 1 / 3, 0.25])
        assert ds.attrs["converged_at"] == -1
        assert ds.attrs["first_obstruction"] == 2
