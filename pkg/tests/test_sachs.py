import numpy as np
import pytest

from holograph.bench import generators, sachs

NAMES = ["Raf", "Mek", "Plcg", "PIP2", "PIP3", "Erk", "Akt", "PKA", "PKC", "P38", "Jnk"]


def test_round_trip(tmp_path):
    truth = generators.gen_er(11, 0.2, seed=1)
    path = sachs.write_sachs(truth, NAMES, tmp_path / "sachs.csv")
    loaded, names = sachs.load_sachs(path)
    assert names == NAMES
    assert loaded.names == tuple(NAMES)
    np.testing.assert_array_equal(loaded.graph.adjacency, truth.graph.adjacency)


def _write(path, table):
    path.write_text("\n".join(",".join(str(v) for v in row) for row in table) + "\n")
    return path


def test_wrong_size(tmp_path):
    table = [NAMES[:10]] + [[0] * 10 for _ in range(11)]
    with pytest.raises(sachs.FormatError):
        sachs.load_sachs(_write(tmp_path / "short.csv", table))


def test_non_binary(tmp_path):
    rows = [[0] * 11 for _ in range(11)]
    rows[0][1] = 2
    with pytest.raises(sachs.FormatError):
        sachs.load_sachs(_write(tmp_path / "weights.csv", [NAMES] + rows))


def test_cycle(tmp_path):
    rows = [[0] * 11 for _ in range(11)]
    rows[0][1] = rows[1][2] = rows[2][0] = 1
    with pytest.raises(sachs.FormatError, match="Raf"):
        sachs.load_sachs(_write(tmp_path / "cyclic.csv", [NAMES] + rows))


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(sachs.FormatError):
        sachs.load_sachs(path)
