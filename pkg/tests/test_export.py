import json

import numpy as np

from src.export import read_operator, write_csv, write_json, write_operator


def test_csv_format(tmp_path):
    path = write_csv(tmp_path / "out" / "table.csv", ["a", "b"], [{"a": 0.1, "b": "x", "extra": 1}, {"a": 2}])
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines == ["a,b", "0.1,x", "2,"]


def test_json_cleans_numpy_and_complex(tmp_path):
    data = {
        "z": 1 + 2j,
        "arr": np.array([1.0, np.nan]),
        "n": np.int64(3),
        "flag": np.bool_(True),
        "nested": {"w": np.complex128(-1j)},
    }
    path = write_json(tmp_path / "data.json", data)
    loaded = json.loads(path.read_text(encoding="utf-8"))
    assert loaded == {"z": [1.0, 2.0], "arr": [1.0, None], "n": 3, "flag": True, "nested": {"w": [-0.0, -1.0]}}


def test_operator_binary_layout(tmp_path):
    matrix = np.arange(6).reshape(2, 3) * (1 - 1j)
    path = write_operator(tmp_path / "op", matrix, {"label": "test"})
    assert path.suffix == ".bin"
    assert path.stat().st_size == 6 * 16
    loaded, meta = read_operator(path)
    np.testing.assert_array_equal(loaded, matrix)
    assert meta["shape"] == [2, 3] and meta["dtype"] == "<c16" and meta["label"] == "test"
