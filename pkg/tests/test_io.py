import json
import math
from enum import Enum

import numpy as np
from hypothesis import given, strategies as st

from noisyfhn import io


class Colour(str, Enum):
    RED = "red"


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_csv_float_round_trip(values):
    import tempfile
    from pathlib import Path
    with tempfile.TemporaryDirectory() as d:
        p = io.write_csv(Path(d) / "v.csv", ["v"], [[v] for v in values])
        _, cols, rows = io.read_csv(p)
    assert cols == ["v"]
    assert [float(r[0]) for r in rows] == values


def test_csv_header_and_types(tmp_path):
    cfg = {"b": 2, "a": np.float64(0.5)}
    p = io.write_csv(tmp_path / "sub" / "t.csv", ["i", "x", "flag", "kind"],
                     [(np.int64(1), 0.1, True, Colour.RED), {"i": 2, "x": None, "flag": False}],
                     cfg)
    lines = p.read_text().splitlines()
    assert lines[0] == '# config: {"a":0.5,"b":2}'
    assert lines[1] == "i,x,flag,kind"
    assert lines[2] == "1,0.10000000000000001,1,red"
    assert lines[3] == "2,,0,"
    config, cols, rows = io.read_csv(p)
    assert config == {"a": 0.5, "b": 2}


def test_json_cleaning(tmp_path):
    obj = {"nan": float("nan"), "inf": np.inf, "arr": np.arange(3), "e": Colour.RED,
           "b": np.bool_(True), 3: (1.5, np.float32(2.0))}
    line = io.dumps_line(obj)
    assert "\n" not in line
    back = json.loads(line)
    assert back == {"nan": None, "inf": None, "arr": [0, 1, 2], "e": "red", "b": True,
                    "3": [1.5, 2.0]}
    p = io.write_json(tmp_path / "o.json", obj)
    assert json.loads(p.read_text()) == back
    assert math.isfinite(back["arr"][2])
