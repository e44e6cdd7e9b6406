import json

import numpy as np
import pytest

from jsqlab.errors import ConfigError
from jsqlab.grid import GridSpec
from jsqlab.report import build_report, csv_text, dumps, plain


def test_parse_round_trip():
    g = GridSpec.parse("-3:0:4,0:3:5")
    assert (g.n1, g.n2) == (4, 5)
    assert len(g.points()) == 20
    assert g.points()[0] == (-3.0, 0.0) and g.points()[-1] == (0.0, 3.0)
    assert GridSpec.parse(str(g)) == g


def test_diffusion_scale_conversion():
    g = GridSpec.parse("-40:0:3,0:40:3", "diffusion").to_fluid(10.0)
    assert g.scale == "fluid"
    assert (g.x1_lo, g.x2_hi) == (-4.0, 4.0)


@pytest.mark.parametrize("text", ["-3:0:4", "a:0:4,0:3:4", "-3:0:1,0:3:4", "0:1:4,0:3:4", "-3:0:4,-1:3:4",
                                  "0:-3:4,0:3:4", "-inf:0:4,0:3:4"])
def test_parse_rejects(text):
    with pytest.raises(ConfigError) as err:
        GridSpec.parse(text)
    assert err.value.code == "GRID"


def test_unknown_scale():
    with pytest.raises(ConfigError):
        GridSpec.parse("-3:0:4,0:3:4", "lattice")


def test_plain_conversion():
    obj = {"a": np.float64(0.1), "b": np.arange(3), "c": (np.bool_(True), float("nan"), -float("inf")), 4: 1}
    assert plain(obj) == {"a": 0.1, "b": [0, 1, 2], "c": [True, "nan", "-inf"], "4": 1}


def test_dumps_is_sorted_and_round_trips_floats():
    x = 0.1 + 0.2
    text = dumps({"z": x, "a": 1})
    assert text.index('"a"') < text.index('"z"')
    assert json.loads(text)["z"] == x
    assert text.endswith("\n")


def test_report_envelope():
    rep = build_report("verify-pde", {"seed": 3, "n": 10}, {"ok": 1}, np.bool_(False))
    assert rep["schema_version"] == 1 and rep["version"].startswith("v")
    assert rep["seed"] == 3 and rep["passed"] is False


def test_csv_layout():
    text = csv_text(("t", "d"), [(0.0, 1), (0.5, np.float64(1 / 3))], "time and distance")
    lines = text.splitlines()
    assert lines[0] == "# time and distance"
    assert lines[1] == "t,d"
    assert float(lines[3].split(",")[1]) == 1 / 3
