import json
import subprocess
import sys

import pytest

from systolefill.cli import SCHEMA_VERSION, main
from systolefill.maps import SurfaceMap, catalog


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def structured(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "structured")
    return code, json.loads(out)


@pytest.fixture
def loop_file(tmp_path):
    # one vertex with two loops on the torus: a {4,4} map of girth 1
    path = tmp_path / "loops.json"
    SurfaceMap(4, (1, 2, 3, 0), (2, 3, 0, 1)).save(path)
    return path


def test_catalog(capsys):
    code, doc = structured(capsys, "catalog")
    assert code == 0
    assert doc["schema_version"] == SCHEMA_VERSION
    assert doc["maps"]["dodecahedron"]["g"] == 11
    assert doc["verdict"] == "pass"


def test_dimension(capsys):
    code, doc = structured(capsys, "dimension", "--p", "100", "--q", "101", "--g", "1000")
    assert code == 0
    assert doc["dimensions"]["coefficient"] == pytest.approx(4.9594, abs=1e-4)
    assert doc["dimensions"]["coefficient_exact"] == "8183/1650"


def test_dimension_needs_all_arguments(capsys):
    code, _, err = run(capsys, "dimension", "--p", "3")
    assert code == 2 and "--g" in err


def test_validate_map_catalog(capsys):
    code, doc = structured(capsys, "validate-map", "--map", "cube")
    assert code == 0 and doc["map"]["girth"] == 4


def test_validate_map_with_loop_fails_on_girth(capsys, loop_file):
    code, doc = structured(capsys, "validate-map", "--map", str(loop_file))
    assert code == 1
    assert doc["verdict"] == "fail"
    assert any("girth 1" in r for r in doc["map"]["reasons"])


def test_malformed_map_file_is_a_usage_error(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"darts": 2, "vertex_rotation": [0, 1], "edge_involution": [0, 1]}')
    code, _, err = run(capsys, "validate-map", "--map", str(bad))
    assert code == 2 and "fixes dart" in err


def exit_code(argv):
    """Exit status whether the parser exits itself or main returns."""
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


@pytest.mark.parametrize("argv", [
    ["build"],
    ["build", "--map", "nonexistent"],
    ["build", "--map", "tetrahedron", "--bogus"],
    ["frobnicate"],
    ["systoles", "--map", "tetrahedron", "--workers", "0"],
    ["build", "--map", "tetrahedron", "--p", "5"],
    ["calibrate"],
    ["calibrate", "--p", "3", "--q", "3", "--t", "1.0"],
])
def test_usage_errors_exit_2(capsys, argv):
    assert exit_code(argv) == 2
    assert capsys.readouterr().err


def test_argparse_errors_use_exit_code_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["build", "--map", "tetrahedron", "--bogus"])
    assert info.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_build(capsys):
    code, doc = structured(capsys, "build", "--map", "tetrahedron")
    assert code == 0
    assert doc["surface"]["tiles"] == 8
    assert doc["polygon"]["t0"] == pytest.approx(1.6049912889172694, abs=1e-10)


def test_systoles(capsys):
    code, doc = structured(capsys, "systoles", "--map", "tetrahedron")
    assert code == 0
    assert doc["systoles"]["multiplicity"] == 10
    assert doc["systoles"]["margin"] > 0


def test_filling(capsys):
    code, doc = structured(capsys, "filling", "--map", "tetrahedron")
    assert code == 0
    assert doc["filling"]["F"] == 8 and doc["filling"]["filling"] is True


def test_calibrate_closed_form(capsys):
    code, doc = structured(capsys, "calibrate", "--p", "3", "--q", "3", "--t", "1.62")
    assert code == 0
    assert doc["calibration"]["r_star"] == pytest.approx(0.20264449263139096, abs=1e-11)


def test_calibrate_map_selects_t_star(capsys):
    code, doc = structured(capsys, "calibrate", "--map", "tetrahedron")
    assert code == 0
    assert doc["calibration"]["margin"] > 1e-7
    assert doc["systoles"]["multiplicity"] == 10


def test_differential(capsys):
    code, doc = structured(capsys, "differential", "--map", "tetrahedron")
    assert code == 0
    assert doc["differential"]["rank"] == 4 == doc["differential"]["red_curves"]


def test_text_output(capsys):
    code, out, _ = run(capsys, "filling", "--map", "tetrahedron")
    assert code == 0
    assert "filling.F: 8" in out.splitlines()
    assert out.splitlines()[-1] == "verdict: pass"


def test_verify_all_is_deterministic(capsys):
    code1, out1, _ = run(capsys, "verify-all", "--map", "tetrahedron", "--format", "structured")
    code2, out2, _ = run(capsys, "verify-all", "--map", "tetrahedron", "--format", "structured",
                         "--workers", "2")
    assert code1 == code2 == 0
    assert out1 == out2
    doc = json.loads(out1)
    assert doc["differential"]["rank"] == 4
    assert doc["filling"]["filling"] is True
    assert doc["systoles"]["multiplicity"] == 10
    assert all(doc["checks"].values())
    assert doc["tolerances"]["length"] == 1e-8


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "systolefill", "catalog", "--format", "structured"],
                         capture_output=True, text=True, check=True).stdout
    assert json.loads(out)["command"] == "catalog"
