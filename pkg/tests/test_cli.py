import csv
import json
from pathlib import Path

import pytest

from whirls.cli import SCHEMA, main, run
from whirls.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


def _run(*argv):
    code, text = run(list(argv))
    return code, (json.loads(text) if text else None)


def test_solve_running_example(tmp_path):
    code, rep = _run("solve", "--config", str(CONFIGS / "running_example.json"), "--out", str(tmp_path))
    assert code == 0 and rep["schema"] == SCHEMA
    assert rep["solver"]["flux"] == pytest.approx(16.7552, abs=1e-4)
    names = {c["name"] for c in rep["checks"]}
    assert {"flux_conservation", "winding_simpson", "closed_form_vs_bvp"} <= names
    with open(tmp_path / "profile.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "G", "Gd", "flux"] and len(rows) > 10


def test_solve_zero_winding(tmp_path):
    cfg = _write(tmp_path, {"annulus": {"n": 2, "a": 1, "b": 2}, "A": "1", "m": [0]})
    code, rep = _run("solve", "--config", cfg)
    assert code == 0 and rep["solver"]["flux"] == 0.0


def test_verify_running_example_passes():
    code, rep = _run("verify", "--config", str(CONFIGS / "running_example.json"), "--grid", "coarse")
    assert code == 0
    assert all(c["pass"] for c in rep["checks"])
    names = [c["name"] for c in rep["checks"]]
    for need in ("det", "route_equivalence", "boundary", "pde_residual", "curl_free", "simplified"):
        assert need in names


def test_verify_linear_profile_fails():
    code, rep = _run("verify", "--config", str(CONFIGS / "running_example.json"), "--profile", "linear",
                     "--grid", "COARSE")
    assert code == 1
    failed = {c["name"] for c in rep["checks"] if not c["pass"]}
    assert "pde_residual" in failed


def test_verify_zero_discriminant_uses_path_potential():
    code, rep = _run("verify", "--config", str(CONFIGS / "zero_discriminant_n4.json"), "--grid", "COARSE")
    assert code == 0 and rep["pressure"]["kind"] == "path_potential"
    assert any(c["name"] == "path_independence" for c in rep["checks"])


def test_classify_enumeration():
    code, rep = _run("classify", "--config", str(CONFIGS / "classify_n4.json"))
    assert code == 0
    assert sorted(map(tuple, rep["admissible"])) == sorted(
        [(p, q) for p in range(-2, 3) for q in range(-2, 3) if abs(p) == abs(q)])


def test_classify_odd_dimension(tmp_path):
    cfg = _write(tmp_path, {"annulus": {"n": 3, "a": 1, "b": 2}, "H": "1", "B": "0", "bound": 2})
    code, rep = _run("classify", "--config", cfg)
    assert code == 0 and rep["admissible"] == [[0]]


@pytest.mark.parametrize("cfg", [
    {"annulus": {"n": 4, "a": 1, "b": 2}, "A": "1", "m": [1]},
    {"annulus": {"n": 4, "a": 2, "b": 1}, "A": "1", "m": [1, 1]},
    {"annulus": {"n": 4, "a": 1, "b": 2}, "A": "1 +", "m": [1, 1]},
    {"annulus": {"n": 4, "a": 1, "b": 2}, "A": "1", "H": "1", "m": [1, 1]},
    {"annulus": {"n": 4, "a": 1, "b": 2}, "A": "1", "m": [1, 1], "colour": "red"},
    {"annulus": {"n": 4, "a": 1, "b": 2}, "A": "xi", "m": [1, 2]},
    {"annulus": {"n": 4, "a": 1, "b": 2}, "m": [1, 1]},
])
def test_invalid_inputs_exit_2(tmp_path, cfg):
    path = _write(tmp_path, cfg)
    assert main(["verify", "--config", path]) == 2


def test_classify_needs_xi_free(tmp_path):
    cfg = _write(tmp_path, {"annulus": {"n": 4, "a": 1, "b": 2}, "A": "xi", "bound": 1})
    assert main(["classify", "--config", cfg]) == 2


def test_missing_file_and_bad_json(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.json")]) == 2
    assert main(["solve", "--config", _write(tmp_path, "{not json")]) == 2
    assert main(["explode", "--config", "x"]) == 2


def test_energy_subcommand(tmp_path):
    cfg = _write(tmp_path, {"annulus": {"n": 2, "a": 1, "b": 2}, "F": "xi / 2", "m": [1],
                            "seed": 7, "variation": {"fields": 2}})
    code, rep = _run("energy", "--config", cfg)
    assert code == 0 and len(rep["first_variation"]) == 2
    assert rep["energy"]["value"] == pytest.approx(340.1584, rel=1e-6)


def test_config_overrides_and_echo():
    cfg = load_config(CONFIGS / "running_example.json", seed=9, grid="FINE")
    assert cfg.seed == 9 and cfg.grid == "FINE" and cfg.echo()["seed"] == 9
    with pytest.raises(ConfigError):
        parse_config({"annulus": {"n": 2, "a": 1, "b": 2}, "A": "1", "tolerances": {"bogus": 1}})
    with pytest.raises(ConfigError):
        parse_config({"annulus": {"n": 2, "a": 1, "b": 2}, "F": "xi/2", "B": "1"})
    with pytest.raises(ConfigError):
        parse_config({"annulus": {"n": 2, "a": 1, "b": 2}, "A": "1", "profile": "cubic"})
    c = parse_config({"annulus": {"n": 2, "a": 1, "b": 2}, "F": "xi/2", "m": [1]})
    assert c.A.xi_free and c.H.kind == "H"
