import csv
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from quasiwqed.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, load_config, parse_grid, resolve_lattice, run
from quasiwqed.model import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def manifest_of(path):
    return json.loads(Path(str(path) + ".manifest.json").read_text())


def test_parse_grid_forms():
    assert np.allclose(parse_grid("linspace:0:0.5:3", "g"), [0, 0.25, 0.5])
    assert np.allclose(parse_grid("periodic:0:2pi:4", "g"), [0, np.pi / 2, np.pi, 1.5 * np.pi])
    assert np.allclose(parse_grid("offset:-1:1:0.5", "g"), [-0.75, -0.25, 0.25, 0.75])
    assert np.allclose(parse_grid("0.1, 0.2", "g"), [0.1, 0.2])
    assert np.allclose(parse_grid({"linspace": [0, "pi", 3], "endpoint": False}, "g"), [0, np.pi / 3, 2 * np.pi / 3])
    assert np.allclose(parse_grid([1, "0.5pi"], "g"), [1, np.pi / 2])
    for bad in ("", "linspace:0:1", [], {"range": [0, 1]}, "a,b", "linspace:0:1:0"):
        with pytest.raises(ConfigError, match="g"):
            parse_grid(bad, "g")


def test_resolve_lattice_overrides():
    spec = resolve_lattice({"n_qubits": 5, "delta": 0.1}, ["delta=0.3", "theta=0.5pi", "beta=3/2"])
    assert spec.delta == 0.3 and spec.theta == pytest.approx(np.pi / 2) and str(spec.beta) == "3/2"
    with pytest.raises(ConfigError, match="gamma0"):
        resolve_lattice({"n_qubits": 5}, ["gamma0=-1"])
    with pytest.raises(ConfigError):
        resolve_lattice({"n_qubits": 5}, ["delta"])


def test_spectrum_outputs_and_manifest(tmp_path):
    code = run(["spectrum", "--set", "n_qubits=8", "--set", "delta=0.5", "--axis", "theta",
                "--grid", "periodic:0:2pi:3", "--out", str(tmp_path), "--jobs", "1", "--probabilities"])
    assert code == EXIT_OK
    rows = read_csv(tmp_path / "spectrum.csv")
    assert len(rows) == 24 and set(rows[0]) == {"axis_name", "axis_value", "n", "re_omega", "im_omega", "ipr",
                                                "lifetime_ratio"}
    assert all(float(r["im_omega"]) < 0 for r in rows)
    m = manifest_of(tmp_path / "spectrum.csv")
    assert m["command"] == "spectrum" and m["version"] == "0.1.0"
    assert m["artifact"]["sha256"] == hashlib.sha256((tmp_path / "spectrum.csv").read_bytes()).hexdigest()
    assert m["params"]["lattice"]["delta"] == 0.5 and len(m["params"]["grid"]) == 3
    assert (tmp_path / "probabilities.csv.manifest.json").exists()
    # every output has exactly one manifest
    outputs = [p for p in tmp_path.iterdir() if not p.name.endswith(".manifest.json")]
    assert sorted(p.name + ".manifest.json" for p in outputs) == sorted(
        p.name for p in tmp_path.iterdir() if p.name.endswith(".manifest.json"))


def test_floats_round_trip(tmp_path):
    run(["scatter", "--set", "n_qubits=13", "--set", "delta=0.3", "--grid", "offset:-3:3:0.7",
         "--out", str(tmp_path), "--jobs", "1"])
    from quasiwqed.model import LatticeSpec
    from quasiwqed.transfer import scatter_many

    rows = read_csv(tmp_path / "scatter.csv")
    x = np.array([float(r["omega_rel"]) for r in rows])
    r, _ = scatter_many(LatticeSpec(13, delta=0.3), omega_rel=x)
    assert np.array_equal([float(row["re_r"]) for row in rows], r.real)


def test_parallel_output_is_byte_identical(tmp_path):
    args = ["mobility", "--set", "n_qubits=144", "--mode", "map", "--delta-grid", "linspace:0:0.5:4",
            "--omega-grid", "offset:-2:2:0.5", "--sizes", "21,34,55,89,144"]
    assert run(args + ["--out", str(tmp_path / "a"), "--jobs", "1"]) == EXIT_OK
    assert run(args + ["--out", str(tmp_path / "b"), "--jobs", "2"]) == EXIT_OK
    for name in ("phase_map.csv", "regions.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    sargs = ["spectrum", "--set", "n_qubits=10", "--grid", "linspace:0:0.5:4"]
    run(sargs + ["--out", str(tmp_path / "c"), "--jobs", "1"])
    run(sargs + ["--out", str(tmp_path / "d"), "--jobs", "2"])
    assert (tmp_path / "c" / "spectrum.csv").read_bytes() == (tmp_path / "d" / "spectrum.csv").read_bytes()


def test_scatter_both_reports_deviation(tmp_path):
    code = run(["scatter", "--set", "n_qubits=21", "--set", "delta=0.5", "--method", "both",
                "--grid", "linspace:-5.05:4.95:11", "--out", str(tmp_path), "--jobs", "1"])
    assert code == EXIT_OK
    rows = read_csv(tmp_path / "scatter.csv")
    assert len(rows) == 22 and {r["method"] for r in rows} == {"transfer", "green"}
    assert "abs_dr" in rows[0]
    res = manifest_of(tmp_path / "scatter.csv")["results"]
    assert res["max_abs_dr"] < 1e-9 and res["max_abs_dt"] < 1e-9


def test_exit_codes(tmp_path, capsys):
    out = ["--out", str(tmp_path), "--jobs", "1"]
    # empty grid is a usage error
    assert run(["spectrum", "--set", "n_qubits=4", "--grid", ","] + out) == EXIT_CONFIG
    # field-level message
    assert run(["spectrum", "--set", "n_qubits=4", "--set", "delta=-1", "--grid", "0"] + out) == EXIT_CONFIG
    assert "delta" in capsys.readouterr().err
    # missing n_qubits
    assert run(["spectrum", "--grid", "0"] + out) == EXIT_CONFIG
    # omega exactly at omega0 in the transfer method is a numerical failure
    assert run(["scatter", "--set", "n_qubits=4", "--grid=-1,0,1"] + out) == EXIT_NUMERIC
    assert "omega0" in capsys.readouterr().err
    # map grids containing omega0 are rejected up front
    assert run(["mobility", "--set", "n_qubits=4", "--delta-grid", "0.1", "--omega-grid", "0,1"] + out) == EXIT_CONFIG
    # invalid size ladder
    assert run(["mobility", "--set", "n_qubits=4", "--mode", "cell", "--omega-rel", "0.3", "--sizes", "21,34"] + out) \
        == EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        run([])
    assert exc.value.code == 2


def test_config_errors(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "bands", "lattice": {"n_qubits": 1}, "params": {"eta": 3}}))
    assert run(["spectrum", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    cfg.write_text(json.dumps({"lattice": {"n_qubits": 1}, "params": {"etta": 3}}))
    assert run(["bands", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    cfg.write_text("{not json")
    assert run(["bands", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert run(["bands", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_bands_single_site_sanity(tmp_path):
    assert run(["bands", "--set", "n_qubits=1", "--set", "delta=0.5", "--eta", "1", "--n-q", "64",
                "--out", str(tmp_path), "--jobs", "1"]) == EXIT_OK
    summary = json.loads((tmp_path / "bands_summary.json").read_text())
    assert summary["eta"] == 1 and summary["indeterminate"] == 1
    assert run(["bands", "--set", "n_qubits=1", "--eta", "4", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_length_free_commands_need_no_chain_length(tmp_path):
    assert run(["bands", "--eta", "3", "--n-q", "64", "--out", str(tmp_path / "b"), "--jobs", "1"]) == EXIT_OK
    assert run(["mobility", "--mode", "cell", "--omega-rel", "0.3", "--sizes", "21,34,55,89",
                "--out", str(tmp_path / "m"), "--jobs", "1"]) == EXIT_OK
    assert run(["scatter", "--grid", "0.5", "--out", str(tmp_path / "s")]) == EXIT_CONFIG


def test_overall_reflection_empty_chain(tmp_path):
    assert run(["overall-reflection", "--set", "n_qubits=0", "--delta-grid", "0,0.5",
                "--out", str(tmp_path), "--jobs", "1"]) == EXIT_OK
    rows = read_csv(tmp_path / "overall_reflection.csv")
    assert [float(r["R"]) for r in rows] == [0.0, 0.0]


def test_mobility_cell(tmp_path):
    assert run(["mobility", "--set", "n_qubits=1", "--mode", "cell", "--delta", "0", "--omega-rel", "0.3",
                "--out", str(tmp_path), "--jobs", "1"]) == EXIT_OK
    cell = json.loads((tmp_path / "cell.json").read_text())
    assert cell["class"] == "localized" and cell["sizes"][-1] == 987


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_recipe_configs_resolve(path):
    data = json.loads(path.read_text())
    lattice, params = load_config(str(path), data["command"])
    resolve_lattice(lattice, [])
    assert params
