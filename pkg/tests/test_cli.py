import json
import os
from pathlib import Path

import pytest

from shepherd_explore import cli

SMALL = '[scenario]\nenvironment_kind = "GrassPlane"\nside_length = 12.0\n[sim]\ntime_cap = 200.0\n'


@pytest.fixture
def scenario(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL)
    return p


def test_single_run_writes_csv_and_manifest(tmp_path, scenario, capsys):
    out = tmp_path / "out"
    code = cli.main(["--scenario", str(scenario), "--strategy", "froshe", "--robots", "3",
                     "--seed", "7", "--repeat", "1", "--out", str(out)])
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "GrassPlane_12m_3r_froshe_seed7.csv", "manifest.json", "summary.json"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["format"] == cli.MANIFEST_FORMAT and len(manifest["runs"]) == 1
    assert "median=" in capsys.readouterr().out


def test_matrix_file_count(tmp_path):
    m = tmp_path / "matrix.toml"
    m.write_text(SMALL.replace("[sim]\n", "[sim]\nrepeat_count = 2\n")
                 + '[matrix]\nrobot_count = [1, 2]\nstrategy = ["greedy", "utility"]\n')
    out = tmp_path / "out"
    assert cli.main(["--matrix", str(m), "--out", str(out)]) == 0
    runs = [p for p in out.glob("*_seed*.csv")]
    assert len(runs) == 4 * 2
    agg = (out / "aggregate.csv").read_text().splitlines()
    assert len(agg) == 1 + 4
    assert len((out / "times.csv").read_text().splitlines()) == 1 + 8


def test_manifest_replay_is_byte_identical(tmp_path, scenario):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["--scenario", str(scenario), "--repeat", "2", "--seed", "4",
                     "--strategy", "greedy", "--out", str(a)]) == 0
    assert cli.main(["--scenario", str(a / "manifest.json"), "--out", str(b)]) == 0
    for p in a.glob("*.csv"):
        assert p.read_bytes() == (b / p.name).read_bytes()
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()


def test_preset_resolves_without_a_file(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env_out"))
    assert cli.main(["--scenario", "grass40", "--seed", "1"]) == 0
    assert (tmp_path / "env_out" / "manifest.json").exists()


def test_missing_input_is_a_usage_error(capsys):
    assert cli.main([]) == 2
    assert "exactly one of" in capsys.readouterr().err


def test_both_inputs_is_a_usage_error(scenario):
    assert cli.main(["--scenario", str(scenario), "--matrix", str(scenario)]) == 2


def test_negative_seed_is_a_usage_error(scenario):
    assert cli.main(["--scenario", str(scenario), "--seed", "-1"]) == 2


def test_manifest_with_overrides_is_a_usage_error(tmp_path, scenario):
    a = tmp_path / "a"
    assert cli.main(["--scenario", str(scenario), "--out", str(a)]) == 0
    assert cli.main(["--scenario", str(a / "manifest.json"), "--robots", "2"]) == 2


def test_unknown_strategy_fails(tmp_path, scenario, capsys):
    assert cli.main(["--scenario", str(scenario), "--strategy", "random",
                     "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_malformed_file_fails(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[scenario\nside_length = ")
    assert cli.main(["--scenario", str(bad), "--out", str(tmp_path)]) == 1
    assert "malformed" in capsys.readouterr().err


def test_missing_file_fails(tmp_path, capsys):
    assert cli.main(["--scenario", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) == 1
    assert capsys.readouterr().err


@pytest.mark.skipif(os.geteuid() == 0, reason="root can write anywhere")
def test_unwritable_output_fails(tmp_path, scenario, capsys):
    locked = tmp_path / "locked"
    locked.mkdir(mode=0o500)
    assert cli.main(["--scenario", str(scenario), "--out", str(locked / "x")]) == 1
    assert "not writable" in capsys.readouterr().err


def test_output_path_that_is_a_file_fails(tmp_path, scenario, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["--scenario", str(scenario), "--out", str(blocker)]) == 1
    assert "not writable" in capsys.readouterr().err


def test_bad_matrix_axis_fails(tmp_path, capsys):
    m = tmp_path / "m.toml"
    m.write_text(SMALL + "[matrix]\nspeed = [1, 2]\n")
    assert cli.main(["--matrix", str(m), "--out", str(tmp_path)]) == 1
    assert "unknown matrix axis" in capsys.readouterr().err


def test_bundled_configs_parse():
    root = Path(__file__).resolve().parents[1] / "configs"
    args = cli.build_parser().parse_args(["--matrix", str(root / "desk_matrix.toml")])
    groups, matrix = cli.load_plan(args)
    assert matrix and len(groups) == 9 and all(len(g) == 10 for g in groups)
    args = cli.build_parser().parse_args(["--scenario", str(root / "forest_small.toml")])
    groups, matrix = cli.load_plan(args)
    assert not matrix and groups[0][0].scenario.robot_count == 2
