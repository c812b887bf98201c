import json

import yaml

from chainlab import cli


def test_kernel_table_from_preset(tmp_path, capsys):
    code = cli.main(["kernel-table", "--seed", "1", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS  heat_t0" in out
    summary = json.loads(out.strip().splitlines()[-1])
    assert summary["passed"] is True


def test_missing_seed_is_a_config_error(tmp_path, capsys):
    assert cli.main(["kernel-table", "--out", str(tmp_path)]) == 2
    assert "seed" in capsys.readouterr().err


def test_config_file_and_overrides(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"kind": "kernel-table", "seed": 3, "params": {"b": 0.0}, "times": [0.5]}))
    assert cli.main(["kernel-table", "--config", str(path), "--out", str(tmp_path), "--threads", "2"]) == 0
    run_dir = json.loads(capsys.readouterr().out.strip().splitlines()[-1])["directory"]
    manifest = json.loads(open(f"{run_dir}/manifest.json").read())
    assert manifest["config"]["threads"] == 2 and manifest["config"]["params"]["b"] == 0.0


def test_config_kind_must_match_subcommand(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"kind": "lemma3-sweep", "seed": 3}))
    assert cli.main(["kernel-table", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_failing_checks_give_nonzero_exit(tmp_path):
    path = tmp_path / "c.yaml"
    # an impossible tolerance makes the mass check fail
    path.write_text(yaml.safe_dump({"kind": "kernel-table", "seed": 3, "tolerances": {"mass_abs": -1.0}}))
    assert cli.main(["kernel-table", "--config", str(path), "--out", str(tmp_path)]) == 1


def test_verify_subcommand(capsys):
    assert cli.main(["verify", "--suite", "kernel", "--suite", "generator"]) == 0
    out = capsys.readouterr().out
    assert "PASS  generator_energy" in out and "FAIL" not in out
