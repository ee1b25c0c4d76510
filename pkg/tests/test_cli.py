import json

import pytest

from seroprev.cli import main
from seroprev.config import bundled_config_path

FIXTURE = str(bundled_config_path())


@pytest.fixture
def quick_config(tmp_path):
    raw = json.loads(bundled_config_path().read_text())
    raw["mcmc"].update(n_warmup=300, n_draws=800)
    p = tmp_path / "quick.json"
    p.write_text(json.dumps(raw))
    return str(p)


def test_analyze_json_is_reproducible(quick_config, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        rc = main(["analyze", "--config", quick_config, "--format", "json",
                   "--seed", "42", "--out", str(out)])
        assert rc in (0, 3)
    assert a.read_bytes() == b.read_bytes()
    report = json.loads(a.read_text())
    assert report["config"]["mcmc"]["seed"] == 42


def test_seed_env_override(quick_config, tmp_path, monkeypatch):
    monkeypatch.setenv("SEROPREV_SEED", "777")
    out = tmp_path / "r.json"
    main(["analyze", "--config", quick_config, "--format", "json", "--methods", "bayes",
          "--out", str(out)])
    assert json.loads(out.read_text())["config"]["mcmc"]["seed"] == 777


def test_analyze_text_stdout(capsys):
    assert main(["analyze", "--config", FIXTURE, "--methods", "mle,rao,cp"]) == 0
    out = capsys.readouterr().out
    assert "Rao score CI" in out and "empty" in out


def test_analyze_csv(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["analyze", "--config", FIXTURE, "--methods", "cp,mle", "--format", "csv",
                 "--out", str(out)]) == 0
    assert len(out.read_text().strip().splitlines()) == 1 + 3 * 2


def test_validation_exit_code(tmp_path, capsys):
    raw = json.loads(bundled_config_path().read_text())
    raw["surveys"][0]["x_positive"] = 5000
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(raw))
    assert main(["analyze", "--config", str(p)]) == 2
    assert "surveys[0].x_positive" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert main(["analyze", "--config", str(tmp_path / "nope.json")]) == 2


def test_bad_method_exit_code():
    assert main(["analyze", "--config", FIXTURE, "--methods", "wald"]) == 2


def test_nonconvergence_exit_code(tmp_path):
    raw = json.loads(bundled_config_path().read_text())
    raw["mcmc"].update(n_warmup=0, n_draws=8, initial_step=1e-4)
    p = tmp_path / "short.json"
    p.write_text(json.dumps(raw))
    assert main(["analyze", "--config", str(p), "--methods", "bayes"]) == 3


def test_simulate(tmp_path, capsys):
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps({"true_theta": 0.0, "sensitivity": 42 / 45,
                             "specificity": 34 / 35, "n_samples": 1500, "seed": 1}))
    assert main(["simulate", "--scenario", str(p), "--reps", "2000"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["n_replications"] == 2000
    assert 0.0 < rep["empty_ci_frequency"] < 0.1
    p.write_text(json.dumps({"sensitivity": 0.9}))
    assert main(["simulate", "--scenario", str(p)]) == 2


@pytest.mark.parametrize("suffix", ["svg", "csv"])
def test_figure(quick_config, tmp_path, suffix):
    out = tmp_path / f"fig.{suffix}"
    assert main(["figure", "--config", quick_config, "--out", str(out)]) in (0, 3)
    text = out.read_text()
    assert ("<svg" in text) if suffix == "svg" else text.startswith("series,")
