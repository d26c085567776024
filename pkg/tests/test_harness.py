"""Config parsing, trial bookkeeping, CSV emission, and CLI behavior."""

import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from msabeam import cli, harness
from msabeam.harness import (
    ALL_SCHEMES,
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    dbm_to_watts,
    emit_csv,
    emit_summary,
    make_config,
    parse_settings_text,
    render_csv,
    run_experiment,
    run_trial,
    summarize,
    summary_path,
    validate_config,
)


def desk_config(**overrides):
    return make_config(preset="desk", overrides=overrides)


def tiny_config(**overrides):
    base = dict(trials=2, max_outer=8, schemes=("proposed", "dense_upa"))
    base.update(overrides)
    return desk_config(**base)


def rows_by_key(rows):
    out = {}
    for r in rows:
        out.setdefault((r.scheme, r.trial), []).append(r)
    return out


def test_default_config_values():
    cfg = make_config()
    assert cfg.experiment == "single"
    assert cfg.num_subarrays == 16
    assert cfg.antennas_per_subarray == 4
    assert cfg.num_users == 16
    assert cfg.paths_per_user == 6
    assert cfg.aperture_lambdas == 20.0
    assert cfg.power_dbm == 10.0
    assert cfg.noise_dbm == -80.0
    assert cfg.trials == 1000
    assert cfg.base_seed == 1
    assert "exhaustive" not in cfg.schemes
    assert cfg.workers == 1
    assert cfg.record_wall is False


def test_desk_preset_values():
    cfg = desk_config()
    assert cfg.num_subarrays == 4
    assert cfg.num_users == 4
    assert cfg.paths_per_user == 3
    assert cfg.trials == 50
    assert cfg.max_outer == 60
    assert cfg.aperture_lambdas == 2.0
    assert cfg.grid_step_lambdas == 0.05
    assert cfg.step0 == 1e-4
    assert cfg.eps_step == 1e-6
    assert cfg.schemes == ALL_SCHEMES


def test_config_layering(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("trials = 7\npower_dbm = 4\n# comment\n\nrecord_wall = on\n")
    cfg = make_config(preset="desk", file_path=str(path), overrides={"power_dbm": "6"})
    # preset below file below overrides
    assert cfg.num_subarrays == 4
    assert cfg.trials == 7
    assert cfg.power_dbm == 6.0
    assert cfg.record_wall is True


def test_override_types_pass_through():
    cfg = make_config(overrides={"trials": 3, "region_sweep": (1.0, 2.0)})
    assert cfg.trials == 3
    assert cfg.region_sweep == (1.0, 2.0)
    cfg = make_config(overrides={"schemes": "proposed,sparse_upa"})
    assert cfg.schemes == ("proposed", "sparse_upa")
    cfg = make_config(overrides={"region_sweep": "1, 2, 4"})
    assert cfg.region_sweep == (1.0, 2.0, 4.0)


def test_parse_errors():
    with pytest.raises(ConfigError, match="line 2"):
        parse_settings_text("trials = 3\nnonsense line\n")
    with pytest.raises(ConfigError, match="unknown preset"):
        make_config(preset="bench")
    with pytest.raises(ConfigError, match="unknown setting 'turbo'"):
        make_config(overrides={"turbo": "1"})
    with pytest.raises(ConfigError, match="cannot parse"):
        make_config(overrides={"trials": "many"})
    with pytest.raises(ConfigError, match="cannot read config file"):
        make_config(file_path="/nonexistent/file.cfg")


def test_validation_errors():
    with pytest.raises(ConfigError, match="trials"):
        validate_config(desk_config(trials=0))
    with pytest.raises(ConfigError, match="experiment"):
        validate_config(desk_config(experiment="warp"))
    with pytest.raises(ConfigError, match="unknown scheme"):
        validate_config(desk_config(schemes=("proposed", "psycho")))
    with pytest.raises(ConfigError, match="at least one scheme"):
        validate_config(desk_config(schemes=()))
    with pytest.raises(ConfigError, match="region_sweep"):
        validate_config(desk_config(experiment="region_sweep", region_sweep=()))
    with pytest.raises(ConfigError, match="max_distance"):
        validate_config(desk_config(min_distance=10.0, max_distance=5.0))
    with pytest.raises(ConfigError, match="perfect square"):
        validate_config(desk_config(num_subarrays=3))
    with pytest.raises(ConfigError, match="perfect square"):
        validate_config(desk_config(antennas_per_subarray=2))
    with pytest.raises(ConfigError, match="smaller than the subarray footprint"):
        validate_config(desk_config(aperture_lambdas=0.9))
    with pytest.raises(ConfigError, match="cap"):
        validate_config(make_config(overrides={"schemes": ("exhaustive",)}))
    with pytest.raises(ConfigError, match="eval_channel"):
        validate_config(desk_config(eval_channel="psychic"))


def test_dbm_conversion():
    assert dbm_to_watts(-80.0) == 1e-11
    assert dbm_to_watts(0.0) == 1e-3
    assert dbm_to_watts(30.0) == 1.0
    assert dbm_to_watts(10.0) == 0.01


def test_single_trial_rows():
    cfg = tiny_config(schemes=("proposed",), trials=1)
    rows, finals = run_trial(cfg, 0)
    assert len(rows) == 1
    row = rows[0]
    assert row.experiment == "single"
    assert row.seed == cfg.base_seed
    assert row.sweep_value == cfg.aperture_lambdas
    assert row.iteration >= 1
    assert row.sum_rate > 0
    assert row.sum_rate_exact is not None and row.sum_rate_exact > 0
    assert row.wall_ms == 0.0
    assert finals == [("proposed", cfg.aperture_lambdas, row.sum_rate)]


def test_convergence_rows():
    cfg = tiny_config(experiment="convergence")
    rows, summary = run_experiment(cfg)
    assert summary["experiment"] == "convergence"
    grouped = rows_by_key(rows)
    assert set(grouped) == {(s, t) for s in cfg.schemes for t in range(cfg.trials)}
    for (scheme, trial), chunk in grouped.items():
        iters = [r.iteration for r in chunk]
        assert iters == list(range(len(chunk)))
        rates = [r.sum_rate for r in chunk]
        assert all(b >= a - 1e-12 for a, b in zip(rates, rates[1:]))
        for r in chunk[:-1]:
            assert r.sum_rate_exact is None
        assert chunk[-1].sum_rate_exact is not None
        assert all(r.seed == cfg.base_seed + trial for r in chunk)
        assert all(r.wall_ms == 0.0 for r in chunk)


def test_row_ordering():
    cfg = tiny_config(experiment="power_sweep", trials=2)
    rows, _ = run_experiment(cfg)
    order = {s: i for i, s in enumerate(cfg.schemes)}
    keys = [(order[r.scheme], r.sweep_value, r.trial, r.iteration) for r in rows]
    assert keys == sorted(keys)
    assert {r.sweep_value for r in rows} == set(cfg.power_sweep_dbm)


def test_csv_contract(tmp_path):
    cfg = tiny_config(trials=2)
    rows, _ = run_experiment(cfg)
    text = render_csv(rows)
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == len(rows) + 1
    parsed = list(csv.DictReader(io.StringIO(text)))
    for row, rec in zip(rows, parsed):
        assert float(rec["sum_rate"]) == pytest.approx(row.sum_rate, rel=1e-8)
        assert rec["scheme"] == row.scheme
        assert int(rec["trial"]) == row.trial
    # empty input still yields the header
    assert render_csv([]).splitlines() == [CSV_HEADER]
    out = tmp_path / "r.csv"
    emit_csv(rows, str(out))
    assert out.read_text(encoding="utf-8") == text


def test_summary_matches_rows(tmp_path):
    cfg = tiny_config(trials=4)
    rows, summary = run_experiment(cfg)
    for scheme in cfg.schemes:
        finals = [r.sum_rate for r in rows if r.scheme == scheme]
        (point,) = summary["schemes"][scheme]
        assert point["sweep_value"] == cfg.aperture_lambdas
        assert point["mean"] == pytest.approx(np.mean(finals), rel=1e-12)
        expect_se = np.std(finals, ddof=1) / np.sqrt(len(finals))
        assert point["stderr"] == pytest.approx(expect_se, rel=1e-12)
        assert point["trials"] == len(finals)
    out = tmp_path / "runs.csv"
    spath = summary_path(str(out))
    assert spath.endswith(".summary.json")
    emit_summary(summary, spath)
    loaded = json.loads((tmp_path / "runs.summary.json").read_text())
    assert loaded["trials"] == 4
    assert summary_path("plain.dat").endswith(".summary.json")


def test_exact_channel_reporting():
    cfg = tiny_config(trials=3, schemes=("proposed",), eval_channel="exact")
    rows, summary = run_experiment(cfg)
    exacts = [r.sum_rate_exact for r in rows]
    assert all(e is not None for e in exacts)
    # rows keep both rates; the summary aggregates the exact one
    (point,) = summary["schemes"]["proposed"]
    assert point["mean"] == pytest.approx(np.mean(exacts))
    rows_h, summary_h = run_experiment(tiny_config(trials=3, schemes=("proposed",)))
    (point_h,) = summary_h["schemes"]["proposed"]
    assert point_h["mean"] == pytest.approx(np.mean([r.sum_rate for r in rows_h]))
    assert [r.sum_rate for r in rows] == [r.sum_rate for r in rows_h]


def test_run_determinism_and_workers():
    cfg = tiny_config(trials=3, schemes=("proposed", "sparse_upa"))
    rows_a, sum_a = run_experiment(cfg)
    rows_b, sum_b = run_experiment(cfg)
    assert render_csv(rows_a) == render_csv(rows_b)
    assert sum_a == sum_b
    rows_c, sum_c = run_experiment(desk_config(
        trials=3, max_outer=8, schemes=("proposed", "sparse_upa"), workers=2))
    assert render_csv(rows_c) == render_csv(rows_a)
    assert sum_c == sum_a


def test_wall_clock_recording():
    cfg = tiny_config(trials=1, schemes=("proposed",), record_wall=True)
    rows, _ = run_experiment(cfg)
    assert rows[0].wall_ms > 0.0


def test_strict_modulus_reporting():
    loose = tiny_config(trials=1, schemes=("proposed",))
    strict = tiny_config(trials=1, schemes=("proposed",), strict_modulus=True)
    row_l = run_experiment(loose)[0][0]
    row_s = run_experiment(strict)[0][0]
    assert row_s.sum_rate > 0
    # snapping moduli to one costs a little rate but stays in the same band
    assert row_s.sum_rate == pytest.approx(row_l.sum_rate, rel=0.3)


def test_cli_validate_and_errors(capsys):
    assert cli.main(["validate", "--preset", "desk"]) == 0
    out = capsys.readouterr().out
    assert "configuration ok" in out
    assert cli.main(["validate", "--preset", "desk", "--set", "trials=0"]) == 2
    assert "config error" in capsys.readouterr().err
    assert cli.main(["validate", "--set", "trialsfoo"]) == 2
    assert "KEY=VALUE" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        cli.main(["validate", "--preset", "nope"])
    capsys.readouterr()


def test_cli_run(tmp_path, capsys):
    out = tmp_path / "desk.csv"
    code = cli.main([
        "run", "--preset", "desk", "--trials", "2", "--scheme", "proposed",
        "--set", "max_outer=6", "--out", str(out),
    ])
    text = capsys.readouterr().out
    assert code == 0
    assert "wrote 2 rows" in text
    assert out.exists()
    assert (tmp_path / "desk.summary.json").exists()
    assert out.read_text().splitlines()[0] == CSV_HEADER


def test_cli_seed_override(tmp_path):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    base = ["run", "--preset", "desk", "--trials", "1", "--scheme", "proposed",
            "--set", "max_outer=6"]
    assert cli.main(base + ["--seed", "9", "--out", str(out_a)]) == 0
    assert cli.main(base + ["--seed", "9", "--out", str(out_b)]) == 0
    assert out_a.read_text() == out_b.read_text()
    assert out_a.read_text().splitlines()[1].split(",")[3] == "9"


def test_cli_oracle(capsys):
    assert cli.main(["oracle"]) == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out
    assert "FAIL" not in out


def test_cli_subprocess(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "msabeam.cli", "validate", "--preset", "desk"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "configuration ok" in proc.stdout
