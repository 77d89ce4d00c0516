import math

import pytest

import gfra.analytic as an
from gfra.cli import main
from gfra.experiment import (ConfigError, ExperimentConfig, build_config,
                             csv_text, parse_config_file, run_experiment)

FAST = dict(slots=1200, warmup=200, trials=1, master_seed=9)


class TestConfigValidation:
    def test_defaults_are_valid(self):
        ExperimentConfig().validate()

    def test_bad_mode_and_sweep(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(mode="turbo").validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(sweep="K").validate()

    def test_bad_range(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(start=5, stop=1, step=1).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(step=0.0).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(step=-1.0).validate()

    def test_slots_must_exceed_warmup(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(slots=500, warmup=500).validate()
        # default warmup is max(1000, slots // 10)
        with pytest.raises(ConfigError):
            ExperimentConfig(slots=900).validate()
        assert ExperimentConfig(slots=900, warmup=100).resolved_warmup() == 100
        assert ExperimentConfig(slots=100_000).resolved_warmup() == 10_000

    def test_trials_rules(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(trials=0).validate()
        ExperimentConfig(mode="analytic-only", trials=0).validate()

    def test_integer_sweeps(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(sweep="M", start=60.5, stop=62.5, step=1.0,
                             **FAST).validate()
        ExperimentConfig(sweep="L", start=32, stop=64, step=32,
                         **FAST).validate()

    def test_sweep_values_inclusive(self):
        c = ExperimentConfig(start=2.0, stop=40.0, step=2.0)
        vals = c.sweep_values()
        assert vals[0] == 2.0 and vals[-1] == 40.0 and len(vals) == 20

    def test_params_at_overrides_only_swept_field(self):
        c = ExperimentConfig(sweep="Gamma_dB", start=2, stop=8, step=2,
                             lam=20.0)
        p = c.params_at(4.0)
        assert p.Gamma == pytest.approx(10 ** 0.4)
        assert p.gamma == pytest.approx(10 ** 0.6)
        assert p.lam == 20.0


class TestConfigFile:
    def test_round_trip_with_overrides(self, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(
            "# comment line\n"
            "mode = irt\n"
            "sweep = lambda\n"
            "from = 4\n"
            "to = 8\n"
            "step = 4  # trailing comment\n"
            "slots = 1500\n"
            "warmup = 300\n"
            "seed = 21\n")
        values = parse_config_file(str(cfg))
        config = build_config(values, {"slots": 2000, "mode": None})
        assert config.mode == "irt"
        assert config.slots == 2000       # CLI override wins
        assert config.master_seed == 21   # file value kept
        assert config.start == 4.0

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("sweeps = lambda\n")
        with pytest.raises(ConfigError):
            parse_config_file(str(cfg))

    def test_bad_value(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("slots = many\n")
        with pytest.raises(ConfigError):
            parse_config_file(str(cfg))

    def test_missing_equals(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("mode irt\n")
        with pytest.raises(ConfigError):
            parse_config_file(str(cfg))


class TestRunExperiment:
    def test_both_mode_row_layout(self):
        c = ExperimentConfig(mode="both", sweep="lambda", start=10, stop=18,
                             step=8, **FAST)
        rows = run_experiment(c)
        assert [(r["sweep_value"], r["mode"]) for r in rows] == [
            (10.0, "conventional"), (10.0, "irt"),
            (18.0, "conventional"), (18.0, "irt")]
        for r in rows:
            assert r["stable"] is True
            assert r["unstable"] is False
            assert math.isfinite(r["throughput"])

    def test_simulated_tracks_analytic_within_three_halfwidths(self):
        c = ExperimentConfig(mode="irt", sweep="lambda", start=6, stop=12,
                             step=6, slots=4000, warmup=400, trials=1,
                             master_seed=10)
        for r in run_experiment(c):
            assert abs(r["throughput"] - r["analytic_throughput"]) <= \
                3.0 * r["throughput_hw"]

    def test_analytic_only_has_no_sim_columns(self):
        c = ExperimentConfig(mode="analytic-only", sweep="M", start=60,
                             stop=100, step=20, trials=0)
        rows = run_experiment(c)
        assert len(rows) == 6  # three points, both systems
        for r in rows:
            assert r["throughput"] is None
            assert r["unstable"] is None
            assert math.isfinite(r["analytic_throughput"])
        irt_rows = [r for r in rows if r["mode"] == "irt"]
        assert [r["stable"] for r in irt_rows] == [False, True, True]

    def test_conventional_rows_have_no_tau_bounds(self):
        c = ExperimentConfig(mode="conventional", sweep="lambda", start=10,
                             stop=10, step=1, **FAST)
        row = run_experiment(c)[0]
        assert row["tau_lower"] is None
        assert row["tau_upper"] is None
        assert row["analytic_throughput"] == pytest.approx(
            an.conventional_throughput(10.0, c.params_at(10.0)), rel=1e-12)

    def test_chain_mode(self):
        c = ExperimentConfig(mode="chain", sweep="lambda", start=20, stop=20,
                             step=1, slots=30_000, warmup=3_000, trials=1,
                             master_seed=4)
        row = run_experiment(c)[0]
        assert row["mode"] == "chain"
        assert row["tau_pis"] == pytest.approx(
            row["mean_in_service"] / row["analytic_throughput"], rel=1e-12)
        assert row["tau_lower"] <= row["tau_pis"] <= row["tau_upper"]

    def test_trials_averaging(self):
        c = ExperimentConfig(mode="irt", sweep="lambda", start=10, stop=10,
                             step=1, slots=1500, warmup=300, trials=3,
                             master_seed=5)
        row = run_experiment(c)[0]
        assert math.isfinite(row["throughput_hw"])
        assert row["throughput"] == pytest.approx(
            an.effective_arrival_rate(10.0, 64), rel=0.05)

    def test_point_results_independent_of_other_points(self):
        base = dict(mode="irt", sweep="lambda", slots=1200, warmup=200,
                    trials=1, master_seed=77)
        solo = run_experiment(ExperimentConfig(start=10, stop=10, step=8,
                                               **base))
        pair = run_experiment(ExperimentConfig(start=10, stop=18, step=8,
                                               **base))
        assert solo[0] == pair[0]


class TestDeterminism:
    def test_byte_identical_reruns(self):
        c = ExperimentConfig(mode="both", sweep="lambda", start=10, stop=18,
                             step=8, **FAST)
        a = csv_text(run_experiment(c), c.sweep)
        b = csv_text(run_experiment(c), c.sweep)
        assert a == b

    def test_jobs_do_not_change_output(self):
        kw = dict(mode="irt", sweep="lambda", start=8, stop=16, step=8,
                  slots=900, warmup=100, trials=2, master_seed=13)
        seq = run_experiment(ExperimentConfig(**kw, jobs=1))
        par = run_experiment(ExperimentConfig(**kw, jobs=2))
        assert csv_text(seq, "lambda") == csv_text(par, "lambda")

    def test_csv_header_and_formatting(self):
        c = ExperimentConfig(mode="analytic-only", sweep="lambda", start=20,
                             stop=20, step=1, trials=0)
        text = csv_text(run_experiment(c), c.sweep)
        lines = text.strip().split("\n")
        assert lines[0] == ("lambda,mode,throughput,throughput_hw,tau_pis,"
                            "tau_pis_hw,analytic_throughput,tau_lower,"
                            "tau_upper,tau_approx,stable,unstable,"
                            "mean_in_service")
        conventional = lines[1].split(",")
        assert conventional[1] == "conventional"
        # floats carry six significant digits
        assert conventional[6] == "13.0916"


class TestCli:
    def test_stdout_csv(self, capsys):
        rc = main(["--mode", "irt", "--sweep", "lambda", "--from", "10",
                   "--to", "10", "--step", "1", "--slots", "800",
                   "--warmup", "100", "--seed", "3"])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.startswith("lambda,mode,")
        assert ",irt," in out

    def test_output_file(self, tmp_path, capsys):
        out = tmp_path / "res.csv"
        rc = main(["--mode", "analytic-only", "--trials", "0", "--sweep",
                   "M", "--from", "80", "--to", "100", "--step", "20",
                   "--out", str(out)])
        assert rc == 0
        assert capsys.readouterr().out == ""
        assert out.read_text().startswith("M,mode,")

    def test_invalid_config_exit_code(self, capsys):
        assert main(["--mode", "irt", "--sweep", "lambda", "--from", "9",
                     "--to", "1", "--step", "1"]) == 1
        assert "error" in capsys.readouterr().err

    def test_bad_flag_exit_code(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--sweep", "bogus"])
        assert exc.value.code == 1

    def test_missing_config_file(self, capsys):
        assert main(["--config", "/nonexistent/path.cfg"]) == 1

    def test_all_unstable_exit_code(self, capsys):
        rc = main(["--mode", "irt", "--sweep", "M", "--from", "40", "--to",
                   "50", "--step", "10", "--lambda", "20", "--slots", "3000",
                   "--warmup", "300", "--seed", "6"])
        assert rc == 2
        assert "unstable" in capsys.readouterr().err

    def test_analytic_only_exempt_from_unstable_exit(self, capsys):
        rc = main(["--mode", "analytic-only", "--trials", "0", "--sweep",
                   "M", "--from", "40", "--to", "50", "--step", "10",
                   "--lambda", "20"])
        assert rc == 0

    def test_check_single_criterion(self, capsys):
        assert main(["--check", "--only", "1"]) == 0
        out = capsys.readouterr().out
        assert "criterion 1 [PASS]" in out

    def test_check_unknown_criterion(self, capsys):
        assert main(["--check", "--only", "99"]) == 1
