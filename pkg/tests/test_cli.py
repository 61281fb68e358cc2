import csv
import json

import numpy as np
import pytest

from bilarx import SolverOptions, refine_pipeline, scenario, solve_bil
from bilarx.cli import main


def run_cli(*args):
    return main(list(args))


def write_config(path, **overrides):
    cfg = {"n_a": 1, "n_b": 3, "n_k": 0, "epsilon": 2.0, "lambda": 1e7,
           "gamma": 0.5, "max_iters": 6000}
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture()
def workdir(tmp_path):
    data = tmp_path / "data.csv"
    assert run_cli("simulate", "--scenario", "scenario_arx_noisy",
                   "--out", str(data)) == 0
    cfg = write_config(tmp_path / "cfg.json")
    return tmp_path, data, cfg


class TestSimulate:
    def test_csv_columns_and_determinism(self, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert run_cli("simulate", "--scenario", "scenario_arx_noisy",
                       "--seed", "7", "--out", str(out1)) == 0
        assert run_cli("simulate", "--scenario", "scenario_arx_noisy",
                       "--seed", "7", "--out", str(out2)) == 0
        assert out1.read_text() == out2.read_text()
        rows = list(csv.DictReader(out1.read_text().splitlines()))
        assert set(rows[0]) == {"t", "z", "y"}
        assert len(rows) == 30
        sc = scenario("scenario_arx_noisy", seed=7)
        got = np.array([float(r["y"]) for r in rows])
        assert np.array_equal(got, sc.spec.sequences[0].samples)

    def test_env_seed_override(self, tmp_path, monkeypatch):
        out = tmp_path / "env.csv"
        monkeypatch.setenv("BILARX_SEED", "12")
        assert run_cli("simulate", "--scenario", "scenario_arx_noisy",
                       "--seed", "7", "--out", str(out)) == 0
        rows = list(csv.DictReader(out.read_text().splitlines()))
        got = np.array([float(r["y"]) for r in rows])
        expected = scenario("scenario_arx_noisy", seed=12).spec.sequences[0].samples
        assert np.array_equal(got, expected)

    def test_two_sequences_labeled(self, tmp_path):
        out = tmp_path / "two.csv"
        assert run_cli("simulate", "--scenario", "scenario_two_sequences",
                       "--out", str(out)) == 0
        rows = list(csv.DictReader(out.read_text().splitlines()))
        assert {r["series"] for r in rows} == {"y1", "y2"}

    def test_unknown_scenario_is_data_error(self, tmp_path):
        assert run_cli("simulate", "--scenario", "nope",
                       "--out", str(tmp_path / "x.csv")) == 3


class TestIdentify:
    def test_result_schema_and_roundtrip_floats(self, workdir):
        tmp, data, cfg = workdir
        out = tmp / "result.json"
        code = run_cli("identify", "--data", str(data), "--config", str(cfg),
                       "--out", str(out))
        assert code == 0
        result = json.loads(out.read_text())
        for key in ("a", "b", "scale_note", "u", "singular_values", "rank_gap",
                    "change_points", "diagnostics", "lambda", "objective"):
            assert key in result
        diag = result["diagnostics"]
        assert set(diag) == {"iterations", "primal_residual", "dual_residual",
                             "converged"}
        sol = solve_bil(scenario("scenario_arx_noisy").spec, 1e7,
                        SolverOptions(max_iters=6000))
        assert result["u"]["y1"] == [float(v) for v in sol.u_est[0]]
        assert result["rank_gap"] == sol.rank_gap

    def test_missing_config_exits_1(self, workdir):
        tmp, data, _ = workdir
        assert run_cli("identify", "--data", str(data),
                       "--config", str(tmp / "absent.json"),
                       "--out", str(tmp / "o.json")) == 1

    def test_unknown_config_key_exits_1(self, workdir):
        tmp, data, _ = workdir
        cfg = tmp / "bad.json"
        cfg.write_text(json.dumps({"n_a": 1, "n_b": 3, "lambda": 1.0, "rho2": 5}))
        assert run_cli("identify", "--data", str(data), "--config", str(cfg),
                       "--out", str(tmp / "o.json")) == 1

    def test_missing_lambda_exits_1(self, workdir):
        tmp, data, _ = workdir
        cfg = tmp / "nolam.json"
        cfg.write_text(json.dumps({"n_a": 1, "n_b": 3}))
        assert run_cli("identify", "--data", str(data), "--config", str(cfg),
                       "--out", str(tmp / "o.json")) == 1

    def test_short_data_exits_3(self, workdir, tmp_path):
        tmp, _, cfg = workdir
        short = tmp_path / "short.csv"
        short.write_text("t,y\n1,1.0\n2,2.0\n")
        assert run_cli("identify", "--data", str(short), "--config", str(cfg),
                       "--out", str(tmp / "o.json")) == 3

    def test_non_consecutive_t_exits_3(self, workdir, tmp_path):
        tmp, _, cfg = workdir
        bad = tmp_path / "gap.csv"
        rows = ["t,y"] + [f"{t},{0.1 * t}" for t in range(1, 31) if t != 5]
        bad.write_text("\n".join(rows) + "\n")
        assert run_cli("identify", "--data", str(bad), "--config", str(cfg),
                       "--out", str(tmp / "o.json")) == 3

    def test_unknown_subcommand_exits_1(self):
        assert run_cli("frobnicate") == 1

    def test_nonconvergence_exits_2(self, workdir):
        tmp, data, _ = workdir
        cfg = write_config(tmp / "tiny.json", max_iters=5)
        out = tmp / "o.json"
        assert run_cli("identify", "--data", str(data), "--config", str(cfg),
                       "--out", str(out)) == 2
        assert not json.loads(out.read_text())["diagnostics"]["converged"]

    def test_plot_dir_emission(self, workdir):
        tmp, data, cfg = workdir
        plots = tmp / "plots"
        assert run_cli("identify", "--data", str(data), "--config", str(cfg),
                       "--out", str(tmp / "o.json"), "--plot-dir", str(plots)) == 0
        fit = (plots / "fit_y1.csv").read_text().splitlines()
        assert fit[0] == "t,y_measured,y_model"
        assert len(fit) == 31
        inp = (plots / "input_y1.csv").read_text().splitlines()
        assert inp[0] == "t,u_estimate"


class TestRefine:
    def test_cli_matches_library_pipeline(self, workdir):
        tmp, data, cfg = workdir
        first = tmp / "first.json"
        refined = tmp / "refined.json"
        run_cli("identify", "--data", str(data), "--config", str(cfg),
                "--out", str(first))
        run_cli("refine", "--data", str(data), "--config", str(cfg),
                "--result", str(first), "--gamma", "0.5", "--out", str(refined))
        got = json.loads(refined.read_text())

        sc = scenario("scenario_arx_noisy")
        opts = SolverOptions(max_iters=6000)
        lib = refine_pipeline(sc.spec, solve_bil(sc.spec, 1e7, opts), 0.5, opts)
        assert got["u"]["y1"] == [float(v) for v in lib.u_est[0]]
        assert got["a"] == [float(v) for v in lib.a_est]
        assert got["rank_gap"] == lib.rank_gap

    def test_refine_needs_matching_series(self, workdir):
        tmp, data, cfg = workdir
        prior = tmp / "prior.json"
        prior.write_text(json.dumps({"u": {"other": [0.0] * 30}}))
        assert run_cli("refine", "--data", str(data), "--config", str(cfg),
                       "--result", str(prior), "--gamma", "0.5",
                       "--out", str(tmp / "o.json")) == 1


class TestSweepBaselineRipcheck:
    def test_sweep_payload(self, tmp_path):
        data = tmp_path / "fir.csv"
        run_cli("simulate", "--scenario", "scenario_fir_noisefree",
                "--out", str(data))
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n_a": 0, "n_b": 3, "epsilon": 0.0,
                                   "max_iters": 20000}))
        out = tmp_path / "sweep.json"
        code = run_cli("sweep", "--data", str(data), "--config", str(cfg),
                       "--lambdas", "1e2,1e4", "--gap-target", "1e-3",
                       "--out", str(out))
        assert code == 0
        result = json.loads(out.read_text())
        assert result["sweep"]["qualified"] is True
        assert result["sweep"]["lambda_chosen"] == 100.0
        assert result["rank_gap"] <= 1e-3

    def test_baseline_payload(self, workdir):
        tmp, data, cfg = workdir
        out = tmp / "baseline.json"
        assert run_cli("baseline", "--data", str(data), "--config", str(cfg),
                       "--segments", "4", "--out", str(out)) == 0
        result = json.loads(out.read_text())
        assert set(result) == {"a", "b", "u", "change_points", "segments"}
        assert len(result["u"]["y1"]) == 30

    def test_ripcheck_requires_fir(self, workdir):
        tmp, data, cfg = workdir
        assert run_cli("ripcheck", "--data", str(data), "--config", str(cfg),
                       "--k", "1", "--out", str(tmp / "rip.json")) == 3

    def test_ripcheck_fir_payload(self, tmp_path):
        data = tmp_path / "fir.csv"
        run_cli("simulate", "--scenario", "scenario_fir_noisefree",
                "--out", str(data))
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n_a": 0, "n_b": 3, "epsilon": 0.0}))
        out = tmp_path / "rip.json"
        assert run_cli("ripcheck", "--data", str(data), "--config", str(cfg),
                       "--k", "1", "--out", str(out)) == 0
        result = json.loads(out.read_text())
        assert set(result) == {"k", "rip_epsilon", "patterns_checked",
                               "certified_unique"}
        assert result["certified_unique"] is False  # structural null direction


class TestFloatSerialization:
    def test_17_digit_round_trip(self, tmp_path):
        from bilarx.cli import _dumps

        values = [np.pi, 1.0 / 3.0, 6.62607015e-34, -0.1, 2.0**53 + 1.0]
        text = _dumps({"v": values})
        back = json.loads(text)["v"]
        assert all(a == b for a, b in zip(back, values))
