"""End-to-end tests of the command-line interface.

Each test invokes ``langdei.cli.main`` directly and inspects exit codes,
stderr, and output files. Exit-code contract: 0 success, 1 undefined metric,
2 invalid input.
"""

import csv

import pytest

from langdei.cli import main
from langdei.io import bundled_path, load_curve_registry, load_plan


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture()
def data(tmp_path):
    """Paths of bundled inputs plus a scratch directory."""
    return {
        "speakers": str(bundled_path("speakers.csv")),
        "tasks": str(bundled_path("tasks.csv")),
        "goods": str(bundled_path("goods.csv")),
        "curves": str(bundled_path("curves_muril.txt")),
        "perf": str(bundled_path("fixtures_ner_equal.csv")),
        "amrs": str(bundled_path("amrs_printed.csv")),
        "tmp": tmp_path,
    }


class TestMetricsCommand:
    def test_bundled_ner_fixture(self, data):
        out = data["tmp"] / "sc.csv"
        rc = main([
            "metrics", "--perf", data["perf"], "--tasks", data["tasks"],
            "--speakers", data["speakers"], "--tau", "1", "--out", str(out),
        ])
        assert rc == 0
        (row,) = read_csv(out)
        assert float(row["gini"]) == pytest.approx(13 / 23, abs=5e-5)
        assert float(row["m_tau"]) == pytest.approx(70.73, abs=0.05)

    def test_tau_zero_single_perfect_language_percent_scale(self, data):
        perf = write(
            data["tmp"] / "perf.csv",
            "task,model,train_lang,target_lang,score\nner,m,en,hi,97.6\n",
        )
        out = data["tmp"] / "sc.csv"
        rc = main(["metrics", "--perf", perf, "--tasks", data["tasks"], "--tau", "0", "--out", str(out)])
        assert rc == 0
        (row,) = read_csv(out)
        assert float(row["m_tau"]) == pytest.approx(100 / 23, abs=1e-6)

    def test_missing_speakers_file_names_it(self, data, capsys):
        rc = main([
            "metrics", "--perf", data["perf"], "--tasks", data["tasks"],
            "--speakers", str(data["tmp"] / "missing_speakers.csv"),
            "--tau", "1", "--out", str(data["tmp"] / "x.csv"),
        ])
        assert rc == 2
        assert "missing_speakers.csv" in capsys.readouterr().err

    def test_tau_positive_without_speakers_flag(self, data, capsys):
        rc = main([
            "metrics", "--perf", data["perf"], "--tasks", data["tasks"],
            "--tau", "1", "--out", str(data["tmp"] / "x.csv"),
        ])
        assert rc == 2
        assert "--speakers" in capsys.readouterr().err

    def test_tested_only_switches_mode(self, data):
        out_all = data["tmp"] / "all.csv"
        out_tested = data["tmp"] / "tested.csv"
        base = [
            "metrics", "--perf", data["perf"], "--tasks", data["tasks"],
            "--speakers", data["speakers"], "--tau", "1",
        ]
        assert main(base + ["--out", str(out_all)]) == 0
        assert main(base + ["--tested-only", "--out", str(out_tested)]) == 0
        all_row, tested_row = read_csv(out_all)[0], read_csv(out_tested)[0]
        assert int(tested_row["universe"]) == 10
        # Equal utilities on every tested language: dispersion collapses to 0.
        assert float(tested_row["gini"]) == pytest.approx(0.0, abs=1e-9)
        assert float(tested_row["m_tau"]) > float(all_row["m_tau"])

    def test_unit_scale_output(self, data):
        perf = write(
            data["tmp"] / "perf.csv",
            "task,model,train_lang,target_lang,score\nner,m,en,hi,0.976\n",
        )
        out = data["tmp"] / "sc.csv"
        rc = main(["metrics", "--perf", perf, "--tasks", data["tasks"], "--tau", "0",
                   "--scale", "unit", "--out", str(out)])
        assert rc == 0
        (row,) = read_csv(out)
        assert float(row["m_tau"]) == pytest.approx(1 / 23, abs=1e-9)

    def test_lorenz_output(self, data):
        out = data["tmp"] / "sc.csv"
        lorenz = data["tmp"] / "lz.csv"
        rc = main([
            "metrics", "--perf", data["perf"], "--tasks", data["tasks"],
            "--speakers", data["speakers"], "--out", str(out), "--lorenz-out", str(lorenz),
        ])
        assert rc == 0
        rows = read_csv(lorenz)
        assert len(rows) == 24  # 23 languages + origin point
        assert rows[0]["population_fraction"] == "0"
        assert rows[-1]["cumulative_share"] == "1"

    def test_failure_leaves_no_output_file(self, data, tmp_path):
        bad_perf = write(tmp_path / "bad.csv", "task,model,train_lang,target_lang,score\nner,m,en,hi,abc\n")
        out = tmp_path / "never.csv"
        rc = main(["metrics", "--perf", bad_perf, "--tasks", data["tasks"], "--tau", "0", "--out", str(out)])
        assert rc == 2
        assert not out.exists()

    def test_unwritable_second_output_leaves_no_first_output(self, data, tmp_path):
        out = tmp_path / "sc.csv"
        lorenz = tmp_path / "no_such_dir" / "lz.csv"
        rc = main([
            "metrics", "--perf", data["perf"], "--tasks", data["tasks"],
            "--speakers", data["speakers"], "--out", str(out), "--lorenz-out", str(lorenz),
        ])
        assert rc == 2
        assert not out.exists()
        assert list(tmp_path.iterdir()) == []

    def test_all_zero_scores_exit_code_1(self, data, tmp_path):
        perf = write(tmp_path / "perf.csv", "task,model,train_lang,target_lang,score\nner,m,en,hi,0\n")
        out = tmp_path / "never.csv"
        rc = main(["metrics", "--perf", perf, "--tasks", data["tasks"], "--tau", "0", "--out", str(out)])
        assert rc == 1
        assert not out.exists()


class TestEfficiencyCommand:
    def test_perf_only_weights_reproduce_perf_column(self, data):
        out = data["tmp"] / "eff.csv"
        rc = main(["efficiency", "--goods", data["goods"], "--weights", "1,0,0", "--out", str(out)])
        assert rc == 0
        for row in read_csv(out):
            assert float(row["efficiency"]) == pytest.approx(float(row["perf"]))

    def test_printed_override_spot_value(self, data, tmp_path):
        goods = write(
            tmp_path / "goods.csv",
            "model,group,task,throughput,memory_gb,perf\nmuril_base,regional,qa,15.7,0.9,76.1\n",
        )
        out = tmp_path / "eff.csv"
        rc = main(["efficiency", "--goods", goods, "--amrs-override", data["amrs"], "--out", str(out)])
        assert rc == 0
        (row,) = read_csv(out)
        assert float(row["efficiency"]) == pytest.approx(79.37, abs=0.05)

    def test_zero_override_rate_rejected(self, data, tmp_path):
        override = write(tmp_path / "amrs.csv", "group,task,metric,amrs\nregional,qa,throughput,0\n")
        rc = main(["efficiency", "--goods", data["goods"], "--amrs-override", override,
                   "--out", str(tmp_path / "x.csv")])
        assert rc == 2

    def test_singleton_group_names_it(self, tmp_path, capsys):
        goods = write(
            tmp_path / "goods.csv",
            "model,group,task,throughput,memory_gb,perf\nonly,alone,ner,10,1,50\n",
        )
        rc = main(["efficiency", "--goods", goods, "--out", str(tmp_path / "x.csv")])
        assert rc == 2
        assert "alone" in capsys.readouterr().err

    def test_amrs_out_written(self, data):
        out = data["tmp"] / "eff.csv"
        amrs_out = data["tmp"] / "amrs.csv"
        rc = main(["efficiency", "--goods", data["goods"], "--out", str(out), "--amrs-out", str(amrs_out)])
        assert rc == 0
        assert len(read_csv(amrs_out)) == 16  # 2 groups x 4 tasks x 2 metrics

    def test_custom_memory_ceiling(self, data, tmp_path):
        goods = write(
            tmp_path / "goods.csv",
            "model,group,task,throughput,memory_gb,perf\na,g,t,10,1,50\nb,g,t,20,2,70\n",
        )
        out = tmp_path / "eff.csv"
        rc = main(["efficiency", "--goods", goods, "--max-memory", "8", "--out", str(out)])
        assert rc == 0
        by_model = {r["model"]: r for r in read_csv(out)}
        assert float(by_model["a"]["memory_saved"]) == 7.0
        assert float(by_model["b"]["memory_saved"]) == 6.0


def synth_trajectories(tmp_path, pairs=(("bn", "hi"), ("en", "hi"), ("ta", "hi"))):
    lines = ["source,target,samples,score"]
    coeffs = {"bn": (0.9, -8.0, 0.35), "en": (1.1, -5.0, 0.25), "ta": (0.8, -12.0, 0.45)}
    for source, target in pairs:
        a, b, c = coeffs[source]
        for k in range(1, 31):
            x = 320 * k
            lines.append(f"{source},{target},{x},{100 * (a + b * x ** (-c))}")
    return write(tmp_path / "traj.csv", "\n".join(lines) + "\n")


class TestFitCommand:
    def test_noiseless_pairs_recovered(self, tmp_path):
        traj = synth_trajectories(tmp_path)
        out = tmp_path / "curves.txt"
        rc = main(["fit", "--trajectories", traj, "--out", str(out)])
        assert rc == 0
        registry = load_curve_registry(out)
        assert len(registry) == 3
        for curve in registry.values():
            assert curve.r_squared >= 1 - 1e-9
        assert registry[("bn", "hi")].a == pytest.approx(0.9, rel=1e-3)

    def test_short_pair_listed_in_rejects(self, tmp_path):
        traj = synth_trajectories(tmp_path)
        with open(traj, "a") as fh:
            fh.write("ur,hi,320,40\nur,hi,640,50\n")
        out = tmp_path / "curves.txt"
        rc = main(["fit", "--trajectories", traj, "--out", str(out)])
        assert rc == 0
        text = out.read_text()
        assert "# reject source=ur target=hi" in text
        assert len(load_curve_registry(out)) == 3

    def test_empty_trajectories_exit_2(self, tmp_path):
        traj = write(tmp_path / "traj.csv", "source,target,samples,score\n")
        rc = main(["fit", "--trajectories", traj, "--out", str(tmp_path / "x.txt")])
        assert rc == 2

    def test_c_range_flag(self, tmp_path):
        traj = synth_trajectories(tmp_path, pairs=(("bn", "hi"),))
        out = tmp_path / "curves.txt"
        rc = main(["fit", "--trajectories", traj, "--c-range", "0:2", "--out", str(out)])
        assert rc == 0
        assert 0.0 <= load_curve_registry(out)[("bn", "hi")].c <= 2.0

    def test_unit_scale_trajectories(self, tmp_path):
        lines = ["source,target,samples,score"]
        for k in range(1, 31):
            x = 320 * k
            lines.append(f"bn,hi,{x},{0.9 - 8.0 * x ** -0.35}")
        traj = write(tmp_path / "traj.csv", "\n".join(lines) + "\n")
        out = tmp_path / "curves.txt"
        rc = main(["fit", "--trajectories", traj, "--scale", "unit", "--out", str(out)])
        assert rc == 0
        fitted = load_curve_registry(out)[("bn", "hi")]
        assert fitted.a == pytest.approx(0.9, rel=1e-3)
        assert fitted.b == pytest.approx(-8.0, rel=1e-3)


class TestAllocateCommand:
    def test_egalitarian_budget_seven(self, data):
        out = data["tmp"] / "plan.txt"
        rc = main([
            "allocate", "--curves", data["curves"], "--budget", "7",
            "--strategy", "egalitarian", "--tau", "0", "--missing", "permissive",
            "--out", str(out),
        ])
        assert rc == 0
        plan = load_plan(out)
        assert set(plan.counts.values()) == {1}

    def test_single_source_hi(self, data):
        out = data["tmp"] / "plan.txt"
        rc = main([
            "allocate", "--curves", data["curves"], "--budget", "5000",
            "--strategy", "single:hi", "--tau", "0", "--missing", "permissive",
            "--out", str(out),
        ])
        assert rc == 0
        plan = load_plan(out)
        assert plan.counts["hi"] == 5000
        assert sum(plan.counts.values()) == 5000

    def test_greedy_near_uniform_budget_1000(self, data):
        out = data["tmp"] / "plan.txt"
        trace = data["tmp"] / "trace.csv"
        rc = main([
            "allocate", "--curves", data["curves"], "--budget", "1000",
            "--strategy", "greedy", "--tau", "1", "--speakers", data["speakers"],
            "--missing", "permissive", "--out", str(out), "--trace-out", str(trace),
        ])
        assert rc == 0
        plan = load_plan(out)
        assert all(107 <= n <= 179 for n in plan.counts.values())
        assert sum(plan.counts.values()) == 1000
        with open(trace) as fh:
            assert sum(1 for _ in fh) == 1001  # header + one row per step

    def test_strict_missing_curve_lists_pairs(self, data, capsys):
        rc = main([
            "allocate", "--curves", data["curves"], "--budget", "10",
            "--strategy", "greedy", "--tau", "0", "--out", str(data["tmp"] / "x.txt"),
        ])
        assert rc == 2
        assert "(ur, en)" in capsys.readouterr().err

    def test_tau_positive_requires_speakers(self, data, capsys):
        rc = main([
            "allocate", "--curves", data["curves"], "--budget", "10",
            "--strategy", "egalitarian", "--missing", "permissive",
            "--out", str(data["tmp"] / "x.txt"),
        ])
        assert rc == 2
        assert "--speakers" in capsys.readouterr().err

    def test_unknown_strategy_rejected(self, data, capsys):
        rc = main([
            "allocate", "--curves", data["curves"], "--budget", "10",
            "--strategy", "zigzag", "--tau", "0", "--missing", "permissive",
            "--out", str(data["tmp"] / "x.txt"),
        ])
        assert rc == 2
        assert "zigzag" in capsys.readouterr().err

    def test_source_and_target_subsets(self, data):
        out = data["tmp"] / "plan.txt"
        rc = main([
            "allocate", "--curves", data["curves"], "--budget", "10",
            "--strategy", "greedy", "--tau", "0",
            "--sources", "bn,hi", "--targets", "bn,hi,ta",
            "--out", str(out),
        ])
        assert rc == 0
        plan = load_plan(out)
        assert set(plan.counts) == {"bn", "hi"}
        assert set(plan.evaluation.utilities) == {"bn", "hi", "ta"}

    def test_plan_contains_surrogate_evaluation(self, data):
        out = data["tmp"] / "plan.txt"
        rc = main([
            "allocate", "--curves", data["curves"], "--budget", "100",
            "--strategy", "egalitarian", "--tau", "0", "--missing", "permissive",
            "--composition", "mean", "--out", str(out),
        ])
        assert rc == 0
        assert "surrogate=true" in out.read_text()
        assert load_plan(out).evaluation.mode == "mean"


class TestReportCommand:
    def run_pipeline(self, data, where):
        # Relative output paths: report bytes must not depend on the absolute
        # location of the run directory.
        where.mkdir(exist_ok=True)
        sc, lz = "out/scorecard.csv", "out/lorenz.csv"
        eff, amrs = "out/efficiency.csv", "out/amrs.csv"
        plan, trace = "out/plan.txt", "out/trace.csv"
        report = "out/report.md"
        assert main(["metrics", "--perf", data["perf"], "--tasks", data["tasks"],
                     "--speakers", data["speakers"], "--out", sc, "--lorenz-out", lz]) == 0
        assert main(["efficiency", "--goods", data["goods"], "--out", eff,
                     "--amrs-out", amrs]) == 0
        assert main(["allocate", "--curves", data["curves"], "--budget", "50",
                     "--strategy", "greedy", "--tau", "1", "--speakers", data["speakers"],
                     "--missing", "permissive", "--out", plan, "--trace-out", trace]) == 0
        assert main(["report", "--scorecard", sc, "--lorenz", lz,
                     "--amrs", amrs, "--efficiency", eff,
                     "--curves", data["curves"], "--plan", plan, "--trace", trace,
                     "--out", report]) == 0
        return where / "report.md"

    def test_full_pipeline_deterministic(self, data, tmp_path, monkeypatch):
        # Same relative paths from two working directories: bytes must match.
        outputs = []
        for name in ("run1", "run2"):
            base = tmp_path / name
            base.mkdir()
            monkeypatch.chdir(base)
            self.run_pipeline(data, base / "out")
            files = sorted(p.name for p in (base / "out").iterdir())
            outputs.append({f: (base / "out" / f).read_bytes() for f in files})
        assert outputs[0] == outputs[1]

    def test_report_mentions_surrogate_and_lorenz(self, data, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        report = self.run_pipeline(data, tmp_path / "out")
        text = report.read_text()
        assert "Surrogate evaluation" in text
        assert "not measured" in text
        assert "lorenz.csv" in text
        assert "sha256" in text

    def test_missing_artifact_exit_2(self, data, capsys):
        rc = main(["report", "--scorecard", str(data["tmp"] / "ghost.csv"),
                   "--out", str(data["tmp"] / "r.md")])
        assert rc == 2
        assert "ghost.csv" in capsys.readouterr().err

    def test_no_inputs_rejected(self, data):
        assert main(["report", "--out", str(data["tmp"] / "r.md")]) == 2


def test_cli_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["metrics", "--tau", "7", "--perf", "x", "--tasks", "y", "--out", "z"])
    assert exc.value.code == 2
