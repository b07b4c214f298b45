"""CSV traces, method registry, verify reports and CLI exit codes."""

import json

import numpy as np
import pytest

from quadmin import ValidationError
from quadmin.cli import main
from quadmin.harness import (
    CSV_HEADER,
    METHOD_FACTORIES,
    ExperimentConfig,
    expand_methods,
    render_csv,
    run_experiment,
    verify_experiment,
)


class TestMethodRegistry:
    def test_all_expands_in_registration_order(self):
        assert expand_methods("all") == (
            "gd-constant", "gd-polyak", "gd-polyak-2x", "hb-constant",
            "chebyshev", "hb-polyak", "cg")

    def test_explicit_list(self):
        assert expand_methods("cg, hb-polyak") == ("cg", "hb-polyak")

    def test_qmin_spec_accepted(self):
        assert expand_methods("qmin:x^2") == ("qmin:x^2",)

    def test_unknown_rejected(self):
        with pytest.raises(ValidationError):
            expand_methods("nosuch")


class TestExperimentConfig:
    def test_rejects_bad_condition_number(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(cond=0.5)

    def test_rejects_negative_iters(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(iters=-1)

    def test_rejects_unknown_method(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(methods=("nosuch",))


class TestCSV:
    def test_byte_identical_across_runs(self):
        cfg = ExperimentConfig(dim=6, cond=10.0, seed=2, iters=9)
        a = render_csv(run_experiment(cfg)[0], cfg)
        b = render_csv(run_experiment(cfg)[0], cfg)
        assert a == b

    def test_header_exact(self):
        cfg = ExperimentConfig(dim=3, cond=2.0, iters=2, methods=("cg",))
        lines = render_csv(run_experiment(cfg)[0], cfg).splitlines()
        data_start = next(i for i, l in enumerate(lines) if not l.startswith("#"))
        assert lines[data_start] == CSV_HEADER

    def test_row_count(self):
        cfg = ExperimentConfig(dim=6, cond=10.0, seed=0, iters=9)
        trajs, _ = run_experiment(cfg)
        lines = render_csv(trajs, cfg).splitlines()
        data = [l for l in lines if not l.startswith("#")][1:]
        assert len(data) == sum(t.n_records for t in trajs)

    def test_adaptive_fields_empty_at_t0(self):
        cfg = ExperimentConfig(dim=4, cond=5.0, iters=3, methods=("hb-polyak",))
        lines = render_csv(run_experiment(cfg)[0], cfg).splitlines()
        first_data = next(l for l in lines if l.startswith("hb-polyak,0,"))
        fields = first_data.split(",")
        assert fields[5] == "" and fields[6] == "" and fields[7] == ""

    def test_seed_changes_output(self):
        cfg_a = ExperimentConfig(dim=5, cond=10.0, seed=0, iters=4)
        cfg_b = ExperimentConfig(dim=5, cond=10.0, seed=1, iters=4)
        assert (render_csv(run_experiment(cfg_a)[0], cfg_a)
                != render_csv(run_experiment(cfg_b)[0], cfg_b))

    def test_error_tagged_on_failing_row(self):
        # factor-2 overshoots past a false claimed optimum, proving it wrong
        cfg = ExperimentConfig(dim=6, cond=10.0, seed=0, iters=400,
                               methods=("gd-polyak-2x",), fstar=3.0)
        trajs, failed = run_experiment(cfg)
        assert failed == ["gd-polyak-2x"]
        lines = render_csv(trajs, cfg).splitlines()
        assert "InvalidFStarError" in lines[-1]
        assert not any("InvalidFStarError" in l for l in lines[:-1])


class TestSpectrumFileIntegration:
    def test_uniform_spectrum(self):
        cfg = ExperimentConfig(dim=5, cond=9.0, spectrum="uniform", iters=6,
                               methods=("hb-polyak",))
        trajs, _ = run_experiment(cfg)
        assert trajs[0].converged  # five distinct eigenvalues, six iterations

    def test_unknown_spectrum_rejected(self):
        with pytest.raises(ValidationError):
            run_experiment(ExperimentConfig(spectrum="nosuch", iters=1,
                                            methods=("cg",)))

    def test_file_spectrum(self, tmp_path):
        path = tmp_path / "spec.txt"
        path.write_text("1.0\n2.0\n4.0\n")
        cfg = ExperimentConfig(dim=3, spectrum=f"file:{path}", iters=5,
                               methods=("hb-polyak",))
        trajs, _ = run_experiment(cfg)
        # three distinct eigenvalues: convergence in three steps
        assert trajs[0].n_records == 4
        assert trajs[0].converged


class TestVerify:
    def test_passes_at_desk_scale(self):
        cfg = ExperimentConfig(dim=10, cond=10.0, seed=0, iters=10)
        report = verify_experiment(cfg)
        assert report["pass"], report
        assert report["checks"]["projection_deviation[hb-polyak]"]["value"] <= 1e-6

    def test_two_eigenvalue_explicit(self, tmp_path):
        path = tmp_path / "two.txt"
        path.write_text("1.0\n3.0\n")
        cfg = ExperimentConfig(dim=2, spectrum=f"file:{path}", seed=0, iters=4)
        report = verify_experiment(cfg)
        assert report["pass"]

    def test_dim_cap_enforced(self):
        with pytest.raises(ValidationError):
            verify_experiment(ExperimentConfig(dim=60, iters=5))

    def test_instance_optimality_check_present(self):
        cfg = ExperimentConfig(dim=8, cond=10.0, seed=1, iters=12)
        report = verify_experiment(cfg)
        assert report["checks"]["instance_optimality[hb-polyak]"]["pass"]


class TestCLI:
    def test_run_tiny(self, tmp_path):
        out = tmp_path / "tiny.csv"
        code = main(["run", "--dim", "1", "--cond", "1", "--iters", "1",
                     "--methods", "hb-polyak", "--out", str(out)])
        assert code == 0
        data = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert len(data) == 3  # header + t=0 + t=1

    def test_run_writes_deterministic_file(self, tmp_path):
        out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["run", "--dim", "6", "--cond", "10", "--seed", "3",
                "--iters", "8", "--methods", "all"]
        assert main(args + ["--out", str(out_a)]) == 0
        assert main(args + ["--out", str(out_b)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_unknown_method_usage_error(self, tmp_path):
        code = main(["run", "--methods", "nosuch",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 2

    def test_degenerate_exit_code(self, tmp_path):
        out = tmp_path / "bad.csv"
        code = main(["run", "--dim", "6", "--cond", "10", "--iters", "400",
                     "--methods", "gd-polyak-2x", "--fstar", "3.0",
                     "--out", str(out)])
        assert code == 3
        assert "InvalidFStarError" in out.read_text()

    def test_verify_exit_and_report(self, tmp_path):
        out = tmp_path / "report.json"
        code = main(["verify", "--dim", "10", "--cond", "10", "--iters", "10",
                     "--out", str(out)])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["pass"] is True

    def test_verify_dim_cap(self):
        assert main(["verify", "--dim", "80"]) == 2

    def test_plot_files_written(self, tmp_path):
        pytest.importorskip("matplotlib")
        out = tmp_path / "r.csv"
        code = main(["run", "--dim", "4", "--cond", "5", "--iters", "5",
                     "--methods", "cg,hb-polyak", "--out", str(out), "--plot"])
        assert code == 0
        assert (tmp_path / "r_dist.png").exists()
        assert (tmp_path / "r_excess.png").exists()

    def test_registry_matches_cli_contract(self):
        assert list(METHOD_FACTORIES) == ["gd-constant", "gd-polyak",
                                          "gd-polyak-2x", "hb-constant",
                                          "chebyshev", "hb-polyak", "cg"]
