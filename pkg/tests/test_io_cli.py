"""Problem-file schema, CSV round trips, CLI exit codes and outputs."""

import json
import pathlib

import numpy as np
import pytest

import feaskit as fk
from feaskit.cli import main as cli_main
from feaskit.io import ProblemFile, serialize_problem_file

DATA = pathlib.Path(__file__).parent / "data"
PROBLEMS = pathlib.Path(__file__).parent.parent / "problems"

MINIMAL = {
    "version": 1,
    "dimension": 2,
    "sets": [{"type": "halfspace", "normal": [1.0, 0.0], "offset": 0.0}],
    "schedule": {
        "kind": "fixed",
        "plans": [{"strings": [[1]], "weights": [1.0]}],
        "s": 1,
        "omega_min": 1.0,
        "max_string_length": 1,
    },
    "run": {"mode": "exact", "x0": [2.0, 3.0]},
}


def parse(doc) -> ProblemFile:
    return fk.parse_problem(json.dumps(doc))


class TestParse:
    def test_minimal_file_parses(self):
        pf = parse(MINIMAL)
        prob = pf.build_problem()
        assert prob.num_sets == 1
        cfg = pf.build_config()
        assert cfg.max_iter == 100_000 and cfg.record_every == 1

    def test_weights_must_sum_to_one(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["schedule"]["plans"][0] = {"strings": [[1], [1]], "weights": [0.5, 0.6]}
        with pytest.raises(fk.ProblemFileError, match="sum to 1"):
            parse(doc)

    def test_perturbation_ratio_one_not_summable(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["run"]["mode"] = "perturbed"
        doc["perturbation"] = {"kind": "geometric", "e0": 0.1, "ratio": 1.0,
                               "direction": {"kind": "random_unit", "seed": 1}}
        with pytest.raises(fk.ProblemFileError, match="summable"):
            parse(doc)

    def test_unknown_keys_rejected_with_path(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["run"]["warp_factor"] = 9
        with pytest.raises(fk.ProblemFileError, match=r"\$\.run\.warp_factor"):
            parse(doc)

    def test_dimension_mismatch_reported_at_path(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["sets"][0]["normal"] = [1.0, 0.0, 0.0]
        with pytest.raises(fk.ProblemFileError, match=r"sets\[0\]\.normal"):
            parse(doc)

    def test_random_schedule_needs_seed(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["schedule"]["kind"] = "random"
        with pytest.raises(fk.ProblemFileError, match="seed"):
            parse(doc)

    def test_string_index_out_of_range(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["schedule"]["plans"][0]["strings"] = [[2]]
        with pytest.raises(fk.ProblemFileError, match=r"\[1, 1\]"):
            parse(doc)

    def test_all_errors_collected(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["run"]["max_iter"] = 0
        doc["sets"][0]["offset"] = "zero"
        with pytest.raises(fk.ProblemFileError) as exc:
            parse(doc)
        assert len(exc.value.errors) >= 2

    def test_superiorized_requires_steering(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["run"]["mode"] = "superiorized"
        with pytest.raises(fk.ProblemFileError, match="steering"):
            parse(doc)

    def test_error_band_requires_exact_mode(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["run"]["mode"] = "perturbed"
        doc["perturbation"] = {"kind": "geometric", "e0": 0.1, "ratio": 0.5,
                               "direction": {"kind": "random_unit", "seed": 1}}
        doc["analysis"] = {"checks": ["error_band"],
                           "kappa": {"center": [0.0, 0.0], "radius": 1.0,
                                     "samples": 10, "seed": 0}}
        with pytest.raises(fk.ProblemFileError, match="error_band"):
            parse(doc)

    def test_round_trip(self):
        for path in PROBLEMS.glob("*.json"):
            pf = fk.parse_problem(path.read_text())
            again = fk.parse_problem(serialize_problem_file(pf))
            assert pf == again

    def test_parse_accepts_a_path(self):
        path = PROBLEMS / "two_lines_pi3.json"
        assert fk.parse_problem(str(path)) == fk.parse_problem(path.read_text())


class TestTraceCsv:
    def make_trace(self, mode="exact"):
        prob = fk.Problem(sets=(fk.HalfSpace([1.0, 0.0], 0.0),
                                fk.HalfSpace([0.0, 1.0], 0.0)))
        sched = fk.cyclic_single_index_schedule(2)
        if mode == "perturbed":
            cfg = fk.RunConfig(mode=mode, x0=np.array([2.0, 4.0]),
                               max_iter=30, stop_residual=1e-13)
            pert = fk.PerturbationSchedule.geometric(0.25, 0.5, seed=3)
            return prob, fk.run(prob, sched, cfg, pert=pert), pert
        cfg = fk.RunConfig(mode=mode, x0=np.array([2.0, 4.0]), max_iter=30)
        return prob, fk.run(prob, sched, cfg), None

    def test_round_trip_is_bit_exact(self, tmp_path):
        _, tr, _ = self.make_trace()
        p = tmp_path / "t.csv"
        fk.write_trace_csv(tr, p)
        cols = fk.read_trace_csv(p)
        assert np.array_equal(cols["max_residual"], tr.residual_max)
        assert np.array_equal(cols["step_norm"][:-1], tr.step_norms)

    def test_feasible_start_single_row(self, tmp_path):
        prob = fk.Problem(sets=(fk.HalfSpace([1.0, 0.0], 0.0),))
        sched = fk.fixed_schedule(fk.single_string_plan(1))
        tr = fk.run(prob, sched, fk.RunConfig(mode="exact", x0=np.array([-1.0, 0.0])))
        p = tmp_path / "t.csv"
        fk.write_trace_csv(tr, p)
        lines = p.read_text().strip().splitlines()
        assert len(lines) == 2  # header + k=0
        assert lines[1].startswith("0,0,")

    def test_row_count_is_iterations_plus_one(self, tmp_path):
        prob = fk.Problem(sets=(
            fk.LinearSubspace(basis=[[1.0, 0.0]]),
            fk.LinearSubspace(basis=[[np.cos(0.5), np.sin(0.5)]]),
        ))
        sched = fk.cyclic_single_index_schedule(2)
        cfg = fk.RunConfig(mode="exact", x0=np.array([1.0, 0.5]),
                           max_iter=100, stop_residual=0.0)
        tr = fk.run(prob, sched, cfg)
        assert tr.iterations_used == 100
        p = tmp_path / "t.csv"
        fk.write_trace_csv(tr, p)
        assert len(p.read_text().strip().splitlines()) == 102

    def test_perturbed_e_column_equals_schedule(self, tmp_path):
        _, tr, pert = self.make_trace("perturbed")
        p = tmp_path / "t.csv"
        fk.write_trace_csv(tr, p)
        cols = fk.read_trace_csv(p)
        for k in range(tr.iterations_used):
            assert cols["e_k"][k] == pert.magnitude(k)


class TestCli:
    def test_solve_writes_all_outputs(self, tmp_path):
        out = tmp_path / "run"
        code = cli_main(["solve", str(PROBLEMS / "two_lines_pi3.json"),
                         "--out-dir", str(out)])
        assert code == 0
        for name in ("trace.csv", "report.json", "convergence.png"):
            assert (out / name).exists()
        report = json.loads((out / "report.json").read_text())
        names = [c["name"] for c in report["checks"]]
        assert names == ["kappa", "fejer", "error_band", "angle"]
        assert all(c["status"] in ("pass", "fail", "skipped") for c in report["checks"])

    def test_solve_golden_trace(self, tmp_path):
        out = tmp_path / "run"
        assert cli_main(["solve", str(PROBLEMS / "two_lines_pi3.json"),
                         "--out-dir", str(out)]) == 0
        golden = (DATA / "golden_two_lines_trace.csv").read_bytes()
        assert (out / "trace.csv").read_bytes() == golden

    def test_verify_exit_zero_on_consistent_trace(self, tmp_path):
        out = tmp_path / "run"
        cli_main(["solve", str(PROBLEMS / "two_lines_pi3.json"), "--out-dir", str(out)])
        code = cli_main(["verify", str(out / "trace.csv"),
                         "--problem", str(PROBLEMS / "two_lines_pi3.json")])
        assert code == 0

    def test_verify_detects_tampered_trace(self, tmp_path):
        out = tmp_path / "run"
        cli_main(["solve", str(PROBLEMS / "two_lines_pi3.json"), "--out-dir", str(out)])
        path = out / "trace.csv"
        lines = path.read_text().splitlines()
        parts = lines[3].split(",")
        parts[1] = format(float(parts[1]) * 2.0, ".17g")
        lines[3] = ",".join(parts)
        path.write_text("\n".join(lines) + "\n")
        code = cli_main(["verify", str(path),
                         "--problem", str(PROBLEMS / "two_lines_pi3.json")])
        assert code == 1

    def test_malformed_file_exits_2_without_outputs(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        out = tmp_path / "nothing"
        assert cli_main(["solve", str(bad), "--out-dir", str(out)]) == 2
        assert not out.exists()

    def test_schema_violation_exits_2(self, tmp_path):
        doc = json.loads(json.dumps(MINIMAL))
        doc["schedule"]["plans"][0]["weights"] = [0.9]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert cli_main(["solve", str(bad), "--out-dir", str(tmp_path / "o")]) == 2

    def test_perturbed_sample_passes(self, tmp_path):
        code = cli_main(["solve", str(PROBLEMS / "quadrant_perturbed.json"),
                         "--out-dir", str(tmp_path / "p")])
        assert code == 0

    def test_superiorized_sample_passes(self, tmp_path):
        code = cli_main(["solve", str(PROBLEMS / "two_lines_superiorized.json"),
                         "--out-dir", str(tmp_path / "s")])
        assert code == 0
        report = json.loads((tmp_path / "s" / "report.json").read_text())
        assert report["summary"]["mode"] == "superiorized"
        assert "phi_final" in report["summary"]

    def test_jobs_flag_gives_same_report(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cli_main(["solve", str(PROBLEMS / "quadrant_perturbed.json"), "--out-dir", str(a)])
        cli_main(["--jobs", "4", "solve", str(PROBLEMS / "quadrant_perturbed.json"),
                  "--out-dir", str(b)])
        ra = json.loads((a / "report.json").read_text())
        rb = json.loads((b / "report.json").read_text())
        assert ra == rb

    def test_seed_override_changes_perturbation(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cli_main(["solve", str(PROBLEMS / "quadrant_perturbed.json"), "--out-dir", str(a)])
        cli_main(["--seed-override", "999", "solve",
                  str(PROBLEMS / "quadrant_perturbed.json"), "--out-dir", str(b)])
        ta = (a / "trace.csv").read_text()
        tb = (b / "trace.csv").read_text()
        assert ta != tb

    def test_kappa_subcommand(self, capsys):
        code = cli_main(["kappa", str(PROBLEMS / "two_lines_pi3.json")])
        assert code == 0
        doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert doc["kappa_hat"] == pytest.approx(2.0, rel=0.05)

    def test_angle_subcommand(self, capsys):
        code = cli_main(["angle", str(PROBLEMS / "two_lines_pi3.json")])
        assert code == 0
        doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert doc["cosine"] == pytest.approx(0.5, abs=1e-12)

    def test_angle_rejects_non_subspaces(self, tmp_path):
        bad = tmp_path / "p.json"
        bad.write_text(json.dumps(MINIMAL))
        assert cli_main(["angle", str(bad)]) == 2

    def test_oracle_fixtures_subcommand(self, tmp_path):
        out = tmp_path / "fx.jsonl"
        assert cli_main(["oracle-fixtures", "--out", str(out)]) == 0
        assert out.read_bytes() == (DATA / "oracle_fixtures.jsonl").read_bytes()

    def test_log_level_env_accepted(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FEAS_LOG_LEVEL", "debug")
        out = tmp_path / "run"
        assert cli_main(["solve", str(PROBLEMS / "two_lines_pi3.json"),
                         "--out-dir", str(out)]) == 0
