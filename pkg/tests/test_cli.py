import dataclasses
import json

import pytest

from rmtlkit import load_shipped_scenario, rmtl_estimate, shipped_scenario_path
from rmtlkit.cli import main
from rmtlkit.simulate import _replicate

from helpers import sample_with_events


def to_csv(sample) -> str:
    lines = ["time,status,group"]
    for r in sample.records:
        lines.append(f"{r.time!r},{int(r.event)},{r.group}")
    return "\n".join(lines) + "\n"


@pytest.fixture
def dataset(tmp_path):
    sample = sample_with_events(424, n1=40, n2=40)
    path = tmp_path / "data.csv"
    path.write_text(to_csv(sample), encoding="utf-8")
    return path, sample


def run(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


class TestEstimate:
    def test_json_payload(self, capsys, dataset):
        path, sample = dataset
        rc, out, _ = run(capsys, ["estimate", "--input", str(path),
                                  "--format", "json"])
        assert rc == 0
        payload = json.loads(out)
        assert payload["schema_version"] == 1
        assert payload["command"] == "estimate"
        assert [g["label"] for g in payload["groups"]] == list(sample.groups)
        g = payload["groups"][0]
        est = rmtl_estimate(sample.split()[0], payload["tau"])
        assert g["rmtl"] == pytest.approx(est.value, rel=1e-12)
        assert g["ci"][0] <= g["rmtl"] <= g["ci"][1]
        assert len(g["cif"]["times"]) == len(g["cif"]["values"])
        d = payload["difference"]
        assert d["ci"][0] <= d["delta"] <= d["ci"][1]

    def test_single_cause_note_and_decomposition(self, capsys, tmp_path):
        rows = ["time,status,group"]
        for i, t in enumerate([1.0, 2.0, 3.0, 4.0]):
            rows.append(f"{t},{1 if i % 2 == 0 else 0},a")
            rows.append(f"{t + 0.5},1,b")
        path = tmp_path / "single.csv"
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        rc, out, _ = run(capsys, ["estimate", "--input", str(path),
                                  "--format", "json"])
        assert rc == 0
        payload = json.loads(out)
        assert payload["notes"] and "no competing events" in payload["notes"][0]
        for g in payload["groups"]:
            assert g["rmtl"] + g["rmstc"] == pytest.approx(payload["tau"], abs=1e-12)
            assert g["rmtl_competing"] == 0.0

    def test_table_output(self, capsys, dataset):
        path, _ = dataset
        rc, out, _ = run(capsys, ["estimate", "--input", str(path)])
        assert rc == 0
        assert "RMTL estimates" in out
        assert "difference" in out
        assert "CIF of the event of interest" in out

    def test_strict_tau_beyond_data_is_a_data_error(self, capsys, dataset):
        path, _ = dataset
        rc, _, err = run(capsys, ["estimate", "--input", str(path),
                                  "--tau", "1e6", "--strict-tau"])
        assert rc == 3
        assert "error:" in err

    def test_missing_input_file(self, capsys):
        rc, _, err = run(capsys, ["estimate", "--input", "no-such-file.csv"])
        assert rc == 3
        assert "cannot read" in err

    def test_reference_group_reorders(self, capsys, dataset):
        path, sample = dataset
        other = sample.groups[1]
        rc, out, _ = run(capsys, ["estimate", "--input", str(path),
                                  "--format", "json",
                                  "--reference-group", other])
        assert rc == 0
        payload = json.loads(out)
        assert payload["groups"][0]["label"] == other


class TestHypothesisTests:
    def test_identical_groups_give_p_one(self, capsys, tmp_path):
        rows = ["time,status,group"]
        for t, s in [(1.0, 1), (2.0, 2), (3.0, 1), (4.0, 0)]:
            rows.append(f"{t},{s},a")
            rows.append(f"{t},{s},b")
        path = tmp_path / "same.csv"
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        rc, out, _ = run(capsys, ["test", "--input", str(path), "--format", "json"])
        assert rc == 0
        payload = json.loads(out)
        assert set(payload["results"]) == {"diff", "sdiff"}
        for res in payload["results"].values():
            assert res["p_value"] == pytest.approx(1.0)
            assert res["reject"] is False

    def test_method_flag_restricts(self, capsys, dataset):
        path, _ = dataset
        rc, out, _ = run(capsys, ["test", "--input", str(path),
                                  "--format", "json", "--method", "diff"])
        assert rc == 0
        assert list(json.loads(out)["results"]) == ["diff"]

    def test_reference_swap_negates_diff_statistic(self, capsys, dataset):
        path, sample = dataset
        rc1, out1, _ = run(capsys, ["test", "--input", str(path),
                                    "--format", "json"])
        rc2, out2, _ = run(capsys, ["test", "--input", str(path),
                                    "--format", "json",
                                    "--reference-group", sample.groups[1]])
        assert rc1 == rc2 == 0
        r1 = json.loads(out1)["results"]
        r2 = json.loads(out2)["results"]
        assert r2["diff"]["statistic"] == pytest.approx(-r1["diff"]["statistic"])
        assert r2["sdiff"]["statistic"] == pytest.approx(r1["sdiff"]["statistic"])
        assert r2["diff"]["p_value"] == pytest.approx(r1["diff"]["p_value"])

    def test_table_output(self, capsys, dataset):
        path, _ = dataset
        rc, out, _ = run(capsys, ["test", "--input", str(path)])
        assert rc == 0
        assert "p-value" in out and "reject H0" in out


class TestSampleSize:
    def test_explicit_inputs(self, capsys):
        rc, out, _ = run(capsys, ["samplesize", "--delta", "1", "--var1", "4",
                                  "--var2", "4", "--alpha", "0.05",
                                  "--power", "0.9", "--format", "json"])
        assert rc == 0
        results = json.loads(out)["results"]
        assert results["diff"]["n_total"] == 170
        assert results["diff"]["n1"] == results["diff"]["n2"] == 85
        assert results["sdiff"]["n_total"] == 178
        assert results["sdiff"]["inflation"] > 1.0
        assert results["sdiff"]["drift"] > results["sdiff"]["drift_normal"]

    def test_missing_variances_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["samplesize", "--delta", "1"])
        assert exc.value.code == 2

    def test_sweep_without_pilot_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["samplesize", "--delta", "1", "--var1", "4", "--var2", "4",
                  "--sweep", "1:5:1"])
        assert exc.value.code == 2

    def test_pilot_inputs(self, capsys, dataset):
        path, _ = dataset
        rc, out, _ = run(capsys, ["samplesize", "--pilot", str(path),
                                  "--format", "json"])
        assert rc == 0
        payload = json.loads(out)
        assert set(payload["pilot"]) == {"delta", "var1", "var2", "tau"}
        assert payload["results"]["sdiff"]["n_total"] >= \
            payload["results"]["diff"]["n_total"]

    def test_sweep_tracks_tau(self, capsys, tmp_path):
        scn = load_shipped_scenario("e_late")
        scn = dataclasses.replace(
            scn,
            groups=tuple(dataclasses.replace(g, n=300) for g in scn.groups),
        )
        sample = _replicate(scn, 0, 4242, None)
        path = tmp_path / "pilot.csv"
        path.write_text(to_csv(sample), encoding="utf-8")
        rc, out, _ = run(capsys, ["samplesize", "--pilot", str(path),
                                  "--sweep", "1:6:1", "--format", "json"])
        assert rc == 0
        rows = json.loads(out)["sweep"]
        assert [row["tau"] for row in rows] == [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        sizes = {row["diff"] for row in rows if "diff" in row}
        assert len(sizes) > 1  # a late difference makes n depend strongly on tau

    def test_sweep_table_output(self, capsys, dataset):
        path, _ = dataset
        rc, out, _ = run(capsys, ["samplesize", "--pilot", str(path),
                                  "--sweep", "2:4:1"])
        assert rc == 0
        assert "sample size by tau" in out
        assert "n_diff" in out and "n_sdiff" in out

    def test_bad_sweep_range_is_usage_error(self, capsys, dataset):
        path, _ = dataset
        with pytest.raises(SystemExit) as exc:
            main(["samplesize", "--pilot", str(path), "--sweep", "5:1:1"])
        assert exc.value.code == 2


class TestSimulate:
    def test_repeat_runs_are_byte_identical(self, capsys):
        argv = ["simulate", "--input", str(shipped_scenario_path("a_null")),
                "--reps", "20", "--seed", "7", "--format", "json"]
        rc1, out1, _ = run(capsys, argv)
        rc2, out2, _ = run(capsys, argv)
        assert rc1 == rc2 == 0
        assert out1 == out2

    def test_worker_count_does_not_change_output(self, capsys):
        base = ["simulate", "--input", str(shipped_scenario_path("a_null")),
                "--reps", "20", "--seed", "7", "--format", "json"]
        rc1, out1, _ = run(capsys, base + ["--workers", "1"])
        rc2, out2, _ = run(capsys, base + ["--workers", "2"])
        assert rc1 == rc2 == 0
        assert out1 == out2

    def test_json_payload_shape(self, capsys):
        rc, out, _ = run(capsys, ["simulate",
                                  "--input", str(shipped_scenario_path("a_null")),
                                  "--reps", "5", "--seed", "1",
                                  "--format", "json"])
        assert rc == 0
        payload = json.loads(out)
        assert payload["command"] == "simulate"
        assert payload["scenario"]["groups"][0]["n"] == 50
        report = payload["report"]
        assert report["reps"] == 5
        assert set(report["methods"]) == {"diff", "sdiff"}

    def test_n_total_override_is_applied(self, capsys):
        base = ["simulate", "--input", str(shipped_scenario_path("a_null")),
                "--reps", "5", "--seed", "1", "--format", "json",
                "--method", "diff"]
        rc, _, _ = run(capsys, base + ["--n-total", "30"])
        assert rc == 0
        # too small to split into two groups of >= 2
        rc_bad, _, err = run(capsys, base + ["--n-total", "3"])
        assert rc_bad == 3
        assert "n_total" in err

    def test_table_output(self, capsys):
        rc, out, _ = run(capsys, ["simulate",
                                  "--input", str(shipped_scenario_path("a_null")),
                                  "--reps", "5", "--seed", "1"])
        assert rc == 0
        assert "simulation: scenario" in out
        assert "tau rule:" in out

    def test_malformed_scenario_names_field(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"groups": []}), encoding="utf-8")
        rc, _, err = run(capsys, ["simulate", "--input", str(path), "--reps", "2"])
        assert rc == 3
        assert "groups" in err

    def test_invalid_json_scenario(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{", encoding="utf-8")
        rc, _, err = run(capsys, ["simulate", "--input", str(path), "--reps", "2"])
        assert rc == 3
        assert "JSON" in err


class TestUsageErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            ["estimate", "--input", "x.csv", "--alpha", "1.5"],
            ["estimate", "--input", "x.csv", "--tau", "-2"],
            ["test", "--input", "x.csv", "--rho", "1.5"],
            ["test", "--input", "x.csv", "--method", "bogus"],
            ["simulate", "--input", "x.json", "--reps", "0"],
            ["simulate", "--input", "x.json", "--workers", "0"],
            ["simulate", "--input", "x.json", "--seed", "-1"],
            ["estimate"],
            ["nonsense"],
        ],
    )
    def test_exit_code_two(self, argv):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2
