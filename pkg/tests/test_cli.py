import json
import math

from qidsim.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    return [dict(zip(header, ln.split(","))) for ln in lines[1:]]


class TestClone:
    def test_qubit_row(self, capsys):
        code, out, _ = run_cli(capsys, "clone", "--dim", "2")
        assert code == 0
        rows = parse_csv(out)
        assert len(rows) == 1
        assert abs(float(rows[0]["s_closed"]) - 2 / 3) < 1e-12
        assert abs(float(rows[0]["F_closed"]) - 5 / 6) < 1e-12
        assert abs(float(rows[0]["F_simulated"]) - 5 / 6) < 1e-10

    def test_dim_range_table(self, capsys):
        code, out, _ = run_cli(capsys, "clone", "--dim-range", "2:6")
        assert code == 0
        rows = parse_csv(out)
        assert [int(r["N"]) for r in rows] == [2, 3, 4, 5, 6]
        assert abs(float(rows[1]["s_closed"]) - 0.625) < 1e-12
        assert abs(float(rows[1]["F_closed"]) - 0.75) < 1e-12
        fids = [float(r["F_closed"]) for r in rows]
        assert all(a > b > 0.5 for a, b in zip(fids, fids[1:]))

    def test_simulation_column_blank_above_cap(self, capsys):
        code, out, _ = run_cli(capsys, "clone", "--dim-range", "127:128")
        assert code == 0
        rows = parse_csv(out)
        assert rows[0]["s_simulated"] == "" and rows[0]["F_simulated"] == ""
        assert float(rows[0]["F_closed"]) > 0.5

    def test_deterministic_output_files(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            code, _, _ = run_cli(
                capsys, "clone", "--dim-range", "2:5", "--seed", "42", "--out", str(path)
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_json_format(self, capsys):
        code, out, _ = run_cli(capsys, "clone", "--dim", "3", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc["schema_version"] == 1
        assert doc["rows"][0]["N"] == 3


class TestDistribute:
    def test_no_transfer_endpoint(self, capsys):
        code, out, _ = run_cli(capsys, "distribute", "--dim", "3", "--alpha", "1.0")
        assert code == 0
        doc = json.loads(out)
        assert abs(doc["rho1_fidelity"] - 1.0) < 1e-12
        assert doc["max_deviation"] < 1e-10

    def test_full_swap_endpoint(self, capsys):
        code, out, _ = run_cli(capsys, "distribute", "--dim", "3", "--alpha", "0.0")
        assert code == 0
        doc = json.loads(out)
        assert abs(doc["rho2_fidelity"] - 1.0) < 1e-12

    def test_symmetric_point_matches_clone_table(self, capsys):
        alpha = math.sqrt(1.0 / 3.0)
        code, out, _ = run_cli(capsys, "distribute", "--dim", "2", "--alpha", f"{alpha!r}")
        assert code == 0
        doc = json.loads(out)
        assert abs(doc["rho1_fidelity"] - 5 / 6) < 1e-10
        assert abs(doc["rho2_fidelity"] - 5 / 6) < 1e-10

    def test_explicit_amplitudes(self, capsys):
        code, out, _ = run_cli(
            capsys, "distribute", "--dim", "2", "--alpha", "0.5", "--input", "1,0"
        )
        assert code == 0
        doc = json.loads(out)
        assert abs(doc["rho1_fidelity"] - doc["predicted"]["rho1_fidelity"]) < 1e-10

    def test_malformed_input_spec(self, capsys):
        code, _, err = run_cli(
            capsys, "distribute", "--dim", "2", "--alpha", "0.5", "--input", "1,oops"
        )
        assert code == 1
        assert "malformed" in err


class TestCovariance:
    def test_qubit(self, capsys):
        code, out, _ = run_cli(capsys, "covariance", "--dim", "2", "--trials", "10")
        assert code == 0
        doc = json.loads(out)
        assert doc["max_deviation"] < 1e-10

    def test_dim_five(self, capsys):
        code, out, _ = run_cli(capsys, "covariance", "--dim", "5", "--trials", "5")
        assert code == 0
        assert json.loads(out)["max_deviation"] < 1e-10


class TestCv:
    def test_kernel_norm_rows(self, capsys):
        code, out, _ = run_cli(
            capsys, "cv", "--xi", "0,1", "--grid", "256", "--format", "csv"
        )
        assert code == 0
        rows = parse_csv(out)
        zero_row = rows[0]
        assert abs(float(zero_row["k3_norm"]) - 2.0) < 1e-6
        for row in rows:
            assert abs(float(row["k1_residual"])) < 1e-6
            assert abs(float(row["k2_residual"])) < 1e-6
            assert abs(float(row["k3_residual"])) < 1e-6
        assert rows[0]["method"] == "grid"

    def test_asymptotic_rows_trend_to_alpha_squared(self, capsys):
        code, out, _ = run_cli(capsys, "cv", "--xi", "4,6,8", "--alpha", "0.6")
        assert code == 0
        rows = parse_csv(out)
        assert all(r["method"] == "asymptotic" for r in rows)
        gaps = [abs(float(r["F1"]) - 0.36) for r in rows]
        assert gaps == sorted(gaps, reverse=True)
        assert gaps[-1] < 1e-4

    def test_wigner_dump(self, tmp_path, capsys):
        stem = tmp_path / "wig"
        code, _, _ = run_cli(
            capsys,
            "cv", "--xi", "0.5", "--grid", "128",
            "--dump-wigner", str(stem), "--format", "json",
        )
        assert code == 0
        dumped = json.loads((tmp_path / "wig_xi0.5.json").read_text())
        assert dumped["nx"] == 128
        assert len(dumped["values"]) == 128 * 128
        # the dumped function integrates to the program normalisation
        total = (
            sum(dumped["values"])
            * ((dumped["x_max"] - dumped["x_min"]) / (dumped["nx"] - 1)) ** 2
            / (2 * math.pi)
        )
        assert abs(total - 1.0) < 1e-3


class TestCoherentClone:
    def test_reports_values_and_flags_target_mismatch(self, capsys):
        # the clone value is 2/3 on the nose; the 1/8 anticlone target is
        # unreachable for this pipeline (true value 1/2), so the command
        # reports and exits nonzero
        code, out, err = run_cli(capsys, "coherent-clone")
        assert code == 1
        doc = json.loads(out)
        assert abs(doc["clone_fidelity"] - 2 / 3) < 1e-12
        assert abs(doc["anticlone_fidelity"] - 0.5) < 1e-12
        assert "anticlone" in err

    def test_displacement_invariance(self, capsys):
        _, out_zero, _ = run_cli(capsys, "coherent-clone")
        _, out_disp, _ = run_cli(capsys, "coherent-clone", "--displacement", "3+4j")
        a, b = json.loads(out_zero), json.loads(out_disp)
        assert abs(a["clone_fidelity"] - b["clone_fidelity"]) < 1e-9
        assert abs(a["anticlone_fidelity"] - b["anticlone_fidelity"]) < 1e-9


class TestOutputHandling:
    def test_env_var_output_dir(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("QIDSIM_OUTPUT_DIR", str(tmp_path))
        code, out, _ = run_cli(capsys, "clone", "--dim", "2", "--out", "result.csv")
        assert code == 0
        assert out == ""
        assert (tmp_path / "result.csv").exists()

    def test_absolute_path_ignores_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("QIDSIM_OUTPUT_DIR", str(tmp_path / "unused"))
        target = tmp_path / "direct.json"
        code, _, _ = run_cli(
            capsys, "clone", "--dim", "2", "--format", "json", "--out", str(target)
        )
        assert code == 0
        assert json.loads(target.read_text())["schema_version"] == 1

    def test_unknown_dimension_errors(self, capsys):
        code, _, err = run_cli(capsys, "clone", "--dim", "1")
        assert code == 1
        assert "dimension" in err
