"""Command-line front end: config handling, outputs, exit codes."""

import numpy as np
import pytest

from passive_cvqkd import DetectorModel, RngStream, heterodyne_measure, sample_thermal_quadratures
from passive_cvqkd.cli import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_IO,
    EXIT_OK,
    main,
    parse_axis,
    parse_config_file,
)


def write_records(tmp_path, n_mean=50.0, det=DetectorModel(0.5, 0.35), count=20_000, seed=90, scale=1.3):
    thermal = heterodyne_measure(
        sample_thermal_quadratures(n_mean, count, RngStream(seed, 0)), det, RngStream(seed, 1)
    )
    vacuum = heterodyne_measure(
        sample_thermal_quadratures(0.0, count, RngStream(seed, 2)), det, RngStream(seed, 3)
    )
    th_path, va_path = tmp_path / "thermal.csv", tmp_path / "vacuum.csv"
    np.savetxt(th_path, thermal * scale, delimiter=",", header="x,p", comments="")
    np.savetxt(va_path, vacuum * scale, delimiter=",", header="x,p", comments="")
    return str(th_path), str(va_path)


class TestParsing:
    def test_axis_range_is_inclusive(self):
        assert parse_axis("0:100:1") == [float(v) for v in range(101)]
        assert parse_axis("0:40:20") == [0.0, 20.0, 40.0]

    def test_axis_list_and_scalar(self):
        assert parse_axis("50,100,500") == [50.0, 100.0, 500.0]
        assert parse_axis("12.5") == [12.5]

    def test_axis_errors(self):
        from passive_cvqkd import ParameterError

        with pytest.raises(ParameterError):
            parse_axis("")
        with pytest.raises(ParameterError):
            parse_axis("0:10")
        with pytest.raises(ParameterError):
            parse_axis("10:0:1")

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\ngamma = 0.25\nn0=100\n\nv_el=0.2 # inline\n")
        settings = parse_config_file(str(cfg))
        assert settings == {"gamma": "0.25", "n0": "100", "v_el": "0.2"}

    def test_config_rejects_unknown_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("gama=0.2\n")
        from passive_cvqkd import ParameterError

        with pytest.raises(ParameterError, match="gama"):
            parse_config_file(str(cfg))


class TestSweep:
    def test_small_grid_shape_and_monotonicity(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(["sweep", "--n0", "50,100", "--length", "0:20:5", "--out", str(out)])
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "L_km,n0,V_A_opt,I_AB,chi_BE,R_raw,R"
        assert len(lines) == 1 + 2 * 5
        rows = [line.split(",") for line in lines[1:]]
        by_n0 = {}
        for row in rows:
            by_n0.setdefault(float(row[1]), []).append(float(row[6]))
        for rates in by_n0.values():
            assert all(b <= a + 1e-12 for a, b in zip(rates, rates[1:]))

    def test_optimized_dominates_fixed(self, tmp_path):
        opt_out, fix_out = tmp_path / "opt.csv", tmp_path / "fix.csv"
        args = ["sweep", "--n0", "100", "--length", "0:30:10"]
        assert main(args + ["--out", str(opt_out)]) == EXIT_OK
        assert main(args + ["--va", "1", "--out", str(fix_out)]) == EXIT_OK
        opt_rows = [line.split(",") for line in opt_out.read_text().splitlines()[1:]]
        fix_rows = [line.split(",") for line in fix_out.read_text().splitlines()[1:]]
        for opt_row, fix_row in zip(opt_rows, fix_rows):
            assert float(opt_row[6]) >= float(fix_row[6]) - 1e-12

    def test_default_grid_has_303_rows(self, tmp_path):
        out = tmp_path / "default.csv"
        assert main(["sweep", "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 303
        rates = {}
        for line in lines[1:]:
            cells = line.split(",")
            rates.setdefault(cells[1], []).append(float(cells[6]))
        assert sorted(rates) == ["100", "50", "500"]
        for per_n0 in rates.values():
            assert all(b <= a + 1e-12 for a, b in zip(per_n0, per_n0[1:]))

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["sweep", "--n0", "500", "--length", "0,10,25"]
        main(argv + ["--out", str(a)])
        main(argv + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n0=100\nlength=0,10\nva=2\n")
        out1, out2 = tmp_path / "o1.csv", tmp_path / "o2.csv"
        main(["sweep", "--config", str(cfg), "--out", str(out1)])
        main(["sweep", "--config", str(cfg), "--va", "1", "--out", str(out2)])
        rows1 = out1.read_text().splitlines()[1:]
        rows2 = out2.read_text().splitlines()[1:]
        assert len(rows1) == len(rows2) == 2
        assert all(row.split(",")[2] == "2" for row in rows1)
        assert all(row.split(",")[2] == "1" for row in rows2)

    def test_empty_axis_is_usage_error(self):
        assert main(["sweep", "--length", " "]) == EXIT_CONFIG


class TestSimulate:
    def test_report_passes_and_reproduces(self, tmp_path):
        a, b = tmp_path / "ra.txt", tmp_path / "rb.txt"
        argv = [
            "simulate", "--n0", "340", "--va", "1", "--length", "10",
            "--count", "100000", "--seed", "42", "--partitions", "3",
        ]
        assert main(argv + ["--out", str(a)]) == EXIT_OK
        assert main(argv + ["--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        report = dict(line.split("=", 1) for line in a.read_text().splitlines())
        assert report["eps_A_verdict"] == "PASS"
        assert report["delta_verdict"] == "PASS"
        assert report["I_AB_verdict"] == "PASS"
        assert report["moments_verdict"] == "PASS"
        assert report["eps_A_analytic"] == "0.01"

    def test_workers_leave_report_unchanged(self, tmp_path):
        a, b = tmp_path / "wa.txt", tmp_path / "wb.txt"
        argv = [
            "simulate", "--n0", "100", "--va", "1", "--length", "5",
            "--count", "60000", "--seed", "7", "--partitions", "4",
        ]
        assert main(argv + ["--workers", "1", "--out", str(a)]) == EXIT_OK
        assert main(argv + ["--workers", "2", "--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_tiny_count_still_reports(self, tmp_path):
        out = tmp_path / "tiny.txt"
        argv = ["simulate", "--n0", "340", "--count", "10", "--length", "0", "--out", str(out)]
        assert main(argv) == EXIT_OK
        text = out.read_text()
        assert "delta_empirical=" in text

    def test_multiple_n0_is_usage_error(self):
        assert main(["simulate", "--n0", "50,100", "--count", "10"]) == EXIT_CONFIG


class TestAnalyze:
    def test_synthetic_pipeline(self, tmp_path):
        th, va = write_records(tmp_path, n_mean=50.0)
        out = tmp_path / "report.txt"
        hist = tmp_path / "hist.csv"
        code = main([
            "analyze", th, va, "--eta-d", "0.5", "--v-el", "0.35",
            "--histogram", str(hist), "--n-boot", "50", "--seed", "3", "--out", str(out),
        ])
        assert code == EXIT_OK
        report = dict(line.split("=", 1) for line in out.read_text().splitlines())
        n_hat = float(report["n_hat"])
        assert abs(n_hat - 50.0) / 50.0 < 0.05
        assert abs(float(report["g2"]) - 2.0) < 0.1
        assert hist.read_text().splitlines()[0] == "bin_x,bin_p,count"

    def test_vacuum_for_both_inputs(self, tmp_path):
        _, va = write_records(tmp_path, n_mean=50.0, seed=91)
        out = tmp_path / "report.txt"
        code = main([
            "analyze", va, va, "--eta-d", "0.5", "--v-el", "0.35",
            "--min-samples", "1000", "--n-boot", "50", "--out", str(out),
        ])
        # Identical records: zero excess variance, so n_hat is exactly 0,
        # and the SNU record has near-vacuum variance.
        if code == EXIT_OK:
            report = dict(line.split("=", 1) for line in out.read_text().splitlines())
            assert abs(float(report["n_hat"])) < 0.01
        else:
            assert code == EXIT_DATA  # degenerate g2 denominator is also acceptable

    def test_missing_file_is_io_error(self, tmp_path):
        _, va = write_records(tmp_path, seed=92, count=2_000)
        assert main(["analyze", str(tmp_path / "nope.csv"), va]) == EXIT_IO

    def test_parse_error_is_data_error(self, tmp_path):
        th, va = write_records(tmp_path, seed=93, count=2_000)
        bad = tmp_path / "bad.csv"
        bad.write_text("x,p\n1.0,2.0\nbroken,row\n3.0,4.0\n")
        assert main(["analyze", str(bad), va, "--min-samples", "2"]) == EXIT_DATA

    def test_column_selection(self, tmp_path):
        th, va = write_records(tmp_path, seed=94, count=12_000)
        renamed = tmp_path / "renamed.csv"
        lines = open(th).read().splitlines()
        lines[0] = "xA,pA"
        renamed.write_text("\n".join(lines) + "\n")
        out = tmp_path / "report.txt"
        code = main([
            "analyze", str(renamed), va, "--columns", "x,p",
            "--min-samples", "1000", "--n-boot", "20", "--out", str(out),
        ])
        assert code == EXIT_DATA  # thermal file lacks those names
        code = main([
            "analyze", str(renamed), str(renamed), "--columns", "xA,pA",
            "--min-samples", "1000", "--n-boot", "20", "--eta-d", "0.5", "--v-el", "0.35",
            "--out", str(out),
        ])
        assert code in (EXIT_OK, EXIT_DATA)


class TestOptimizeCommand:
    def test_report_fields(self, tmp_path):
        out = tmp_path / "opt.txt"
        assert main(["optimize", "--n0", "500", "--length", "20", "--out", str(out)]) == EXIT_OK
        report = dict(line.split("=", 1) for line in out.read_text().splitlines())
        assert report["feasible"] == "true"
        assert float(report["R"]) > 0.0
        assert 0.0 < float(report["V_A_opt"]) <= 20.0

    def test_infeasible_point(self, tmp_path):
        out = tmp_path / "opt.txt"
        code = main(["optimize", "--n0", "50", "--length", "50", "--eps0", "1.0", "--out", str(out)])
        assert code == EXIT_OK
        report = dict(line.split("=", 1) for line in out.read_text().splitlines())
        assert report["feasible"] == "false"
        assert report["R"] == "0"


def test_unknown_command_exits_with_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
