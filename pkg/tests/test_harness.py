import json
import os

import numpy as np
import pytest

from tchgue.harness import cli
from tchgue.harness.presets import parse_spectrum
from tchgue.harness.table import ResultTable, fmt_value
from tchgue.errors import ConfigError
import tchgue.verify as verify_mod


class TestPresets:
    def test_uniform(self):
        spec = parse_spectrum("uniform(0.5)", 4)
        assert spec.a == (0.5,) * 4

    def test_matsubara(self):
        spec = parse_spectrum("matsubara(0.2)", 3)
        assert spec.a[0] == pytest.approx((np.pi * 0.2) ** 2)

    def test_logspace_and_linspace(self):
        spec = parse_spectrum("logspace(0.1,0.4)", 5)
        assert spec.a[0] == pytest.approx(0.1) and spec.a[-1] == pytest.approx(0.4)
        ratios = np.diff(np.log(spec.a))
        assert np.allclose(ratios, ratios[0])
        spec = parse_spectrum("linspace(0.1,0.4)", 4)
        assert np.allclose(np.diff(spec.a), 0.1)

    def test_explicit_list(self):
        spec = parse_spectrum("0.1,0.2,0.35", 3)
        assert spec.a == (0.1, 0.2, 0.35)
        with pytest.raises(ConfigError):
            parse_spectrum("0.1,0.2", 3)

    def test_garbage(self):
        with pytest.raises(ConfigError):
            parse_spectrum("banana(1)", 3)
        with pytest.raises(ConfigError):
            parse_spectrum("logspace(0.1)", 3)


class TestResultTable:
    def test_float_formatting_roundtrips(self):
        x = 0.1 + 0.2
        assert float(fmt_value(x)) == x
        table = ResultTable(["a", "b"], [(1, x)], {"note": "hi"})
        text = table.csv_text()
        assert "# note: hi" in text
        assert text.strip().splitlines()[-1] == f"1,{x!r}"

    def test_json_mirror(self):
        table = ResultTable(["a"], [(2.5,)], {"k": 1})
        payload = json.loads(table.json_text())
        assert payload["rows"] == [[2.5]]
        assert payload["metadata"]["k"] == 1


class TestCLI:
    def test_phase_single(self, tmp_path, capsys):
        out = tmp_path / "phase.csv"
        rc = cli.main(["phase", "--spectrum", "uniform(0.5)", "--N", "8",
                       "--out", str(out), "--no-plot"])
        assert rc == 0
        lines = out.read_text().splitlines()
        data = [l for l in lines if not l.startswith("#")]
        assert data[0] == "index,t_c,xi,phase"
        assert data[1].endswith("Broken")
        assert "2.0" in data[1]

    def test_phase_scan_hits_transition(self, tmp_path):
        out = tmp_path / "scan.csv"
        rc = cli.main([
            "phase", "--N", "6", "--scan-from", "0.4", "--scan-to", "2.0",
            "--scan-points", "9", "--out", str(out), "--no-plot",
        ])
        assert rc == 0
        rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#") ][1:]
        for a, t_c, xi, phase in rows:
            if float(t_c) < 1.0:
                assert float(xi) == 0.0 and phase == "Symmetric"
            elif float(t_c) > 1.0:
                assert float(xi) > 0.0 and phase == "Broken"

    def test_density_quenched_limit_value(self, tmp_path):
        out = tmp_path / "density.csv"
        rc = cli.main([
            "density", "--nu", "0", "--zeta-min", "2.0", "--zeta-max", "2.0",
            "--zeta-points", "1", "--out", str(out), "--no-plot",
        ])
        assert rc == 0
        data = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        zeta, rho = (float(v) for v in data[1].split(","))
        from tchgue.specfun import bessel_j

        assert rho == pytest.approx(
            (2.0 / 2.0) * (bessel_j(0, 2.0) ** 2 + bessel_j(1, 2.0) ** 2), rel=1e-12
        )

    def test_density_vanishes_at_origin_nu1(self, tmp_path):
        out = tmp_path / "d1.csv"
        rc = cli.main([
            "density", "--nu", "1", "--zeta-min", "0.001", "--zeta-max", "0.001",
            "--zeta-points", "1", "--out", str(out), "--no-plot",
        ])
        assert rc == 0
        data = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert float(data[1].split(",")[1]) < 1e-6

    def test_correlate_consistent_with_density(self, tmp_path):
        out = tmp_path / "corr.csv"
        rc = cli.main([
            "correlate", "--mode", "micro", "--nu", "0", "--points", "2.0",
            "--out", str(out), "--no-plot",
        ])
        assert rc == 0
        data = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        from tchgue.microkernel import MicroParams, density

        assert float(data[1].split(",")[1]) == pytest.approx(
            density(MicroParams(nu=0), 2.0), rel=1e-12
        )

    def test_correlate_equal_points_vanish(self, tmp_path):
        out = tmp_path / "corr2.csv"
        rc = cli.main([
            "correlate", "--mode", "micro", "--nu", "0",
            "--points", "2.0,2.00000001", "--out", str(out), "--no-plot",
        ])
        assert rc == 1  # refused: arguments too close to be distinct

    def test_kernel_eval_micro(self, tmp_path):
        out = tmp_path / "ke.csv"
        rc = cli.main([
            "kernel-eval", "--mode", "micro", "--nu", "1", "--masses", "0.8",
            "--points", "1.0,3.0;2.0,5.0", "--out", str(out), "--no-plot",
        ])
        assert rc == 0
        rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")][1:]
        for row in rows:
            assert float(row[2]) == pytest.approx(float(row[3]), rel=1e-9)

    def test_config_error_exit_code(self, tmp_path):
        assert cli.main(["density", "--nu", "40", "--no-plot"]) == 1
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"bogus_block": {}}))
        assert cli.main(["density", "--config", str(bad), "--no-plot"]) == 1
        assert cli.main(["correlate", "--points", "", "--no-plot"]) == 1

    def test_mc_runs_and_reproduces(self, tmp_path):
        out1, out2 = tmp_path / "mc1.csv", tmp_path / "mc2.csv"
        args = [
            "mc", "--N", "4", "--nu", "0", "--spectrum", "logspace(0.15,0.5)",
            "--samples", "2000", "--seed", "3", "--bins", "20", "--overlay",
            "--no-plot",
        ]
        assert cli.main(args + ["--out", str(out1)]) == 0
        assert cli.main(args + ["--out", str(out2), "--workers", "2"]) == 0
        # config echo and wall time legitimately differ (path, worker count);
        # every data byte must match across worker counts
        strip = lambda p: [l for l in p.read_text().splitlines()
                           if not (l.startswith("# wall_seconds") or l.startswith("# config"))]
        assert strip(out1) == strip(out2)

    def test_round_trip_from_metadata(self, tmp_path):
        out1 = tmp_path / "r1.csv"
        rc = cli.main([
            "density", "--nu", "1", "--masses", "0.9", "--zeta-min", "0.5",
            "--zeta-max", "3.0", "--zeta-points", "5", "--out", str(out1), "--no-plot",
        ])
        assert rc == 0
        config_line = next(
            l for l in out1.read_text().splitlines() if l.startswith("# config: ")
        )
        payload = json.loads(config_line[len("# config: "):])
        payload.pop("command")
        cfg_path = tmp_path / "replay.json"
        cfg_path.write_text(json.dumps(payload))
        out2 = tmp_path / "r2.csv"
        rc = cli.main(["density", "--config", str(cfg_path), "--out", str(out2), "--no-plot"])
        assert rc == 0
        strip = lambda p: [
            l for l in p.read_text().splitlines()
            if not (l.startswith("# wall_seconds") or l.startswith("# config"))
        ]
        assert strip(out1) == strip(out2)
        # data rows bitwise identical
        data = lambda p: [l for l in p.read_text().splitlines() if not l.startswith("#")]
        assert data(out1) == data(out2)

    def test_plot_rendered(self, tmp_path):
        out = tmp_path / "density.csv"
        rc = cli.main([
            "density", "--nu", "0", "--zeta-min", "0.5", "--zeta-max", "5.0",
            "--zeta-points", "8", "--out", str(out),
        ])
        assert rc == 0
        assert (tmp_path / "density.png").exists()

    def test_verify_exit_code_on_failure(self, monkeypatch, tmp_path):
        fake = [
            verify_mod.CheckResult("demo/identity", 1.0, 1e-10, False, 0.0, "")
        ]
        monkeypatch.setattr(verify_mod, "run_suite", lambda: fake)
        out = tmp_path / "verify.csv"
        rc = cli.main(["verify", "--out", str(out), "--no-plot"])
        assert rc == 3
        assert "FAIL" in out.read_text()

    def test_verify_tolerance_override(self, monkeypatch, tmp_path):
        fake = [
            verify_mod.CheckResult("demo/identity", 1.0, 1e-10, False, 0.0, "")
        ]
        monkeypatch.setattr(verify_mod, "run_suite", lambda: fake)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"verify": {"tolerances": {"demo/identity": 2.0}}}))
        out = tmp_path / "verify.csv"
        rc = cli.main(["verify", "--config", str(cfg), "--out", str(out), "--no-plot"])
        assert rc == 0
        assert "pass" in out.read_text()


class TestNegativeControl:
    def test_sign_flip_fails_krelation_check(self, monkeypatch):
        monkeypatch.setenv("TCHGUE_FLIP_KRELATION_SIGN", "1")
        result = verify_mod.check_krelation()
        assert not result.passed


def test_seventeen_digit_output(tmp_path):
    out = tmp_path / "d.csv"
    cli.main([
        "density", "--nu", "0", "--zeta-min", "1.234567890123", "--zeta-max",
        "1.234567890123", "--zeta-points", "1", "--out", str(out), "--no-plot",
    ])
    data = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    text_value = data[1].split(",")[0]
    assert float(text_value) == 1.234567890123
