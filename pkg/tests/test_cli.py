import math

import numpy as np
import pytest

from gve.cli import main
from gve.io import save_matrix, save_vector


@pytest.fixture
def zeros_response(tmp_path):
    path = tmp_path / "y.txt"
    save_vector(np.zeros(8), path)
    return str(path)


@pytest.fixture
def noise_response(tmp_path):
    path = tmp_path / "y100.txt"
    save_vector(np.random.default_rng(0).standard_normal(100), path)
    return str(path)


class TestEstimateCommand:
    def test_zero_response(self, zeros_response, capsys):
        rc = main(["estimate", "--response", zeros_response,
                   "--method", "ortho", "--window", "2"])
        assert rc == 0
        out = capsys.readouterr().out.strip()
        assert out.startswith("sigma2=0 sigma=0 L=2")

    def test_emit_lambda(self, noise_response, capsys):
        rc = main(["estimate", "--response", noise_response,
                   "--method", "ortho", "--window", "10", "--emit-lambda"])
        assert rc == 0
        out = capsys.readouterr().out.strip()
        fields = dict(kv.split("=") for kv in out.split())
        sigma2 = float(fields["sigma2"])
        assert float(fields["lambda"]) == pytest.approx(
            4 * sigma2 * math.log(100) / 100, rel=1e-9
        )

    def test_auto_window_reports_choice(self, noise_response, capsys):
        rc = main(["estimate", "--response", noise_response,
                   "--method", "ortho", "--window", "auto"])
        assert rc == 0
        fields = dict(kv.split("=") for kv in capsys.readouterr().out.split())
        assert int(fields["L"]) >= 2

    def test_design_matrix_flow(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        x = rng.normal(0, 0.25, size=(16, 32))
        y = rng.standard_normal(16)
        xp, yp = tmp_path / "x.csv", tmp_path / "y.txt"
        save_matrix(x, xp)
        save_vector(y, yp)
        rc = main(["estimate", "--design", str(xp), "--response", str(yp),
                   "--method", "svd", "--window", "4"])
        assert rc == 0
        fields = dict(kv.split("=") for kv in capsys.readouterr().out.split())
        from gve import gve_rip
        assert float(fields["sigma2"]) == pytest.approx(
            gve_rip(x, y, 4, "svd").sigma2, rel=1e-9
        )

    def test_missing_file_exits_2(self, capsys):
        rc = main(["estimate", "--response", "/nonexistent/y.txt",
                   "--method", "ortho", "--window", "2"])
        assert rc == 2
        assert "gve:" in capsys.readouterr().err

    def test_bad_format_exits_2(self, tmp_path, capsys):
        path = tmp_path / "y.txt"
        path.write_text("1\nnot-a-number\n")
        rc = main(["estimate", "--response", str(path),
                   "--method", "ortho", "--window", "2"])
        assert rc == 2

    def test_degenerate_design_exits_3(self, tmp_path, capsys):
        col = np.arange(8.0)
        x = np.column_stack([col, col, col, col])
        xp, yp = tmp_path / "x.csv", tmp_path / "y.txt"
        save_matrix(x, xp)
        save_vector(np.ones(8), yp)
        rc = main(["estimate", "--design", str(xp), "--response", str(yp),
                   "--method", "svd", "--window", "2"])
        assert rc == 3

    def test_window_too_large_exits_2(self, zeros_response):
        rc = main(["estimate", "--response", zeros_response,
                   "--method", "ortho", "--window", "6"])
        assert rc == 2


class TestWindowSweepCommand:
    def test_oracle_mode_exact_match(self, tmp_path, capsys):
        rng = np.random.default_rng(2)
        y = rng.standard_normal(64)
        yp = tmp_path / "y.txt"
        save_vector(y, yp)
        from gve import gve_orthonormal
        target = gve_orthonormal(y, 8).sigma2
        rc = main(["window-sweep", "--response", str(yp), "--method", "ortho",
                   "--candidates", "2,4,8,16", "--sigma2-true", str(target)])
        assert rc == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "window_L,sigma2_hat,abs_error"
        assert len(out) == 6
        assert out[-1] == "selected L=8 rule=oracle"

    def test_inflection_mode(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        yp = tmp_path / "y.txt"
        save_vector(rng.standard_normal(64), yp)
        rc = main(["window-sweep", "--response", str(yp), "--method", "ortho",
                   "--candidates", "2,4,8,16"])
        assert rc == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "window_L,sigma2_hat"
        assert out[-1].startswith("selected L=") and out[-1].endswith("rule=inflection")

    def test_candidates_all(self, tmp_path, capsys):
        yp = tmp_path / "y.txt"
        save_vector(np.arange(12.0), yp)
        rc = main(["window-sweep", "--response", str(yp), "--method", "ortho",
                   "--candidates", "all", "--sigma2-true", "1.0"])
        assert rc == 0
        out = capsys.readouterr().out.splitlines()
        # every L with floor(12/L) >= 2, i.e. 1..6
        assert len(out) == 6 + 2

    def test_invalid_candidates_exit_2(self, tmp_path, capsys):
        yp = tmp_path / "y.txt"
        save_vector(np.arange(12.0), yp)
        rc = main(["window-sweep", "--response", str(yp), "--method", "ortho",
                   "--candidates", "2,banana"])
        assert rc == 2


class TestSimulateCommand:
    def test_smallest_run(self, tmp_path, capsys):
        out = tmp_path / "report.csv"
        rc = main(["simulate", "--p", "100", "--beta-norm", "0", "--alpha", "0.1",
                   "--trials", "2", "--methods", "oracle", "--seed", "1",
                   "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 4  # schema + header + 2 rows
        for line in lines[2:]:
            fields = line.split(",")
            assert fields[0] == "oracle"
            assert 0.5 <= float(fields[7]) <= 1.5  # sigma2_hat near truth

    def test_rerun_is_byte_identical(self, tmp_path):
        args = ["simulate", "--p", "60", "--beta-norm", "1", "--alpha", "0.1",
                "--n", "30", "--trials", "2", "--methods", "fast,oracle",
                "--window", "5", "--seed", "7"]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_row_counting(self, tmp_path):
        out = tmp_path / "report.csv"
        rc = main(["simulate", "--p", "100,200", "--beta-norm", "0", "--alpha", "0.1",
                   "--trials", "3", "--methods", "fast,svd", "--window", "25",
                   "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) - 2 == 2 * 2 * 3

    def test_bad_flags_exit_2(self, tmp_path, capsys):
        rc = main(["simulate", "--p", "abc", "--beta-norm", "0", "--alpha", "0.1",
                   "--out", str(tmp_path / "r.csv")])
        assert rc == 2

    def test_unknown_method_exits_2(self, tmp_path):
        rc = main(["simulate", "--p", "100", "--beta-norm", "0", "--alpha", "0.1",
                   "--methods", "nope", "--out", str(tmp_path / "r.csv")])
        assert rc == 2

    def test_partial_failures_keep_exit_0(self, tmp_path):
        # p=40 with window 25 > floor(p/L)=1 makes fast fail; oracle succeeds
        out = tmp_path / "report.csv"
        rc = main(["simulate", "--p", "40", "--beta-norm", "0", "--alpha", "0.1",
                   "--n", "50", "--trials", "1", "--methods", "fast,oracle",
                   "--window", "25", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()[2:]
        statuses = {ln.split(",")[0]: ln.split(",")[-1] for ln in lines}
        assert statuses["fast"].startswith("error:")
        assert statuses["oracle"] == "ok"


class TestRemoteMode:
    def test_estimate_via_http_client(self, tmp_path, capsys):
        from fastapi.testclient import TestClient

        from gve.cli import ServiceClient
        from gve.service.app import app
        from gve.service.schemas import EstimateRequest

        client = ServiceClient(http_client=TestClient(app))
        payload = EstimateRequest(response=[0.0] * 8, method="ortho", window=2)
        result = client.estimate(payload)
        assert result.sigma2 == 0.0

    def test_http_error_translation(self):
        from fastapi.testclient import TestClient

        from gve.cli import CommandError, ServiceClient
        from gve.service.app import app
        from gve.service.schemas import EstimateRequest

        client = ServiceClient(http_client=TestClient(app))
        payload = EstimateRequest(response=[1.0, 2.0], method="svd", window=1)
        with pytest.raises(CommandError) as excinfo:
            client.estimate(payload)
        assert excinfo.value.exit_code == 2
