import json
import subprocess
import sys

import numpy as np
import pytest

from sgdtheta.cli import main
from sgdtheta.cli.checks import check_adjoint, run_all
from sgdtheta.cli.config import load_config, parse_config
from sgdtheta.exceptions import ConfigError
from sgdtheta.operators import build_parallel_tomo, radon_row_apply
from sgdtheta.penalty import PdhgConfig, tv_denoise_pdhg
from sgdtheta.sampling import read_image, shepp_logan, write_image

SMALL = """\
[problem]
kind = ct
n = 16
n_angles = 12
lines = 16

[noise]
model = gaussian
delta_rel = 0.05
seed = 3

[penalty]
variant = nonneg

[solver]
mu0 = {mu0}
tau = 1.1
batch_size = 8
max_iters = 40
seed = 5
telemetry_stride = 4

[methods]
names = sgd_theta, sgd_ndp, sgd_decaying
"""


@pytest.fixture
def small_cfg(tmp_path):
    def make(mu0=0.18, extra=""):
        path = tmp_path / f"cfg_{mu0}.ini"
        path.write_text(SMALL.format(mu0=mu0) + extra)
        return path
    return make


class TestConfigParsing:
    def test_shipped_configs_parse(self):
        from importlib import resources
        for name in ("ct_desk.ini", "ct_saltpepper.ini", "schlieren_desk.ini"):
            text = resources.files("sgdtheta").joinpath("configs", name).read_text()
            cfg = parse_config(text, name)
            assert cfg.methods

    def test_method_seeds_offset(self, small_cfg):
        cfg = load_config(small_cfg())
        assert [s.seed for _, s in cfg.methods] == [5, 6, 7]
        assert [s.step_rule.value for _, s in cfg.methods] == ["adaptive_dp", "adaptive_ndp", "decaying"]

    def test_empty_angles(self):
        text = SMALL.format(mu0=0.18).replace("n_angles = 12", "angles = ")
        with pytest.raises(ConfigError, match=r"<config>:4: \[problem\] angles"):
            parse_config(text)

    def test_line_number_in_error(self):
        text = SMALL.format(mu0=0.18).replace("batch_size = 8", "batch_size = eight")
        line = text.splitlines().index("batch_size = eight") + 1
        with pytest.raises(ConfigError, match=rf"<config>:{line}: \[solver\] batch_size"):
            parse_config(text)

    @pytest.mark.parametrize("old,new", [
        ("kind = ct", "kind = mri"),
        ("model = gaussian", "model = poisson"),
        ("variant = nonneg", "variant = l1"),
        ("tau = 1.1", "tau = 0.9"),
        ("tau = 1.1", "taux = 1.1"),
        ("names = sgd_theta, sgd_ndp, sgd_decaying", "names = mystery"),
    ])
    def test_invalid(self, old, new):
        with pytest.raises(ConfigError):
            parse_config(SMALL.format(mu0=0.18).replace(old, new))

    def test_method_section_overrides(self):
        text = SMALL.format(mu0=0.18).replace("names = sgd_theta, sgd_ndp, sgd_decaying", "names = a, b")
        text += "\n[method:a]\nr = 1.5\n\n[method:b]\nbatch_size = 2\n"
        cfg = parse_config(text)
        (na, a), (nb, b) = cfg.methods
        assert (na, a.r, a.batch_size) == ("a", 1.5, 8)
        assert (nb, b.r, b.batch_size) == ("b", 2.0, 2)

    def test_presets_are_admissible(self):
        from sgdtheta.solver import check_admissibility
        text = SMALL.format(mu0=0.18).replace("sgd_theta, sgd_ndp, sgd_decaying",
                                             "sgd_theta, sgd_ndp, sgd_decaying, sgd_constant, landweber, kaczmarz")
        cfg = parse_config(text)
        assert all(check_admissibility(s, cfg.penalty.sigma).passed for _, s in cfg.methods)
        assert dict(cfg.methods)["sgd_constant"].mu0 == 0.1

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.ini")


class TestRun:
    def test_smoke_run(self, small_cfg, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["run", str(small_cfg()), "--out", str(out)]) == 0
        for name in ("sgd_theta", "sgd_ndp", "sgd_decaying"):
            lines = (out / f"{name}.csv").read_text().splitlines()
            assert lines[0].startswith("iter,step,batch_residual")
            assert len(lines) == 42
            img, hdr = read_image(out / f"{name}_final.bin")
            assert img.shape == (16, 16) and (out / f"{name}_final.pgm").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["admissibility"]["sgd_theta"]["passed"] is True
        assert manifest["admissibility"]["sgd_ndp"]["applicable"] is False
        assert len(manifest["noise_levels"]["realized"]) == 12 * 16
        assert manifest["results"][0]["status"] == "ok"
        assert "c0 = " in capsys.readouterr().out

    def test_admissibility_refusal(self, small_cfg, tmp_path, capsys):
        cfg = small_cfg(mu0=0.2)
        out = tmp_path / "refused"
        assert main(["run", str(cfg), "--out", str(out)]) == 3
        assert "admissibility" in capsys.readouterr().err
        assert not out.exists()
        assert main(["run", str(cfg), "--out", str(out), "--force"]) == 0
        assert (out / "sgd_theta.csv").exists()

    def test_config_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text("[problem]\nkind = ct\nn = 16\nangles =\n")
        assert main(["run", str(bad)]) == 2
        assert "bad.ini:4" in capsys.readouterr().err

    def test_env_override(self, small_cfg, tmp_path, monkeypatch):
        monkeypatch.setenv("SGDTHETA_OUT", str(tmp_path / "env"))
        assert main(["run", str(small_cfg())]) == 0
        assert (tmp_path / "env" / "manifest.json").exists()
        assert main(["run", str(small_cfg()), "--out", str(tmp_path / "flag")]) == 0
        assert (tmp_path / "flag" / "manifest.json").exists()

    def test_seed_and_stride_flags(self, small_cfg, tmp_path):
        out = tmp_path / "o"
        assert main(["run", str(small_cfg()), "--out", str(out), "--seed", "100", "--stride", "40"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert [m["seed"] for m in manifest["methods"]] == [100, 101, 102]
        rows = [line.split(",") for line in (out / "sgd_theta.csv").read_text().splitlines()[1:]]
        assert [r[0] for r in rows if r[3]] == ["0", "40"]

    def test_byte_identical_reruns(self, small_cfg, tmp_path):
        cfg = small_cfg()
        for d in ("a", "b"):
            assert main(["run", str(cfg), "--out", str(tmp_path / d)]) == 0
        for name in ("sgd_theta", "sgd_ndp", "sgd_decaying"):
            assert (tmp_path / "a" / f"{name}.csv").read_bytes() == (tmp_path / "b" / f"{name}.csv").read_bytes()

    def test_solver_failure_keeps_partial(self, small_cfg, tmp_path):
        extra = "\n[method:sgd_decaying]\nstep_rule = decaying\ntau = 0\nt0 = 1e300\n"
        out = tmp_path / "fail"
        assert main(["run", str(small_cfg(extra=extra)), "--out", str(out)]) == 4
        assert (out / "sgd_theta.csv").exists() and (out / "sgd_decaying.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["results"][-1]["status"] == "numerical-failure"


class TestTools:
    def test_phantom(self, tmp_path):
        assert main(["phantom", "--n", "64", "--out", str(tmp_path / "p.bin"), "--pgm"]) == 0
        img, _ = read_image(tmp_path / "p.bin")
        assert img.tobytes() == shepp_logan(64).tobytes()
        assert img.min() >= 0.0 and img.max() <= 1.0
        assert (tmp_path / "p.bin.pgm").exists()

    def test_project(self, tmp_path):
        write_image(tmp_path / "z.bin", np.zeros((16, 16)))
        assert main(["project", str(tmp_path / "z.bin"), "--angles", "10", "--out", str(tmp_path / "s.bin")]) == 0
        sino, _ = read_image(tmp_path / "s.bin")
        assert sino.shape == (10, 16) and not sino.any()

        img = shepp_logan(16)
        write_image(tmp_path / "p.bin", img)
        assert main(["project", str(tmp_path / "p.bin"), "--angles", "7", "--lines", "9",
                     "--out", str(tmp_path / "q.bin")]) == 0
        sino, _ = read_image(tmp_path / "q.bin")
        lib = radon_row_apply(build_parallel_tomo(16, np.linspace(1, 180, 7), 9), slice(None), img.ravel())
        assert sino.tobytes() == lib.reshape(7, 9).tobytes()

    def test_denoise(self, tmp_path):
        write_image(tmp_path / "c.bin", np.full((8, 8), 0.7))
        assert main(["denoise-tv", str(tmp_path / "c.bin"), "--beta", "2", "--out", str(tmp_path / "d.bin")]) == 0
        out, _ = read_image(tmp_path / "d.bin")
        assert out.tobytes() == np.full((8, 8), 0.7).tobytes()

        noisy = shepp_logan(16) + 0.1 * np.random.default_rng(0).standard_normal((16, 16))
        write_image(tmp_path / "n.bin", noisy)
        assert main(["denoise-tv", str(tmp_path / "n.bin"), "--beta", "0.3", "--out", str(tmp_path / "e.bin")]) == 0
        out, _ = read_image(tmp_path / "e.bin")
        assert out.tobytes() == tv_denoise_pdhg(noisy, 0.3, PdhgConfig(max_iters=200, gap_tol=1e-3)).tobytes()

    def test_missing_input(self, tmp_path, capsys):
        assert main(["project", str(tmp_path / "missing.bin"), "--out", str(tmp_path / "x.bin")]) == 1
        assert "error" in capsys.readouterr().err


class TestCheck:
    def test_battery_passes(self):
        results = run_all()
        assert all(r.passed for r in results), [r.line() for r in results if not r.passed]
        c0 = [r for r in results if "admissibility" in r.name][0]
        assert c0.measured == pytest.approx(9.09e-4, abs=1e-6)

    def test_transposed_matrix_negative_control(self):
        # 8 angles x 8 lines on an 8 x 8 grid is square, so the untransposed
        # matrix type-checks as an adjoint but is not one
        a = build_parallel_tomo(8, np.linspace(1, 180, 8), 8).to_csr()
        res = check_adjoint("negative control", lambda x: a @ x, lambda y: a @ y, 64, 64, 1e-12)
        assert not res.passed and res.line().startswith("FAIL")

    def test_console_script(self):
        out = subprocess.run([sys.executable, "-m", "sgdtheta.cli.main", "check"], capture_output=True, text=True)
        assert out.returncode == 0
        assert out.stdout.strip().endswith("7/7 checks passed")
