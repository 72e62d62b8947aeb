import json

import numpy as np
import pytest

from wwmorawetz import cli


def run(argv, tmp_path, name="out"):
    return cli.main([*argv, "--out", str(tmp_path / name)])


def write_config(tmp_path, text):
    p = tmp_path / "run.yaml"
    p.write_text(text)
    return str(p)


SMALL = ["--set", "numerics.N=32", "--set", "numerics.T=0.1", "--set", "numerics.dt=0.01"]


class TestConfig:
    def test_defaults_validate(self):
        cfg = cli.load_config()
        assert cfg.numerics.N == 256 and cfg.physics.depth == 1.0

    def test_odd_n(self, tmp_path, capsys):
        assert run(["simulate", "--set", "numerics.N=255"], tmp_path) == cli.EXIT_CONFIG
        assert "numerics.N" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "physics:\n  gravity: 2.0\n")
        assert run(["simulate", "--config", cfg], tmp_path) == cli.EXIT_CONFIG
        assert "physics.gravity" in capsys.readouterr().err

    def test_bad_set_syntax(self, tmp_path):
        assert run(["simulate", "--set", "numerics.N"], tmp_path) == cli.EXIT_CONFIG

    def test_missing_file(self, tmp_path, capsys):
        argv = ["simulate", "--set", "physics.initial=file", *SMALL]
        assert run(argv, tmp_path) == cli.EXIT_CONFIG
        assert "physics.file" in capsys.readouterr().err

    def test_infinite_depth(self):
        cfg = cli.load_config(overrides=["physics.h=inf"])
        assert np.isinf(cfg.physics.depth)

    def test_negative_depth(self):
        with pytest.raises(cli.ConfigError):
            cli.load_config(overrides=["physics.h=-1"])

    def test_override_wins(self, tmp_path):
        cfg = write_config(tmp_path, "numerics:\n  N: 64\n")
        assert cli.load_config(cfg, ["numerics.N=128"]).numerics.N == 128

    def test_hash_ignores_out(self):
        a = cli.load_config(out="a")
        b = cli.load_config(out="b")
        c = cli.load_config(overrides=["seed=3"])
        assert cli.config_hash(a) == cli.config_hash(b) != cli.config_hash(c)

    def test_bad_argument(self, tmp_path):
        assert cli.main(["frobnicate"]) == cli.EXIT_CONFIG


class TestSimulate:
    def test_rest(self, tmp_path):
        assert run(["simulate", "--set", "physics.initial=rest", *SMALL], tmp_path) == 0
        out = tmp_path / "out"
        lines = (out / "snapshots.csv").read_text().splitlines()
        assert lines[0].startswith("# config_hash=")
        assert lines[1] == "t,alpha,ReW,ImW,ReQ,ImQ"
        data = np.loadtxt(out / "snapshots.csv", delimiter=",", skiprows=2)
        assert np.all(data[:, 2:] == 0)
        inv = np.loadtxt(out / "invariants.csv", delimiter=",", skiprows=2)
        assert np.all(inv[:, 1:] == 0)
        doc = json.loads((out / "verdicts.json").read_text())
        assert doc["meta"]["config_hash"] == cli.config_hash(cli.load_config(
            overrides=["physics.initial=rest", "numerics.N=32", "numerics.T=0.1", "numerics.dt=0.01"]))
        assert all({"name", "value", "tolerance", "pass"} <= set(v) for v in doc["data"])

    def test_defaults_echoed(self, tmp_path):
        run(["simulate", "--set", "physics.initial=rest", *SMALL], tmp_path)
        doc = json.loads((tmp_path / "out" / "verdicts.json").read_text())
        assert doc["config"]["physics"]["g"] == 1.0
        assert doc["config"]["weight"]["sigma"] == 0.49
        assert "tolerances" in doc["meta"] and "version" in doc["meta"]

    def test_deterministic(self, tmp_path):
        argv = ["simulate", "--set", "physics.initial=random", "--set", "physics.amplitude=0.01",
                "--seed", "4", *SMALL]
        assert run(argv, tmp_path, "a") == 0
        assert run(argv, tmp_path, "b") == 0
        for f in ("snapshots.csv", "invariants.csv", "verdicts.json"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_seed_changes_output(self, tmp_path):
        base = ["simulate", "--set", "physics.initial=random", *SMALL]
        run([*base, "--seed", "1"], tmp_path, "a")
        run([*base, "--seed", "2"], tmp_path, "b")
        assert (tmp_path / "a" / "snapshots.csv").read_bytes() != (tmp_path / "b" / "snapshots.csv").read_bytes()

    def test_steep_is_numerical(self, tmp_path):
        argv = ["simulate", "--set", "physics.amplitude=0.6", *SMALL]
        assert run(argv, tmp_path) == cli.EXIT_NUMERICAL

    def test_mode_invariants(self, tmp_path, capsys):
        argv = ["simulate", "--set", "numerics.N=64", "--set", "numerics.T=0.5", "--strict"]
        assert run(argv, tmp_path) == 0
        assert "PASS energy_drift" in capsys.readouterr().out

    def test_linear_dispersion(self, tmp_path):
        argv = ["simulate", "--set", "physics.model=linear", "--set", "diagnostics.dispersion=true",
                "--set", "numerics.N=64", "--set", "numerics.T=0.1"]
        assert run(argv, tmp_path) == 0
        rows = np.loadtxt(tmp_path / "out" / "dispersion.csv", delimiter=",", skiprows=2)
        assert rows.shape == (8, 4)
        assert np.all(rows[:, 3] < 1e-6)

    def test_file_input(self, tmp_path):
        n = 32
        x = np.linspace(-np.pi, np.pi, n, endpoint=False)
        np.savetxt(tmp_path / "init.csv", np.c_[0.01 * np.cos(x), np.zeros(n)], delimiter=",")
        argv = ["simulate", "--set", "physics.initial=file", "--set", f"physics.file={tmp_path / 'init.csv'}",
                *SMALL]
        assert run(argv, tmp_path) == 0
        data = np.loadtxt(tmp_path / "out" / "snapshots.csv", delimiter=",", skiprows=2)
        assert np.max(np.abs(data[:n, 3] - 0.01 * np.cos(x))) < 1e-3

    def test_densities_written(self, tmp_path):
        argv = ["simulate", "--set", "diagnostics.densities=[1,2]", "--set", "numerics.N=64",
                "--set", "numerics.T=0.2"]
        assert run(argv, tmp_path) == 0
        for which in ("1", "2"):
            assert (tmp_path / "out" / f"density_{which}.csv").exists()
            assert (tmp_path / "out" / f"residual_{which}.csv").exists()

    def test_strict_verdict_failure(self, tmp_path):
        argv = ["simulate", "--set", "numerics.N=64", "--set", "numerics.T=0.5",
                "--set", "tolerances.invariants=1e-30", "--strict"]
        assert run(argv, tmp_path) == cli.EXIT_VERDICT
        assert run(argv[:-1], tmp_path, "lax") == cli.EXIT_OK


class TestVerify:
    def test_unknown_suite(self, tmp_path):
        assert run(["verify", "nonsense"], tmp_path) == cli.EXIT_CONFIG

    def test_operators(self, tmp_path):
        assert run(["verify", "operators"], tmp_path) == 0
        doc = json.loads((tmp_path / "out" / "verify_operators.json").read_text())
        assert all(v["pass"] for v in doc["data"])

    def test_identities(self, tmp_path):
        assert run(["verify", "identities"], tmp_path) == 0

    @pytest.mark.slow
    def test_kernel(self, tmp_path):
        assert run(["verify", "kernel"], tmp_path) == 0


class TestKernel:
    def test_coarse_table(self, tmp_path):
        argv = ["kernel", "--set", "kernel.spacing=0.25", "--set", "kernel.x0_grid=[0.5,1.0,7.0]"]
        assert run(argv, tmp_path) == 0
        out = tmp_path / "out"
        doc = json.loads((out / "kernel_verdicts.json").read_text())
        v = {d["name"]: d for d in doc["data"]}
        assert abs(v["mass"]["value"] - 0.5) < 1e-3
        assert v["positivity"]["pass"]
        pv = np.loadtxt(out / "diagonal_pv.csv", delimiter=",", skiprows=2)
        assert pv.shape == (3, 4)
        assert np.allclose(pv[:, 1], pv[:, 2], rtol=1e-8)


class TestNorms:
    def test_linear_packet(self, tmp_path):
        argv = ["norms", "--set", "physics.model=linear", "--set", "physics.initial=packet",
                "--set", "physics.amplitude=0.01", "--set", "numerics.N=128", "--set", "numerics.L=64",
                "--set", "physics.packet_width=2", "--set", "numerics.T=1"]
        assert run(argv, tmp_path) == 0
        doc = json.loads((tmp_path / "out" / "norms.json").read_text())
        assert doc["data"]["e14_start"] > 0
        e14 = np.loadtxt(tmp_path / "out" / "e14.csv", delimiter=",", skiprows=2)
        assert np.allclose(e14[:, 1], e14[0, 1], rtol=1e-6)
