import dataclasses
import json
import math

import numpy as np
import pytest

from sciuq import autodiff as ad
from sciuq import cli

SINE_HMC = """
seed = 7

[problem]
id = "sine_regression"

[surrogate.u]
widths = [1, 10, 1]
activation = "tanh"

[inference]
method = "hmc"
n_samples = 40
burn_in = 10
step_size = 0.003
leapfrog_steps = 5
threads = 1

[output]
directory = "{out}"
test_grid = 31
"""


def write_config(tmp_path, text, name="run.toml", out="out"):
    path = tmp_path / name
    path.write_text(text.replace("{out}", str(tmp_path / out)))
    return path


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def test_catalog_listing(capsys):
    assert run_cli("catalog") == 0
    first = capsys.readouterr().out
    assert run_cli("catalog") == 0
    assert capsys.readouterr().out == first
    problems, methods = first.split("methods:")
    pids = [line.split()[0] for line in problems.splitlines()[1:]]
    assert pids == sorted(pids) and "sine_regression" in pids
    mids = [line.split()[0] for line in methods.strip().splitlines()]
    assert mids == sorted(["hmc", "mala", "ld", "mfvi", "mcd", "dens", "sens", "la"])


def test_run_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, SINE_HMC)
    assert run_cli("run", "--config", cfg, "--out", tmp_path / "a") == 0
    assert run_cli("run", "--config", cfg, "--out", tmp_path / "b") == 0
    for name in ("samples.csv", "predictions.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_artifacts(tmp_path):
    cfg = write_config(tmp_path, SINE_HMC)
    assert run_cli("run", "--config", cfg) == 0
    out = tmp_path / "out"
    lines = (out / "predictions.csv").read_text().splitlines()
    assert lines[0] == "x_0,mean,std_aleatoric,std_epistemic,std_total"
    assert len(lines) == 1 + 31
    rows = np.loadtxt(out / "predictions.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(rows[:, 4] ** 2, rows[:, 2] ** 2 + rows[:, 3] ** 2, rtol=1e-12)
    metrics = json.loads((out / "metrics.json").read_text())
    assert math.isfinite(metrics["rl2e"]) and math.isfinite(metrics["nll"])
    assert metrics["n_samples"] == 40
    samples = np.loadtxt(out / "samples.csv", delimiter=",", skiprows=2)
    assert samples.shape == (40, 31)
    assert not list(out.glob("*.tmp")) and not list(out.glob(".*"))


def test_resolved_config_reproduces_outputs(tmp_path):
    cfg = write_config(tmp_path, SINE_HMC)
    assert run_cli("run", "--config", cfg) == 0
    first = tmp_path / "out"
    resolved = first / "config_resolved.toml"
    assert run_cli("run", "--config", resolved, "--out", tmp_path / "again") == 0
    for name in ("samples.csv", "predictions.csv"):
        assert (first / name).read_bytes() == (tmp_path / "again" / name).read_bytes()
    a = cli.load_config(resolved)
    b = cli.load_config(tmp_path / "again" / "config_resolved.toml")
    assert a.output_dir != b.output_dir
    assert dataclasses.replace(a, output_dir="") == dataclasses.replace(b, output_dir="")


def test_seed_flag_changes_samples(tmp_path):
    cfg = write_config(tmp_path, SINE_HMC)
    assert run_cli("run", "--config", cfg, "--out", tmp_path / "a") == 0
    assert run_cli("run", "--config", cfg, "--out", tmp_path / "b", "--seed", 8) == 0
    assert (tmp_path / "a" / "samples.csv").read_bytes() != (tmp_path / "b" / "samples.csv").read_bytes()


def test_unknown_problem_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, SINE_HMC.replace("sine_regression", "heat_equation"))
    assert run_cli("run", "--config", cfg) == 2
    err = capsys.readouterr().err
    assert "heat_equation" in err and err.count("\n") == 1


@pytest.mark.parametrize("edit", [
    ("method = \"hmc\"", "method = \"nuts\""),
    ("step_size", "stepsize"),
    ("seed = 7", "seed = -1"),
    ("test_grid = 31", "test_grid = 0"),
    ("activation = \"tanh\"", "activation = \"gelu\""),
    ("n_samples = 40", "n_samples = 0"),
])
def test_bad_config_exit_code(tmp_path, edit, capsys):
    cfg = write_config(tmp_path, SINE_HMC.replace(*edit))
    assert run_cli("run", "--config", cfg) == 2
    assert capsys.readouterr().err.startswith("uq: error:")
    assert not (tmp_path / "out").exists()


def test_malformed_toml(tmp_path):
    cfg = write_config(tmp_path, "seed = = 3")
    assert run_cli("run", "--config", cfg) == 2


def test_zero_acceptance_exit_code_writes_nothing(tmp_path, capsys):
    cfg = write_config(tmp_path, SINE_HMC.replace("step_size = 0.003", "step_size = 50.0"))
    assert run_cli("run", "--config", cfg) == 3
    assert "acceptance" in capsys.readouterr().err.lower()
    assert not (tmp_path / "out").exists()


def test_missing_config_exit_code(tmp_path):
    assert run_cli("run", "--config", tmp_path / "nope.toml") == 4


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = write_config(tmp_path, SINE_HMC)
    assert run_cli("run", "--config", cfg, "--out", blocker / "sub") == 4


def test_gradcheck_sine(tmp_path, capsys):
    cfg = write_config(tmp_path, SINE_HMC.replace("[1, 10, 1]", "[1, 50, 1]"))
    assert run_cli("gradcheck", "--config", cfg) == 0
    err = float(capsys.readouterr().out.strip().split("=")[1])
    assert err <= 1e-5


def test_gradcheck_diffusion_reaction(capsys):
    from pathlib import Path

    cfg = Path(__file__).parents[1] / "configs" / "diffusion_reaction_normal.toml"
    assert run_cli("gradcheck", "--config", cfg) == 0
    assert float(capsys.readouterr().out.strip().split("=")[1]) <= 1e-4


def test_gradcheck_detects_corrupted_primitive(tmp_path, monkeypatch, capsys):
    prim = ad.PRIMITIVES["tanh"]

    def skewed(*args, **kw):
        return tuple(1.01 * g for g in prim.vjp(*args, **kw))

    monkeypatch.setitem(ad.PRIMITIVES, "tanh", dataclasses.replace(prim, vjp=skewed))
    cfg = write_config(tmp_path, SINE_HMC)
    assert run_cli("gradcheck", "--config", cfg) == 5
    assert "gradient check failed" in capsys.readouterr().err


def test_data_command(tmp_path):
    assert run_cli("data", "--problem", "diffusion_reaction_inverse", "--seed", 3,
                   "--out", tmp_path / "d") == 0
    u = (tmp_path / "d" / "u.csv").read_text().splitlines()
    f = (tmp_path / "d" / "f.csv").read_text().splitlines()
    assert u[0] == "x_0,y_0" and len(u) == 6 and len(f) == 18
    assert run_cli("data", "--problem", "nope", "--out", tmp_path / "e") == 2


def test_dump_data_skips_inference(tmp_path):
    cfg = write_config(tmp_path, SINE_HMC)
    assert run_cli("run", "--config", cfg, "--dump-data") == 0
    files = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert files == ["u.csv"]


def test_atomic_write_leaves_old_file_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "x.csv"
    target.write_text("old\n")

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(cli.os, "replace", boom)
    with pytest.raises(OSError):
        cli.atomic_write(target, "new\n")
    assert target.read_text() == "old\n"
    assert [p.name for p in tmp_path.iterdir()] == ["x.csv"]


def test_float_round_trip(tmp_path):
    cfg = write_config(tmp_path, SINE_HMC)
    res = cli.run_pipeline(cli.load_config(cfg), write=False)
    back = np.loadtxt(res.files["samples.csv"].splitlines()[2:], delimiter=",")
    assert np.array_equal(back, res.samples.samples)


@pytest.mark.parametrize("name", ["sine_hmc", "kraichnan_orszag_hmc", "diffusion_reaction_normal",
                                  "diffusion_reaction_halfnormal", "diffusion_reaction_lognormal",
                                  "diffusion_reaction_forward_mfvi", "antiderivative_dens",
                                  "kraichnan_orszag_dens", "sine_generator"])
def test_shipped_configs_parse(name):
    from pathlib import Path

    cfg = cli.load_config(Path(__file__).parents[1] / "configs" / f"{name}.toml")
    problem = cli.resolve_problem(cfg)
    cli.build_surrogates(cfg, problem)
