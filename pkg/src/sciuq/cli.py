"""Command-line pipeline: config -> data -> model -> inference -> summaries.

Usage::

    uq run --config run.toml [--out DIR] [--seed N] [--dump-data]
    uq catalog
    uq gradcheck --config run.toml
    uq data --problem ID --seed N --out DIR
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from . import autodiff as ad
from . import uq_stats as st
from .errors import ConfigError, GradCheckFailed, UnknownProblem, UQError
from .inference import FAMILY_OF, METHODS, InferenceConfig, run
from .inference.core import PosteriorSamples
from .likelihoods import Dataset, OperatorDataset, dataset_header, format_rows, operator_to_dataset
from .problems import CATALOG, get_problem
from .surrogates import SIN_COS_GENERATOR, DeepONetSpec, FnnSpec, GeneratorSpec, RescaledInput

log = logging.getLogger("sciuq")

EXIT_CONFIG, EXIT_INFERENCE, EXIT_IO, EXIT_GRADCHECK = 2, 3, 4, 5
GRADCHECK_TOL = 1e-4
GRADCHECK_COORDS = 200

METHOD_NOTES = {
    "dens": "deep ensemble of independent trainings",
    "hmc": "Hamiltonian Monte Carlo",
    "la": "diagonal Laplace approximation",
    "ld": "unadjusted Langevin dynamics",
    "mala": "Metropolis-adjusted Langevin algorithm",
    "mcd": "Monte Carlo dropout",
    "mfvi": "mean-field Gaussian variational inference",
    "sens": "snapshot ensemble with cyclic cosine learning rate",
}

SECTIONS = {"seed", "problem", "surrogate", "inference", "calibration", "output"}
SURROGATE_KEYS = {"widths", "activation", "rescale", "generator", "latent_dim", "branch", "trunk"}
CALIBRATION_KEYS = {"enabled", "split_fraction"}
OUTPUT_KEYS = {"directory", "test_grid"}


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    problem: str
    problem_overrides: dict = field(default_factory=dict)
    data_seed: int = 0
    surrogates: dict = field(default_factory=dict)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    calibration: bool = False
    split_fraction: float = 0.0
    output_dir: str = "uq_out"
    test_grid: int | None = None
    seed: int = 0
    base_dir: Path = field(default=Path("."), compare=False)


def _check_keys(section: str, table: dict, allowed) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")


def parse_config(raw: dict, base_dir=".") -> RunConfig:
    _check_keys("top level", raw, SECTIONS)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")

    prob = dict(raw.get("problem", {}))
    if "id" not in prob:
        raise ConfigError("[problem] needs an id")
    pid = prob.pop("id")
    data_seed = prob.pop("data_seed", 0)

    surrogates = raw.get("surrogate", {})
    for key, opts in surrogates.items():
        if not isinstance(opts, dict):
            raise ConfigError(f"[surrogate.{key}] must be a table")
        _check_keys(f"surrogate.{key}", opts, SURROGATE_KEYS)

    inf = dict(raw.get("inference", {}))
    if "seed" in inf:
        raise ConfigError("set the seed at the top level, not in [inference]")
    if "method" in inf and inf["method"] not in METHODS:
        raise ConfigError(f"unknown method {inf['method']!r}; choose from {', '.join(METHODS)}")
    known = {f.name for f in dataclasses.fields(InferenceConfig)}
    _check_keys("inference", inf, known)
    inf.setdefault("threads", _default_threads())
    try:
        icfg = InferenceConfig(**inf, seed=seed)
    except TypeError as exc:
        raise ConfigError(f"[inference]: {exc}") from None

    cal = raw.get("calibration", {})
    _check_keys("calibration", cal, CALIBRATION_KEYS)
    enabled = bool(cal.get("enabled", False))
    frac = float(cal.get("split_fraction", 0.2 if enabled else 0.0))
    if enabled and not 0.0 < frac < 1.0:
        raise ConfigError("calibration split_fraction must lie in (0, 1)")

    out = raw.get("output", {})
    _check_keys("output", out, OUTPUT_KEYS)
    grid = out.get("test_grid")
    if grid is not None and (not isinstance(grid, int) or grid < 1):
        raise ConfigError("test_grid must be a positive integer")

    return RunConfig(pid, prob, data_seed, surrogates, icfg, enabled, frac,
                     str(out.get("directory", "uq_out")), grid, seed, Path(base_dir))


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(raw, path.parent)


def _default_threads() -> int:
    env = os.environ.get("UQ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"UQ_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def resolve_problem(cfg: RunConfig):
    overrides = {}
    try:
        cls = CATALOG[cfg.problem]
    except KeyError:
        raise UnknownProblem(f"unknown problem {cfg.problem!r}; "
                             f"available: {', '.join(sorted(CATALOG))}") from None
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in cfg.problem_overrides.items():
        if key not in fields:
            raise ConfigError(f"unknown key in [problem] for {cfg.problem}: {key}")
        overrides[key] = tuple(value) if isinstance(value, list) else value
    try:
        return get_problem(cfg.problem, **overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[problem]: {exc}") from None


def build_surrogates(cfg: RunConfig, problem) -> dict:
    defaults = problem.default_surrogates()
    built = {}
    for key, opts in cfg.surrogates.items():
        if key not in defaults:
            raise ConfigError(f"[surrogate.{key}]: problem {problem.id} has no process {key!r}")
        default = defaults[key]
        try:
            built[key] = _surrogate(opts, default, problem, cfg.base_dir)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[surrogate.{key}]: {exc}") from None
    return built


def _surrogate(opts, default, problem, base_dir):
    act = opts.get("activation", "tanh")
    if "generator" in opts:
        src = opts["generator"]
        path = SIN_COS_GENERATOR if src == "sin_cos" else base_dir / src
        return GeneratorSpec.load(path, int(opts.get("latent_dim", 2)), problem.input_dim)
    if "branch" in opts or "trunk" in opts:
        if not isinstance(default, DeepONetSpec):
            raise ValueError("branch/trunk only apply to operator surrogates")
        return DeepONetSpec(FnnSpec(tuple(opts.get("branch", default.branch.layer_widths)), act),
                            FnnSpec(tuple(opts.get("trunk", default.trunk.layer_widths)), act))
    if "widths" not in opts:
        raise ValueError("give widths, generator, or branch/trunk")
    net = FnnSpec(tuple(opts["widths"]), act)
    if opts.get("rescale", isinstance(default, RescaledInput)):
        lo = tuple(d[0] for d in problem.domain)
        hi = tuple(d[1] for d in problem.domain)
        return RescaledInput(net, lo, hi)
    return net


def resolved_dict(cfg: RunConfig, problem) -> dict:
    prob = {"id": cfg.problem, "data_seed": cfg.data_seed}
    for f in dataclasses.fields(problem):
        v = getattr(problem, f.name)
        prob[f.name] = list(v) if isinstance(v, tuple) else v
    inf = cfg.inference.to_dict()
    inf.pop("seed")
    inf.pop("threads")
    out = {"directory": cfg.output_dir, "test_grid": cfg.test_grid or problem.default_grid}
    doc = {"seed": cfg.seed, "problem": prob, "inference": inf,
           "calibration": {"enabled": cfg.calibration, "split_fraction": cfg.split_fraction},
           "output": out}
    if cfg.surrogates:
        doc["surrogate"] = cfg.surrogates
    return doc


# ---------------------------------------------------------------------------
# files


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def samples_text(ps: PosteriorSamples) -> str:
    rate = "none" if ps.acceptance_rate is None else f"{ps.acceptance_rate:.17g}"
    header = f"# method={ps.method} seed={ps.seed} acceptance_rate={rate}"
    cols = ",".join(f"theta_{i}" for i in range(ps.n_params))
    return f"{header}\n{cols}\n{format_rows(ps.samples)}\n"


def predictions_text(grid, summary: st.PredictiveSummary) -> str:
    n_out = summary.mean.shape[1]
    names = ("mean", "std_aleatoric", "std_epistemic", "std_total")
    blocks = [summary.mean, summary.std_aleatoric, summary.std_epistemic, summary.std_total]
    cols = [f"x_{i}" for i in range(grid.shape[1])]
    if n_out == 1:
        cols += list(names)
    else:
        cols += [f"{name}_{k}" for name in names for k in range(n_out)]
    rows = np.hstack([grid] + blocks)
    return ",".join(cols) + "\n" + format_rows(rows) + "\n"


def dataset_files(data: dict) -> dict:
    files = {}
    for name, ds in data.items():
        if isinstance(ds, OperatorDataset):
            ds = operator_to_dataset(ds)
        assert isinstance(ds, Dataset)
        body = format_rows(np.hstack([ds.inputs, ds.targets]))
        header = dataset_header(ds.inputs.shape[1], ds.targets.shape[1])
        files[f"{name}.csv"] = header + "\n" + (body + "\n" if len(ds) else "")
    return files


def write_files(directory, files: dict) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        atomic_write(directory / name, text)


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class RunResult:
    samples: PosteriorSamples
    summary: st.PredictiveSummary
    metrics: dict
    grid: np.ndarray
    files: dict


def run_pipeline(cfg: RunConfig, write: bool = True) -> RunResult:
    t0 = time.perf_counter()
    problem = resolve_problem(cfg)
    surrogates = build_surrogates(cfg, problem)
    data = problem.make_dataset(cfg.data_seed)
    model = problem.build_model(data, FAMILY_OF[cfg.inference.method], surrogates)
    log.info("%s: %d parameters, method %s", problem.id, model.n_params, cfg.inference.method)
    ps = run(model, cfg.inference)

    grid = problem.test_grid(cfg.test_grid)
    fs = st.function_samples(lambda th, g: problem.predict(model, th, g, cfg.data_seed),
                             ps.samples, grid)
    summary = st.predictive_summary(fs, problem.aleatoric_std)
    ref = problem.reference(grid, cfg.data_seed)

    scale = None
    if cfg.calibration:
        n = ref.shape[0]
        start = n - max(1, int(round(cfg.split_fraction * n)))
        rng = np.random.default_rng([cfg.data_seed, 2])
        noisy = ref[start:] + problem.aleatoric_std * rng.standard_normal(ref[start:].shape)
        scale = st.calibration_scale(summary.take(slice(start, None)), noisy)
        summary = st.rescale(summary, scale)

    metrics = {
        "rl2e": st.rl2e(summary.mean, ref),
        "mse": st.mse(summary.mean, ref),
        "nll": st.nll(summary, ref),
        "n_samples": ps.n_samples,
        "acceptance_rate": ps.acceptance_rate,
        "calibration_scale": scale,
    }
    for key in problem.true_parameters():
        vals = ps.samples[:, model.slice(key)]
        metrics[f"{key}_mean"] = float(vals.mean())
        metrics[f"{key}_std"] = float(vals.std())
    metrics["wall_time_s"] = time.perf_counter() - t0

    shown = summary.take(slice(0, grid.shape[0]))
    files = {
        "samples.csv": samples_text(ps),
        "predictions.csv": predictions_text(grid, shown),
        "metrics.json": json.dumps(metrics, indent=2) + "\n",
        "config_resolved.toml": tomli_w.dumps(resolved_dict(cfg, problem)),
    }
    if write:
        write_files(cfg.output_dir, files)
    return RunResult(ps, summary, metrics, grid, files)


def gradcheck(cfg: RunConfig) -> float:
    problem = resolve_problem(cfg)
    data = problem.make_dataset(cfg.data_seed)
    family = FAMILY_OF[cfg.inference.method]
    model = problem.build_model(data, family, build_surrogates(cfg, problem))
    rng = np.random.default_rng(cfg.seed)
    theta = model.init_params(rng)
    fn = model.mse_loss if family == "trainable" else model.log_posterior
    coords = None
    if model.n_params > GRADCHECK_COORDS:
        coords = np.sort(rng.choice(model.n_params, GRADCHECK_COORDS, replace=False))
    return ad.grad_check(fn, theta, coords=coords)


# ---------------------------------------------------------------------------
# entry point


def catalog_text() -> str:
    lines = ["problems:"]
    lines += [f"  {pid:28s} {CATALOG[pid].description}" for pid in sorted(CATALOG)]
    lines.append("methods:")
    lines += [f"  {m:28s} {METHOD_NOTES[m]}" for m in sorted(METHODS)]
    return "\n".join(lines) + "\n"


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uq", description="Uncertainty quantification for SciML")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the full pipeline from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--dump-data", action="store_true",
                   help="write the generated datasets and stop before inference")
    sub.add_parser("catalog", help="list problems and inference methods")
    g = sub.add_parser("gradcheck", help="compare AD and finite-difference gradients")
    g.add_argument("--config", required=True)
    d = sub.add_parser("data", help="write a problem's datasets as CSV")
    d.add_argument("--problem", required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    return ap


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "out", None):
        cfg.output_dir = args.out
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        cfg.seed = args.seed
        cfg.inference = dataclasses.replace(cfg.inference, seed=args.seed)
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "catalog":
            sys.stdout.write(catalog_text())
        elif args.command == "data":
            problem = get_problem(args.problem)
            write_files(args.out, dataset_files(problem.make_dataset(args.seed)))
        elif args.command == "gradcheck":
            err = gradcheck(_load(args))
            print(f"max_rel_err={err:.3e}")
            if not err <= GRADCHECK_TOL:
                raise GradCheckFailed(f"gradient check failed: {err:.3e} > {GRADCHECK_TOL:g}")
        elif args.dump_data:
            cfg = _load(args)
            problem = resolve_problem(cfg)
            write_files(cfg.output_dir, dataset_files(problem.make_dataset(cfg.data_seed)))
        else:
            res = run_pipeline(_load(args))
            m = res.metrics
            print(f"rl2e={m['rl2e']:.4g} nll={m['nll']:.4g} n_samples={m['n_samples']} "
                  f"wall_time_s={m['wall_time_s']:.1f}")
    except (ConfigError, UnknownProblem) as exc:
        return _fail(exc, EXIT_CONFIG)
    except GradCheckFailed as exc:
        return _fail(exc, EXIT_GRADCHECK)
    except OSError as exc:
        return _fail(exc, EXIT_IO)
    except UQError as exc:
        return _fail(exc, EXIT_INFERENCE)
    return 0


def _fail(exc, code) -> int:
    # KeyError subclasses would otherwise print their message quoted
    msg = str(exc.args[0]) if isinstance(exc, KeyError) and exc.args else str(exc)
    print(f"uq: error: {msg}".replace("\n", " "), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
