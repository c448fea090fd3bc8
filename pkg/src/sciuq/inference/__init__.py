"""Posterior inference: samplers, variational methods and ensembles."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .core import (METHODS, Adam, InferenceConfig, PosteriorSamples, minimize, read_samples,
                   write_samples)
from .mcmc import hmc_run, ld_run, leapfrog, mala_run
from .optimization import (NonPositiveCurvature, cyclic_cosine_lr, dens_run, elbo, la_run,
                           mcd_run, mfvi_run, sens_run)

RUNNERS = {
    "hmc": hmc_run,
    "mala": mala_run,
    "ld": ld_run,
    "mfvi": lambda model, cfg: mfvi_run(model, cfg)[1],
    "mcd": mcd_run,
    "dens": dens_run,
    "sens": sens_run,
    "la": la_run,
}

# parameter treatment each method expects of the model's processes
FAMILY_OF = {
    "hmc": "samplable", "mala": "samplable", "ld": "samplable",
    "mfvi": "variational", "mcd": "variational",
    "dens": "trainable", "sens": "trainable", "la": "trainable",
}


def run(model, cfg: InferenceConfig) -> PosteriorSamples:
    """Dispatch on ``cfg.method``, pooling ``cfg.chains`` seeded runs."""
    runner = RUNNERS[cfg.method]
    if cfg.chains == 1:
        return runner(model, cfg)
    seeds = [cfg.seed + i for i in range(cfg.chains)]
    cfgs = [replace(cfg, seed=s, chains=1) for s in seeds]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            runs = list(pool.map(lambda c: runner(model, c), cfgs))
    else:
        runs = [runner(model, c) for c in cfgs]
    rates = [r.acceptance_rate for r in runs]
    rate = None if any(r is None for r in rates) else float(np.mean(rates))
    return PosteriorSamples(np.vstack([r.samples for r in runs]), cfg.method, cfg.seed, rate,
                            {"chains": [r.diagnostics for r in runs], "chain_seeds": seeds})


__all__ = [
    "METHODS", "RUNNERS", "FAMILY_OF", "Adam", "InferenceConfig", "PosteriorSamples",
    "NonPositiveCurvature", "minimize", "read_samples", "write_samples", "run",
    "hmc_run", "mala_run", "ld_run", "leapfrog", "mfvi_run", "mcd_run", "dens_run",
    "sens_run", "la_run", "cyclic_cosine_lr", "elbo",
]
