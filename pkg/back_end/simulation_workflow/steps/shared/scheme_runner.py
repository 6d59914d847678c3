import logging

import numpy as np
from joblib import Parallel, delayed

from back_end.vlc_core.baselines import run_scheme
from back_end.vlc_core.montecarlo import condition_number
from back_end.vlc_core.objective import normalized_mse, total_power
from back_end.vlc_core.shared.errors import VlcError


def run_schemes(scenario, schemes: list, seed: int, random_seeds: int, n_jobs: int = 1) -> dict:
    """
    Run every scheme on one scenario; results keep the order of `schemes`
    """
    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(_run_one)(scheme, scenario, seed, random_seeds) for scheme in schemes
    )
    return dict(zip(schemes, outcomes))


def summary_row(scheme: str, reports: list, scenario) -> dict:
    """
    Summary values of a scheme; random schemes average the MSE over seeds
    """
    first = reports[0]
    values = np.array([report.final_mse for report in reports])
    return {
        "scheme": scheme,
        "mse": float(values.mean()),
        "normalized_mse": float(np.mean([normalized_mse(r.channel, r.final_design, scenario.stats) for r in reports])),
        "mse_std": float(values.std()) if len(values) > 1 else 0.0,
        "condition_number": condition_number(first.channel),
        "converged": all(report.converged for report in reports),
        "outer_iterations": first.iter_counts.outer,
        "association_iterations": int(sum(first.iter_counts.association)),
        "precoder_iterations": int(sum(first.iter_counts.precoder)),
        "null_dim": first.null_dim,
        "lambda_min": first.lambda_min,
        "power_residual": max(r.constraint_residuals.power for r in reports),
        "headroom_residual": max(r.constraint_residuals.headroom for r in reports),
        "total_power": total_power(first.final_design, scenario.stats),
        "relaxed_mse": first.relaxed_mse if first.relaxed_mse is not None else float("nan"),
        "safeguard_used": first.safeguard_used,
    }


def _run_one(scheme: str, scenario, seed: int, random_seeds: int) -> list:
    try:
        return run_scheme(
            scheme,
            scenario.scene,
            scenario.chans,
            scenario.stats,
            scenario.budget,
            scenario.opts,
            seed=seed,
            random_seeds=random_seeds,
        )
    except VlcError as e:
        logging.error(f"Scheme '{scheme}' failed: {e}")
        raise
