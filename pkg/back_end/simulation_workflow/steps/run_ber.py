import copy
import logging

import pandas as pd
from joblib import Parallel, delayed

from back_end.simulation_workflow.steps.build_scenario import scenario_from_config
from back_end.simulation_workflow.steps.run_sweep import link_ber
from back_end.simulation_workflow.steps.shared.scheme_runner import run_schemes
from back_end.vlc_core.montecarlo import snr_db_to_noise_variance


def main_run_ber(query_dict: dict) -> dict:
    """
    Main function to estimate BER versus SNR for every configured scheme
    """
    try:
        config = query_dict.get("config", {})
        if not config:
            return {}
        snr_values = config["ber"]["snr_db"]
        if config["ber"]["trials"] < 1 or not snr_values:
            return {}

        # Run task
        point_rows = Parallel(n_jobs=query_dict.get("threads", 1))(
            delayed(evaluate_snr)(snr_db, config, query_dict.get("threads", 1)) for snr_db in snr_values
        )
        rows = [row for rows in point_rows for row in rows]
        for row in rows:
            logging.info(f"{row['scheme']} @ {row['snr_db']} dB: ber {row['ber']:.3e} +- {row['ci95']:.1e}")

        # Result
        return {
            "tables": {"ber": pd.DataFrame(rows)[["snr_db", "scheme", "ber", "ci95", "trials", "seed"]]},
            "converged": all(row["converged"] for row in rows),
        }
    except Exception as e:
        logging.error(f"Error in main_run_ber: {e}")
        return {}


def evaluate_snr(snr_db: float, config: dict, n_jobs: int = 1) -> list:
    variant = copy.deepcopy(config)
    variant["signal"]["sigma_w2"] = snr_db_to_noise_variance(snr_db, config["signal"]["sigma_x2"])
    scenario = scenario_from_config(variant)
    experiment = variant["experiment"]
    reports = run_schemes(scenario, experiment["schemes"], experiment["seed"], experiment["random_seeds"])

    rows = []
    for scheme, scheme_reports in reports.items():
        estimate = link_ber(scheme_reports[0], scenario, variant, n_jobs)
        rows.append({
            "snr_db": snr_db,
            "scheme": scheme,
            "ber": estimate.ber,
            "ci95": estimate.ci95_halfwidth,
            "trials": estimate.trials,
            "seed": estimate.seed,
            "converged": all(report.converged for report in scheme_reports),
        })
    return rows
