import copy
import logging

import pandas as pd
from joblib import Parallel, delayed

from back_end.simulation_workflow.steps.build_scenario import scenario_from_config
from back_end.simulation_workflow.steps.shared.scheme_runner import run_schemes, summary_row
from back_end.vlc_core.montecarlo import PamConfig, simulate_link, snr_db_to_noise_variance


def main_run_sweep(query_dict: dict) -> dict:
    """
    Main function to evaluate every scheme along the configured sweep axis
    """
    try:
        config = query_dict.get("config", {})
        if not config or "sweep" not in config:
            return {}

        # Prepare sweep points
        axis = config["sweep"]["axis"]
        points = sweep_points(config)
        if not points:
            return {}
        logging.info(f"Sweeping {axis} over {len(points)} points")

        # Run task
        point_rows = Parallel(n_jobs=query_dict.get("threads", 1))(
            delayed(evaluate_point)(axis, label, variant, query_dict.get("threads", 1)) for label, variant in points
        )
        rows = [row for rows in point_rows for row in rows]

        # Result
        if axis == "position_grid":
            tables = {"position_grid": pd.DataFrame(rows)[["scheme", "x", "y", "mse"]]}
        else:
            tables = {"sweep": pd.DataFrame(rows)[["axis", "value", "scheme", "mse", "condition_number", "converged", "ber", "ci95"]]}
        return {
            "tables": tables,
            "converged": all(row["converged"] for row in rows),
        }
    except Exception as e:
        logging.error(f"Error in main_run_sweep: {e}")
        return {}


def sweep_points(config: dict) -> list:
    """
    (label, config variant) per sweep point, in axis order
    """
    sweep = config["sweep"]
    axis = sweep["axis"]
    points = []
    if axis == "position_grid":
        z = config["scene"]["pd_center"][2]
        for x in sweep["x"]:
            for y in sweep["y"]:
                variant = copy.deepcopy(config)
                variant["scene"]["pd_center"] = [x, y, z]
                points.append(((x, y), variant))
        return points

    for value in sweep["values"]:
        variant = copy.deepcopy(config)
        if axis == "snr":
            variant["signal"]["sigma_w2"] = snr_db_to_noise_variance(value, config["signal"]["sigma_x2"])
        elif axis == "irs_count":
            rows = config["scene"]["irs_grid"][1]
            variant["scene"]["irs_grid"] = [int(value) // rows, rows]
            variant["scene"].pop("n_units", None)
        elif axis == "dc_bias":
            variant["budget"]["dc_bias"] = float(value)
        else:
            raise ValueError(f"Unknown sweep axis '{axis}'")
        points.append((value, variant))
    return points


def evaluate_point(axis: str, label, config: dict, n_jobs: int = 1) -> list:
    scenario = scenario_from_config(config)
    experiment = config["experiment"]
    reports = run_schemes(scenario, experiment["schemes"], experiment["seed"], experiment["random_seeds"])

    rows = []
    for scheme, scheme_reports in reports.items():
        summary = summary_row(scheme, scheme_reports, scenario)
        row = {
            "scheme": scheme,
            "mse": summary["mse"],
            "condition_number": summary["condition_number"],
            "converged": summary["converged"],
            "ber": float("nan"),
            "ci95": float("nan"),
        }
        if config["ber"]["enabled"]:
            estimate = link_ber(scheme_reports[0], scenario, config, n_jobs)
            row["ber"], row["ci95"] = estimate.ber, estimate.ci95_halfwidth
        if axis == "position_grid":
            row["x"], row["y"] = label
        else:
            row["axis"], row["value"] = axis, label
        rows.append(row)
    return rows


def link_ber(report, scenario, config: dict, n_jobs: int = 1):
    ber = config["ber"]
    return simulate_link(
        report.final_design,
        report.channel,
        PamConfig.from_stats(scenario.stats),
        scenario.stats,
        trials=ber["trials"],
        seed=config["experiment"]["seed"],
        partition_size=ber["partition_size"],
        n_jobs=n_jobs,
    )
