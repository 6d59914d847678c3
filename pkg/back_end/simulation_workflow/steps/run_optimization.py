import logging

import pandas as pd

from back_end.services.storage_service.storage_service import assignment_rows
from back_end.simulation_workflow.steps.shared.scheme_runner import run_schemes, summary_row


def main_run_optimization(query_dict: dict) -> dict:
    """
    Main function to run every configured scheme once on the scenario
    """
    try:
        scenario = query_dict.get("scenario")
        config = query_dict.get("config", {})
        if scenario is None or not config:
            return {}

        # Run task
        experiment = config["experiment"]
        reports = run_schemes(
            scenario,
            experiment["schemes"],
            seed=experiment["seed"],
            random_seeds=experiment["random_seeds"],
            n_jobs=query_dict.get("threads", 1),
        )

        # Result
        tables = optimization_tables(reports, scenario)
        for _, row in tables["summary"].iterrows():
            logging.info(f"{row['scheme']}: mse {row['mse']:.6g}, converged {row['converged']}")
        return {
            "reports": reports,
            "tables": tables,
            "converged": bool(tables["summary"]["converged"].all()),
        }
    except Exception as e:
        logging.error(f"Error in main_run_optimization: {e}")
        return {}


def optimization_tables(reports: dict, scenario) -> dict:
    trace_rows, summary_rows, assignment_frames = [], [], []
    for scheme, scheme_reports in reports.items():
        first = scheme_reports[0]
        residuals = first.constraint_residuals
        for iteration, value in enumerate(first.mse_trace):
            trace_rows.append({
                "scheme": scheme,
                "iteration": iteration,
                "mse": value,
                "power_residual": residuals.power,
                "headroom_residual": residuals.headroom,
            })
        summary_rows.append(summary_row(scheme, scheme_reports, scenario))
        rows = assignment_rows(first.final_assignment)
        rows.insert(0, "scheme", scheme)
        assignment_frames.append(rows)

    return {
        "trace": pd.DataFrame(trace_rows),
        "summary": pd.DataFrame(summary_rows),
        "assignment": pd.concat(assignment_frames, ignore_index=True),
    }
