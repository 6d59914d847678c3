import logging

import numpy as np

from back_end.services.storage_service.storage_service import CsvStorageService


def main_export_matrices(query_dict: dict, storage_service: CsvStorageService) -> dict:
    """
    Write the channel set and each scheme's (W, Q, r) as numeric CSV files
    """
    try:
        scenario = query_dict.get("scenario")
        config_hash = query_dict.get("config_hash", "")
        if scenario is None:
            return {}

        written = storage_service.dump_channels(scenario.chans, config_hash)
        for scheme, reports in query_dict.get("reports", {}).items():
            design = reports[0].final_design
            written.append(storage_service.write_matrix(design.w, f"{scheme}_w.csv", "sqrt(W)", config_hash))
            written.append(storage_service.write_matrix(design.q, f"{scheme}_q.csv", "1/gain", config_hash))
            written.append(storage_service.write_matrix(np.atleast_2d(design.r), f"{scheme}_r.csv", "sqrt(W)", config_hash))
            written.append(storage_service.write_matrix(reports[0].channel, f"{scheme}_h.csv", "gain", config_hash))

        logging.info(f"Exported {len(written)} matrices")
        return {"matrix_files": written}
    except Exception as e:
        logging.error(f"Error in main_export_matrices: {e}")
        return {}
