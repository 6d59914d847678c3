import logging

from back_end.services.storage_service.storage_service import CsvStorageService
from back_end.simulation_workflow.steps.shared.common import MAPPING_COLUMNS, OUTPUT_FILES


def main_store_output_data(query_dict: dict, storage_service: CsvStorageService) -> dict:
    try:
        # Extract relevant information from the query_dict
        tables = query_dict.get("tables", {})
        config_hash = query_dict.get("config_hash", "")

        # Validate the data
        if not tables:
            return {}

        # Write every produced table under its fixed file name
        written = {}
        for name, table in tables.items():
            if name not in OUTPUT_FILES:
                logging.warning(f"No output file registered for table '{name}', skipping")
                continue
            file_name, keys = OUTPUT_FILES[name]
            stored, units = _prepare_stored_table(table, keys)
            written[name] = storage_service.write_table(stored, file_name, units, config_hash)
            logging.info(f"Wrote {len(stored)} rows to {written[name]}")

        return {"output_files": written}

    except Exception as e:
        logging.error(f"Error storing output data: {e}")
        return {}


def _prepare_stored_table(table, keys: list) -> tuple:
    """
    Select and rename result columns, and collect their units
    """
    missing = [k for k in keys if k not in table.columns]
    if missing:
        raise KeyError(f"Result table is missing columns {missing}")
    stored = table[keys].rename(columns={k: MAPPING_COLUMNS[k][0] for k in keys})
    units = {MAPPING_COLUMNS[k][0]: MAPPING_COLUMNS[k][1] for k in keys}
    return stored, units
