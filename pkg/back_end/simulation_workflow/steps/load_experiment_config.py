import logging

from back_end.services.config_service.config_service import ConfigService


def main_load_experiment_config(query_dict: dict, config_service: ConfigService) -> dict:
    """
    Main function to load the experiment config and resolve it against the defaults
    """
    try:
        # Extract config path
        config_path = query_dict.get("config_path", "")
        if not config_path:
            return {}

        # Load and resolve
        raw_config = config_service.load_config(config_path)
        overrides = {
            ("experiment", "seed"): query_dict.get("seed"),
        }
        config = config_service.resolve_config(raw_config, overrides)

        # Result
        return {
            "raw_config": raw_config,
            "config": config,
            "config_hash": config_service.config_hash(config),
        }
    except Exception as e:
        logging.error(f"Error in main_load_experiment_config: {e}")
        return {}
