import logging
import math

from back_end.simulation_workflow.steps.shared.common import ACCEPTABLE_FIELDS, ACCEPTABLE_SCHEMES, OPTIONAL_FIELDS


def main_validate_experiment_config(query_dict: dict) -> dict:
    """
    Main function to validate the resolved experiment config
    """
    try:
        config = query_dict.get("config", {})
        command = query_dict.get("command", "optimize")
        if not config:
            return {}

        errors = validate_config(config, command)
        if errors:
            for error in errors:
                logging.error(f"Invalid config: {error}")
            return {}
        return {"config": config}
    except Exception as e:
        logging.error(f"Error in main_validate_experiment_config: {e}")
        return {}


def validate_config(config: dict, command: str = "optimize") -> list:
    """
    Collect every schema and range problem of a resolved config
    """
    errors = []
    for section, fields in ACCEPTABLE_FIELDS.items():
        errors.extend(_validate_section(config.get(section, {}), section, fields, required=True))
    for section, fields in OPTIONAL_FIELDS.items():
        errors.extend(_validate_section(config.get(section, {}), section, fields, required=False))
    if errors:
        return errors

    # Range checks
    signal = config["signal"]
    scene = config["scene"]
    if signal["n_streams"] > min(scene["pd_grid"][0] * scene["pd_grid"][1], scene["led_grid"][0] * scene["led_grid"][1]):
        errors.append("signal.n_streams exceeds min(N_t, N_r)")
    if signal["sigma_x2"] <= 0:
        errors.append("signal.sigma_x2 must be > 0")
    if signal["sigma_w2"] < 0:
        errors.append("signal.sigma_w2 must be >= 0")
    if config["budget"]["p_total"] <= 0:
        errors.append("budget.p_total must be > 0")
    if config["solver"]["tolerance"] <= 0:
        errors.append("solver.tolerance must be > 0")

    experiment = config["experiment"]
    if not experiment["schemes"]:
        errors.append("experiment.schemes must not be empty")
    for scheme in experiment["schemes"]:
        if scheme not in ACCEPTABLE_SCHEMES:
            errors.append(f"Unknown scheme '{scheme}', expected one of {ACCEPTABLE_SCHEMES}")
    if experiment["random_seeds"] < 1:
        errors.append("experiment.random_seeds must be >= 1")

    if command == "sweep":
        errors.extend(_validate_sweep(config.get("sweep", {}), scene))
    if command == "ber" or (command == "sweep" and config["ber"]["enabled"]):
        if config["ber"]["trials"] < 1:
            errors.append("ber.trials must be >= 1")
        if config["ber"]["partition_size"] < 1:
            errors.append("ber.partition_size must be >= 1")
        if command == "ber":
            errors.extend(_validate_values(config["ber"]["snr_db"], "ber.snr_db"))
    return errors


def _validate_section(section_dict: dict, section: str, fields: dict, required: bool) -> list:
    errors = []
    for key, value_constraint in fields.items():
        value = section_dict.get(key)

        # Missing value check
        if value is None:
            if required:
                errors.append(f"Missing value for '{section}.{key}'")
            continue

        # Type and value checks
        if isinstance(value_constraint, list):
            if value not in value_constraint:
                errors.append(f"Invalid value for '{section}.{key}': expected one of {value_constraint}, got {value}")
        elif isinstance(value, bool) and value_constraint is not bool and bool not in _as_tuple(value_constraint):
            errors.append(f"Invalid type for '{section}.{key}': got bool")
        elif not isinstance(value, value_constraint):
            expected = " or ".join(t.__name__ for t in _as_tuple(value_constraint))
            errors.append(f"Invalid type for '{section}.{key}': expected {expected}, got {type(value).__name__}")
    return errors


def _validate_sweep(sweep: dict, scene: dict) -> list:
    errors = []
    axis = sweep.get("axis")
    if axis is None:
        return ["Missing value for 'sweep.axis'"]
    if axis == "position_grid":
        errors.extend(_validate_values(sweep.get("x", []), "sweep.x"))
        errors.extend(_validate_values(sweep.get("y", []), "sweep.y"))
        return errors

    values = sweep.get("values", [])
    errors.extend(_validate_values(values, "sweep.values"))
    if axis == "irs_count" and not errors:
        rows = scene["irs_grid"][1]
        for value in values:
            if value < 0 or int(value) != value or (rows and int(value) % rows):
                errors.append(f"sweep.values entry {value} is not a multiple of the {rows} IRS rows")
    if axis == "dc_bias" and not errors and min(values) < 0:
        errors.append("sweep.values for dc_bias must be >= 0")
    return errors


def _validate_values(values: list, name: str) -> list:
    if not values:
        return [f"{name} must not be empty"]
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in values):
        return [f"{name} must contain finite numbers"]
    if list(values) != sorted(values):
        return [f"{name} must be sorted"]
    return []


def _as_tuple(value_constraint) -> tuple:
    return value_constraint if isinstance(value_constraint, tuple) else (value_constraint,)
