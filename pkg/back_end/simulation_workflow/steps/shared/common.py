from back_end.vlc_core.shared.common import SCHEMES, SWEEP_AXES

# Config schema: section -> key -> expected type(s) or list of allowed values
ACCEPTABLE_FIELDS = {
    "scene": {
        "room_dims": list,
        "led_grid": list,
        "pd_center": list,
        "pd_spacing": (int, float),
        "pd_grid": list,
        "irs_corners": list,
        "irs_grid": list,
    },
    "optics": {
        "pd_area": (int, float),
        "lambertian_index": (int, float),
        "filter_gain": (int, float),
        "refractive_index": (int, float),
        "fov_semi_angle_deg": (int, float),
        "irs_reflectivity": (int, float),
    },
    "signal": {
        "sigma_x2": (int, float),
        "sigma_w2": (int, float),
        "n_streams": int,
        "pam_order": int,
        "pam_normalizer": ["exact", "paper", "m2_plus_1"],
    },
    "budget": {
        "p_total": (int, float),
        "dc_bias": (int, float, list),
    },
    "solver": {
        "tolerance": (int, float),
        "max_outer": int,
        "max_inner": int,
        "armijo_shrink": (int, float),
        "armijo_accept": (int, float),
        "prox_weight": (int, float),
        "prox_rounds": int,
        "association_refinement": bool,
        "polish": bool,
        "greedy_safeguard": bool,
    },
    "ber": {
        "enabled": bool,
        "snr_db": list,
        "trials": int,
        "partition_size": int,
    },
    "experiment": {
        "schemes": list,
        "seed": int,
        "random_seeds": int,
    },
}

OPTIONAL_FIELDS = {
    "scene": {"n_leds": int, "n_pds": int, "n_units": int},
    "sweep": {"axis": SWEEP_AXES, "values": list, "x": list, "y": list},
}

ACCEPTABLE_SCHEMES = SCHEMES

# Result keys -> (CSV column, unit)
MAPPING_COLUMNS = {
    "scheme": ("scheme", "-"),
    "iteration": ("iteration", "-"),
    "mse": ("mse", "-"),
    "normalized_mse": ("normalized_mse", "-"),
    "mse_std": ("mse_std", "-"),
    "condition_number": ("condition_number", "-"),
    "converged": ("converged", "bool"),
    "outer_iterations": ("outer_iterations", "count"),
    "association_iterations": ("association_iterations", "count"),
    "precoder_iterations": ("precoder_iterations", "count"),
    "null_dim": ("null_dim", "count"),
    "lambda_min": ("lambda_min", "-"),
    "power_residual": ("power_residual", "W"),
    "headroom_residual": ("headroom_residual", "sqrt(W)"),
    "total_power": ("total_power", "W"),
    "relaxed_mse": ("relaxed_mse", "-"),
    "safeguard_used": ("safeguard_used", "bool"),
    "unit": ("unit", "index"),
    "led": ("led", "index"),
    "pd": ("pd", "index"),
    "axis": ("axis", "-"),
    "value": ("value", "axis unit"),
    "x": ("x", "m"),
    "y": ("y", "m"),
    "snr_db": ("snr_db", "dB"),
    "ber": ("ber", "-"),
    "ci95": ("ci95", "-"),
    "trials": ("trials", "count"),
    "seed": ("seed", "-"),
}

# Output file name -> ordered result keys
OUTPUT_FILES = {
    "trace": ("trace.csv", ["scheme", "iteration", "mse", "power_residual", "headroom_residual"]),
    "summary": ("summary.csv", [
        "scheme", "mse", "normalized_mse", "mse_std", "condition_number", "converged",
        "outer_iterations", "association_iterations", "precoder_iterations",
        "null_dim", "lambda_min", "power_residual", "headroom_residual",
        "total_power", "relaxed_mse", "safeguard_used",
    ]),
    "assignment": ("assignment.csv", ["scheme", "unit", "led", "pd"]),
    "sweep": ("sweep.csv", ["axis", "value", "scheme", "mse", "condition_number", "converged", "ber", "ci95"]),
    "position_grid": ("position_grid.csv", ["scheme", "x", "y", "mse"]),
    "ber": ("ber.csv", ["snr_db", "scheme", "ber", "ci95", "trials", "seed"]),
}
