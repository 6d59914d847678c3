import numpy as np

# Numerical tolerances shared across modules
PINV_RTOL = 1e-12
CONDITION_FLOOR = 1e-300
NONNEGATIVITY_TOL = 1e-12

# Noise variance at 0 dB on the SNR sweep axis (relative to sigma_x^2)
SNR_AXIS_REFERENCE = 1e-13

SCHEMES = ["proposed", "relaxed_bound", "greedy", "random", "no_irs", "zf", "mmse", "zf_no_irs", "mmse_no_irs"]
SWEEP_AXES = ["snr", "irs_count", "dc_bias", "position_grid"]

# Reference scenario (indoor 8 x 8 x 3 m room)
REFERENCE_DEFAULTS = {
    "scene": {
        "room_dims": [8.0, 8.0, 3.0],
        "led_grid": [4, 4],
        "pd_center": [2.0, 3.2, 1.0],
        "pd_spacing": 0.2,
        "pd_grid": [2, 2],
        "irs_corners": [[0.0, 1.0, 1.2], [0.0, 7.0, 2.9]],
        "irs_grid": [8, 8],
    },
    "optics": {
        "pd_area": 1e-4,
        "lambertian_index": 1.0,
        "filter_gain": 1.0,
        "refractive_index": 1.5,
        "fov_semi_angle_deg": 60.0,
        "irs_reflectivity": 0.9,
    },
    "signal": {
        "sigma_x2": 1.0,
        "sigma_w2": 1e-14,
        "n_streams": 4,
        "pam_order": 4,
        "pam_normalizer": "exact",
    },
    "budget": {
        "p_total": 160.0,
        "dc_bias": 1.0,
    },
    "solver": {
        "tolerance": 1e-6,
        "max_outer": 500,
        "max_inner": 5000,
        "armijo_shrink": 0.5,
        "armijo_accept": 1e-4,
        "prox_weight": 0.1,
        "prox_rounds": 3,
        "association_refinement": True,
        "polish": True,
        "greedy_safeguard": True,
    },
    "ber": {
        "enabled": False,
        "snr_db": [0.0, 5.0, 10.0, 15.0, 20.0],
        "trials": 100000,
        "partition_size": 10000,
    },
    "experiment": {
        "schemes": ["proposed", "greedy", "random", "no_irs"],
        "seed": 0,
        "random_seeds": 50,
    },
}


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """
    Counter-based generator keyed by (seed, *stream)
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))
