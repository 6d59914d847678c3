import logging
from dataclasses import dataclass

import numpy as np

from back_end.vlc_core.channel import ChannelSet, build_channels
from back_end.vlc_core.objective import PowerBudget, SignalStats
from back_end.vlc_core.scene import OpticalParams, Scene, SceneConfig, build_scene
from back_end.vlc_core.solver import SolverOptions


@dataclass(frozen=True)
class Scenario:
    scene: Scene
    chans: ChannelSet
    stats: SignalStats
    budget: PowerBudget
    opts: SolverOptions


def main_build_scenario(query_dict: dict) -> dict:
    """
    Main function to build the scene, channels and solver inputs from the config
    """
    try:
        config = query_dict.get("config", {})
        if not config:
            return {}

        scenario = scenario_from_config(config)
        logging.info(
            f"Scenario: {scenario.scene.n_leds} LEDs, {scenario.scene.n_pds} PDs, "
            f"{scenario.scene.n_units} IRS units, {scenario.stats.n_streams} streams"
        )
        return {"scenario": scenario}
    except Exception as e:
        logging.error(f"Error in main_build_scenario: {e}")
        return {}


def scenario_from_config(config: dict) -> Scenario:
    scene = build_scene(scene_config_from(config))
    return Scenario(
        scene=scene,
        chans=build_channels(scene),
        stats=stats_from(config),
        budget=budget_from(config, scene.n_leds),
        opts=options_from(config),
    )


def scene_config_from(config: dict) -> SceneConfig:
    scene = config["scene"]
    optics = config["optics"]
    return SceneConfig(
        room_dims=tuple(scene["room_dims"]),
        led_grid=tuple(scene["led_grid"]),
        pd_center=tuple(scene["pd_center"]),
        pd_spacing=float(scene["pd_spacing"]),
        pd_grid=tuple(scene["pd_grid"]),
        irs_corners=tuple(tuple(c) for c in scene["irs_corners"]),
        irs_grid=tuple(scene["irs_grid"]),
        optics=OpticalParams.from_degrees(
            fov_semi_angle_deg=float(optics["fov_semi_angle_deg"]),
            pd_area=float(optics["pd_area"]),
            lambertian_index=float(optics["lambertian_index"]),
            filter_gain=float(optics["filter_gain"]),
            refractive_index=float(optics["refractive_index"]),
            irs_reflectivity=float(optics["irs_reflectivity"]),
        ),
        n_leds=scene.get("n_leds"),
        n_pds=scene.get("n_pds"),
        n_units=scene.get("n_units"),
    )


def stats_from(config: dict) -> SignalStats:
    signal = config["signal"]
    return SignalStats(
        sigma_x2=float(signal["sigma_x2"]),
        sigma_w2=float(signal["sigma_w2"]),
        n_streams=int(signal["n_streams"]),
        pam_order=int(signal["pam_order"]),
        pam_normalizer=signal["pam_normalizer"],
    )


def budget_from(config: dict, n_leds: int) -> PowerBudget:
    budget = config["budget"]
    dc_bias = budget["dc_bias"]
    if isinstance(dc_bias, list):
        return PowerBudget(p_total=float(budget["p_total"]), dc_bias=np.asarray(dc_bias, dtype=float))
    return PowerBudget.uniform(float(budget["p_total"]), float(dc_bias), n_leds)


def options_from(config: dict) -> SolverOptions:
    solver = config["solver"]
    return SolverOptions(
        tolerance=float(solver["tolerance"]),
        max_outer=int(solver["max_outer"]),
        max_inner=int(solver["max_inner"]),
        armijo_shrink=float(solver["armijo_shrink"]),
        armijo_accept=float(solver["armijo_accept"]),
        prox_weight=float(solver["prox_weight"]),
        prox_rounds=int(solver["prox_rounds"]),
        association_refinement=bool(solver["association_refinement"]),
        polish=bool(solver["polish"]),
        greedy_safeguard=bool(solver["greedy_safeguard"]),
    )
