"""
Reference transceiver designs and IRS configurations for comparison with
the alternating optimizer.
"""
from __future__ import annotations

import logging
from typing import List

import numpy as np

from back_end.vlc_core.association import Assignment, distance_greedy, random_assignment, to_link_matrix
from back_end.vlc_core.channel import ChannelSet, assemble_h
from back_end.vlc_core.objective import Design, PowerBudget, SignalStats, headroom_residual, mse, power_residual
from back_end.vlc_core.scene import Scene
from back_end.vlc_core.solver import (
    ConstraintResiduals,
    IterationCounts,
    SolverOptions,
    SolverReport,
    alternating_optimize,
    optimize_transceiver,
    scale_to_power_budget,
    solve_detector,
    zf_direction,
)


def zf_precoding_baseline(h: np.ndarray, stats: SignalStats, budget: PowerBudget) -> Design:
    """
    Right pseudo-inverse precoder scaled into the budget, MMSE detector.
    """
    w, _ = scale_to_power_budget(zf_direction(h, stats.n_streams), stats, budget)
    return Design(w=w, q=solve_detector(h, w, stats), r=budget.dc_bias)


def mmse_precoding_baseline(h: np.ndarray, stats: SignalStats, budget: PowerBudget) -> Design:
    """
    Regularized ZF: H^T (H H^T + beta I)^{-1} with
    beta = sigma_w^2 N_r / (sigma_x^2 (p_total - r^T r)).
    """
    n_r = h.shape[0]
    signal_power = budget.signal_power()
    if signal_power <= 0:
        w = np.zeros((h.shape[1], stats.n_streams))
    else:
        beta = stats.sigma_w2 * n_r / (stats.sigma_x2 * signal_power)
        direction = h.T @ np.linalg.inv(h @ h.T + beta * np.eye(n_r))
        w, _ = scale_to_power_budget(direction[:, :stats.n_streams], stats, budget)
    return Design(w=w, q=solve_detector(h, w, stats), r=budget.dc_bias)


def no_irs_design(chans: ChannelSet, stats: SignalStats, budget: PowerBudget, opts: SolverOptions = None) -> SolverReport:
    """
    Precoder/detector alternation on the LoS channel alone.
    """
    unassigned = Assignment.empty(chans.n_units, chans.n_leds, chans.n_pds)
    return optimize_transceiver(chans, unassigned, stats, budget, opts or SolverOptions())


def greedy_design(scene: Scene, chans: ChannelSet, stats: SignalStats, budget: PowerBudget, opts: SolverOptions = None) -> SolverReport:
    return optimize_transceiver(chans, distance_greedy(scene), stats, budget, opts or SolverOptions())


def random_design(
    scene: Scene,
    chans: ChannelSet,
    stats: SignalStats,
    budget: PowerBudget,
    seed: int,
    opts: SolverOptions = None,
) -> SolverReport:
    return optimize_transceiver(chans, random_assignment(scene, seed), stats, budget, opts or SolverOptions())


def fixed_design_report(chans: ChannelSet, assignment: Assignment, design: Design, stats: SignalStats, budget: PowerBudget) -> SolverReport:
    """
    Wrap a closed-form design into a single-point report.
    """
    h = assemble_h(chans, to_link_matrix(assignment))
    value = mse(h, design, stats)
    return SolverReport(
        mse_trace=[value],
        final_design=design,
        final_assignment=assignment,
        final_mse=value,
        channel=h,
        iter_counts=IterationCounts(),
        constraint_residuals=ConstraintResiduals(
            power=power_residual(design, stats, budget),
            headroom=headroom_residual(design, stats, budget),
        ),
        converged=True,
    )


def relaxed_bound_report(report: SolverReport, stats: SignalStats, budget: PowerBudget) -> SolverReport:
    """
    Report of the relaxed (fractional) solution reached by the alternating
    optimizer before rounding. Its MSE lower-bounds what the binary
    configuration can reach from the same start.
    """
    if report.relaxed_design is None:
        return report
    design, h = report.relaxed_design, report.relaxed_channel
    return SolverReport(
        mse_trace=list(report.mse_trace),
        final_design=design,
        final_assignment=report.final_assignment,
        final_mse=report.relaxed_mse,
        channel=h,
        iter_counts=report.iter_counts,
        constraint_residuals=ConstraintResiduals(
            power=power_residual(design, stats, budget),
            headroom=headroom_residual(design, stats, budget),
        ),
        converged=report.converged,
        null_dim=report.null_dim,
        lambda_min=report.lambda_min,
        block_trace=list(report.block_trace),
        relaxed_mse=report.relaxed_mse,
    )


def run_scheme(
    scheme: str,
    scene: Scene,
    chans: ChannelSet,
    stats: SignalStats,
    budget: PowerBudget,
    opts: SolverOptions,
    seed: int = 0,
    random_seeds: int = 1,
) -> List[SolverReport]:
    """
    Reports for one named scheme. "random" yields one report per seed
    (seed, seed + 1, ...); every other scheme yields a single report.
    The "_no_irs" variants of zf and mmse design on the LoS channel alone.
    """
    logging.info(f"Running scheme '{scheme}'")
    if scheme == "proposed":
        return [alternating_optimize(scene, chans, stats, budget, opts)]
    if scheme == "greedy":
        return [greedy_design(scene, chans, stats, budget, opts)]
    if scheme == "random":
        return [random_design(scene, chans, stats, budget, seed + k, opts) for k in range(max(1, random_seeds))]
    if scheme == "no_irs":
        return [no_irs_design(chans, stats, budget, opts)]
    if scheme == "relaxed_bound":
        return [relaxed_bound_report(alternating_optimize(scene, chans, stats, budget, opts), stats, budget)]
    if scheme in ("zf", "mmse", "zf_no_irs", "mmse_no_irs"):
        if scheme.endswith("_no_irs"):
            assignment = Assignment.empty(chans.n_units, chans.n_leds, chans.n_pds)
        else:
            assignment = distance_greedy(scene)
        h = assemble_h(chans, to_link_matrix(assignment))
        builder = zf_precoding_baseline if scheme.startswith("zf") else mmse_precoding_baseline
        return [fixed_design_report(chans, assignment, builder(h, stats, budget), stats, budget)]
    raise ValueError(f"Unknown scheme '{scheme}'")
