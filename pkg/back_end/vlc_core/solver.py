"""
Alternating minimization of the demodulation MSE over the IRS link matrix V,
the precoder W and the detector Q.

Vectorization is column-major throughout: vec(V)[n + p * N] = V[n, p] and
vec(H)[p] = H[p % N_r, p // N_r].
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize

from back_end.vlc_core.association import (
    Assignment,
    RelaxedLinkMatrix,
    distance_greedy,
    recover_assignment,
    to_link_matrix,
)
from back_end.vlc_core.channel import ChannelSet, assemble_h
from back_end.vlc_core.objective import (
    Design,
    PowerBudget,
    SignalStats,
    headroom_residual,
    mse,
    power_residual,
)
from back_end.vlc_core.scene import Scene
from back_end.vlc_core.shared.common import PINV_RTOL
from back_end.vlc_core.shared.errors import (
    DimensionError,
    InfeasibleBudgetError,
    RankDeficientChannelError,
    SingularSystemError,
)

_FEASIBILITY_RTOL = 1e-14


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-6
    max_outer: int = 500
    max_inner: int = 5000
    armijo_shrink: float = 0.5
    armijo_accept: float = 1e-4
    # Proximal weight relative to the largest curvature of the V-quadratic;
    # 0 gives the plain pseudo-inverse Lagrangian minimizer
    prox_weight: float = 0.1
    prox_rounds: int = 3
    feasibility_tolerance: float = 1e-6
    inner_tolerance: float = 1e-12
    precoder_dual_iterations: int = 100
    # Finish each association block with primal projected gradient on the exact QP
    association_refinement: bool = True
    polish: bool = True
    greedy_safeguard: bool = True


# ----------------------------------------------------------------------------
# IRS association block
# ----------------------------------------------------------------------------

@dataclass
class DualState:
    mu1: np.ndarray  # N, row-sum constraints
    mu2: np.ndarray  # N * N_t * N_r, v >= 0
    mu3: np.ndarray  # N * N_t * N_r, v <= 1

    @classmethod
    def initial(cls, n_units: int, n_links: int, value: float) -> "DualState":
        return cls(
            mu1=np.full(n_units, value),
            mu2=np.full(n_units * n_links, value),
            mu3=np.full(n_units * n_links, value),
        )


class DualPrecomp:
    """
    Quadratic data of the V-subproblem for a fixed (W, Q).

    The MSE as a function of v = vec(V) is 1/2 v^T Z v + a^T v + const with
    Z = A (U + U^T) A^T and A = blockdiag(nlos[:, p]). A has orthogonal
    columns, so with A_n = A D^{-1/2} (orthonormal) Z = A_n S A_n^T for the
    small matrix S = D^{1/2} (U + U^T) D^{1/2}. Z is never formed densely
    except through the z_matrix/z_pinv properties.

    With rho > 0 the operator applied is (Z + rho I)^{-1} and the Lagrangian
    carries rho/2 ||v - v_ref||^2; with rho = 0 it is the minimum-norm
    pseudo-inverse of Z.
    """

    def __init__(
        self,
        chans: ChannelSet,
        design: Design,
        stats: SignalStats,
        prox_weight: float = 0.0,
        v_ref: Optional[np.ndarray] = None,
        pinv_rtol: float = PINV_RTOL,
    ) -> None:
        self.chans = chans
        self.design = design
        self.stats = stats
        n, p = chans.nlos.shape
        self.shape = (n, p)
        self.v_ref = np.zeros((n, p)) if v_ref is None else np.asarray(v_ref, dtype=float)

        w, q = design.w, design.q
        self.u = np.kron(stats.sigma_x2 * w @ w.T, q.T @ q)
        self.m = self.u + self.u.T
        self.c = (stats.sigma_x2 * q.T @ w.T).flatten(order="F")
        h1 = chans.los.flatten(order="F")
        link_rhs = 2 * self.c - self.m @ h1

        col_norm2 = np.sum(chans.nlos ** 2, axis=0)
        self.nz = np.flatnonzero(col_norm2 > 0)
        self.sqrt_d = np.sqrt(col_norm2[self.nz])
        s = self.sqrt_d[:, None] * self.m[np.ix_(self.nz, self.nz)] * self.sqrt_d[None, :]
        eigvals, self.eigvecs = np.linalg.eigh((s + s.T) / 2) if len(self.nz) else (np.zeros(0), np.zeros((0, 0)))
        self.lambda_max = float(max(eigvals.max(initial=0.0), 0.0))
        threshold = pinv_rtol * self.lambda_max
        self.rank = int(np.sum(eigvals > threshold)) if self.lambda_max > 0 else 0
        self.null_dim = n * p - self.rank
        self.rho = prox_weight * self.lambda_max
        if self.rho > 0:
            self.inv_eig = 1.0 / (np.maximum(eigvals, 0.0) + self.rho)
        else:
            self.inv_eig = np.where(eigvals > threshold, 1.0 / np.where(eigvals > threshold, eigvals, 1.0), 0.0)

        self.const_rhs = chans.nlos * link_rhs[None, :] + self.rho * self.v_ref

    # Operators on N x P matrices (vec is column-major)
    def _basis_t(self, x: np.ndarray) -> np.ndarray:
        return np.sum(self.chans.nlos[:, self.nz] * x[:, self.nz], axis=0) / self.sqrt_d

    def _basis(self, y: np.ndarray) -> np.ndarray:
        out = np.zeros(self.shape)
        out[:, self.nz] = self.chans.nlos[:, self.nz] * (y / self.sqrt_d)[None, :]
        return out

    def apply_inverse(self, x: np.ndarray) -> np.ndarray:
        y = self._basis_t(x)
        out = self._basis(self.eigvecs @ (self.inv_eig * (self.eigvecs.T @ y)))
        if self.rho > 0:
            out += (x - self._basis(y)) / self.rho
        return out

    @property
    def inverse_norm(self) -> float:
        """
        Spectral norm of the applied inverse
        """
        norm = float(self.inv_eig.max(initial=0.0))
        if self.rho > 0 and len(self.nz) < self.shape[0] * self.shape[1]:
            norm = max(norm, 1.0 / self.rho)
        return norm

    def mse_of(self, v: np.ndarray) -> float:
        return mse(assemble_h(self.chans, v), self.design, self.stats)

    def gradient_of(self, v: np.ndarray) -> np.ndarray:
        h = assemble_h(self.chans, v).flatten(order="F")
        return self.chans.nlos * (self.m @ h - 2 * self.c)[None, :]

    @cached_property
    def z_matrix(self) -> np.ndarray:
        a = self._dense_a()
        return a @ self.m @ a.T

    @cached_property
    def z_pinv(self) -> np.ndarray:
        n, p = self.shape
        eye = np.eye(n * p)
        return np.column_stack([_vec(self.apply_inverse(_mat(col, n, p))) for col in eye.T])

    def _dense_a(self) -> np.ndarray:
        n, p = self.shape
        a = np.zeros((n * p, p))
        for col in range(p):
            a[col * n:(col + 1) * n, col] = self.chans.nlos[:, col]
        return a


@dataclass
class ProxRound:
    reference_mse: float
    dual_value: float
    mse: float
    prox_penalty: float
    iterations: int
    converged: bool
    accepted: bool


@dataclass
class AssociationSolution:
    link: RelaxedLinkMatrix
    mse: float
    converged: bool
    iterations: int
    null_dim: int
    rounds: List[ProxRound] = field(default_factory=list)
    dual: Optional[DualState] = None
    dual_trace: List[float] = field(default_factory=list)


def lagrangian_minimizer(dual: DualState, pre: DualPrecomp) -> np.ndarray:
    """
    vec(V*) minimizing the Lagrangian for the given multipliers.
    """
    n, p = pre.shape
    return _vec(_minimizer(pre, dual.mu1, _mat(dual.mu2, n, p), _mat(dual.mu3, n, p)))


def mse_gradient_wrt_association(vec_v: np.ndarray, pre: DualPrecomp, chans: ChannelSet) -> np.ndarray:
    n, p = chans.nlos.shape
    return _vec(pre.gradient_of(_mat(vec_v, n, p)))


def dual_objective(dual: DualState, pre: DualPrecomp) -> float:
    n, p = pre.shape
    v = _minimizer(pre, dual.mu1, _mat(dual.mu2, n, p), _mat(dual.mu3, n, p))
    return _lagrangian(pre, v, dual.mu1, _mat(dual.mu2, n, p), _mat(dual.mu3, n, p))


def dual_gradients(dual: DualState, pre: DualPrecomp, chans: ChannelSet) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gradients of the dual function with respect to mu1, mu2 and mu3.

    The chain-rule term through V* is kept; it vanishes when V* minimizes
    the Lagrangian exactly.
    """
    n, p = chans.nlos.shape
    m2, m3 = _mat(dual.mu2, n, p), _mat(dual.mu3, n, p)
    v = _minimizer(pre, dual.mu1, m2, m3)
    residual = pre.gradient_of(v) + dual.mu1[:, None] - m2 + m3 + pre.rho * (v - pre.v_ref)
    back = pre.apply_inverse(residual)
    g1 = v.sum(axis=1) - 1.0 - back.sum(axis=1)
    g2 = _vec(-v + back)
    g3 = _vec(v - 1.0 - back)
    return g1, g2, g3


def solve_relaxed_association(
    chans: ChannelSet,
    w: np.ndarray,
    q: np.ndarray,
    stats: SignalStats,
    opts: SolverOptions,
    v_ref: Optional[np.ndarray] = None,
) -> AssociationSolution:
    """
    Minimize the MSE over the relaxed link matrix by projected dual ascent.

    Each proximal round centers the Lagrangian at the current V, runs cyclic
    projected gradient ascent over (mu1, mu2, mu3) with Armijo backtracking,
    and repairs the minimizer into [0, 1] with row sums at most 1. A round is
    kept only when it does not raise the MSE. Multipliers start at
    tolerance * 1 and carry over between rounds.

    With association_refinement the repaired V is then driven to the block
    optimum by accelerated projected gradient on the unregularized MSE.
    """
    n, p = chans.nlos.shape
    design = Design(w=w, q=q, r=np.zeros(chans.n_leds))
    v = repair_link_matrix(np.zeros((n, p)) if v_ref is None else v_ref)
    current = mse(assemble_h(chans, v), design, stats)
    solution = AssociationSolution(
        link=RelaxedLinkMatrix(v=v, n_pds=chans.n_pds), mse=current, converged=True, iterations=0, null_dim=n * p
    )
    if n == 0:
        return solution

    dual = None
    n_rounds = max(1, opts.prox_rounds) if opts.prox_weight > 0 else 1
    for _ in range(n_rounds):
        pre = DualPrecomp(chans, design, stats, opts.prox_weight, v)
        solution.null_dim = pre.null_dim
        if pre.lambda_max <= 0:
            # MSE does not depend on V for this (W, Q)
            break

        dual, v_star, dual_value, trace, iterations, converged = _dual_ascent(pre, opts, dual)
        solution.iterations += iterations
        solution.converged = solution.converged and converged
        solution.dual = dual
        solution.dual_trace = trace

        candidate = repair_link_matrix(v_star)
        candidate_mse = pre.mse_of(candidate)
        accepted = candidate_mse <= current
        solution.rounds.append(ProxRound(
            reference_mse=current,
            dual_value=dual_value,
            mse=candidate_mse,
            prox_penalty=0.5 * pre.rho * float(np.sum((candidate - v) ** 2)),
            iterations=iterations,
            converged=converged,
            accepted=accepted,
        ))
        if not accepted:
            break
        improvement = current - candidate_mse
        v, current = candidate, candidate_mse
        if improvement <= opts.tolerance:
            break

    if not solution.converged:
        logging.warning("IRS association dual ascent hit the iteration cap")

    if opts.association_refinement:
        v, current, iterations = _refine_association(chans, design, stats, v, current, opts)
        solution.iterations += iterations

    solution.link = RelaxedLinkMatrix(v=v, n_pds=chans.n_pds)
    solution.mse = current
    return solution


def repair_link_matrix(v: np.ndarray) -> np.ndarray:
    """
    Clip into [0, 1] and scale down rows whose sum exceeds 1.
    """
    v = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
    sums = v.sum(axis=1)
    over = sums > 1.0
    v[over] /= sums[over, None]
    return v


def project_link_set(v: np.ndarray, iterations: int = 64) -> np.ndarray:
    """
    Euclidean projection of every row onto {x in [0, 1]^P : sum(x) <= 1}.

    Rows whose clipped sum exceeds 1 are shifted by the threshold theta
    solving sum(clip(x - theta, 0, 1)) = 1, found by bisection on all rows
    at once.
    """
    v = np.asarray(v, dtype=float)
    out = np.clip(v, 0.0, 1.0)
    over = out.sum(axis=1) > 1.0
    if not np.any(over):
        return out
    x = v[over]
    lo = x.min(axis=1) - 1.0
    hi = x.max(axis=1)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        heavy = np.clip(x - mid[:, None], 0.0, 1.0).sum(axis=1) > 1.0
        lo = np.where(heavy, mid, lo)
        hi = np.where(heavy, hi, mid)
    out[over] = np.clip(x - hi[:, None], 0.0, 1.0)
    return out


def _refine_association(chans, design, stats, v, current, opts):
    pre = DualPrecomp(chans, design, stats)
    if pre.lambda_max <= 0:
        return v, current, 0
    refined, iterations = _fista(
        pre.mse_of,
        pre.gradient_of,
        lambda x, step: project_link_set(x),
        lambda x: 0.0,
        v,
        pre.lambda_max,
        opts.max_inner,
        1e-2 * opts.tolerance,
    )
    refined_mse = pre.mse_of(refined)
    if refined_mse <= current:
        return refined, refined_mse, iterations
    return v, current, iterations


def _dual_ascent(pre: DualPrecomp, opts: SolverOptions, start: Optional[DualState] = None):
    n, p = pre.shape
    if start is None:
        start = DualState.initial(n, p, opts.tolerance)
    mu = [start.mu1.copy(), _mat(start.mu2, n, p), _mat(start.mu3, n, p)]
    v = _minimizer(pre, *mu)
    value = _lagrangian(pre, v, *mu)
    trace = [value]

    inverse_norm = pre.inverse_norm
    steps = [1.0 / (p * inverse_norm), 1.0 / inverse_norm, 1.0 / inverse_norm]
    previous_mse = pre.mse_of(v)
    converged = False
    iteration = 0

    for iteration in range(1, opts.max_inner + 1):
        for block in range(3):
            grads = _dual_gradient_blocks(pre, v, *mu)
            grad = grads[block]
            alpha = steps[block]
            for _ in range(60):
                trial = np.maximum(mu[block] + alpha * grad, 0.0)
                ascent = float(np.sum(grad * (trial - mu[block])))
                if ascent <= 0.0:
                    break
                trial_mu = list(mu)
                trial_mu[block] = trial
                trial_v = _minimizer(pre, *trial_mu)
                trial_value = _lagrangian(pre, trial_v, *trial_mu)
                if trial_value >= value + opts.armijo_accept * ascent:
                    mu, v, value = trial_mu, trial_v, trial_value
                    steps[block] = alpha / opts.armijo_shrink
                    break
                alpha *= opts.armijo_shrink
        trace.append(value)

        current_mse = pre.mse_of(v)
        infeasibility = max(
            float(np.max(-v, initial=0.0)),
            float(np.max(v - 1.0, initial=0.0)),
            float(np.max(v.sum(axis=1) - 1.0, initial=0.0)),
        )
        if abs(current_mse - previous_mse) <= opts.tolerance and infeasibility <= opts.feasibility_tolerance:
            converged = True
            break
        previous_mse = current_mse

    dual = DualState(mu1=mu[0], mu2=_vec(mu[1]), mu3=_vec(mu[2]))
    return dual, v, value, trace, iteration, converged


def _minimizer(pre: DualPrecomp, mu1, m2, m3) -> np.ndarray:
    return pre.apply_inverse(pre.const_rhs - mu1[:, None] + m2 - m3)


def _lagrangian(pre: DualPrecomp, v, mu1, m2, m3) -> float:
    return (
        pre.mse_of(v)
        + 0.5 * pre.rho * float(np.sum((v - pre.v_ref) ** 2))
        + float(mu1 @ (v.sum(axis=1) - 1.0))
        - float(np.sum(m2 * v))
        + float(np.sum(m3 * (v - 1.0)))
    )


def _dual_gradient_blocks(pre: DualPrecomp, v, mu1, m2, m3):
    residual = pre.gradient_of(v) + mu1[:, None] - m2 + m3 + pre.rho * (v - pre.v_ref)
    back = pre.apply_inverse(residual)
    return v.sum(axis=1) - 1.0 - back.sum(axis=1), -v + back, v - 1.0 - back


def _vec(x: np.ndarray) -> np.ndarray:
    return x.flatten(order="F")


def _mat(x: np.ndarray, n: int, p: int) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape((n, p), order="F")


# ----------------------------------------------------------------------------
# Precoder block
# ----------------------------------------------------------------------------

@dataclass
class PrecoderSolution:
    w: np.ndarray
    multipliers: np.ndarray  # [total power, per-LED headroom...]
    iterations: int
    lambda_min: float


def solve_precoder(
    h: np.ndarray,
    q: np.ndarray,
    stats: SignalStats,
    budget: PowerBudget,
    opts: SolverOptions,
    w_start: Optional[np.ndarray] = None,
    multipliers_start: Optional[np.ndarray] = None,
) -> PrecoderSolution:
    """
    Minimize ||QHW - I||_F^2 subject to the total-power and per-LED
    headroom constraints.

    The dual has one multiplier per constraint (N_t + 1); it is maximized
    with L-BFGS-B while the W-Lagrangian is minimized by accelerated
    proximal gradient with row-wise soft-thresholding. The recovered W is
    made feasible and refined by projected gradient on the primal.
    multipliers_start warm-starts the dual, e.g. from the previous outer
    iteration.
    """
    b = q @ h
    n_s, n_t = b.shape
    tau = budget.signal_power() / stats.sigma_x2
    delta = budget.headroom / stats.amplitude_scale
    gram = b.T @ b
    lambda_min = stats.sigma_x2 * float(np.linalg.eigvalsh(gram).min())
    multipliers = np.zeros(n_t + 1)

    if tau <= _FEASIBILITY_RTOL * max(1.0, budget.p_total / stats.sigma_x2) or not np.any(delta > 0):
        return PrecoderSolution(np.zeros((n_t, n_s)), multipliers, 0, lambda_min)

    def objective(w):
        return float(np.sum((b @ w - np.eye(n_s)) ** 2))

    # Total power alone; optimal outright when it also meets the headroom limits
    w_ridge, nu = _ridge_on_sphere(b, tau)
    if _is_feasible(w_ridge, tau, delta):
        multipliers[0] = nu * tau
        return PrecoderSolution(w_ridge, multipliers, 0, lambda_min)

    w0 = restore_feasibility(w_start if w_start is not None else np.zeros((n_t, n_s)), tau, delta)
    w_dual, multipliers, iterations = _precoder_dual(b, tau, delta, w0, opts, multipliers_start)
    candidates = [restore_feasibility(w_dual, tau, delta)]
    if w_start is not None:
        candidates.append(w0)
    start = min(candidates, key=objective)
    w_pg, pg_iterations = _projected_gradient(b, tau, delta, start, opts)
    candidates.append(w_pg)
    iterations += pg_iterations

    best = min(candidates, key=objective)
    if multipliers[0] > 0:
        best = _snap_to_power(best, tau, delta, objective)
    return PrecoderSolution(best, multipliers, iterations, lambda_min)


def restore_feasibility(w: np.ndarray, tau: float, delta: np.ndarray) -> np.ndarray:
    """
    Scale rows onto their l1 limits, then the whole matrix onto the power sphere.
    """
    w = np.array(w, dtype=float)
    l1 = np.abs(w).sum(axis=1)
    over = l1 > delta
    w[over] *= (delta[over] / l1[over])[:, None]
    fro2 = float(np.sum(w ** 2))
    if fro2 > tau:
        w *= math.sqrt(tau / fro2)
    return w


def _is_feasible(w: np.ndarray, tau: float, delta: np.ndarray) -> bool:
    return (
        float(np.sum(w ** 2)) <= tau * (1 + _FEASIBILITY_RTOL)
        and bool(np.all(np.abs(w).sum(axis=1) <= delta * (1 + _FEASIBILITY_RTOL)))
    )


def _ridge_on_sphere(b: np.ndarray, tau: float) -> Tuple[np.ndarray, float]:
    """
    argmin ||BW - I||^2 s.t. ||W||^2 <= tau, with the ridge weight nu >= 0.
    """
    u, s, vt = np.linalg.svd(b, full_matrices=False)
    keep = s > PINV_RTOL * s.max(initial=0.0)
    u, s, vt = u[:, keep], s[keep], vt[keep]

    def norm2(nu):
        return float(np.sum(s ** 2 / (s ** 2 + nu) ** 2))

    nu = 0.0
    if len(s) and norm2(0.0) > tau:
        upper = math.sqrt(float(np.sum(s ** 2)) / tau)
        nu = brentq(lambda x: norm2(x) - tau, 0.0, upper, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    w = vt.T @ np.diag(s / (s ** 2 + nu)) @ u.T if len(s) else np.zeros((b.shape[1], b.shape[0]))
    if nu > 0:
        w *= math.sqrt(tau / float(np.sum(w ** 2)))
    return w, nu


def _precoder_dual(b, tau, delta, w0, opts, lam0=None):
    n_s, n_t = b.shape
    active = delta > 0
    safe_delta = np.where(active, delta, 1.0)
    lipschitz = 2.0 * float(np.linalg.eigvalsh(b.T @ b).max())
    state = {"w": w0.copy(), "iterations": 0}

    def smooth_factory(kappa):
        def smooth(w):
            return float(np.sum((b @ w - np.eye(n_s)) ** 2) + kappa * np.sum(w ** 2))

        def gradient(w):
            return 2.0 * b.T @ (b @ w - np.eye(n_s)) + 2.0 * kappa * w

        return smooth, gradient

    def negative_dual(lam):
        weights = np.where(active, lam[1:] / safe_delta, 0.0)
        smooth, gradient = smooth_factory(lam[0] / tau)
        w, iterations = _fista(
            smooth,
            gradient,
            lambda x, step: _soft_threshold_rows(x, step * weights, active),
            lambda x: float(weights @ np.abs(x).sum(axis=1)),
            state["w"],
            lipschitz + 2.0 * lam[0] / tau,
            opts.max_inner,
            opts.inner_tolerance,
        )
        state["w"] = w
        state["iterations"] += iterations
        power = float(np.sum(w ** 2)) / tau - 1.0
        headroom = np.where(active, np.abs(w).sum(axis=1) / safe_delta - 1.0, 0.0)
        value = float(np.sum((b @ w - np.eye(n_s)) ** 2)) + lam[0] * power + float(lam[1:] @ headroom)
        return -value, -np.concatenate([[power], headroom])

    bounds = [(0.0, None)] + [(0.0, None) if a else (0.0, 0.0) for a in active]
    start = np.zeros(n_t + 1)
    if lam0 is not None:
        start = np.maximum(np.asarray(lam0, dtype=float), 0.0) * np.concatenate([[True], active])
    result = minimize(
        negative_dual,
        start,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": opts.precoder_dual_iterations, "ftol": 1e-15, "gtol": 1e-11},
    )
    # Re-evaluate so the stored W belongs to the returned multipliers
    negative_dual(result.x)
    return state["w"], np.maximum(result.x, 0.0), state["iterations"]


def _projected_gradient(b, tau, delta, w0, opts):
    n_s = b.shape[0]
    lipschitz = 2.0 * float(np.linalg.eigvalsh(b.T @ b).max())
    if lipschitz <= 0:
        return w0, 0
    return _fista(
        lambda w: float(np.sum((b @ w - np.eye(n_s)) ** 2)),
        lambda w: 2.0 * b.T @ (b @ w - np.eye(n_s)),
        lambda x, step: project_power_set(x, tau, delta),
        lambda x: 0.0,
        w0,
        lipschitz,
        opts.max_inner,
        opts.inner_tolerance,
    )


def _fista(smooth, gradient, prox, penalty, w0, lipschitz, max_iter, tol):
    """
    Accelerated proximal gradient with backtracking and function-value restart.
    """
    lipschitz = max(lipschitz, 1e-300)
    w = prox(np.array(w0, dtype=float), 1.0 / lipschitz)
    y = w.copy()
    t = 1.0
    value = smooth(w) + penalty(w)
    iteration = 0
    for iteration in range(1, max_iter + 1):
        grad = gradient(y)
        smooth_y = smooth(y)
        while True:
            z = prox(y - grad / lipschitz, 1.0 / lipschitz)
            step = z - y
            if smooth(z) <= smooth_y + float(np.sum(grad * step)) + 0.5 * lipschitz * float(np.sum(step ** 2)) + 1e-15 * abs(smooth_y):
                break
            lipschitz *= 2.0
        z_value = smooth(z) + penalty(z)
        if z_value > value:
            if t == 1.0:
                # No descent even without momentum
                break
            # Restart momentum from the last accepted point
            y, t = w.copy(), 1.0
            continue
        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        y = z + ((t - 1.0) / t_next) * (z - w)
        moved = float(np.linalg.norm(z - w))
        done = value - z_value <= tol * max(1.0, abs(z_value)) and moved <= math.sqrt(tol) * max(1.0, float(np.linalg.norm(w)))
        w, value, t = z, z_value, t_next
        if done:
            break
    return w, iteration


def _soft_threshold_rows(x, thresholds, active):
    out = np.sign(x) * np.maximum(np.abs(x) - thresholds[:, None], 0.0)
    out[~active] = 0.0
    return out


def project_power_set(w: np.ndarray, tau: float, delta: np.ndarray) -> np.ndarray:
    """
    Euclidean projection onto {||W||_F^2 <= tau} intersected with the
    per-row l1 balls.

    With a multiplier nu on the ball the projection is P_l1(W / (1 + nu));
    nu = 0 unless that point leaves the ball, otherwise brentq finds the nu
    putting it on the sphere.
    """
    w = np.array(w, dtype=float)
    if _is_feasible(w, tau, delta):
        return w
    inner = _project_rows_l1(w, delta)
    if float(np.sum(inner ** 2)) > tau:
        upper = math.sqrt(float(np.sum(w ** 2)) / tau) - 1.0

        def excess(nu):
            return float(np.sum(_project_rows_l1(w / (1.0 + nu), delta) ** 2)) - tau

        nu = brentq(excess, 0.0, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        inner = _project_rows_l1(w / (1.0 + nu), delta)
    return restore_feasibility(inner, tau, delta)


def _project_rows_l1(x, delta):
    magnitude = np.abs(x)
    radius = np.maximum(delta, 0.0)[:, None]
    ordered = -np.sort(-magnitude, axis=1)
    cumulative = np.cumsum(ordered, axis=1)
    index = np.arange(1, x.shape[1] + 1)
    k = np.maximum(np.sum(ordered - (cumulative - radius) / index > 0, axis=1), 1)
    theta = (np.take_along_axis(cumulative, (k - 1)[:, None], axis=1) - radius) / k[:, None]
    inside = magnitude.sum(axis=1, keepdims=True) <= radius
    out = np.where(inside, x, np.sign(x) * np.maximum(magnitude - theta, 0.0))
    out[delta <= 0] = 0.0
    return out


def _snap_to_power(w, tau, delta, objective):
    fro2 = float(np.sum(w ** 2))
    if fro2 <= 0 or fro2 >= tau:
        return w
    l1 = np.abs(w).sum(axis=1)
    limits = [math.sqrt(tau / fro2)] + list(delta[l1 > 0] / l1[l1 > 0])
    scale = min(limits)
    if scale <= 1.0:
        return w
    snapped = w * scale
    return snapped if objective(snapped) <= objective(w) else w


# ----------------------------------------------------------------------------
# Detector and closed-form designs
# ----------------------------------------------------------------------------

def solve_detector(h: np.ndarray, w: np.ndarray, stats: SignalStats) -> np.ndarray:
    """
    Linear MMSE detector Q = R_x (HW)^T (HW R_x (HW)^T + R_w)^{-1}.
    """
    g = h @ w
    system = stats.sigma_x2 * g @ g.T + stats.sigma_w2 * np.eye(h.shape[0])
    try:
        return np.linalg.solve(system, stats.sigma_x2 * g).T
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(f"Detector system is singular: {e}") from e


def low_snr_detector(h: np.ndarray, w: np.ndarray, stats: SignalStats) -> np.ndarray:
    return (stats.sigma_x2 / stats.sigma_w2) * (h @ w).T


def scale_to_power_budget(w_dir: np.ndarray, stats: SignalStats, budget: PowerBudget) -> Tuple[np.ndarray, float]:
    """
    Largest multiple zeta * w_dir meeting both power constraints.
    """
    tau = budget.signal_power() / stats.sigma_x2
    delta = budget.headroom / stats.amplitude_scale
    fro = float(np.linalg.norm(w_dir))
    if fro == 0.0:
        return np.zeros_like(w_dir, dtype=float), 0.0
    l1 = np.abs(w_dir).sum(axis=1)
    used = l1 > 0
    zeta = min([math.sqrt(tau) / fro] + list(delta[used] / l1[used]))
    return zeta * w_dir, zeta


def zf_direction(h: np.ndarray, n_streams: int) -> np.ndarray:
    """
    Unscaled ZF precoder: first N_s columns of the right pseudo-inverse.
    """
    n_r, n_t = h.shape
    if n_streams > min(n_r, n_t):
        raise DimensionError(f"{n_streams} streams exceed channel dimensions {h.shape}")
    rank = int(np.linalg.matrix_rank(h))
    if rank == n_r:
        return np.linalg.pinv(h)[:, :n_streams]
    leading = h[:n_streams]
    if np.linalg.matrix_rank(leading) < n_streams:
        raise RankDeficientChannelError(rank, n_streams, h.shape)
    return np.linalg.pinv(leading)


def zf_design_high_snr(h: np.ndarray, stats: SignalStats, budget: PowerBudget) -> Tuple[np.ndarray, np.ndarray]:
    """
    Zero-forcing pair with Q H W = I: W = zeta H^+[:, :N_s], Q = [I, 0] / zeta.
    """
    w, zeta = scale_to_power_budget(zf_direction(h, stats.n_streams), stats, budget)
    if zeta <= 0:
        raise InfeasibleBudgetError("No signal power is available for the ZF design")
    q = np.eye(stats.n_streams, h.shape[0]) / zeta
    return w, q


def initial_precoder(h: np.ndarray, stats: SignalStats, budget: PowerBudget) -> np.ndarray:
    try:
        w, _ = zf_design_high_snr(h, stats, budget)
        return w
    except (RankDeficientChannelError, InfeasibleBudgetError) as e:
        logging.info(f"ZF initialization unavailable ({e}); using a scaled pseudo-inverse")
        w, _ = scale_to_power_budget(np.linalg.pinv(h)[:, :stats.n_streams], stats, budget)
        return w


# ----------------------------------------------------------------------------
# Alternating optimization
# ----------------------------------------------------------------------------

@dataclass
class IterationCounts:
    outer: int = 0
    association: List[int] = field(default_factory=list)
    precoder: List[int] = field(default_factory=list)


@dataclass
class ConstraintResiduals:
    power: float
    headroom: float


@dataclass
class SolverReport:
    mse_trace: List[float]
    final_design: Design
    final_assignment: Assignment
    final_mse: float
    channel: np.ndarray
    iter_counts: IterationCounts
    constraint_residuals: ConstraintResiduals
    converged: bool
    null_dim: int = 0
    lambda_min: float = float("nan")
    block_trace: List[Tuple[int, str, float]] = field(default_factory=list)
    relaxed_mse: Optional[float] = None
    relaxed_design: Optional[Design] = None
    relaxed_channel: Optional[np.ndarray] = None
    polished: bool = False
    safeguard_used: bool = False


def alternate_transceiver(
    h: np.ndarray,
    stats: SignalStats,
    budget: PowerBudget,
    opts: SolverOptions,
    w0: Optional[np.ndarray] = None,
    q0: Optional[np.ndarray] = None,
):
    """
    Precoder/detector alternation on a fixed channel, starting from
    (ZF precoder, Q = [I, 0]) unless a start is given.
    """
    w = initial_precoder(h, stats, budget) if w0 is None else w0
    q = np.eye(stats.n_streams, h.shape[0]) if q0 is None else q0
    r = budget.dc_bias
    current = mse(h, Design(w, q, r), stats)
    trace = [current]
    blocks = []
    counts = IterationCounts()
    lambda_min = float("nan")
    multipliers = None
    converged = False

    for outer in range(1, opts.max_outer + 1):
        counts.outer = outer
        precoder = solve_precoder(h, q, stats, budget, opts, w_start=w, multipliers_start=multipliers)
        multipliers = precoder.multipliers
        counts.precoder.append(precoder.iterations)
        lambda_min = precoder.lambda_min
        candidate = mse(h, Design(precoder.w, q, r), stats)
        if candidate <= current:
            w, current = precoder.w, candidate
        blocks.append((outer, "precoder", current))

        q_next = solve_detector(h, w, stats)
        candidate = mse(h, Design(w, q_next, r), stats)
        if candidate <= current:
            q, current = q_next, candidate
        blocks.append((outer, "detector", current))

        trace.append(current)
        if abs(trace[-2] - trace[-1]) <= opts.tolerance:
            converged = True
            break

    return Design(w, q, r), trace, blocks, counts, converged, lambda_min


def optimize_transceiver(
    chans: ChannelSet,
    assignment: Assignment,
    stats: SignalStats,
    budget: PowerBudget,
    opts: SolverOptions,
) -> SolverReport:
    """
    Report for a fixed IRS assignment with the transceiver alternated to convergence.
    """
    h = assemble_h(chans, to_link_matrix(assignment)) if chans.n_units else chans.los
    design, trace, blocks, counts, converged, lambda_min = alternate_transceiver(h, stats, budget, opts)
    return _report(
        h, design, assignment, trace, blocks, counts, converged, stats, budget,
        lambda_min=lambda_min, null_dim=0,
    )


def alternating_optimize(
    scene: Scene,
    chans: ChannelSet,
    stats: SignalStats,
    budget: PowerBudget,
    opts: Optional[SolverOptions] = None,
) -> SolverReport:
    """
    Jointly minimize the MSE over the IRS assignment, precoder and detector.

    Starts from the distance-greedy assignment, the ZF precoder and
    Q = [I, 0], then cycles relaxed-V, W and Q updates until the MSE change
    is within the tolerance. The relaxed V is rounded row-wise and the
    transceiver re-optimized on the binary channel.
    """
    opts = opts or SolverOptions()
    n_r, n_t = chans.los.shape
    if stats.n_streams > min(n_t, n_r):
        raise DimensionError(f"{stats.n_streams} streams exceed min(N_t, N_r) = {min(n_t, n_r)}")

    greedy = distance_greedy(scene)
    if chans.n_units == 0:
        logging.info("No IRS units; alternating precoder and detector only")
        return optimize_transceiver(chans, greedy, stats, budget, opts)

    r = budget.dc_bias
    v = to_link_matrix(greedy)
    h = assemble_h(chans, v)
    w = initial_precoder(h, stats, budget)
    q = np.eye(stats.n_streams, n_r)
    current = mse(h, Design(w, q, r), stats)
    trace = [current]
    blocks = []
    counts = IterationCounts()
    null_dim = 0
    lambda_min = float("nan")
    multipliers = None
    converged = False

    for outer in range(1, opts.max_outer + 1):
        counts.outer = outer

        association = solve_relaxed_association(chans, w, q, stats, opts, v_ref=v)
        counts.association.append(association.iterations)
        null_dim = association.null_dim
        if association.mse <= current:
            v = association.link.v
            h = assemble_h(chans, v)
            current = mse(h, Design(w, q, r), stats)
        blocks.append((outer, "association", current))

        precoder = solve_precoder(h, q, stats, budget, opts, w_start=w, multipliers_start=multipliers)
        multipliers = precoder.multipliers
        counts.precoder.append(precoder.iterations)
        lambda_min = precoder.lambda_min
        candidate = mse(h, Design(precoder.w, q, r), stats)
        if candidate <= current:
            w, current = precoder.w, candidate
        blocks.append((outer, "precoder", current))

        q_next = solve_detector(h, w, stats)
        candidate = mse(h, Design(w, q_next, r), stats)
        if candidate <= current:
            q, current = q_next, candidate
        blocks.append((outer, "detector", current))

        trace.append(current)
        logging.debug(f"Outer iteration {outer}: mse {current:.9g}")
        if abs(trace[-2] - trace[-1]) <= opts.tolerance:
            converged = True
            break

    if not converged:
        logging.warning(f"Alternating optimization stopped at the cap of {opts.max_outer} outer iterations")

    relaxed_mse = current
    assignment = recover_assignment(RelaxedLinkMatrix(v=v, n_pds=n_r))
    h_binary = assemble_h(chans, to_link_matrix(assignment))
    design = Design(w, q, r)
    if opts.polish:
        design, _, _, polish_counts, _, _ = alternate_transceiver(h_binary, stats, budget, opts, w0=w, q0=q)
        counts.precoder.extend(polish_counts.precoder)

    report = _report(
        h_binary, design, assignment, trace, blocks, counts, converged, stats, budget,
        lambda_min=lambda_min, null_dim=null_dim,
    )
    report.relaxed_mse = relaxed_mse
    report.relaxed_design = Design(w, q, r)
    report.relaxed_channel = h
    report.polished = opts.polish

    if opts.greedy_safeguard:
        fallback = optimize_transceiver(chans, greedy, stats, budget, opts)
        if fallback.final_mse < report.final_mse:
            logging.info(
                f"Distance-greedy configuration is better after rounding "
                f"({fallback.final_mse:.6g} < {report.final_mse:.6g}); keeping it"
            )
            report.final_design = fallback.final_design
            report.final_assignment = fallback.final_assignment
            report.final_mse = fallback.final_mse
            report.channel = fallback.channel
            report.constraint_residuals = fallback.constraint_residuals
            report.safeguard_used = True

    logging.info(
        f"Alternating optimization finished after {counts.outer} iterations: "
        f"relaxed mse {relaxed_mse:.6g}, binary mse {report.final_mse:.6g}"
    )
    return report


def _report(h, design, assignment, trace, blocks, counts, converged, stats, budget, lambda_min, null_dim) -> SolverReport:
    return SolverReport(
        mse_trace=trace,
        final_design=design,
        final_assignment=assignment,
        final_mse=mse(h, design, stats),
        channel=h,
        iter_counts=counts,
        constraint_residuals=ConstraintResiduals(
            power=power_residual(design, stats, budget),
            headroom=headroom_residual(design, stats, budget),
        ),
        converged=converged,
        null_dim=null_dim,
        lambda_min=lambda_min,
        block_trace=blocks,
    )
