# oadmm/solver.py
"""
The ADMM loop on the Stiefel manifold.

Per iteration t (beta = beta^t, mu = tau/beta):
    S1  beta^t from the penalty schedule
    S2  X-update: extrapolated projection (EP) or retraction with line search (RR)
    S3  y-update through the closed-form smoothed subproblem
    S4  over-relaxed multiplier update
"""
from dataclasses import replace
import logging
import time
from typing import List, NamedTuple

from django.conf import settings
import numpy as np

from diagnostics.criticality import crit
from diagnostics.lyapunov import lyapunov
from diagnostics.trace import IterationTrace, should_emit
from proxcore.envelope import moreau_grad
from stiefel.manifold import StiefelPoint, feasibility

from .exceptions import ConfigInvalid, InvariantViolation
from .state import SolverState
from .updates import (
    dual_bound,
    dual_identity_residual,
    penalty_at,
    x_update_ep,
    x_update_rr,
    y_update,
    z_update,
)

logger = logging.getLogger(__name__)

DUAL_IDENTITY_TOL = 1e-8


class SolverResult(NamedTuple):
    state: SolverState
    traces: List[IterationTrace]
    stopped_by: str  # 'max_iters' or 'crit_tol'


def trace_cadence():
    return (int(getattr(settings, 'OADMM_TRACE_FULL_UNTIL', 10_000)),
            int(getattr(settings, 'OADMM_TRACE_STRIDE', 10)))


def _starting_point(prob, cfg, X0, y0, z0):
    if not isinstance(X0, StiefelPoint):
        X0 = StiefelPoint(X0)
    prob.as_matrix(X0)
    y0 = prob.A.apply(X0.data) if y0 is None else np.asarray(y0, dtype=float)
    z0 = np.zeros(prob.m) if z0 is None else np.asarray(z0, dtype=float)
    if y0.shape != (prob.m,) or z0.shape != (prob.m,):
        raise ConfigInvalid("y0 and z0 must be vectors of length m", m=prob.m,
                            y0=y0.shape, z0=z0.shape)
    return SolverState.initial(X0, y0, z0, penalty_at(cfg, 0), cfg.tau)


def _step(prob, cfg, state, rng):
    """Run S2-S4 on `state` in place. Returns (step_eta, backtracks)."""
    eta, backtracks, riemannian = None, None, None
    if cfg.variant == 'EP':
        X_next, _ = x_update_ep(prob, state, cfg, rng=rng)
    else:
        X_next, eta, backtracks, riemannian = x_update_rr(prob, state, cfg)

    y_bar, y_breve = y_update(prob, state, X_next)
    z_next = z_update(prob, state.z, X_next, y_bar, cfg.sigma, state.beta)

    if cfg.checks_enabled:
        residual = dual_identity_residual(prob, state, z_next, y_bar, cfg.sigma)
        if residual > DUAL_IDENTITY_TOL * max(1.0, float(np.linalg.norm(z_next))):
            raise InvariantViolation("dual identity violated", t=state.t, residual=residual)
        bound = dual_bound(prob, state, cfg.sigma)
        if np.linalg.norm(z_next) > bound * (1.0 + 1e-12) + 1e-12:
            raise InvariantViolation("multiplier exceeds its a priori bound", t=state.t,
                                     norm=float(np.linalg.norm(z_next)), bound=bound)

    multiplier = moreau_grad(prob.h, state.mu, y_bar)
    beta = state.beta

    state.X_prev, state.X = state.X, X_next
    state.y, state.y_breve, state.z = y_bar, y_breve, z_next
    state.multiplier = multiplier
    state.riemannian_grad_prev = riemannian
    state.beta_prev, state.beta = beta, penalty_at(cfg, state.t + 1)
    state.t += 1
    return eta, backtracks


def _record(prob, cfg, state, eta, backtracks, started, record_time):
    x = state.X.data
    crit_value = crit(prob, state.X, state.y_breve, state.z, state.multiplier) \
        if (state.t >= 1 or prob.h.has_subdiff_dist) else None
    return IterationTrace(
        t=state.t,
        objective=prob.objective(x),
        crit=crit_value,
        theta=lyapunov(prob, state, cfg) if state.t >= 1 else None,
        primal_residual=float(np.linalg.norm(prob.A.apply(x) - state.y)),
        beta=state.beta,
        step_eta=eta,
        backtracks=backtracks,
        elapsed_seconds=(time.perf_counter() - started) if record_time else None,
        feasibility=feasibility(x),
    )


def solve(prob, cfg, X0, y0=None, z0=None, record_time=True):
    """
    Run the loop from (X0, y0, z0); y0 defaults to A(X0) and z0 to 0.

    Returns SolverResult(state, traces, stopped_by). Row t of the trace
    describes the iterate after t updates, with beta = beta^t.
    """
    cfg.check_against(prob)
    state = _starting_point(prob, cfg, X0, y0, z0)
    rng = np.random.default_rng([cfg.seed, 0x0ADA])
    full_until, stride = trace_cadence()
    started = time.perf_counter()
    logger.info(f"[OADMM] {cfg.variant} start: {prob.name} n={prob.n} r={prob.r} "
                f"beta0={cfg.beta0:g} max_iters={cfg.max_iters}")

    first = _record(prob, cfg, state, None, None, started, record_time)
    traces = [first]
    stopped_by = 'max_iters'
    last = first
    crit_total, crit_count = 0.0, 0

    for _ in range(cfg.max_iters):
        eta, backtracks = _step(prob, cfg, state, rng)
        last = _record(prob, cfg, state, eta, backtracks, started, record_time)
        if last.crit is not None:
            crit_total += last.crit
            crit_count += 1
            last = replace(last, crit_mean=crit_total / crit_count)
        if should_emit(state.t, full_until, stride):
            traces.append(last)
        logger.debug(f"[OADMM] t={state.t} F={last.objective:.6e} crit={last.crit:.3e} "
                     f"beta={state.beta:.3e}")
        if cfg.crit_tol > 0 and last.crit is not None and last.crit <= cfg.crit_tol:
            stopped_by = 'crit_tol'
            break

    if traces[-1].t != last.t:
        traces.append(last)
    logger.info(f"[OADMM] {cfg.variant} finished after {state.t} iterations ({stopped_by}): "
                f"F={last.objective:.6e} crit={last.crit if last.crit is not None else float('nan'):.3e}")
    return SolverResult(state, traces, stopped_by)
