# baselines/solvers.py
"""
Comparison solvers sharing the problem catalog and trace format of the ADMM
loop: a projected subgradient method, the ADMM loop at a fixed penalty, and
a smoothing proximal gradient method with Euclidean projection.
"""
import logging
import math
import time
from typing import List, NamedTuple, Optional

import numpy as np

from diagnostics.trace import IterationTrace, should_emit
from oadmm.exceptions import ConfigInvalid
from oadmm.solver import solve, trace_cadence
from oadmm.updates import projected_step
from stiefel.manifold import StiefelPoint, feasibility

logger = logging.getLogger(__name__)


class BaselineResult(NamedTuple):
    X: StiefelPoint
    traces: List[IterationTrace]
    y: Optional[np.ndarray] = None
    stopped_by: str = 'max_iters'


def _expect(cfg, kind):
    if cfg.kind != kind:
        raise ConfigInvalid("baseline configuration is for another solver", kind=cfg.kind, expected=kind)


def _start(X0):
    return X0 if isinstance(X0, StiefelPoint) else StiefelPoint(X0)


def _row(prob, t, X, started, record_time, **extra):
    x = X.data
    return IterationTrace(
        t=t,
        objective=prob.objective(x),
        elapsed_seconds=(time.perf_counter() - started) if record_time else None,
        feasibility=feasibility(x),
        **extra,
    )


def _collect(traces, row, full_until, stride):
    if should_emit(row.t, full_until, stride):
        traces.append(row)


def subgradient_element(prob, X):
    """grad f(X) - dg(X) + A^T dh(A(X)) from the deterministic subgradient elements."""
    x = prob.as_matrix(X)
    return (prob.f.gradient(x) - prob.g.subgradient(x)
            + prob.A.adjoint(prob.h.subgradient(prob.A.apply(x))))


def subgrad_solve(prob, cfg, X0, record_time=True):
    """X <- Proj_M(X - eta_t G) with eta_t = step0 / sqrt(t + 1)."""
    _expect(cfg, 'subgrad')
    X = _start(X0)
    prob.as_matrix(X)
    step0 = cfg.step0 if cfg.step0 is not None else 1.0 / prob.f.smoothness
    rng = np.random.default_rng(cfg.seed)
    full_until, stride = trace_cadence()
    started = time.perf_counter()
    logger.info(f"[BASELINE] subgrad start: {prob.name} step0={step0:g} max_iters={cfg.max_iters}")

    last = _row(prob, 0, X, started, record_time)
    traces = [last]
    for t in range(cfg.max_iters):
        eta = step0 / math.sqrt(t + 1.0)
        X = projected_step(X.data, subgradient_element(prob, X), 1.0 / eta, rng=rng)
        last = _row(prob, t + 1, X, started, record_time, step_eta=eta)
        _collect(traces, last, full_until, stride)

    if traces[-1].t != last.t:
        traces.append(last)
    logger.info(f"[BASELINE] subgrad finished: F={last.objective:.6e}")
    return BaselineResult(X, traces)


def fixed_beta_admm_solve(prob, cfg, X0, y0=None, z0=None, record_time=True):
    """The RR loop with xi = 0, sigma = 1 and alpha = 0, i.e. beta^t = beta for all t."""
    _expect(cfg, 'fixed-beta-admm')
    logger.info(f"[BASELINE] fixed-beta ADMM beta={cfg.beta:g}")
    result = solve(prob, cfg.solver_config(), X0, y0=y0, z0=z0, record_time=record_time)
    return BaselineResult(result.state.X, result.traces, result.state.y, result.stopped_by)


def spgm_ep_solve(prob, cfg, X0, y0=None, record_time=True):
    """
    Alternating minimization of f(X) - g(X) + h(y) + ||A(X) - y||^2 / (2 mu_t):
    a projected gradient step in X with eta = 1 / (L_f + A_bar^2 / mu_t),
    then the exact y-step y = prox_{mu_t}(A(X)). mu_t shrinks as
    mu0 / (1 + t)^mu_exponent.
    """
    _expect(cfg, 'spgm-ep')
    X = _start(X0)
    x0 = prob.as_matrix(X)
    limit = prob.h.max_smoothing()
    if cfg.mu0 > limit:
        raise ConfigInvalid("mu0 exceeds the admissible smoothing of h", mu0=cfg.mu0, limit=limit)
    y = prob.A.apply(x0) if y0 is None else np.asarray(y0, dtype=float)
    if y.shape != (prob.m,):
        raise ConfigInvalid("y0 must be a vector of length m", m=prob.m, y0=y.shape)

    rng = np.random.default_rng(cfg.seed)
    full_until, stride = trace_cadence()
    started = time.perf_counter()
    logger.info(f"[BASELINE] spgm-ep start: {prob.name} mu0={cfg.mu0:g} max_iters={cfg.max_iters}")

    def primal_residual():
        return float(np.linalg.norm(prob.A.apply(X.data) - y))

    last = _row(prob, 0, X, started, record_time, primal_residual=primal_residual())
    traces = [last]
    for t in range(cfg.max_iters):
        mu = cfg.mu0 / (1.0 + t) ** cfg.mu_exponent
        eta = 1.0 / (prob.f.smoothness + prob.A.op_norm ** 2 / mu)
        x = X.data
        G = (prob.f.gradient(x) - prob.g.subgradient(x)
             + prob.A.adjoint(prob.A.apply(x) - y) / mu)
        X = projected_step(x, G, 1.0 / eta, rng=rng)
        y = prob.h.prox(prob.A.apply(X.data), mu)
        last = _row(prob, t + 1, X, started, record_time, step_eta=eta,
                    primal_residual=primal_residual())
        _collect(traces, last, full_until, stride)

    if traces[-1].t != last.t:
        traces.append(last)
    logger.info(f"[BASELINE] spgm-ep finished: F={last.objective:.6e}")
    return BaselineResult(X, traces, y)
