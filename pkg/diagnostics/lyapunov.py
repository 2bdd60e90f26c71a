# diagnostics/lyapunov.py
"""
Potential function of the ADMM loop:

    Theta^t = L(X^t, y^t, z^t, beta^t) + c/beta^t + P^t + D^t

    c       = eps_beta + tau C_h^2 + (2/sigma) * 12 sigma^2 C_h^2 / (p (2 - sigma)^2)
    P^t     = alpha (theta + 1) ell(beta^t) / 2 * ||X^t - X^{t-1}||_F^2
    D^t     = 2 beta^{t-1} (sigma - 1)/(2 - sigma) * ||sigma (A(X^t) - y^t)||^2
"""
from dataclasses import dataclass

import numpy as np

from oadmm.updates import ell, smoothed_lagrangian

from .exceptions import InsufficientHistory

EPS_BETA = 1.0


@dataclass(frozen=True)
class LyapunovTerms:
    lagrangian: float
    penalty_decay: float
    momentum: float
    dual_history: float

    @property
    def total(self):
        return self.lagrangian + self.penalty_decay + self.momentum + self.dual_history


def lyapunov_constant(prob, cfg):
    c_h_sq = prob.h.lipschitz ** 2
    sigma_ddot = 12.0 * cfg.sigma ** 2 * c_h_sq / (cfg.p * (2.0 - cfg.sigma) ** 2)
    return EPS_BETA + cfg.tau * c_h_sq + 2.0 / cfg.sigma * sigma_ddot


def lyapunov_terms(prob, state, cfg):
    if state.t < 1 or state.beta_prev is None:
        raise InsufficientHistory("the potential needs one completed iteration", t=state.t)
    x = state.X.data
    residual = prob.A.apply(x) - state.y
    return LyapunovTerms(
        lagrangian=smoothed_lagrangian(prob, state.X, state.y, state.z, state.beta, state.tau),
        penalty_decay=lyapunov_constant(prob, cfg) / state.beta,
        momentum=0.5 * cfg.alpha * (cfg.theta + 1.0) * ell(prob, state.beta)
        * float(np.sum((x - state.X_prev.data) ** 2)),
        dual_history=2.0 * state.beta_prev * (cfg.sigma - 1.0) / (2.0 - cfg.sigma)
        * float(np.sum((cfg.sigma * residual) ** 2)),
    )


def lyapunov(prob, state, cfg):
    return lyapunov_terms(prob, state, cfg).total
