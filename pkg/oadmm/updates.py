# oadmm/updates.py
"""
Sub-updates of one ADMM iteration.

Each function reads the current SolverState and returns new values; the
solver loop owns state mutation.
"""
import logging
import math

import numpy as np

from proxcore.envelope import moreau_grad, moreau_value, y_subproblem
from stiefel.exceptions import RankDeficient
from stiefel.manifold import descent_direction, polar_retraction, project_to_stiefel, tangent_project

from .exceptions import InvariantViolation, LineSearchStalled

logger = logging.getLogger(__name__)

MAX_BACKTRACKS = 200
PERTURBATION = 1e-12
OPTIMALITY_RTOL = 1e-8
# Decreases within this many ulps of the Lagrangian value are rounding noise.
ROUNDING_ULPS = 16


def penalty_at(cfg, t):
    """beta^t = beta0 (1 + xi t^p)."""
    return cfg.beta0 * (1.0 + cfg.xi * float(t) ** cfg.p)


def ell(prob, beta):
    """Lipschitz modulus of grad_X S at penalty beta: beta A_bar^2 + L_f."""
    return beta * prob.A.op_norm ** 2 + prob.f.smoothness


def smoothed_lagrangian(prob, X, y, z, beta, tau):
    """f(X) + <z, A(X) - y> + (beta/2)||A(X) - y||^2 - g(X) + h_{tau/beta}(y)."""
    x = prob.as_matrix(X)
    residual = prob.A.apply(x) - y
    return (prob.f.value(x)
            + float(np.dot(z, residual))
            + 0.5 * beta * float(np.dot(residual, residual))
            - prob.g.evaluate(x)
            + moreau_value(prob.h, tau / beta, y))


def rounding_slack(value):
    """Absolute size of the rounding noise in a Lagrangian value of magnitude |value|."""
    return ROUNDING_ULPS * np.finfo(float).eps * max(1.0, abs(value))


def x_gradient(prob, state, at):
    """grad_X S(at, y, z, beta) minus the subgradient of g at the current iterate."""
    return prob.smooth_gradient(at, state.y, state.z, state.beta) - prob.g.subgradient(state.X.data)


def projected_step(X_c, G, weight, rng=None):
    """
    argmin over M of <X, G> + (weight/2)||X - X_c||^2, i.e. the projection of
    X_c - G/weight. A rank-deficient target is perturbed once.
    """
    target = X_c - G / weight
    try:
        return project_to_stiefel(target)
    except RankDeficient:
        if rng is None:
            raise
        logger.warning("[OADMM] rank-deficient projection target, retrying with a perturbation")
        scale = PERTURBATION * max(1.0, float(np.linalg.norm(target)))
        return project_to_stiefel(target + scale * rng.standard_normal(target.shape))


def x_update_ep(prob, state, cfg, rng=None):
    """Extrapolated projection step. Returns (X_next, G)."""
    x = state.X.data
    X_c = x + cfg.alpha * (x - state.X_prev.data)
    G = x_gradient(prob, state, X_c)
    weight = cfg.theta * ell(prob, state.beta)
    X_next = projected_step(X_c, G, weight, rng=rng)

    if cfg.checks_enabled:
        lhs = float(np.sum((X_next.data - x) * G)) + 0.5 * weight * float(np.sum((X_next.data - X_c) ** 2))
        rhs = 0.5 * weight * float(np.sum((x - X_c) ** 2))
        if lhs > rhs + OPTIMALITY_RTOL * (1.0 + abs(lhs) + abs(rhs)):
            raise InvariantViolation("projection step is not optimal over the manifold",
                                     t=state.t, lhs=lhs, rhs=rhs)
    return X_next, G


def x_update_rr(prob, state, cfg, b=None):
    """
    Retraction step with backtracking on the smoothed Lagrangian.

    The first trial step is b/beta; b comes from bb_step unless given.
    Returns (X_next, eta, backtracks, riemannian_grad).
    """
    X = state.X
    G = x_gradient(prob, state, X.data)
    direction = descent_direction(X, G, cfg.rho)
    riemannian = descent_direction(X, G, 1.0)
    if b is None:
        b = bb_step(X.data, state.X_prev.data, riemannian, state.riemannian_grad_prev,
                    cfg.bb_mode, (cfg.bb_lo, cfg.bb_hi), cfg.bb_value)
    sq_norm = float(np.sum(direction ** 2))
    eta = b / state.beta
    if sq_norm == 0.0:
        return X, eta, 0, riemannian

    current = smoothed_lagrangian(prob, X, state.y, state.z, state.beta, state.tau)
    slack = rounding_slack(current)
    for j in range(MAX_BACKTRACKS + 1):
        eta = b * cfg.gamma ** j / state.beta
        trial = polar_retraction(X, tangent_project(X, -eta * direction))
        value = smoothed_lagrangian(prob, trial, state.y, state.z, state.beta, state.tau)
        if value - current <= -cfg.delta * eta * sq_norm + slack:
            if j:
                logger.debug(f"[LINESEARCH] t={state.t} accepted after {j} backtracks, eta={eta:.3e}")
            return trial, eta, j, riemannian
    raise LineSearchStalled("line search did not find a sufficient decrease",
                            t=state.t, backtracks=MAX_BACKTRACKS, eta=eta)


def y_update(prob, state, X_next):
    """
    y-step of the smoothed problem. b = A(X_next) + z/beta is the closed form
    of y - grad_y S / beta. Returns (y_bar, y_breve).
    """
    b = prob.A.apply(prob.as_matrix(X_next)) + state.z / state.beta
    return y_subproblem(prob.h, state.mu, state.beta, b)


def z_update(prob, z, X_next, y_next, sigma, beta):
    """z + sigma beta (A(X_next) - y_next)."""
    return z + sigma * beta * (prob.A.apply(prob.as_matrix(X_next)) - y_next)


def dual_identity_residual(prob, state, z_next, y_next, sigma):
    """|| z - (z - z_next)/sigma - grad h_mu(y_next) ||, zero up to rounding."""
    lhs = state.z - (state.z - z_next) / sigma
    return float(np.linalg.norm(lhs - moreau_grad(prob.h, state.mu, y_next)))


def dual_bound(prob, state, sigma):
    """||z0|| + sigma C_h / (2 - sigma)."""
    return state.z0_norm + sigma * prob.h.lipschitz / (2.0 - sigma)


def bb_step(X, X_prev, G1, G1_prev, mode, clamp, value=1.0):
    """
    Barzilai-Borwein ratio from S = X - X_prev and Z = G1_prev - G1, clamped
    to [lo, hi]. Non-positive or non-finite ratios fall back to lo.
    """
    lo, hi = clamp
    if mode == 'fixed':
        return float(value)
    if G1_prev is None:
        return float(min(max(value, lo), hi))
    S = np.asarray(X, dtype=float) - np.asarray(X_prev, dtype=float)
    Z = np.asarray(G1_prev, dtype=float) - np.asarray(G1, dtype=float)
    sz = float(np.sum(S * Z))
    if mode == 'bb1':
        ratio = float(np.sum(S * S)) / sz if sz != 0 else math.inf
    else:
        zz = float(np.sum(Z * Z))
        ratio = sz / zz if zz != 0 else math.inf
    if not math.isfinite(ratio) or ratio <= 0 or sz <= 0:
        logger.debug(f"[OADMM] BB ratio {ratio} unusable, falling back to {lo}")
        return float(lo)
    return float(min(max(ratio, lo), hi))
