# proxcore/envelope.py
"""Moreau envelope of h, its gradient, and the coupled smoothing subproblem."""
import numpy as np

from .exceptions import BetaTooSmall, SmoothingTooCoarse


def check_smoothing(h, mu):
    """Raise SmoothingTooCoarse unless mu lies in (0, 1/(2 W_h)]."""
    limit = h.max_smoothing()
    if not mu > 0 or mu > limit * (1.0 + 1e-12):
        raise SmoothingTooCoarse("smoothing parameter outside (0, 1/(2 W_h)]",
                                 mu=mu, limit=limit)


def moreau_value(h, mu, y):
    """h_mu(y) = h(p) + ||p - y||^2 / (2 mu) with p = prox_mu(y)."""
    check_smoothing(h, mu)
    y = np.asarray(y, dtype=float)
    p = h.prox(y, mu)
    return h.evaluate(p) + float(np.sum((p - y) ** 2)) / (2.0 * mu)


def moreau_elementwise(h, mu, y):
    """Coordinate-wise envelope values for separable h (sums to moreau_value)."""
    check_smoothing(h, mu)
    y = np.asarray(y, dtype=float)
    p = h.prox(y, mu)
    return h.elementwise(p) + (p - y) ** 2 / (2.0 * mu)


def moreau_grad(h, mu, y):
    """grad h_mu(y) = (y - prox_mu(y)) / mu, bounded by C_h in norm."""
    check_smoothing(h, mu)
    y = np.asarray(y, dtype=float)
    return (y - h.prox(y, mu)) / mu


def y_subproblem(h, mu, beta, b):
    """
    Minimize h_mu(y) + (beta/2)||y - b||^2 in closed form.

    Returns (y_bar, y_breve) with y_breve = prox(b; mu + 1/beta) and
    y_bar = (y_breve + mu*beta*b) / (1 + mu*beta). beta*(b - y_bar) is an
    element of dh(y_breve) and ||y_bar - y_breve|| <= mu*C_h.
    """
    check_smoothing(h, mu)
    if not beta * mu > 1.0:
        raise BetaTooSmall("beta must exceed 1/mu", beta=beta, mu=mu)
    b = np.asarray(b, dtype=float)
    y_breve = h.prox(b, mu + 1.0 / beta)
    y_bar = (y_breve + mu * beta * b) / (1.0 + mu * beta)
    return y_bar, y_breve
