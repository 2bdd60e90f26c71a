# proxcore/functions.py
"""
Catalog of the nonsmooth pieces of the composite objective.

ProxFunction covers h (weakly convex, exact prox); SubgradFunction covers g
(convex, one deterministic subgradient element). Instances are immutable
once built.
"""
import math

import numpy as np

from .exceptions import InvalidParameter, KOutOfRange


# =====================================================
# ELEMENTARY OPERATORS
# =====================================================

def l1_prox(y, lam):
    """Soft thresholding: sign(y) * max(|y| - lam, 0)."""
    if not lam > 0:
        raise InvalidParameter("soft threshold needs lam > 0", lam=lam)
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.maximum(np.abs(y) - lam, 0.0)


def l1_subdiff_dist(y, z, lam):
    """Euclidean distance from z to the subdifferential of lam*||.||_1 at y."""
    if not lam > 0:
        raise InvalidParameter("l1 subdifferential needs lam > 0", lam=lam)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    gap = np.where(y != 0, np.abs(z - lam * np.sign(y)), np.maximum(np.abs(z) - lam, 0.0))
    return float(np.linalg.norm(gap))


def mcp_prox(y, lam, a, mu):
    """Firm thresholding, the exact prox of the minimax-concave penalty for mu < a."""
    if not 0 < mu < a:
        raise InvalidParameter("MCP prox needs 0 < mu < a", mu=mu, a=a)
    y = np.asarray(y, dtype=float)
    mag = np.abs(y)
    shrunk = np.sign(y) * (mag - mu * lam) / (1.0 - mu / a)
    out = np.where(mag <= mu * lam, 0.0, shrunk)
    return np.where(mag > a * lam, y, out)


def mcp_subdiff_dist(y, z, lam, a):
    """Distance from z to the limiting subdifferential of the MCP at y."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    mag = np.abs(y)
    slope = np.where(mag < a * lam, np.sign(y) * (lam - mag / a), 0.0)
    gap = np.where(y != 0, np.abs(z - slope), np.maximum(np.abs(z) - lam, 0.0))
    return float(np.linalg.norm(gap))


def _selection(X, k):
    flat = np.asarray(X, dtype=float).ravel()
    if not 1 <= k <= flat.size:
        raise KOutOfRange("k must lie in [1, n*r]", k=k, size=flat.size)
    # Stable sort keeps row-major order among equal magnitudes.
    order = np.argsort(-np.abs(flat), kind='stable')
    return flat, order[:k]


def largest_k_value(X, k):
    """Sum of the k largest absolute entries of X."""
    flat, chosen = _selection(X, k)
    return float(np.sum(np.abs(flat[chosen])))


def largest_k_subgradient(X, k):
    """sign(X_ij) on the k selected entries, zero elsewhere."""
    flat, chosen = _selection(X, k)
    out = np.zeros_like(flat)
    out[chosen] = np.sign(flat[chosen])
    return out.reshape(np.shape(X))


# =====================================================
# PROX FUNCTIONS (h)
# =====================================================

class ProxFunction:
    """
    Weakly convex h with an exact proximal operator.

    Subclasses set `lipschitz` (C_h) and `weak_convexity` (W_h) and implement
    evaluate / prox. `has_subdiff_dist` tells Crit whether the exact
    subdifferential distance is available.
    """

    name = 'h'
    lipschitz = 0.0
    weak_convexity = 0.0
    has_subdiff_dist = False

    def evaluate(self, y):
        return float(np.sum(self.elementwise(y)))

    def elementwise(self, y):
        raise NotImplementedError

    def prox(self, y, mu):
        raise NotImplementedError

    def subdiff_dist(self, y, z):
        raise NotImplementedError(f"{self.name} has no exact subdifferential distance")

    def subgradient(self, y):
        """One deterministic element of dh(y); zero where h has a kink at 0."""
        raise NotImplementedError

    def max_smoothing(self):
        """Largest admissible mu, i.e. 1/(2 W_h) (infinite when W_h = 0)."""
        if self.weak_convexity == 0:
            return math.inf
        return 1.0 / (2.0 * self.weak_convexity)

    def __repr__(self):
        return f"{type(self).__name__}(C_h={self.lipschitz:g}, W_h={self.weak_convexity:g})"


class ZeroFunction(ProxFunction):
    name = 'zero'
    has_subdiff_dist = True

    def __init__(self, dim):
        self.dim = dim

    def elementwise(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    def prox(self, y, mu):
        return np.array(y, dtype=float)

    def subdiff_dist(self, y, z):
        return float(np.linalg.norm(z))

    def subgradient(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))


class L1Norm(ProxFunction):
    """h(y) = weight * ||y||_1, convex, C_h = weight * sqrt(dim)."""

    name = 'l1'
    has_subdiff_dist = True

    def __init__(self, weight, dim):
        if not weight > 0:
            raise InvalidParameter("l1 weight must be positive", weight=weight)
        self.weight = float(weight)
        self.dim = int(dim)
        self.lipschitz = self.weight * math.sqrt(self.dim)
        self.weak_convexity = 0.0

    def elementwise(self, y):
        return self.weight * np.abs(np.asarray(y, dtype=float))

    def prox(self, y, mu):
        return l1_prox(y, self.weight * mu)

    def subdiff_dist(self, y, z):
        return l1_subdiff_dist(y, z, self.weight)

    def subgradient(self, y):
        return self.weight * np.sign(np.asarray(y, dtype=float))


class MinimaxConcavePenalty(ProxFunction):
    """
    Separable MCP with parameters (weight, a):
        phi(t) = weight*|t| - t^2/(2a)   for |t| <= a*weight
               = a*weight^2/2            otherwise
    W_h = 1/a and C_h = weight * sqrt(dim).
    """

    name = 'mcp'
    has_subdiff_dist = True

    def __init__(self, weight, a, dim):
        if not weight > 0 or not a > 0:
            raise InvalidParameter("MCP needs weight > 0 and a > 0", weight=weight, a=a)
        self.weight = float(weight)
        self.a = float(a)
        self.dim = int(dim)
        self.lipschitz = self.weight * math.sqrt(self.dim)
        self.weak_convexity = 1.0 / self.a

    def elementwise(self, y):
        mag = np.abs(np.asarray(y, dtype=float))
        inner = self.weight * mag - mag ** 2 / (2.0 * self.a)
        return np.where(mag <= self.a * self.weight, inner, 0.5 * self.a * self.weight ** 2)

    def prox(self, y, mu):
        return mcp_prox(y, self.weight, self.a, mu)

    def subdiff_dist(self, y, z):
        return mcp_subdiff_dist(y, z, self.weight, self.a)

    def subgradient(self, y):
        y = np.asarray(y, dtype=float)
        return np.sign(y) * np.maximum(self.weight - np.abs(y) / self.a, 0.0)


def l1_norm(weight, dim):
    return L1Norm(weight, dim)


def mcp(weight, a, dim):
    return MinimaxConcavePenalty(weight, a, dim)


def zero_prox(dim):
    return ZeroFunction(dim)


# =====================================================
# SUBGRADIENT FUNCTIONS (g)
# =====================================================

class SubgradFunction:
    """Convex, C_g-Lipschitz g with one deterministic subgradient element."""

    name = 'g'
    lipschitz = 0.0

    def evaluate(self, X):
        raise NotImplementedError

    def subgradient(self, X):
        raise NotImplementedError


class ZeroSubgrad(SubgradFunction):
    name = 'zero'

    def evaluate(self, X):
        return 0.0

    def subgradient(self, X):
        return np.zeros_like(np.asarray(X, dtype=float))


class LargestKNorm(SubgradFunction):
    """g(X) = weight * ||X||_[k]; the tie-broken subgradient has norm <= weight*sqrt(k)."""

    name = 'largest_k'

    def __init__(self, weight, k):
        if not weight > 0:
            raise InvalidParameter("largest-k weight must be positive", weight=weight)
        if k < 1:
            raise KOutOfRange("k must be at least 1", k=k)
        self.weight = float(weight)
        self.k = int(k)
        self.lipschitz = self.weight * math.sqrt(self.k)

    def evaluate(self, X):
        return self.weight * largest_k_value(X, self.k)

    def subgradient(self, X):
        return self.weight * largest_k_subgradient(X, self.k)


def largest_k_norm(weight, k):
    return LargestKNorm(weight, k)


def zero_subgrad():
    return ZeroSubgrad()
