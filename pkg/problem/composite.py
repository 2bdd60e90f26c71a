# problem/composite.py
"""
F(X) = f(X) - g(X) + h(A(X)) over the Stiefel manifold.

CompositeProblem bundles the three parts with the linear map and is
immutable after construction, so solvers running in parallel may share it.
"""
from dataclasses import dataclass
import logging

import numpy as np

from proxcore.functions import ProxFunction, SubgradFunction
from stiefel.manifold import StiefelPoint

from .exceptions import DimensionMismatch

logger = logging.getLogger(__name__)

ADJOINT_TOL = 1e-10


@dataclass(frozen=True)
class LinearMap:
    """A: R^{n x r} -> R^m with adjoint and an operator-norm bound A_bar."""

    apply: object
    adjoint: object
    op_norm: float
    n: int
    r: int
    m: int

    def __call__(self, X):
        return self.apply(X)


def identity_map(n, r):
    """Row-major vectorization, m = n*r and A_bar = 1."""
    return LinearMap(
        apply=lambda X: np.asarray(X, dtype=float).reshape(-1),
        adjoint=lambda z: np.asarray(z, dtype=float).reshape(n, r),
        op_norm=1.0,
        n=n,
        r=r,
        m=n * r,
    )


def check_linear_map(A, rng, samples=5):
    """
    Largest adjoint-consistency and operator-norm residuals over random samples.

    Returns (adjoint_gap, norm_excess); both should be <= 0 up to rounding:
    adjoint_gap is |<A(X), z> - <X, A^T z>| / (||X|| ||z||) - 1e-10 and
    norm_excess is ||A(V)|| / ||V|| - A_bar.
    """
    adjoint_gap = -np.inf
    norm_excess = -np.inf
    for _ in range(samples):
        X = rng.standard_normal((A.n, A.r))
        z = rng.standard_normal(A.m)
        lhs = float(np.dot(A.apply(X), z))
        rhs = float(np.sum(X * A.adjoint(z)))
        scale = np.linalg.norm(X) * np.linalg.norm(z)
        adjoint_gap = max(adjoint_gap, abs(lhs - rhs) / scale - ADJOINT_TOL)
        norm_excess = max(norm_excess, np.linalg.norm(A.apply(X)) / np.linalg.norm(X) - A.op_norm)
    return adjoint_gap, norm_excess


class SmoothPart:
    """L_f-smooth f with gradient bound C_f on the manifold."""

    name = 'f'
    smoothness = 1.0
    grad_bound = 0.0

    def value(self, X):
        raise NotImplementedError

    def gradient(self, X):
        raise NotImplementedError


class ZeroSmooth(SmoothPart):
    name = 'zero'

    def value(self, X):
        return 0.0

    def gradient(self, X):
        return np.zeros_like(np.asarray(X, dtype=float))


def check_smooth_part(f, X, rng, step=1e-6, directions=3):
    """
    Relative error between the analytic directional derivative and a central
    finite difference at X, worst case over random unit directions.
    """
    X = np.asarray(X, dtype=float)
    grad = f.gradient(X)
    worst = 0.0
    for _ in range(directions):
        V = rng.standard_normal(X.shape)
        V /= np.linalg.norm(V)
        numeric = (f.value(X + step * V) - f.value(X - step * V)) / (2.0 * step)
        analytic = float(np.sum(grad * V))
        scale = max(abs(analytic), abs(numeric), 1e-12)
        worst = max(worst, abs(numeric - analytic) / scale)
    return worst


@dataclass(frozen=True)
class CompositeProblem:
    f: SmoothPart
    g: SubgradFunction
    h: ProxFunction
    A: LinearMap
    n: int
    r: int
    m: int
    name: str = 'composite'

    def __post_init__(self):
        if (self.A.n, self.A.r, self.A.m) != (self.n, self.r, self.m):
            raise DimensionMismatch("linear map dimensions disagree with the problem",
                                    map=(self.A.n, self.A.r, self.A.m),
                                    problem=(self.n, self.r, self.m))
        if self.n < self.r:
            raise DimensionMismatch("need n >= r", n=self.n, r=self.r)

    def as_matrix(self, X):
        data = X.data if isinstance(X, StiefelPoint) else np.asarray(X, dtype=float)
        if data.shape != (self.n, self.r):
            raise DimensionMismatch("iterate shape does not match the problem",
                                    expected=(self.n, self.r), got=data.shape)
        return data

    def objective(self, X):
        x = self.as_matrix(X)
        return self.f.value(x) - self.g.evaluate(x) + self.h.evaluate(self.A.apply(x))

    def smooth_gradient(self, X, y, z, beta):
        """grad_X S(X, y, z, beta) = grad f(X) + A^T(z) + beta A^T(A(X) - y)."""
        x = self.as_matrix(X)
        residual = self.A.apply(x) - y
        return self.f.gradient(x) + self.A.adjoint(z + beta * residual)


def objective(prob, X):
    """F(X) = f(X) - g(X) + h(A(X))."""
    return prob.objective(X)


def null_problem(n, r):
    """f = g = h = 0 with the vectorizing map; every iterate is stationary."""
    from proxcore.functions import zero_prox, zero_subgrad

    return CompositeProblem(
        f=ZeroSmooth(), g=zero_subgrad(), h=zero_prox(n * r), A=identity_map(n, r),
        n=n, r=r, m=n * r, name='null',
    )
