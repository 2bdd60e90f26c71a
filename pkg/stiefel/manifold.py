# stiefel/manifold.py
"""
Geometry of the Stiefel manifold M = {X in R^{n x r} : X^T X = I_r}.

Every function here is pure: inputs are never modified and results are new
arrays, so the helpers can be shared between concurrently running solvers.
Only thin SVD / QR factors are formed (never n x n matrices).
"""
from dataclasses import dataclass
import logging

import numpy as np
from scipy import linalg

from .exceptions import InvalidParameter, NotOnManifold, RankDeficient, ShapeMismatch

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-10
TANGENT_TOL = 1e-8
RANK_TOL = 1e-12


def feasibility(data):
    """Return ||X^T X - I_r||_F for a raw n x r array."""
    data = np.asarray(data, dtype=float)
    gram = data.T @ data
    return float(np.linalg.norm(gram - np.eye(data.shape[1])))


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    """An n x r matrix with orthonormal columns (the primal iterate X)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2:
            raise ShapeMismatch("Stiefel point must be a matrix", ndim=data.ndim)
        n, r = data.shape
        if not n >= r >= 1:
            raise ShapeMismatch("Stiefel point needs n >= r >= 1", n=n, r=r)
        err = feasibility(data)
        if not err <= FEASIBILITY_TOL:
            raise NotOnManifold("||X^T X - I|| exceeds tolerance", residual=err)
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def r(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A matrix in T_X M, i.e. X^T D + D^T X = 0."""

    data: np.ndarray
    base: StiefelPoint

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.shape != self.base.shape:
            raise ShapeMismatch("tangent vector shape differs from its base",
                                tangent=data.shape, base=self.base.shape)
        x = self.base.data
        sym = x.T @ data
        residual = np.linalg.norm(sym + sym.T)
        if residual > TANGENT_TOL * max(1.0, np.linalg.norm(data)):
            raise NotOnManifold("matrix is not tangent at its base point", residual=residual)
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)


def _points(X):
    if isinstance(X, StiefelPoint):
        return X.data
    return np.asarray(X, dtype=float)


def _check_same_shape(X, M, what='matrix'):
    if X.shape != np.shape(M):
        raise ShapeMismatch(f"{what} shape does not match the base point",
                            expected=X.shape, got=np.shape(M))


def project_to_stiefel(M):
    """Nearest point of M in Frobenius norm: U V^T from the thin SVD of M."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] < M.shape[1]:
        raise ShapeMismatch("projection needs a tall n x r matrix", shape=M.shape)
    U, s, Vt = linalg.svd(M, full_matrices=False, lapack_driver='gesvd')
    if s[-1] <= RANK_TOL * s[0] or s[0] == 0.0:
        raise RankDeficient("matrix is rank deficient, projection is not unique",
                            smallest=float(s[-1]), largest=float(s[0]))
    return StiefelPoint(U @ Vt)


def tangent_project(X, delta):
    """Proj_{T_X M}(D) = D - X sym(X^T D)."""
    x = _points(X)
    delta = np.asarray(delta, dtype=float)
    _check_same_shape(x, delta)
    xtd = x.T @ delta
    projected = delta - 0.5 * x @ (xtd + xtd.T)
    base = X if isinstance(X, StiefelPoint) else StiefelPoint(x)
    return TangentVector(projected, base)


def polar_retraction(X, delta):
    """
    Polar retraction (X + D)(I_r + D^T D)^{-1/2}.

    Computed as the polar factor of X + D, which is the same matrix for a
    tangent D and stays feasible when D is tangent only to rounding.
    """
    x = _points(X)
    d = delta.data if isinstance(delta, TangentVector) else np.asarray(delta, dtype=float)
    _check_same_shape(x, d, 'tangent vector')
    if not np.any(d):
        return X if isinstance(X, StiefelPoint) else StiefelPoint(x)
    return project_to_stiefel(x + d)


def qr_retraction(X, delta):
    """qf(X + D) with the R factor forced to a positive diagonal."""
    x = _points(X)
    d = delta.data if isinstance(delta, TangentVector) else np.asarray(delta, dtype=float)
    _check_same_shape(x, d, 'tangent vector')
    Q, R = linalg.qr(x + d, mode='economic')
    diag = np.diag(R)
    scale = np.max(np.abs(diag)) if diag.size else 0.0
    if scale == 0.0 or np.min(np.abs(diag)) <= RANK_TOL * scale:
        raise RankDeficient("X + D is rank deficient, QR factor is not unique")
    signs = np.where(diag < 0, -1.0, 1.0)
    return StiefelPoint(Q * signs)


def descent_direction(X, G, rho):
    """G_rho = G - rho X G^T X - (1 - rho) X X^T G."""
    if not rho > 0:
        raise InvalidParameter("rho must be positive", rho=rho)
    x = _points(X)
    G = np.asarray(G, dtype=float)
    _check_same_shape(x, G, 'gradient')
    return G - rho * x @ (G.T @ x) - (1.0 - rho) * x @ (x.T @ G)


def stationarity_residual(X, G):
    """||G - X G^T X||_F, an upper bound on dist(0, d I_M(X) + G)."""
    x = _points(X)
    G = np.asarray(G, dtype=float)
    _check_same_shape(x, G, 'gradient')
    return float(np.linalg.norm(G - x @ (G.T @ x)))


def random_point(n, r, rng):
    """Positive-diagonal Q factor of a seeded Gaussian n x r matrix."""
    if not n >= r >= 1:
        raise ShapeMismatch("random point needs n >= r >= 1", n=n, r=r)
    return qr_retraction(np.zeros((n, r)), rng.standard_normal((n, r)))


def random_tangent(X, rng, scale=1.0):
    """Gaussian matrix projected onto T_X M and rescaled to Frobenius norm `scale`."""
    raw = tangent_project(X, rng.standard_normal(X.shape)).data
    norm = np.linalg.norm(raw)
    return TangentVector(raw * (scale / norm) if norm > 0 else raw, X)
