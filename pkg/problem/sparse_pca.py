# problem/sparse_pca.py
"""
Sparse PCA on the Stiefel manifold:

    min_X  (1/2m) ||X X^T D - D||_F^2 + rho (||X||_1 - ||X||_[k])

with D in R^{n x m} (features by samples). The l1 part is h composed with
the vectorizing map, the largest-k part is g.
"""
import logging
import math

import numpy as np

from proxcore.exceptions import KOutOfRange
from proxcore.functions import l1_norm, largest_k_norm

from .composite import CompositeProblem, SmoothPart, identity_map
from .exceptions import EmptyData

logger = logging.getLogger(__name__)

SMOOTHNESS_MARGIN = 1e-6


class ReconstructionLoss(SmoothPart):
    """
    f(X) = (1/2m) ||X X^T D - D||_F^2.

    With S = D D^T the gradient is (1/m)(X X^T S X + S X X^T X - 2 S X).
    Differentiating in a direction V gives seven products of X, X^T, V and S
    (the last with weight 2); each is bounded by ||S|| ||V||_F when
    ||X||_2 <= 1, so L_f = 8 ||S||_2 / m holds on the spectral unit ball,
    which contains the manifold and every projection input.
    On the manifold the gradient is -(1/m)(I - X X^T) S X, hence
    C_f = sqrt(r) ||S||_2 / m.
    """

    name = 'reconstruction'

    def __init__(self, D, r):
        self.D = np.array(D, dtype=float)
        self.D.setflags(write=False)
        self.samples = self.D.shape[1]
        spectral = float(np.linalg.norm(self.D, 2)) ** 2 if self.D.size else 0.0
        self.smoothness = 8.0 * spectral / self.samples * (1.0 + SMOOTHNESS_MARGIN) + SMOOTHNESS_MARGIN
        self.grad_bound = math.sqrt(r) * spectral / self.samples

    def value(self, X):
        X = np.asarray(X, dtype=float)
        residual = X @ (X.T @ self.D) - self.D
        return float(np.sum(residual ** 2)) / (2.0 * self.samples)

    def gradient(self, X):
        X = np.asarray(X, dtype=float)
        W = self.D.T @ X
        DW = self.D @ W
        return (X @ (W.T @ W) + DW @ (X.T @ X) - 2.0 * DW) / self.samples


def make_sparse_pca(D, rho_dot, k=None, r=1):
    """
    Build the sparse-PCA CompositeProblem for data D (n x m) and rank r.

    k defaults to n when not given.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] < 1 or D.shape[1] < 1:
        raise EmptyData("sparse PCA needs a non-empty n x m data matrix", shape=D.shape)
    n = D.shape[0]
    if k is None:
        k = n
    if not 1 <= k <= n * r:
        raise KOutOfRange("k must lie in [1, n*r]", k=k, n=n, r=r)
    logger.debug(f"[PROBLEM] sparse PCA n={n} samples={D.shape[1]} r={r} rho={rho_dot} k={k}")
    return CompositeProblem(
        f=ReconstructionLoss(D, r),
        g=largest_k_norm(rho_dot, k),
        h=l1_norm(rho_dot, n * r),
        A=identity_map(n, r),
        n=n,
        r=r,
        m=n * r,
        name='sparse-pca',
    )
