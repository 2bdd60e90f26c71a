# oadmm/state.py
from dataclasses import dataclass
from typing import Optional

import numpy as np

from stiefel.manifold import StiefelPoint


@dataclass
class SolverState:
    """
    Iterate of the ADMM loop after `t` updates.

    beta is beta^t; mu is always derived as tau / beta. beta_prev is
    beta^{t-1} (None at t = 0). multiplier holds the canonical element of
    dh(y_breve) produced by the last y-update.
    """

    X: StiefelPoint
    X_prev: StiefelPoint
    y: np.ndarray
    z: np.ndarray
    y_breve: np.ndarray
    t: int
    beta: float
    tau: float
    beta_prev: Optional[float] = None
    multiplier: Optional[np.ndarray] = None
    riemannian_grad_prev: Optional[np.ndarray] = None
    z0_norm: float = 0.0

    @property
    def mu(self):
        return self.tau / self.beta

    @classmethod
    def initial(cls, X0, y0, z0, beta0, tau):
        y0 = np.array(y0, dtype=float)
        z0 = np.array(z0, dtype=float)
        return cls(
            X=X0,
            X_prev=X0,
            y=y0,
            z=z0,
            y_breve=y0.copy(),
            t=0,
            beta=float(beta0),
            tau=float(tau),
            z0_norm=float(np.linalg.norm(z0)),
        )
