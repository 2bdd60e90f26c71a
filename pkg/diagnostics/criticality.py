# diagnostics/criticality.py
import numpy as np

from stiefel.manifold import tangent_project

from .exceptions import MissingCanonicalElement


def crit_terms(prob, X, y_breve, z, s=None):
    """
    The three parts of the criticality measure:
        ||A(X) - y_breve||,
        dist(z, dh(y_breve))   (exact when h provides it, else ||s - z||),
        ||Proj_{T_X M}(grad f(X) - dg(X) + A^T z)||_F.
    """
    x = prob.as_matrix(X)
    y_breve = np.asarray(y_breve, dtype=float)
    z = np.asarray(z, dtype=float)
    primal = float(np.linalg.norm(prob.A.apply(x) - y_breve))

    if prob.h.has_subdiff_dist:
        dual = prob.h.subdiff_dist(y_breve, z)
    elif s is not None:
        dual = float(np.linalg.norm(np.asarray(s, dtype=float) - z))
    else:
        raise MissingCanonicalElement("h has no exact subdifferential distance; pass s",
                                      h=prob.h.name)

    ambient = prob.f.gradient(x) - prob.g.subgradient(x) + prob.A.adjoint(z)
    stationarity = float(np.linalg.norm(tangent_project(X, ambient).data))
    return primal, dual, stationarity


def crit(prob, X, y_breve, z, s=None):
    """Sum of crit_terms; zero exactly at a first-order stationary triple."""
    return float(sum(crit_terms(prob, X, y_breve, z, s)))
