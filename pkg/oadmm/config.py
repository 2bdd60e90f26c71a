# oadmm/config.py
"""
SolverConfig: every tunable of the ADMM loop, range-checked at construction.

Only beta0 >= 2 tau W_h depends on the problem; it is checked by
`check_against(prob)` when a solve starts.
"""
from dataclasses import asdict, dataclass, replace
import math

from django.conf import settings

from .exceptions import ConfigInvalid

VARIANTS = ('EP', 'RR')
BB_MODES = ('fixed', 'bb1', 'bb2')


def extrapolation_limit(theta, xi):
    """Upper end (exclusive) of the admissible EP extrapolation range."""
    return (theta - 1.0) / ((theta + 1.0) * (xi + 2.0))


def debug_checks_enabled():
    return bool(getattr(settings, 'OADMM_DEBUG_CHECKS', getattr(settings, 'DEBUG', False)))


@dataclass(frozen=True)
class SolverConfig:
    variant: str = 'EP'
    p: float = 1.0 / 3.0
    xi: float = 1.0
    theta: float = 1.01
    sigma: float = 1.1
    tau: float = 4.0 / 0.9
    beta0: float = 100.0
    alpha: float = 0.0
    rho: float = 1.0
    gamma: float = 0.5
    delta: float = 1e-3
    bb_mode: str = 'fixed'
    bb_value: float = 1.0
    bb_lo: float = 1e-3
    bb_hi: float = 1e3
    max_iters: int = 1000
    crit_tol: float = 0.0
    seed: int = 0
    fixed_penalty: bool = False
    debug_checks: bool = None

    def __post_init__(self):
        errors = {}

        if self.variant not in VARIANTS:
            errors['variant'] = f"must be one of {', '.join(VARIANTS)}"
        if not 0 < self.p < 1:
            errors['p'] = "must lie in (0, 1)"
        if self.fixed_penalty:
            if self.xi != 0:
                errors['xi'] = "must be 0 when the penalty is fixed"
        elif not 0 < self.xi <= 1:
            errors['xi'] = "must lie in (0, 1]"
        if not self.theta > 1:
            errors['theta'] = "must exceed 1"
        if not 1 <= self.sigma < 2:
            errors['sigma'] = "must lie in [1, 2)"
        elif not self.tau >= 4.0 / (2.0 - self.sigma) * (1.0 - 1e-12):
            errors['tau'] = f"must be at least 4/(2 - sigma) = {4.0 / (2.0 - self.sigma):.6g}"
        if not self.beta0 > 0:
            errors['beta0'] = "must be positive"
        if self.variant == 'RR' and self.alpha != 0:
            errors['alpha'] = "must be 0 for the RR variant"
        elif 'theta' not in errors and not 0 <= self.alpha < extrapolation_limit(self.theta, self.xi):
            errors['alpha'] = (f"must lie in [0, {extrapolation_limit(self.theta, self.xi):.6g})")
        if not self.rho > 0:
            errors['rho'] = "must be positive"
        if not 0 < self.gamma < 1:
            errors['gamma'] = "must lie in (0, 1)"
        if self.rho > 0 and not 0 < self.delta < 1.0 / max(1.0, 2.0 * self.rho):
            errors['delta'] = "must lie in (0, 1/max(1, 2 rho))"
        if self.bb_mode not in BB_MODES:
            errors['bb_mode'] = f"must be one of {', '.join(BB_MODES)}"
        if not 0 < self.bb_lo <= self.bb_hi or not math.isfinite(self.bb_hi):
            errors['bb_clamp'] = "need 0 < bb_lo <= bb_hi < inf"
        if not self.bb_value > 0:
            errors['bb_value'] = "must be positive"
        if not (isinstance(self.max_iters, int) and self.max_iters >= 0):
            errors['max_iters'] = "must be a non-negative integer"
        if not self.crit_tol >= 0:
            errors['crit_tol'] = "must be non-negative"
        if not (isinstance(self.seed, int) and self.seed >= 0):
            errors['seed'] = "must be a non-negative integer"

        if errors:
            raise ConfigInvalid("invalid solver configuration", **errors)

    @classmethod
    def defaults(cls, rho_dot, variant='EP', **overrides):
        """Recommended parameters; beta0 = 10 rho_dot and tau at its lower end."""
        theta, xi, sigma = 1.01, 1.0, 1.1
        base = dict(
            variant=variant,
            p=1.0 / 3.0,
            xi=xi,
            theta=theta,
            sigma=sigma,
            tau=4.0 / (2.0 - sigma),
            beta0=10.0 * rho_dot,
            alpha=extrapolation_limit(theta, xi) - 1e-12 if variant == 'EP' else 0.0,
            rho=1.0,
            gamma=0.5,
            delta=1e-3,
            bb_mode='fixed',
            bb_value=1.0,
            bb_lo=1e-3,
            bb_hi=1e3,
        )
        base.update(overrides)
        return cls(**base)

    @property
    def mu0(self):
        return self.tau / self.beta0

    @property
    def checks_enabled(self):
        if self.debug_checks is None:
            return debug_checks_enabled()
        return self.debug_checks

    def check_against(self, prob):
        """beta0 >= 2 tau W_h keeps every smoothing parameter admissible for h."""
        needed = 2.0 * self.tau * prob.h.weak_convexity
        if self.beta0 < needed:
            raise ConfigInvalid("beta0 too small for the weak convexity of h",
                                beta0=self.beta0, needed=needed)

    def with_overrides(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)
