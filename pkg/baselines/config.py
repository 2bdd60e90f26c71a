# baselines/config.py
from dataclasses import asdict, dataclass
from typing import Optional

from oadmm.config import SolverConfig
from oadmm.exceptions import ConfigInvalid

KINDS = ('subgrad', 'fixed-beta-admm', 'spgm-ep')

# Penalties of the two fixed-penalty ADMM presets.
RADMM_PENALTIES = (100.0, 10_000.0)


@dataclass(frozen=True)
class BaselineConfig:
    """
    Parameters of the comparison solvers.

    subgrad          step0 / sqrt(t + 1); step0 None means 1 / L_f
    fixed-beta-admm  the RR loop at constant penalty `beta`, sigma = 1, alpha = 0
    spgm-ep          mu_t = mu0 / (1 + t)^mu_exponent
    """

    kind: str
    max_iters: int = 1000
    seed: int = 0
    step0: Optional[float] = None
    beta: float = 100.0
    tau: float = 4.0
    rho: float = 1.0
    gamma: float = 0.5
    delta: float = 1e-3
    mu0: float = 1.0
    mu_exponent: float = 1.0 / 3.0

    def __post_init__(self):
        errors = {}
        if self.kind not in KINDS:
            errors['kind'] = f"must be one of {', '.join(KINDS)}"
        if self.step0 is not None and not self.step0 > 0:
            errors['step0'] = "must be positive"
        if not self.beta > 0:
            errors['beta'] = "must be positive"
        if not self.tau >= 4.0:
            errors['tau'] = "must be at least 4 when sigma = 1"
        if not self.mu0 > 0:
            errors['mu0'] = "must be positive"
        if not 0 < self.mu_exponent <= 1:
            errors['mu_exponent'] = "must lie in (0, 1]"
        if not (isinstance(self.max_iters, int) and self.max_iters >= 0):
            errors['max_iters'] = "must be a non-negative integer"
        if not (isinstance(self.seed, int) and self.seed >= 0):
            errors['seed'] = "must be a non-negative integer"
        if errors:
            raise ConfigInvalid("invalid baseline configuration", **errors)

    @classmethod
    def defaults(cls, kind, rho_dot, **overrides):
        """mu0 starts where the ADMM smoothing parameter starts: tau / (10 rho_dot)."""
        base = dict(kind=kind, mu0=(4.0 / 0.9) / (10.0 * rho_dot))
        base.update(overrides)
        return cls(**base)

    def solver_config(self):
        """The degenerate SolverConfig run by fixed-beta-admm."""
        return SolverConfig(
            variant='RR',
            xi=0.0,
            sigma=1.0,
            tau=self.tau,
            beta0=self.beta,
            alpha=0.0,
            rho=self.rho,
            gamma=self.gamma,
            delta=self.delta,
            max_iters=self.max_iters,
            seed=self.seed,
            fixed_penalty=True,
        )

    def to_dict(self):
        return asdict(self)


def radmm_configs(max_iters=1000, seed=0):
    """Named fixed-penalty presets, one per entry of RADMM_PENALTIES."""
    return {
        f'radmm-{int(beta)}': BaselineConfig(kind='fixed-beta-admm', beta=beta,
                                             max_iters=max_iters, seed=seed)
        for beta in RADMM_PENALTIES
    }
