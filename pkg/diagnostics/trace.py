# diagnostics/trace.py
from dataclasses import dataclass
import math
from typing import Optional

from .exceptions import EmptyTrace

TRACE_COLUMNS = (
    't', 'objective', 'crit', 'theta', 'primal_residual', 'beta', 'eta', 'backtracks', 'elapsed_s',
)


@dataclass(frozen=True)
class IterationTrace:
    """One trace row, recorded after t updates. Absent quantities are None."""

    t: int
    objective: float
    crit: Optional[float] = None
    theta: Optional[float] = None
    primal_residual: Optional[float] = None
    beta: Optional[float] = None
    step_eta: Optional[float] = None
    backtracks: Optional[int] = None
    elapsed_seconds: Optional[float] = None
    feasibility: Optional[float] = None
    crit_mean: Optional[float] = None  # mean crit over iterations 1..t

    def is_finite(self):
        values = (self.objective, self.crit, self.theta, self.primal_residual, self.beta, self.step_eta)
        return all(value is None or math.isfinite(value) for value in values)


def trace_to_row(trace):
    """Mapping keyed by TRACE_COLUMNS; None marks an absent field."""
    return {
        't': trace.t,
        'objective': trace.objective,
        'crit': trace.crit,
        'theta': trace.theta,
        'primal_residual': trace.primal_residual,
        'beta': trace.beta,
        'eta': trace.step_eta,
        'backtracks': trace.backtracks,
        'elapsed_s': trace.elapsed_seconds,
    }


def should_emit(t, full_until=10_000, stride=10):
    """Every iteration up to full_until, then every stride-th."""
    return t <= full_until or t % stride == 0


def ergodic_crit(traces):
    """
    Running averages [(t, mean crit over iterations 1..t)] for rows with t >= 1.

    Rows from the ADMM loop carry crit_mean, kept over every iteration whether
    emitted or not. Rows without it are averaged over the recorded rows.
    """
    rows = [trace for trace in traces if trace.t >= 1 and trace.crit is not None]
    if not rows:
        raise EmptyTrace("no trace rows with a criticality value")
    averages = []
    total = 0.0
    for count, trace in enumerate(rows, start=1):
        total += trace.crit
        averages.append((trace.t, trace.crit_mean if trace.crit_mean is not None else total / count))
    return averages


def ergodic_at(traces, T):
    """Ergodic average at the last recorded row with t <= T."""
    eligible = [avg for t, avg in ergodic_crit(traces) if t <= T]
    if not eligible:
        raise EmptyTrace("no trace rows up to the requested iteration", T=T)
    return eligible[-1]


def best_objective(traces):
    if not traces:
        raise EmptyTrace("empty trace")
    return min(trace.objective for trace in traces)


def min_crit(traces):
    values = [trace.crit for trace in traces if trace.crit is not None]
    if not values:
        raise EmptyTrace("no trace rows with a criticality value")
    return min(values)
