"""Closed-form reference bounds and the per-coordinate smoothness sandwich."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .algos import CcdStep, Trajectory
from .pep import InitialCondition, SandwichResult, coordinate_sandwich
from .solve import SolveOptions


def beck_ccd_bound(alpha: float, p: int, L: float, N: int, R_a: float) -> float:
    """Analytic objective-gap guarantee for cyclic coordinate gradient steps
    under the trajectory-ball initial condition.

    Valid for step sizes 0 < alpha <= 1/L.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if N < 0:
        raise ValueError("N must be nonnegative")
    if not (L > 0):
        raise ValueError("L must be positive")
    if R_a < 0:
        raise ValueError("radius must be nonnegative")
    if not (0 < alpha <= 1.0 / L):
        raise ValueError("the analytic bound needs 0 < alpha <= 1/L")
    return (4.0 / alpha) * (1.0 + p * alpha**2 * L**2) * (p / (N + 8.0)) * R_a**2


def smoothness_zero_step_bound(L: float, R: float) -> float:
    """Largest objective gap a smooth convex function allows at distance R
    from the minimizer: L R^2 / 2.  This is the zero-step worst case."""
    if not (L > 0):
        raise ValueError("L must be positive")
    if R < 0:
        raise ValueError("R must be nonnegative")
    return 0.5 * L * R * R


@dataclass(frozen=True)
class SandwichReport:
    lower: float
    upper: float
    analytic: float | None
    result: SandwichResult


def sandwich_report(
    Lvec: Sequence[float],
    trajectory: Trajectory,
    criterion: str,
    condition: InitialCondition,
    alpha: float | None = None,
    options: SolveOptions | None = None,
) -> SandwichReport:
    """Bracket the worst case over functions with per-block smoothness Lvec
    between two single-constant solves, and attach the analytic guarantee
    when the gradient rule's step size supports it."""
    res = coordinate_sandwich(
        Lvec, trajectory, criterion, condition, alpha=alpha, options=options
    )
    analytic = None
    if isinstance(trajectory.rule, CcdStep) and alpha is not None:
        L_sum = float(sum(Lvec))
        if 0 < alpha <= 1.0 / L_sum:
            analytic = beck_ccd_bound(
                alpha, trajectory.p, L_sum, trajectory.N, condition.radius
            )
    return SandwichReport(res.lower, res.upper, analytic, res)
