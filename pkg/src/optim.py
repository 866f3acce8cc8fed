"""Full-batch gradient descent with Armijo backtracking, shared by the SVM and MLP trainers."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

INITIAL_STEP = 1.0
SHRINK = 0.5
ARMIJO_C = 1e-4
MIN_STEP = 1e-20


@dataclass
class DescentTrace:
    objectives: list[float] = field(default_factory=list)
    n_iter: int = 0
    grad_norm: float = float("nan")
    reason: str = ""


def armijo_descent(
    objective: Callable[[np.ndarray], float],
    objective_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    theta0: np.ndarray,
    tol: float,
    max_iter: int,
    stall_rounds: int | None = None,
) -> tuple[np.ndarray, DescentTrace]:
    """Minimize from theta0.

    Stops when the gradient norm drops below tol, after max_iter accepted
    steps, when no step length down to MIN_STEP satisfies the sufficient
    decrease condition, or (with stall_rounds) when the objective improved
    by less than tol * max(1, f) for that many consecutive accepted steps.
    """
    theta = np.array(theta0, dtype=np.float64)
    f, g = objective_grad(theta)
    trace = DescentTrace(objectives=[f])
    stalled = 0

    while True:
        gnorm2 = float(g @ g)
        trace.grad_norm = float(np.sqrt(gnorm2))
        if trace.grad_norm < tol:
            trace.reason = "tolerance"
            break
        if trace.n_iter >= max_iter:
            trace.reason = "max_iter"
            break

        step = INITIAL_STEP
        while step >= MIN_STEP:
            candidate = theta - step * g
            f_new = objective(candidate)
            if np.isfinite(f_new) and f_new <= f - ARMIJO_C * step * gnorm2:
                break
            step *= SHRINK
        else:
            trace.reason = "line_search"
            break

        improvement = f - f_new
        theta = candidate
        f, g = objective_grad(theta)
        trace.objectives.append(f)
        trace.n_iter += 1
        logger.debug("iter %d: f=%.10g step=%.3g |g|=%.3g", trace.n_iter, f, step, trace.grad_norm)

        if stall_rounds is not None:
            stalled = stalled + 1 if improvement < tol * max(1.0, f) else 0
            if stalled >= stall_rounds:
                trace.reason = "stalled"
                break

    return theta, trace
