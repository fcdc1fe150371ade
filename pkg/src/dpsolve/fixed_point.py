"""Generic Banach fixed-point engine.

Runs Picard iteration x_{k+1} = T(x_k) for a user-supplied contraction T
on a complete metric space and stops from the a posteriori error bound

    d(x_k, x*) <= L / (1 - L) * d(x_k, x_{k-1}),

so the returned point is within ``tol`` of the unique fixed point x*.
Points are opaque to the engine: anything the map and metric agree on
(floats, numpy arrays) works.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

Point = Any

DEFAULT_MAX_ITERS = 100_000


class NonConvergenceError(RuntimeError):
    """Iteration budget exhausted before the stopping criterion was met.

    Carries the partial ``trace`` so callers can inspect the residual
    history of the failed run.
    """

    def __init__(self, message: str, trace: "IterationTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class ContractionMap:
    """A self-map with known contraction modulus and metric.

    ``modulus`` must lie strictly inside (0, 1). The contraction property
    d(T(x), T(y)) <= modulus * d(x, y) is the caller's claim; it can be
    spot-checked on sample pairs with :meth:`contraction_ratio`, not
    silently assumed.
    """

    apply: Callable[[Point], Point]
    modulus: float
    metric: Callable[[Point, Point], float]

    def contraction_ratio(self, x: Point, y: Point) -> float:
        """Observed d(T(x), T(y)) / d(x, y) for one sample pair.

        At most ``modulus`` (up to roundoff) when the map really is a
        contraction. Raises ValueError for d(x, y) == 0.
        """
        denominator = self.metric(x, y)
        if denominator == 0:
            raise ValueError("contraction ratio undefined for identical points")
        return self.metric(self.apply(x), self.apply(y)) / denominator


@dataclass(frozen=True)
class IterationTrace:
    """Record of one Picard run.

    ``residuals[k-1]`` is d(x_k, x_{k-1}). ``a_priori_bound`` is the Cauchy
    estimate L^m / (1 - L) * d(x_1, x_0) at the final iterate m;
    ``a_posteriori_bound`` is L / (1 - L) * d(x_m, x_{m-1}). The a
    posteriori bound never exceeds the a priori one.
    """

    iterations: int
    residuals: tuple[float, ...]
    a_priori_bound: float
    a_posteriori_bound: float


def iterate_to_fixed_point(
    cmap: ContractionMap,
    start: Point,
    tol: float,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> tuple[Point, IterationTrace]:
    """Iterate ``cmap`` from ``start`` until within ``tol`` of the fixed point.

    Stops once the step residual d(x_{k+1}, x_k) falls to
    tol * (1 - L) / L, which by the a posteriori bound puts the newest
    iterate within ``tol`` of the fixed point.

    Returns the final iterate and the full residual trace. Raises
    ValueError for a modulus outside (0, 1) or a non-positive tolerance,
    and NonConvergenceError (carrying the trace) if ``max_iters`` steps
    do not reach the criterion.
    """
    L = cmap.modulus
    if not 0.0 < L < 1.0:
        raise ValueError(f"contraction modulus must lie in (0, 1), got {L}")
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be at least 1, got {max_iters}")

    threshold = tol * (1.0 - L) / L
    residuals: list[float] = []
    current = start
    first_residual = math.inf
    for k in range(1, max_iters + 1):
        nxt = cmap.apply(current)
        residual = cmap.metric(nxt, current)
        residuals.append(residual)
        if k == 1:
            first_residual = residual
        if residual <= threshold:
            trace = IterationTrace(
                iterations=k,
                residuals=tuple(residuals),
                a_priori_bound=L**k / (1.0 - L) * first_residual,
                a_posteriori_bound=L / (1.0 - L) * residual,
            )
            return nxt, trace
        current = nxt

    trace = IterationTrace(
        iterations=max_iters,
        residuals=tuple(residuals),
        a_priori_bound=L**max_iters / (1.0 - L) * first_residual,
        a_posteriori_bound=L / (1.0 - L) * residuals[-1],
    )
    raise NonConvergenceError(
        f"no convergence after {max_iters} iterations: last residual "
        f"{residuals[-1]:.3e} above stopping threshold {threshold:.3e}",
        trace,
    )


def a_priori_iterations(modulus: float, first_residual: float, tol: float) -> int:
    """Smallest m with modulus^m / (1 - modulus) * first_residual <= tol.

    This is the iteration count guaranteeing d(x_m, x*) <= tol from the
    Cauchy estimate alone, given the first step size d(x_1, x_0).
    Returns 0 when the start is already a fixed point (first_residual 0).
    """
    if not 0.0 < modulus < 1.0:
        raise ValueError(f"contraction modulus must lie in (0, 1), got {modulus}")
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if first_residual < 0.0:
        raise ValueError(f"residual must be nonnegative, got {first_residual}")
    if first_residual == 0.0:
        return 0

    def bound(m: int) -> float:
        return modulus**m / (1.0 - modulus) * first_residual

    target = tol * (1.0 - modulus) / first_residual
    if target >= 1.0:
        m = 0
    else:
        m = max(0, math.ceil(math.log(target) / math.log(modulus)))
    # log() rounding can misplace the crossing by one; fix up exactly.
    while bound(m) > tol:
        m += 1
    while m > 0 and bound(m - 1) <= tol:
        m -= 1
    return m
