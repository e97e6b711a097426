"""Adaptive quadrature, including improper integrals with a singular left
endpoint at 0+ and infinite right endpoints.

The base rule per panel is the nested Gauss(7)/Kronrod(15) pair; the
per-panel error estimate is the difference between the two rules.
Improper integrals are handled by geometric panel subdivision toward the
singular endpoint (left) or doubling panels toward infinity (right), with
geometric tail extrapolation for the convergence decision and an explicit,
documented divergence heuristic.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadResult",
    "IntegrandError",
    "integrate",
    "integrate_singular_left",
    "integrate_to_infinity",
    "DIVERGENCE_SUM_THRESHOLD",
    "DIVERGENCE_PANEL_RUN",
]

# declare divergence when the partial sum exceeds this ...
DIVERGENCE_SUM_THRESHOLD = 1e12
# ... or when this many geometric panels toward the improper endpoint each
# contribute a non-decreasing amount.
DIVERGENCE_PANEL_RUN = 60

DEFAULT_BUDGET = 10_000


class IntegrandError(Exception):
    """Non-finite integrand sample at an interior point."""

    def __init__(self, message: str, where: float | None = None):
        self.where = where
        super().__init__(message)


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    converged: bool
    diverged: bool
    subdivisions: int

    def __post_init__(self):
        assert not (self.converged and self.diverged)


# 15-point Kronrod abscissae (positive half) with the embedded 7-point Gauss
# rule on the odd-indexed abscissae; standard double-precision values.
_XGK = np.array([
    0.9914553711208126,
    0.9491079123427585,
    0.8648644233597691,
    0.7415311855993945,
    0.5860872354676911,
    0.4058451513773972,
    0.2077849550078985,
    0.0,
])
_WGK = np.array([
    0.0229353220105292,
    0.0630920926299785,
    0.1047900103222502,
    0.1406532597155259,
    0.1690047266392679,
    0.1903505780647854,
    0.2044329400752989,
    0.2094821410847278,
])
_WG = np.array([
    0.1294849661688697,
    0.2797053914892767,
    0.3818300505051189,
    0.4179591836734694,
])

# full node/weight arrays on [-1, 1]
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_W_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_w_gauss_half = np.zeros(8)
_w_gauss_half[1::2] = _WG  # Gauss nodes sit at the odd Kronrod indices
_W_GAUSS = np.concatenate([_w_gauss_half[:-1], _w_gauss_half[::-1]])


def _eval_vectorized(g, x: np.ndarray) -> np.ndarray:
    """Evaluate g on an array, falling back to a scalar loop."""
    try:
        y = np.asarray(g(x), dtype=np.float64)
        if y.shape == x.shape:
            return y
    except (TypeError, ValueError):
        pass
    return np.array([float(g(xi)) for xi in x], dtype=np.float64)


def _gk15(g, a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod 7/15 panel: (kronrod value, error estimate)."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid + half * _NODES
    y = _eval_vectorized(g, x)
    bad = ~np.isfinite(y)
    if bad.any():
        where = float(x[bad][0])
        raise IntegrandError(
            f"non-finite integrand sample at x={where!r}", where=where)
    k = half * float(np.dot(_W_KRONROD, y))
    gq = half * float(np.dot(_W_GAUSS, y))
    return k, abs(k - gq)


def integrate(g, a: float, b: float, tol: float = 1e-10,
              budget: int = DEFAULT_BUDGET) -> QuadResult:
    """Adaptive quadrature of g on the finite interval [a, b].

    Subdivision halves the panel with the largest error estimate until the
    summed estimate drops below ``tol`` or the panel budget is exhausted
    (reported as converged=False, not an exception).
    """
    if not (a < b):
        if a == b:
            return QuadResult(0.0, 0.0, True, False, 0)
        res = integrate(g, b, a, tol=tol, budget=budget)
        return QuadResult(-res.value, res.abs_error_estimate, res.converged,
                          res.diverged, res.subdivisions)
    val, err = _gk15(g, a, b)
    # heap of (-err, insertion counter, a, b, val, err); counter keeps the
    # ordering deterministic when error estimates tie
    heap = [(-err, 0, a, b, val, err)]
    count = 1
    n_panels = 1
    while n_panels < budget:
        total_err = sum(item[5] for item in heap)
        if total_err <= tol:
            break
        neg_err, _, pa, pb, pv, pe = heapq.heappop(heap)
        pm = 0.5 * (pa + pb)
        if pe <= tol / max(len(heap) + 1, 1) * 1e-3 or pm <= pa or pm >= pb:
            # negligible panel, or midpoint not representable; freeze it
            heap.append((0.0, count, pa, pb, pv, pe))
            count += 1
            if all(item[0] == 0.0 for item in heap):
                break
            continue
        v1, e1 = _gk15(g, pa, pm)
        v2, e2 = _gk15(g, pm, pb)
        heapq.heappush(heap, (-e1, count, pa, pm, v1, e1))
        heapq.heappush(heap, (-e2, count + 1, pm, pb, v2, e2))
        count += 2
        n_panels += 1
    # deterministic reduction: sum panels ordered by left endpoint
    panels = sorted(heap, key=lambda item: item[2])
    value = float(sum(p[4] for p in panels))
    err_total = float(sum(p[5] for p in panels))
    diverged = abs(value) > DIVERGENCE_SUM_THRESHOLD
    converged = (err_total <= tol) and not diverged
    return QuadResult(value, err_total, converged, diverged, n_panels)


def _tail_driver(contribs_iter, tol: float, max_panels: int):
    """Shared convergence/divergence logic for improper-integral drivers.

    ``contribs_iter`` yields (contribution, error_estimate) per geometric
    panel, ordered toward the improper endpoint.
    """
    total = 0.0
    err_total = 0.0
    nondecreasing_run = 0
    prev = None
    n = 0
    for contrib, err in contribs_iter:
        n += 1
        total += contrib
        err_total += err
        if abs(total) > DIVERGENCE_SUM_THRESHOLD:
            return QuadResult(total, err_total, False, True, n)
        if prev is not None:
            if abs(contrib) >= abs(prev) * (1.0 - 1e-12) and abs(contrib) > 0.0:
                nondecreasing_run += 1
                if nondecreasing_run >= DIVERGENCE_PANEL_RUN:
                    return QuadResult(total, err_total, False, True, n)
            else:
                nondecreasing_run = 0
            # geometric tail extrapolation from the last two contributions
            if abs(contrib) < abs(prev):
                r = abs(contrib) / abs(prev)
                r = min(r, 0.95)
                tail = abs(contrib) * r / (1.0 - r)
                if tail + err_total <= tol:
                    signed_tail = math.copysign(tail, contrib)
                    return QuadResult(total + signed_tail,
                                      err_total + tail, True, False, n)
        if abs(contrib) == 0.0 and n >= 2:
            if err_total <= tol:
                return QuadResult(total, err_total, True, False, n)
        prev = contrib
        if n >= max_panels:
            break
    return QuadResult(total, err_total, False, False, n)


def integrate_singular_left(g, b: float, tol: float = 1e-10,
                            budget: int = DEFAULT_BUDGET,
                            max_panels: int = 1200) -> QuadResult:
    """Integrate g over (0, b] where g may blow up as w -> 0+.

    Uses geometric panels [b*2^-(k+1), b*2^-k]; converges when the
    geometric tail bound drops below tol, diverges when partial sums
    exceed the divergence threshold or contributions stop decreasing.
    """
    if not (b > 0.0):
        raise ValueError(f"integrate_singular_left requires b > 0, got {b!r}")

    def panels():
        hi = b
        for k in range(max_panels):
            lo = hi * 0.5
            # 1/(k+1)(k+2) sums to 1: panel tolerances sum below tol/2
            ptol = 0.5 * tol / ((k + 1) * (k + 2))
            res = integrate(g, lo, hi, tol=max(ptol, 1e-300), budget=min(budget, 200))
            yield res.value, res.abs_error_estimate
            hi = lo

    return _tail_driver(panels(), tol, max_panels)


def integrate_to_infinity(g, a: float, tol: float = 1e-10,
                          budget: int = DEFAULT_BUDGET,
                          max_panels: int = 1200) -> QuadResult:
    """Integrate g over [a, +inf) with doubling panels and tail detection."""

    def panels():
        lo = a
        width = 1.0
        for k in range(max_panels):
            hi = lo + width
            ptol = 0.5 * tol / ((k + 1) * (k + 2))
            res = integrate(g, lo, hi, tol=max(ptol, 1e-300), budget=min(budget, 200))
            yield res.value, res.abs_error_estimate
            lo = hi
            width *= 2.0

    return _tail_driver(panels(), tol, max_panels)
