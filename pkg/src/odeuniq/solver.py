"""Adaptive scalar ODE integration for x' + f(t,x) = 0 and the empirical
uniqueness probes built on it.

The stepper is an explicit Dormand-Prince 4(5) embedded pair (the 5th
order solution is propagated); step acceptance uses a mixed absolute and
relative criterion.  The singular endpoint t = 0 is never evaluated; all
probes stop at a configurable positive floor.  Probe outputs are evidence,
never proof: only the criterion checkers speak to uniqueness theorems.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import EvalDomainError, Expression

__all__ = [
    "Trajectory",
    "FunnelReport",
    "SupRatioReport",
    "SolverDomainError",
    "NOMINAL_ORDER",
    "integrate_ivp",
    "convergence_order",
    "funnel_probe",
    "forward_spread",
    "sup_ratio_diagnostic",
]

NOMINAL_ORDER = 5  # local extrapolation of the 5th-order solution

# Dormand-Prince 4(5) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
       187 / 2100, 1 / 40)


class SolverDomainError(Exception):
    def __init__(self, message: str, t: float, x: float):
        self.t = t
        self.x = x
        super().__init__(f"{message} at (t={t!r}, x={x!r})")


@dataclass
class Trajectory:
    """A sampled numerical solution path with per-step error estimates."""

    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray          # right-hand side values at the samples
    step_errors: np.ndarray   # local error estimate of each accepted step
    status: str               # completed | stopped_at_singularity | error_budget_exceeded
    message: str = ""

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def x_end(self) -> float:
        return float(self.x[-1])

    def at(self, t_query: float) -> float:
        """Cubic Hermite interpolation between accepted steps."""
        ts = self.t
        ascending = ts[0] <= ts[-1]
        s = ts if ascending else ts[::-1]
        lo, hi = s[0], s[-1]
        if not (lo - 1e-12 <= t_query <= hi + 1e-12):
            raise ValueError(f"t={t_query!r} outside trajectory range")
        k = int(np.clip(np.searchsorted(s, t_query) - 1, 0, len(s) - 2))
        if not ascending:
            k = len(ts) - 2 - k
        t0, t1 = float(ts[k]), float(ts[k + 1])
        h = t1 - t0
        if h == 0.0:
            return float(self.x[k])
        u = (t_query - t0) / h
        x0, x1 = float(self.x[k]), float(self.x[k + 1])
        d0, d1 = float(self.xdot[k]) * h, float(self.xdot[k + 1]) * h
        h00 = (1 + 2 * u) * (1 - u) ** 2
        h10 = u * (1 - u) ** 2
        h01 = u * u * (3 - 2 * u)
        h11 = u * u * (u - 1)
        return h00 * x0 + h10 * d0 + h01 * x1 + h11 * d1


def _rhs_from(f):
    """Right-hand side x' = -f(t, x), from an Expression or a callable f."""
    if isinstance(f, Expression):
        fl = f.lambdify(("t", "x"))

        def rhs(t, x):
            val = float(fl(t, x))
            if not math.isfinite(val):
                raise SolverDomainError("non-finite f sample", t, x)
            return -val

        return rhs

    def rhs(t, x):
        val = float(f(t, x))
        if not math.isfinite(val):
            raise SolverDomainError("non-finite f sample", t, x)
        return -val

    return rhs


def integrate_ivp(f, t0: float, x0: float, t1: float,
                  rtol: float = 1e-6, atol: float = 1e-9,
                  max_steps: int = 200_000,
                  fixed_step: float | None = None) -> Trajectory:
    """Integrate x' = -f(t, x) from (t0, x0) to t1 (either direction).

    Every accepted step's local error estimate satisfies the mixed
    criterion err <= atol + rtol*max(|x_n|, |x_n+1|).  Step underflow is
    reported as status='stopped_at_singularity' with the reach point.

    With fixed_step set, adaptivity is disabled and every step is accepted
    (used for convergence-order measurements, where the error controller
    would confound the step-size/error relation).
    """
    if t0 == t1:
        rhs = _rhs_from(f)
        d = rhs(t0, x0)
        return Trajectory(np.array([t0]), np.array([x0]), np.array([d]),
                          np.array([0.0]), "completed")
    rhs = _rhs_from(f)
    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)
    t, x = float(t0), float(x0)
    k_last = rhs(t, x)
    ts, xs, ds, errs = [t], [x], [k_last], [0.0]
    if fixed_step is not None:
        if not (fixed_step > 0.0):
            raise ValueError("fixed_step must be positive")
        h = direction * fixed_step
    else:
        h = direction * min(span * 1e-2, 0.1)
    h_min = max(span * 1e-14, 1e-16)
    n = 0
    status = "completed"
    message = ""
    while n < max_steps:
        n += 1
        remaining = t1 - t
        if direction * remaining <= 0.0:
            break
        if abs(h) > abs(remaining):
            h = remaining
        # stages (FSAL: stage 7 value equals the propagated solution's slope)
        k = [k_last]
        failed = False
        for i in range(1, 7):
            xi = x + h * sum(aij * kj for aij, kj in zip(_A[i], k))
            try:
                k.append(rhs(t + _C[i] * h, xi))
            except SolverDomainError:
                failed = True
                break
        if not failed:
            x5 = x + h * sum(b * kj for b, kj in zip(_B5, k))
            x4 = x + h * sum(b * kj for b, kj in zip(_B4, k))
            err = abs(x5 - x4)
            scale = atol + rtol * max(abs(x), abs(x5))
            ratio = err / scale if scale > 0 else math.inf
        else:
            ratio = math.inf
            err = math.inf
        if fixed_step is not None:
            if failed:
                raise SolverDomainError("stage failure in fixed-step mode",
                                        t, x)
            accept = True
        else:
            accept = ratio <= 1.0
        if accept:
            t = t + h
            x = x5
            k_last = k[6]  # FSAL
            ts.append(t)
            xs.append(x)
            ds.append(k_last)
            errs.append(err)
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
        else:
            factor = max(0.1, 0.9 * ratio ** -0.2) if math.isfinite(ratio) else 0.1
        if direction * (t1 - t) <= 0.0:
            break
        if fixed_step is None:
            h *= factor
            if abs(h) < h_min:
                status = "stopped_at_singularity"
                message = f"step size underflow at t={t!r}"
                break
        else:
            h = direction * fixed_step
    else:
        status = "error_budget_exceeded"
        message = f"max_steps={max_steps} exhausted at t={t!r}"
    return Trajectory(np.array(ts), np.array(xs), np.array(ds),
                      np.array(errs), status, message)


def convergence_order(f, t0: float, x0: float, t1: float, exact: float,
                      rtols=(1e-4, 1e-6, 1e-8)) -> float:
    """Measured global convergence order of the stepper.

    For each rtol an adaptive run picks a representative step size (its
    mean accepted step); a fixed-step run at that size then gives a clean
    endpoint error, decoupled from the error controller.  Returns the
    least-squares slope of log(error) against log(step).
    """
    hs, errors = [], []
    for rtol in rtols:
        ref = integrate_ivp(f, t0, x0, t1, rtol=rtol, atol=1e-300)
        h = float(np.mean(np.abs(np.diff(ref.t))))
        run = integrate_ivp(f, t0, x0, t1, fixed_step=h)
        err = abs(run.x_end - exact)
        if err == 0.0:
            err = 1e-300
        hs.append(h)
        errors.append(err)
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])


@dataclass
class FunnelReport:
    """Backward-reachability evidence for non-uniqueness through x(0) = 0.

    basin_width bounded away from 0 as t_floor decreases indicates
    non-uniqueness; basin_width -> 0 is consistent with uniqueness.
    Evidence, never proof.
    """

    terminal_values: np.ndarray
    reaches_zero: np.ndarray        # bool per terminal sample
    basin_width: float
    grid_spacing: float
    t_floor: float
    atol_reach: float
    spread_curve: list = field(default_factory=list)  # (t0=delta, spread)
    statuses: list = field(default_factory=list)
    failures: list = field(default_factory=list)      # (x_T, message)


def funnel_probe(f, T: float, n: int = 201, t_floor: float = 1e-6,
                 rtol: float = 1e-6, atol: float = 1e-9,
                 x_bound: float = 1.0, atol_reach: float = 1e-6,
                 spread_levels: int = 8) -> FunnelReport:
    """Integrate backward from (T, x_T) over a symmetric terminal grid and
    measure the set that reaches |x| < atol_reach near the singular
    endpoint.

    A sample is marked as reaching zero when |x| dips below atol_reach at
    any accepted step, or when the path changes sign (by continuity it
    crossed zero between samples).  The crossing test matters for
    square-root-type fields: after touching x = 0 the integrator peels
    onto the opposite-sign branch instead of sticking to the trivial
    solution, so the endpoint value alone would miss the visit to zero.
    """
    if n < 3:
        raise ValueError("funnel_probe requires n >= 3")
    if not (0.0 < t_floor < T):
        raise ValueError("t_floor must lie in (0, T)")
    grid = np.linspace(-x_bound, x_bound, n)
    spacing = float(grid[1] - grid[0])
    reaches = np.zeros(n, dtype=bool)
    statuses = []
    failures = []
    for i, x_T in enumerate(grid):
        try:
            traj = integrate_ivp(f, T, float(x_T), t_floor, rtol=rtol, atol=atol)
        except SolverDomainError as exc:
            failures.append((float(x_T), str(exc)))
            statuses.append("error")
            continue
        statuses.append(traj.status)
        if traj.status in ("completed", "stopped_at_singularity"):
            xs = traj.x
            touched = bool(np.min(np.abs(xs)) < atol_reach)
            crossed = bool(np.any(np.signbit(xs[1:]) != np.signbit(xs[:-1])))
            reaches[i] = touched or crossed
    basin = spacing * int(np.count_nonzero(reaches))
    spread_curve = []
    for k in range(1, spread_levels + 1):
        d = 2.0 ** -k
        t0 = min(d, 0.5 * T)
        try:
            spread_curve.append((t0, forward_spread(f, t0, d, T, rtol, atol)))
        except SolverDomainError:
            spread_curve.append((t0, math.nan))
    return FunnelReport(
        terminal_values=grid,
        reaches_zero=reaches,
        basin_width=basin,
        grid_spacing=spacing,
        t_floor=t_floor,
        atol_reach=atol_reach,
        spread_curve=spread_curve,
        statuses=statuses,
        failures=failures,
    )


def forward_spread(f, t0: float, delta: float, T: float,
                   rtol: float = 1e-6, atol: float = 1e-9) -> float:
    """Max pairwise spread at t = T of the three trajectories started at
    x(t0) in {-delta, 0, +delta}; collapse to 0 along t0 = delta -> 0 is
    uniqueness evidence."""
    ends = []
    for x0 in (-delta, 0.0, delta):
        traj = integrate_ivp(f, t0, x0, T, rtol=rtol, atol=atol)
        if traj.status != "completed":
            raise SolverDomainError(
                f"forward leg did not complete ({traj.status})", t0, x0)
        ends.append(traj.x_end)
    return max(abs(a - b) for a in ends for b in ends)


@dataclass
class SupRatioReport:
    """Pointwise |y(tau)|/alpha(tau) along a trajectory with its running
    supremum from the right, mirroring the proof's key estimate:
    the ratio should stay strictly below the sup over [tau, tau_plus)."""

    tau: np.ndarray
    ratio: np.ndarray
    running_sup: np.ndarray
    holds: bool
    violations: int
    skipped: int


def sup_ratio_diagnostic(f: Expression, v: Expression, lam: Expression,
                         rep, traj: Trajectory) -> SupRatioReport:
    """Compute y(tau) = x(t(tau)) and |y|/alpha along a t-domain trajectory.

    alpha(tau(t)) = v(t), so the ratio is |x(t)|/v(t) indexed by tau.
    Interior samples where the ratio equals the running supremum over
    [tau, tau_plus) violate the strict-inequality pattern (zero ratios are
    exempt: the trivial solution can witness nothing).
    """
    mask = (traj.t >= rep.t_min) & (traj.t <= rep.T)
    ts = traj.t[mask]
    xs = traj.x[mask]
    v_vals = v.lambdify(("t",))(ts)
    taus = np.asarray(rep.tau_of_t(ts))
    order = np.argsort(taus)
    taus = taus[order]
    xs_o = xs[order]
    v_o = v_vals[order]
    keep = np.abs(v_o) >= 1e-300
    skipped = int(np.count_nonzero(~keep))
    taus = taus[keep]
    ratio = np.abs(xs_o[keep]) / np.abs(v_o[keep])
    if ratio.size == 0:
        return SupRatioReport(taus, ratio, ratio.copy(), True, 0, skipped)
    running = np.maximum.accumulate(ratio[::-1])[::-1]
    # strict pattern at interior samples: ratio < max over strictly larger tau
    violations = 0
    for i in range(len(ratio) - 1):
        right_max = running[i + 1]
        if ratio[i] > 0.0 and ratio[i] >= right_max:
            violations += 1
    return SupRatioReport(taus, ratio, running, violations == 0,
                          violations, skipped)
