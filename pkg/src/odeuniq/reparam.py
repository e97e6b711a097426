"""Time reparametrizations of the singular interval (0, T].

The basic map tau(t) = tau_minus + int_t^T ds/lambda(s) sends the singular
endpoint t = 0 to tau_plus (possibly +inf).  It is tabulated on a geometric
t grid, interpolated with monotone cubic Hermite splines (slopes are known
exactly: dtau/dt = -1/lambda), inverted either through the spline or by
bracketing bisection against the defining integral, and verified against
its fixed-point integral equation t(tau) = int_tau^tau_plus lambda(t(s)) ds.

tau_plus = +inf is represented by an explicit marker plus a finite horizon
(the tau value at the smallest tabulated t); verification integrals are
truncated there, which contributes at most t_min <= T*1e-8 to residuals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .criteria import CheckConfig, CriterionReport, Hypothesis, ProblemSpec
from .expr import Expression
from .quadrature import IntegrandError, integrate, integrate_singular_left
from .rootfind import bisect

__all__ = [
    "Reparametrization",
    "TransformedField",
    "GeneralizedReparam",
    "ReparamError",
    "DegenerateReparamError",
    "build_tau",
    "t_of_tau",
    "verify_fixed_point",
    "transform",
    "alpha_l1_check",
    "exp_reparam_check",
    "solve_tau_exp_root",
    "generalized_reparam",
    "check_relaxed_bound",
]


class ReparamError(Exception):
    pass


class DegenerateReparamError(ReparamError):
    pass


@dataclass
class Reparametrization:
    """Tabulated strictly monotone map between t in (0, T] and tau."""

    T: float
    tau_minus: float
    tau_plus: float          # math.inf when the map is unbounded
    t_table: np.ndarray      # ascending
    tau_table: np.ndarray    # strictly decreasing along t_table
    lam: Expression | None = None

    def __post_init__(self):
        if not (np.all(np.diff(self.t_table) > 0)
                and np.all(np.diff(self.tau_table) < 0)):
            raise ReparamError("reparametrization table is not strictly monotone")
        dt = np.gradient(self.t_table)  # fallback slopes if lambda unknown
        if self.lam is not None:
            lam_vals = self.lam.lambdify(("t",))(self.t_table)
            tau_slopes = -1.0 / lam_vals
            t_slopes = -lam_vals
        else:
            tau_slopes = np.gradient(self.tau_table) / dt
            t_slopes = 1.0 / tau_slopes
        self._tau_spline = CubicHermiteSpline(self.t_table, self.tau_table,
                                              tau_slopes)
        self._t_spline = CubicHermiteSpline(self.tau_table[::-1],
                                            self.t_table[::-1],
                                            t_slopes[::-1])

    @property
    def tau_horizon(self) -> float:
        """Largest tabulated tau (at the smallest tabulated t)."""
        return float(self.tau_table[0])

    @property
    def t_min(self) -> float:
        return float(self.t_table[0])

    def tau_of_t(self, t):
        t_arr = np.asarray(t, dtype=np.float64)
        if np.any(t_arr < self.t_min * (1 - 1e-12)) or np.any(t_arr > self.T * (1 + 1e-12)):
            raise ReparamError(f"t out of tabulated range [{self.t_min}, {self.T}]")
        out = self._tau_spline(np.clip(t_arr, self.t_min, self.T))
        return float(out) if np.isscalar(t) or t_arr.shape == () else out

    def t_of_tau(self, tau, refine: bool = False, tol: float = 1e-10):
        scalar = np.isscalar(tau) or np.asarray(tau).shape == ()
        tau_arr = np.atleast_1d(np.asarray(tau, dtype=np.float64))
        lo, hi = self.tau_minus, self.tau_horizon
        if np.any(tau_arr < lo - 1e-12 * max(1.0, abs(lo))) or \
           np.any(tau_arr > hi * (1 + 1e-12) + 1e-12):
            raise ReparamError(f"tau out of tabulated range [{lo}, {hi}]")
        out = self._t_spline(np.clip(tau_arr, lo, hi))
        out[tau_arr <= lo] = self.T  # t(tau_minus) = T exactly
        if refine and self.lam is not None:
            for i, target in enumerate(tau_arr):
                out[i] = self._refine_t(float(target), float(out[i]), tol)
        return float(out[0]) if scalar else out

    def _refine_t(self, target: float, guess: float, tol: float) -> float:
        """Sharpen the interpolated inverse by bisection against the
        defining integral between the bracketing table nodes."""
        if target <= self.tau_minus:
            return self.T
        k = int(np.searchsorted(-self.tau_table, -target, side="right")) - 1
        k = min(max(k, 0), len(self.t_table) - 2)
        t_lo, t_hi = float(self.t_table[k]), float(self.t_table[k + 1])
        tau_hi_node = float(self.tau_table[k + 1])
        inv_lam = _inv_lam_fn(self.lam)

        def residual(t):
            return tau_hi_node + integrate(inv_lam, t, t_hi, tol=1e-14).value - target

        if residual(t_lo) * residual(t_hi) > 0:
            return guess
        return bisect(residual, t_lo, t_hi, rtol=1e-12)


def _inv_lam_fn(lam: Expression):
    lam_v = lam.lambdify(("t",))

    def fn(t):
        return 1.0 / lam_v(t)

    return fn


def build_tau(lam: Expression, T: float, tau_minus: float = 0.0,
              tol: float = 1e-12, n_nodes: int = 400,
              t_min: float | None = None) -> Reparametrization:
    """Tabulate tau(t) = tau_minus + int_t^T ds/lambda(s) on a geometric grid.

    tau_plus is the limit of tau(t) as t -> 0+: finite when int_0+ 1/lambda
    converges, +inf otherwise.
    """
    if t_min is None:
        t_min = T * 1e-8
    t_nodes = np.geomspace(t_min, T, n_nodes)
    lam_vals = lam.lambdify(("t",))(t_nodes)
    if not np.all(np.isfinite(lam_vals)):
        bad = float(t_nodes[np.flatnonzero(~np.isfinite(lam_vals))[0]])
        raise ReparamError(f"lambda not finite at t={bad!r}")
    if not np.all(lam_vals > 0.0):
        bad = float(t_nodes[np.flatnonzero(~(lam_vals > 0.0))[0]])
        raise ReparamError(f"lambda vanishes or is negative at t={bad!r}")
    inv_lam = _inv_lam_fn(lam)
    seg_tol = max(tol / n_nodes, 1e-15)
    taus = np.empty_like(t_nodes)
    taus[-1] = tau_minus
    for k in range(len(t_nodes) - 2, -1, -1):
        try:
            seg = integrate(inv_lam, float(t_nodes[k]), float(t_nodes[k + 1]),
                            tol=seg_tol)
        except IntegrandError as exc:
            raise ReparamError(f"quadrature failed on panel: {exc}") from exc
        if seg.diverged:
            raise ReparamError("divergent quadrature at an interior panel")
        taus[k] = taus[k + 1] + seg.value
    try:
        full = integrate_singular_left(inv_lam, T, tol=1e-10)
    except IntegrandError:
        # lambda not evaluable arbitrarily close to 0+ (e.g. float underflow
        # in a gauge ratio); the table is still valid above t_min
        full = None
    if full is None:
        tau_plus = math.nan
    elif full.converged:
        tau_plus = tau_minus + full.value
    elif full.diverged:
        tau_plus = math.inf
    else:
        raise ReparamError("could not classify int_0+ 1/lambda "
                           "(quadrature budget exhausted)")
    return Reparametrization(T=T, tau_minus=tau_minus, tau_plus=tau_plus,
                             t_table=t_nodes, tau_table=taus, lam=lam)


def t_of_tau(rep: Reparametrization, tau: float, refine: bool = True,
             tol: float = 1e-10) -> float:
    """Module-level convenience for the monotone-interpolated inverse."""
    return rep.t_of_tau(tau, refine=refine, tol=tol)


def verify_fixed_point(rep: Reparametrization, lam: Expression,
                       tol: float = 1e-9, n_tau: int = 50) -> float:
    """Max residual of t(tau) = int_tau^tau_plus lambda(t(s)) ds on a tau grid.

    Integrals are truncated at the tabulated horizon; the missing tail is
    exactly t at the horizon, at most T*1e-8 by construction.
    """
    tau_hi = rep.tau_horizon
    taus = np.linspace(rep.tau_minus, tau_hi, n_tau)
    lam_v = lam.lambdify(("t",))

    def integrand(s):
        return lam_v(rep.t_of_tau(s))

    worst = 0.0
    for tau in taus:
        res = integrate(integrand, float(tau), tau_hi, tol=min(tol * 1e-2, 1e-9))
        if res.diverged:
            raise ReparamError("divergent verification integral: "
                               "broken reparametrization")
        residual = abs(rep.t_of_tau(float(tau)) - res.value)
        worst = max(worst, residual)
    return worst


@dataclass
class TransformedField:
    """The transported vector field F(tau, y) = -lambda(t(tau)) f(t(tau), y)
    and weight alpha(tau) = v(t(tau))."""

    rep: Reparametrization
    f: Expression
    v: Expression
    lam: Expression
    bound_ok: bool = True
    worst_margin: float = math.inf
    witness: dict | None = None

    def F(self, tau, y):
        t = self.rep.t_of_tau(tau)
        lam_v = self.lam.lambdify(("t",))(np.asarray(t))
        f_v = self.f.lambdify(("t", "x"))(np.asarray(t), np.asarray(y))
        out = -lam_v * f_v
        return float(out) if np.isscalar(tau) and np.isscalar(y) else out

    def alpha(self, tau):
        t = self.rep.t_of_tau(tau)
        out = self.v.lambdify(("t",))(np.asarray(t))
        return float(out) if np.isscalar(tau) else out


def transform(f: Expression, v: Expression, lam: Expression,
              rep: Reparametrization, x_bound: float = 1.0,
              n_tau: int = 80, n_y: int = 41, tol: float = 1e-9) -> TransformedField:
    """Build the transformed field and validate |F(tau, y)| <= alpha(tau)
    on a (tau, y) grid; a violation indicates the source problem breaks
    the domination hypothesis."""
    field = TransformedField(rep=rep, f=f, v=v, lam=lam)
    taus = np.linspace(rep.tau_minus, rep.tau_horizon, n_tau)
    ys = np.linspace(-x_bound, x_bound, n_y)
    t_vals = rep.t_of_tau(taus)
    lam_vals = lam.lambdify(("t",))(t_vals)
    alpha_vals = v.lambdify(("t",))(t_vals)
    f_vals = f.lambdify(("t", "x"))(t_vals[:, None], ys[None, :])
    margins = alpha_vals[:, None] - np.abs(lam_vals[:, None] * f_vals)
    flat = int(np.argmin(margins.ravel()))
    i, j = np.unravel_index(flat, margins.shape)
    field.worst_margin = float(margins[i, j])
    field.bound_ok = bool(field.worst_margin >= -tol)
    if not field.bound_ok:
        field.witness = {"tau": float(taus[i]), "y": float(ys[j]),
                         "F": float(-lam_vals[i] * f_vals[i, j]),
                         "alpha": float(alpha_vals[i])}
    return field


def alpha_l1_check(rep: Reparametrization, v: Expression, lam: Expression,
                   tau: float, tol: float = 1e-9) -> float:
    """Residual of int_tau^tau_plus alpha(s) ds = int_0+^t(tau) v(w)/lambda(w) dw."""
    v_fn = v.lambdify(("t",))
    lam_fn = lam.lambdify(("t",))

    def alpha_fn(s):
        return v_fn(rep.t_of_tau(s))

    left = integrate(alpha_fn, float(tau), rep.tau_horizon, tol=min(tol * 1e-2, 1e-9))
    t_at = rep.t_of_tau(float(tau), refine=rep.lam is not None)
    right = integrate_singular_left(lambda w: v_fn(w) / lam_fn(w), t_at,
                                    tol=1e-11)
    if left.diverged or right.diverged:
        raise ReparamError("divergent side in the L1 identity check")
    return abs(left.value - right.value)


def exp_reparam_check(u: Expression, rep: Reparametrization,
                      c: float | None = None, tol: float = 1e-10,
                      n_tau: int = 50) -> float:
    """Max residual of u(t(tau)) = c * exp(-tau) on a tau grid.

    With lambda = u/u' the reparametrization is exactly exponential in the
    u-values; c defaults to u(T)*exp(tau_minus), which makes the identity
    exact at tau = tau_minus.
    """
    if c is None:
        c = u.evaluate({"t": rep.T}) * math.exp(rep.tau_minus)
    tau_hi = min(rep.tau_horizon, rep.tau_minus + 40.0)
    taus = np.linspace(rep.tau_minus, tau_hi, n_tau)
    worst = 0.0
    for tau in taus:
        t = rep.t_of_tau(float(tau), refine=rep.lam is not None, tol=tol)
        residual = abs(u.evaluate({"t": t}) - c * math.exp(-float(tau) + rep.tau_minus) *
                       math.exp(-rep.tau_minus))
        worst = max(worst, residual)
    return worst


# ---------------------------------------------------------------------------
# generalized reparametrization u(t(tau)) = c*exp(-tau) - 1/tau

def solve_tau_exp_root(c: float) -> float:
    """The positive root of tau * exp(tau) = 1/c (bracketing bisection)."""
    if not (c > 0.0):
        raise ValueError(f"c must be positive, got {c!r}")
    target = 1.0 / c

    def fn(tau):
        return tau * math.exp(tau) - target

    lo = 1e-300
    hi = 1.0
    while fn(hi) < 0.0:
        hi *= 2.0
        if hi > 1e308:
            raise ReparamError("no root of tau*exp(tau) = 1/c in range")
    return bisect(fn, lo, hi, rtol=1e-14)


@dataclass
class GeneralizedReparam:
    """Reparametrization extracted from u(t(tau)) = c*exp(-tau) - 1/tau."""

    rep: Reparametrization
    u: Expression
    c: float
    tau_plus_root: float     # root of tau*exp(tau) = 1/c
    tau_rhs_zero: float      # right end of the valid branch, where the rhs -> 0

    def rhs(self, tau: float) -> float:
        return self.c * math.exp(-tau) - 1.0 / tau


def generalized_reparam(u: Expression, c: float, T: float = 1.0,
                        tol: float = 1e-12, n_nodes: int = 300) -> GeneralizedReparam:
    """Extract t(tau) = u^{-1}(c*exp(-tau) - 1/tau) on the monotone-decreasing
    sub-domain where the right-hand side is positive and within u's range.

    The right-hand side h(tau) is positive only when c > e; for smaller c
    the construction is degenerate and an error is raised.  The table
    covers the decreasing branch of h ending where h crosses 0, which is
    where t(tau) -> 0.
    """
    root = solve_tau_exp_root(c)

    def h(tau):
        return c * math.exp(-tau) - 1.0 / tau

    scan = np.geomspace(1e-4, 1e4, 4096)
    h_vals = c * np.exp(-scan) - 1.0 / scan
    pos = np.flatnonzero(h_vals > 0.0)
    if pos.size == 0:
        raise DegenerateReparamError(
            f"degenerate generalized reparametrization: "
            f"c*exp(-tau) - 1/tau is never positive for c={c!r} "
            f"(requires c > e)")
    i0, i1 = int(pos[0]), int(pos[-1])
    # decreasing branch: from the max of h down to the right zero crossing
    k_max = i0 + int(np.argmax(h_vals[i0:i1 + 1]))
    tau_end = bisect(h, float(scan[i1]), float(scan[min(i1 + 1, len(scan) - 1)]),
                     rtol=1e-14)
    u_fn = u.evaluate
    u_max = u_fn({"t": T})
    h_at_peak = float(h_vals[k_max])
    if h_at_peak > u_max:
        tau_lo = bisect(lambda s: h(s) - u_max, float(scan[k_max]), tau_end,
                        rtol=1e-14)
    else:
        tau_lo = float(scan[k_max])
    if not (tau_lo < tau_end):
        raise DegenerateReparamError(
            "degenerate generalized reparametrization: empty valid tau-domain")

    t_floor = 1e-12 * T
    u_lo = u_fn({"t": t_floor})

    def u_inverse(target):
        # clamp away the last-bit overshoot from the tau_lo bisection
        target = min(max(target, u_lo), u_max)
        if target >= u_max:
            return T
        if target <= u_lo:
            return t_floor
        return bisect(lambda t: u_fn({"t": t}) - target, t_floor, T,
                      rtol=1e-13)

    t_start = u_inverse(h(tau_lo))
    t_targets = np.geomspace(t_start, t_start * 1e-8, n_nodes)
    taus = np.empty_like(t_targets)
    for i, ti in enumerate(t_targets):
        target_h = u_fn({"t": float(ti)})
        taus[i] = bisect(lambda s, g=target_h: h(s) - g, tau_lo, tau_end,
                         rtol=1e-14)
    taus[0] = tau_lo
    rep = Reparametrization(T=float(t_start), tau_minus=float(tau_lo),
                            tau_plus=float(tau_end),
                            t_table=t_targets[::-1].copy(),
                            tau_table=taus[::-1].copy(), lam=None)
    return GeneralizedReparam(rep=rep, u=u, c=float(c),
                              tau_plus_root=float(root),
                              tau_rhs_zero=float(tau_end))


def check_relaxed_bound(p: ProblemSpec, grep: GeneralizedReparam,
                        c: CheckConfig | None = None) -> CriterionReport:
    """Sampled check of |f(t,x)| <= u'(t)/(u(t) - 1/tau(t)^2) * omega(|x|)
    on the generalized reparametrization's domain.

    The denominator may change sign; the check is run per sign sub-domain
    (the bound is vacuous where the denominator is non-positive, and those
    samples are reported, not checked).  The report's data carries the
    pointwise ratio between the relaxed bound and the classical u'/u bound.
    """
    c = c or CheckConfig()
    if p.f is None or p.u is None or p.omega is None:
        raise ValueError("relaxed-bound check requires f, u and omega")
    rep = grep.rep
    tg = np.geomspace(rep.t_min, rep.T, c.n_t)
    xg = c.x_grid(p.x_bound)
    tau_vals = np.asarray(rep.tau_of_t(tg))
    u_vals = p.u.lambdify(("t",))(tg)
    du_vals = p.u.diff("t").lambdify(("t",))(tg)
    om_abs = p.omega.lambdify(("r",))(np.abs(xg))
    denom = u_vals - 1.0 / tau_vals**2
    signs = np.sign(denom)
    f = p.f.lambdify(("t", "x"))
    f_abs = np.abs(f(tg[:, None], xg[None, :]))

    hyps = []
    # contiguous runs of constant denominator sign
    boundaries = np.flatnonzero(np.diff(signs) != 0) + 1
    runs = np.split(np.arange(len(tg)), boundaries)
    domain_id = 0
    excluded = 0
    for run in runs:
        if run.size == 0:
            continue
        if signs[run[0]] <= 0:
            excluded += run.size
            continue
        idx = run
        rhs = (du_vals[idx] / denom[idx])[:, None] * om_abs[None, :]
        hyp = _relaxed_grid_hypothesis(
            f"relaxed_bound_domain{domain_id}", f_abs[idx], rhs,
            tg[idx], xg, c.tol)
        hyps.append(hyp)
        domain_id += 1
    if not hyps:
        hyps.append(Hypothesis(
            "relaxed_bound_domain0", False, float("nan"),
            {"kind": "domain_error", "t": float(tg[0]), "x": 0.0},
            notes="denominator u - 1/tau^2 is non-positive on the whole domain"))
    notes = (f"{excluded} of {len(tg)} t-samples excluded "
             "(denominator u - 1/tau^2 <= 0; bound vacuous there)")
    ratio = np.where(denom > 0, u_vals / denom, np.nan)
    data = {
        "t": [float(x) for x in tg],
        "bound_ratio_relaxed_over_classical": [
            None if not np.isfinite(r) else float(r) for r in ratio],
    }
    return CriterionReport("relaxed_bound", hyps, notes=notes, data=data)


def _relaxed_grid_hypothesis(name, lhs, rhs, tgrid, xgrid, tol) -> Hypothesis:
    from .criteria import _grid_bound_hypothesis
    return _grid_bound_hypothesis(name, lhs, rhs, tgrid, xgrid, tol)
