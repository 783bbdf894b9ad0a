"""Primal-dual interior-point minimizer with a log barrier and BFGS Hessian.

Inequalities ``g(x) <= 0`` (here: the box bounds) are turned into
``g(x) + s = 0`` with slacks ``s > 0`` penalised by ``-c * sum(log s)``.
Each iteration takes a Newton step on the perturbed KKT conditions, with
the Hessian of the Lagrangian replaced by a BFGS estimate, and a
backtracking line search on the barrier merit function limited by the
fraction-to-boundary rule. The barrier parameter ``c`` is cut by a
constant factor whenever the current barrier problem is solved to a
tolerance proportional to ``c``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)


class MaxIterations(RuntimeError):
    pass


class LineSearchFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class Tolerances:
    constraint: float = 1e-6
    function: float = 1e-6
    step: float = 1e-10


@dataclass(frozen=True)
class SynthesisOptions:
    n_restarts: int = 100
    shortlist_cond_max: float = 1000.0
    shortlist_sigma_min: float = 1e-2
    rng_seed: int | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    fd_step: float | None = None
    max_iter: int = 300
    barrier_init: float = 0.1
    barrier_factor: float = 10.0
    barrier_min: float = 1e-9
    fraction_to_boundary: float = 0.995
    redraw_cap: int = 50
    f2_pool: int = 1
    polish: bool = True
    workers: int = 1

    def __post_init__(self):
        for name in ("n_restarts", "shortlist_cond_max", "shortlist_sigma_min", "max_iter",
                     "barrier_init", "barrier_factor", "barrier_min", "redraw_cap", "f2_pool", "workers"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.fd_step is not None and not self.fd_step > 0:
            raise ValueError("fd_step must be positive")


@dataclass
class BoxProblem:
    objective: Callable[[np.ndarray], float]
    lower: np.ndarray
    upper: np.ndarray
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    equality: Callable[[np.ndarray], np.ndarray] | None = None
    equality_jacobian: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != self.upper.shape or not np.all(self.lower < self.upper):
            raise ValueError("need lower < upper componentwise")


@dataclass
class OptResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    kkt_residual: float
    status: str
    n_evals: int = 0


def forward_difference(fun, x, f0=None, step=None, lower=None, upper=None):
    """Forward-difference gradient; steps flip sign rather than leave the box.

    The default step is ``sqrt(eps) * max(1, |x_i|)``.
    """
    x = np.asarray(x, dtype=float)
    f0 = fun(x) if f0 is None else f0
    base = math.sqrt(np.finfo(float).eps) if step is None else step
    grad = np.empty_like(x)
    for i in range(x.size):
        h = base * max(1.0, abs(x[i]))
        if upper is not None and x[i] + h >= upper[i]:
            h = -h
        xp = x.copy()
        xp[i] += h
        fp = fun(xp)
        if not np.isfinite(fp) and (lower is None or x[i] - abs(h) > lower[i]):
            h = -h
            xp[i] = x[i] + h
            fp = fun(xp)
        grad[i] = (fp - f0) / h
    return grad


def _fraction_to_boundary(v, dv, tau):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-tau * v[neg] / dv[neg])))


def interior_point_minimize(p: BoxProblem, x0, opts: SynthesisOptions = SynthesisOptions()) -> OptResult:
    lb, ub = p.lower, p.upper
    x = np.asarray(x0, dtype=float).copy()
    if not np.all((x > lb) & (x < ub)):
        raise ValueError("x0 must lie strictly inside the bounds")
    n = x.size
    tol = opts.tolerances
    tau = opts.fraction_to_boundary
    n_evals = 0

    def fun(v):
        nonlocal n_evals
        n_evals += 1
        val = float(p.objective(v))
        return val if np.isfinite(val) else math.inf

    def grad_at(v, fv):
        if p.gradient is not None:
            return np.asarray(p.gradient(v), dtype=float)
        return forward_difference(fun, v, fv, opts.fd_step, lb, ub)

    has_eq = p.equality is not None

    def eq_parts(v):
        h = np.atleast_1d(np.asarray(p.equality(v), dtype=float))
        if p.equality_jacobian is not None:
            Jh = np.atleast_2d(np.asarray(p.equality_jacobian(v), dtype=float))
        else:
            Jh = np.array([forward_difference(lambda w, k=k: float(np.atleast_1d(p.equality(w))[k]),
                                              v, h[k], opts.fd_step, lb, ub) for k in range(h.size)])
        return h, Jh

    f = fun(x)
    if not np.isfinite(f):
        return OptResult(x, f, 0, False, math.inf, "infeasible start", n_evals)
    g = grad_at(x, f)
    if not np.all(np.isfinite(g)):
        return OptResult(x, f, 0, False, math.inf, "gradient", n_evals)
    scale = max(1.0, float(np.max(np.abs(g))))
    c = opts.barrier_init
    # slacks of lower and upper bounds and their multipliers
    s_lo, s_up = x - lb, ub - x
    z_lo, z_up = c / s_lo, c / s_up
    if has_eq:
        h, Jh = eq_parts(x)
        lam = np.zeros(h.size)
    else:
        h, Jh, lam = np.zeros(0), np.zeros((0, n)), np.zeros(0)
    H = np.eye(n)
    first_update = True
    nu = 1.0

    def kkt_error(mu):
        stat = g - z_lo + z_up + Jh.T @ lam
        comp = np.concatenate([s_lo * z_lo - mu, s_up * z_up - mu])
        return max(float(np.max(np.abs(stat))) / scale,
                   float(np.max(np.abs(comp))),
                   float(np.max(np.abs(h), initial=0.0)) / max(tol.constraint / tol.function, 1.0))

    status = "max_iter"
    it = 0
    for it in range(1, opts.max_iter + 1):
        err0 = kkt_error(0.0)
        # the barrier must be well below the tolerance, else active bounds
        # are only met to within about c / z
        if (err0 <= tol.function and c <= 1e-2 * tol.function
                and np.max(np.abs(h), initial=0.0) <= tol.constraint):
            status = "kkt"
            break
        while c > opts.barrier_min and kkt_error(c) <= 10.0 * c:
            c = max(c / opts.barrier_factor, opts.barrier_min)

        sig_lo, sig_up = z_lo / s_lo, z_up / s_up
        W = H + np.diag(sig_lo + sig_up)
        rhs = -(g - c / s_lo + c / s_up)
        if has_eq:
            m = h.size
            K = np.block([[W, Jh.T], [Jh, np.zeros((m, m))]])
            try:
                sol = np.linalg.solve(K, np.concatenate([rhs - Jh.T @ lam, -h]))
            except np.linalg.LinAlgError:
                sol = np.full(n + m, np.nan)
            dx, lam_new = sol[:n], lam + sol[n:]
        else:
            try:
                dx = np.linalg.solve(W, rhs)
            except np.linalg.LinAlgError:
                dx = np.full(n, np.nan)
            lam_new = lam
        if not np.all(np.isfinite(dx)):
            if first_update:
                status = "linear_solve"
                break
            H = np.eye(n)
            first_update = True
            continue
        ds_lo, ds_up = dx, -dx
        dz_lo = c / s_lo - z_lo - sig_lo * ds_lo
        dz_up = c / s_up - z_up - sig_up * ds_up

        a_max = min(_fraction_to_boundary(s_lo, ds_lo, tau), _fraction_to_boundary(s_up, ds_up, tau))
        a_z = min(_fraction_to_boundary(z_lo, dz_lo, tau), _fraction_to_boundary(z_up, dz_up, tau))

        if has_eq:
            nu = max(nu, 1.1 * float(np.max(np.abs(lam_new), initial=0.0)))

        def merit(fv, slo, sup, hv):
            return fv - c * (np.sum(np.log(slo)) + np.sum(np.log(sup))) + nu * np.sum(np.abs(hv))

        phi0 = merit(f, s_lo, s_up, h)
        dphi = float((g - c / s_lo + c / s_up) @ dx) - nu * float(np.sum(np.abs(h)))
        if dphi >= 0 and not has_eq:
            # BFGS lost descent; restart from identity
            H = np.eye(n)
            first_update = True
            continue

        alpha = a_max
        accepted = False
        while alpha > 1e-16:
            xt = x + alpha * dx
            xt = np.minimum(np.maximum(xt, np.nextafter(lb, ub)), np.nextafter(ub, lb))
            ft = fun(xt)
            if np.isfinite(ft):
                ht = eq_parts(xt)[0] if has_eq else h
                if merit(ft, xt - lb, ub - xt, ht) <= phi0 + 1e-4 * alpha * dphi:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            if not first_update:
                H = np.eye(n)
                first_update = True
                continue
            status = "line_search"
            break

        step = xt - x
        g_new = grad_at(xt, ft)
        if not np.all(np.isfinite(g_new)):
            x, f = xt, ft
            status = "gradient"
            break
        x, f = xt, ft
        s_lo, s_up = x - lb, ub - x
        z_lo = z_lo + a_z * dz_lo
        z_up = z_up + a_z * dz_up
        # keep multipliers consistent with the barrier (kappa_sigma safeguard)
        z_lo = np.clip(z_lo, c / (1e10 * s_lo), 1e10 * c / s_lo)
        z_up = np.clip(z_up, c / (1e10 * s_up), 1e10 * c / s_up)
        lam = lam_new
        if has_eq:
            h, Jh = eq_parts(x)

        y = g_new - g
        g = g_new
        sy = float(step @ y)
        Hs = H @ step
        sHs = float(step @ Hs)
        if first_update and sy > 0:
            H = (float(y @ y) / sy) * np.eye(n)
            Hs = H @ step
            sHs = float(step @ Hs)
            first_update = False
        if sHs > 0 and np.all(np.isfinite(y)):
            # Powell damping keeps H positive definite
            if sy < 0.2 * sHs:
                theta = 0.8 * sHs / (sHs - sy)
                y = theta * y + (1 - theta) * Hs
                sy = float(step @ y)
            H_new = H + np.outer(y, y) / sy - np.outer(Hs, Hs) / sHs
            if np.all(np.isfinite(H_new)):
                H = H_new

        if np.linalg.norm(step) <= tol.step * (1.0 + np.linalg.norm(x)):
            status = "step"
            break

    err = kkt_error(0.0)
    converged = status in ("kkt", "step")
    log.debug("ipm %s after %d iterations, f=%.6g, kkt=%.2e", status, it, f, err)
    return OptResult(x, f, it, converged, err, status, n_evals)
