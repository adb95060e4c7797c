"""Composite minimization (smooth + prox-friendly) and brute-force grid oracles.

``minimize_composite`` is a forward-backward (proximal gradient) iteration with
backtracking.  When the problem supplies the Hessian diagonal of its smooth part
and the nonsmooth part is separable, the forward step is taken in that diagonal
metric; otherwise the metric is scalar and the step adapts by halving and
doubling.  Optimality is certified by the Fenchel-Young gap of the inclusion
-grad s(y) in d phi(y).

The grid oracles exist to provide ground truth in dimension <= 3; they share
no code with the iterative path.
"""
from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .convex import ConvexFunction, fy_gap_raw
from .space import DEFAULT_TOL, ToleranceProfile, UsageError

log = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 20000
BACKTRACK = 0.5
INITIAL_STEP = 1.0
# iterations without certificate progress before a flat objective counts as a stall
STALL_WINDOW = 10


class InfeasibleStartError(RuntimeError):
    """No starting point satisfies the interior guard with finite phi."""


class GridError(RuntimeError):
    """Every grid point of a brute-force search was infeasible."""


@dataclass
class CompositeProblem:
    """minimize smooth(y) + nonsmooth(y).

    ``curvature`` optionally returns the Hessian diagonal of the smooth part;
    ``fallback_inits`` are tried in order when ``init`` is not feasible.
    """

    smooth_value: Callable[[np.ndarray], float]
    smooth_grad: Callable[[np.ndarray], np.ndarray]
    nonsmooth: ConvexFunction
    interior_guard: Callable[[np.ndarray], bool]
    init: np.ndarray
    curvature: Callable[[np.ndarray], np.ndarray] | None = None
    fallback_inits: Sequence[np.ndarray] = field(default_factory=tuple)


@dataclass(frozen=True)
class SolveResult:
    minimizer: np.ndarray
    objective: float
    iterations: int
    gap_certificate: float
    converged: bool
    stop_reason: str = ""

    def to_dict(self) -> dict:
        return {"objective": self.objective, "iterations": self.iterations,
                "gap_certificate": self.gap_certificate, "converged": self.converged,
                "stop_reason": self.stop_reason}


def _feasible_start(prob: CompositeProblem) -> np.ndarray:
    for cand in itertools.chain([prob.init], prob.fallback_inits):
        if cand is None:
            continue
        y = np.array(cand, dtype=float)
        if (np.all(np.isfinite(y)) and prob.interior_guard(y)
                and np.isfinite(prob.nonsmooth.value(y))
                and np.isfinite(prob.smooth_value(y))):
            return y
    raise InfeasibleStartError("no interior-feasible starting point found")


def _metric(curv: np.ndarray) -> np.ndarray:
    d = np.asarray(curv, dtype=float)
    finite = np.isfinite(d) & (d > 0)
    if not np.any(finite):
        return np.ones_like(d)
    scale = d[finite].max()
    # the floor lifts vanishing curvature (t / D must stay finite) but must not
    # raise well-scaled coordinates when another coordinate's curvature is huge
    floor = min(1e-16 * scale, max(d[finite].min(), 1e-12))
    d = np.where(np.isfinite(d), d, np.inf)
    return np.clip(d, floor, 1e12 * scale)


def minimize_composite(prob: CompositeProblem, tol: ToleranceProfile = DEFAULT_TOL,
                       max_iter: int = DEFAULT_MAX_ITER) -> SolveResult:
    """Proximal gradient with backtracking; returns the best iterate.

    Stops when the Fenchel-Young certificate drops below ``tol.solve_tol``
    (relative) and both the last step and the prox-gradient residual
    |y - prox(y - grad s(y))| are below ``100 * tol.solve_tol`` (relative),
    when the objective has stopped moving at rounding level and the
    prox-gradient residual has stopped shrinking, or at ``max_iter``.  The
    iterate with the smallest certificate (ties broken by that residual) is
    returned; ``converged`` reports whether that certificate is
    within ``gap_tol``.
    """
    if max_iter < 1:
        raise UsageError("max_iter must be >= 1")
    phi = prob.nonsmooth
    y = _feasible_start(prob)
    s = float(prob.smooth_value(y))
    g = np.asarray(prob.smooth_grad(y), dtype=float)
    obj = s + float(phi.value(y))
    use_metric = prob.curvature is not None and (phi.separable or phi.diagonal_metric)
    t = np.full(y.size, INITIAL_STEP) if use_metric else INITIAL_STEP
    d_prev = np.zeros(y.size)
    t_max = 1.0 if use_metric else 1e8
    step_tol = 100.0 * tol.solve_tol
    slack = 10.0 * np.finfo(float).eps
    objs = deque([obj], maxlen=6)
    steps = deque(maxlen=6)
    reason = "max_iter"
    k = 0

    def certificate(y, g):
        return fy_gap_raw(phi, y, -g, tol)

    def stationarity(y, g):
        # finite even where the certificate is +inf (feasibility band missed)
        return float(np.max(np.abs(y - phi.prox(y - g, 1.0))))

    gap = certificate(y, g)
    res = stationarity(y, g)
    best = (gap, res, y, obj)
    best_res = res
    stale = 0
    for k in range(1, max_iter + 1):
        D = _metric(prob.curvature(y)) if use_metric else 1.0
        while True:
            step = t / D
            cand = phi.prox(y - step * g, step)
            if prob.interior_guard(cand):
                s_c = float(prob.smooth_value(cand))
                if np.isfinite(s_c):
                    d = cand - y
                    quad = float(np.sum(D * d * d / t))
                    model = s + float(g @ d) + 0.5 * quad
                    if s_c <= model + slack * (1.0 + abs(s)):
                        # value differences vanish below rounding; the gradient
                        # form of the same majorization stays informative
                        g_c = np.asarray(prob.smooth_grad(cand), dtype=float)
                        if float((g_c - g) @ d) <= quad * (1.0 + 1e-9) + 1e-300:
                            break
            t = t * BACKTRACK
            if np.max(t) < 1e-30:
                break
        if np.max(t) < 1e-30:
            reason = "step_underflow"
            break
        y, s, g = cand, s_c, g_c
        phi_y = float(phi.value(y))
        obj = s + phi_y
        objs.append(obj)
        step_len = float(np.max(np.abs(d)))
        steps.append(step_len)
        gap = certificate(y, g)
        res = stationarity(y, g)
        if res < 0.5 * best_res:
            best_res = res
            stale = 0
        else:
            stale += 1
        if (gap, res) <= best[:2]:
            best = (gap, res, y, obj)
        scale = 1.0 + abs(phi_y) + abs(float(y @ g))
        ytol = step_tol * (1.0 + np.max(np.abs(y)))
        if gap <= tol.solve_tol * scale and step_len <= ytol and res <= ytol:
            reason = "certificate"
            break
        if len(objs) == objs.maxlen:
            decrease = objs[0] - objs[-1]
            if (decrease <= slack * (1.0 + abs(obj)) and len(steps) == steps.maxlen
                    and steps[-1] >= 0.5 * steps[0] and stale >= STALL_WINDOW):
                reason = "stalled"
                break
        t = np.minimum(t / BACKTRACK, t_max)
        if use_metric:
            # a coordinate whose step reverses sign is overshooting its kink
            flip = d * d_prev < 0
            t = np.where(flip, 0.25 * t, t)
            d_prev = d
    gap, _, y, obj = best
    converged = bool(gap <= tol.gap_tol)
    y = np.array(y)
    y.setflags(write=False)
    log.debug("composite solve: %s after %d iterations, gap %.3g", reason, k, gap)
    return SolveResult(y, float(obj), k, float(gap), converged, reason)


# grid oracles ------------------------------------------------------------------

@dataclass(frozen=True)
class GridResult:
    """Grid argmin with its documented accuracy (half of ``spacing``)."""

    point: np.ndarray
    value: float
    spacing: np.ndarray
    on_boundary: bool

    @property
    def accuracy(self) -> np.ndarray:
        return 0.5 * self.spacing


def _evaluate(objective, pts: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(objective(pts), dtype=float)
        if vals.shape == (pts.shape[0],):
            return vals
    except Exception:  # objective not vectorized; fall back to a loop
        pass
    return np.array([float(objective(p)) for p in pts])


def _grid_argmin(objective, lo, hi, res):
    axes = [np.linspace(l, h, res) for l, h in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    vals = _evaluate(objective, pts)
    vals = np.where(np.isnan(vals), np.inf, vals)
    if not np.any(np.isfinite(vals)):
        raise GridError("all grid points are infeasible")
    # np.argmin returns the first (lowest lexicographic index) minimizer
    idx = int(np.argmin(vals))
    return pts[idx], float(vals[idx]), np.array([a[1] - a[0] if res > 1 else 0.0 for a in axes])


def brute_force_min(objective, box, resolution: int = 201) -> GridResult:
    """Grid minimization over ``box = (lower, upper)`` plus one 10x refinement.

    ``objective`` maps an (k, n) array of points to k values (+inf allowed); a
    scalar-only objective is also accepted and called point by point.
    """
    lo = np.atleast_1d(np.asarray(box[0], dtype=float))
    hi = np.atleast_1d(np.asarray(box[1], dtype=float))
    n = lo.size
    if n > 3:
        raise UsageError("brute_force_min supports n <= 3")
    if not (2 <= resolution <= 401):
        raise UsageError("resolution must be between 2 and 401")
    x0, _, h = _grid_argmin(objective, lo, hi, resolution)
    rlo = np.maximum(x0 - h, lo)
    rhi = np.minimum(x0 + h, hi)
    x1, v1, _ = _grid_argmin(objective, rlo, rhi, 21)
    fine = h / 10.0
    on_boundary = bool(np.any(np.isclose(x1, lo) | np.isclose(x1, hi)))
    return GridResult(x1, v1, fine, on_boundary)


@dataclass(frozen=True)
class ConjugateEstimate:
    value: float
    point: np.ndarray
    spacing: np.ndarray
    boundary_warning: bool


def numeric_conjugate(g, xstar, box, resolution: int = 201) -> ConjugateEstimate:
    """Grid estimate of g*(x*) = sup_x <x, x*> - g(x) over ``box`` (n <= 2).

    A maximizer on the box boundary raises ``boundary_warning``: the true
    supremum is probably outside the box (possibly +inf).
    """
    xstar = np.asarray(xstar, dtype=float).reshape(-1)
    if xstar.size > 2:
        raise UsageError("numeric_conjugate supports n <= 2")

    def neg(pts):
        return _evaluate(g, pts) - pts @ xstar

    res = brute_force_min(neg, box, resolution)
    return ConjugateEstimate(-res.value, res.point, res.spacing, res.on_boundary)
