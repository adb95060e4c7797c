"""Catalog of functions in Gamma_0(R^n): values, conjugates, Euclidean proximity.

Every entry knows its conjugate as another catalog entry, and every Euclidean
prox (including the one of the conjugate entry) is an independent closed form.
That keeps the Moreau identity prox_phi + prox_phi* = Id a real check rather
than a tautology.

Indicator functions accept points within ``FEAS_TOL * (1 + ||x||)`` of their
set: iterates of the dual side of a decomposition only reach a constraint set
up to rounding.
"""
from __future__ import annotations

import numpy as np

from .cones import ConeSpec
from .domains import DomainSpec
from .space import (DEFAULT_TOL, DualVector, PrimalVector, ToleranceProfile,
                    UnsupportedGeometryError, UsageError, dual, primal)

FEAS_TOL = 1e-9


def _feas_scale(x):
    return FEAS_TOL * (1.0 + np.max(np.abs(x), axis=-1))


def _indicator(mask):
    return np.where(mask, 0.0, np.inf)


class ConvexFunction:
    """Base class for catalog entries (raw array methods along the last axis).

    Entries with ``diagonal_metric`` accept a vector of per-coordinate steps in
    :meth:`prox` (the prox in the metric diag(1/gamma)), which lets the solvers
    run with a diagonal metric.  Separable entries get this for free.
    """

    name = "convex"
    separable = False
    diagonal_metric = False
    space = "primal"

    def __init__(self, dim: int, dom: DomainSpec, bounded_below: bool,
                 parameters: dict | None = None):
        if dim < 1:
            raise UsageError("dimension must be >= 1")
        self.dim = int(dim)
        self.dom = dom
        self.bounded_below = bool(bounded_below)
        self.parameters = dict(parameters or {})

    def value(self, x):
        raise NotImplementedError

    def prox(self, x, gamma):
        """argmin_y gamma*phi(y) + 1/2 ||x - y||^2."""
        raise NotImplementedError

    def _conjugate(self) -> "ConvexFunction":
        raise NotImplementedError

    def conjugate(self) -> "ConvexFunction":
        c = self.__dict__.get("_conj")
        if c is None:
            c = self._conjugate()
            c.space = "dual" if self.space == "primal" else "primal"
            c._conj = self
            self._conj = c
        return c

    def conj_value(self, u):
        return self.conjugate().value(u)

    def describe(self) -> dict:
        return {"name": self.name, "dim": self.dim, "space": self.space,
                "bounded_below": self.bounded_below, "dom": self.dom.to_dict(),
                "parameters": {k: (v.to_dict() if isinstance(v, ConeSpec)
                                   else np.asarray(v).tolist())
                               for k, v in self.parameters.items()}}

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class ZeroFunction(ConvexFunction):
    name = "zero"
    separable = True

    def __init__(self, dim):
        super().__init__(dim, DomainSpec.full(dim), True)

    def value(self, x):
        return np.zeros(np.shape(x)[:-1])

    def prox(self, x, gamma):
        return np.array(x, dtype=float)

    def _conjugate(self):
        return PointIndicator(np.zeros(self.dim))


class LinearFunction(ConvexFunction):
    """phi(x) = <x, c>."""

    name = "linear"
    separable = True

    def __init__(self, c):
        c = np.asarray(c, dtype=float).reshape(-1)
        super().__init__(c.size, DomainSpec.full(c.size), not np.any(c), {"c": c})
        self.c = c

    def value(self, x):
        return np.asarray(x, dtype=float) @ self.c

    def prox(self, x, gamma):
        return np.asarray(x, dtype=float) - gamma * self.c

    def _conjugate(self):
        return PointIndicator(self.c)


class PointIndicator(ConvexFunction):
    """Indicator of the singleton {c}."""

    name = "point_indicator"
    separable = True

    def __init__(self, c):
        c = np.asarray(c, dtype=float).reshape(-1)
        super().__init__(c.size, DomainSpec.point(c), True, {"c": c})
        self.c = c

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return _indicator(np.max(np.abs(x - self.c), axis=-1) <= _feas_scale(x))

    def prox(self, x, gamma):
        return np.broadcast_to(self.c, np.shape(x)).copy()

    def _conjugate(self):
        if not np.any(self.c):
            return ZeroFunction(self.dim)
        return LinearFunction(self.c)


class L1Norm(ConvexFunction):
    """phi(x) = lam * ||x||_1."""

    name = "l1"
    separable = True

    def __init__(self, dim, lam=1.0):
        lam = float(lam)
        if lam <= 0:
            raise UsageError("l1 weight must be positive")
        super().__init__(dim, DomainSpec.full(dim), True, {"lam": lam})
        self.lam = lam

    def value(self, x):
        return self.lam * np.sum(np.abs(np.asarray(x, dtype=float)), axis=-1)

    def prox(self, x, gamma):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * np.maximum(np.abs(x) - gamma * self.lam, 0.0)

    def _conjugate(self):
        return BoxIndicator(-self.lam * np.ones(self.dim), self.lam * np.ones(self.dim))


class BoxIndicator(ConvexFunction):
    """Indicator of [a, b] (componentwise, a <= b)."""

    name = "box"
    separable = True

    def __init__(self, a, b):
        a = np.asarray(a, dtype=float).reshape(-1)
        b = np.broadcast_to(np.asarray(b, dtype=float), a.shape).copy()
        if np.any(a > b):
            raise UsageError("box needs a <= b")
        super().__init__(a.size, DomainSpec.box(a, b), True, {"a": a, "b": b})
        self.a, self.b = a, b

    def value(self, x):
        x = np.asarray(x, dtype=float)
        s = _feas_scale(x)[..., None]
        return _indicator(np.all((x >= self.a - s) & (x <= self.b + s), axis=-1))

    def prox(self, x, gamma):
        return np.clip(np.asarray(x, dtype=float), self.a, self.b)

    def _conjugate(self):
        return BoxSupport(self.a, self.b)


class BoxSupport(ConvexFunction):
    """Support function of [a, b]: sum_i max(a_i u_i, b_i u_i)."""

    name = "box_support"
    separable = True

    def __init__(self, a, b):
        a = np.asarray(a, dtype=float).reshape(-1)
        b = np.broadcast_to(np.asarray(b, dtype=float), a.shape).copy()
        super().__init__(a.size, DomainSpec.full(a.size),
                         bool(np.all((a <= 0) & (b >= 0))), {"a": a, "b": b})
        self.a, self.b = a, b

    def value(self, u):
        u = np.asarray(u, dtype=float)
        return np.sum(np.maximum(self.a * u, self.b * u), axis=-1)

    def prox(self, u, gamma):
        # slope b on u > 0, slope a on u < 0, kink at 0
        u = np.asarray(u, dtype=float)
        up = u - gamma * self.b
        down = u - gamma * self.a
        return np.where(up > 0, up, np.where(down < 0, down, 0.0))

    def _conjugate(self):
        return BoxIndicator(self.a, self.b)


class ConeIndicator(ConvexFunction):
    """Indicator of a closed convex cone; its conjugate is the polar indicator."""

    name = "cone_indicator"

    def __init__(self, cone: ConeSpec):
        super().__init__(cone.dim, DomainSpec.of_cone(cone), True, {"cone": cone})
        self.cone = cone
        self.separable = cone.kind == "nonneg_orthant"
        self.diagonal_metric = cone.kind in ("nonneg_orthant", "second_order")
        self.name = {"nonneg_orthant": "orthant", "second_order": "soc",
                     "linear_span_subspace": "subspace",
                     "halfspace_cone": "halfspace"}[cone.kind]
        if cone.polar:
            self.name += "_polar"

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return _indicator(self.cone.contains(x, FEAS_TOL))

    def prox(self, x, gamma):
        if np.ndim(gamma) and self.cone.kind == "second_order":
            return self.cone.project_weighted(x, 1.0 / np.asarray(gamma, dtype=float))
        return self.cone.project(x)

    def _conjugate(self):
        return ConeIndicator(self.cone.polar_cone())


def _psd_parts(Q):
    Q = np.array(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise UsageError("quadratic needs a square matrix")
    if not np.allclose(Q, Q.T, atol=1e-12 * max(1.0, np.abs(Q).max())):
        raise UsageError("quadratic matrix must be symmetric")
    Q = 0.5 * (Q + Q.T)
    w, V = np.linalg.eigh(Q)
    if w[0] < -1e-12 * max(1.0, abs(w[-1])):
        raise UsageError("quadratic matrix must be positive semidefinite")
    w = np.where(w > 1e-12 * max(1.0, abs(w[-1])), w, 0.0)
    return Q, w, V


class Quadratic(ConvexFunction):
    """phi(x) = 1/2 <x, Q x> + <x, c> with Q positive semidefinite."""

    name = "quadratic"

    def __init__(self, Q, c=None):
        Q, w, V = _psd_parts(Q)
        n = Q.shape[0]
        c = np.zeros(n) if c is None else np.asarray(c, dtype=float).reshape(-1)
        # bounded below iff c lies in range(Q)
        cv = V.T @ c
        bb = bool(np.all(np.abs(cv[w == 0]) <= 1e-12 * (1 + np.abs(c).max())))
        super().__init__(n, DomainSpec.full(n), bb, {"Q": Q, "c": c})
        self.Q, self.c, self._w, self._V = Q, c, w, V

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(x * (x @ self.Q), axis=-1) + x @ self.c

    def prox(self, x, gamma):
        rhs = np.asarray(x, dtype=float) - gamma * self.c
        return ((rhs @ self._V) / (1.0 + gamma * self._w)) @ self._V.T

    def _conjugate(self):
        return QuadraticConjugate(self.Q, self.c)


class QuadraticConjugate(ConvexFunction):
    """1/2 <u - c, Q^+ (u - c)> on c + range(Q), +inf elsewhere."""

    name = "quadratic_conjugate"

    def __init__(self, Q, c):
        Q, w, V = _psd_parts(Q)
        c = np.asarray(c, dtype=float).reshape(-1)
        n = Q.shape[0]
        dom = DomainSpec.affine(c, V[:, w > 0])
        super().__init__(n, dom, True, {"Q": Q, "c": c})
        self.Q, self.c, self._w, self._V = Q, c, w, V

    def value(self, u):
        r = (np.asarray(u, dtype=float) - self.c) @ self._V
        pos = self._w > 0
        val = 0.5 * np.sum(r[..., pos] ** 2 / self._w[pos], axis=-1)
        off = np.sqrt(np.sum(r[..., ~pos] ** 2, axis=-1))
        return np.where(off <= _feas_scale(u), val, np.inf)

    def prox(self, u, gamma):
        r = (np.asarray(u, dtype=float) - self.c) @ self._V
        w = self._w
        scaled = np.where(w > 0, w / (w + gamma), 0.0) * r
        return self.c + scaled @ self._V.T

    def _conjugate(self):
        return Quadratic(self.Q, self.c)


def _cone_entry(kind):
    def build(dim=None, **kw):
        if kind == "nonneg_orthant":
            cone = ConeSpec.orthant(dim)
        elif kind == "second_order":
            cone = ConeSpec.soc(dim)
        elif kind == "linear_span_subspace":
            if "generators" not in kw:
                raise UsageError("subspace needs 'generators' (one vector per row)")
            cone = ConeSpec.subspace(kw["generators"])
        else:
            if "normal" not in kw:
                raise UsageError("halfspace needs 'normal'")
            cone = ConeSpec.halfspace(kw["normal"])
        if kw.get("polar"):
            cone = cone.polar_cone()
        return ConeIndicator(cone)
    return build


def _box_entry(dim=None, a=0.5, b=2.0, **kw):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0 and dim is not None:
        a = np.full(dim, float(a))
    return BoxIndicator(a, np.broadcast_to(np.asarray(b, dtype=float), a.shape))


def _vec(v, dim):
    if v is None:
        if dim is None:
            raise UsageError("vector parameter missing and no dimension given")
        # deterministic default: sin(1), sin(2), ...
        return np.sin(np.arange(1, dim + 1, dtype=float))
    v = np.asarray(v, dtype=float)
    return np.full(dim, float(v)) if v.ndim == 0 else v


PHIS = {
    "zero": lambda dim=None, **kw: ZeroFunction(dim),
    "linear": lambda dim=None, c=None, **kw: LinearFunction(_vec(c, dim)),
    "l1": lambda dim=None, lam=1.0, **kw: L1Norm(dim, lam),
    "orthant": _cone_entry("nonneg_orthant"),
    "soc": _cone_entry("second_order"),
    "subspace": _cone_entry("linear_span_subspace"),
    "halfspace": _cone_entry("halfspace_cone"),
    "box": _box_entry,
    "quadratic": lambda dim=None, Q=None, c=None, **kw: Quadratic(Q, c),
}


def make_phi(name: str, dim: int | None = None, **params) -> ConvexFunction:
    try:
        factory = PHIS[name]
    except KeyError:
        raise KeyError(f"unknown convex function {name!r}") from None
    return factory(dim=dim, **params)


# typed front door ------------------------------------------------------------

def _coords(phi: ConvexFunction, x, conj=False):
    primal_side = (phi.space == "primal") != conj
    return (primal(x) if primal_side else dual(x)).coords


def eval_phi(phi: ConvexFunction, x) -> float:
    return float(phi.value(_coords(phi, x)))


def eval_conj_phi(phi: ConvexFunction, xstar) -> float:
    return float(phi.conj_value(_coords(phi, xstar, conj=True)))


def euclid_prox(phi: ConvexFunction, x, gamma: float = 1.0):
    """Moreau's proximity operator of gamma*phi."""
    if gamma <= 0:
        raise UsageError("gamma must be positive")
    out = phi.prox(_coords(phi, x), float(gamma))
    return PrimalVector(out) if phi.space == "primal" else DualVector(out)


def fy_gap_raw(phi: ConvexFunction, x, xstar, tol: ToleranceProfile = DEFAULT_TOL) -> float:
    """phi(x) + phi*(x*) - <x, x*> on raw arrays (see fenchel_young_gap)."""
    a = float(phi.value(x))
    if not np.isfinite(a):
        return np.inf
    b = float(phi.conj_value(xstar))
    if not np.isfinite(b):
        return np.inf
    inner = float(np.dot(x, xstar))
    gap = a + b - inner
    if gap >= 0:
        return gap
    # rounding (and the indicator feasibility band) can push it slightly negative
    if gap >= -tol.value_tol * (1.0 + abs(a) + abs(inner)):
        return 0.0
    return abs(gap)


def fenchel_young_gap(phi: ConvexFunction, x, xstar,
                      tol: ToleranceProfile = DEFAULT_TOL) -> float:
    """phi(x) + phi*(x*) - <x, x*>, a nonnegative certificate of x* in d phi(x).

    +inf when either value is +inf.  Small negative values from rounding are
    clipped to 0; a negative value beyond ``value_tol`` means the pair is
    inconsistent and is reported by its magnitude.
    """
    return fy_gap_raw(phi, _coords(phi, x), _coords(phi, xstar, conj=True), tol)


def polar_project(cone: ConeSpec, x) -> PrimalVector:
    """Euclidean projection onto the polar cone of ``cone``."""
    if not isinstance(cone, ConeSpec):
        raise UnsupportedGeometryError(f"expected a ConeSpec, got {type(cone).__name__}")
    return PrimalVector(cone.polar_cone().project(primal(x).coords))
