"""Closed convex cones in R^n and their Euclidean projections.

Every cone carries a ``polar`` flag, so a ConeSpec describes either the base
cone K of its kind or the polar cone K^o.  Each projection is written in closed
form for both sides; the polar side is never obtained as ``x - P_K x``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .space import UnsupportedGeometryError, UsageError

CONE_KINDS = ("nonneg_orthant", "second_order", "linear_span_subspace", "halfspace_cone")


@dataclass(frozen=True, eq=False)
class ConeSpec:
    """A closed convex cone of one of the supported kinds.

    ``data`` is the generator matrix (rows span V) for ``linear_span_subspace``
    and the outward normal ``a`` of {x : <a, x> <= 0} for ``halfspace_cone``.
    The second-order cone is {(t, v) : ||v||_2 <= t} with t the first coordinate.
    """

    kind: str
    dim: int
    data: np.ndarray | None = None
    polar: bool = False
    _basis: np.ndarray | None = field(default=None, repr=False)
    _complement: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in CONE_KINDS:
            raise UnsupportedGeometryError(f"unsupported cone kind {self.kind!r}")
        if self.dim < 1:
            raise UsageError("cone dimension must be >= 1")
        if self.kind == "second_order" and self.dim < 2:
            raise UsageError("second-order cone needs dim >= 2")
        if self.kind == "linear_span_subspace":
            gens = np.atleast_2d(np.asarray(self.data, dtype=float))
            if gens.shape[1] != self.dim:
                raise UsageError("subspace generators must have length dim")
            u, s, vt = np.linalg.svd(gens, full_matrices=True)
            rank = int(np.sum(s > 1e-12 * max(1.0, s.max(initial=0.0))))
            object.__setattr__(self, "data", gens)
            object.__setattr__(self, "_basis", vt[:rank].T)
            object.__setattr__(self, "_complement", vt[rank:].T)
        elif self.kind == "halfspace_cone":
            a = np.asarray(self.data, dtype=float).reshape(-1)
            if a.size != self.dim or not np.any(a):
                raise UsageError("halfspace cone needs a nonzero normal of length dim")
            object.__setattr__(self, "data", a)

    @classmethod
    def orthant(cls, n):
        return cls("nonneg_orthant", n)

    @classmethod
    def soc(cls, n):
        return cls("second_order", n)

    @classmethod
    def subspace(cls, generators):
        gens = np.atleast_2d(np.asarray(generators, dtype=float))
        return cls("linear_span_subspace", gens.shape[1], gens)

    @classmethod
    def halfspace(cls, normal):
        a = np.asarray(normal, dtype=float).reshape(-1)
        return cls("halfspace_cone", a.size, a)

    def polar_cone(self) -> "ConeSpec":
        return ConeSpec(self.kind, self.dim, self.data, not self.polar,
                        self._basis, self._complement)

    @property
    def label(self) -> str:
        return f"{self.kind}{'_polar' if self.polar else ''}"

    def project(self, x) -> np.ndarray:
        """Euclidean projection onto this cone (last axis, batch friendly)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise UsageError(f"cone in R^{self.dim} got a vector of length {x.shape[-1]}")
        if self.kind == "nonneg_orthant":
            return np.minimum(x, 0.0) if self.polar else np.maximum(x, 0.0)
        if self.kind == "second_order":
            # polar of the self-dual SOC is -SOC
            return -_project_soc(-x) if self.polar else _project_soc(x)
        if self.kind == "linear_span_subspace":
            q = self._complement if self.polar else self._basis
            return (x @ q) @ q.T
        a = self.data
        s = np.maximum(x @ a, 0.0)[..., None] * (a / (a @ a))
        return s if self.polar else x - s

    def project_weighted(self, x, weights) -> np.ndarray:
        """argmin_{y in cone} sum_i w_i (y_i - x_i)^2 for positive weights w.

        Closed form for the orthant; a scalar root find for the SOC.  Other
        kinds are not separable in any useful sense and are rejected.
        """
        x = np.asarray(x, dtype=float)
        w = np.broadcast_to(np.asarray(weights, dtype=float), x.shape)
        if self.kind == "nonneg_orthant":
            return self.project(x)
        if self.kind != "second_order":
            raise UnsupportedGeometryError(f"no weighted projection onto a {self.kind} cone")
        flat = x.reshape(-1, self.dim)
        wf = w.reshape(-1, self.dim)
        sign = -1.0 if self.polar else 1.0
        out = np.array([sign * _project_soc_weighted(sign * z, ww) for z, ww in zip(flat, wf)])
        return out.reshape(x.shape)

    def distance(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.project(x), axis=-1)

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.distance(x) <= tol * (1.0 + np.linalg.norm(x, axis=-1))

    def witness(self) -> np.ndarray:
        """A point in the relative interior."""
        n = self.dim
        if self.kind == "nonneg_orthant":
            w = np.ones(n)
        elif self.kind == "second_order":
            w = np.zeros(n)
            w[0] = 1.0
        elif self.kind == "linear_span_subspace":
            q = self._complement if self.polar else self._basis
            w = q.sum(axis=1) if q.shape[1] else np.zeros(n)
            return w
        else:
            a = self.data
            return a.copy() if self.polar else -a.copy()
        return -w if self.polar else w

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "dim": self.dim, "polar": self.polar}
        if self.data is not None:
            d["data"] = np.asarray(self.data).tolist()
        return d


def _project_soc_weighted(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    # KKT: y0 = w0 z0 / (w0 - mu), y_v = w_v z_v / (w_v + mu), |y_v| = y0, mu > 0
    z0, zv = z[0], z[1:]
    w0, wv = w[0], w[1:]
    if np.linalg.norm(zv) <= z0:
        return z.copy()
    if np.linalg.norm(wv * zv) <= -w0 * z0:
        return np.zeros_like(z)

    def yv(mu):
        return wv * zv / (wv + mu)

    def F(mu):
        return (w0 - mu) * np.linalg.norm(yv(mu)) - w0 * z0

    if z0 == 0.0:
        mu = w0
    elif z0 > 0.0:
        mu = brentq(F, 0.0, w0, xtol=1e-15 * w0, rtol=4 * np.finfo(float).eps)
    else:
        hi = 2.0 * w0
        while F(hi) > 0.0:
            hi *= 2.0
        mu = brentq(F, w0, hi, xtol=1e-15 * w0, rtol=4 * np.finfo(float).eps)
    v = yv(mu)
    return np.concatenate([[np.linalg.norm(v)], v])


def _project_soc(x: np.ndarray) -> np.ndarray:
    t = x[..., :1]
    v = x[..., 1:]
    r = np.linalg.norm(v, axis=-1, keepdims=True)
    safe_r = np.where(r > 0, r, 1.0)
    coef = 0.5 * (1.0 + t / safe_r)
    boundary = np.concatenate([coef * r, coef * v], axis=-1)
    out = np.where(r <= -t, 0.0, boundary)
    return np.where(r <= t, x, out)
