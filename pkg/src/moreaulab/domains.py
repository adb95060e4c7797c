"""Domain descriptors for Legendre functions and for the convex catalog.

Only the shapes the catalogs actually produce are modelled: the whole space,
the positive orthant (open or closed), boxes with possibly infinite bounds
(singletons and orthant translates included), cones, and affine sets.  Minkowski
sums and differences are computed exactly for box-like descriptors; anything
else is reported as unsupported instead of being guessed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cones import ConeSpec
from .space import UnsupportedGeometryError

DOMAIN_KINDS = ("full_space", "open_positive_orthant", "closed_positive_orthant",
                "box", "cone", "affine")


@dataclass(frozen=True, eq=False)
class DomainSpec:
    kind: str
    dim: int
    interior_point: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    cone: ConeSpec | None = None
    # affine sets: point + span(columns of basis)
    basis: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise UnsupportedGeometryError(f"unknown domain kind {self.kind!r}")
        w = np.asarray(self.interior_point, dtype=float).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "interior_point", w)
        if self.kind == "box":
            lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dim,)).copy()
            hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dim,)).copy()
            if np.any(lo > hi):
                raise ValueError("box lower bound exceeds upper bound")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
        if not self.relative_interior_contains(w):
            raise ValueError(f"witness {w} is not interior to the {self.kind} domain")

    # constructors -----------------------------------------------------------
    @classmethod
    def full(cls, n):
        return cls("full_space", n, np.zeros(n))

    @classmethod
    def positive_orthant(cls, n, closed=True):
        kind = "closed_positive_orthant" if closed else "open_positive_orthant"
        return cls(kind, n, np.ones(n))

    @classmethod
    def box(cls, lower, upper):
        lo = np.asarray(lower, dtype=float).reshape(-1)
        hi = np.broadcast_to(np.asarray(upper, dtype=float), lo.shape)
        mid = np.where(np.isfinite(lo) & np.isfinite(hi), 0.5 * (lo + hi),
                       np.where(np.isfinite(lo), lo + 1.0,
                                np.where(np.isfinite(hi), hi - 1.0, 0.0)))
        return cls("box", lo.size, mid, lo, hi)

    @classmethod
    def point(cls, c):
        c = np.asarray(c, dtype=float).reshape(-1)
        return cls.box(c, c)

    @classmethod
    def of_cone(cls, cone: ConeSpec):
        if cone.kind == "nonneg_orthant":
            inf = np.full(cone.dim, np.inf)
            zero = np.zeros(cone.dim)
            return cls.box(-inf, zero) if cone.polar else cls.box(zero, inf)
        return cls("cone", cone.dim, cone.witness(), cone=cone)

    @classmethod
    def affine(cls, point, basis):
        basis = np.asarray(basis, dtype=float).reshape(len(point), -1)
        if basis.shape[1] == len(point):
            return cls.full(len(point))
        return cls("affine", len(point), np.asarray(point, dtype=float), basis=basis)

    # queries ----------------------------------------------------------------
    def bounds(self):
        """(lower, upper) for box-like kinds, else None."""
        n = self.dim
        if self.kind == "full_space":
            return np.full(n, -np.inf), np.full(n, np.inf)
        if self.kind in ("open_positive_orthant", "closed_positive_orthant"):
            return np.zeros(n), np.full(n, np.inf)
        if self.kind == "box":
            return self.lower, self.upper
        return None

    @property
    def is_full(self) -> bool:
        b = self.bounds()
        return b is not None and bool(np.all(np.isinf(b[0])) and np.all(np.isinf(b[1])))

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        scale = tol * (1.0 + np.max(np.abs(x), axis=-1))
        if self.kind == "open_positive_orthant":
            return np.all(x > 0, axis=-1)
        b = self.bounds()
        if b is not None:
            lo, hi = b
            return np.all((x >= lo - scale[..., None]) & (x <= hi + scale[..., None]), axis=-1)
        if self.kind == "cone":
            return self.cone.contains(x, tol)
        r = x - self.interior_point
        proj = (r @ np.linalg.pinv(self.basis).T) @ self.basis.T
        return np.linalg.norm(r - proj, axis=-1) <= scale

    def interior_contains(self, x) -> np.ndarray:
        """Membership in the topological interior (full-dimensional sense)."""
        x = np.asarray(x, dtype=float)
        b = self.bounds()
        if b is not None:
            lo, hi = b
            return np.all((x > lo) & (x < hi), axis=-1)
        if self.kind == "cone" and self.cone.kind == "second_order":
            s = -x if self.cone.polar else x
            return np.linalg.norm(s[..., 1:], axis=-1) < s[..., 0]
        if self.kind == "cone" and self.cone.kind == "halfspace_cone" and not self.cone.polar:
            return x @ self.cone.data < 0
        return np.zeros(x.shape[:-1], dtype=bool)

    def relative_interior_contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if self.kind == "box":
            flat = self.lower == self.upper
            inside = (x > self.lower) & (x < self.upper)
            return bool(np.all(np.where(flat, x == self.lower, inside)))
        if self.kind in ("cone", "affine"):
            if self.kind == "cone" and self.cone.kind in ("linear_span_subspace",):
                return bool(self.cone.contains(x, 1e-12))
            if self.kind == "affine":
                return bool(self.contains(x, 1e-12))
            return bool(self.interior_contains(x)) or (
                self.cone.kind == "halfspace_cone" and self.cone.polar
                and bool(self.cone.contains(x, 1e-12)) and bool(np.any(x)))
        return bool(self.interior_contains(x))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "dim": self.dim}
        if self.kind == "box":
            d["lower"] = [_jsonable(v) for v in self.lower]
            d["upper"] = [_jsonable(v) for v in self.upper]
        if self.cone is not None:
            d["cone"] = self.cone.label
        return d


def _jsonable(v: float):
    return v if np.isfinite(v) else ("inf" if v > 0 else "-inf")


def _require_bounds(d: DomainSpec):
    b = d.bounds()
    if b is None:
        raise UnsupportedGeometryError(
            f"domain arithmetic not implemented for a {d.kind} domain")
    return b


def sum_interior_contains(d1: DomainSpec, d2: DomainSpec, x) -> bool:
    """Whether x lies in int(d1 + d2)."""
    if d1.is_full or d2.is_full:
        return True
    lo1, hi1 = _require_bounds(d1)
    lo2, hi2 = _require_bounds(d2)
    x = np.asarray(x, dtype=float)
    return bool(np.all((x > lo1 + lo2) & (x < hi1 + hi2)))


def interior_contained_in_sum(d1: DomainSpec, d2: DomainSpec) -> bool:
    """Whether int d1 is a subset of int(d1 + d2)."""
    if d1.is_full or d2.is_full:
        return True
    lo1, hi1 = _require_bounds(d1)
    lo2, hi2 = _require_bounds(d2)
    with np.errstate(invalid="ignore"):
        ok_lo = np.isinf(lo1) | (lo2 <= 0)
        ok_hi = np.isinf(hi1) | (hi2 >= 0)
    return bool(np.all(ok_lo & ok_hi))


def zero_in_interior_of_difference(d1: DomainSpec, d2: DomainSpec):
    """Machine check of 0 in int(d1 - d2); None when the shapes are not box-like.

    In finite dimension the strong relative interior is the relative interior;
    a full-dimensional interior witness certifies it.
    """
    if d1.is_full or d2.is_full:
        return True
    b1, b2 = d1.bounds(), d2.bounds()
    if b1 is None or b2 is None:
        return None
    lo = b1[0] - b2[1]
    hi = b1[1] - b2[0]
    return bool(np.all((lo < 0) & (hi > 0)))
