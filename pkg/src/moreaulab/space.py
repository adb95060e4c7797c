"""Primal/dual vectors on R^n, the canonical pairing, l_p norms and tolerances.

The ambient space is R^n with a selectable norm. Dual vectors live in the same
coordinate basis and the pairing is the dot product, so all of the geometry is
carried by the duality mapping and the Legendre functions built on top.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np


class UsageError(ValueError):
    """Raised on dimension or role mismatches in the public API."""


class UnsupportedGeometryError(ValueError):
    """Raised for norms or cones the library does not model."""


def _frozen_coords(coords) -> np.ndarray:
    arr = np.array(coords, dtype=float).reshape(-1)
    if arr.size < 1:
        raise UsageError("vectors need dimension n >= 1")
    if not np.all(np.isfinite(arr)):
        raise UsageError("vector entries must be finite")
    arr.setflags(write=False)
    return arr


class _Vector:
    __slots__ = ("coords",)

    def __init__(self, coords):
        object.__setattr__(self, "coords", _frozen_coords(coords))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def dim(self) -> int:
        return self.coords.size

    def __len__(self):
        return self.coords.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __eq__(self, other):
        return type(other) is type(self) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((type(self).__name__, self.coords.tobytes()))

    def _same_role(self, other):
        if type(other) is not type(self):
            raise UsageError(
                f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.dim != self.dim:
            raise UsageError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return other.coords

    def __add__(self, other):
        return type(self)(self.coords + self._same_role(other))

    def __sub__(self, other):
        return type(self)(self.coords - self._same_role(other))

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return type(self)(self.coords * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return type(self)(-self.coords)

    def __repr__(self):
        return f"{type(self).__name__}({np.array2string(self.coords, precision=6)})"

    def tolist(self):
        return self.coords.tolist()


class PrimalVector(_Vector):
    """A point of X = R^n."""

    __slots__ = ()


class DualVector(_Vector):
    """A point of the dual X* = R^n, in the same coordinate basis."""

    __slots__ = ()


def primal(x) -> PrimalVector:
    if isinstance(x, PrimalVector):
        return x
    if isinstance(x, DualVector):
        raise UsageError("expected a PrimalVector, got a DualVector")
    return PrimalVector(x)


def dual(x) -> DualVector:
    if isinstance(x, DualVector):
        return x
    if isinstance(x, PrimalVector):
        raise UsageError("expected a DualVector, got a PrimalVector")
    return DualVector(x)


def pair(x: PrimalVector, xstar: DualVector) -> float:
    """Canonical bilinear form <x, x*> = sum_i x_i x*_i.

    Both arguments must carry their role; passing two primal (or two dual)
    vectors is rejected.
    """
    if not isinstance(x, PrimalVector) or not isinstance(xstar, DualVector):
        raise UsageError(
            f"pair expects (PrimalVector, DualVector), got "
            f"({type(x).__name__}, {type(xstar).__name__})")
    if x.dim != xstar.dim:
        raise UsageError(f"dimension mismatch: {x.dim} vs {xstar.dim}")
    return float(np.dot(x.coords, xstar.coords))


def check_exponent(p: float) -> float:
    p = float(p)
    if not (1.0 < p < np.inf):
        raise UnsupportedGeometryError(f"l_p geometry needs 1 < p < inf, got p={p}")
    return p


def conjugate_exponent(p: float) -> float:
    p = check_exponent(p)
    return p / (p - 1.0)


def lp_norm(x, p: float) -> np.ndarray:
    """l_p norm along the last axis of a raw array (batch friendly)."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    scale = a.max(axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return (safe * np.sum((a / safe) ** p, axis=-1, keepdims=True) ** (1.0 / p))[..., 0]


def p_norm(x: PrimalVector, p: float) -> float:
    """(sum |x_i|^p)^(1/p) for 1 < p < inf."""
    p = check_exponent(p)
    return float(lp_norm(np.asarray(x, dtype=float), p))


@dataclass(frozen=True)
class ToleranceProfile:
    """Numerical tolerances shared by the solvers and the certificates.

    ``solve_tol`` is the target the iterative solvers drive their optimality
    certificate and step length to; it sits well below ``gap_tol`` so that the
    value identities (which are checked at ``value_tol``) still hold.
    """

    value_tol: float = 1e-8
    vector_tol: float = 1e-6
    fd_step: float = 1e-6
    gap_tol: float = 1e-6
    solve_tol: float = 1e-12

    def __post_init__(self):
        for name in ("value_tol", "vector_tol", "fd_step", "gap_tol", "solve_tol"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise UsageError(f"tolerance {name} must be positive, got {v}")
        if self.fd_step ** 2 < np.finfo(float).eps:
            raise UsageError("fd_step**2 must be at least machine epsilon")

    def override(self, **kwargs) -> "ToleranceProfile":
        unknown = set(kwargs) - set(self.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown tolerance keys: {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in kwargs.items()})

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOL = ToleranceProfile()


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))
