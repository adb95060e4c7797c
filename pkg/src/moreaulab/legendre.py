"""Catalog of Legendre functions on R^n.

Each entry exposes f, grad f, f*, grad f*, the diagonal of the Hessian of both
(used as a preconditioner by the solvers), and domain descriptors for dom f and
dom f*.  Methods work on raw arrays along the last axis; the module-level
functions at the bottom are the typed front door (PrimalVector in, DualVector
out, and so on).

Legendre property per entry, certified analytically rather than tested:

* ``euclidean`` and ``quadratic_spd``: finite, differentiable and strictly
  convex everywhere, with finite strictly convex conjugate.
* ``pnorm_energy``: 1/2 ||.||_p^2 is C^1 and strictly convex for 1 < p < inf
  (the l_p ball is strictly convex and smooth); the conjugate is 1/2 ||.||_q^2
  with 1/p + 1/q = 1.
* ``shannon_entropy``: sum x log x - x is essentially smooth on the closed
  orthant (gradient log x blows up at the boundary) and strictly convex; the
  conjugate sum exp is finite and smooth everywhere.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .domains import DomainSpec
from .space import (DEFAULT_TOL, DualVector, PrimalVector, ToleranceProfile,
                    UsageError, check_exponent, conjugate_exponent, dual, lp_norm,
                    primal)


class DomainError(ValueError):
    """A point lies outside the interior of a geometry's domain."""


class LegendreFunction:
    """Base class; subclasses implement the raw array methods."""

    name = "legendre"
    space = "primal"

    def __init__(self, dim: int, dom_f: DomainSpec, dom_fstar: DomainSpec,
                 supercoercive: bool, parameters: dict | None = None):
        if dim < 1:
            raise UsageError("dimension must be >= 1")
        self.dim = int(dim)
        self.dom_f = dom_f
        self.dom_fstar = dom_fstar
        self.supercoercive = bool(supercoercive)
        self.parameters = dict(parameters or {})
        if self.supercoercive and not dom_fstar.is_full:
            raise ValueError(f"{self.name}: supercoercive entry must have dom f* = R^n")

    # raw numerics, overridden per entry
    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def conj_value(self, u):
        raise NotImplementedError

    def conj_grad(self, u):
        raise NotImplementedError

    def curvature(self, x):
        """Diagonal of the Hessian of f at x."""
        raise NotImplementedError

    def conj_curvature(self, u):
        raise NotImplementedError

    def conjugate(self) -> "LegendreFunction":
        return ConjugateLegendre(self)

    def in_interior(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape[-1] == self.dim and bool(np.all(self.dom_f.interior_contains(x)))

    def _check_interior(self, x, conj=False):
        dom = self.dom_fstar if conj else self.dom_f
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise UsageError(f"{self.name}: expected dimension {self.dim}, got {x.shape[-1]}")
        if not np.all(dom.interior_contains(x)):
            which = "int dom f*" if conj else "int dom f"
            raise DomainError(f"{self.name}: point outside {which}")
        return x

    def describe(self) -> dict:
        return {"name": self.name, "dim": self.dim, "space": self.space,
                "dom_f": self.dom_f.to_dict(), "dom_fstar": self.dom_fstar.to_dict(),
                "supercoercive": self.supercoercive,
                "parameters": {k: np.asarray(v).tolist() for k, v in self.parameters.items()}}

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class Euclidean(LegendreFunction):
    name = "euclidean"

    def __init__(self, dim):
        super().__init__(dim, DomainSpec.full(dim), DomainSpec.full(dim), True)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(x * x, axis=-1)

    def grad(self, x):
        return np.array(self._check_interior(x), dtype=float)

    conj_value = value

    def conj_grad(self, u):
        return np.array(self._check_interior(u, conj=True), dtype=float)

    def curvature(self, x):
        return np.ones(np.shape(x))

    conj_curvature = curvature


class QuadraticSPD(LegendreFunction):
    """f(x) = 1/2 <x, M x> for a symmetric positive definite M."""

    name = "quadratic_spd"

    def __init__(self, M):
        M = np.array(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise UsageError("quadratic_spd needs a square matrix")
        if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(M).max())):
            raise ValueError("quadratic_spd: matrix is not symmetric to 1e-12")
        M = 0.5 * (M + M.T)
        eig = np.linalg.eigvalsh(M)
        if eig[0] <= 0:
            raise ValueError(f"quadratic_spd: smallest eigenvalue {eig[0]:.3g} is not positive")
        n = M.shape[0]
        super().__init__(n, DomainSpec.full(n), DomainSpec.full(n), True, {"M": M})
        self.M = M
        self._chol = cho_factor(M)
        self.M_inv = cho_solve(self._chol, np.eye(n))
        self._diag = np.diag(M).copy()
        self._diag_inv = np.diag(self.M_inv).copy()

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(x * (x @ self.M), axis=-1)

    def grad(self, x):
        return self._check_interior(x) @ self.M

    def conj_value(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * np.sum(u * (u @ self.M_inv), axis=-1)

    def conj_grad(self, u):
        u = self._check_interior(u, conj=True)
        return cho_solve(self._chol, u.T).T

    def curvature(self, x):
        return np.broadcast_to(self._diag, np.shape(x)).copy()

    def conj_curvature(self, u):
        return np.broadcast_to(self._diag_inv, np.shape(u)).copy()


def _lp_energy_grad(x, p):
    # ||x||^(2-p) |x_i|^(p-1) sgn x_i, written as ||x|| (|x_i|/||x||)^(p-1)
    nrm = lp_norm(x, p)[..., None]
    safe = np.where(nrm > 0, nrm, 1.0)
    return nrm * (np.abs(x) / safe) ** (p - 1.0) * np.sign(x)


def _lp_energy_curvature(x, p):
    nrm = lp_norm(x, p)[..., None]
    safe = np.where(nrm > 0, nrm, 1.0)
    r = np.abs(x) / safe
    with np.errstate(divide="ignore"):
        h = (p - 1.0) * r ** (p - 2.0) + (2.0 - p) * r ** (2.0 * p - 2.0)
    return np.where(nrm > 0, h, 1.0)


class PNormEnergy(LegendreFunction):
    """f(x) = 1/2 ||x||_p^2; its gradient is the duality mapping of l_p."""

    name = "pnorm_energy"

    def __init__(self, p, dim):
        self.p = check_exponent(p)
        self.q = conjugate_exponent(self.p)
        super().__init__(dim, DomainSpec.full(dim), DomainSpec.full(dim), True, {"p": self.p})

    def value(self, x):
        return 0.5 * lp_norm(x, self.p) ** 2

    def grad(self, x):
        return _lp_energy_grad(self._check_interior(x), self.p)

    def conj_value(self, u):
        return 0.5 * lp_norm(u, self.q) ** 2

    def conj_grad(self, u):
        return _lp_energy_grad(self._check_interior(u, conj=True), self.q)

    def curvature(self, x):
        return _lp_energy_curvature(np.asarray(x, dtype=float), self.p)

    def conj_curvature(self, u):
        return _lp_energy_curvature(np.asarray(u, dtype=float), self.q)


class ShannonEntropy(LegendreFunction):
    """f(x) = sum x_i log x_i - x_i on the closed orthant, with 0 log 0 = 0."""

    name = "shannon_entropy"

    def __init__(self, dim):
        super().__init__(dim, DomainSpec.positive_orthant(dim, closed=True),
                         DomainSpec.full(dim), True)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)) - x, 0.0)
        out = np.sum(terms, axis=-1)
        return np.where(np.all(x >= 0, axis=-1), out, np.inf)

    def grad(self, x):
        return np.log(self._check_interior(x))

    def conj_value(self, u):
        return np.sum(np.exp(np.asarray(u, dtype=float)), axis=-1)

    def conj_grad(self, u):
        return np.exp(self._check_interior(u, conj=True))

    def curvature(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(x > 0, 1.0 / np.where(x > 0, x, 1.0), np.inf)

    def conj_curvature(self, u):
        return np.exp(np.asarray(u, dtype=float))


class ConjugateLegendre(LegendreFunction):
    """f* viewed as a Legendre function on the dual space."""

    def __init__(self, base: LegendreFunction):
        self.base = base
        self.name = base.name + "*"
        self.space = "dual" if base.space == "primal" else "primal"
        # in finite dimension f* is supercoercive iff dom f = R^n
        super().__init__(base.dim, base.dom_fstar, base.dom_f, base.dom_f.is_full,
                         base.parameters)

    def value(self, x):
        return self.base.conj_value(x)

    def grad(self, x):
        return self.base.conj_grad(x)

    def conj_value(self, u):
        return self.base.value(u)

    def conj_grad(self, u):
        return self.base.grad(u)

    def curvature(self, x):
        return self.base.conj_curvature(x)

    def conj_curvature(self, u):
        return self.base.curvature(u)

    def conjugate(self):
        return self.base

    def __repr__(self):
        return f"ConjugateLegendre({self.base!r})"


def default_spd(n: int) -> np.ndarray:
    """M_ij = 0.5^|i-j|, a well-conditioned SPD matrix (eigenvalues in [1/3, 3])."""
    idx = np.arange(n)
    return 0.5 ** np.abs(idx[:, None] - idx[None, :])


def _quadratic_entry(dim=None, M=None, **kw):
    if M is None:
        if dim is None:
            raise UsageError("quadratic_spd needs M or a dimension")
        M = default_spd(dim)
    return QuadraticSPD(M)


GEOMETRIES = {
    "euclidean": lambda dim, **kw: Euclidean(dim),
    "quadratic_spd": _quadratic_entry,
    "pnorm_energy": lambda dim, p=2.0, **kw: PNormEnergy(p, dim),
    "shannon_entropy": lambda dim, **kw: ShannonEntropy(dim),
}


def make_geometry(name: str, dim: int | None = None, **params) -> LegendreFunction:
    try:
        factory = GEOMETRIES[name]
    except KeyError:
        raise KeyError(f"unknown geometry {name!r}") from None
    return factory(dim=dim, **params)


# typed front door ------------------------------------------------------------

def _in_role(f: LegendreFunction, x, conj=False):
    side = f.space if not conj else ("dual" if f.space == "primal" else "primal")
    return (primal(x) if side == "primal" else dual(x)).coords


def _out_role(f: LegendreFunction, arr, conj=False):
    side = f.space if not conj else ("dual" if f.space == "primal" else "primal")
    # gradients land in the opposite space
    return DualVector(arr) if side == "primal" else PrimalVector(arr)


def eval_f(f: LegendreFunction, x) -> float:
    """f(x), +inf outside dom f."""
    return float(f.value(_in_role(f, x)))


def grad_f(f: LegendreFunction, x):
    return _out_role(f, f.grad(_in_role(f, x)))


def eval_conj(f: LegendreFunction, xstar) -> float:
    return float(f.conj_value(_in_role(f, xstar, conj=True)))


def grad_conj(f: LegendreFunction, xstar):
    return _out_role(f, f.conj_grad(_in_role(f, xstar, conj=True)), conj=True)


def bregman(f: LegendreFunction, y, x) -> float:
    """D_f(y, x) = f(y) - f(x) - <y - x, grad f(x)>, +inf unless x in int dom f."""
    y = _in_role(f, y)
    x = _in_role(f, x)
    return float(bregman_raw(f, y, x))


def bregman_raw(f: LegendreFunction, y, x):
    if not f.in_interior(x):
        return np.inf
    fy = f.value(y)
    if not np.isfinite(fy):
        return np.inf
    d = fy - f.value(x) - np.dot(y - x, f.grad(x))
    return max(float(d), 0.0)


def duality_map(p: float, x, tol: ToleranceProfile = DEFAULT_TOL) -> DualVector:
    """J = grad(1/2 ||.||_p^2), with <x, Jx> = ||x||_p^2 = ||Jx||_q^2 checked."""
    x = primal(x)
    f = PNormEnergy(p, x.dim)
    jx = f.grad(x.coords)
    a = float(np.dot(x.coords, jx))
    b = float(lp_norm(x.coords, f.p) ** 2)
    c = float(lp_norm(jx, f.q) ** 2)
    scale = tol.value_tol * (1.0 + b)
    if abs(a - b) > scale or abs(c - b) > scale:
        raise ArithmeticError(f"duality map identity failed: {a}, {b}, {c}")
    return DualVector(jx)
