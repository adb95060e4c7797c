"""Bregman (D-) proximity and anisotropic proximity operators.

aprox^f_phi(x) = argmin_y phi(y) + f(x - y), characterized by
grad f(x - p) in d phi(p).

bprox^f_phi(x) = argmin_y phi(y) + D_f(y, x), characterized by
grad f(x) - grad f(p) in d phi(p).  It is computed by minimizing
phi + f - <., grad f(x)>, which has the same minimizers.

Constraint qualifications are analytic statements about relative interiors.
They are recorded per (f, phi) pairing in a ledger entry; box-like domains are
checked by machine, everything else carries a written justification.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cones import ConeSpec
from .convex import ConeIndicator, ConvexFunction, fy_gap_raw
from .domains import (interior_contained_in_sum, sum_interior_contains,
                      zero_in_interior_of_difference)
from .legendre import DomainError, LegendreFunction, PNormEnergy
from .solvers import (DEFAULT_MAX_ITER, CompositeProblem, SolveResult,
                      minimize_composite)
from .space import (DEFAULT_TOL, DualVector, PrimalVector, ToleranceProfile,
                    UnsupportedGeometryError, UsageError, dual, primal)


class PreconditionError(ValueError):
    """A hypothesis needed for the operator to be well defined failed."""


@dataclass(frozen=True, eq=False)
class PairingLedgerEntry:
    """Constraint-qualification record for a (f, phi) pairing.

    cq_primal: 0 in sri(dom f - dom phi); cq_dual: 0 in sri(dom f* - dom phi*).
    """

    f: LegendreFunction
    phi: ConvexFunction
    cq_primal: bool
    cq_dual: bool
    justification: str = ""

    def dual(self) -> "PairingLedgerEntry":
        """The ledger entry for (f*, phi*)."""
        return PairingLedgerEntry(self.f.conjugate(), self.phi.conjugate(),
                                  self.cq_dual, self.cq_primal, self.justification)

    def to_dict(self) -> dict:
        return {"geometry": self.f.name, "phi": self.phi.name,
                "cq_primal": self.cq_primal, "cq_dual": self.cq_dual,
                "justification": self.justification}


Pairing = PairingLedgerEntry


def certify_pairing(f: LegendreFunction, phi: ConvexFunction, cq_primal: bool | None = None,
                    cq_dual: bool | None = None, justification: str = "") -> PairingLedgerEntry:
    """Build a ledger entry, machine-checking the flags where domains allow it.

    A machine check that succeeds overrides the declaration; one that cannot be
    run (non box-like domains) falls back to the declared flag.
    """
    if f.dim != phi.dim:
        raise UsageError(f"dimension mismatch: {f.name} is in R^{f.dim}, "
                         f"{phi.name} in R^{phi.dim}")
    notes = []
    auto_p = zero_in_interior_of_difference(f.dom_f, phi.dom)
    auto_d = zero_in_interior_of_difference(f.dom_fstar, phi.conjugate().dom)
    if auto_p:
        notes.append("primal CQ: 0 in int(dom f - dom phi) by domain arithmetic")
    if auto_d:
        notes.append("dual CQ: 0 in int(dom f* - dom phi*) by domain arithmetic")
    if justification:
        notes.append(justification)
    return PairingLedgerEntry(f, phi, bool(auto_p) or bool(cq_primal),
                              bool(auto_d) or bool(cq_dual), "; ".join(notes))


@dataclass(frozen=True)
class ProxResult:
    point: PrimalVector | DualVector
    inclusion_residual: float
    solve: SolveResult
    existence: str = ""

    @property
    def converged(self) -> bool:
        return self.solve.converged

    def to_dict(self) -> dict:
        return {"point": self.point.tolist(), "inclusion_residual": self.inclusion_residual,
                "existence": self.existence, "solve": self.solve.to_dict()}


def _coerce(f: LegendreFunction, x) -> np.ndarray:
    return (primal(x) if f.space == "primal" else dual(x)).coords


def _wrap(f: LegendreFunction, arr):
    return PrimalVector(arr) if f.space == "primal" else DualVector(arr)


def _ledger(f, phi, pairing):
    if pairing is None:
        return certify_pairing(f, phi)
    if pairing.f is not f or pairing.phi is not phi:
        if pairing.f.name != f.name or pairing.phi.name != phi.name:
            raise UsageError("ledger entry does not describe this (f, phi) pairing")
    return pairing


def aprox(f: LegendreFunction, phi: ConvexFunction, x, pairing: PairingLedgerEntry | None = None,
          tol: ToleranceProfile = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> ProxResult:
    """Anisotropic proximity operator of phi relative to f."""
    pairing = _ledger(f, phi, pairing)
    if not pairing.cq_dual:
        raise PreconditionError(
            f"({f.name}, {phi.name}): 0 in sri(dom f* - dom phi*) is not established")
    x = _coerce(f, x)
    try:
        admissible = sum_interior_contains(f.dom_f, phi.dom, x)
    except UnsupportedGeometryError as exc:
        raise PreconditionError(f"x in sri(dom f + dom phi): {exc}") from None
    if not admissible:
        raise PreconditionError(f"({f.name}, {phi.name}): x is not in sri(dom f + dom phi)")

    dom = f.dom_f

    def guard(y):
        return bool(np.all(dom.interior_contains(x - y)))

    w = phi.dom.interior_point
    w_f = dom.interior_point
    fallbacks = [w] + [phi.prox(x - theta * w_f, 1.0) for theta in 0.5 ** np.arange(31)]
    prob = CompositeProblem(
        smooth_value=lambda y: f.value(x - y),
        smooth_grad=lambda y: -f.grad(x - y),
        nonsmooth=phi,
        interior_guard=guard,
        init=w + 0.5 * (x - w),
        curvature=lambda y: f.curvature(x - y),
        fallback_inits=fallbacks,
    )
    res = minimize_composite(prob, tol, max_iter)
    p = res.minimizer
    resid = fy_gap_raw(phi, p, f.grad(x - p), tol) if guard(p) else np.inf
    return ProxResult(_wrap(f, p), resid, res)


def bprox_existence(f: LegendreFunction, phi: ConvexFunction, x) -> str:
    """Name the first existence condition that holds, or raise."""
    if f.supercoercive:
        return "f supercoercive"
    if phi.bounded_below:
        return "inf phi > -inf"
    phis = phi.conjugate()
    try:
        if interior_contained_in_sum(f.dom_fstar, phis.dom):
            return "int dom f* in int(dom f* + dom phi*)"
        if sum_interior_contains(f.dom_fstar, phis.dom, f.grad(x)):
            return "grad f(x) in int(dom f* + dom phi*)"
    except UnsupportedGeometryError as exc:
        raise PreconditionError(f"existence conditions: {exc}") from None
    raise PreconditionError(f"({f.name}, {phi.name}): none of the existence conditions hold")


def bprox(f: LegendreFunction, phi: ConvexFunction, x, pairing: PairingLedgerEntry | None = None,
          tol: ToleranceProfile = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> ProxResult:
    """D-proximity (Bregman proximity) operator of phi relative to f."""
    pairing = _ledger(f, phi, pairing)
    if not pairing.cq_primal:
        raise PreconditionError(
            f"({f.name}, {phi.name}): 0 in sri(dom f - dom phi) is not established")
    x = _coerce(f, x)
    if not f.in_interior(x):
        raise DomainError(f"{f.name}: bprox needs x in int dom f")
    existence = bprox_existence(f, phi, x)
    gx = f.grad(x)
    dom = f.dom_f

    def guard(y):
        return bool(np.all(dom.interior_contains(y)))

    w = dom.interior_point
    mid = 0.5 * (w + x)
    prob = CompositeProblem(
        smooth_value=lambda y: f.value(y) - y @ gx,
        smooth_grad=lambda y: f.grad(y) - gx,
        nonsmooth=phi,
        interior_guard=guard,
        init=mid,
        curvature=f.curvature,
        fallback_inits=[w, phi.prox(mid, 1.0), phi.prox(x, 1.0), phi.dom.interior_point],
    )
    res = minimize_composite(prob, tol, max_iter)
    p = res.minimizer
    resid = fy_gap_raw(phi, p, gx - f.grad(p), tol) if guard(p) else np.inf
    return ProxResult(_wrap(f, p), resid, res, existence)


def gen_project(cone: ConeSpec, p: float, x, tol: ToleranceProfile = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER, full_result: bool = False):
    """Generalized projection onto ``cone`` in the l_p geometry.

    argmin_{y in K} ||x||^2 - 2 <y, Jx> + ||y||^2 equals bprox of the cone
    indicator relative to 1/2 ||.||_p^2 (the objectives differ by a constant).
    """
    if not isinstance(cone, ConeSpec):
        raise UnsupportedGeometryError(f"unsupported cone {cone!r}")
    arr = np.asarray(x, dtype=float).reshape(-1)
    f = PNormEnergy(p, arr.size)
    phi = ConeIndicator(cone)
    res = bprox(f, phi, arr, tol=tol, max_iter=max_iter)
    if full_result:
        return res
    return res.point
