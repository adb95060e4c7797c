"""Generalized Moreau decomposition x = aprox(x) + grad f*(dual term), certified.

For a Legendre f and phi in Gamma_0 with 0 in sri(dom f* - dom phi*):

(i)   f(x) = (phi [] f)(x) + (phi* <> f*)(grad f(x))
(ii)  x = aprox^f_phi(x) + grad f*(bprox^{f*}_{phi*}(grad f(x)))
(iii) <p, d*> = phi(p) + phi*(d*)
(iv)  <p, grad f(x - p)> = phi(p) + phi*(grad f(x - p))

where p is the aprox term, d* the bprox term and (phi* <> f*)(u) is
min_v phi*(v) + D_{f*}(v, u).  The dual term is obtained by an independent
solve on the dual side, so (ii) and (iii) test two solver paths against each
other, while (iv) and the structural check d* = grad f(x - p) use only the
primal solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cones import ConeSpec
from .convex import ConeIndicator, ConvexFunction, euclid_prox
from .legendre import DomainError, Euclidean, LegendreFunction
from .prox import (PairingLedgerEntry, PreconditionError, ProxResult, aprox, bprox,
                   certify_pairing)
from .solvers import DEFAULT_MAX_ITER
from .space import (DEFAULT_TOL, DualVector, PrimalVector, ToleranceProfile,
                    UnsupportedGeometryError, make_rng, primal)


def _num(v: float):
    """JSON-safe float: non-finite values become strings."""
    v = float(v)
    if math.isfinite(v):
        return v
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


@dataclass(frozen=True)
class DecompositionReport:
    x: PrimalVector
    p: PrimalVector
    dstar: DualVector
    dstar_primal: DualVector
    reconstruction: PrimalVector
    f_value: float
    infconv_value: float
    diamond_value: float
    residual_i: float
    residual_ii: float
    residual_iii: float
    residual_iv: float
    dstar_discrepancy: float
    cq_flags: dict
    aprox_result: ProxResult
    bprox_result: ProxResult
    seed: int | None = None

    @property
    def converged(self) -> bool:
        return self.aprox_result.converged and self.bprox_result.converged

    @property
    def pairing_value(self) -> float:
        """<p, d*>; zero for cone indicators."""
        return float(self.p.coords @ self.dstar.coords)

    def bounds(self, tol: ToleranceProfile = DEFAULT_TOL) -> dict:
        xn = float(np.linalg.norm(self.x.coords))
        return {
            "residual_i": tol.value_tol * (1.0 + abs(self.f_value)),
            "residual_ii": tol.vector_tol * (1.0 + xn),
            "residual_iii": tol.gap_tol,
            "residual_iv": tol.gap_tol,
            "dstar_discrepancy": tol.vector_tol * (1.0 + xn),
        }

    def failures(self, tol: ToleranceProfile = DEFAULT_TOL) -> list[str]:
        """Names of the checks that fail, including solver nonconvergence."""
        out = [k for k, b in self.bounds(tol).items() if not getattr(self, k) <= b]
        if not self.aprox_result.converged:
            out.append("aprox_not_converged")
        if not self.bprox_result.converged:
            out.append("bprox_not_converged")
        return out

    def passes(self, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
        return not self.failures(tol)

    def to_dict(self, tol: ToleranceProfile = DEFAULT_TOL) -> dict:
        return {
            "x": self.x.tolist(), "p": self.p.tolist(), "dstar": self.dstar.tolist(),
            "dstar_primal": self.dstar_primal.tolist(),
            "reconstruction": self.reconstruction.tolist(),
            "f_value": _num(self.f_value), "infconv_value": _num(self.infconv_value),
            "diamond_value": _num(self.diamond_value),
            "residual_i": _num(self.residual_i), "residual_ii": _num(self.residual_ii),
            "residual_iii": _num(self.residual_iii), "residual_iv": _num(self.residual_iv),
            "dstar_discrepancy": _num(self.dstar_discrepancy),
            "pairing_value": _num(self.pairing_value),
            "cq_flags": dict(self.cq_flags), "seed": self.seed,
            "aprox_solve": self.aprox_result.solve.to_dict(),
            "bprox_solve": self.bprox_result.solve.to_dict(),
            "failures": self.failures(tol),
        }


def decompose(f: LegendreFunction, phi: ConvexFunction, x,
              pairing: PairingLedgerEntry | None = None,
              tol: ToleranceProfile = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
              seed: int | None = None) -> DecompositionReport:
    """Compute both decomposition terms and the residuals of (i)-(iv)."""
    pairing = pairing if pairing is not None else certify_pairing(f, phi)
    if not pairing.cq_dual:
        raise PreconditionError(
            f"({f.name}, {phi.name}): 0 in sri(dom f* - dom phi*) is not established")
    x = primal(x)
    xa = x.coords
    if not f.in_interior(xa):
        raise DomainError(f"{f.name}: decomposition needs x in int dom f")
    a = aprox(f, phi, xa, pairing, tol, max_iter)
    p = a.point.coords
    gx = f.grad(xa)
    fs, phis = f.conjugate(), phi.conjugate()
    b = bprox(fs, phis, gx, pairing.dual(), tol, max_iter)
    d = b.point.coords
    d_primal = f.grad(xa - p)

    f_x = float(f.value(xa))
    phi_p = float(phi.value(p))
    phis_d = float(phis.value(d))
    phis_dp = float(phis.value(d_primal))
    infconv = phi_p + float(f.value(xa - p))
    breg = max(float(fs.value(d) - fs.value(gx) - (d - gx) @ fs.grad(gx)), 0.0)
    diamond = phis_d + breg
    recon = p + f.conj_grad(d)
    with np.errstate(invalid="ignore"):
        r1 = abs(f_x - infconv - diamond)
        r3 = abs(float(p @ d) - phi_p - phis_d)
        r4 = abs(float(p @ d_primal) - phi_p - phis_dp)
    return DecompositionReport(
        x=x, p=PrimalVector(p), dstar=DualVector(d), dstar_primal=DualVector(d_primal),
        reconstruction=PrimalVector(recon), f_value=f_x, infconv_value=infconv,
        diamond_value=diamond, residual_i=float(r1),
        residual_ii=float(np.linalg.norm(xa - recon)), residual_iii=float(r3),
        residual_iv=float(r4), dstar_discrepancy=float(np.linalg.norm(d - d_primal)),
        cq_flags={"cq_primal": pairing.cq_primal, "cq_dual": pairing.cq_dual,
                  "justification": pairing.justification},
        aprox_result=a, bprox_result=b, seed=seed)


# admissible sampling ---------------------------------------------------------

def admissible_bounds(f: LegendreFunction, phi: ConvexFunction):
    """Coordinate bounds of int dom f intersected with int(dom f + dom phi)."""
    bf = f.dom_f.bounds()
    if bf is None:
        raise UnsupportedGeometryError(f"{f.name}: sampling needs a box-like dom f")
    lo, hi = bf
    if f.dom_f.is_full:
        return lo, hi
    bp = phi.dom.bounds()
    if bp is None:
        raise UnsupportedGeometryError(
            f"sampling for ({f.name}, {phi.name}) needs box-like domains")
    return np.maximum(lo, lo + bp[0]), np.minimum(hi, hi + bp[1])


def sample_admissible(f: LegendreFunction, phi: ConvexFunction, count: int,
                      seed: int, *keys: int) -> np.ndarray:
    """Gaussian draws mapped into the open admissible box.

    Unbounded coordinates keep the Gaussian value, half-bounded ones use
    bound +/- exp(g) and two-sided ones a logistic squash.  Returns (count, n).
    """
    rng = make_rng(seed, *keys)
    g = rng.standard_normal((count, f.dim))
    lo, hi = admissible_bounds(f, phi)
    lo_f, hi_f = np.isfinite(lo), np.isfinite(hi)
    span = np.where(lo_f & hi_f, hi - lo, 1.0)
    with np.errstate(invalid="ignore", over="ignore"):
        x = np.where(lo_f & hi_f, lo + span / (1.0 + np.exp(-g)),
                     np.where(lo_f, lo + np.exp(g),
                              np.where(hi_f, hi - np.exp(g), g)))
    return x


# suite bookkeeping -----------------------------------------------------------

@dataclass
class SuiteReport:
    """Per-identity counts, failures and worst residuals of a verification suite."""

    name: str
    identities: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def record(self, label: str, residual: float, bound: float) -> bool:
        ok = bool(residual <= bound)
        e = self.identities.setdefault(
            label, {"count": 0, "failures": 0, "max_residual": 0.0, "worst_ratio": 0.0})
        e["count"] += 1
        e["failures"] += 0 if ok else 1
        if not residual <= e["max_residual"]:
            e["max_residual"] = float(residual)
        ratio = residual / bound if bound > 0 else (0.0 if residual == 0 else np.inf)
        if not ratio <= e["worst_ratio"]:
            e["worst_ratio"] = float(ratio)
        return ok

    def merge(self, other: "SuiteReport", prefix: str = "") -> None:
        for k, v in other.identities.items():
            e = self.identities.setdefault(
                prefix + k, {"count": 0, "failures": 0, "max_residual": 0.0, "worst_ratio": 0.0})
            e["count"] += v["count"]
            e["failures"] += v["failures"]
            e["max_residual"] = max(e["max_residual"], v["max_residual"])
            e["worst_ratio"] = max(e["worst_ratio"], v["worst_ratio"])
        self.notes.extend(other.notes)

    @property
    def checks(self) -> int:
        return sum(e["count"] for e in self.identities.values())

    @property
    def failures(self) -> int:
        return sum(e["failures"] for e in self.identities.values())

    @property
    def passed(self) -> bool:
        return self.failures == 0

    @property
    def skipped(self) -> bool:
        return self.checks == 0

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "skipped": self.skipped,
                "checks": self.checks,
                "failures": self.failures,
                "identities": {k: {kk: _num(vv) if isinstance(vv, float) else vv
                                   for kk, vv in v.items()}
                               for k, v in sorted(self.identities.items())},
                "notes": list(self.notes)}


def record_report(suite: SuiteReport, rep: DecompositionReport, prefix: str = "",
                  tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    ok = True
    for k, b in rep.bounds(tol).items():
        ok &= suite.record(prefix + k, getattr(rep, k), b)
    ok &= suite.record(prefix + "solver_certificate",
                       max(rep.aprox_result.solve.gap_certificate,
                           rep.bprox_result.solve.gap_certificate), tol.gap_tol)
    return ok


# Hilbert specializations -----------------------------------------------------

def _hilbert_cones(n: int, rng: np.random.Generator):
    cones = [ConeSpec.orthant(n), ConeSpec.halfspace(rng.standard_normal(n))]
    if n >= 2:
        cones.append(ConeSpec.soc(n))
    return cones


def verify_hilbert_special_cases(seed: int, count: int = 100, dims=(2, 5, 16),
                                 tol: ToleranceProfile = DEFAULT_TOL) -> SuiteReport:
    """Subspace, cone and general-phi Moreau identities with f = 1/2 ||.||^2.

    Every projection used here is closed form for both the set and its polar
    (or complement), so the identities are not true by construction.
    """
    from .convex import make_phi  # local: avoids a cycle at import time

    suite = SuiteReport("hilbert")
    for di, n in enumerate(dims):
        rng = make_rng(seed, 1, di)
        xs = rng.standard_normal((count, n)) * 2.0
        k = max(1, n // 2)
        V = ConeSpec.subspace(rng.standard_normal((k, n)))
        Vp = V.polar_cone()
        for x in xs:
            nx = float(x @ x)
            pv, pw = V.project(x), Vp.project(x)
            dv, dw = np.linalg.norm(x - pv), np.linalg.norm(x - pw)
            suite.record("subspace.pythagoras", abs(nx - dv ** 2 - dw ** 2),
                         tol.value_tol * (1.0 + nx))
            suite.record("subspace.sum", np.linalg.norm(x - pv - pw),
                         tol.vector_tol * (1.0 + np.sqrt(nx)))
            suite.record("subspace.orthogonality", abs(pv @ pw), tol.gap_tol)
        for cone in _hilbert_cones(n, rng):
            polar = cone.polar_cone()
            tag = f"cone.{cone.kind}"
            for x in xs:
                nx = float(x @ x)
                pk, pp = cone.project(x), polar.project(x)
                dk, dp = np.linalg.norm(x - pk), np.linalg.norm(x - pp)
                suite.record(f"{tag}.pythagoras", abs(nx - dk ** 2 - dp ** 2),
                             tol.value_tol * (1.0 + nx))
                suite.record(f"{tag}.sum", np.linalg.norm(x - pk - pp),
                             tol.vector_tol * (1.0 + np.sqrt(nx)))
                suite.record(f"{tag}.orthogonality", abs(pk @ pp), tol.gap_tol)
        phis = [make_phi("zero", n), make_phi("l1", n, lam=0.7),
                make_phi("box", n, a=-np.ones(n), b=2 * np.ones(n)),
                make_phi("linear", n, c=rng.standard_normal(n)),
                make_phi("quadratic", n, Q=np.diag(rng.uniform(0.0, 2.0, n)),
                         c=rng.standard_normal(n))]
        for phi in phis:
            phis_ = phi.conjugate()
            tag = f"moreau.{phi.name}"
            for x in xs:
                nx = float(x @ x)
                a = euclid_prox(phi, x).coords
                b = euclid_prox(phis_, x).coords
                env = float(phi.value(a)) + 0.5 * float((x - a) @ (x - a))
                env_s = float(phis_.value(b)) + 0.5 * float((x - b) @ (x - b))
                suite.record(f"{tag}.envelopes", abs(0.5 * nx - env - env_s),
                             tol.value_tol * (1.0 + 0.5 * nx))
                suite.record(f"{tag}.sum", np.linalg.norm(x - a - b),
                             tol.vector_tol * (1.0 + np.sqrt(nx)))
                suite.record(f"{tag}.pairing",
                             abs(float(a @ b) - float(phi.value(a)) - float(phis_.value(b))),
                             tol.gap_tol)
    return suite


# resolvent identity ----------------------------------------------------------

@dataclass(frozen=True)
class ResolventReport:
    """Residuals of x = (Id + grad f* A)^{-1} x + grad f*((grad f* + A^{-1})^{-1} x), A = d phi."""

    first_inclusion: float
    second_inclusion: float
    reconstruction: float
    euclid_sum: float | None
    converged: bool

    def passes(self, tol: ToleranceProfile = DEFAULT_TOL, x_norm: float = 0.0) -> bool:
        ok = (self.first_inclusion <= tol.gap_tol and self.second_inclusion <= tol.gap_tol
              and self.reconstruction <= tol.vector_tol * (1.0 + x_norm) and self.converged)
        if self.euclid_sum is not None:
            ok = ok and self.euclid_sum <= tol.value_tol * (1.0 + x_norm)
        return bool(ok)

    def to_dict(self) -> dict:
        return {"first_inclusion": _num(self.first_inclusion),
                "second_inclusion": _num(self.second_inclusion),
                "reconstruction": _num(self.reconstruction),
                "euclid_sum": None if self.euclid_sum is None else _num(self.euclid_sum),
                "converged": self.converged}


def verify_resolvent(f: LegendreFunction, phi: ConvexFunction, x,
                     pairing: PairingLedgerEntry | None = None,
                     tol: ToleranceProfile = DEFAULT_TOL,
                     report: DecompositionReport | None = None) -> ResolventReport:
    """Certify both resolvent inclusions with A = d phi.

    First: grad f(x - p) in A p, i.e. FY gap of (phi, p, grad f(x - p)).
    Second: p in A^{-1} d*, i.e. FY gap of (phi*, d*, p), together with
    x = p + grad f*(d*).  In the Euclidean case the pointwise identity
    Id = (Id + A)^{-1} + (Id + A^{-1})^{-1} is also checked through closed-form
    proxes.
    """
    from .convex import fy_gap_raw

    rep = report if report is not None else decompose(f, phi, x, pairing, tol)
    xa = rep.x.coords
    p, d = rep.p.coords, rep.dstar.coords
    first = fy_gap_raw(phi, p, f.grad(xa - p), tol)
    second = fy_gap_raw(phi.conjugate(), d, p, tol)
    euclid = None
    if isinstance(f, Euclidean):
        a = euclid_prox(phi, xa).coords
        b = euclid_prox(phi.conjugate(), xa).coords
        euclid = float(np.max(np.abs(xa - a - b)))
    return ResolventReport(float(first), float(second), rep.residual_ii, euclid, rep.converged)


def conic_orthogonality(rep: DecompositionReport) -> float:
    """|<P_K x, Pi_{K polar}(J x)>| for a cone-indicator decomposition."""
    return abs(rep.pairing_value)


def is_cone_pairing(phi: ConvexFunction) -> bool:
    return isinstance(phi, ConeIndicator)


# grid oracles ----------------------------------------------------------------

def _oracle_box(*points):
    pts = np.array([np.asarray(p, dtype=float) for p in points])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    margin = 0.5 * (1.0 + float(np.max(hi - lo)))
    return lo - margin, hi + margin


def _grid_basis(phi: ConvexFunction):
    """Orthonormal grid axes aligned with the faces of phi's domain, if needed.

    The second-order cone in R^2 (and its polar) has its faces on the
    diagonals, which an axis-aligned grid misses; a 45 degree rotation turns it
    into an orthant so the active constraint lies on grid lines.
    """
    if isinstance(phi, ConeIndicator) and phi.cone.kind == "second_order" and phi.dim == 2:
        return np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    return None


def verify_oracle(f: LegendreFunction, phi: ConvexFunction, x,
                  pairing: PairingLedgerEntry | None = None,
                  tol: ToleranceProfile = DEFAULT_TOL, resolution: int = 201,
                  suite: SuiteReport | None = None) -> SuiteReport:
    """Compare every applicable solve at x with a refined grid argmin (n <= 2).

    Checks aprox(f, phi, x), bprox(f, phi, x) when its hypotheses hold, and the
    dual-side bprox(f*, phi*, grad f(x)).  The bound is the refined spacing.
    """
    from .solvers import brute_force_min

    suite = suite if suite is not None else SuiteReport("oracle")
    pairing = pairing if pairing is not None else certify_pairing(f, phi)
    xa = primal(x).coords
    if xa.size > 2:
        raise UnsupportedGeometryError("grid oracles are limited to n <= 2 here")
    fs, phis = f.conjugate(), phi.conjugate()
    gx = f.grad(xa)

    def compare(label, solved, objective, *anchors, dom=None, basis=None):
        if dom is not None and not bool(dom.interior_contains(dom.interior_point)):
            # a grid cannot sample a set with empty interior (e.g. a singleton)
            suite.notes.append(f"{label}: skipped, {dom.kind} domain has empty interior")
            return
        Q = np.eye(xa.size) if basis is None else basis
        # grid over z with Y = z Q^T; Q orthogonal, so distances are unchanged
        zs = solved @ Q
        grid = brute_force_min(lambda Z: objective(Z @ Q.T),
                               _oracle_box(*[np.asarray(a) @ Q for a in anchors], zs),
                               resolution)
        delta = float(np.max(np.abs(zs - grid.point)))
        suite.record(label, delta, float(np.max(grid.spacing)))

    a = aprox(f, phi, xa, pairing, tol)
    compare("aprox", a.point.coords,
            lambda Y: phi.value(Y) + f.value(xa - Y), xa, phi.dom.interior_point, dom=phi.dom,
            basis=_grid_basis(phi))

    if pairing.cq_primal:
        try:
            b = bprox(f, phi, xa, pairing, tol)
        except PreconditionError as exc:
            suite.notes.append(f"bprox skipped: {exc}")
        else:
            fx = float(f.value(xa))
            compare("bprox", b.point.coords,
                    lambda Y: phi.value(Y) + f.value(Y) - fx - (Y - xa) @ gx,
                    xa, phi.dom.interior_point, dom=phi.dom, basis=_grid_basis(phi))

    d = bprox(fs, phis, gx, pairing.dual(), tol)
    fsg = float(fs.value(gx))
    compare("bprox_dual", d.point.coords,
            lambda U: phis.value(U) + fs.value(U) - fsg - (U - gx) @ xa,
            gx, phis.dom.interior_point, dom=phis.dom, basis=_grid_basis(phis))
    return suite
