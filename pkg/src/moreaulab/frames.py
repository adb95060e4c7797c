"""Finite frames in R^n and the frame form of the decomposition.

With frame vectors e_1..e_m, frame operator S = sum e_i e_i^T and canonical
dual frame e*_i = S^{-1} e_i, the quadratic f(x) = 1/2 sum <x, e_i>^2 has
f*(u) = 1/2 sum <u, e*_i>^2 and the decomposition reads
x = a(x) + sum_i <b(x), e*_i> e*_i.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .convex import ConvexFunction
from .decomposition import DecompositionReport, decompose
from .legendre import QuadraticSPD
from .prox import PairingLedgerEntry
from .space import DEFAULT_TOL, PrimalVector, ToleranceProfile, UsageError, make_rng


class NotAFrameError(ValueError):
    """The family does not span the space."""


@dataclass(frozen=True, eq=False)
class FrameSystem:
    vectors: np.ndarray        # (m, n), one frame vector per row
    S: np.ndarray
    S_inv: np.ndarray
    dual_vectors: np.ndarray   # (m, n), rows S^{-1} e_i
    alpha: float
    beta: float

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def analysis(self, x) -> np.ndarray:
        """Frame coefficients <x, e_i>."""
        return self.vectors @ np.asarray(x, dtype=float)

    def dual_synthesis(self, c) -> np.ndarray:
        """sum_i c_i e*_i."""
        return self.dual_vectors.T @ np.asarray(c, dtype=float)

    def reconstruct(self, x) -> np.ndarray:
        """sum_i <x, e_i> e*_i, which equals x for a frame."""
        return self.dual_synthesis(self.analysis(x))

    def conjugate_energy(self, xstar) -> float:
        """1/2 sum <x*, e*_i>^2, computed from the dual frame alone."""
        c = self.dual_vectors @ np.asarray(xstar, dtype=float)
        return 0.5 * float(c @ c)

    def check_invariants(self, seed: int = 0, samples: int = 100,
                         tol: ToleranceProfile = DEFAULT_TOL) -> dict:
        """Operator, frame-bound and reconstruction checks; returns worst residuals."""
        n = self.dim
        eye = np.eye(n)
        op = max(float(np.max(np.abs(self.S @ e - sum((e @ v) * v for v in self.vectors))))
                 for e in eye)
        rng = make_rng(seed, 7)
        xs = rng.standard_normal((samples, n))
        energy = np.sum((xs @ self.vectors.T) ** 2, axis=1)
        nx = np.sum(xs ** 2, axis=1)
        slack = 1e-12 * (1.0 + energy)
        lower_ok = bool(np.all(self.alpha * nx <= energy + slack))
        upper_ok = bool(np.all(energy <= self.beta * nx + slack))
        recon = float(np.max(np.linalg.norm(xs - xs @ self.vectors.T @ self.dual_vectors, axis=1)
                             / (1.0 + np.sqrt(nx))))
        return {"operator": op, "operator_ok": op <= 1e-12 * (1.0 + np.abs(self.S).max()),
                "lower_bound_ok": lower_ok, "upper_bound_ok": upper_ok,
                "reconstruction": recon, "reconstruction_ok": recon <= tol.vector_tol}

    def to_dict(self) -> dict:
        return {"vectors": self.vectors.tolist(), "S": self.S.tolist(),
                "dual_vectors": self.dual_vectors.tolist(),
                "alpha": self.alpha, "beta": self.beta}


def build_frame(vectors) -> FrameSystem:
    """Frame operator, canonical dual frame and optimal frame bounds."""
    E = np.array([np.asarray(v, dtype=float).reshape(-1) for v in vectors], dtype=float)
    if E.ndim != 2 or E.size == 0:
        raise UsageError("frame needs a non-empty list of vectors of equal length")
    if not np.all(np.isfinite(E)):
        raise UsageError("frame vectors must be finite")
    m, n = E.shape
    if m < n or np.linalg.matrix_rank(E) < n:
        raise NotAFrameError(f"{m} vectors of rank {np.linalg.matrix_rank(E)} do not span R^{n}")
    S = np.einsum("ij,ik->jk", E, E)
    S = 0.5 * (S + S.T)
    w = np.linalg.eigvalsh(S)
    S_inv = cho_solve(cho_factor(S), np.eye(n))
    S_inv = 0.5 * (S_inv + S_inv.T)
    dual = E @ S_inv
    for a in (E, S, S_inv, dual):
        a.setflags(write=False)
    return FrameSystem(E, S, S_inv, dual, float(w[0]), float(w[-1]))


def orthonormal_frame(n: int, seed: int | None = None) -> FrameSystem:
    """The standard basis, or a random orthonormal basis when a seed is given."""
    if seed is None:
        return build_frame(np.eye(n))
    q, _ = np.linalg.qr(make_rng(seed, 11).standard_normal((n, n)))
    return build_frame(q.T)


def random_frame(n: int, m: int, seed: int) -> FrameSystem:
    return build_frame(make_rng(seed, 13).standard_normal((m, n)))


def load_frame_csv(path) -> FrameSystem:
    """One frame vector per row, comma separated, no header."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"frame file {path} does not exist")
    return build_frame(np.loadtxt(path, delimiter=",", ndmin=2))


def frame_legendre(fs: FrameSystem, tol: ToleranceProfile = DEFAULT_TOL,
                   seed: int = 0) -> QuadraticSPD:
    """f = 1/2 <x, S x>, with its conjugate checked against the dual-frame formula."""
    f = QuadraticSPD(fs.S)
    rng = make_rng(seed, 17)
    for u in rng.standard_normal((5, fs.dim)):
        a, b = float(f.conj_value(u)), fs.conjugate_energy(u)
        if abs(a - b) > tol.value_tol * (1.0 + abs(a)):
            raise ArithmeticError(f"conjugate formula mismatch: {a} vs {b}")
    return f


@dataclass(frozen=True)
class FrameDecomposition:
    a: PrimalVector
    b: np.ndarray
    synthesis: np.ndarray
    reconstruction_residual: float
    synthesis_residual: float
    report: DecompositionReport

    def passes(self, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
        x = self.report.x.coords
        return bool(self.reconstruction_residual <= tol.vector_tol * (1.0 + np.linalg.norm(x))
                    and self.synthesis_residual <= tol.vector_tol * (1.0 + np.linalg.norm(self.b))
                    and self.report.converged)

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist(), "synthesis": self.synthesis.tolist(),
                "reconstruction_residual": self.reconstruction_residual,
                "synthesis_residual": self.synthesis_residual,
                "converged": self.report.converged}


def frame_decompose(fs: FrameSystem, phi: ConvexFunction, x,
                    pairing: PairingLedgerEntry | None = None,
                    tol: ToleranceProfile = DEFAULT_TOL) -> FrameDecomposition:
    """a(x) by the primal solve in the S geometry, b(x) by the dual solve.

    b(x) minimizes phi*(u) - <u, x> + 1/2 sum <u, e*_i>^2, i.e. the bprox of
    phi* relative to f* at S x.
    """
    f = frame_legendre(fs, tol)
    rep = decompose(f, phi, x, pairing, tol)
    b = np.array(rep.dstar.coords)
    synth = fs.dual_synthesis(fs.dual_vectors @ b)
    x_arr = rep.x.coords
    return FrameDecomposition(
        a=rep.p, b=b, synthesis=synth,
        reconstruction_residual=float(np.linalg.norm(x_arr - rep.p.coords - synth)),
        synthesis_residual=float(np.linalg.norm(synth - fs.S_inv @ b)),
        report=rep)
