"""Numerical laboratory for generalized Moreau decompositions.

Bregman (D-) and anisotropic proximity operators over a catalog of Legendre
geometries and convex functions, with residual certificates for the
decomposition identities, their Hilbert and conic special cases, and frames.
"""
__version__ = "0.1.0"

from .space import (DEFAULT_TOL, DualVector, PrimalVector, ToleranceProfile,
                    UnsupportedGeometryError, UsageError, dual, make_rng, p_norm, pair,
                    primal)
from .cones import ConeSpec
from .domains import DomainSpec
from .legendre import (DomainError, LegendreFunction, bregman, duality_map, eval_conj,
                       eval_f, grad_conj, grad_f, make_geometry)
from .convex import (ConvexFunction, euclid_prox, eval_conj_phi, eval_phi,
                     fenchel_young_gap, make_phi, polar_project)
from .solvers import (CompositeProblem, InfeasibleStartError, SolveResult, brute_force_min,
                      minimize_composite, numeric_conjugate)
from .prox import (PairingLedgerEntry, PreconditionError, ProxResult, aprox, bprox,
                   certify_pairing, gen_project)
from .decomposition import (DecompositionReport, decompose, verify_hilbert_special_cases,
                            verify_resolvent)
from .frames import (FrameSystem, NotAFrameError, build_frame, frame_decompose,
                     frame_legendre)

__all__ = [
    "DEFAULT_TOL", "DualVector", "PrimalVector", "ToleranceProfile", "UnsupportedGeometryError",
    "UsageError", "dual", "make_rng", "p_norm", "pair", "primal", "ConeSpec", "DomainSpec",
    "DomainError", "LegendreFunction", "bregman", "duality_map", "eval_conj", "eval_f",
    "grad_conj", "grad_f", "make_geometry", "ConvexFunction", "euclid_prox", "eval_conj_phi",
    "eval_phi", "fenchel_young_gap", "make_phi", "polar_project", "CompositeProblem",
    "InfeasibleStartError", "SolveResult", "brute_force_min", "minimize_composite",
    "numeric_conjugate", "PairingLedgerEntry", "PreconditionError", "ProxResult", "aprox",
    "bprox", "certify_pairing", "gen_project", "DecompositionReport", "decompose",
    "verify_hilbert_special_cases", "verify_resolvent", "FrameSystem", "NotAFrameError",
    "build_frame", "frame_decompose", "frame_legendre",
]
