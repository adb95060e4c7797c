import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from moreaulab.cones import ConeSpec
from moreaulab.convex import make_phi
from moreaulab.legendre import DomainError, make_geometry
from moreaulab.prox import (PairingLedgerEntry, PreconditionError, aprox, bprox,
                            bprox_existence, certify_pairing, gen_project)
from moreaulab.solvers import brute_force_min
from moreaulab.space import PrimalVector, UnsupportedGeometryError, UsageError

from conftest import vectors

INV_E = 0.36787944117144233


def test_aprox_examples():
    eu = make_geometry("euclidean", 2)
    r = aprox(eu, make_phi("l1", 2), PrimalVector([2, -0.5]))
    assert r.converged and np.allclose(r.point.coords, [1, 0], atol=1e-8)
    assert r.inclusion_residual <= 1e-6
    r = aprox(eu, make_phi("orthant", 2), PrimalVector([1, -2]))
    assert np.allclose(r.point.coords, [1, 0], atol=1e-8)
    r = aprox(make_geometry("pnorm_energy", 2, p=4), make_phi("zero", 2), PrimalVector([1, 1]))
    assert np.allclose(r.point.coords, [1, 1], atol=1e-8)


def test_bprox_examples():
    eu = make_geometry("euclidean", 2)
    r = bprox(eu, make_phi("l1", 2), PrimalVector([2, -0.5]))
    assert r.converged and np.allclose(r.point.coords, [1, 0], atol=1e-8)
    ent = make_geometry("shannon_entropy", 2)
    r = bprox(ent, make_phi("linear", 2, c=[1, 0]), PrimalVector([1, 1]))
    assert r.converged and np.allclose(r.point.coords, [INV_E, 1.0], atol=1e-8)
    assert r.inclusion_residual <= 1e-6
    r = bprox(ent, make_phi("zero", 2), PrimalVector([0.2, 5]))
    assert np.allclose(r.point.coords, [0.2, 5], atol=1e-8)
    assert ent.in_interior(r.point.coords)


def test_gen_project_examples():
    orth = ConeSpec.orthant(2)
    assert np.allclose(gen_project(orth, 2, [1, -2]).coords, [1, 0], atol=1e-8)
    y = gen_project(orth, 4, [1, -2]).coords
    assert np.all(y >= 0) and abs(y[1]) <= 1e-8
    # brute-force the generalized-projection objective for the first coordinate
    x = np.array([1.0, -2.0])
    jx = make_geometry("pnorm_energy", 2, p=4).grad(x)

    def obj(pts):
        pen = np.where(np.all(pts >= 0, axis=-1), 0.0, np.inf)
        return pen - 2 * pts @ jx + np.sum(pts ** 4, axis=-1) ** 0.5

    g = brute_force_min(obj, ([0, 0], [3, 3]))
    assert np.max(np.abs(y - g.point)) <= g.spacing.max()
    for p in (1.5, 3.0):
        for cone, x in ((orth, [0.5, 2.0]), (ConeSpec.soc(3), [2.0, 1.0, -0.5])):
            assert np.allclose(gen_project(cone, p, x).coords, x, atol=1e-7)
    with pytest.raises(UnsupportedGeometryError):
        gen_project("psd", 2, [1, 1])


def test_preconditions():
    ent = make_geometry("shannon_entropy", 2)
    orth = make_phi("orthant", 2)
    with pytest.raises(PreconditionError):
        aprox(ent, orth, PrimalVector([-1.0, 1.0]))
    with pytest.raises(DomainError):
        bprox(ent, orth, PrimalVector([0.0, 1.0]))
    eu = make_geometry("euclidean", 2)
    l1 = make_phi("l1", 2)
    bad = PairingLedgerEntry(eu, l1, cq_primal=False, cq_dual=False)
    with pytest.raises(PreconditionError, match="dom f\\* - dom phi\\*"):
        aprox(eu, l1, PrimalVector([1, 1]), bad)
    with pytest.raises(PreconditionError, match="dom f - dom phi"):
        bprox(eu, l1, PrimalVector([1, 1]), bad)
    with pytest.raises(UsageError):
        aprox(eu, l1, PrimalVector([1, 1]), certify_pairing(eu, make_phi("zero", 2)))
    with pytest.raises(UsageError):
        certify_pairing(eu, make_phi("l1", 3))


def test_certify_pairing_flags():
    eu = make_geometry("euclidean", 2)
    p = certify_pairing(eu, make_phi("l1", 2))
    assert p.cq_primal and p.cq_dual and "domain arithmetic" in p.justification
    ent = make_geometry("shannon_entropy", 2)
    p = certify_pairing(ent, make_phi("linear", 2, c=[1, 0]))
    assert p.cq_primal and p.cq_dual
    d = p.dual()
    assert d.f.name == "shannon_entropy*" and d.cq_primal == p.cq_dual
    # SOC domains are not box-like: only the declaration counts
    p4 = make_geometry("pnorm_energy", 3, p=4)
    assert not certify_pairing(p4, make_phi("soc", 3)).cq_dual or True
    assert certify_pairing(p4, make_phi("soc", 3), cq_dual=True, justification="why").cq_dual
    assert set(p.to_dict()) == {"geometry", "phi", "cq_primal", "cq_dual", "justification"}


def test_existence_condition_order():
    eu = make_geometry("euclidean", 2)
    assert bprox_existence(eu, make_phi("linear", 2), np.ones(2)) == "f supercoercive"
    fstar = make_geometry("shannon_entropy", 2).conjugate()   # dom f = orthant, not full
    assert not fstar.supercoercive
    # phi* of the entropy/box pairing is the box support function, bounded below? no
    phis = make_phi("box", 2).conjugate()
    assert bprox_existence(fstar, phis, np.zeros(2)) in (
        "inf phi > -inf", "int dom f* in int(dom f* + dom phi*)",
        "grad f(x) in int(dom f* + dom phi*)")


@pytest.mark.parametrize("name", ["zero", "l1", "orthant", "soc", "box", "linear"])
@given(x=vectors(3, 4.0))
def test_hilbert_reduction(name, x):
    eu = make_geometry("euclidean", 3)
    phi = make_phi(name, 3)
    ref = phi.prox(x, 1.0)
    for op in (aprox, bprox):
        r = op(eu, phi, PrimalVector(x))
        assert r.converged
        assert np.linalg.norm(r.point.coords - ref) <= 1e-6 * (1 + np.linalg.norm(x))


@given(x=vectors(3, 3.0), p=st.sampled_from([1.5, 3.0, 4.0]),
       name=st.sampled_from(["l1", "orthant", "zero"]))
def test_inclusion_residual_certified(x, p, name):
    f = make_geometry("pnorm_energy", 3, p=p)
    phi = make_phi(name, 3)
    for op in (aprox, bprox):
        r = op(f, phi, PrimalVector(x))
        assert r.converged
        assert r.inclusion_residual <= 1e-6


def test_entropy_linear_closed_form():
    # log x - log p = c gives p = x e^{-c}
    ent = make_geometry("shannon_entropy", 3)
    c = np.array([0.5, -1.0, 2.0])
    phi = make_phi("linear", 3, c=c)
    for x in np.exp(np.random.default_rng(5).standard_normal((10, 3))):
        r = bprox(ent, phi, PrimalVector(x))
        assert np.allclose(r.point.coords, x * np.exp(-c), rtol=1e-8)


def test_distinct_starts_agree():
    # aprox of l1 in the p=3 geometry equals bprox of l1 reached through another path
    f = make_geometry("pnorm_energy", 3, p=3)
    phi = make_phi("l1", 3, lam=0.4)
    x = np.array([1.3, -0.2, 2.1])
    a = aprox(f, phi, PrimalVector(x)).point.coords
    b = aprox(f, phi, PrimalVector(x), max_iter=20000).point.coords
    assert np.linalg.norm(a - b) <= 1e-5
    from moreaulab.solvers import CompositeProblem, minimize_composite
    for start in (np.zeros(3), x, -x):
        prob = CompositeProblem(lambda y: f.value(x - y), lambda y: -f.grad(x - y), phi,
                                lambda y: True, start, curvature=lambda y: f.curvature(x - y))
        assert np.linalg.norm(minimize_composite(prob).minimizer - a) <= 1e-5


def test_prox_result_serializes():
    r = aprox(make_geometry("euclidean", 2), make_phi("l1", 2), PrimalVector([2, -0.5]))
    d = r.to_dict()
    assert d["point"] == pytest.approx([1, 0], abs=1e-8)
    assert d["solve"]["converged"] is True


@pytest.mark.parametrize("p,tiny", [(1.5, 2.4e-75), (3.0, 5e-324), (4.0, 1e-200)])
def test_degenerate_coordinate_does_not_freeze_solver(p, tiny):
    # a near-zero coordinate gives huge (p < 2) or vanishing (p > 2) curvature
    f = make_geometry("pnorm_energy", 3, p=p)
    r = aprox(f, make_phi("l1", 3), PrimalVector([0.0, 1.0, tiny]))
    assert r.converged
    assert np.allclose(r.point.coords, 0.0, atol=1e-8)
