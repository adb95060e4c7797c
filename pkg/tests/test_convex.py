import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from moreaulab.cones import ConeSpec
from moreaulab.convex import (ConeIndicator, euclid_prox, eval_conj_phi, eval_phi,
                              fenchel_young_gap, make_phi, polar_project)
from moreaulab.solvers import numeric_conjugate
from moreaulab.space import DualVector, PrimalVector, UnsupportedGeometryError, UsageError

from conftest import vectors

N = 3
PHIS = {
    "zero": make_phi("zero", N),
    "linear": make_phi("linear", N, c=[1.0, -2.0, 0.5]),
    "l1": make_phi("l1", N, lam=0.7),
    "orthant": make_phi("orthant", N),
    "soc": make_phi("soc", N),
    "subspace": make_phi("subspace", N, generators=[[1.0, 1.0, 0.0]]),
    "halfspace": make_phi("halfspace", N, normal=[1.0, 2.0, -1.0]),
    "box": make_phi("box", N, a=[-1.0, 0.0, 0.5], b=[2.0, 1.0, 0.5]),
    "quadratic": make_phi("quadratic", N, Q=[[2.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
                          c=[0.3, -0.1, 0.0]),
}


def test_eval_phi_examples():
    l1 = make_phi("l1", 2, lam=2.0)
    assert eval_phi(l1, PrimalVector([1, -3])) == 8.0
    orth = make_phi("orthant", 2)
    assert eval_phi(orth, PrimalVector([1, 0])) == 0.0
    assert eval_phi(orth, PrimalVector([-1, 0])) == np.inf


def test_eval_conj_phi_examples():
    assert eval_conj_phi(make_phi("orthant", 2), DualVector([-1, -2])) == 0.0
    assert eval_conj_phi(make_phi("l1", 2, lam=2.0), DualVector([1, 3])) == np.inf
    assert eval_conj_phi(make_phi("zero", 2), DualVector([0, 0])) == 0.0
    assert eval_conj_phi(make_phi("linear", 2, c=[1, 2]), DualVector([1, 2])) == 0.0
    box = make_phi("box", 2, a=[0.0, -1.0], b=[1.0, 3.0])
    # support function sum max(a_i u_i, b_i u_i)
    assert eval_conj_phi(box, DualVector([2.0, -1.0])) == pytest.approx(2.0 + 1.0)


def test_euclid_prox_examples():
    assert np.array_equal(euclid_prox(make_phi("l1", 2), PrimalVector([2, -0.5]), 1).coords, [1, 0])
    assert np.array_equal(euclid_prox(make_phi("orthant", 2), PrimalVector([1, -2])).coords, [1, 0])
    assert np.array_equal(euclid_prox(make_phi("zero", 2), PrimalVector([5, 5])).coords, [5, 5])
    with pytest.raises(UsageError):
        euclid_prox(make_phi("zero", 2), PrimalVector([5, 5]), 0.0)


def test_fenchel_young_gap_examples():
    l1 = make_phi("l1", 2)
    assert fenchel_young_gap(l1, PrimalVector([2, 0]), DualVector([1, 0.3])) == 0.0
    orth = make_phi("orthant", 2)
    assert fenchel_young_gap(orth, PrimalVector([1, 0]), DualVector([0, -2])) == 0.0
    zero = make_phi("zero", 2)
    assert fenchel_young_gap(zero, PrimalVector([1, 1]), DualVector([1, 1])) == np.inf
    assert fenchel_young_gap(l1, PrimalVector([2, 0]), DualVector([0.5, 0])) == pytest.approx(1.0)


def test_polar_project_examples():
    assert np.array_equal(polar_project(ConeSpec.orthant(2), PrimalVector([1, -2])).coords, [0, -2])
    v = ConeSpec.subspace([[1.0, 0.0]])
    assert np.allclose(polar_project(v, PrimalVector([3, 4])).coords, [0, 4])
    assert np.allclose(polar_project(ConeSpec.soc(3), PrimalVector([5, 3, 4])).coords, 0.0)
    with pytest.raises(UnsupportedGeometryError):
        polar_project("psd", PrimalVector([1, 2]))


def test_factory_errors():
    with pytest.raises(KeyError):
        make_phi("huber", 2)
    with pytest.raises(UsageError):
        make_phi("subspace", 2)
    with pytest.raises(UsageError):
        make_phi("halfspace", 2)
    with pytest.raises(UsageError):
        make_phi("quadratic", 2, Q=[[1.0, 0.0], [0.0, -1.0]])


def test_linear_default_coefficient_is_deterministic():
    assert np.allclose(make_phi("linear", 3).c, np.sin([1.0, 2.0, 3.0]))


def test_bounded_below_flags():
    assert PHIS["zero"].bounded_below and PHIS["l1"].bounded_below
    assert not PHIS["linear"].bounded_below
    assert make_phi("linear", 2, c=[0, 0]).bounded_below
    # c has a component outside range(Q)
    assert not make_phi("quadratic", 2, Q=[[1.0, 0.0], [0.0, 0.0]], c=[0.0, 1.0]).bounded_below


def _in_dom(phi, x):
    return phi.prox(x, 1.0)


@pytest.mark.parametrize("name", list(PHIS))
@given(x=vectors(N), y=vectors(N))
def test_convexity_spot_check(name, x, y):
    phi = PHIS[name]
    a, b = _in_dom(phi, x), _in_dom(phi, y)
    mid = phi.value(0.5 * (a + b))
    assert mid <= 0.5 * phi.value(a) + 0.5 * phi.value(b) + 1e-8 * (1 + abs(phi.value(a)) + abs(phi.value(b)))


@pytest.mark.parametrize("name", list(PHIS))
@given(x=vectors(N), u=vectors(N))
def test_fenchel_young_inequality(name, x, u):
    phi = PHIS[name]
    a = _in_dom(phi, x)
    s = phi.conjugate().prox(u, 1.0)
    lhs = phi.value(a) + phi.conj_value(s)
    assert np.isfinite(lhs)
    assert lhs >= a @ s - 1e-8 * (1 + abs(a @ s))


@pytest.mark.parametrize("name", list(PHIS))
@given(x=vectors(N))
def test_euclidean_moreau_identity(name, x):
    phi = PHIS[name]
    p = phi.prox(x, 1.0)
    d = phi.conjugate().prox(x, 1.0)
    assert np.linalg.norm(p + d - x) <= 1e-6 * (1 + np.linalg.norm(x))


@pytest.mark.parametrize("name", list(PHIS))
@given(x=vectors(N), gamma=st.floats(0.1, 10.0))
def test_prox_optimality_certificate(name, x, gamma):
    phi = PHIS[name]
    y = phi.prox(x, gamma)
    gap = fenchel_young_gap(phi, PrimalVector(y), DualVector((x - y) / gamma))
    assert gap <= 1e-6 * (1 + np.abs(x).max() / gamma) ** 2


@pytest.mark.parametrize("name", ["zero", "linear", "l1", "orthant", "box", "quadratic"])
def test_conjugate_matches_grid_oracle(name):
    phi = make_phi(name, 2, **({"c": [0.5, -0.25]} if name == "linear" else {}),
                   **({"Q": [[2.0, 0.5], [0.5, 1.0]], "c": [0.2, 0.0]} if name == "quadratic" else {}))
    if name in ("zero", "linear"):
        # conjugate is an indicator of a point; probe on and off it
        c = np.zeros(2) if name == "zero" else np.array([0.5, -0.25])
        on = numeric_conjugate(phi.value, c, (-np.ones(2), np.ones(2)))
        assert on.value == pytest.approx(0.0, abs=1e-12)
        off = numeric_conjugate(phi.value, c + 0.3, (-np.ones(2), np.ones(2)))
        assert off.boundary_warning and phi.conj_value(c + 0.3) == np.inf
        return
    rng = np.random.default_rng(4)
    for u in rng.uniform(-0.6, 0.6, (5, 2)):
        if name == "orthant":
            u = -np.abs(u)
        est = numeric_conjugate(phi.value, u, (-3 * np.ones(2), 3 * np.ones(2)))
        lip = np.abs(u).sum() + 4.0 * (name == "quadratic") * 3
        exact = phi.conj_value(u)
        assert est.value <= exact + 1e-12
        assert exact - est.value <= lip * est.spacing.max() + 1e-12


def test_soc_prox_with_vector_step_is_weighted_projection():
    phi = ConeIndicator(ConeSpec.soc(3))
    z = np.array([-0.5, 2.0, -1.0])
    gamma = np.array([1.0, 0.5, 2.0])
    y = phi.prox(z, gamma)
    assert phi.value(y) == 0.0
    # the weighted objective cannot be beaten by the plain projection
    obj = lambda v: np.sum((v - z) ** 2 / gamma)
    assert obj(y) <= obj(phi.prox(z, 1.0)) + 1e-12
