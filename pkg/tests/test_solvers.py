import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from moreaulab.convex import make_phi
from moreaulab.legendre import make_geometry
from moreaulab.solvers import (CompositeProblem, GridError, InfeasibleStartError,
                               brute_force_min, minimize_composite, numeric_conjugate)
from moreaulab.space import DEFAULT_TOL, UsageError

from conftest import vectors


def euclid_problem(x, phi, init=None):
    x = np.asarray(x, dtype=float)
    return CompositeProblem(
        smooth_value=lambda y: 0.5 * np.sum((y - x) ** 2),
        smooth_grad=lambda y: y - x,
        nonsmooth=phi,
        interior_guard=lambda y: True,
        init=np.zeros_like(x) if init is None else np.asarray(init, dtype=float),
        fallback_inits=[phi.dom.interior_point],
    )


def test_soft_threshold_example():
    res = minimize_composite(euclid_problem([2, -0.5], make_phi("l1", 2)), DEFAULT_TOL, 100)
    assert res.converged
    assert np.allclose(res.minimizer, [1, 0], atol=1e-9)
    assert res.gap_certificate <= 1e-6


def test_orthant_clamp_example():
    res = minimize_composite(euclid_problem([1, -2], make_phi("orthant", 2)))
    assert np.allclose(res.minimizer, [1, 0], atol=1e-12)


def test_entropy_fx_part_returns_x():
    f = make_geometry("shannon_entropy", 2)
    x = np.array([0.2, 5.0])
    gx = f.grad(x)
    prob = CompositeProblem(
        smooth_value=lambda y: f.value(y) - y @ gx,
        smooth_grad=lambda y: f.grad(y) - gx,
        nonsmooth=make_phi("zero", 2),
        interior_guard=lambda y: bool(np.all(y > 0)),
        init=np.ones(2),
        curvature=f.curvature,
    )
    res = minimize_composite(prob)
    assert res.converged
    assert np.allclose(res.minimizer, x, atol=1e-8)


def test_infeasible_start_raises():
    prob = euclid_problem([1, 1], make_phi("zero", 2))
    prob.interior_guard = lambda y: False
    with pytest.raises(InfeasibleStartError):
        minimize_composite(prob)


def test_fallback_start_is_used():
    prob = euclid_problem([1, 1], make_phi("zero", 2), init=[-1.0, -1.0])
    prob.interior_guard = lambda y: bool(np.all(y > 0))
    prob.fallback_inits = [np.array([0.5, 0.5])]
    res = minimize_composite(prob)
    assert np.allclose(res.minimizer, [1, 1], atol=1e-8)


def test_max_iter_validation_and_unconverged_flag():
    with pytest.raises(UsageError):
        minimize_composite(euclid_problem([1, 1], make_phi("zero", 2)), max_iter=0)
    f = make_geometry("pnorm_energy", 5, p=1.5)
    x = np.linspace(-3, 3, 5)
    prob = CompositeProblem(lambda y: f.value(x - y), lambda y: -f.grad(x - y),
                            make_phi("l1", 5), lambda y: True, np.zeros(5))
    res = minimize_composite(prob, max_iter=1)
    assert res.iterations <= 1
    if not res.converged:
        assert res.stop_reason


def test_determinism():
    prob = euclid_problem([0.3, -1.7, 2.2], make_phi("soc", 3))
    a, b = minimize_composite(prob), minimize_composite(prob)
    assert np.array_equal(a.minimizer, b.minimizer)
    assert a.to_dict() == b.to_dict()


@given(vectors(3, 5.0), st.sampled_from(["l1", "orthant", "soc", "box", "zero"]))
def test_matches_closed_form_prox(x, name):
    phi = make_phi(name, 3)
    res = minimize_composite(euclid_problem(x, phi))
    assert res.converged
    assert np.max(np.abs(res.minimizer - phi.prox(x, 1.0))) <= 1e-6 * (1 + np.abs(x).max())


@given(vectors(2, 2.0), st.sampled_from(["l1", "orthant", "box"]))
def test_agrees_with_grid_oracle(x, name):
    phi = make_phi(name, 2)
    res = minimize_composite(euclid_problem(x, phi))

    def obj(pts):
        return phi.value(pts) + 0.5 * np.sum((pts - x) ** 2, axis=-1)

    grid = brute_force_min(obj, (-4 * np.ones(2), 4 * np.ones(2)), 201)
    assert np.max(np.abs(res.minimizer - grid.point)) <= grid.spacing.max()


def test_brute_force_examples():
    bowl = brute_force_min(lambda p: np.sum((p - [1, 2]) ** 2, axis=-1),
                           ([-3, -3], [3, 3]), 61)
    assert np.max(np.abs(bowl.point - [1, 2])) <= 0.05
    l1 = make_phi("l1", 2)
    g = brute_force_min(lambda p: l1.value(p) + 0.5 * np.sum((p - [2, -0.5]) ** 2, axis=-1),
                        ([-3, -3], [3, 3]))
    assert np.max(np.abs(g.point - [1, 0])) <= g.accuracy.max() + 1e-12
    orth = make_phi("orthant", 2)
    g = brute_force_min(lambda p: orth.value(p) + np.sum((p + 1) ** 2, axis=-1),
                        ([-3, -3], [3, 3]))
    assert np.all(g.point >= 0)


def test_brute_force_scalar_objective_and_errors():
    def scalar(p):
        if np.ndim(p) != 1:
            raise TypeError("one point at a time")
        return (p[0] - 0.25) ** 2

    g = brute_force_min(scalar, ([-1.0], [1.0]), 41)
    assert abs(g.point[0] - 0.25) <= g.spacing[0]
    with pytest.raises(GridError):
        brute_force_min(lambda p: np.full(len(p), np.inf), ([0, 0], [1, 1]), 11)
    with pytest.raises(UsageError):
        brute_force_min(lambda p: 0.0, (np.zeros(4), np.ones(4)))
    with pytest.raises(UsageError):
        brute_force_min(lambda p: 0.0, ([0], [1]), 1000)


def test_numeric_conjugate_examples():
    sq = numeric_conjugate(lambda p: 0.5 * np.sum(p ** 2, axis=-1), [1, 0], ([-4, -4], [4, 4]))
    assert sq.value == pytest.approx(0.5, abs=1e-6)
    assert not sq.boundary_warning
    orth = make_phi("orthant", 2)
    est = numeric_conjugate(orth.value, [-1, -1], ([-4, -4], [4, 4]))
    assert est.value == pytest.approx(0.0, abs=1e-12)
    assert numeric_conjugate(orth.value, [1, 0], ([-4, -4], [4, 4])).boundary_warning
    with pytest.raises(UsageError):
        numeric_conjugate(orth.value, [1, 0, 0], (np.zeros(3), np.ones(3)))
