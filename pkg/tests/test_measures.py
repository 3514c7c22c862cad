import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import signed_basis
from dualmink.bodies import (
    Ball,
    Ellipsoid,
    SupportPolytope,
    cube,
    grid_polytope,
    nested_pair,
    random_polytope,
    truncated_cube,
)
from dualmink.errors import AmbiguousMatchingError, DimensionMismatchError
from dualmink.measures import (
    DiscreteMeasure,
    atom_errors,
    curvature_masses,
    dual_curvature_measure,
    dual_entropy,
    dual_mixed_volume,
    ellipsoid_dual_volume,
    ellipsoid_ratio_sweep,
    ellipsoid_volume_estimate,
    entropy_gap,
    entropy_upper_bound,
    half_sphere_moment,
    log_inverse_coordinate_integral,
    matching,
    negative_q_volume_bounds,
    polytope_volume,
    star_volume,
    total_variation_distance,
    uniform_measure,
)
from dualmink.sphere import ball_volume, build_grid

E1 = [1.0, 0.0, 0.0]
E2 = [0.0, 1.0, 0.0]


# ---------------------------------------------------------------------- #
# DiscreteMeasure

@pytest.mark.parametrize("atoms, weights", [
    ([[1.0, 0.1, 0.0]], [1.0]),
    ([E1], [0.0]),
    ([E1], [-1.0]),
    ([E1, E1], [1.0, 1.0]),
    ([E1], [math.inf]),
])
def test_measure_rejects_invalid_input(atoms, weights):
    with pytest.raises(ValueError):
        DiscreteMeasure(atoms, weights)


def test_measure_count_mismatch():
    with pytest.raises(DimensionMismatchError):
        DiscreteMeasure([E1, E2], [1.0])


def test_zero_atoms_need_permission():
    mu = DiscreteMeasure([E1, E2], [1.0, 0.0], allow_zero=True)
    assert list(mu.zero_atoms) == [1]
    support = mu.support_part()
    assert len(support) == 1 and support.total == 1.0


def test_totals_and_scaling(basis3):
    assert basis3.total == pytest.approx(1.0, abs=1e-15)
    assert basis3.scaled(3.0).total == pytest.approx(3.0, abs=1e-14)
    assert uniform_measure(signed_basis(3), 2.0).normalized().total == pytest.approx(1.0, abs=1e-15)


def test_evenness(basis3):
    assert basis3.even
    assert not DiscreteMeasure(signed_basis(3), [1, 2, 1, 1, 1, 1]).even
    assert not DiscreteMeasure(np.eye(3), np.ones(3)).even


# ---------------------------------------------------------------------- #
# Matching and distances

def test_total_variation_of_identical_measures(basis3):
    assert total_variation_distance(basis3, basis3) == 0.0


def test_total_variation_of_matched_atoms():
    distance = total_variation_distance(DiscreteMeasure([E1], [1.0]), DiscreteMeasure([E1], [0.8]))
    assert distance == pytest.approx(0.2, abs=1e-15)


def test_total_variation_of_disjoint_atoms():
    assert total_variation_distance(DiscreteMeasure([E1], [1.0]), DiscreteMeasure([E2], [1.0])) == 2.0


def test_matching_within_tolerance():
    nudged = np.array([1.0, 1e-10, 0.0]) / math.hypot(1.0, 1e-10)
    forward, backward = matching(DiscreteMeasure([E1, E2], [1, 1]), DiscreteMeasure([E2, nudged], [1, 1]))
    assert list(forward) == [1, 0]
    assert list(backward) == [1, 0]


def test_ambiguous_matching_is_refused():
    near = [math.cos(0.1), math.sin(0.1), 0.0]
    with pytest.raises(AmbiguousMatchingError):
        matching(DiscreteMeasure([E1], [1.0]), DiscreteMeasure([E1, near], [1.0, 1.0]), tol=0.5)


def test_atom_errors_are_signed():
    mu = DiscreteMeasure([E1, E2], [1.0, 2.0])
    nu = DiscreteMeasure([E1], [1.5])
    np.testing.assert_allclose(atom_errors(mu, nu), [-0.5, 2.0])


# ---------------------------------------------------------------------- #
# Dual quantities

def test_dual_volume_of_circumscribed_polytope(sphere):
    K = grid_polytope(build_grid(3, 32))
    assert dual_mixed_volume(K, Ball(3), 2.0, sphere).value == pytest.approx(4 * math.pi / 3, rel=1e-2)


def test_dual_volume_is_homogeneous(sphere):
    K = cube(3)
    base = dual_mixed_volume(K, Ball(3), 2.0, sphere).value
    assert dual_mixed_volume(K.scaled(2.0), Ball(3), 2.0, sphere).value / base == pytest.approx(4.0, abs=1e-12)


def test_cube_solid_volume(sphere):
    assert polytope_volume(cube(3), sphere) == pytest.approx(8.0, rel=1e-2)


def test_cube_facet_masses(sphere):
    masses, total = curvature_masses(cube(3), Ball(3), 3.0, sphere)
    np.testing.assert_allclose(masses, 4 / 3, rtol=1e-2)
    assert total == pytest.approx(math.fsum(masses), rel=1e-14)


def test_measure_at_q_equal_n_ignores_the_star(sphere):
    K = truncated_cube(3, 1.5)
    ball = dual_curvature_measure(K, Ball(3), 3.0, sphere)
    ellipsoid = dual_curvature_measure(K, Ellipsoid([0.5, 1.0, 2.0]), 3.0, sphere)
    assert np.max(np.abs(ball.weights - ellipsoid.weights)) <= 1e-10


def test_logarithmic_measure_totals_the_star_volume(sphere):
    K = grid_polytope(build_grid(3, 16))
    measure = dual_curvature_measure(K, Ball(3), 0.0, sphere)
    assert measure.total == pytest.approx(star_volume(Ball(3), sphere), rel=1e-12)
    assert measure.total == pytest.approx(ball_volume(3), rel=1e-3)


def test_measure_keeps_inactive_facets_with_zero_mass(sphere):
    normals = np.vstack([cube(3).normals, [1 / math.sqrt(2), 1 / math.sqrt(2), 0.0]])
    K = SupportPolytope(normals, np.concatenate([np.ones(6), [3.0]]))
    measure = dual_curvature_measure(K, Ball(3), 1.0, sphere)
    assert len(measure) == K.size
    assert list(measure.zero_atoms) == [K.size - 1]
    assert len(measure.support_part()) == K.size - 1


@settings(max_examples=15, deadline=None)
@given(q=st.floats(-2.0, 2.9), factor=st.floats(0.25, 4.0))
def test_measure_homogeneity(q, factor):
    grid = build_grid(3, 24)
    K = truncated_cube(3, 1.4)
    base = dual_curvature_measure(K, Ball(3), q, grid).weights
    scaled = dual_curvature_measure(K.scaled(factor), Ball(3), q, grid).weights
    np.testing.assert_allclose(scaled, factor ** q * base, rtol=1e-10, atol=0)


def test_dual_entropy_of_near_ball(sphere):
    K = grid_polytope(build_grid(3, 48))
    assert abs(dual_entropy(K, Ball(3), sphere)) <= 1e-2


def test_dual_entropy_shifts_under_scaling(sphere):
    K = truncated_cube(3, 1.5)
    shift = dual_entropy(K.scaled(2.0), Ball(3), sphere) - dual_entropy(K, Ball(3), sphere)
    assert shift == pytest.approx(math.log(2) * star_volume(Ball(3), sphere), rel=1e-10)
    assert shift == pytest.approx(math.log(2) * 4 * math.pi / 3, rel=1e-3)


def test_dimension_mismatch(sphere):
    with pytest.raises(DimensionMismatchError):
        dual_mixed_volume(cube(2), Ball(3), 1.0, sphere)


# ---------------------------------------------------------------------- #
# Estimates

def test_half_sphere_moments():
    assert half_sphere_moment(3, 0.0) == pytest.approx(2 * math.pi, rel=1e-12)
    assert half_sphere_moment(3, 1.0) == pytest.approx(math.pi, rel=1e-12)
    with pytest.raises(ValueError):
        half_sphere_moment(3, -1.0)


def test_log_inverse_coordinate_integral(sphere):
    assert log_inverse_coordinate_integral(3) == pytest.approx(4 * math.pi, rel=1e-8)
    quadrature = -np.log(np.abs(sphere.nodes[:, 0]))
    assert math.fsum(sphere.weights * quadrature) == pytest.approx(log_inverse_coordinate_integral(3), rel=1e-2)


@pytest.mark.parametrize("q", [-0.5, -1.0, -3.0])
def test_negative_q_volume_bounds(sphere, q):
    bounds = negative_q_volume_bounds(truncated_cube(3, 1.5), Ellipsoid([0.8, 1.0, 1.3]), q, sphere)
    assert bounds.holds
    assert bounds.lower > 0


@pytest.mark.parametrize("q", [-0.5, -1.0, -2.0])
@pytest.mark.parametrize("seed", range(20))
def test_negative_q_volume_bounds_for_random_polytopes(sphere, seed, q):
    K = random_polytope(3, 14, seed=seed, even=seed % 2 == 0)
    bounds = negative_q_volume_bounds(K, Ellipsoid([0.8, 1.0, 1.3]), q, sphere)
    assert bounds.holds


def test_negative_q_bounds_need_negative_q(sphere):
    with pytest.raises(ValueError):
        negative_q_volume_bounds(cube(3), Ball(3), 0.5, sphere)


def test_entropy_bound_holds_for_even_polytopes(sphere):
    assert entropy_gap(cube(3), Ball(3), sphere) >= 0
    assert entropy_gap(truncated_cube(3, 1.2, 2.0), Ellipsoid([1.0, 1.0, 2.0]), sphere) >= 0


@pytest.mark.parametrize("seed", range(20))
def test_entropy_bound_holds_for_random_even_polytopes(sphere, seed):
    K = random_polytope(3, 16, seed=seed)
    assert entropy_gap(K, Ball(3), sphere) >= 0
    assert entropy_gap(K, Ellipsoid([0.7, 1.0, 1.6]), sphere) >= 0


def test_entropy_bound_needs_even_polytopes(sphere):
    with pytest.raises(ValueError):
        entropy_upper_bound(cube(3).with_support([1, 2, 1, 1, 1, 1]), Ball(3), sphere)


def test_ellipsoid_estimate_of_the_ball():
    value, case = ellipsoid_volume_estimate([1.0, 1.0, 1.0], 2.0)
    assert value == 1.0
    assert case.case.value == "integer_lt_n"


def test_ellipsoid_dual_volume_of_the_ball(sphere):
    assert ellipsoid_dual_volume([1.0, 1.0, 1.0], 1.5, sphere) == pytest.approx(4 * math.pi / 3, rel=1e-3)


@pytest.mark.parametrize("q, case", [
    (0.5, "noninteger_lt_n"),
    (1.0, "integer_lt_n"),
    (1.5, "noninteger_lt_n"),
    (2.0, "integer_lt_n"),
    (3.0, "alpha_ge_n"),
    (3.5, "alpha_ge_n"),
])
def test_ellipsoid_sweep_stays_in_band(coarse_sphere, q, case):
    assert ellipsoid_volume_estimate([1.0, 2.0, 4.0], q)[1].case.value == case
    report = ellipsoid_ratio_sweep(q, 3, [1.0, 2.0, 4.0], coarse_sphere, seed=0,
                                   normals=build_grid(3, 24).nodes)
    assert len(report.rows) == 3
    assert report.min_ratio > 0
    assert report.band <= 10


# ---------------------------------------------------------------------- #
# Inclusion

@pytest.mark.parametrize("seed", range(20))
def test_dual_volumes_are_monotone_under_inclusion(coarse_sphere, seed):
    inner, outer = nested_pair(3, 12, seed=seed)
    Q = Ellipsoid([0.8, 1.0, 1.3])
    assert (dual_mixed_volume(inner, Q, 2.0, coarse_sphere).value
            <= dual_mixed_volume(outer, Q, 2.0, coarse_sphere).value)
    assert (dual_mixed_volume(inner, Q, -1.0, coarse_sphere).value
            >= dual_mixed_volume(outer, Q, -1.0, coarse_sphere).value)
