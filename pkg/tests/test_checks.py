import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import special_ortho_group

from conftest import signed_basis
from dualmink.bodies import Ball, Ellipsoid
from dualmink.checks import (
    CheckStatus,
    HemisphereStatus,
    Regime,
    check_even,
    check_mass_balance,
    check_subspace_mass_inequality,
    classify_slack,
    evaluate_preconditions,
    great_subsphere_concentrated,
    hemisphere_concentrated,
    regime_of,
    subspace_mass_sup,
)
from dualmink.errors import EnumerationBudgetError
from dualmink.measures import DiscreteMeasure
from dualmink.sphere import ball_volume, build_grid


def symmetric(vectors, weights) -> DiscreteMeasure:
    vectors = np.asarray(vectors, dtype=float)
    vectors = vectors / np.linalg.norm(vectors, axis=1)[:, None]
    return DiscreteMeasure(np.vstack([vectors, -vectors]), np.concatenate([weights, weights]))


@pytest.fixture
def boundary_slack():
    """ Line mass fraction exactly 1/2, the q = 2 threshold """
    return DiscreteMeasure(signed_basis(3), [0.5, 0.5, 0.25, 0.25, 0.25, 0.25])


# ---------------------------------------------------------------------- #
# Evenness

def test_even_measures(basis3):
    assert check_even(basis3)
    assert not check_even(DiscreteMeasure(signed_basis(3), [1, 1.5, 1, 1, 1, 1]))


def test_even_tolerance():
    mu = DiscreteMeasure(signed_basis(2), [1.0, 1.0 + 1e-13, 1.0, 1.0])
    assert check_even(mu)
    assert not check_even(mu, tol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 16), count=st.integers(2, 12))
def test_symmetrized_measures_are_even(seed, count):
    rng = np.random.default_rng(seed)
    mu = symmetric(rng.standard_normal((count, 3)), rng.uniform(0.1, 1.0, count))
    assert check_even(mu)


# ---------------------------------------------------------------------- #
# Subspace mass

def test_heaviest_line(heavy_line):
    sup = subspace_mass_sup(heavy_line, 1)
    assert sup.fraction == pytest.approx(0.6, abs=1e-12)
    assert sup.witness == (0, 1)


def test_heaviest_plane(basis3):
    assert subspace_mass_sup(basis3, 2).fraction == pytest.approx(2 / 3, abs=1e-12)


def test_tilted_plane_collects_its_atoms():
    plane = [[1, 1, 0], [0, 0, 1], [1, 1, 1], [1, 1, -2]]
    mu = symmetric(plane + [[1, -1, 0]], np.full(5, 0.1))
    assert subspace_mass_sup(mu, 2).fraction == pytest.approx(0.8, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 16))
def test_sup_matches_brute_force_on_generic_atoms(seed):
    rng = np.random.default_rng(seed)
    atoms = rng.standard_normal((20, 3))
    atoms /= np.linalg.norm(atoms, axis=1)[:, None]
    weights = rng.uniform(0.1, 1.0, 20)
    mu = DiscreteMeasure(atoms, weights)
    top = np.sort(weights)[::-1]
    assert subspace_mass_sup(mu, 1).fraction == pytest.approx(top[0] / mu.total, rel=1e-12)
    assert subspace_mass_sup(mu, 2).fraction == pytest.approx((top[0] + top[1]) / mu.total, rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 16))
def test_sup_grows_with_the_subspace_dimension(seed):
    rng = np.random.default_rng(seed)
    mu = symmetric(rng.standard_normal((7, 4)), rng.uniform(0.1, 1.0, 7))
    fractions = [subspace_mass_sup(mu, i).fraction for i in (1, 2, 3)]
    assert fractions[0] <= fractions[1] <= fractions[2] <= 1


def test_subspace_dimension_is_checked(basis3):
    with pytest.raises(ValueError):
        subspace_mass_sup(basis3, 3)


def test_enumeration_budget():
    mu = DiscreteMeasure(build_grid(3, 12, "monte_carlo", seed=1).nodes, np.ones(144))
    with pytest.raises(EnumerationBudgetError):
        subspace_mass_sup(mu, 2)


@pytest.mark.parametrize("q", [0.7, 1.5, 2.0, 2.5])
def test_basis_measure_satisfies_the_inequality(basis3, q):
    assert check_subspace_mass_inequality(basis3, q).status is CheckStatus.PASS


def test_heavy_line_violates_the_inequality(heavy_line):
    check = check_subspace_mass_inequality(heavy_line, 2.0)
    assert check.status is CheckStatus.FAIL
    assert check.worst.dimension == 1
    assert check.worst.witness == (0, 1)
    assert check.worst.slack == pytest.approx(-0.1, abs=1e-12)


def test_full_mass_on_a_plane_fails():
    mu = DiscreteMeasure(signed_basis(3)[:4], np.ones(4))
    check = check_subspace_mass_inequality(mu, 1.5)
    assert check.status is CheckStatus.FAIL
    assert any(entry.sup_fraction == 1.0 and entry.status is CheckStatus.FAIL
               for entry in check.entries)


def test_boundary_slack_is_indeterminate(boundary_slack):
    check = check_subspace_mass_inequality(boundary_slack, 2.0)
    assert check.status is CheckStatus.INDETERMINATE
    assert check.worst.slack == 0.0


def test_uneven_measures_are_outside_the_inequality():
    check = check_subspace_mass_inequality(DiscreteMeasure(signed_basis(3), [2, 1, 1, 1, 1, 1]), 1.5)
    assert check.status is CheckStatus.INAPPLICABLE


@pytest.mark.parametrize("slack, status", [
    (1e-8, CheckStatus.PASS),
    (-1e-8, CheckStatus.FAIL),
    (1e-12, CheckStatus.INDETERMINATE),
    (-1e-12, CheckStatus.INDETERMINATE),
])
def test_classify_slack(slack, status):
    assert classify_slack(slack) is status


# ---------------------------------------------------------------------- #
# Hemispheres and subspheres

def test_orthant_is_concentrated():
    result = hemisphere_concentrated(DiscreteMeasure(np.eye(3), np.ones(3)))
    assert result.concentrated
    np.testing.assert_allclose(result.witness, np.ones(3) / math.sqrt(3), atol=1e-4)
    assert result.margin == pytest.approx(1 / math.sqrt(3), abs=1e-6)


def test_basis_is_free(basis3):
    result = hemisphere_concentrated(basis3)
    assert result.status is HemisphereStatus.FREE
    assert result.witness is None


def test_tetrahedron_is_free():
    vertices = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / math.sqrt(3)
    result = hemisphere_concentrated(DiscreteMeasure(vertices, np.ones(4)))
    assert result.status is HemisphereStatus.FREE
    assert result.margin <= -0.3


def test_random_symmetric_atoms_are_free():
    rng = np.random.default_rng(11)
    mu = symmetric(rng.standard_normal((50, 3)), np.ones(50))
    assert hemisphere_concentrated(mu).status is HemisphereStatus.FREE


def test_cap_is_concentrated():
    rng = np.random.default_rng(5)
    atoms = rng.standard_normal((30, 3)) * 0.3 + [0, 0, 1]
    atoms /= np.linalg.norm(atoms, axis=1)[:, None]
    atoms = atoms[atoms[:, 2] > 0.2]
    assert hemisphere_concentrated(DiscreteMeasure(atoms, np.ones(len(atoms)))).concentrated


def test_great_subsphere(basis3):
    assert great_subsphere_concentrated(DiscreteMeasure(signed_basis(3)[:4], np.ones(4)))
    assert not great_subsphere_concentrated(basis3)
    tilted = symmetric([[1, 1, 0], [0, 0, 1], [1, 1, 3]], np.ones(3))
    assert great_subsphere_concentrated(tilted)


# ---------------------------------------------------------------------- #
# Mass balance and regimes

def test_mass_balance_against_the_ball(sphere):
    balanced = check_mass_balance(DiscreteMeasure(signed_basis(3), np.full(6, ball_volume(3) / 6)),
                                  Ball(3), sphere)
    assert balanced.passed
    light = check_mass_balance(DiscreteMeasure(signed_basis(3), np.full(6, 1 / 6)), Ball(3), sphere)
    assert not light.passed
    assert light.gap == pytest.approx(1 - 3 / (4 * math.pi), abs=1e-3)


def test_mass_balance_uses_the_star_volume(sphere, basis3):
    balance = check_mass_balance(basis3, Ellipsoid([1.0, 2.0, 3.0]), sphere)
    assert balance.vol_Q == pytest.approx(8 * math.pi, rel=1e-2)


@pytest.mark.parametrize("q, regime", [
    (-0.5, Regime.NEGATIVE),
    (0.0, Regime.LOGARITHMIC),
    (2.9, Regime.SUBCRITICAL),
    (3.0, Regime.OUT_OF_RANGE),
])
def test_regimes(q, regime):
    assert regime_of(q, 3) is regime


def test_preconditions_pass_for_the_basis(basis3):
    report = evaluate_preconditions(basis3, 2.0, Ball(3))
    assert report.status is CheckStatus.PASS
    assert report.hemisphere_free and report.great_subsphere_free
    assert report.blocking() == []


def test_preconditions_report_the_heavy_line(heavy_line):
    report = evaluate_preconditions(heavy_line, 2.0)
    assert report.status is CheckStatus.FAIL
    [finding] = report.blocking()
    assert finding.name == "subspace_mass"
    assert "[0, 1]" in finding.detail
    assert report.to_document()["subspace_mass"]["entries"][0]["witness"] == [0, 1]


def test_out_of_range_q_can_be_overridden(basis3):
    report = evaluate_preconditions(basis3, 3.0)
    assert report.status is CheckStatus.FAIL
    assert [f.name for f in report.blocking()] == ["regime"]
    assert report.blocking(override=True) == []


def test_uneven_measure_can_be_overridden_below_n():
    report = evaluate_preconditions(DiscreteMeasure(signed_basis(3), [2, 1, 1, 1, 1, 1]), 1.0)
    assert report.subspace_mass is None
    assert report.blocking(override=True) == []


def test_logarithmic_case_needs_mass_balance(sphere, basis3):
    report = evaluate_preconditions(basis3, 0.0, Ball(3), sphere)
    assert [f.name for f in report.blocking()] == ["mass_balance"]
    assert report.mass_balance.gap == pytest.approx(0.761, abs=1e-3)
    assert report.blocking(override=True)


def test_negative_q_needs_atoms_outside_every_hemisphere():
    report = evaluate_preconditions(DiscreteMeasure(np.eye(3), np.ones(3)), -1.0)
    assert [f.name for f in report.blocking()] == ["hemisphere"]


def test_budget_overflow_is_indeterminate():
    mu = DiscreteMeasure(build_grid(3, 12, "monte_carlo", seed=1).nodes, np.ones(144))
    report = evaluate_preconditions(mu, 1.5)
    assert report.status is CheckStatus.INDETERMINATE
    assert report.findings[-1].name == "subspace_mass"


def test_report_document_is_plain(basis3):
    document = evaluate_preconditions(basis3, 1.5).to_document()
    assert document["schema"] == "dualmink.preconditions/1"
    assert document["regime"] == "subcritical"
    assert document["hemisphere"]["witness"] is None


# ---------------------------------------------------------------------- #
# Rotations

def rotate(mu: DiscreteMeasure, seed: int) -> DiscreteMeasure:
    rotation = special_ortho_group.rvs(mu.dim, random_state=seed)
    return DiscreteMeasure(mu.atoms @ rotation.T, mu.weights)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 16))
def test_checks_do_not_depend_on_the_frame(seed):
    rng = np.random.default_rng(seed)
    mu = symmetric(rng.standard_normal((6, 3)), rng.uniform(0.1, 1.0, 6))
    turned = rotate(mu, seed)

    assert check_even(turned)
    for i in (1, 2):
        assert subspace_mass_sup(turned, i).fraction == pytest.approx(
            subspace_mass_sup(mu, i).fraction, rel=1e-9)
    assert hemisphere_concentrated(turned).status is hemisphere_concentrated(mu).status
    assert great_subsphere_concentrated(turned) == great_subsphere_concentrated(mu)
    for q in (1.5, 2.5, -1.0):
        assert evaluate_preconditions(turned, q).status is evaluate_preconditions(mu, q).status


@pytest.mark.parametrize("seed", range(5))
def test_rotated_cap_stays_concentrated(seed):
    rng = np.random.default_rng(seed)
    atoms = rng.standard_normal((20, 3)) * 0.3 + [0, 0, 1]
    atoms /= np.linalg.norm(atoms, axis=1)[:, None]
    atoms = atoms[atoms[:, 2] > 0.2]
    mu = DiscreteMeasure(atoms, np.ones(len(atoms)))
    turned = rotate(mu, seed)
    assert hemisphere_concentrated(mu).concentrated
    assert hemisphere_concentrated(turned).concentrated
    assert hemisphere_concentrated(turned).margin == pytest.approx(
        hemisphere_concentrated(mu).margin, abs=1e-5)
