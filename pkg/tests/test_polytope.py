import numpy as np
import pytest

from confpoly.errors import BasisMismatch, DimensionMismatch, InvalidGroup, InvalidSplit
from confpoly.polytope import (
    ConfidencePolytope, EpsilonSplit, Facet, build_polytope, combine_polytopes, contains,
    contains_bloch, empty_polytope, group_facets, grouping_scheme, split_epsilon,
)
from confpoly.quantum import embed_povm, embed_state, gellmann_basis, unembed_state
from confpoly.simulation import (
    axis_povm, bloch_qubit, coverage, mixed_state, mub_qubit, sample_counts, sic_qubit,
)

from conftest import random_density, random_povm_elements


def test_split_uniform():
    assert split_epsilon(0.001, 4) == [0.00025] * 4


def test_split_weighted():
    shares = split_epsilon(0.01, 3, EpsilonSplit("weighted", (1, 1, 2)))
    np.testing.assert_allclose(shares, [0.0025, 0.0025, 0.005], rtol=1e-15)
    assert abs(sum(shares) - 0.01) < 1e-15


@pytest.mark.parametrize("weights", [(1, 0, 2), (1, -1, 2), (1, 2)])
def test_split_bad_weights(weights):
    with pytest.raises(InvalidSplit):
        split_epsilon(0.01, 3, EpsilonSplit("weighted", weights))


def test_one_facet_per_element():
    povm = mub_qubit()
    poly = build_polytope(povm, [10, 20, 30, 5, 5, 30], 0.01)
    assert len(poly) == 6
    assert poly.epsilon_total == pytest.approx(0.01, abs=1e-15)
    np.testing.assert_allclose(poly.normals, povm.etas)  # d - 1 = 1


def test_symmetric_counts_give_equal_offsets():
    poly = build_polytope(sic_qubit(), [250] * 4, 0.001)
    assert np.ptp(poly.offsets) == 0.0


def test_clamped_facet_is_kept():
    poly = build_polytope(axis_povm("z"), [40, 0], 0.01)
    assert len(poly) == 2
    assert poly.facets[0].clamped and not poly.facets[1].clamped
    # bound 1 means tr(E sigma) <= 1, i.e. m*1 - 1 = 1 for a two-outcome projector
    assert poly.facets[0].offset == pytest.approx(1.0)


def test_facet_born_equivalence(rng):
    for d, k in ((2, 5), (3, 10)):
        povm = embed_povm(random_povm_elements(d, k, rng))
        for _ in range(50):
            counts = rng.multinomial(200, np.full(k, 1 / k))
            poly = build_polytope(povm, counts, 0.05)
            rho = random_density(d, rng)
            r = embed_state(rho, povm.basis)
            from confpoly.clopper_pearson import delta_bounds
            _, bound, _, _ = delta_bounds(counts, counts.sum(), 0.05 / k)
            born = np.einsum("kab,ba->k", povm.elements, rho).real
            lhs = poly.normals @ r - poly.offsets
            np.testing.assert_allclose(lhs, povm.weights * (born - bound), atol=1e-12)


def test_contains_rejects_single_violation():
    poly = build_polytope(mub_qubit(), [500] * 6, 0.01)
    assert contains(poly, bloch_qubit(0, 0, 0.05))
    assert not contains(poly, bloch_qubit(0.3, 0, 0))  # only the +X facet is violated
    slack = poly.offsets - poly.normals @ np.array([0.3, 0, 0])
    assert (slack < 0).sum() == 1


def test_contains_requires_positivity():
    basis = gellmann_basis(2)
    big = tuple(Facet(np.array(a, float), 10.0, 0.0025) for a in np.vstack([np.eye(3), -np.eye(3)])[:4])
    poly = ConfidencePolytope(2, basis, big, 0.01)
    assert contains_bloch(poly, np.array([0, 0, 1.5]))
    assert not contains(poly, unembed_state([0, 0, 1.5], basis))
    with pytest.raises(DimensionMismatch):
        contains(poly, np.eye(3) / 3)


def test_contains_matches_born_rule(rng):
    from confpoly.clopper_pearson import delta_bounds
    for d, k in ((2, 4), (3, 9)):
        povm = embed_povm(random_povm_elements(d, k, rng))
        rho_true = random_density(d, rng)
        for _ in range(40):
            counts = sample_counts(rho_true, povm, 300, rng)
            poly = build_polytope(povm, counts, 0.1)
            _, bound, _, _ = delta_bounds(counts, 300, 0.1 / k)
            rho = random_density(d, rng)
            born = np.einsum("kab,ba->k", povm.elements, rho).real
            assert contains(poly, rho) == bool(np.all(born <= bound + 1e-12 / povm.weights))


def test_grouping_scheme_sic():
    groups = grouping_scheme(4, (2, 2))
    assert groups == [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]
    povm = sic_qubit()
    counts = np.array([300, 200, 250, 250])
    extra = group_facets(povm, counts, groups, [0.001] * 6)
    assert len(extra) == 6
    poly = build_polytope(povm, counts, 0.01, groups=groups)
    assert len(poly) == 10
    assert poly.epsilon_total == pytest.approx(0.01, abs=1e-12)


def test_group_counts_additive():
    povm = sic_qubit()
    counts = np.array([30, 20, 25, 25])
    (facet,) = group_facets(povm, counts, [[0, 1]], [0.01])
    e_g = povm.elements[0] + povm.elements[1]
    (ref,) = build_polytope(embed_povm([e_g, np.eye(2) - e_g]), [50, 50], 0.02).facets[:1]
    np.testing.assert_allclose(facet.normal, ref.normal, atol=1e-12)
    assert facet.offset == pytest.approx(ref.offset, abs=1e-12)


@pytest.mark.parametrize("groups", [[[]], [[0, 1, 2, 3]], [[0, 1], [1, 0]], [[0, 7]], [[1, 1]]])
def test_invalid_groups(groups):
    with pytest.raises(InvalidGroup):
        group_facets(sic_qubit(), [1, 1, 1, 1], groups, [0.001] * len(groups))


def test_combine_budgets():
    povm = mub_qubit()
    poly = build_polytope(povm, [10] * 6, 0.001)
    both = combine_polytopes([poly, empty_polytope(povm.basis, 0.0005)])
    assert len(both) == len(poly)
    assert both.epsilon_total == pytest.approx(0.0015, abs=1e-15)
    twice = combine_polytopes([poly, poly])
    assert len(twice) == 12 and twice.epsilon_total == pytest.approx(0.002, abs=1e-15)


def test_combine_axis_measurements_is_box():
    parts = [build_polytope(axis_povm(a), [60, 40], 0.001) for a in "zxy"]
    box = combine_polytopes(parts)
    normals = box.normals
    assert len(normals) == 6
    np.testing.assert_allclose(np.abs(normals).sum(axis=1), 1.0)  # each normal is +/- a Pauli axis
    assert sorted(map(tuple, np.abs(normals).round(12))) == sorted(
        [(1.0, 0, 0)] * 2 + [(0, 1.0, 0)] * 2 + [(0, 0, 1.0)] * 2)


def test_combine_basis_mismatch():
    a = build_polytope(sic_qubit(), [1, 1, 1, 1], 0.01)
    b = build_polytope(embed_povm([np.eye(3)]), [5], 0.01)
    with pytest.raises(BasisMismatch):
        combine_polytopes([a, b])


def test_more_facets_never_enlarge(rng):
    povm = sic_qubit()
    counts = sample_counts(bloch_qubit(0.2, -0.1, 0.4), povm, 400, 11)
    base = build_polytope(povm, counts, 0.01)
    extra = group_facets(povm, counts, grouping_scheme(4, (2, 2)), [0.001] * 6)
    refined = ConfidencePolytope(2, base.basis, base.facets + tuple(extra), 0.016)
    pts = rng.uniform(-1, 1, (20000, 3))
    assert not np.any(contains_bloch(refined, pts) & ~contains_bloch(base, pts))
    combined = combine_polytopes([base, build_polytope(axis_povm("x"), [70, 30], 0.001)])
    assert not np.any(contains_bloch(combined, pts) & ~contains_bloch(base, pts))


def test_budget_conservation_through_pipeline():
    povm = sic_qubit()
    poly = build_polytope(povm, [5, 6, 7, 8], 0.003, groups=grouping_scheme(4, (2, 2)))
    assert sum(f.eps_i for f in poly.facets) == pytest.approx(0.003, abs=1e-12)
    combined = combine_polytopes([poly, build_polytope(axis_povm("y"), [3, 4], 0.002)])
    assert combined.epsilon_total == pytest.approx(0.005, abs=1e-12)


def test_budget_invariant_enforced():
    with pytest.raises(InvalidSplit):
        ConfidencePolytope(2, gellmann_basis(2), (Facet(np.zeros(3), 1.0, 0.1),), 0.2)


def test_facet_json_round_trip():
    poly = build_polytope(sic_qubit(), [1, 2, 3, 4], 0.01, groups=[[0, 1]])
    for f in poly.facets:
        g = Facet.from_dict(f.to_dict())
        np.testing.assert_array_equal(g.normal, f.normal)
        assert (g.offset, g.eps_i, g.clamped, g.provenance) == (f.offset, f.eps_i, f.clamped, f.provenance)


@pytest.mark.slow
def test_sic_coverage_eps_0001():
    eps, reps = 0.001, 2000
    res = coverage(bloch_qubit(0.3, 0.2, -0.5), sic_qubit(), 300, eps, reps, seed=5)
    assert res.rate >= 1 - eps - 3 * res.sigma


def test_grouped_coverage_small():
    res = coverage(mixed_state(2), sic_qubit(), 200, 0.1, 300, seed=9,
                   groups=grouping_scheme(4, (2, 2)))
    assert res.rate >= 0.9 - 3 * res.sigma
