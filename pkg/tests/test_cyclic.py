import pytest
from hypothesis import given, settings, strategies as st

from etalehom.cyclic import (
    FinDimAlgebra, NotAnAlgebra, SplittingViolation, StabilizationNotReached, WindowTooSmall,
    convolution_algebra, cyclic_dims, cyclic_module_of_algebra, hochschild_dims, localize_by_loop_orbit,
    loop_comparison, matrix_unit_table, mixed_complex, normalized_mixed_complex, periodic, relative_mixed_complex,
    sbi_check, verify_nonclosing_acyclic,
)
from etalehom.groupoids import (
    action_groupoid, cyclic_group, discrete_groupoid, disjoint_union, pair_groupoid, product, product_group,
    symmetric_group,
)
from etalehom.linalg import GF, QQ

import oracles

DUAL = FinDimAlgebra(QQ, 2, {(0, 0): {0: 1}, (0, 1): {1: 1}, (1, 0): {1: 1}}, {0: 1})
UPPER = FinDimAlgebra(QQ, 3, {(0, 0): {0: 1}, (0, 1): {1: 1}, (1, 2): {1: 1}, (2, 2): {2: 1}}, {0: 1, 2: 1})
M2 = FinDimAlgebra(QQ, 4, matrix_unit_table(2), {0: 1, 3: 1})


def test_not_an_algebra():
    with pytest.raises(NotAnAlgebra):
        FinDimAlgebra(QQ, 2, {(0, 0): {0: 1}, (1, 1): {0: 1}, (0, 1): {1: 1}, (1, 0): {0: 1}}, {0: 1})


@pytest.mark.parametrize("alg", [DUAL, UPPER, M2, convolution_algebra(cyclic_group(2), QQ)])
def test_hochschild_matches_dense_oracle(alg):
    top = 2 if alg.dim > 2 else 3
    expected = oracles.hochschild_dims_dense(alg.dim, alg.products, alg.unit, top)
    assert hochschild_dims(alg, top) == expected
    assert hochschild_dims(cyclic_module_of_algebra(alg, top + 1), top) == expected


def test_known_values():
    assert hochschild_dims(DUAL, 3) == [2, 1, 1, 1]
    assert cyclic_dims(DUAL, 3) == [2, 0, 2, 0]
    assert hochschild_dims(UPPER, 3) == [2, 0, 0, 0]
    assert hochschild_dims(M2, 3) == [1, 0, 0, 0]
    assert cyclic_dims(M2, 4) == [1, 0, 1, 0, 1]


def test_group_algebra_classes():
    s3 = symmetric_group(3)
    assert hochschild_dims(relative_mixed_complex(s3, QQ, 4).complex, 3) == [3, 0, 0, 0]
    assert cyclic_dims(relative_mixed_complex(s3, QQ, 5).complex, 4) == [3, 0, 3, 0, 3]


def test_modular_group_algebra():
    # F2[Z2] = F2[x]/x^2: one class per degree for each element
    a = convolution_algebra(cyclic_group(2), GF(2))
    assert hochschild_dims(a, 3) == [2, 2, 2, 2]
    with pytest.raises(ValueError):
        cyclic_dims(a, 2)


def test_mixed_complex_identities():
    for m in (mixed_complex(cyclic_module_of_algebra(DUAL, 4)), normalized_mixed_complex(UPPER, 4)):
        m.verify()


def test_cyclic_module_relations():
    cyclic_module_of_algebra(M2, 3).verify()


def test_sbi_dual_numbers_has_nonzero_connecting_map():
    r = sbi_check(DUAL, 4)
    assert r.exact
    assert any(r.rank_b.values())


def test_periodic_semisimple_and_dual():
    p = periodic(M2, 0, 6)
    assert p.dim == 1
    with pytest.raises(StabilizationNotReached):
        periodic(DUAL, 0, 6)
    with pytest.raises(WindowTooSmall):
        periodic(M2, 1, 2)


def test_restrict_rejects_unstable_cells():
    m = normalized_mixed_complex(DUAL, 3)
    with pytest.raises(SplittingViolation):
        # B sends the class of the nilpotent to (1, nilpotent), which is left out
        m.restrict({0: [1], 1: [1], 2: [], 3: []})


def test_nonclosing_summand_is_acyclic():
    assert all(x == 0 for x in verify_nonclosing_acyclic(pair_groupoid(2), QQ, 3))


def test_localization_of_s3():
    loc = localize_by_loop_orbit(symmetric_group(3), QQ, 2)
    assert loc.complete
    assert sorted(v[0] for v in loc.per_orbit.values()) == [1, 1, 1]
    units = localize_by_loop_orbit(symmetric_group(3), QQ, 2, which="units", total=False)
    assert units.summed() == [1, 0, 0]


def test_loop_comparison_with_periodic_part():
    cmp = loop_comparison(cyclic_group(3), QQ, 3, periodic_window=4)
    assert cmp.equal and cmp.hp_equal


groupoids = st.sampled_from([
    cyclic_group(2), cyclic_group(3), cyclic_group(4), product_group(2, 2), symmetric_group(3),
    pair_groupoid(2), pair_groupoid(3), discrete_groupoid(2), disjoint_union(cyclic_group(2), pair_groupoid(2)),
    product(cyclic_group(2), pair_groupoid(2)),
    action_groupoid(cyclic_group(4), 2, [0, 0], lambda x, a: (x + a) % 2),
])


@settings(max_examples=15, deadline=None)
@given(groupoids)
def test_relative_and_generic_routes_agree(g):
    rel = relative_mixed_complex(g, QQ, 3)
    rel.complex.verify()
    assert hochschild_dims(rel.complex, 2) == hochschild_dims(convolution_algebra(g, QQ), 2)
    assert hochschild_dims(rel.complex, 0)[0] == oracles.conjugacy_classes(g)


@settings(max_examples=15, deadline=None)
@given(groupoids)
def test_sbi_exact_on_convolution_algebras(g):
    assert sbi_check(relative_mixed_complex(g, QQ, 4).complex, 3).exact


@settings(max_examples=15, deadline=None)
@given(groupoids)
def test_hochschild_equals_loop_homology(g):
    assert loop_comparison(g, QQ, 3).equal
