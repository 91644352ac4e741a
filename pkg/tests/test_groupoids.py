import pytest
from hypothesis import given, settings, strategies as st

from etalehom.groupoids import (
    GroupoidError, GroupoidHom, NotAHomomorphism, NotAnAction, action_groupoid, action_projection,
    comma_groupoid, cyclic_group, dihedral_group, discrete_groupoid, disjoint_union, fibered_product,
    group_from_table, groups_up_to_order, hom_to_point, identity_hom, inclusion_of_object, loop_groupoid,
    loops, morita_check, nerve, orbits, pair_groupoid, point_groupoid, product, product_group,
    quaternion_group, regular_translation_groupoid, symmetric_group,
)

import oracles


def test_group_orders():
    assert [g.n_arrows for g in (cyclic_group(5), symmetric_group(3), dihedral_group(4), quaternion_group())] == [5, 6, 8, 8]
    assert product_group(2, 2).n_arrows == 4
    assert sorted(g.n_arrows for g in groups_up_to_order(4)) == [1, 2, 3, 4, 4]


def test_groups_of_order_at_most_eight():
    # one group of order 1, 2, 3, 5, 7; two of order 4 and 6; five of order 8
    orders = sorted(g.n_arrows for g in groups_up_to_order(8))
    assert orders == [1, 2, 3, 4, 4, 5, 6, 6, 7, 8, 8, 8, 8, 8]


def test_bad_table_rejected():
    with pytest.raises(GroupoidError):
        group_from_table([[0, 1], [1, 1]])


def test_pair_groupoid_shape():
    g = pair_groupoid(3)
    assert (g.n_objects, g.n_arrows) == (3, 9)
    assert len(orbits(g)) == 1
    assert len(orbits(discrete_groupoid(4))) == 4


def test_inverse_and_units():
    g = symmetric_group(3)
    for a in g.arrows:
        assert g.compose(a, g.inverse[a]) == g.unit[0]


def test_action_groupoid_and_projection():
    z3 = cyclic_group(3)
    x = action_groupoid(z3, 3, [0, 0, 0], lambda p, a: (p + a) % 3)
    assert x.n_arrows == 9 and len(orbits(x)) == 1
    assert morita_check(action_projection(x, z3, [0, 0, 0])).equivalence is False
    with pytest.raises(NotAnAction):
        action_groupoid(z3, 2, [0, 0], lambda p, a: 0)


def test_regular_translation_is_pair_like():
    g = regular_translation_groupoid(symmetric_group(3))
    assert len(orbits(g)) == 1
    assert morita_check(hom_to_point(g)).equivalence


def test_loop_groupoid_orbits_are_conjugacy_classes():
    for g in (symmetric_group(3), dihedral_group(4), quaternion_group(), pair_groupoid(3)):
        assert len(orbits(loop_groupoid(g))) == oracles.conjugacy_classes(g)
    assert len(loops(pair_groupoid(3))) == 3


def test_nerve_matches_brute_force():
    for g in (symmetric_group(3), pair_groupoid(3), disjoint_union(cyclic_group(2), pair_groupoid(2))):
        for n in range(4):
            lvl = nerve(g, n)
            if n:
                assert sorted(lvl.strings) == sorted(oracles.strings(g, n))
            assert len(lvl) == len(oracles.strings(g, n))


def test_nondegenerate_nerve_drops_units():
    g = cyclic_group(3)
    lvl = nerve(g, 2, nondegenerate=True)
    assert len(lvl) == 4
    assert all(g.unit[0] not in s for s in lvl.strings)


def test_morita_examples():
    p = pair_groupoid(3)
    assert morita_check(inclusion_of_object(p, 0))
    z2 = cyclic_group(2)
    v = morita_check(hom_to_point(z2))
    assert not v.equivalence and v.reason
    assert morita_check(identity_hom(quaternion_group()))


def test_hom_validation():
    z2, z3 = cyclic_group(2), cyclic_group(3)
    with pytest.raises(NotAHomomorphism):
        GroupoidHom(z3, z2, (0,), (0, 1, 1))


def test_fibered_product_of_point_inclusions_is_pair_like():
    p = pair_groupoid(2)
    pt = point_groupoid()
    phi = inclusion_of_object(p, 0)
    fp, p1, p2 = fibered_product(phi, phi)
    assert fp.n_objects == 1 and fp.n_arrows == 1
    # projections of the homotopy pullback under a Morita map are Morita
    z2 = cyclic_group(2)
    fp2, q1, q2 = fibered_product(hom_to_point(z2, pt), hom_to_point(p, pt))
    assert fp2.n_objects == 2


def test_comma_groupoid_of_identity_is_contractible():
    g = symmetric_group(3)
    c, _ = comma_groupoid(identity_hom(g), 0)
    assert len(orbits(c)) == 1
    assert c.n_arrows == c.n_objects ** 2


def test_product_sizes():
    g = product(cyclic_group(2), pair_groupoid(2))
    assert (g.n_objects, g.n_arrows) == (2, 8)


@st.composite
def random_groupoids(draw):
    """Disjoint unions of pair groupoids crossed with small cyclic groups."""
    parts = []
    for _ in range(draw(st.integers(1, 3))):
        parts.append(product(pair_groupoid(draw(st.integers(1, 3))), cyclic_group(draw(st.integers(1, 3)))))
    return disjoint_union(*parts)


@settings(max_examples=25, deadline=None)
@given(random_groupoids())
def test_groupoid_axioms(g):
    for (a, b), c in g.table.items():
        assert g.src[c] == g.src[b] and g.tgt[c] == g.tgt[a]
    for a in g.arrows:
        assert g.compose(g.unit[g.tgt[a]], a) == a == g.compose(a, g.unit[g.src[a]])
    assert len(orbits(g)) == oracles.orbit_count(g)
