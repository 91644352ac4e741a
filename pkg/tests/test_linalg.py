import pytest
import sympy
from fractions import Fraction
from hypothesis import given, settings, strategies as st
from sympy.matrices.normalforms import smith_normal_form as sympy_snf

from etalehom.linalg import (
    GF, QQ, ZZ, AbGroupClass, Coefficients, CompositionNotZero, Matrix, dense_inverse, determinant,
    elementary_divisors, fraction_free_rank, homology_at, invariant_factor_form, rank, smith_normal_form,
)
from etalehom.reduction import complex_homology, lattice_basis, matrix_rank

import oracles

small_ints = st.integers(-6, 6)


def int_matrices(max_rows=5, max_cols=5):
    return st.integers(1, max_rows).flatmap(
        lambda r: st.integers(1, max_cols).flatmap(
            lambda c: st.lists(st.lists(small_ints, min_size=c, max_size=c), min_size=r, max_size=r)))


def test_parse_coefficients():
    assert Coefficients.parse("Z") == ZZ
    assert Coefficients.parse("QQ") == QQ
    assert Coefficients.parse("F3") == GF(3)
    assert Coefficients.parse("GF5") == GF(5)
    assert Coefficients.parse("Fp=7") == GF(7)
    with pytest.raises(ValueError):
        Coefficients.parse("F4")
    with pytest.raises(ValueError):
        Coefficients.parse("R")


def test_field_arithmetic():
    assert GF(5).inverse(2) == 3
    assert QQ.inverse(Fraction(2, 3)) == Fraction(3, 2)
    assert GF(7).normalize(Fraction(1, 2)) == 4
    assert not ZZ.is_field and QQ.is_field


def test_abgroup_class():
    assert str(AbGroupClass(2, (2, 6))) == "Z^2 + Z/2 + Z/6"
    assert AbGroupClass.from_divisors(0, [4, 6]) == AbGroupClass(0, (2, 12))
    assert invariant_factor_form([2, 3]) == (6,)
    with pytest.raises(ValueError):
        AbGroupClass(0, (4, 6))
    assert AbGroupClass().is_zero()


def test_snf_small():
    m = Matrix.from_rows([[2, 4, 4], [-6, 6, 12], [10, -4, -16]])
    u, d, v = smith_normal_form(m)
    assert d.to_rows() == [[2, 0, 0], [0, 6, 0], [0, 0, 12]]
    assert u @ m @ v == d


@settings(max_examples=60, deadline=None)
@given(int_matrices())
def test_snf_matches_sympy(rows):
    m = Matrix.from_rows(rows)
    u, d, v = smith_normal_form(m)
    assert u @ m @ v == d
    ours = sorted(abs(d.entry(i, i)) for i in range(min(d.shape)) if d.entry(i, i))
    ref = sympy_snf(sympy.Matrix(rows), domain=sympy.ZZ)
    theirs = sorted(abs(int(ref[i, i])) for i in range(min(ref.shape)) if ref[i, i])
    assert ours == theirs
    assert sorted(elementary_divisors(m)) == theirs


@settings(max_examples=60, deadline=None)
@given(int_matrices(), st.sampled_from([0, 2, 3, 5]))
def test_rank_matches_oracle(rows, p):
    m = Matrix.from_rows(rows)
    k = GF(p) if p else QQ
    expected = oracles._rank(rows, len(rows), len(rows[0]), p)
    assert rank(m, k) == expected
    assert matrix_rank(m, k) == expected
    if not p:
        assert fraction_free_rank(m) == expected


@settings(max_examples=40, deadline=None)
@given(int_matrices(4, 4))
def test_determinant_and_inverse(rows):
    n = min(len(rows), len(rows[0]))
    sq = [r[:n] for r in rows[:n]]
    det = determinant(sq)
    assert det == sympy.Matrix(sq).det()
    if det:
        inv = dense_inverse(sq, QQ)
        prod = [[sum(Fraction(sq[i][k]) * inv[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        assert prod == [[int(i == j) for j in range(n)] for i in range(n)]


def test_homology_at_rejects_nonzero_composite():
    with pytest.raises(CompositionNotZero):
        homology_at(Matrix.from_rows([[1]]), Matrix.from_rows([[1]]), ZZ)


def test_homology_at_torsion():
    # Z --(2)--> Z --> 0 gives Z/2
    assert homology_at(Matrix.from_rows([[2]]), Matrix.zero(0, 1), ZZ) == AbGroupClass(0, (2,))
    assert homology_at(Matrix.from_rows([[2]]), Matrix.zero(0, 1), GF(2)) == AbGroupClass(1)


def _random_complex(draw_a, draw_b, split, n1):
    # d1 = A restricted to coordinates < split, d2 lands in coordinates >= split: d1 d2 = 0
    d1 = [[draw_a[i][j] if j < split else 0 for j in range(n1)] for i in range(len(draw_a))]
    d2 = [[draw_b[i - split][j] if i >= split else 0 for j in range(len(draw_b[0]))] for i in range(n1)]
    return d1, d2


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 4), st.integers(1, 3), st.integers(1, 3), st.data())
def test_sparse_reduction_matches_dense(n0, split_extra, n2, n1_extra, data):
    n1 = split_extra + n1_extra
    split = split_extra
    a = data.draw(st.lists(st.lists(small_ints, min_size=n1, max_size=n1), min_size=n0, max_size=n0))
    b = data.draw(st.lists(st.lists(small_ints, min_size=n2, max_size=n2), min_size=n1 - split, max_size=n1 - split))
    d1, d2 = _random_complex(a, b, split, n1)
    m1, m2 = Matrix.from_rows(d1, n1), Matrix.from_rows(d2, n2)
    for k in (ZZ, QQ, GF(2), GF(3)):
        got = complex_homology(k, 0, 2, {0: n0, 1: n1, 2: n2}, {1: m1, 2: m2})
        assert got[1] == homology_at(m2, m1, k)
        assert got[2] == homology_at(Matrix.zero(n2, 0), m2, k)
        kind = "Z" if k == ZZ else "F"
        exp = oracles.homology_from_dense((d2, n1, n2), (d1, n0, n1), n1, kind, k.characteristic)
        assert (got[1].betti, got[1].torsion) == exp


def test_lattice_basis_spans_over_z():
    cols = [{0: 2, 1: 4}, {0: 3, 1: 6}, {1: 1}]
    basis = lattice_basis(cols, ZZ, 2)
    assert len(basis) == 2
