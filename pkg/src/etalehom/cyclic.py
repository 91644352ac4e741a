"""Convolution algebras, cyclic modules, mixed complexes and their homology.

The convolution algebra k[G] of a finite groupoid has the arrows as a basis
and multiplies ``g * h = g o h`` when composable, else 0.  Its cyclic module
has C_n = A^(n+1); the mixed complex (b, B) gives Hochschild (HH), cyclic
(HC) and periodic (HP) homology.

>>> from etalehom.groupoids import cyclic_group, pair_groupoid
>>> from etalehom.linalg import QQ
>>> hochschild_dims(convolution_algebra(cyclic_group(3), QQ), 3)
[3, 0, 0, 0]
>>> cyclic_dims(convolution_algebra(pair_groupoid(2), QQ), 4)
[1, 0, 1, 0, 1]

Two routes compute the same numbers.  The generic route works from the
structure constants of any unital algebra: the unnormalized cyclic module
is checked against the relations of Connes' category and turned into a
mixed complex with B = (1 - lambda) s N; the normalized route rewrites the
algebra in a basis containing the unit and drops tuples with a unit in a
positive slot.  The groupoid route (``relative_mixed_complex``) uses tuples
of arrows that compose around a circle with no units after the first slot;
it is graded by the conjugacy orbit of the full composite, which gives the
localization of HH at loop orbits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .complexes import (
    ChainComplex, ComplexMap, DegreeOutOfWindow, ShortExactSequenceOfComplexes, induced_ranks, long_exact_sequence,
)
from .groupoids import FiniteGroupoid, loop_groupoid, loops, orbits
from .homology import homology_groups
from .linalg import Coefficients, Matrix, QQ
from .reduction import complex_homology
from .sheaves import constant_sheaf


class CyclicError(ValueError):
    pass


class NotAnAlgebra(CyclicError):
    pass


class RelationViolation(CyclicError):
    pass


class WindowTooSmall(DegreeOutOfWindow):
    pass


class StabilizationNotReached(CyclicError):
    pass


class SplittingViolation(CyclicError):
    pass


def _sp_add(out: dict, vec: dict, scale, coeff: Coefficients) -> None:
    for k, v in vec.items():
        w = coeff.normalize(out.get(k, 0) + scale * v)
        if w:
            out[k] = w
        elif k in out:
            del out[k]


# ---------------------------------------------------------------------------
# finite dimensional algebras


@dataclass(eq=False)
class FinDimAlgebra:
    """Unital associative algebra on basis 0..dim-1.

    ``products[(i, j)]`` is the sparse vector e_i * e_j (missing means 0);
    ``unit`` is the sparse vector of the identity.
    """

    coeff: Coefficients
    dim: int
    products: dict
    unit: dict
    labels: tuple = ()
    groupoid: FiniteGroupoid | None = field(default=None, repr=False)
    check: bool = True

    def __post_init__(self):
        if not self.coeff.is_field:
            raise NotAnAlgebra("algebras here are over a field")
        k = self.coeff
        self.products = {key: {i: k.normalize(v) for i, v in vec.items() if k.normalize(v)}
                         for key, vec in self.products.items()}
        self.products = {key: vec for key, vec in self.products.items() if vec}
        self.unit = {i: k.normalize(v) for i, v in self.unit.items() if k.normalize(v)}
        if not self.labels:
            self.labels = tuple(range(self.dim))
        if self.check:
            self.validate()

    def basis_product(self, i: int, j: int) -> dict:
        return self.products.get((i, j), {})

    def mul(self, u: dict, v: dict) -> dict:
        out: dict = {}
        for i, x in u.items():
            for j, y in v.items():
                p = self.products.get((i, j))
                if p:
                    _sp_add(out, p, x * y, self.coeff)
        return out

    def validate(self) -> None:
        if self.dim == 0 or not self.unit:
            raise NotAnAlgebra("the zero algebra has no unit")
        for i in range(self.dim):
            e = {i: 1}
            if self.mul(self.unit, e) != e or self.mul(e, self.unit) != e:
                raise NotAnAlgebra(f"unit law fails on basis element {i}")
        for i, j, l in itertools.product(range(self.dim), repeat=3):
            left = self.mul(self.basis_product(i, j), {l: 1})
            right = self.mul({i: 1}, self.basis_product(j, l))
            if left != right:
                raise NotAnAlgebra(f"associativity fails on ({i}, {j}, {l})")

    def commutator_rank(self) -> int:
        """Rank of the span of all commutators e_i e_j - e_j e_i."""
        from .reduction import matrix_rank

        cols = []
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                c = dict(self.basis_product(i, j))
                _sp_add(c, self.basis_product(j, i), -1, self.coeff)
                if c:
                    cols.append(c)
        if not cols:
            return 0
        return matrix_rank(Matrix(self.dim, len(cols), cols), self.coeff)

    def trace_space_dim(self) -> int:
        """dim A/[A, A], which equals HH_0."""
        return self.dim - self.commutator_rank()

    def with_unit_basis(self) -> tuple["FinDimAlgebra", int]:
        """The same algebra in a basis whose element 0 is the unit.

        Returns the rewritten algebra and the old basis index that was
        replaced by the unit.
        """
        k = self.coeff
        if self.unit == {0: 1}:
            return self, 0
        p = min(self.unit)
        up = self.unit[p]
        # new basis f_0 = unit, then the old e_j for j != p, in order
        others = [j for j in range(self.dim) if j != p]
        new_of_old = {j: i + 1 for i, j in enumerate(others)}

        def to_new(vec: dict) -> dict:
            out: dict = {}
            for j, x in vec.items():
                if j == p:
                    # e_p = (f_0 - sum_{j != p} u_j e_j) / u_p
                    inv = k.inverse(up)
                    _sp_add(out, {0: 1}, x * inv, k)
                    for jj, uj in self.unit.items():
                        if jj != p:
                            _sp_add(out, {new_of_old[jj]: 1}, -x * uj * inv, k)
                else:
                    _sp_add(out, {new_of_old[j]: 1}, x, k)
            return out

        old_vecs = [dict(self.unit)] + [{j: 1} for j in others]
        products = {}
        for a, u in enumerate(old_vecs):
            for b, v in enumerate(old_vecs):
                w = to_new(self.mul(u, v))
                if w:
                    products[(a, b)] = w
        labels = ("1",) + tuple(self.labels[j] for j in others)
        return FinDimAlgebra(k, self.dim, products, {0: 1}, labels, self.groupoid, check=False), p


def convolution_algebra(g: FiniteGroupoid, coeff: Coefficients = QQ) -> FinDimAlgebra:
    """k[G]: basis the arrows, e_g * e_h = e_(g o h) when composable."""
    products = {(a, b): {c: 1} for (a, b), c in g.table.items()}
    unit = {u: 1 for u in g.unit}
    return FinDimAlgebra(coeff, g.n_arrows, products, unit, tuple(g.arrow_labels or g.arrows), g, check=False)


def matrix_unit_table(n: int) -> dict:
    """Structure constants of M_n in the matrix-unit basis E_(i,j) -> id i*n + j."""
    out = {}
    for i, j, l in itertools.product(range(n), repeat=3):
        out[(i * n + j, j * n + l)] = {i * n + l: 1}
    return out


# ---------------------------------------------------------------------------
# cyclic modules


def _tuples(dim: int, n: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(dim), repeat=n + 1))


@dataclass(eq=False)
class CyclicModule:
    """Levels 0..top with faces, degeneracies and cyclic operators as matrices.

    ``faces[n][i]`` maps C_n -> C_(n-1), ``degeneracies[n][i]`` maps
    C_n -> C_(n+1) (present for n < top) and ``cyclic[n]`` is t_n on C_n.
    """

    coeff: Coefficients
    top: int
    dims: dict[int, int]
    faces: dict[int, list[Matrix]]
    degeneracies: dict[int, list[Matrix]]
    cyclic: dict[int, Matrix]
    check: bool = True

    def __post_init__(self):
        if self.check:
            self.verify()

    def verify(self) -> None:
        """Check the simplicial and cyclic relations at every stored level."""
        k = self.coeff

        def same(x: Matrix, y: Matrix, what: str):
            if not (x - y).is_zero_over(k):
                raise RelationViolation(what)

        d, s, t = self.faces, self.degeneracies, self.cyclic
        for n in range(self.top + 1):
            power = Matrix.identity(self.dims[n])
            for _ in range(n + 1):
                power = t[n] @ power
            same(power, Matrix.identity(self.dims[n]), f"t_{n}^{n + 1} != 1")
            if n >= 1:
                for i in range(1, n + 1):
                    same(d[n][i] @ t[n], t[n - 1] @ d[n][i - 1], f"d_{i} t = t d_{i - 1} at level {n}")
                same(d[n][0] @ t[n], d[n][n], f"d_0 t = d_n at level {n}")
            if n >= 2:
                for j in range(n + 1):
                    for i in range(j):
                        same(d[n - 1][i] @ d[n][j], d[n - 1][j - 1] @ d[n][i], f"d_{i} d_{j} at level {n}")
            if n < self.top:
                for i in range(1, n + 1):
                    same(s[n][i] @ t[n], t[n + 1] @ s[n][i - 1], f"s_{i} t = t s_{i - 1} at level {n}")
                same(s[n][0] @ t[n], t[n + 1] @ t[n + 1] @ s[n][n], f"s_0 t = t^2 s_n at level {n}")
                ident = Matrix.identity(self.dims[n])
                for j in range(n + 1):
                    for i in range(n + 2):
                        lhs = d[n + 1][i] @ s[n][j]
                        if i < j:
                            rhs = s[n - 1][j - 1] @ d[n][i]
                        elif i in (j, j + 1):
                            rhs = ident
                        else:
                            rhs = s[n - 1][j] @ d[n][i - 1]
                        same(lhs, rhs, f"d_{i} s_{j} at level {n}")
            if n + 1 < self.top:
                for j in range(n + 1):
                    for i in range(j + 1):
                        same(s[n + 1][i] @ s[n][j], s[n + 1][j + 1] @ s[n][i], f"s_{i} s_{j} at level {n}")


def cyclic_module_of_algebra(a: FinDimAlgebra, top: int = 3, check: bool = True) -> CyclicModule:
    """The standard cyclic module A^(n+1) of a unital algebra at levels 0..top."""
    k = a.coeff
    d = a.dim
    levels = {n: _tuples(d, n) for n in range(top + 2)}
    index = {n: {tp: i for i, tp in enumerate(levels[n])} for n in levels}
    dims = {n: d ** (n + 1) for n in range(top + 1)}

    def build(n_from: int, n_to: int, fn) -> Matrix:
        cols = []
        idx = index[n_to]
        for tp in levels[n_from]:
            col: dict = {}
            for out_tp, c in fn(tp):
                j = idx[out_tp]
                w = k.normalize(col.get(j, 0) + c)
                if w:
                    col[j] = w
                else:
                    col.pop(j, None)
            cols.append(col)
        return Matrix._trusted(d ** (n_to + 1), d ** (n_from + 1), cols)

    def face_fn(n: int, i: int):
        def fn(tp):
            if i < n:
                prod = a.basis_product(tp[i], tp[i + 1])
                return [(tp[:i] + (m,) + tp[i + 2:], c) for m, c in prod.items()]
            prod = a.basis_product(tp[n], tp[0])
            return [((m,) + tp[1:n], c) for m, c in prod.items()]
        return fn

    def degen_fn(i: int):
        def fn(tp):
            return [(tp[: i + 1] + (u,) + tp[i + 1:], c) for u, c in a.unit.items()]
        return fn

    def rot(tp):
        return [((tp[-1],) + tp[:-1], 1)]

    faces = {n: [build(n, n - 1, face_fn(n, i)) for i in range(n + 1)] for n in range(1, top + 1)}
    faces[0] = []
    degens = {n: [build(n, n + 1, degen_fn(i)) for i in range(n + 1)] for n in range(top)}
    cyc = {n: build(n, n, rot) for n in range(top + 1)}
    return CyclicModule(k, top, dims, faces, degens, cyc, check)


# ---------------------------------------------------------------------------
# mixed complexes


@dataclass(eq=False)
class MixedComplex:
    """Modules of rank ``dims[n]`` for n = 0..top with b: n -> n-1 and B: n -> n+1.

    ``b[n]`` is present for 1 <= n <= top and ``B[n]`` for 0 <= n < top.
    """

    coeff: Coefficients
    top: int
    dims: dict[int, int]
    b: dict[int, Matrix]
    B: dict[int, Matrix]
    labels: dict[int, list] | None = field(default=None, repr=False)
    check: bool = True

    def __post_init__(self):
        for n in range(1, self.top + 1):
            self.b.setdefault(n, Matrix.zero(self.dims[n - 1], self.dims[n]))
        for n in range(self.top):
            self.B.setdefault(n, Matrix.zero(self.dims[n + 1], self.dims[n]))
        if self.check:
            self.verify()

    def verify(self) -> None:
        """b^2 = 0, B^2 = 0 and bB + Bb = 0 wherever both sides fit in the window."""
        k = self.coeff
        b, B = self.b, self.B
        for n in range(2, self.top + 1):
            if not (b[n - 1] @ b[n]).is_zero_over(k):
                raise RelationViolation(f"b^2 != 0 at level {n}")
        for n in range(self.top - 1):
            if not (B[n + 1] @ B[n]).is_zero_over(k):
                raise RelationViolation(f"B^2 != 0 at level {n}")
        for n in range(self.top):
            anti = b[n + 1] @ B[n]
            if n >= 1:
                anti = anti + B[n - 1] @ b[n]
            if not anti.is_zero_over(k):
                raise RelationViolation(f"bB + Bb != 0 at level {n}")

    def hochschild_complex(self) -> ChainComplex:
        return ChainComplex(self.coeff, 0, self.top, dict(self.dims), dict(self.b), check=False)

    def connes_total(self) -> tuple[ChainComplex, dict[int, list[int]]]:
        """Tot_n = C_n + C_(n-2) + ... with differential b + B, for n <= top.

        Also returns, per total degree, the list of column levels in block order.
        """
        blocks = {n: list(range(n, -1, -2)) for n in range(self.top + 1)}
        ranks = {n: sum(self.dims[m] for m in blocks[n]) for n in blocks}
        bds = {}
        for n in range(1, self.top + 1):
            rows, cols = blocks[n - 1], blocks[n]
            row_off, pos = {}, 0
            for m in rows:
                row_off[m] = pos
                pos += self.dims[m]
            out = []
            for m in cols:
                bm, Bm = self.b.get(m), self.B.get(m)
                for j in range(self.dims[m]):
                    col: dict = {}
                    if m >= 1:
                        for i, v in bm.cols[j].items():
                            col[row_off[m - 1] + i] = v
                    if m + 1 <= n - 1 and m + 1 in row_off:
                        for i, v in Bm.cols[j].items():
                            col[row_off[m + 1] + i] = v
                    out.append(col)
            bds[n] = Matrix._trusted(ranks[n - 1], ranks[n], out)
        return ChainComplex(self.coeff, 0, self.top, ranks, bds, check=False), blocks

    def restrict(self, cells: dict[int, list[int]]) -> "MixedComplex":
        """The sub mixed complex on the given basis cells; raises if not stable."""
        pos = {n: {c: i for i, c in enumerate(cs)} for n, cs in cells.items()}

        def sub(m: Matrix, src: int, dst: int) -> Matrix:
            cols = []
            for c in cells[src]:
                col = {}
                for r, v in m.cols[c].items():
                    i = pos[dst].get(r)
                    if i is None:
                        raise SplittingViolation(f"operator leaves the summand between levels {src} and {dst}")
                    col[i] = v
                cols.append(col)
            return Matrix._trusted(len(cells[dst]), len(cells[src]), cols)

        dims = {n: len(cells[n]) for n in range(self.top + 1)}
        b = {n: sub(self.b[n], n, n - 1) for n in range(1, self.top + 1)}
        B = {n: sub(self.B[n], n, n + 1) for n in range(self.top)}
        labels = None
        if self.labels is not None:
            labels = {n: [self.labels[n][c] for c in cells[n]] for n in cells}
        return MixedComplex(self.coeff, self.top, dims, b, B, labels, check=False)


def _lambda(c: CyclicModule, n: int) -> Matrix:
    return c.cyclic[n].scale(-1) if n % 2 else c.cyclic[n]


def mixed_complex(c: CyclicModule) -> MixedComplex:
    """Unnormalized mixed complex: b = sum (-1)^i d_i and B = (1 - lambda) s N.

    Here lambda = (-1)^n t_n, N = 1 + lambda + ... + lambda^n and s is the
    extra degeneracy t_(n+1) s_n.  B is available below the top level.
    """
    k = c.coeff
    b = {}
    for n in range(1, c.top + 1):
        acc = Matrix.zero(c.dims[n - 1], c.dims[n])
        for i, d in enumerate(c.faces[n]):
            acc = acc + (d if i % 2 == 0 else -d)
        b[n] = acc.over(k)
    B = {}
    for n in range(c.top):
        lam = _lambda(c, n)
        norm = Matrix.identity(c.dims[n])
        power = Matrix.identity(c.dims[n])
        for _ in range(n):
            power = lam @ power
            norm = norm + power
        extra = c.cyclic[n + 1] @ c.degeneracies[n][n]
        one_minus = Matrix.identity(c.dims[n + 1]) - _lambda(c, n + 1)
        B[n] = (one_minus @ extra @ norm).over(k)
    return MixedComplex(k, c.top, dict(c.dims), b, B)


def normalized_mixed_complex(a: FinDimAlgebra, top: int = 3, check: bool = True) -> MixedComplex:
    """Connes' normalized mixed complex A (x) Abar^n of a unital algebra.

    The algebra is rewritten in a basis whose element 0 is the unit; Abar
    has the remaining basis.  B(a_0..a_n) = sum_i (-1)^(ni) (1, a_i..a_n, a_0..a_(i-1)).
    """
    au, _ = a.with_unit_basis()
    k = au.coeff
    d = au.dim
    nonunit = range(1, d)
    levels = {n: [(x,) + rest for x in range(d) for rest in itertools.product(nonunit, repeat=n)]
              for n in range(top + 1)}
    index = {n: {tp: i for i, tp in enumerate(levels[n])} for n in levels}

    modulus = k.p if k.kind == "F" else 0

    def add(col: dict, tp: tuple, c, n: int) -> None:
        # tuples with the unit in a positive slot are absent from the index
        j = index[n].get(tp)
        if j is None:
            return
        w = col.get(j, 0) + c
        if modulus:
            w %= modulus
        if w:
            col[j] = w
        else:
            col.pop(j, None)

    b = {}
    for n in range(1, top + 1):
        cols = []
        for tp in levels[n]:
            col: dict = {}
            for i in range(n):
                sign = -1 if i % 2 else 1
                for m, c in au.basis_product(tp[i], tp[i + 1]).items():
                    add(col, tp[:i] + (m,) + tp[i + 2:], sign * c, n - 1)
            sign = -1 if n % 2 else 1
            for m, c in au.basis_product(tp[n], tp[0]).items():
                add(col, (m,) + tp[1:n], sign * c, n - 1)
            cols.append(col)
        b[n] = Matrix._trusted(len(levels[n - 1]), len(levels[n]), cols)
    B = {}
    for n in range(top):
        cols = []
        for tp in levels[n]:
            col: dict = {}
            if tp[0] != 0:
                for i in range(n + 1):
                    sign = -1 if (n * i) % 2 else 1
                    add(col, (0,) + tp[i:] + tp[:i], sign, n + 1)
            cols.append(col)
        B[n] = Matrix._trusted(len(levels[n + 1]), len(levels[n]), cols)
    dims = {n: len(levels[n]) for n in levels}
    return MixedComplex(k, top, dims, b, B, labels=levels, check=check)


# ---------------------------------------------------------------------------
# the groupoid route: cyclically composable tuples


def _loop_orbit_index(g: FiniteGroupoid) -> tuple[dict[int, int], list[list[int]]]:
    """Map each loop of g to the index of its conjugacy orbit; also list the orbits as loops."""
    lp = loops(g)
    comps = orbits(loop_groupoid(g))
    orbit_of = {}
    as_loops = []
    for k, comp in enumerate(comps):
        as_loops.append([lp[i] for i in comp])
        for i in comp:
            orbit_of[lp[i]] = k
    return orbit_of, as_loops


def _cyclic_tuples(g: FiniteGroupoid, n: int) -> list[tuple[int, ...]]:
    """Tuples (g_0..g_n) with src g_i = tgt g_(i+1), src g_n = tgt g_0, g_1..g_n non-units."""
    nonunit_into = [[a for a in g.arrows_into(x) if not g.is_unit(a)] for x in g.objects]
    out = []
    for g0 in g.arrows:
        partial = [(g0,)]
        for _ in range(n):
            partial = [tp + (a,) for tp in partial for a in nonunit_into[g.src[tp[-1]]]]
        out.extend(tp for tp in partial if g.src[tp[-1]] == g.tgt[g0])
    return out


def _composite(g: FiniteGroupoid, tp: tuple[int, ...]) -> int:
    c = tp[-1]
    for a in reversed(tp[:-1]):
        c = g.compose(a, c)
    return c


@dataclass(eq=False)
class RelativeMixedComplex:
    """The groupoid route mixed complex together with its orbit grading."""

    groupoid: FiniteGroupoid
    complex: MixedComplex
    orbit_of_cell: dict[int, list[int]]
    orbit_loops: list[list[int]]

    def orbit_cells(self, k: int) -> dict[int, list[int]]:
        return {n: [c for c, o in enumerate(self.orbit_of_cell[n]) if o == k] for n in self.orbit_of_cell}

    def summand(self, k: int) -> MixedComplex:
        """Localization at the k-th loop orbit (checked to be a sub mixed complex)."""
        return self.complex.restrict(self.orbit_cells(k))

    def unit_orbits(self) -> list[int]:
        units = set(self.groupoid.unit)
        return [k for k, lp in enumerate(self.orbit_loops) if units & set(lp)]


def relative_mixed_complex(g: FiniteGroupoid, coeff: Coefficients = QQ, top: int = 3,
                           check: bool = True) -> RelativeMixedComplex:
    """Normalized mixed complex of k[G] relative to the span of the units.

    The subalgebra spanned by the units is separable, so relative and
    absolute Hochschild homology agree.  Tuples that do not compose around
    the circle are zero in the relative tensor product.
    """
    if not coeff.is_field:
        raise NotAnAlgebra("convolution algebras are taken over a field")
    levels = {n: _cyclic_tuples(g, n) for n in range(top + 1)}
    index = {n: {tp: i for i, tp in enumerate(levels[n])} for n in levels}
    unit_at = g.unit
    is_unit = [g.is_unit(a) for a in g.arrows]
    comp = g.compose

    b = {}
    for n in range(1, top + 1):
        idx = index[n - 1]
        cols = []
        for tp in levels[n]:
            col: dict = {}
            terms = [((comp(tp[0], tp[1]),) + tp[2:], 1)]
            for i in range(1, n):
                m = comp(tp[i], tp[i + 1])
                if not is_unit[m]:
                    terms.append((tp[:i] + (m,) + tp[i + 2:], -1 if i % 2 else 1))
            terms.append(((comp(tp[n], tp[0]),) + tp[1:n], -1 if n % 2 else 1))
            for out_tp, c in terms:
                j = idx[out_tp]
                w = col.get(j, 0) + c
                if w:
                    col[j] = w
                else:
                    col.pop(j, None)
            cols.append(col)
        b[n] = Matrix._trusted(len(levels[n - 1]), len(levels[n]), cols)
    B = {}
    for n in range(top):
        idx = index[n + 1]
        cols = []
        for tp in levels[n]:
            col: dict = {}
            if not is_unit[tp[0]]:
                for i in range(n + 1):
                    out_tp = (unit_at[g.tgt[tp[i]]],) + tp[i:] + tp[:i]
                    j = idx[out_tp]
                    w = col.get(j, 0) + (-1 if (n * i) % 2 else 1)
                    if w:
                        col[j] = w
                    else:
                        col.pop(j, None)
            cols.append(col)
        B[n] = Matrix._trusted(len(levels[n + 1]), len(levels[n]), cols)
    dims = {n: len(levels[n]) for n in levels}
    if coeff.kind == "F":
        b = {n: m.over(coeff) for n, m in b.items()}
        B = {n: m.over(coeff) for n, m in B.items()}
    mc = MixedComplex(coeff, top, dims, b, B, labels=levels, check=check)
    orbit_of, as_loops = _loop_orbit_index(g)
    grading = {n: [orbit_of[_composite(g, tp)] for tp in levels[n]] for n in levels}
    return RelativeMixedComplex(g, mc, grading, as_loops)


# ---------------------------------------------------------------------------
# homology


def _as_mixed(x, top: int) -> MixedComplex:
    if isinstance(x, MixedComplex):
        if x.top < top:
            raise WindowTooSmall(f"the mixed complex stops at level {x.top}; level {top} is needed")
        return x
    if isinstance(x, FinDimAlgebra):
        return normalized_mixed_complex(x, top, check=False)
    if isinstance(x, CyclicModule):
        if x.top < top:
            raise WindowTooSmall(f"the cyclic module stops at level {x.top}; level {top} is needed")
        return mixed_complex(x)
    raise TypeError(f"expected an algebra, cyclic module or mixed complex, got {type(x).__name__}")


def _dims(c: ChainComplex, upto: int) -> list[int]:
    h = complex_homology(c.coeff, c.lo, c.hi, c.ranks, c.boundaries)
    return [h[n].betti for n in range(upto + 1)]


def hochschild_dims(x, max_degree: int) -> list[int]:
    """dim HH_0 .. HH_max_degree."""
    m = _as_mixed(x, max_degree + 1)
    return _dims(m.hochschild_complex(), max_degree)


def hochschild_homology(x, n: int) -> int:
    """dim HH_n of an algebra, cyclic module or mixed complex."""
    return hochschild_dims(x, n)[n] if n >= 0 else 0


def _require_char0(coeff: Coefficients, what: str) -> None:
    if coeff.characteristic != 0:
        raise NotAnAlgebra(f"{what} is computed over a field of characteristic 0 here")


def cyclic_dims(x, max_degree: int) -> list[int]:
    """dim HC_0 .. HC_max_degree from the total complex of Connes' bicomplex."""
    m = _as_mixed(x, max_degree + 1)
    _require_char0(m.coeff, "cyclic homology")
    tot, _ = m.connes_total()
    return _dims(tot, max_degree)


def cyclic_homology(x, n: int) -> int:
    return cyclic_dims(x, n)[n] if n >= 0 else 0


def periodicity_map(m: MixedComplex) -> ComplexMap:
    """S: Tot -> Tot[-2], dropping the C_n block of Tot_n."""
    tot, blocks = m.connes_total()
    shifted = ChainComplex(m.coeff, 0, m.top,
                           {n: tot.rank(n - 2) for n in range(m.top + 1)},
                           {n: tot.boundary(n - 2) for n in range(3, m.top + 1)}, check=False)
    mats = {}
    for n in range(m.top + 1):
        skip = m.dims[n]
        cols = [{} for _ in range(skip)] + [{j: 1} for j in range(tot.rank(n) - skip)]
        mats[n] = Matrix._trusted(shifted.rank(n), tot.rank(n), cols)
    return ComplexMap(tot, shifted, mats)


def inclusion_map(m: MixedComplex, tot: ChainComplex) -> ComplexMap:
    """I: (C, b) -> Tot, the C_n block of Tot_n."""
    hc = m.hochschild_complex()
    mats = {n: Matrix._trusted(tot.rank(n), m.dims[n], [{j: 1} for j in range(m.dims[n])]) for n in range(m.top + 1)}
    return ComplexMap(hc, tot, mats)


@dataclass
class PeriodicResult:
    parity: int
    dim: int
    levels: list[int]
    hc_dims: list[int]
    s_ranks: dict[int, int]


def periodic(x, i: int, window: int = 6) -> PeriodicResult:
    """HP_i read off the S-tower HC_i <- HC_(i+2) <- ... inside the window.

    Reported once S: HC_n -> HC_(n-2) is an isomorphism at the two highest
    levels n of the right parity; otherwise StabilizationNotReached.
    """
    parity = i % 2
    levels = [n for n in range(parity, window + 1, 2)]
    if len(levels) < 2:
        raise WindowTooSmall(f"HP_{i} needs two levels of parity {parity} within the window {window}")
    m = _as_mixed(x, window + 1)
    _require_char0(m.coeff, "periodic cyclic homology")
    s = periodicity_map(m)
    hc = _dims(s.source, window)
    ranks = induced_ranks(s)
    n = levels[-1]
    if not (hc[n] == hc[n - 2] == ranks[n]):
        raise StabilizationNotReached(
            f"S: HC_{n} -> HC_{n - 2} has rank {ranks[n]} between dimensions {hc[n]} and {hc[n - 2]}")
    return PeriodicResult(parity, hc[n], levels, hc, {k: ranks[k] for k in levels[1:]})


def connecting_map(m: MixedComplex, tot: ChainComplex) -> ComplexMap:
    """The chain map Tot_k -> C_(k+1), x -> (-1)^k B(x_k), inducing HC_k -> HH_(k+1).

    It lifts the connecting map of 0 -> (C, b) -> Tot -> Tot[-2] -> 0: the
    lift of a cycle x of Tot_(n-2) to Tot_n is (0, x) and its boundary is
    B(x_(n-2)) in the C_(n-1) block.
    """
    hc = m.hochschild_complex().shifted(-1)
    top = m.top - 1
    tot = ChainComplex(tot.coeff, 0, top, {n: tot.rank(n) for n in range(top + 1)},
                       {n: tot.boundary(n) for n in range(1, top + 1)}, check=False)
    mats = {}
    for k in range(top + 1):
        Bk = m.B[k]
        cols = [dict(c) for c in Bk.cols] if k % 2 == 0 else [{i: -v for i, v in c.items()} for c in Bk.cols]
        cols += [{} for _ in range(tot.rank(k) - m.dims[k])]
        mats[k] = Matrix._trusted(m.dims[k + 1], tot.rank(k), cols)
    return ComplexMap(tot, hc, mats)


@dataclass
class SBIReport:
    """Dimensions and ranks around ... -> HH_n -I-> HC_n -S-> HC_(n-2) -B-> HH_(n-1) -> ..."""

    window: int
    hh: list[int]
    hc: list[int]
    rank_i: dict[int, int]
    rank_s: dict[int, int]
    rank_b: dict[int, int]
    exact_at: dict[tuple[str, int], bool]

    @property
    def exact(self) -> bool:
        return all(self.exact_at.values())


def sbi_check(x, window: int = 3, presentations: bool = False) -> SBIReport:
    """Build I, S and B at chain level and check exactness of the SBI sequence for n <= window.

    Ranks of the induced maps come from mapping cones, and exactness at each
    node means rank(in) + rank(out) = dim.  With ``presentations`` the long
    exact sequence is also assembled from explicit homology bases and
    checked map by map (dense, so only for small complexes).  Failure raises
    NotExact.
    """
    from .complexes import NotExact

    m = _as_mixed(x, window + 1)
    _require_char0(m.coeff, "the SBI sequence")
    s_map = periodicity_map(m)
    tot = s_map.source
    i_map = inclusion_map(m, tot)
    b_map = connecting_map(m, tot)
    # S o I vanishes on chains
    for n in range(m.top + 1):
        if not (s_map.at(n) @ i_map.at(n)).is_zero():
            raise NotExact(f"S o I is nonzero in degree {n}")
    hh = _dims(m.hochschild_complex(), window)
    hc = _dims(tot, window)
    ri, rs, rb_shift = induced_ranks(i_map), induced_ranks(s_map), induced_ranks(b_map)
    rb = {k + 2: r for k, r in rb_shift.items()}  # indexed by n, for HC_(n-2) -> HH_(n-1)

    def r(d, n):
        return d.get(n, 0)

    exact = {}
    for n in range(window + 1):
        exact[("HH", n)] = r(rb, n + 1) + r(ri, n) == hh[n]
        exact[("HC", n)] = r(ri, n) + r(rs, n) == hc[n]
        if n >= 2:
            exact[("HC[-2]", n)] = r(rs, n) + r(rb, n) == hc[n - 2]
    # the top node HH_window needs the incoming map from HC_(window-1), which is in range
    report = SBIReport(window, hh, hc, ri, rs, rb, exact)
    if presentations:
        les = long_exact_sequence(ShortExactSequenceOfComplexes(i_map, s_map))
        if not les.is_exact():
            raise NotExact("the SBI sequence fails with explicit presentations")
    if not report.exact:
        bad = [k for k, v in exact.items() if not v]
        raise NotExact(f"the SBI sequence fails at {bad}")
    return report


# ---------------------------------------------------------------------------
# localization and the comparison with loop homology


def verify_nonclosing_acyclic(g: FiniteGroupoid, coeff: Coefficients = QQ, top: int = 3) -> list[int]:
    """In the unnormalized Hochschild complex of k[G] on arrow tuples, check that
    tuples that do not compose around the circle span a b-stable acyclic summand.

    Returns the homology dimensions of that summand (all zero) in degrees < top.
    """
    a = convolution_algebra(g, coeff)
    d = a.dim
    b = {}
    cells = {}
    for n in range(top + 1):
        tps = _tuples(d, n)
        cells[n] = [tp for tp in tps if not _closes(g, tp)]
    index = {n: {tp: i for i, tp in enumerate(cells[n])} for n in cells}
    closing_index = {n: {tp for tp in _tuples(d, n) if _closes(g, tp)} for n in cells}
    for n in range(1, top + 1):
        cols = []
        for tp in cells[n]:
            col: dict = {}
            terms = []
            for i in range(n):
                for m, c in a.basis_product(tp[i], tp[i + 1]).items():
                    terms.append((tp[:i] + (m,) + tp[i + 2:], c if i % 2 == 0 else -c))
            for m, c in a.basis_product(tp[n], tp[0]).items():
                terms.append(((m,) + tp[1:n], c if n % 2 == 0 else -c))
            for out_tp, c in terms:
                if out_tp in closing_index[n - 1]:
                    raise SplittingViolation(f"b maps a non-closing tuple {tp} onto a closing one")
                j = index[n - 1][out_tp]
                w = col.get(j, 0) + c
                if w:
                    col[j] = w
                else:
                    col.pop(j, None)
            cols.append(col)
        b[n] = Matrix._trusted(len(cells[n - 1]), len(cells[n]), cols)
    c = ChainComplex(coeff, 0, top, {n: len(cells[n]) for n in cells}, b)
    dims = _dims(c, top - 1)
    if any(dims):
        raise SplittingViolation(f"the non-closing summand has homology {dims}")
    return dims


def _closes(g: FiniteGroupoid, tp: tuple[int, ...]) -> bool:
    n = len(tp)
    return all(g.src[tp[i]] == g.tgt[tp[(i + 1) % n]] for i in range(n))


@dataclass
class Localization:
    """HH dimensions per loop orbit, their sum, and the independently computed total."""

    max_degree: int
    orbit_loops: list[list[int]]
    selected: list[int]
    per_orbit: dict[int, list[int]]
    total: list[int] | None
    unit_orbits: list[int]

    def summed(self) -> list[int]:
        return [sum(self.per_orbit[k][n] for k in self.per_orbit) for n in range(self.max_degree + 1)]

    @property
    def complete(self) -> bool | None:
        """Do the summands add up to the total?  None when that was not computed."""
        if self.total is None or set(self.selected) != set(range(len(self.orbit_loops))):
            return None
        return self.summed() == self.total


def generic_complex_size(a: FinDimAlgebra, level: int) -> int:
    """Cells at one level of the normalized complex built from structure constants."""
    return a.dim * (a.dim - 1) ** level


def localize_by_loop_orbit(g: FiniteGroupoid, coeff: Coefficients = QQ, max_degree: int = 3,
                           which: str = "all-orbits", total: bool = True) -> Localization:
    """Split HH_*(k[G]) by the conjugacy orbit of the cyclic composite.

    ``which`` is "all-orbits" or "units" (the orbits of unit loops).  With
    ``total`` the full HH is also computed by the generic normalized route,
    which knows nothing about the grading, and ``complete`` compares the two.
    Each summand is checked to be closed under b and B before use.
    """
    if which not in ("all-orbits", "units"):
        raise ValueError(f"unknown localization {which!r}")
    rel = relative_mixed_complex(g, coeff, max_degree + 1, check=False)
    chosen = rel.unit_orbits() if which == "units" else list(range(len(rel.orbit_loops)))
    per = {}
    for k in chosen:
        per[k] = hochschild_dims(rel.summand(k), max_degree)
    tot = None
    if total:
        tot = hochschild_dims(convolution_algebra(g, coeff), max_degree)
    return Localization(max_degree, rel.orbit_loops, chosen, per, tot, rel.unit_orbits())


@dataclass
class LoopComparison:
    max_degree: int
    hochschild: list[int]
    loop_homology: list[int]
    hp_units: dict[int, int] | None
    hp_expected: dict[int, int] | None
    hp_error: str | None = None

    @property
    def equal(self) -> bool:
        return self.hochschild == self.loop_homology

    @property
    def hp_equal(self) -> bool | None:
        if self.hp_units is None:
            return None
        return self.hp_units == self.hp_expected


def loop_comparison(g: FiniteGroupoid, coeff: Coefficients = QQ, max_degree: int = 4,
                    periodic_window: int | None = None, route: str = "relative") -> LoopComparison:
    """HH_*(k[G]) against H_*(loops(G); k), degree by degree.

    The left side comes from the mixed complex of the convolution algebra
    (``route`` "relative": cyclic arrow tuples; "generic": the normalized
    complex built from structure constants alone), the right side from the
    bar complex of the loop groupoid.  When ``periodic_window`` is given, HP_0 and HP_1 of the
    localization at unit loops are compared with the products of
    H_(i+2k)(G; k) inside that window.
    """
    _require_char0(coeff, "the loop comparison")
    if route == "generic":
        hh = hochschild_dims(convolution_algebra(g, coeff), max_degree)
    elif route == "relative":
        hh = hochschild_dims(relative_mixed_complex(g, coeff, max_degree + 1, check=False).complex, max_degree)
    else:
        raise ValueError(f"unknown route {route!r}")
    lg = loop_groupoid(g)
    loop_side = [h.betti for h in homology_groups(lg, constant_sheaf(lg, coeff), max_degree)]
    hp_units = hp_expected = None
    err = None
    if periodic_window is not None:
        rel = relative_mixed_complex(g, coeff, periodic_window + 1, check=False)
        cells = {n: sorted(c for k in rel.unit_orbits() for c in rel.orbit_cells(k)[n]) for n in range(periodic_window + 2)}
        units = rel.complex.restrict(cells)
        h = [x.betti for x in homology_groups(g, constant_sheaf(g, coeff), periodic_window)]
        try:
            hp_units = {i: periodic(units, i, periodic_window).dim for i in (0, 1)}
            hp_expected = {i: sum(h[i::2]) for i in (0, 1)}
        except StabilizationNotReached as exc:
            hp_units, err = None, str(exc)
    return LoopComparison(max_degree, hh, loop_side, hp_units, hp_expected, err)
