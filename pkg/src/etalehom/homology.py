"""Homology of finite groupoids with coefficients in a sheaf.

On a finite discrete groupoid every sheaf is soft for compactly supported
sections, so no resolution is needed: H_n(G; A) is the homology of the bar
complex whose n-chains are sums over composable strings
x0 <-g1- x1 <- ... <-gn- xn of vectors in the stalk at x0.  The face d0
acts by g1, the other faces compose or drop arrows.

>>> from etalehom.groupoids import cyclic_group
>>> from etalehom.sheaves import constant_sheaf
>>> from etalehom.linalg import ZZ
>>> g = cyclic_group(2)
>>> [str(h) for h in homology_groups(g, constant_sheaf(g, ZZ), 3)]
['Z', 'Z/2', '0', 'Z/2']

Everything here works over Z, Q or a prime field unless stated otherwise;
spectral sequence pages need a field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .complexes import (
    ChainComplex,
    ComplexMap,
    DegreeOutOfWindow,
    DoubleComplex,
    HomologyPresentation,
    IntegerCoefficientsUnsupported,
    LongExactSequence,
    RankExactness,
    NotACycle,
    ShortExactSequenceOfComplexes,
    SpectralSequencePage,
    homology_presentation,
    induced_map,
    long_exact_sequence,
    long_exact_sequence_ranks,
    spectral_sequence,
    total_complex,
)
from .groupoids import FiniteGroupoid, GroupoidHom, comma_groupoid, nerve
from .linalg import AbGroupClass, Coefficients, Matrix, dense_inverse, dense_solve
from .sheaves import (
    ExtensionClass,
    GSheaf,
    SheafComplex,
    SheafMap,
    SheafSES,
    change_coefficients,
    pullback,
)


class NotNatural(ValueError):
    pass


# ---------------------------------------------------------------------------
# sparse coefficient systems and the bar construction


@dataclass(frozen=True, eq=False)
class _Coefs:
    """Stalk ranks per object and a sparse action matrix per arrow."""

    ranks: tuple[int, ...]
    act: tuple[Matrix, ...]


def _coefs(a: GSheaf) -> _Coefs:
    cached = a.__dict__.get("_coefs")
    if cached is None:
        g = a.base
        act = tuple(Matrix.from_rows(a.act[e], a.rank[g.tgt[e]]) for e in g.arrows)
        cached = _Coefs(a.rank, act)
        object.__setattr__(a, "_coefs", cached)
    return cached


def _offsets(g: FiniteGroupoid, ranks: Sequence[int], n: int, normalized: bool) -> tuple[list[int], int]:
    lvl = nerve(g, n, normalized)
    off, pos = [], 0
    for x0 in lvl.first:
        off.append(pos)
        pos += ranks[x0]
    return off, pos


def _bar_boundary(g: FiniteGroupoid, c: _Coefs, n: int, normalized: bool) -> Matrix:
    """delta: B_n -> B_{n-1} with d0 acting by the first arrow."""
    lvl = nerve(g, n, normalized)
    if all(r == 1 for r in c.ranks):
        return _bar_boundary_rank_one(lvl, c, n, len(nerve(g, n - 1, normalized)))
    prev_off, prev_dim = _offsets(g, c.ranks, n - 1, normalized)
    _, dim = _offsets(g, c.ranks, n, normalized)
    cols: list[dict] = []
    for i, s in enumerate(lvl.strings):
        r = c.ranks[lvl.first[i]]
        block = [dict() for _ in range(r)]
        f0 = lvl.faces[0][i]
        if f0 >= 0:
            base = prev_off[f0]
            a0 = c.act[s[0]].cols
            for j in range(r):
                col = block[j]
                for row, v in a0[j].items():
                    col[base + row] = col.get(base + row, 0) + v
        for k in range(1, n + 1):
            f = lvl.faces[k][i]
            if f < 0:
                continue
            base, sign = prev_off[f], (-1) ** k
            for j in range(r):
                col = block[j]
                col[base + j] = col.get(base + j, 0) + sign
        cols.extend(block)
    return Matrix(prev_dim, dim, cols)


def _bar_boundary_rank_one(lvl, c: _Coefs, n: int, n_prev: int) -> Matrix:
    """The same boundary when every stalk is one-dimensional: one column per string."""
    scalar = [m.cols[0].get(0, 0) for m in c.act]
    faces = lvl.faces
    cols = []
    for i, s in enumerate(lvl.strings):
        col = {}
        f0 = faces[0][i]
        if f0 >= 0 and scalar[s[0]]:
            col[f0] = scalar[s[0]]
        sign = -1
        for k in range(1, n + 1):
            f = faces[k][i]
            if f >= 0:
                w = col.get(f, 0) + sign
                if w:
                    col[f] = w
                else:
                    del col[f]
            sign = -sign
        cols.append(col)
    return Matrix._trusted(n_prev, len(cols), cols)


def _bar(g: FiniteGroupoid, c: _Coefs, coeff: Coefficients, top: int, normalized: bool,
         check: bool = False) -> ChainComplex:
    ranks = {n: _offsets(g, c.ranks, n, normalized)[1] for n in range(top + 1)}
    bds = {n: _bar_boundary(g, c, n, normalized) for n in range(1, top + 1)}
    return ChainComplex(coeff, 0, top, ranks, bds, check=check)


def bar_complex(g: FiniteGroupoid, a: GSheaf, max_degree: int, normalized: bool = False) -> ChainComplex:
    """The bar complex on degrees 0 .. max_degree + 1, so homology is exact through max_degree.

    Bases are ordered by string (lexicographic by arrow id) and then by stalk
    basis vector.  With ``normalized`` strings containing a unit are dropped.
    """
    if a.base is not g:
        raise ValueError("sheaf does not live on this groupoid")
    if max_degree < 0:
        raise DegreeOutOfWindow("max_degree must be nonnegative")
    return _bar(g, _coefs(a), a.coeff, max_degree + 1, normalized, check=True)


def bar_basis(g: FiniteGroupoid, a: GSheaf, n: int, normalized: bool = False) -> list[tuple[tuple[int, ...], int]]:
    """(string, stalk index) for every basis vector of B_n."""
    lvl = nerve(g, n, normalized)
    return [(s, j) for i, s in enumerate(lvl.strings) for j in range(a.rank[lvl.first[i]])]


def _with_coeff(a: GSheaf, coeff: Coefficients | None) -> GSheaf:
    if coeff is None or coeff == a.coeff:
        return a
    if not a.coeff == Coefficients("Z"):
        raise ValueError(f"cannot change coefficients from {a.coeff} to {coeff}")
    return change_coefficients(a, coeff)


def homology_groups(g: FiniteGroupoid, a: GSheaf, max_degree: int, coeff: Coefficients | None = None,
                    normalized: bool = True) -> list[AbGroupClass]:
    """H_0 .. H_max_degree in one pass."""
    a = _with_coeff(a, coeff)
    if max_degree < 0:
        return []
    c = _bar(g, _coefs(a), a.coeff, max_degree + 1, normalized)
    h = c.all_homology()
    return [h[n] for n in range(max_degree + 1)]


def groupoid_homology(g: FiniteGroupoid, a: GSheaf, n: int, coeff: Coefficients | None = None,
                      normalized: bool = True, window: int | None = None) -> AbGroupClass:
    """H_n(g; a).  Negative degrees give 0; ``window`` bounds the admissible degrees."""
    if window is not None and n > window:
        raise DegreeOutOfWindow(f"degree {n} exceeds the window {window}")
    if n < 0:
        return AbGroupClass(0, ())
    return homology_groups(g, a, n, coeff, normalized)[n]


def compactly_supported_cohomology(g: FiniteGroupoid, a: GSheaf, k: int, coeff: Coefficients | None = None) -> AbGroupClass:
    """H_c^k, which on a discrete base is H_{-k}."""
    return groupoid_homology(g, a, -k, coeff)


# ---------------------------------------------------------------------------
# cohomology


def cobar_complex(g: FiniteGroupoid, a: GSheaf, max_degree: int, normalized: bool = False) -> ChainComplex:
    """Cochains on strings with values in the stalk at the last object, as a chain complex.

    C^n sits in chain degree -n, for n = 0 .. max_degree + 1, with a zero
    module in degree 1 so that H^0 is reportable.  The last coface acts by
    the last arrow.
    """
    c = _coefs(a)
    top = max_degree + 1

    def offs(n):
        lvl = nerve(g, n, normalized)
        off, pos = [], 0
        for xn in lvl.last:
            off.append(pos)
            pos += c.ranks[xn]
        return off, pos

    ranks = {1: 0}
    bds = {}
    layout = {n: offs(n) for n in range(top + 1)}
    for n in range(top + 1):
        ranks[-n] = layout[n][1]
    for n in range(top):
        # delta^n: C^n -> C^{n+1}, placed as the boundary from degree -n
        up = nerve(g, n + 1, normalized)
        off_n, dim_n = layout[n]
        off_up, dim_up = layout[n + 1]
        cols: list[dict] = [dict() for _ in range(dim_n)]
        for i, s in enumerate(up.strings):
            r = c.ranks[up.last[i]]
            row0 = off_up[i]
            for k in range(n + 2):
                f = up.faces[k][i]
                if f < 0:
                    continue
                sign = (-1) ** k
                if k == n + 1:
                    # value at the previous last object, transported by the last arrow
                    tr = c.act[s[-1]]
                    for j, colmap in enumerate(tr.cols):
                        col = cols[off_n[f] + j]
                        for rr, v in colmap.items():
                            col[row0 + rr] = col.get(row0 + rr, 0) + sign * v
                else:
                    for j in range(r):
                        col = cols[off_n[f] + j]
                        col[row0 + j] = col.get(row0 + j, 0) + sign
        bds[-n] = Matrix(dim_up, dim_n, cols)
    return ChainComplex(a.coeff, -top, 1, ranks, bds)


def cohomology(g: FiniteGroupoid, a: GSheaf, n: int, coeff: Coefficients | None = None,
               normalized: bool = True) -> AbGroupClass:
    """H^n(g; a) of the cobar complex; over a field its betti number is the dimension."""
    if n < 0:
        raise DegreeOutOfWindow("cohomology degrees are nonnegative")
    a = _with_coeff(a, coeff)
    c = cobar_complex(g, a, n, normalized)
    return c.all_homology()[-n]


def cohomology_dimensions(g: FiniteGroupoid, a: GSheaf, max_degree: int, normalized: bool = True) -> list[int]:
    if not a.coeff.is_field:
        raise IntegerCoefficientsUnsupported("dimensions need field coefficients")
    h = cobar_complex(g, a, max_degree, normalized).all_homology()
    return [h[-n].betti for n in range(max_degree + 1)]


def invariant_sections_dimension(a: GSheaf) -> int:
    return cohomology(a.base, a, 0).betti


# ---------------------------------------------------------------------------
# functoriality


def _string_image(phi: GroupoidHom, s: tuple[int, ...], n: int) -> tuple[int, ...]:
    if n == 0:
        return (phi.object_map[s[0]],)
    return tuple(phi.arrow_map[k] for k in s)


def pushforward_chain_map(phi: GroupoidHom, a: GSheaf, max_degree: int, normalized: bool = True) -> ComplexMap:
    """B(K; phi^* a) -> B(G; a), sending a string to its image string."""
    k_, g_ = phi.source, phi.target
    pa = pullback(phi, a)
    src = _bar(k_, _coefs(pa), a.coeff, max_degree + 1, normalized)
    tgt = _bar(g_, _coefs(a), a.coeff, max_degree + 1, normalized)
    mats = {}
    for n in range(max_degree + 2):
        lk, lg = nerve(k_, n, normalized), nerve(g_, n, normalized)
        off_g, _ = _offsets(g_, a.rank, n, normalized)
        cols = []
        for i, s in enumerate(lk.strings):
            r = pa.rank[lk.first[i]]
            t = lg.index.get(_string_image(phi, s, n))
            if t is None:
                cols.extend({} for _ in range(r))
            else:
                cols.extend({off_g[t] + j: 1} for j in range(r))
        mats[n] = Matrix(tgt.rank(n), src.rank(n), cols)
    return ComplexMap(src, tgt, mats)


def pullback_chain_map(phi: GroupoidHom, a: GSheaf, max_degree: int, normalized: bool = True) -> ComplexMap:
    """B(G; a) -> B(K; phi^* a), sending a string to the sum of its preimages.

    This commutes with the faces exactly when the squares of nerve levels
    are pullbacks (covering-type phi); otherwise NotAChainMap is raised.
    """
    k_, g_ = phi.source, phi.target
    pa = pullback(phi, a)
    src = _bar(g_, _coefs(a), a.coeff, max_degree + 1, normalized)
    tgt = _bar(k_, _coefs(pa), a.coeff, max_degree + 1, normalized)
    mats = {}
    for n in range(max_degree + 2):
        lk, lg = nerve(k_, n, normalized), nerve(g_, n, normalized)
        off_k, _ = _offsets(k_, pa.rank, n, normalized)
        off_g, _ = _offsets(g_, a.rank, n, normalized)
        cols: list[dict] = [dict() for _ in range(src.rank(n))]
        for i, s in enumerate(lk.strings):
            t = lg.index.get(_string_image(phi, s, n))
            if t is None:
                continue
            for j in range(pa.rank[lk.first[i]]):
                cols[off_g[t] + j][off_k[i] + j] = 1
        mats[n] = Matrix(tgt.rank(n), src.rank(n), cols)
    return ComplexMap(src, tgt, mats)


def pushforward_map(phi: GroupoidHom, a: GSheaf, n: int) -> list[list]:
    """H_n(K; phi^* a) -> H_n(G; a) in the presentation bases."""
    return induced_map(pushforward_chain_map(phi, a, n), n)


def pullback_map(phi: GroupoidHom, a: GSheaf, n: int) -> list[list]:
    """H_n(G; a) -> H_n(K; phi^* a) in the presentation bases."""
    return induced_map(pullback_chain_map(phi, a, n), n)


def sheaf_chain_map(f: SheafMap, max_degree: int, normalized: bool = True) -> ComplexMap:
    """The map of bar complexes induced by a sheaf map."""
    a, b = f.source, f.target
    g = a.base
    src = _bar(g, _coefs(a), a.coeff, max_degree + 1, normalized)
    tgt = _bar(g, _coefs(b), a.coeff, max_degree + 1, normalized)
    blocks = [Matrix.from_rows(f.at(x), a.rank[x]) if b.rank[x] else Matrix.zero(0, a.rank[x]) for x in g.objects]
    mats = {}
    for n in range(max_degree + 2):
        lvl = nerve(g, n, normalized)
        off_b, _ = _offsets(g, b.rank, n, normalized)
        cols = []
        for i in range(len(lvl)):
            base = off_b[i]
            for col in blocks[lvl.first[i]].cols:
                cols.append({base + r: v for r, v in col.items()})
        mats[n] = Matrix(tgt.rank(n), src.rank(n), cols)
    return ComplexMap(src, tgt, mats)


def bar_ses(s: SheafSES, max_degree: int, normalized: bool = True) -> ShortExactSequenceOfComplexes:
    i = sheaf_chain_map(s.inclusion, max_degree, normalized)
    p = sheaf_chain_map(s.projection, max_degree, normalized)
    p = ComplexMap(i.target, p.target, p.matrices, check=False)
    return ShortExactSequenceOfComplexes(i, p)


def sheaf_long_exact_sequence(s: SheafSES, max_degree: int, normalized: bool = True) -> LongExactSequence:
    """... -> H_n(A) -> H_n(B) -> H_n(C) -> H_{n-1}(A) -> ... for n <= max_degree, exactness checked."""
    return long_exact_sequence(bar_ses(s, max_degree, normalized))


def sheaf_les_ranks(s: SheafSES, max_degree: int, normalized: bool = True) -> RankExactness:
    """The same sequence over a field, checked from ranks (no homology bases)."""
    return long_exact_sequence_ranks(bar_ses(s, max_degree, normalized))


# ---------------------------------------------------------------------------
# homotopies from natural transformations


@dataclass(eq=False)
class TransformationHomotopy:
    """A chain homotopy H: B_n(K; phi^* a) -> B_{n+1}(G; a) between phi_* and psi_* theta^*.

    ``identity_holds`` checks delta H + H delta = phi_* - psi_* theta^* in
    degrees 0 .. max_degree.
    """

    source: ChainComplex
    target: ChainComplex
    homotopy: dict[int, Matrix]
    phi_map: dict[int, Matrix]
    psi_theta_map: dict[int, Matrix]
    max_degree: int

    def defect(self, n: int) -> Matrix:
        lhs = self.target.boundary(n + 1) @ self.homotopy[n]
        if n > 0:
            lhs = lhs + self.homotopy[n - 1] @ self.source.boundary(n)
        return (lhs - (self.phi_map[n] - self.psi_theta_map[n])).over(self.source.coeff)

    def identity_holds(self) -> bool:
        return all(self.defect(n).is_zero() for n in range(self.max_degree + 1))


def check_natural(phi: GroupoidHom, psi: GroupoidHom, theta: Sequence[int]) -> None:
    k_, g_ = phi.source, phi.target
    if psi.source is not k_ or psi.target is not g_:
        raise NotNatural("phi and psi need the same source and target")
    for y in k_.objects:
        t = theta[y]
        if g_.src[t] != psi.object_map[y] or g_.tgt[t] != phi.object_map[y]:
            raise NotNatural(f"theta({y}) is not an arrow psi({y}) -> phi({y})")
    for k in k_.arrows:
        lhs = g_.compose(phi.arrow_map[k], theta[k_.src[k]])
        rhs = g_.compose(theta[k_.tgt[k]], psi.arrow_map[k])
        if lhs != rhs:
            raise NotNatural(f"naturality fails at arrow {k}")


def transformation_homotopy(phi: GroupoidHom, psi: GroupoidHom, theta: Sequence[int], a: GSheaf,
                            max_degree: int = 3) -> TransformationHomotopy:
    """Build H from the insertions of theta into every position of a string.

    theta(y) is an arrow psi(y) -> phi(y).  For a string k_1 .. k_n of K
    with objects y_0 .. y_n, h_i inserts theta(y_i) between phi(k_i) and
    psi(k_{i+1}); H = sum_i (-1)^(i+1) h_i.  Unnormalized complexes are used
    because the inserted arrow may be a unit.
    """
    check_natural(phi, psi, theta)
    k_, g_ = phi.source, phi.target
    coeff = a.coeff
    pa = pullback(phi, a)
    ca, cpa = _coefs(a), _coefs(pa)
    src = _bar(k_, cpa, coeff, max_degree, False)
    tgt = _bar(g_, ca, coeff, max_degree + 1, False)
    hom, fmap, gmap = {}, {}, {}
    for n in range(max_degree + 1):
        lk = nerve(k_, n)
        lg, lg_up = nerve(g_, n), nerve(g_, n + 1)
        off_g, _ = _offsets(g_, a.rank, n, False)
        off_up, _ = _offsets(g_, a.rank, n + 1, False)
        hcols, fcols, gcols = [], [], []
        for i, s in enumerate(lk.strings):
            y0 = lk.first[i]
            r = pa.rank[y0]
            ys = [y0] if n == 0 else [y0] + [k_.src[k] for k in s]
            block = [dict() for _ in range(r)]
            for pos in range(n + 1):
                if n == 0:
                    new = (theta[y0],)
                else:
                    new = tuple(phi.arrow_map[k] for k in s[:pos]) + (theta[ys[pos]],) + \
                        tuple(psi.arrow_map[k] for k in s[pos:])
                base = off_up[lg_up.index[new]]
                sign = (-1) ** (pos + 1)
                for j in range(r):
                    block[j][base + j] = block[j].get(base + j, 0) + sign
            hcols.extend(block)
            t = lg.index[_string_image(phi, s, n)]
            fcols.extend({off_g[t] + j: 1} for j in range(r))
            t2 = lg.index[_string_image(psi, s, n)]
            tr = ca.act[theta[y0]]
            base = off_g[t2]
            gcols.extend({base + rr: v for rr, v in tr.cols[j].items()} for j in range(r))
        hom[n] = Matrix(tgt.rank(n + 1), src.rank(n), hcols)
        fmap[n] = Matrix(tgt.rank(n), src.rank(n), fcols)
        gmap[n] = Matrix(tgt.rank(n), src.rank(n), gcols)
    return TransformationHomotopy(src, tgt, hom, fmap, gmap, max_degree)


# ---------------------------------------------------------------------------
# double complexes of bar type


def _sheaf_double_complex(g: FiniteGroupoid, coeff: Coefficients, levels: Sequence[_Coefs],
                          vertical: Sequence[Sequence[Matrix] | None], max_total: int,
                          normalized: bool) -> DoubleComplex:
    """C_{p,q} = B_p(g; levels[q]) for p + q <= max_total.

    ``vertical[q][x]`` is the stalk map levels[q] -> levels[q-1] at x; it must
    commute with the actions.
    """
    ranks, hor, ver = {}, {}, {}
    for q, c in enumerate(levels):
        for p in range(0, max_total - q + 1):
            ranks[(p, q)] = _offsets(g, c.ranks, p, normalized)[1]
            if p >= 1:
                hor[(p, q)] = _bar_boundary(g, c, p, normalized)
            if q >= 1 and vertical[q] is not None:
                lvl = nerve(g, p, normalized)
                off_lo, dim_lo = _offsets(g, levels[q - 1].ranks, p, normalized)
                cols = []
                for i in range(len(lvl)):
                    base = off_lo[i]
                    for col in vertical[q][lvl.first[i]].cols:
                        cols.append({base + r: v for r, v in col.items()})
                ver[(p, q)] = Matrix(dim_lo, ranks[(p, q)], cols)
    return DoubleComplex(coeff, ranks, hor, ver)


def _complex_levels(cx: SheafComplex) -> tuple[list[_Coefs], list]:
    levels, vertical = [], []
    for n in range(cx.lo, cx.hi + 1):
        a = cx.sheaves[n]
        levels.append(_coefs(a))
        if n == cx.lo:
            vertical.append(None)
        else:
            d = cx.differentials[n]
            vertical.append([Matrix.from_rows(d.at(x), a.rank[x]) if d.target.rank[x] else Matrix.zero(0, a.rank[x])
                             for x in cx.base.objects])
    return levels, vertical


def hyperhomology_double_complex(cx: SheafComplex, max_degree: int, normalized: bool = True) -> DoubleComplex:
    """B_p(g; A_q) with q shifted to start at 0, truncated at total degree max_degree + 1."""
    levels, vertical = _complex_levels(cx)
    top = max_degree - cx.lo + 1
    levels, vertical = levels[: top + 1], vertical[: top + 1]
    return _sheaf_double_complex(cx.base, cx.coeff, levels, vertical, top, normalized)


def hyperhomology(g: FiniteGroupoid, cx: SheafComplex, max_degree: int, normalized: bool = True) -> dict[int, AbGroupClass]:
    """Homology of Tot B_p(g; A_q) for degrees cx.lo .. max_degree."""
    if cx.base is not g:
        raise ValueError("sheaf complex does not live on this groupoid")
    if max_degree < cx.lo:
        return {}
    tot = total_complex(hyperhomology_double_complex(cx, max_degree, normalized))
    h = tot.all_homology()
    return {n: h[n - cx.lo] for n in range(cx.lo, max_degree + 1)}


def homology_sheaf(cx: SheafComplex, q: int) -> GSheaf:
    """The sheaf of stalkwise homology H_q(A_•) with the induced action (field coefficients)."""
    k = cx.coeff
    if not k.is_field:
        raise IntegerCoefficientsUnsupported("homology sheaves are built over fields")
    g = cx.base
    a = cx.sheaves.get(q)
    if a is None:
        from .sheaves import zero_sheaf

        return zero_sheaf(g, k)
    pres = []
    for x in g.objects:
        r = a.rank[x]
        if q + 1 in cx.differentials:
            dn = cx.differentials[q + 1]
            bin_ = Matrix.from_rows(dn.at(x), dn.source.rank[x]) if r else Matrix.zero(0, dn.source.rank[x])
        else:
            bin_ = Matrix.zero(r, 0)
        if q in cx.differentials:
            dq = cx.differentials[q]
            bout = Matrix.from_rows(dq.at(x), r) if dq.target.rank[x] else Matrix.zero(0, r)
        else:
            bout = Matrix.zero(0, r)
        pres.append(HomologyPresentation(bin_, bout, k))
    act = []
    for e in g.arrows:
        x, y = g.src[e], g.tgt[e]
        m = Matrix.from_rows(a.act[e], a.rank[y])
        cols = [pres[x].coordinates(m.apply(z)) for z in pres[y].generators]
        nx = len(pres[x].generators)
        act.append([[cols[j][i] for j in range(len(cols))] for i in range(nx)])
    return GSheaf(g, k, tuple(len(p.generators) for p in pres), tuple(act), name=f"H{q}")


def _restrict_pages(pages: list[SpectralSequencePage], max_total: int, q_shift: int = 0) -> list[SpectralSequencePage]:
    out = []
    for pg in pages:
        dims = {(p, q + q_shift): v for (p, q), v in pg.dims.items() if p + q <= max_total}
        diffs = {(p, q + q_shift): m for (p, q), m in pg.differentials.items() if p + q <= max_total + 1}
        out.append(SpectralSequencePage(pg.r, dims, diffs, {}, pg.is_infinity, pg.coeff))
    return out


def stabilization_page(pages: list[SpectralSequencePage], max_total: int) -> int:
    """First r with all differentials from E^r on (within total degree <= max_total + 1) zero."""
    r = pages[-1].r
    for pg in reversed(pages):
        if pg.has_nonzero_differential():
            break
        r = pg.r
    return r


@dataclass
class SpectralSequenceReport:
    pages: list[SpectralSequencePage]
    max_degree: int
    e2_expected: dict[tuple[int, int], int]
    abutment: dict[int, int]
    target_dims: dict[int, int]
    stabilizes_at: int

    @property
    def e2(self) -> SpectralSequencePage:
        for pg in self.pages:
            if pg.r == 2:
                return pg
        return self.pages[-1]

    @property
    def e_infinity(self) -> SpectralSequencePage:
        return self.pages[-1]

    @property
    def e2_ok(self) -> bool:
        dims = {k: v for k, v in self.e2.dims.items() if v}
        return dims == {k: v for k, v in self.e2_expected.items() if v}

    @property
    def abutment_ok(self) -> bool:
        return all(self.abutment.get(n, 0) == self.target_dims.get(n, 0) for n in range(self.max_degree + 1))


def hyperhomology_spectral_sequence(g: FiniteGroupoid, cx: SheafComplex, max_degree: int,
                                    normalized: bool = True) -> SpectralSequenceReport:
    """E^2_{p,q} = H_p(g; H_q(A_•)) => hyperhomology, with both sides checked."""
    if not cx.coeff.is_field:
        raise IntegerCoefficientsUnsupported("spectral sequence pages need field coefficients")
    d = hyperhomology_double_complex(cx, max_degree, normalized)
    top = max_degree - cx.lo
    raw = spectral_sequence(d)
    pages = _restrict_pages(raw, top, cx.lo)
    expected = {}
    for q in range(cx.lo, min(cx.hi, max_degree) + 1):
        hs = homology_sheaf(cx, q)
        hp = homology_groups(g, hs, max_degree - q, normalized=normalized)
        for p, grp in enumerate(hp):
            expected[(p, q)] = grp.betti
    abut = {n: pages[-1].antidiagonal(n) for n in range(cx.lo, max_degree + 1)}
    hyper = hyperhomology(g, cx, max_degree, normalized)
    target = {n: h.betti for n, h in hyper.items()}
    return SpectralSequenceReport(pages, max_degree, expected, abut, target, stabilization_page(pages, top))


# ---------------------------------------------------------------------------
# Leray apparatus


@dataclass(eq=False)
class LerayData:
    """The sheaves B_q(phi; a) of comma-groupoid chains and their stalk boundaries.

    ``levels[q]`` gives the stalk ranks over the target's objects and the
    permutation actions induced by (y, g) -> (y, g o h); ``vertical[q][x]``
    is the bar boundary of the comma groupoid x/phi with coefficients
    pulled back from a.
    """

    phi: GroupoidHom
    sheaf: GSheaf
    max_level: int
    normalized: bool
    commas: list
    levels: list[_Coefs]
    vertical: list

    def stalk_complex(self, x: int) -> ChainComplex:
        ranks = {q: self.levels[q].ranks[x] for q in range(self.max_level + 1)}
        bds = {q: self.vertical[q][x] for q in range(1, self.max_level + 1)}
        return ChainComplex(self.sheaf.coeff, 0, self.max_level, ranks, bds)

    def as_sheaf_complex(self) -> SheafComplex:
        """Dense GSheaf form, practical for small instances."""
        g, k = self.phi.target, self.sheaf.coeff
        sheaves = {}
        for q, c in enumerate(self.levels):
            sheaves[q] = GSheaf(g, k, c.ranks, tuple(m.to_rows() for m in c.act), name=f"B{q}")
        diffs = {}
        for q in range(1, len(self.levels)):
            mats = tuple(tuple(tuple(r) for r in self.vertical[q][x].to_rows()) for x in g.objects)
            diffs[q] = SheafMap(sheaves[q], sheaves[q - 1], mats)
        return SheafComplex(0, len(self.levels) - 1, sheaves, diffs)


def leray_sheaf_complex(phi: GroupoidHom, a: GSheaf, max_level: int, normalized: bool = True) -> LerayData:
    if a.base is not phi.source:
        raise ValueError("sheaf does not live on the source of phi")
    g_ = phi.target
    commas = [comma_groupoid(phi, x) for x in g_.objects]
    pulled = [pullback(proj, a) for _, proj in commas]
    coefs = [_coefs(b) for b in pulled]
    # comma arrow (k, g) at x is identified by its label; the action of h: x -> x2
    # re-labels (k, g) in x2/phi as (k, g o h) in x/phi
    arrow_index = [{lab: i for i, lab in enumerate(c.arrow_labels)} for c, _ in commas]
    object_index = [{lab: i for i, lab in enumerate(c.object_labels)} for c, _ in commas]
    levels, vertical = [], []
    for q in range(max_level + 1):
        ranks, offs = [], []
        for x in g_.objects:
            off, dim = _offsets(commas[x][0], coefs[x].ranks, q, normalized)
            ranks.append(dim)
            offs.append(off)
        act = []
        for h in g_.arrows:
            x, x2 = g_.src[h], g_.tgt[h]
            up, low = commas[x2][0], commas[x][0]
            lvl_up, lvl_low = nerve(up, q, normalized), nerve(low, q, normalized)
            cols = []
            for i, s in enumerate(lvl_up.strings):
                if q == 0:
                    y, gg = up.object_labels[s[0]]
                    image = (object_index[x][(y, g_.compose(gg, h))],)
                else:
                    image = tuple(arrow_index[x][(up.arrow_labels[c][0], g_.compose(up.arrow_labels[c][1], h))]
                                  for c in s)
                t = lvl_low.index[image]
                base = offs[x][t]
                r = coefs[x2].ranks[lvl_up.first[i]]
                cols.extend({base + j: 1} for j in range(r))
            act.append(Matrix(ranks[x], ranks[x2], cols))
        levels.append(_Coefs(tuple(ranks), tuple(act)))
        if q == 0:
            vertical.append(None)
        else:
            vertical.append([_bar_boundary(commas[x][0], coefs[x], q, normalized) for x in g_.objects])
    return LerayData(phi, a, max_level, normalized, commas, levels, vertical)


def comma_homology(phi: GroupoidHom, a: GSheaf, x: int, max_degree: int) -> list[AbGroupClass]:
    """H_q(x/phi; pi_x^* a) for q <= max_degree; the stalks of L_q phi_! a, over any coefficients."""
    comma, proj = comma_groupoid(phi, x)
    return homology_groups(comma, pullback(proj, a), max_degree)


def leray_derived_sheaf(phi: GroupoidHom, a: GSheaf, q: int, data: LerayData | None = None) -> GSheaf:
    """L_q phi_! a over a field: stalks are comma homology, actions transported cycles."""
    k = a.coeff
    if not k.is_field:
        raise IntegerCoefficientsUnsupported("L_q phi_! is built as a sheaf over fields only")
    data = data if data is not None and data.max_level >= q + 1 else leray_sheaf_complex(phi, a, q + 1)
    g_ = phi.target
    pres = [homology_presentation(data.stalk_complex(x), q) for x in g_.objects]
    act = []
    lvl = data.levels[q]
    for h in g_.arrows:
        x, x2 = g_.src[h], g_.tgt[h]
        m = lvl.act[h]
        cols = [pres[x].coordinates(m.apply(z)) for z in pres[x2].generators]
        act.append([[cols[j][i] for j in range(len(cols))] for i in range(len(pres[x].generators))])
    return GSheaf(g_, k, tuple(len(p.generators) for p in pres), tuple(act), name=f"L{q}")


def leray_double_complex(data: LerayData, max_degree: int) -> DoubleComplex:
    g_ = data.phi.target
    top = max_degree + 1
    return _sheaf_double_complex(g_, data.sheaf.coeff, data.levels[: top + 1], data.vertical[: top + 1], top,
                                 data.normalized)


def leray_spectral_sequence(phi: GroupoidHom, a: GSheaf, max_degree: int, normalized: bool = True) -> SpectralSequenceReport:
    """E^2_{p,q} = H_p(G; L_q phi_! a) => H_{p+q}(K; a).

    The E^2 page of the double complex is compared with the homology of the
    separately built derived sheaves, and the abutment with the bar complex
    of K.
    """
    if not a.coeff.is_field:
        raise IntegerCoefficientsUnsupported("the Leray spectral sequence is computed over fields")
    data = leray_sheaf_complex(phi, a, max_degree + 1, normalized)
    d = leray_double_complex(data, max_degree)
    pages = _restrict_pages(spectral_sequence(d), max_degree)
    expected = {}
    for q in range(max_degree + 1):
        lq = leray_derived_sheaf(phi, a, q, data)
        for p, grp in enumerate(homology_groups(phi.target, lq, max_degree - q)):
            expected[(p, q)] = grp.betti
    abut = {n: pages[-1].antidiagonal(n) for n in range(max_degree + 1)}
    direct = homology_groups(phi.source, a, max_degree)
    target = {n: h.betti for n, h in enumerate(direct)}
    return SpectralSequenceReport(pages, max_degree, expected, abut, target, stabilization_page(pages, max_degree))


# ---------------------------------------------------------------------------
# cap product with Yoneda extensions


def _snake(s: ShortExactSequenceOfComplexes, z: Sequence, n: int) -> list:
    """A cycle of the sub complex in degree n-1 representing the connecting image of z."""
    b, a = s.middle, s.sub
    coeff = a.coeff
    lift = dense_solve(s.projection.at(n).to_rows(), b.rank(n), list(z), coeff)
    if lift is None:
        raise NotACycle("cannot lift the chain through the projection")
    db = b.boundary(n).apply(lift)
    pre = dense_solve(s.inclusion.at(n - 1).to_rows(), a.rank(n - 1), db, coeff)
    if pre is None:
        raise NotACycle("boundary of the lift is not in the image of the inclusion")
    return pre


@dataclass
class CapResult:
    degree: int
    group: AbGroupClass
    coordinates: list
    representative: list


def cap_with_extension(u: Sequence, n: int, e: ExtensionClass, normalized: bool = True) -> CapResult:
    """u in H_n(G; B) capped with an extension of length p from B to A, landing in H_{n-p}(G; A).

    ``u`` is a cycle of the bar complex ``bar_complex(G, B, n, normalized)`` in
    degree n.  The extension is split into short exact sequences and the
    connecting maps are applied at chain level.
    """
    b = e.start
    g = b.base
    pieces, iso = e.splice()
    p = len(pieces)
    top = max(n, 0)
    cb = _bar(g, _coefs(b), b.coeff, top + 1, normalized)
    pres_u = homology_presentation(cb, n)
    if len(u) != cb.rank(n) or not pres_u.is_cycle(u):
        raise NotACycle("u is not a cycle of the bar complex in degree n")
    target = n - p
    if target < 0:
        return CapResult(target, AbGroupClass(0, ()), [], [])
    z = list(u)
    for j, piece in enumerate(pieces):
        s = bar_ses(piece, top, normalized)
        z = _snake(s, z, n - j)
    # identify the last kernel with A
    inv_mats = []
    for x in g.objects:
        m = iso.at(x)
        inv_mats.append(tuple(tuple(r) for r in dense_inverse([list(r) for r in m], b.coeff)) if m else ())
    back = SheafMap(iso.target, iso.source, tuple(inv_mats))
    cm = sheaf_chain_map(back, top, normalized)
    rep = cm.at(target).apply(z)
    ca = cm.target
    pres = homology_presentation(ca, target)
    return CapResult(target, pres.group, pres.coordinates(rep), rep)
