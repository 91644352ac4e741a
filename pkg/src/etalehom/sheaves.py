"""Sheaves on finite groupoids: a free stalk per object and an action per arrow.

For an arrow g: x -> y the action is a matrix ``act[g]`` from the stalk at y
to the stalk at x (a right action, a -> a.g), so it has shape
``(rank[x], rank[y])``.  The axioms are act(u(x)) = I and
act(h) @ act(g) = act(g o h).  Vectors are columns.

>>> from etalehom.groupoids import cyclic_group
>>> from etalehom.linalg import ZZ
>>> reg = free_sheaf(cyclic_group(3), [1], ZZ)
>>> reg.rank
(3,)
>>> reg.act[1]
((0, 0, 1), (1, 0, 0), (0, 1, 0))
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Sequence

from .groupoids import FiniteGroupoid, GroupoidHom, nerve
from .linalg import (
    Coefficients,
    Matrix,
    dense_identity,
    dense_inverse,
    dense_kernel,
    dense_matmul,
    dense_solve,
    homology_at,
    snf_full,
)


class SheafError(ValueError):
    pass


class NotASheaf(SheafError):
    pass


class NotEquivariant(SheafError):
    pass


class NotAShriekableHom(SheafError):
    pass


class IntegerTensorUnsupported(SheafError):
    pass


class NotExactSheaves(SheafError):
    pass


Dense = tuple[tuple, ...]


def _freeze(rows: Sequence[Sequence], coeff: Coefficients) -> Dense:
    return tuple(tuple(coeff.normalize(x) for x in r) for r in rows)


def _mm(a: Sequence[Sequence], b: Sequence[Sequence], coeff: Coefficients, inner: int) -> Dense:
    if not a:
        return ()
    if inner == 0:
        return tuple(tuple(0 for _ in range(len(b[0]) if b else 0)) for _ in a)
    return _freeze(dense_matmul(a, b), coeff)


def _zeros(r: int, c: int) -> Dense:
    return tuple(tuple(0 for _ in range(c)) for _ in range(r))


def _ident(n: int) -> Dense:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def _shape_ok(m: Dense, r: int, c: int) -> bool:
    return len(m) == r and all(len(row) == c for row in m)


@dataclass(frozen=True, eq=False)
class GSheaf:
    """A sheaf over a finite groupoid with free stalks of rank ``rank[x]``."""

    base: FiniteGroupoid
    coeff: Coefficients
    rank: tuple[int, ...]
    act: tuple[Dense, ...]
    name: str = ""
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        g, k = self.base, self.coeff
        object.__setattr__(self, "rank", tuple(int(r) for r in self.rank))
        if len(self.rank) != g.n_objects or len(self.act) != g.n_arrows:
            raise NotASheaf("stalk or action count does not match the base")
        object.__setattr__(self, "act", tuple(_freeze(m, k) for m in self.act))
        if not self.check:
            return
        for a in g.arrows:
            if not _shape_ok(self.act[a], self.rank[g.src[a]], self.rank[g.tgt[a]]):
                raise NotASheaf(f"action of arrow {a} has the wrong shape")
        for x in g.objects:
            if self.act[g.unit[x]] != _ident(self.rank[x]):
                raise NotASheaf(f"unit of object {x} does not act as the identity")
        for (a, h), ah in g.table.items():
            # h: w -> x, a: x -> y
            lhs = _mm(self.act[h], self.act[a], k, self.rank[g.tgt[h]])
            if lhs != self.act[ah]:
                raise NotASheaf(f"act({h}) act({a}) != act({a} o {h})")

    def stalk(self, x: int) -> int:
        return self.rank[x]

    def total_rank(self) -> int:
        return sum(self.rank)

    def __repr__(self) -> str:
        tag = f" {self.name}" if self.name else ""
        return f"<GSheaf{tag} over {self.base!r}, ranks {self.rank}>"


def constant_sheaf(g: FiniteGroupoid, coeff: Coefficients, rank: int = 1) -> GSheaf:
    return GSheaf(g, coeff, (rank,) * g.n_objects,
                  tuple(_ident(rank) for _ in g.arrows), name=f"const{rank}", check=False)


def zero_sheaf(g: FiniteGroupoid, coeff: Coefficients) -> GSheaf:
    return constant_sheaf(g, coeff, 0)


def free_sheaf(g: FiniteGroupoid, ranks: Sequence[int], coeff: Coefficients) -> GSheaf:
    """E[g]: stalk at x is the sum over arrows a: x -> y of E_y; (e, a).h = (e, a o h)."""
    ranks = list(ranks)
    offsets: list[dict[int, int]] = []
    stalk = []
    for x in g.objects:
        off, pos = {}, 0
        for a in g.arrows_out_of(x):
            off[a] = pos
            pos += ranks[g.tgt[a]]
        offsets.append(off)
        stalk.append(pos)
    act = []
    for h in g.arrows:
        w, x = g.src[h], g.tgt[h]
        m = [[0] * stalk[x] for _ in range(stalk[w])]
        for a, off in offsets[x].items():
            ah = g.compose(a, h)
            off2 = offsets[w][ah]
            for j in range(ranks[g.tgt[a]]):
                m[off2 + j][off + j] = 1
        act.append(m)
    return GSheaf(g, coeff, tuple(stalk), tuple(act), name="free")


def permutation_sheaf(g: FiniteGroupoid, n_points: int, anchor: Sequence[int], action, coeff: Coefficients) -> GSheaf:
    """Free module on a sheaf of sets: points over each object, acted on by ``action(p, a)``."""
    fibre: list[list[int]] = [[] for _ in g.objects]
    for p in range(n_points):
        fibre[anchor[p]].append(p)
    pos = {p: i for x in g.objects for i, p in enumerate(fibre[x])}
    act = []
    for a in g.arrows:
        x, y = g.src[a], g.tgt[a]
        m = [[0] * len(fibre[y]) for _ in fibre[x]]
        for p in fibre[y]:
            q = action(p, a)
            if anchor[q] != x:
                raise NotASheaf(f"point {p} acted on by {a} leaves the fibre over the source")
            m[pos[q]][pos[p]] = 1
        act.append(m)
    return GSheaf(g, coeff, tuple(len(f) for f in fibre), tuple(act), name="perm")


def representation_sheaf(g: FiniteGroupoid, matrices: Sequence[Sequence[Sequence]], coeff: Coefficients) -> GSheaf:
    """A one-object sheaf given by a right representation of a group."""
    r = len(matrices[0]) if matrices else 0
    return GSheaf(g, coeff, (r,) * g.n_objects, tuple(matrices), name="rep")


def pullback(phi: GroupoidHom, a: GSheaf) -> GSheaf:
    if a.base is not phi.target:
        raise SheafError("sheaf does not live on the target of the homomorphism")
    k = phi.source
    return GSheaf(k, a.coeff, tuple(a.rank[phi.object_map[y]] for y in k.objects),
                  tuple(a.act[phi.arrow_map[a_]] for a_ in k.arrows), name=a.name, check=False)


def shriek_lifts(phi: GroupoidHom) -> dict[tuple[int, int], int]:
    """For every arrow g and every y over tgt(g), the unique lift of g with target y.

    Raises NotAShriekableHom when some lift is missing or not unique.
    """
    k_, g_ = phi.source, phi.target
    over: dict[int, list[int]] = {a: [] for a in g_.arrows}
    for kk in k_.arrows:
        over[phi.arrow_map[kk]].append(kk)
    fibre: list[list[int]] = [[] for _ in g_.objects]
    for y in k_.objects:
        fibre[phi.object_map[y]].append(y)
    lifts = {}
    for a in g_.arrows:
        for y in fibre[g_.tgt[a]]:
            cands = [kk for kk in over[a] if k_.tgt[kk] == y]
            if len(cands) != 1:
                raise NotAShriekableHom(
                    f"arrow {a} has {len(cands)} lifts with target {y}; the square over it is not a pullback"
                )
            lifts[(a, y)] = cands[0]
    return lifts


def _fibres(phi: GroupoidHom) -> list[list[int]]:
    fibre: list[list[int]] = [[] for _ in phi.target.objects]
    for y in phi.source.objects:
        fibre[phi.object_map[y]].append(y)
    return fibre


def shriek(phi: GroupoidHom, b: GSheaf) -> GSheaf:
    """phi_! b: stalk at x is the sum of b over the fibre, for covering-type phi."""
    if b.base is not phi.source:
        raise SheafError("sheaf does not live on the source of the homomorphism")
    g_ = phi.target
    lifts = shriek_lifts(phi)
    fibre = _fibres(phi)
    offs = []
    for x in g_.objects:
        off, pos = {}, 0
        for y in fibre[x]:
            off[y] = pos
            pos += b.rank[y]
        offs.append((off, pos))
    act = []
    for a in g_.arrows:
        x, x2 = g_.src[a], g_.tgt[a]
        m = [[0] * offs[x2][1] for _ in range(offs[x][1])]
        for y2 in fibre[x2]:
            kk = lifts[(a, y2)]
            y = phi.source.src[kk]
            blk = b.act[kk]
            r0, c0 = offs[x][0][y], offs[x2][0][y2]
            for i, row in enumerate(blk):
                for j, v in enumerate(row):
                    m[r0 + i][c0 + j] = v
        act.append(m)
    return GSheaf(g_, b.coeff, tuple(o[1] for o in offs), tuple(act), name="shriek")


def tensor(a: GSheaf, b: GSheaf) -> GSheaf:
    if a.base is not b.base:
        raise SheafError("tensor factors live on different bases")
    if a.coeff != b.coeff:
        raise SheafError("tensor factors have different coefficients")
    if not a.coeff.is_field:
        raise IntegerTensorUnsupported("tensor products are built over fields only")
    k = a.coeff
    act = [_kron(a.act[g], b.act[g], k) for g in a.base.arrows]
    return GSheaf(a.base, k, tuple(x * y for x, y in zip(a.rank, b.rank)), tuple(act), name="tensor", check=False)


def _kron(m: Dense, n: Dense, k: Coefficients) -> list[list]:
    rows = []
    ncols_n = len(n[0]) if n else 0
    ncols_m = len(m[0]) if m else 0
    for row_m in m:
        for row_n in n:
            rows.append([k.mul(x, y) for x in row_m for y in row_n])
    if not rows:
        return []
    assert len(rows[0]) == ncols_m * ncols_n
    return rows


def dual(a: GSheaf) -> GSheaf:
    """Stalkwise dual with transposed inverse actions."""
    k = a.coeff
    act = []
    for g in a.base.arrows:
        # act(g): A_y -> A_x; dual needs A_y^* -> A_x^*, i.e. (act(g)^-1)^T
        m = a.act[g]
        r = len(m)
        if r == 0:
            act.append(_zeros(0, a.rank[a.base.tgt[g]]))
            continue
        inv = dense_inverse(m, k)
        act.append([[inv[j][i] for j in range(len(inv))] for i in range(len(inv[0]))])
    return GSheaf(a.base, k, a.rank, tuple(act), name="dual")


def direct_sum(*parts: GSheaf) -> GSheaf:
    base, k = parts[0].base, parts[0].coeff
    ranks = tuple(sum(p.rank[x] for p in parts) for x in base.objects)
    act = []
    for g in base.arrows:
        x, y = base.src[g], base.tgt[g]
        m = [[0] * ranks[y] for _ in range(ranks[x])]
        r0 = c0 = 0
        for p in parts:
            for i, row in enumerate(p.act[g]):
                for j, v in enumerate(row):
                    m[r0 + i][c0 + j] = v
            r0 += p.rank[x]
            c0 += p.rank[y]
        act.append(m)
    return GSheaf(base, k, ranks, tuple(act), name="sum", check=False)


def change_coefficients(a: GSheaf, coeff: Coefficients) -> GSheaf:
    """Reduce an integral sheaf to another coefficient ring."""
    return GSheaf(a.base, coeff, a.rank, a.act, name=a.name)


# ---------------------------------------------------------------------------
# maps, exact sequences, extensions


@dataclass(frozen=True, eq=False)
class SheafMap:
    """Per-object matrices f_x: A_x -> B_x with f_x act_A(g) = act_B(g) f_y."""

    source: GSheaf
    target: GSheaf
    stalk_maps: tuple[Dense, ...]
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        a, b = self.source, self.target
        if a.base is not b.base:
            raise SheafError("sheaf map between different bases")
        k = a.coeff
        object.__setattr__(self, "stalk_maps", tuple(_freeze(m, k) for m in self.stalk_maps))
        g = a.base
        if len(self.stalk_maps) != g.n_objects:
            raise SheafError("one stalk map per object is required")
        for x in g.objects:
            m = self.stalk_maps[x]
            if not (_shape_ok(m, b.rank[x], a.rank[x]) or (b.rank[x] == 0 and m == ())):
                raise SheafError(f"stalk map at {x} has the wrong shape")
        if not self.check:
            return
        for e in g.arrows:
            x, y = g.src[e], g.tgt[e]
            lhs = _mm(self.stalk_maps[x], a.act[e], k, a.rank[x]) if b.rank[x] else ()
            rhs = _mm(b.act[e], self.stalk_maps[y], k, b.rank[y]) if b.rank[x] else ()
            if lhs != rhs:
                raise NotEquivariant(f"stalk maps do not commute with arrow {e}")

    def at(self, x: int) -> Dense:
        return self.stalk_maps[x]

    def then(self, other: "SheafMap") -> "SheafMap":
        """other o self."""
        k = self.source.coeff
        mats = [_mm(other.stalk_maps[x], self.stalk_maps[x], k, self.target.rank[x])
                if other.target.rank[x] else () for x in self.source.base.objects]
        return SheafMap(self.source, other.target, tuple(mats))


def identity_sheaf_map(a: GSheaf) -> SheafMap:
    return SheafMap(a, a, tuple(_ident(r) for r in a.rank), check=False)


def zero_sheaf_map(a: GSheaf, b: GSheaf) -> SheafMap:
    return SheafMap(a, b, tuple(_zeros(b.rank[x], a.rank[x]) for x in a.base.objects), check=False)


def _rank_and_divisors(m: Dense, rows: int, cols: int, k: Coefficients):
    s = snf_full([list(r) for r in m], k, rows, cols)
    return s.rank, s.diagonal()


@dataclass(frozen=True, eq=False)
class SheafSES:
    """0 -> A --inclusion--> B --projection--> C -> 0, exact at every stalk."""

    inclusion: SheafMap
    projection: SheafMap

    def __post_init__(self):
        i, p = self.inclusion, self.projection
        if i.target is not p.source:
            raise NotExactSheaves("inclusion target differs from projection source")
        a, b, c = i.source, i.target, p.target
        k = a.coeff
        for x in a.base.objects:
            ri, di = _rank_and_divisors(i.at(x), b.rank[x], a.rank[x], k)
            rp, dp = _rank_and_divisors(p.at(x), c.rank[x], b.rank[x], k)
            if ri != a.rank[x] or rp != c.rank[x] or ri + rp != b.rank[x]:
                raise NotExactSheaves(f"stalk sequence at {x} is not exact")
            if not k.is_field and any(d != 1 for d in di + dp):
                raise NotExactSheaves(f"stalk sequence at {x} is exact only rationally")
            if b.rank[x] and c.rank[x] and a.rank[x]:
                comp = _mm(p.at(x), i.at(x), k, b.rank[x])
                if any(any(r) for r in comp):
                    raise NotExactSheaves(f"projection o inclusion nonzero at {x}")

    @property
    def sub(self) -> GSheaf:
        return self.inclusion.source

    @property
    def middle(self) -> GSheaf:
        return self.inclusion.target

    @property
    def quotient(self) -> GSheaf:
        return self.projection.target


def kernel_sheaf(f: SheafMap) -> tuple[GSheaf, SheafMap]:
    """Kernel of f as a sheaf together with its inclusion.

    Over Z the stalkwise kernels are saturated, hence free, and the restricted
    actions are integral.
    """
    a, b = f.source, f.target
    g, k = a.base, a.coeff
    bases = []
    for x in g.objects:
        rows = [list(r) for r in f.at(x)] if b.rank[x] else []
        basis = dense_kernel(rows, a.rank[x], k)  # list of column vectors
        if k.kind == "Q":
            basis = [_clear_denominators(v) for v in basis]
        bases.append(basis)
    ranks = tuple(len(bs) for bs in bases)
    act = []
    for e in g.arrows:
        x, y = g.src[e], g.tgt[e]
        # act_A(e) K_y = K_x M
        kx = [[bases[x][j][i] for j in range(ranks[x])] for i in range(a.rank[x])]
        cols = []
        for v in bases[y]:
            w = [sum(a.act[e][i][j] * v[j] for j in range(a.rank[y])) for i in range(a.rank[x])]
            sol = dense_solve(kx, ranks[x], w, k) if ranks[x] else []
            if sol is None:
                raise SheafError("kernel is not preserved by the action")
            cols.append(sol)
        act.append([[cols[j][i] for j in range(ranks[y])] for i in range(ranks[x])])
    ker = GSheaf(g, k, ranks, tuple(act), name="ker")
    incl = SheafMap(ker, a, tuple(tuple(tuple(bases[x][j][i] for j in range(ranks[x])) for i in range(a.rank[x]))
                                  for x in g.objects))
    return ker, incl


def _clear_denominators(v: list) -> list:
    """The primitive integer multiple of a rational vector (sparser reductions downstream)."""
    den = 1
    for x in v:
        den = lcm(den, Fraction(x).denominator)
    w = [int(Fraction(x) * den) for x in v]
    g = 0
    for x in w:
        g = gcd(g, x)
    return [x // g for x in w] if g > 1 else w


def ses_from_surjection(p: SheafMap) -> SheafSES:
    ker, incl = kernel_sheaf(p)
    return SheafSES(incl, p)


def split_ses(a: GSheaf, c: GSheaf) -> SheafSES:
    b = direct_sum(a, c)
    g = a.base
    incl, proj = [], []
    for x in g.objects:
        ra, rc = a.rank[x], c.rank[x]
        incl.append([[1 if i == j else 0 for j in range(ra)] for i in range(ra)] + [[0] * ra for _ in range(rc)])
        proj.append([[1 if j == ra + i else 0 for j in range(ra + rc)] for i in range(rc)])
    return SheafSES(SheafMap(a, b, tuple(incl)), SheafMap(b, c, tuple(proj)))


@dataclass(frozen=True, eq=False)
class ExtensionClass:
    """A Yoneda extension 0 <- B <- E_1 <- ... <- E_p <- A <- 0.

    ``maps[0]`` is E_1 -> B, ``maps[j]`` is E_{j+1} -> E_j and the last map
    is A -> E_p.  Exactness is checked at every stalk.
    """

    maps: tuple[SheafMap, ...]

    def __post_init__(self):
        ms = self.maps
        if len(ms) < 2:
            raise MalformedExtension("an extension needs at least two maps")
        for f, g in zip(ms[1:], ms):
            if f.target is not g.source:
                raise MalformedExtension("consecutive maps do not splice")
        k = ms[0].source.coeff
        base = ms[0].source.base
        for x in base.objects:
            # surjective onto B, injective from A, exact in between
            first, last = ms[0], ms[-1]
            r0 = _rank_and_divisors(first.at(x), first.target.rank[x], first.source.rank[x], k)
            if r0[0] != first.target.rank[x]:
                raise MalformedExtension(f"E_1 -> B is not onto at {x}")
            rl = _rank_and_divisors(last.at(x), last.target.rank[x], last.source.rank[x], k)
            if rl[0] != last.source.rank[x]:
                raise MalformedExtension(f"A -> E_p is not injective at {x}")
            for f, g in zip(ms[1:], ms):
                mid = f.target.rank[x]
                if mid and g.target.rank[x] and f.source.rank[x]:
                    comp = _mm(g.at(x), f.at(x), k, mid)
                    if any(any(r) for r in comp):
                        raise MalformedExtension(f"composite of consecutive maps nonzero at {x}")
                rf = _rank_and_divisors(f.at(x), mid, f.source.rank[x], k)
                rg = _rank_and_divisors(g.at(x), g.target.rank[x], mid, k)
                if rf[0] + rg[0] != mid:
                    raise MalformedExtension(f"extension not exact at {x}")
                if not k.is_field and any(d != 1 for d in rf[1] + rg[1]):
                    raise MalformedExtension(f"extension exact only rationally at {x}")
        if not k.is_field:
            for x in base.objects:
                r = _rank_and_divisors(ms[0].at(x), ms[0].target.rank[x], ms[0].source.rank[x], k)
                if any(d != 1 for d in r[1]):
                    raise MalformedExtension(f"E_1 -> B is not onto over Z at {x}")

    @property
    def length(self) -> int:
        return len(self.maps) - 1

    @property
    def start(self) -> GSheaf:
        """B, the sheaf whose homology the extension acts on."""
        return self.maps[0].target

    @property
    def end(self) -> GSheaf:
        """A, the sheaf receiving the result."""
        return self.maps[-1].source

    def splice(self) -> tuple[list[SheafSES], SheafMap]:
        """Short exact pieces 0 <- K_{j-1} <- E_j <- K_j <- 0 from B down, and A -> K_p.

        K_0 is B and the returned map identifies A with the last kernel.
        """
        pieces = []
        surj = self.maps[0]
        for j in range(1, len(self.maps)):
            ker, incl = kernel_sheaf(surj)
            pieces.append(SheafSES(incl, surj))
            surj = _factor_through(self.maps[j], incl)
        return pieces, surj


class MalformedExtension(SheafError):
    pass


def _factor_through(f: SheafMap, incl: SheafMap) -> SheafMap:
    """The map g with incl o g = f, for f landing in the image of incl."""
    a, k_sheaf = f.source, incl.source
    k = a.coeff
    mats = []
    for x in a.base.objects:
        m = incl.at(x)
        rows = [list(r) for r in m]
        cols = []
        for j in range(a.rank[x]):
            col = [f.at(x)[i][j] for i in range(f.target.rank[x])]
            sol = dense_solve(rows, k_sheaf.rank[x], col, k) if k_sheaf.rank[x] else []
            if sol is None:
                raise MalformedExtension("map does not factor through the kernel")
            cols.append(sol)
        mats.append(tuple(tuple(cols[j][i] for j in range(a.rank[x])) for i in range(k_sheaf.rank[x])))
    return SheafMap(a, k_sheaf, tuple(mats))


# ---------------------------------------------------------------------------
# complexes of sheaves


@dataclass(frozen=True, eq=False)
class SheafComplex:
    """Sheaves in degrees lo..hi with differentials d_n: A_n -> A_{n-1}."""

    lo: int
    hi: int
    sheaves: dict
    differentials: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.sheaves:
            raise SheafError("a sheaf complex needs at least one sheaf")
        any_sheaf = next(iter(self.sheaves.values()))
        base, k = any_sheaf.base, any_sheaf.coeff
        sh = {}
        for n in range(self.lo, self.hi + 1):
            sh[n] = self.sheaves.get(n) or zero_sheaf(base, k)
        object.__setattr__(self, "sheaves", sh)
        ds = {}
        for n in range(self.lo + 1, self.hi + 1):
            d = self.differentials.get(n) or zero_sheaf_map(sh[n], sh[n - 1])
            if d.source is not sh[n] or d.target is not sh[n - 1]:
                raise SheafError(f"differential {n} has the wrong endpoints")
            ds[n] = d
        object.__setattr__(self, "differentials", ds)
        for n in range(self.lo + 2, self.hi + 1):
            comp = ds[n].then(ds[n - 1])
            if any(any(any(r) for r in m) for m in comp.stalk_maps):
                raise SheafError(f"differentials compose to nonzero at degree {n}")

    @property
    def base(self) -> FiniteGroupoid:
        return self.sheaves[self.lo].base

    @property
    def coeff(self) -> Coefficients:
        return self.sheaves[self.lo].coeff


def concentrated(a: GSheaf, degree: int = 0) -> SheafComplex:
    return SheafComplex(degree, degree, {degree: a})


def nerve_resolution(g: FiniteGroupoid, coeff: Coefficients, length: int,
                     check: bool = True) -> tuple[SheafComplex, SheafMap]:
    """The sheaves ZF_0 .. ZF_{length-1} of strings ending at each object, and the augmentation.

    F_n consists of strings (g_1, ..., g_{n+1}) lying over their last object,
    with (g_1, ..., g_{n+1}).h = (g_1, ..., g_{n+1} o h).  The differential is
    the alternating sum of the faces d_0 .. d_n, which all keep the last arrow.
    """
    sheaves, fibres, positions = {}, [], []
    for n in range(length):
        lvl = nerve(g, n + 1)
        fib: list[list[int]] = [[] for _ in g.objects]
        for i in range(len(lvl)):
            fib[lvl.last[i]].append(i)
        pos = {i: j for x in g.objects for j, i in enumerate(fib[x])}
        act = []
        for h in g.arrows:
            w, x = g.src[h], g.tgt[h]
            m = [[0] * len(fib[x]) for _ in fib[w]]
            for i in fib[x]:
                s = lvl.strings[i]
                t = s[:-1] + (g.compose(s[-1], h),)
                m[pos[lvl.index[t]]][pos[i]] = 1
            act.append(m)
        sheaves[n] = GSheaf(g, coeff, tuple(len(f) for f in fib), tuple(act), name=f"ZF{n}", check=False)
        fibres.append(fib)
        positions.append(pos)
    diffs = {}
    for n in range(1, length):
        lvl = nerve(g, n + 1)
        mats = []
        for x in g.objects:
            m = [[0] * len(fibres[n][x]) for _ in fibres[n - 1][x]]
            for i in fibres[n][x]:
                for j in range(n + 1):
                    f = lvl.faces[j][i]
                    m[positions[n - 1][f]][positions[n][i]] += (-1) ** j
            mats.append(m)
        diffs[n] = SheafMap(sheaves[n], sheaves[n - 1], tuple(mats))
    cx = SheafComplex(0, length - 1, sheaves, diffs) if length else None
    target = constant_sheaf(g, coeff, 1)
    aug = None
    if length:
        aug = SheafMap(sheaves[0], target, tuple((tuple(1 for _ in fibres[0][x]),) for x in g.objects))
        if check:
            _check_resolution(g, coeff, sheaves, diffs, aug, length)
    return cx, aug


def _check_resolution(g, coeff, sheaves, diffs, aug, length):
    """Stalkwise exactness of ZF_(length-1) -> ... -> ZF_0 -> Z -> 0 below the top degree."""
    for x in g.objects:
        def stalk(n):
            if n == -1:
                return Matrix.from_rows([list(aug.stalk_maps[x][0])], sheaves[0].rank[x])
            if n == -2:
                return Matrix.zero(0, 1)
            return Matrix.from_rows([list(r) for r in diffs[n + 1].stalk_maps[x]], sheaves[n + 1].rank[x])

        for n in range(-1, length - 1):
            if not homology_at(stalk(n), stalk(n - 1), coeff).is_zero():
                raise NotExactSheaves(f"the nerve resolution is not exact at object {x} in degree {n}")


# ---------------------------------------------------------------------------
# adjunctions


def hom_dimension(a: GSheaf, b: GSheaf) -> int:
    """Dimension of the space of equivariant maps a -> b over a field."""
    k = a.coeff
    if not k.is_field:
        raise SheafError("hom dimensions are computed over fields")
    g = a.base
    offs, n_unknowns = [], 0
    for x in g.objects:
        offs.append(n_unknowns)
        n_unknowns += a.rank[x] * b.rank[x]
    cols: list[dict] = [{} for _ in range(n_unknowns)]
    eq = 0
    for e in g.arrows:
        x, y = g.src[e], g.tgt[e]
        # f_x act_A(e) - act_B(e) f_y = 0 ; entry (i, j) with i < rank_B[x], j < rank_A[y]
        for i in range(b.rank[x]):
            for j in range(a.rank[y]):
                for l in range(a.rank[x]):
                    v = a.act[e][l][j]
                    if v:
                        var = offs[x] + i * a.rank[x] + l
                        cols[var][eq] = cols[var].get(eq, 0) + v
                for l in range(b.rank[y]):
                    v = b.act[e][i][l]
                    if v:
                        var = offs[y] + l * a.rank[y] + j
                        cols[var][eq] = cols[var].get(eq, 0) - v
                eq += 1
    from .reduction import matrix_rank

    m = Matrix(eq, n_unknowns, cols)
    return n_unknowns - matrix_rank(m, k)


def shriek_counit(phi: GroupoidHom, a: GSheaf) -> SheafMap:
    """Summation along the fibres phi_! phi^* a -> a."""
    up = shriek(phi, pullback(phi, a))
    fibre = _fibres(phi)
    mats = []
    for x in phi.target.objects:
        r = a.rank[x]
        mats.append([[1 if (j % r) == i else 0 for j in range(r * len(fibre[x]))] for i in range(r)] if r else ())
    return SheafMap(up, a, tuple(mats))


def shriek_unit(phi: GroupoidHom, b: GSheaf) -> SheafMap:
    """Inclusion b -> phi^* phi_! b of each stalk as its own summand."""
    down = pullback(phi, shriek(phi, b))
    fibre = _fibres(phi)
    mats = []
    for y in phi.source.objects:
        x = phi.object_map[y]
        off = 0
        for y2 in fibre[x]:
            if y2 == y:
                break
            off += b.rank[y2]
        ry, total = b.rank[y], down.rank[y]
        mats.append([[1 if i == off + j else 0 for j in range(ry)] for i in range(total)] if total else ())
    return SheafMap(b, down, tuple(mats))


def stalk_dims(a: GSheaf) -> tuple[int, ...]:
    return a.rank


def sheaves_isomorphic(a: GSheaf, b: GSheaf) -> bool:
    """Exact isomorphism test over a field through hom dimensions and an invertible witness.

    Two sheaves are isomorphic when some equivariant map a -> b is stalkwise
    invertible.  The search solves for the space of equivariant maps and
    tries basis elements and a fixed generic combination.
    """
    if a.rank != b.rank:
        return False
    k = a.coeff
    basis = hom_basis(a, b)
    for weights in _weight_vectors(len(basis), k):
        mats = []
        for x in a.base.objects:
            r = a.rank[x]
            m = [[0] * r for _ in range(r)]
            for w, bm in zip(weights, basis):
                if w:
                    for i in range(r):
                        for j in range(r):
                            m[i][j] = k.add(m[i][j], k.mul(w, bm[x][i][j]))
            mats.append(m)
        if all(_invertible(m, k) for m in mats):
            return True
    return False


def _invertible(m, k) -> bool:
    n = len(m)
    if n == 0:
        return True
    s = snf_full(m, k, n, n)
    return s.rank == n and all(k.is_unit(d) for d in s.diagonal())


def _weight_vectors(n: int, k: Coefficients):
    import random

    rng = random.Random(12345)
    if n == 0:
        yield []
        return
    for i in range(n):
        yield [1 if j == i else 0 for j in range(n)]
    bound = k.p if k.kind == "F" else 7
    for _ in range(64):
        yield [rng.randrange(bound) for _ in range(n)]


def hom_basis(a: GSheaf, b: GSheaf) -> list[list[list[list]]]:
    """A basis of the equivariant maps a -> b, each given as per-object matrices."""
    k = a.coeff
    g = a.base
    offs, n_unknowns = [], 0
    for x in g.objects:
        offs.append(n_unknowns)
        n_unknowns += a.rank[x] * b.rank[x]
    rows = []
    for e in g.arrows:
        x, y = g.src[e], g.tgt[e]
        for i in range(b.rank[x]):
            for j in range(a.rank[y]):
                row = [0] * n_unknowns
                for l in range(a.rank[x]):
                    row[offs[x] + i * a.rank[x] + l] += a.act[e][l][j]
                for l in range(b.rank[y]):
                    row[offs[y] + l * a.rank[y] + j] -= b.act[e][i][l]
                rows.append(row)
    sols = dense_kernel(rows, n_unknowns, k) if rows else dense_identity(n_unknowns)
    out = []
    for s in sols:
        mats = []
        for x in g.objects:
            ra, rb = a.rank[x], b.rank[x]
            mats.append([[s[offs[x] + i * ra + l] for l in range(ra)] for i in range(rb)])
        out.append(mats)
    return out
