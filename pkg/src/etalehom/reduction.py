"""Sparse reduction of chain complexes by cancelling cell pairs.

A boundary entry c between a cell tau in degree n and a cell sigma in degree
n-1 can be cancelled when c is a unit: both cells disappear and the boundary
of every other cell tau' with sigma in its boundary is corrected by
-(c'/c) * d(tau).  The reduced complex is chain homotopy equivalent to the
original, so homology is read off from the (usually tiny) residue.

With a filtration on the cells, restricting cancellations to pairs whose
filtration levels differ by exactly r, for r = 0, 1, 2, ..., produces the
pages of the associated spectral sequence: before stage r the surviving
cells form a basis of E^r and the entries of filtration gap r form d^r.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Mapping, Sequence

from .linalg import AbGroupClass, Coefficients, Matrix, QQ, ZZ, snf_full


class Reducer:
    """Mutable working copy of a chain complex on degrees lo..hi."""

    def __init__(
        self,
        coeff: Coefficients,
        lo: int,
        hi: int,
        dims: Mapping[int, int],
        boundaries: Mapping[int, Matrix],
        levels: Mapping[int, Sequence[int]] | None = None,
    ):
        self.coeff = coeff
        self.lo, self.hi = lo, hi
        self.alive: dict[int, dict[int, None]] = {n: dict.fromkeys(range(dims.get(n, 0))) for n in range(lo, hi + 1)}
        # bd[n][tau] = {sigma: coefficient}; cob[n][sigma] = cells of degree n+1 hitting sigma
        self.bd: dict[int, dict[int, dict]] = {}
        self.cob: dict[int, dict[int, set]] = {n: {s: set() for s in self.alive[n]} for n in range(lo, hi + 1)}
        modulus = coeff.p if coeff.kind == "F" else 0
        for n in range(lo + 1, hi + 1):
            m = boundaries.get(n)
            cob = self.cob[n - 1]
            if m is None:
                cols = {tau: {} for tau in self.alive[n]}
            elif modulus:
                cols = {tau: {s: v % modulus for s, v in col.items() if v % modulus} for tau, col in enumerate(m.cols)}
            else:
                cols = {tau: {s: v for s, v in col.items() if v} for tau, col in enumerate(m.cols)}
            for tau, col in cols.items():
                for sigma in col:
                    cob[sigma].add(tau)
            self.bd[n] = cols
        self.levels = levels
        self.cancelled = 0

    def gap(self, n: int, tau: int, sigma: int) -> int:
        lv = self.levels
        return lv[n][tau] - lv[n - 1][sigma]

    def cancel(self, n: int, tau: int, sigma: int) -> None:
        k = self.coeff
        bd_n, cob_lower = self.bd[n], self.cob[n - 1]
        col = bd_n[tau]
        c = col[sigma]
        rest = [(s, v) for s, v in col.items() if s != sigma]
        modulus = k.p if k.kind == "F" else 0
        if modulus:
            cinv = pow(c, -1, modulus)
        elif c == 1 or c == -1:
            cinv = c
        else:
            cinv = Fraction(1) / c
        for other in list(cob_lower[sigma]):
            if other == tau:
                continue
            ocol = bd_n[other]
            f = ocol.pop(sigma) * cinv
            if modulus:
                f %= modulus
            for s, v in rest:
                if s in ocol:
                    w = ocol[s] - f * v
                    if modulus:
                        w %= modulus
                    if w:
                        ocol[s] = w
                    else:
                        del ocol[s]
                        cob_lower[s].discard(other)
                else:
                    w = -f * v
                    if modulus:
                        w %= modulus
                    ocol[s] = w
                    cob_lower[s].add(other)
        # remove tau
        for s in col:
            cob_lower[s].discard(tau)
        del bd_n[tau]
        del self.alive[n][tau]
        upper = self.cob.get(n)
        if upper is not None:
            for rho in upper.pop(tau):
                del self.bd[n + 1][rho][tau]
        # remove sigma
        del cob_lower[sigma]
        del self.alive[n - 1][sigma]
        if n - 1 > self.lo:
            lower = self.cob[n - 2]
            for s in self.bd[n - 1].pop(sigma):
                lower[s].discard(sigma)
        self.cancelled += 1

    def sweep(self, units_only: bool, gap: int | None = None) -> int:
        """Cancel eligible pairs until none remain; return the number cancelled.

        Each column tau is paired with the entry sigma minimizing the update
        count (|coboundary(sigma)| - 1) * (|boundary(tau)| - 1).
        """
        total = 0
        while True:
            done = self._pass(units_only, gap)
            total += done
            if not done:
                return total

    def _pass(self, units_only: bool, gap: int | None) -> int:
        field_kind = self.coeff.kind == "F"
        total = 0
        for n in range(self.lo + 1, self.hi + 1):
            bd_n = self.bd[n]
            cob_lower = self.cob[n - 1]
            order = sorted(bd_n, key=lambda t: len(bd_n[t]))
            for tau in order:
                col = bd_n.get(tau)
                if not col:
                    continue
                width = len(col) - 1
                best = None
                for sigma, v in col.items():
                    if units_only and not (field_kind or v == 1 or v == -1):
                        continue
                    if gap is not None and self.gap(n, tau, sigma) != gap:
                        continue
                    cost = (len(cob_lower[sigma]) - 1) * width
                    if best is None or cost < best[0]:
                        best = (cost, sigma)
                        if cost == 0:
                            break
                if best is not None:
                    self.cancel(n, tau, best[1])
                    total += 1
        return total

    def residual(self, n: int) -> tuple[list[int], list[int], list[list]]:
        """Dense residual boundary from degree n to n-1 on surviving cells."""
        rows = list(self.alive.get(n - 1, {}))
        cols = list(self.alive.get(n, {}))
        pos = {s: i for i, s in enumerate(rows)}
        dense = [[0] * len(cols) for _ in rows]
        if n in self.bd:
            for j, tau in enumerate(cols):
                for s, v in self.bd[n][tau].items():
                    dense[pos[s]][j] = v
        return rows, cols, dense

    def entries(self, n: int):
        if n not in self.bd:
            return
        for tau, col in self.bd[n].items():
            for s, v in col.items():
                yield tau, s, v


def _reduce_fully(r: Reducer) -> None:
    r.sweep(units_only=True)
    if r.coeff.kind == "Q":
        # every nonzero rational is a unit; a second sweep keeps the residual small
        r.sweep(units_only=False)


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def _combine(u: dict, a, v: dict, b, modulus: int = 0) -> dict:
    """a*u + b*v on sparse vectors."""
    out = {}
    for i, x in u.items():
        out[i] = a * x
    for i, x in v.items():
        out[i] = out.get(i, 0) + b * x
    if modulus:
        return {i: x % modulus for i, x in out.items() if x % modulus}
    return {i: x for i, x in out.items() if x != 0}


def _primitive(v: dict) -> dict:
    """Divide an integer vector by the gcd of its entries (span over Q is unchanged)."""
    g = 0
    for x in v.values():
        g = gcd(g, x)
        if g == 1:
            return v
    return {i: x // g for i, x in v.items()} if g > 1 else v


def lattice_basis(columns, coeff: Coefficients, n_rows: int | None = None) -> dict[int, dict]:
    """Echelon basis of the span (over Z: the lattice) of sparse column vectors.

    Returns ``{pivot_row: vector}`` where the pivot row is the least index of
    the vector.  Over Z the result is a Hermite-style basis of the lattice.
    ``n_rows`` is an upper bound for the rank: once it is reached (with unit
    pivots over Z, so the lattice is saturated) the remaining columns are
    skipped.
    """
    basis: dict[int, dict] = {}
    kind = coeff.kind
    modulus = coeff.p if kind == "F" else 0
    for col in columns:
        if not col:
            continue
        if n_rows is not None and len(basis) >= n_rows:
            if kind != "Z" or all(b[r] == 1 for r, b in basis.items()):
                break
        v = dict(col)
        while v:
            r = min(v)
            b = basis.get(r)
            if b is None:
                if kind == "Z" and v[r] < 0:
                    v = {i: -x for i, x in v.items()}
                basis[r] = v
                break
            a, c = b[r], v[r]
            if kind == "F":
                v = _combine(v, 1, b, -c * pow(a, -1, modulus) % modulus, modulus)
            elif kind == "Q":
                if all(type(x) is int for x in v.values()) and all(type(x) is int for x in b.values()):
                    g = gcd(a, c)
                    v = _primitive(_combine(v, a // g, b, -(c // g)))
                else:
                    v = _combine(v, 1, b, -Fraction(c) / a)
            elif c % a == 0:
                v = _combine(v, 1, b, -(c // a))
            else:
                g, x, y = _egcd(a, c)
                basis[r] = _combine(b, x, v, y)
                v = _combine(v, a // g, b, -(c // g))
    return basis


def _residual_invariants(r: Reducer, n: int, bound: int | None = None) -> tuple[int, list[int]]:
    """Rank and torsion divisors of the residual boundary in degree n.

    ``bound`` caps the rank, typically by the dimension of the cycles below.
    """
    cols = (r.bd[n][tau] for tau in r.alive[n]) if n in r.bd else ()
    cap = len(r.alive[n - 1]) if bound is None else min(bound, len(r.alive[n - 1]))
    basis = lattice_basis(cols, r.coeff, cap)
    if r.coeff.kind != "Z" or all(b[p] == 1 for p, b in basis.items()):
        return len(basis), []
    rows = sorted({i for b in basis.values() for i in b})
    pos = {i: k for k, i in enumerate(rows)}
    vecs = list(basis.values())
    dense = [[0] * len(vecs) for _ in rows]
    for j, b in enumerate(vecs):
        for i, x in b.items():
            dense[pos[i]][j] = x
    diag = snf_full(dense, ZZ, len(rows), len(vecs)).diagonal()
    return len(diag), [d for d in diag if d > 1]


def complex_homology(
    coeff: Coefficients,
    lo: int,
    hi: int,
    dims: Mapping[int, int],
    boundaries: Mapping[int, Matrix],
) -> dict[int, AbGroupClass]:
    """Homology in every degree of [lo, hi] of the complex, zero outside."""
    r = Reducer(coeff, lo, hi, dims, boundaries)
    _reduce_fully(r)
    ranks: dict[int, int] = {}
    torsion: dict[int, list[int]] = {}
    for n in range(lo, hi + 2):
        if n <= lo or n > hi:
            ranks[n], torsion[n] = 0, []
        else:
            ranks[n], torsion[n] = _residual_invariants(r, n, len(r.alive[n - 1]) - ranks[n - 1])
    out = {}
    for n in range(lo, hi + 1):
        c = len(r.alive[n])
        out[n] = AbGroupClass(c - ranks[n] - ranks[n + 1], tuple(sorted(torsion[n + 1])))
    return out


def _single(m: Matrix, coeff: Coefficients) -> Reducer:
    return Reducer(coeff, 0, 1, {0: m.nrows, 1: m.ncols}, {1: m})


def matrix_rank(m: Matrix, coeff: Coefficients) -> int:
    """Rank over a field (``QQ`` for integer matrices viewed rationally)."""
    if coeff.kind == "Z":
        coeff = QQ
    r = _single(m, coeff)
    _reduce_fully(r)
    return r.cancelled + _residual_invariants(r, 1)[0]


def matrix_invariant_factors(m: Matrix) -> list[int]:
    """Nonzero invariant factors of an integer matrix, including 1s, sorted."""
    r = _single(m, ZZ)
    _reduce_fully(r)
    rank, torsion = _residual_invariants(r, 1)
    return [1] * (r.cancelled + rank - len(torsion)) + sorted(torsion)


def filtered_pages(
    coeff: Coefficients,
    lo: int,
    hi: int,
    dims: Mapping[int, int],
    boundaries: Mapping[int, Matrix],
    levels: Mapping[int, Sequence[int]],
    labels: Mapping[int, Sequence],
    max_gap: int,
):
    """Spectral sequence pages of a filtered complex over a field.

    ``levels[n][cell]`` is the filtration degree of a cell and ``labels[n][cell]``
    the bidegree label it is grouped under.  Returns a list of
    ``(r, cells_by_degree, gap_r_entries)`` for r = 1 .. max_gap + 1, where the
    last entry describes E^infinity.
    """
    if not coeff.is_field:
        raise ValueError("spectral sequence pages need field coefficients")
    red = Reducer(coeff, lo, hi, dims, boundaries, levels)
    red.sweep(units_only=False, gap=0)
    pages = []
    for r in range(1, max_gap + 2):
        cells = {n: list(red.alive[n]) for n in range(lo, hi + 1)}
        entries = []
        for n in range(lo + 1, hi + 1):
            for tau, s, v in red.entries(n):
                g = red.gap(n, tau, s)
                if g < r:
                    raise AssertionError("filtration gap below the current page")
                if g == r:
                    entries.append((n, tau, s, v))
        pages.append((r, cells, entries))
        red.sweep(units_only=False, gap=r)
    return pages
