"""Exact linear algebra over the integers, the rationals and prime fields.

Matrices are stored sparsely, column by column, with exact entries
(Python ``int`` or ``fractions.Fraction``).  Dense work (Smith normal form
with transforms, explicit homology bases) goes through plain lists of lists.

>>> from etalehom.linalg import Matrix, smith_normal_form, ZZ, QQ, homology_at
>>> u, d, v = smith_normal_form(Matrix.from_rows([[2, 4], [6, 8]]))
>>> d.to_rows()
[[2, 0], [0, 4]]
>>> (u @ Matrix.from_rows([[2, 4], [6, 8]]) @ v) == d
True
>>> str(homology_at(Matrix.from_rows([[2]]), Matrix.zero(0, 1), ZZ))
'Z/2'
>>> str(homology_at(Matrix.from_rows([[2]]), Matrix.zero(0, 1), QQ))
'0'
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence


class LinalgError(ValueError):
    pass


class CompositionNotZero(LinalgError):
    pass


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    i = 2
    while i * i <= p:
        if p % i == 0:
            return False
        i += 1
    return True


@dataclass(frozen=True)
class Coefficients:
    """One of the integers ("Z"), the rationals ("Q") or a prime field ("F", p)."""

    kind: str
    p: int = 0

    def __post_init__(self):
        if self.kind not in ("Z", "Q", "F"):
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "F" and not _is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.kind != "F" and self.p != 0:
            raise ValueError("only prime fields carry p")

    @property
    def is_field(self) -> bool:
        return self.kind != "Z"

    @property
    def characteristic(self) -> int:
        return self.p

    def __str__(self) -> str:
        return f"F{self.p}" if self.kind == "F" else self.kind

    @classmethod
    def parse(cls, text: str) -> "Coefficients":
        """Parse ``Z``, ``Q`` or ``F<p>`` (also ``Fp=<p>`` and ``GF<p>``)."""
        t = text.strip()
        if t in ("Z", "ZZ"):
            return ZZ
        if t in ("Q", "QQ"):
            return QQ
        for prefix in ("Fp=", "GF", "F"):
            if t.startswith(prefix) and t[len(prefix):].isdigit():
                return GF(int(t[len(prefix):]))
        raise ValueError(f"cannot parse coefficients {text!r}")

    def normalize(self, x):
        if self.kind == "F":
            if isinstance(x, Fraction):
                return x.numerator * pow(x.denominator, -1, self.p) % self.p
            return x % self.p
        if self.kind == "Z":
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise LinalgError(f"non-integral entry {x} over Z")
                return x.numerator
            return int(x)
        if isinstance(x, Fraction) and x.denominator == 1:
            return x.numerator
        return x

    def is_unit(self, x) -> bool:
        if self.kind == "Z":
            return x == 1 or x == -1
        return x != 0

    def inverse(self, x):
        if self.kind == "F":
            return pow(x, -1, self.p)
        if self.kind == "Z":
            if x not in (1, -1):
                raise LinalgError(f"{x} is not a unit over Z")
            return x
        return self.normalize(Fraction(1) / x)

    def mul(self, a, b):
        r = a * b
        if self.kind == "F":
            return r % self.p
        if self.kind == "Q" and isinstance(r, Fraction) and r.denominator == 1:
            return r.numerator
        return r

    def add(self, a, b):
        r = a + b
        if self.kind == "F":
            return r % self.p
        if self.kind == "Q" and isinstance(r, Fraction) and r.denominator == 1:
            return r.numerator
        return r


ZZ = Coefficients("Z")
QQ = Coefficients("Q")


def GF(p: int) -> Coefficients:
    return Coefficients("F", p)


# ---------------------------------------------------------------------------
# sparse matrices


class Matrix:
    """Sparse exact matrix; ``cols[j]`` maps row index to a nonzero entry."""

    __slots__ = ("nrows", "ncols", "cols")

    def __init__(self, nrows: int, ncols: int, cols: Sequence[dict] | None = None):
        self.nrows = nrows
        self.ncols = ncols
        if cols is None:
            self.cols = tuple({} for _ in range(ncols))
        else:
            if len(cols) != ncols:
                raise ValueError("column count mismatch")
            self.cols = tuple({i: v for i, v in c.items() if v != 0} for c in cols)
            for c in self.cols:
                for i in c:
                    if not 0 <= i < nrows:
                        raise ValueError(f"row index {i} out of range")

    @classmethod
    def _trusted(cls, nrows: int, ncols: int, cols: Sequence[dict]) -> "Matrix":
        m = cls.__new__(cls)
        m.nrows, m.ncols, m.cols = nrows, ncols, tuple(cols)
        return m

    @classmethod
    def zero(cls, nrows: int, ncols: int) -> "Matrix":
        return cls._trusted(nrows, ncols, [{} for _ in range(ncols)])

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls._trusted(n, n, [{j: 1} for j in range(n)])

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], ncols: int | None = None) -> "Matrix":
        nrows = len(rows)
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        cols: list[dict] = [{} for _ in range(ncols)]
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise ValueError("ragged rows")
            for j, v in enumerate(row):
                if v != 0:
                    cols[j][i] = v
        return cls._trusted(nrows, ncols, cols)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], nrows: int | None = None) -> "Matrix":
        if nrows is None:
            nrows = len(columns[0]) if columns else 0
        return cls._trusted(
            nrows, len(columns), [{i: v for i, v in enumerate(c) if v != 0} for c in columns]
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def to_rows(self) -> list[list]:
        rows = [[0] * self.ncols for _ in range(self.nrows)]
        for j, c in enumerate(self.cols):
            for i, v in c.items():
                rows[i][j] = v
        return rows

    def entry(self, i: int, j: int):
        return self.cols[j].get(i, 0)

    def column(self, j: int) -> list:
        out = [0] * self.nrows
        for i, v in self.cols[j].items():
            out[i] = v
        return out

    def nnz(self) -> int:
        return sum(len(c) for c in self.cols)

    def is_zero(self) -> bool:
        return all(not c for c in self.cols)

    def transpose(self) -> "Matrix":
        cols: list[dict] = [{} for _ in range(self.nrows)]
        for j, c in enumerate(self.cols):
            for i, v in c.items():
                cols[i][j] = v
        return Matrix._trusted(self.ncols, self.nrows, cols)

    def apply(self, vec: Sequence) -> list:
        out = [0] * self.nrows
        for j, x in enumerate(vec):
            if x:
                for i, v in self.cols[j].items():
                    out[i] += v * x
        return out

    def apply_sparse(self, vec: dict) -> dict:
        out: dict = {}
        for j, x in vec.items():
            for i, v in self.cols[j].items():
                out[i] = out.get(i, 0) + v * x
        return {i: v for i, v in out.items() if v != 0}

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        return Matrix._trusted(
            self.nrows, other.ncols, [self.apply_sparse(c) for c in other.cols]
        )

    def _combine(self, other: "Matrix", sign: int) -> "Matrix":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        cols = []
        for a, b in zip(self.cols, other.cols):
            c = dict(a)
            for i, v in b.items():
                w = c.get(i, 0) + sign * v
                if w:
                    c[i] = w
                else:
                    c.pop(i, None)
            cols.append(c)
        return Matrix._trusted(self.nrows, self.ncols, cols)

    def __add__(self, other: "Matrix") -> "Matrix":
        return self._combine(other, 1)

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self._combine(other, -1)

    def __neg__(self) -> "Matrix":
        return self.scale(-1)

    def scale(self, s) -> "Matrix":
        if s == 0:
            return Matrix.zero(self.nrows, self.ncols)
        return Matrix._trusted(
            self.nrows, self.ncols, [{i: v * s for i, v in c.items()} for c in self.cols]
        )

    def over(self, coeff: Coefficients) -> "Matrix":
        """Entries normalized for ``coeff`` (reduced mod p over a prime field)."""
        cols = []
        for c in self.cols:
            d = {}
            for i, v in c.items():
                w = coeff.normalize(v)
                if w != 0:
                    d[i] = w
            cols.append(d)
        return Matrix._trusted(self.nrows, self.ncols, cols)

    def is_zero_over(self, coeff: Coefficients) -> bool:
        return self.over(coeff).is_zero()

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "Matrix":
        pos = {r: k for k, r in enumerate(rows)}
        out = []
        for j in cols:
            out.append({pos[i]: v for i, v in self.cols[j].items() if i in pos})
        return Matrix._trusted(len(rows), len(cols), out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and all(
            a == b for a, b in zip(self.cols, other.cols)
        )

    def __hash__(self):
        return hash((self.nrows, self.ncols, tuple(tuple(sorted(c.items())) for c in self.cols)))

    def __repr__(self) -> str:
        if self.nrows * self.ncols <= 64:
            return f"Matrix({self.to_rows()!r})"
        return f"Matrix<{self.nrows}x{self.ncols}, nnz={self.nnz()}>"


IntMatrix = Matrix


def hstack(blocks: Sequence[Matrix], nrows: int | None = None) -> Matrix:
    if nrows is None:
        nrows = blocks[0].nrows if blocks else 0
    cols: list[dict] = []
    for b in blocks:
        if b.nrows != nrows:
            raise ValueError("row count mismatch in hstack")
        cols.extend(dict(c) for c in b.cols)
    return Matrix._trusted(nrows, len(cols), cols)


def vstack(blocks: Sequence[Matrix], ncols: int | None = None) -> Matrix:
    if ncols is None:
        ncols = blocks[0].ncols if blocks else 0
    cols: list[dict] = [{} for _ in range(ncols)]
    off = 0
    for b in blocks:
        if b.ncols != ncols:
            raise ValueError("column count mismatch in vstack")
        for j, c in enumerate(b.cols):
            for i, v in c.items():
                cols[j][i + off] = v
        off += b.nrows
    return Matrix._trusted(off, ncols, cols)


def block_matrix(grid: Sequence[Sequence[Matrix | None]], row_sizes, col_sizes) -> Matrix:
    """Assemble a block matrix; ``None`` blocks are zero."""
    roff = [0]
    for r in row_sizes:
        roff.append(roff[-1] + r)
    cols: list[dict] = []
    for bj, csize in enumerate(col_sizes):
        block_cols: list[dict] = [{} for _ in range(csize)]
        for bi in range(len(row_sizes)):
            blk = grid[bi][bj]
            if blk is None:
                continue
            if blk.shape != (row_sizes[bi], csize):
                raise ValueError(f"block ({bi},{bj}) has shape {blk.shape}")
            for j, c in enumerate(blk.cols):
                for i, v in c.items():
                    block_cols[j][i + roff[bi]] = v
        cols.extend(block_cols)
    return Matrix._trusted(roff[-1], sum(col_sizes), cols)


def block_diagonal(blocks: Sequence[Matrix]) -> Matrix:
    n = len(blocks)
    grid = [[blocks[i] if i == j else None for j in range(n)] for i in range(n)]
    return block_matrix(grid, [b.nrows for b in blocks], [b.ncols for b in blocks])


# ---------------------------------------------------------------------------
# abelian group classes


@dataclass(frozen=True)
class AbGroupClass:
    """Z^betti + Z/d_1 + ... with d_1 | d_2 | ... and every d_i >= 2."""

    betti: int = 0
    torsion: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        t = tuple(int(d) for d in self.torsion)
        object.__setattr__(self, "torsion", t)
        if self.betti < 0:
            raise ValueError("negative betti number")
        for d in t:
            if d < 2:
                raise ValueError("torsion coefficients must be >= 2")
        for a, b in zip(t, t[1:]):
            if b % a:
                raise ValueError("torsion coefficients must form a divisibility chain")

    @classmethod
    def from_divisors(cls, betti: int, divisors: Iterable[int]) -> "AbGroupClass":
        """Normalize an arbitrary list of cyclic orders into invariant-factor form."""
        return cls(betti, invariant_factor_form([abs(d) for d in divisors]))

    def is_zero(self) -> bool:
        return self.betti == 0 and not self.torsion

    @property
    def rank(self) -> int:
        return self.betti

    def __str__(self) -> str:
        parts = []
        if self.betti == 1:
            parts.append("Z")
        elif self.betti > 1:
            parts.append(f"Z^{self.betti}")
        parts.extend(f"Z/{d}" for d in self.torsion)
        return " + ".join(parts) if parts else "0"

    def as_dict(self) -> dict:
        return {"betti": self.betti, "torsion": list(self.torsion)}


def _factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def invariant_factor_form(orders: Iterable[int]) -> tuple[int, ...]:
    """Rewrite a direct sum of cyclic groups Z/n_i in invariant-factor form.

    >>> invariant_factor_form([2, 3])
    (6,)
    >>> invariant_factor_form([4, 2, 1])
    (2, 4)
    """
    powers: dict[int, list[int]] = {}
    for n in orders:
        if n == 0:
            raise ValueError("use betti for free summands")
        for p, e in _factorize(n).items():
            powers.setdefault(p, []).append(p**e)
    if not powers:
        return ()
    length = max(len(v) for v in powers.values())
    factors = [1] * length
    for p, v in powers.items():
        v.sort(reverse=True)
        for k, q in enumerate(v):
            factors[length - 1 - k] *= q
    return tuple(f for f in factors if f > 1)


# ---------------------------------------------------------------------------
# dense Smith normal form with transforms


def _dense(m: Matrix | Sequence[Sequence]) -> list[list]:
    if isinstance(m, Matrix):
        return m.to_rows()
    return [list(r) for r in m]


class _Snf:
    """Smith form of a dense matrix over a PID (Z) or a field, with transforms.

    Maintains ``u @ a @ v == d`` together with ``uinv`` and ``vinv``.
    """

    def __init__(self, a: Sequence[Sequence], coeff: Coefficients, nrows: int, ncols: int):
        self.coeff = coeff
        self.r, self.c = nrows, ncols
        self.d = [[coeff.normalize(x) for x in row] for row in a]
        ident = lambda n: [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        self.u, self.uinv = ident(nrows), ident(nrows)
        self.v, self.vinv = ident(ncols), ident(ncols)
        self.rank = 0
        self._run()

    # elementary operations; each updates the transforms consistently
    def _swap_rows(self, i, j):
        if i == j:
            return
        d, u, ui = self.d, self.u, self.uinv
        d[i], d[j] = d[j], d[i]
        u[i], u[j] = u[j], u[i]
        for row in ui:
            row[i], row[j] = row[j], row[i]

    def _swap_cols(self, i, j):
        if i == j:
            return
        for row in self.d:
            row[i], row[j] = row[j], row[i]
        for row in self.v:
            row[i], row[j] = row[j], row[i]
        vi = self.vinv
        vi[i], vi[j] = vi[j], vi[i]

    def _add_row(self, src, dst, q):
        """row_dst += q * row_src."""
        if q == 0:
            return
        k = self.coeff
        for mat in (self.d, self.u):
            rs, rd = mat[src], mat[dst]
            for j, x in enumerate(rs):
                if x:
                    rd[j] = k.add(rd[j], k.mul(q, x))
        # inverse: col_src -= q * col_dst
        for row in self.uinv:
            if row[dst]:
                row[src] = k.add(row[src], k.mul(-q, row[dst]))

    def _add_col(self, src, dst, q):
        """col_dst += q * col_src."""
        if q == 0:
            return
        k = self.coeff
        for mat in (self.d, self.v):
            for row in mat:
                if row[src]:
                    row[dst] = k.add(row[dst], k.mul(q, row[src]))
        # inverse: row_src -= q * row_dst
        vi = self.vinv
        rs, rd = vi[src], vi[dst]
        for j, x in enumerate(rd):
            if x:
                rs[j] = k.add(rs[j], k.mul(-q, x))

    def _scale_row(self, i, s):
        """row_i *= s for a unit s."""
        k = self.coeff
        sinv = k.inverse(s)
        for mat in (self.d, self.u):
            mat[i] = [k.mul(s, x) for x in mat[i]]
        for row in self.uinv:
            row[i] = k.mul(row[i], sinv)

    def _quot(self, a, b):
        k = self.coeff
        if k.is_field:
            return k.mul(a, k.inverse(b))
        return a // b

    def _run(self):
        d, k = self.d, self.coeff
        t = 0
        while t < min(self.r, self.c):
            # first nonzero over a field, minimal absolute value over Z
            best = None
            for i in range(t, self.r):
                row = d[i]
                for j in range(t, self.c):
                    x = row[j]
                    if x and (best is None or abs(x) < best[0]):
                        best = (abs(x), i, j)
                        if k.is_field or best[0] == 1:
                            break
                if best is not None and (k.is_field or best[0] == 1):
                    break
            if best is None:
                break
            self._swap_rows(t, best[1])
            self._swap_cols(t, best[2])
            while True:
                p = d[t][t]
                dirty = False
                for i in range(t + 1, self.r):
                    if d[i][t]:
                        self._add_row(t, i, -self._quot(d[i][t], p))
                        if d[i][t]:
                            dirty = True
                for j in range(t + 1, self.c):
                    if d[t][j]:
                        self._add_col(t, j, -self._quot(d[t][j], p))
                        if d[t][j]:
                            dirty = True
                if dirty:
                    # move the smallest remainder into the pivot position
                    cand = [(abs(d[i][t]), i, t) for i in range(t, self.r) if d[i][t]]
                    cand += [(abs(d[t][j]), t, j) for j in range(t, self.c) if d[t][j]]
                    _, i, j = min(cand)
                    self._swap_rows(t, i)
                    self._swap_cols(t, j)
                    continue
                if not k.is_field:
                    bad = None
                    for i in range(t + 1, self.r):
                        for j in range(t + 1, self.c):
                            if d[i][j] % p:
                                bad = i
                                break
                        if bad is not None:
                            break
                    if bad is not None:
                        self._add_row(bad, t, 1)
                        continue
                break
            p = d[t][t]
            if k.is_field:
                if p != 1:
                    self._scale_row(t, k.inverse(p))
            elif p < 0:
                self._scale_row(t, -1)
            t += 1
        self.rank = t

    def diagonal(self) -> list:
        return [self.d[i][i] for i in range(self.rank)]


def smith_normal_form(m: Matrix, coeff: Coefficients = ZZ) -> tuple[Matrix, Matrix, Matrix]:
    """Return ``(u, d, v)`` with ``u @ m @ v == d``, u and v unimodular.

    The diagonal of ``d`` is nonnegative and forms a divisibility chain.
    Pivots are chosen with minimal absolute value.
    """
    s = _Snf(m.to_rows(), coeff, m.nrows, m.ncols)
    return Matrix.from_rows(s.u, m.nrows), Matrix.from_rows(s.d, m.ncols), Matrix.from_rows(s.v, m.ncols)


def snf_full(rows: Sequence[Sequence], coeff: Coefficients, nrows: int, ncols: int) -> _Snf:
    return _Snf(rows, coeff, nrows, ncols)


def determinant(rows: Sequence[Sequence]) -> int | Fraction:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    n = len(rows)
    if n == 0:
        return 1
    a = [list(r) for r in rows]
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k]:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = _exact_div(a[i][j] * a[k][k] - a[i][k] * a[k][j], prev)
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _exact_div(a, b):
    if isinstance(a, int) and isinstance(b, int):
        q, r = divmod(a, b)
        if r:
            raise ArithmeticError("inexact division in Bareiss step")
        return q
    return Fraction(a) / b


def fraction_free_rank(m: Matrix | Sequence[Sequence]) -> int:
    """Rank over Q by Bareiss elimination; independent of the Smith form code."""
    a = [[Fraction(x) if isinstance(x, Fraction) else x for x in row] for row in _dense(m)]
    if any(isinstance(x, Fraction) for row in a for x in row):
        # clear denominators row by row
        cleared = []
        for row in a:
            den = 1
            for x in row:
                if isinstance(x, Fraction):
                    den = den * x.denominator // gcd(den, x.denominator)
            cleared.append([int(x * den) for x in row])
        a = cleared
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    rank, prev = 0, 1
    for col in range(ncols):
        piv = next((i for i in range(rank, nrows) if a[i][col]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        for i in range(rank + 1, nrows):
            for j in range(col + 1, ncols):
                a[i][j] = _exact_div(a[i][j] * a[rank][col] - a[i][col] * a[rank][j], prev)
            a[i][col] = 0
        prev = a[rank][col]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# ranks and homology of a composable pair


def rank(m: Matrix, coeff: Coefficients) -> int:
    """Rank over the fraction field of ``coeff`` (Q for Z)."""
    from .reduction import matrix_rank

    return matrix_rank(m, QQ if coeff.kind == "Z" else coeff)


def elementary_divisors(m: Matrix) -> list[int]:
    """Nonzero invariant factors of an integer matrix (1s included)."""
    from .reduction import matrix_invariant_factors

    return matrix_invariant_factors(m)


def homology_at(boundary_in: Matrix, boundary_out: Matrix, coeff: Coefficients) -> AbGroupClass:
    """ker(boundary_out) / im(boundary_in) as an abelian group class.

    ``boundary_in`` maps into the middle module and ``boundary_out`` maps out
    of it, so their shapes are ``(n, a)`` and ``(b, n)``.
    """
    n = boundary_in.nrows
    if boundary_out.ncols != n:
        raise ValueError(f"shapes {boundary_in.shape} and {boundary_out.shape} are not composable")
    if not (boundary_out @ boundary_in).is_zero_over(coeff):
        raise CompositionNotZero("boundary_out @ boundary_in is not zero")
    if coeff.kind == "Z":
        divisors = elementary_divisors(boundary_in)
        r_in = len(divisors)
        r_out = rank(boundary_out, ZZ)
        return AbGroupClass(n - r_out - r_in, tuple(d for d in sorted(divisors) if d > 1))
    r_in = rank(boundary_in, coeff)
    r_out = rank(boundary_out, coeff)
    return AbGroupClass(n - r_out - r_in)


# ---------------------------------------------------------------------------
# dense helpers over a field or Z


def dense_kernel(rows: Sequence[Sequence], ncols: int, coeff: Coefficients) -> list[list]:
    """Basis (as column vectors) of the kernel of a dense matrix.

    Over Z the basis spans the saturated kernel lattice.
    """
    s = _Snf(rows, coeff, len(rows), ncols)
    return [[s.v[i][j] for i in range(ncols)] for j in range(s.rank, ncols)]


def dense_solve(rows: Sequence[Sequence], ncols: int, rhs: Sequence, coeff: Coefficients) -> list | None:
    """One solution x of A x = rhs, or None; over Z an integral solution."""
    nrows = len(rows)
    s = _Snf(rows, coeff, nrows, ncols)
    k = coeff
    b = [0] * nrows
    for i in range(nrows):
        acc = 0
        for j, x in enumerate(s.u[i]):
            if x and rhs[j]:
                acc = k.add(acc, k.mul(x, k.normalize(rhs[j])))
        b[i] = acc
    y = [0] * ncols
    diag = s.diagonal()
    for i in range(nrows):
        if i < s.rank:
            di = diag[i]
            if k.is_field:
                y[i] = k.mul(b[i], k.inverse(di))
            else:
                if b[i] % di:
                    return None
                y[i] = b[i] // di
        elif b[i] != 0:
            return None
    x = [0] * ncols
    for i in range(ncols):
        acc = 0
        for j in range(s.rank):
            if s.v[i][j] and y[j]:
                acc = k.add(acc, k.mul(s.v[i][j], y[j]))
        x[i] = acc
    return x


def dense_matmul(a: Sequence[Sequence], b: Sequence[Sequence], coeff: Coefficients | None = None) -> list[list]:
    n = len(b[0]) if b else 0
    out = []
    for row in a:
        acc = [0] * n
        for j, x in enumerate(row):
            if x:
                for l, y in enumerate(b[j]):
                    if y:
                        acc[l] += x * y
        out.append([coeff.normalize(v) for v in acc] if coeff else acc)
    return out


def dense_identity(n: int) -> list[list]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def dense_inverse(rows: Sequence[Sequence], coeff: Coefficients) -> list[list]:
    """Inverse of a square matrix invertible over ``coeff``."""
    n = len(rows)
    s = _Snf(rows, coeff, n, n)
    diag = s.diagonal()
    if s.rank != n or any(not coeff.is_unit(d) for d in diag):
        raise LinalgError("matrix is not invertible over " + str(coeff))
    # a = uinv d vinv, so a^-1 = v d^-1 u
    dinv = [coeff.inverse(d) for d in diag]
    scaled = [[coeff.mul(dinv[i], x) for x in s.u[i]] for i in range(n)]
    return dense_matmul(s.v, scaled, coeff)
