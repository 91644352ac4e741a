"""Brute-force reference computations used to check the package.

Everything here is deliberately naive: nerves come from filtering all arrow
tuples, chain complexes are dense, and integer homology uses sympy's Smith
normal form.  Nothing is shared with the package beyond the groupoid and
sheaf data classes.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

import sympy
from sympy.matrices.normalforms import smith_normal_form


def strings(g, n):
    """Composable strings (g1, ..., gn) with src g_i = tgt g_{i+1}; objects when n = 0."""
    if n == 0:
        return [(x,) for x in range(g.n_objects)]
    out = []
    for s in product(range(g.n_arrows), repeat=n):
        if all(g.src[s[i]] == g.tgt[s[i + 1]] for i in range(n - 1)):
            out.append(s)
    return out


def _first_object(g, s, n):
    return s[0] if n == 0 else g.tgt[s[0]]


def _compose(g, a, b):
    return g.table[(a, b)]


def bar_boundary(g, ranks, act, n):
    """Dense matrix of the unnormalized bar differential B_n -> B_{n-1}."""
    src_cells = [(s, j) for s in strings(g, n) for j in range(ranks[_first_object(g, s, n)])]
    tgt_cells = [(s, j) for s in strings(g, n - 1) for j in range(ranks[_first_object(g, s, n - 1)])]
    index = {c: i for i, c in enumerate(tgt_cells)}
    m = [[0] * len(src_cells) for _ in tgt_cells]
    for col, (s, j) in enumerate(src_cells):
        for i in range(n + 1):
            sign = (-1) ** i
            if i == 0:
                rest = s[1:] if n > 1 else (g.src[s[0]],)
                # vector e_j at tgt g1 goes to act(g1) e_j at src g1
                a = act[s[0]]
                for r in range(len(a)):
                    if a[r][j]:
                        m[index[(rest, r)]][col] += a[r][j]
                continue
            if i == n:
                rest = s[:-1] if n > 1 else (g.tgt[s[0]],)
            else:
                rest = s[:i - 1] + (_compose(g, s[i - 1], s[i]),) + s[i + 1:]
            m[index[(rest, j)]][col] += sign
    return m, len(tgt_cells), len(src_cells)


def _rank(rows, nrows, ncols, p=0):
    if nrows == 0 or ncols == 0:
        return 0
    if p:
        return _rank_mod_p(rows, p)
    return _rank_rational(rows)


def _rank_rational(rows):
    rows = [[Fraction(v) for v in r] for r in rows if any(r)]
    rank, ncols = 0, len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        top = rows[rank]
        for r in range(rank + 1, len(rows)):
            if rows[r][c]:
                f = rows[r][c] / top[c]
                rows[r] = [a - f * b for a, b in zip(rows[r], top)]
        rank += 1
    return rank


def _rank_mod_p(rows, p):
    rows = [[int(v) % p for v in r] for r in rows]
    rank, ncols = 0, len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][c], -1, p)
        rows[rank] = [v * inv % p for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][c]:
                f = rows[r][c]
                rows[r] = [(a - f * b) % p for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def _divisors(rows, nrows, ncols):
    if nrows == 0 or ncols == 0:
        return []
    d = smith_normal_form(sympy.Matrix(rows), domain=sympy.ZZ)
    return [abs(int(d[i, i])) for i in range(min(nrows, ncols)) if d[i, i] != 0]


def homology_from_dense(d_in, d_out, dim, kind="Z", p=0):
    """(betti, torsion) of ker d_out / im d_in with d_in = (rows, nrows, ncols)."""
    rin = d_in if d_in[1] and d_in[2] else ([], dim, 0)
    if kind == "Z":
        divs = _divisors(*rin)
        r_in = len(divs)
        r_out = _rank(*d_out)
        return dim - r_in - r_out, tuple(sorted(x for x in divs if x > 1))
    return dim - _rank(*rin, p=p) - _rank(*d_out, p=p), ()


def bar_homology(g, ranks, act, n, kind="Z", p=0):
    """H_n from the dense bar complex, as (betti, torsion)."""
    d_out = bar_boundary(g, ranks, act, n) if n > 0 else ([], 0, sum(ranks))
    d_in = bar_boundary(g, ranks, act, n + 1)
    dim = d_in[1]
    return homology_from_dense(d_in, d_out, dim, kind, p)


def constant_data(g):
    return [1] * g.n_objects, [[[1]] for _ in range(g.n_arrows)]


def cyclic_group_homology(m, n):
    """Periodic resolution answer for H_n(Z/m; Z)."""
    if n == 0:
        return (1, ())
    if n % 2 == 1:
        return (0, (m,)) if m > 1 else (0, ())
    return (0, ())


def orbit_count(g):
    parent = list(range(g.n_objects))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for a in range(g.n_arrows):
        parent[find(g.src[a])] = find(g.tgt[a])
    return len({find(x) for x in range(g.n_objects)})


def conjugacy_classes(g):
    """Loop orbits: loops a at x up to conjugation c a c^-1 over all arrows c out of x."""
    loops = [a for a in range(g.n_arrows) if g.src[a] == g.tgt[a]]
    inv = {}
    for a in range(g.n_arrows):
        for b in range(g.n_arrows):
            if g.src[a] == g.tgt[b] and g.src[b] == g.tgt[a] and g.table[(a, b)] == g.unit[g.tgt[a]]:
                inv[a] = b
    seen, count = set(), 0
    for a in loops:
        if a in seen:
            continue
        count += 1
        stack = [a]
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            for c in range(g.n_arrows):
                if g.src[c] == g.tgt[x]:
                    stack.append(g.table[(g.table[(c, x)], inv[c])])
    return count


def convolution_structure(g):
    """Products e_a e_b = e_{a o b} of the convolution algebra, as a dict."""
    return {(a, b): c for (a, b), c in g.table.items()}


def hochschild_dims_dense(dim, mult, unit, top):
    """Unnormalized Hochschild homology over Q of an algebra with structure
    constants ``mult[(i, j)] = {k: c}`` via dense matrices (tiny algebras only)."""
    def bd(n):
        cells = list(product(range(dim), repeat=n + 1))
        prev = {c: i for i, c in enumerate(product(range(dim), repeat=n))}
        m = [[Fraction(0)] * len(cells) for _ in prev]
        for col, t in enumerate(cells):
            for i in range(n + 1):
                sign = (-1) ** i
                if i < n:
                    a, b = t[i], t[i + 1]
                    for k, c in mult.get((a, b), {}).items():
                        m[prev[t[:i] + (k,) + t[i + 2:]]][col] += sign * c
                else:
                    for k, c in mult.get((t[n], t[0]), {}).items():
                        m[prev[(k,) + t[1:n]]][col] += sign * c
        return m, len(prev), len(cells)

    out = []
    for n in range(top + 1):
        d_out = bd(n) if n else ([], 0, dim)
        d_in = bd(n + 1)
        dim_n = dim ** (n + 1)
        out.append(dim_n - _rank(*d_in) - _rank(*d_out))
    return out
