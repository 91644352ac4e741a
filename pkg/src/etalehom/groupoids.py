"""Finite groupoids, homomorphisms and nerves.

Objects and arrows are dense integer ids.  An arrow ``g`` goes from
``src[g]`` to ``tgt[g]`` and ``compose(g, h)`` is ``g o h``, defined when
``src[g] == tgt[h]`` (first ``h``, then ``g``).  A group is a groupoid with
one object whose arrows are the group elements.

Nerve strings are written x0 <-g1- x1 <-g2- ... <-gn- xn and stored as
tuples ``(g1, ..., gn)``; only the level-0 strings are stored as 1-tuples
``(x,)`` of an object id.

Every homomorphism of finite discrete groupoids is both etale and proper,
so the homology module exposes both functorialities without side
conditions.

>>> z2 = cyclic_group(2)
>>> len(nerve(z2, 3).strings)
8
>>> len(nerve(pair_groupoid(3), 2).strings)
27
>>> len(orbits(loop_groupoid(symmetric_group(3))))
3
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Sequence


class GroupoidError(ValueError):
    pass


class NotAnAction(GroupoidError):
    pass


class NotAHomomorphism(GroupoidError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteGroupoid:
    """A validated finite groupoid with a full composition table."""

    n_objects: int
    src: tuple[int, ...]
    tgt: tuple[int, ...]
    table: dict = field(repr=False)
    unit: tuple[int, ...] = field(default=(), repr=False)
    inverse: tuple[int, ...] = field(default=(), repr=False)
    object_labels: tuple = field(default=(), repr=False)
    arrow_labels: tuple = field(default=(), repr=False)
    name: str = ""

    def __post_init__(self):
        n_arr = len(self.src)
        if len(self.tgt) != n_arr:
            raise GroupoidError("src and tgt lengths differ")
        for g in range(n_arr):
            if not (0 <= self.src[g] < self.n_objects and 0 <= self.tgt[g] < self.n_objects):
                raise GroupoidError(f"arrow {g} has an endpoint outside the object set")
        table = self.table
        for g in range(n_arr):
            for h in self.arrows_into(self.src[g]):
                gh = table.get((g, h))
                if gh is None:
                    raise GroupoidError(f"composite {g} o {h} missing")
                if self.src[gh] != self.src[h] or self.tgt[gh] != self.tgt[g]:
                    raise GroupoidError(f"composite {g} o {h} has wrong endpoints")
        for (g, h) in table:
            if self.src[g] != self.tgt[h]:
                raise GroupoidError(f"table defines non-composable pair ({g}, {h})")
        unit = self.unit or self._find_units()
        object.__setattr__(self, "unit", tuple(unit))
        for x in range(self.n_objects):
            e = unit[x]
            if self.src[e] != x or self.tgt[e] != x:
                raise GroupoidError(f"unit of {x} is not a loop at {x}")
        for g in range(n_arr):
            if table[(g, unit[self.src[g]])] != g or table[(unit[self.tgt[g]], g)] != g:
                raise GroupoidError(f"unit law fails for arrow {g}")
        inv = self.inverse or self._find_inverses()
        object.__setattr__(self, "inverse", tuple(inv))
        for g in range(n_arr):
            gi = inv[g]
            if table.get((g, gi)) != unit[self.tgt[g]] or table.get((gi, g)) != unit[self.src[g]]:
                raise GroupoidError(f"arrow {g} has no two-sided inverse")
        for h, g in table:
            gh = table[(h, g)]
            for f in self.arrows_into(self.src[g]):
                if table[(gh, f)] != table[(h, table[(g, f)])]:
                    raise GroupoidError(f"associativity fails on ({h}, {g}, {f})")

    # -- basic structure ---------------------------------------------------

    @property
    def objects(self) -> range:
        return range(self.n_objects)

    @property
    def arrows(self) -> range:
        return range(len(self.src))

    @property
    def n_arrows(self) -> int:
        return len(self.src)

    def compose(self, g: int, h: int) -> int:
        """g o h (first h, then g)."""
        try:
            return self.table[(g, h)]
        except KeyError:
            raise GroupoidError(f"arrows {g} and {h} are not composable") from None

    def composable(self, g: int, h: int) -> bool:
        return self.src[g] == self.tgt[h]

    @cached_property
    def _into(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.n_objects)]
        for g in self.arrows:
            out[self.tgt[g]].append(g)
        return tuple(tuple(v) for v in out)

    @cached_property
    def _out_of(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.n_objects)]
        for g in self.arrows:
            out[self.src[g]].append(g)
        return tuple(tuple(v) for v in out)

    def arrows_into(self, x: int) -> tuple[int, ...]:
        return self._into[x]

    def arrows_out_of(self, x: int) -> tuple[int, ...]:
        return self._out_of[x]

    def hom(self, x: int, y: int) -> list[int]:
        """Arrows x -> y."""
        return [g for g in self._out_of[x] if self.tgt[g] == y]

    @cached_property
    def unit_set(self) -> frozenset[int]:
        return frozenset(self.unit)

    def is_unit(self, g: int) -> bool:
        return g in self.unit_set

    def is_group(self) -> bool:
        return self.n_objects == 1

    def _find_units(self) -> list[int]:
        unit = []
        for x in range(self.n_objects):
            cands = [g for g in self.arrows_into(x) if self.src[g] == x and self.table.get((g, g)) == g]
            if len(cands) != 1:
                raise GroupoidError(f"object {x} has {len(cands)} idempotent loops")
            unit.append(cands[0])
        return unit

    def _find_inverses(self) -> list[int]:
        inv = []
        unit = self.unit
        for g in self.arrows:
            cands = [h for h in self.arrows_into(self.src[g]) if self.src[h] == self.tgt[g]
                     and self.table.get((g, h)) == unit[self.tgt[g]]]
            if len(cands) != 1:
                raise GroupoidError(f"arrow {g} has {len(cands)} candidate inverses")
            inv.append(cands[0])
        return inv

    def __repr__(self) -> str:
        tag = f" {self.name}" if self.name else ""
        return f"<FiniteGroupoid{tag}: {self.n_objects} objects, {self.n_arrows} arrows>"

    # -- nerve cache ---------------------------------------------------------

    @cached_property
    def _nerve_cache(self) -> dict:
        return {}


def make_groupoid(
    n_objects: int,
    src: Sequence[int],
    tgt: Sequence[int],
    compose: Callable[[int, int], int] | dict,
    object_labels: Sequence = (),
    arrow_labels: Sequence = (),
    name: str = "",
) -> FiniteGroupoid:
    """Build from a composition function on composable pairs."""
    src, tgt = tuple(src), tuple(tgt)
    into: list[list[int]] = [[] for _ in range(n_objects)]
    for h in range(len(src)):
        into[tgt[h]].append(h)
    table = {}
    for g in range(len(src)):
        for h in into[src[g]]:
            table[(g, h)] = compose[(g, h)] if isinstance(compose, dict) else compose(g, h)
    return FiniteGroupoid(n_objects, src, tgt, table, object_labels=tuple(object_labels),
                          arrow_labels=tuple(arrow_labels), name=name)


# ---------------------------------------------------------------------------
# groups


def group_from_table(table: Sequence[Sequence[int]], labels: Sequence = (), name: str = "") -> FiniteGroupoid:
    """One-object groupoid from a Cayley table ``table[g][h] = g*h``."""
    n = len(table)
    if n == 0 or any(len(r) != n for r in table):
        raise GroupoidError("a Cayley table must be square and nonempty")
    return make_groupoid(1, [0] * n, [0] * n, lambda g, h: table[g][h],
                         object_labels=("*",), arrow_labels=labels, name=name)


def group_from_elements(elements: Sequence[Hashable], mul: Callable, name: str = "") -> FiniteGroupoid:
    index = {e: i for i, e in enumerate(elements)}
    table = [[index[mul(a, b)] for b in elements] for a in elements]
    return group_from_table(table, labels=tuple(elements), name=name)


def trivial_group() -> FiniteGroupoid:
    return group_from_table([[0]], name="1")


def cyclic_group(m: int) -> FiniteGroupoid:
    return group_from_table([[(a + b) % m for b in range(m)] for a in range(m)],
                            labels=tuple(range(m)), name=f"Z/{m}")


def product_group(*orders: int) -> FiniteGroupoid:
    """Z/m1 x Z/m2 x ... with elements in lexicographic order."""
    elements = list(itertools.product(*(range(m) for m in orders)))
    mul = lambda a, b: tuple((x + y) % m for x, y, m in zip(a, b, orders))
    return group_from_elements(elements, mul, name=" x ".join(f"Z/{m}" for m in orders))


def symmetric_group(n: int) -> FiniteGroupoid:
    elements = sorted(itertools.permutations(range(n)))
    mul = lambda a, b: tuple(a[b[i]] for i in range(n))
    return group_from_elements(elements, mul, name=f"S{n}")


def dihedral_group(n: int) -> FiniteGroupoid:
    """Symmetries of the n-gon, order 2n; elements (k, f) mean r^k s^f."""
    elements = [(k, f) for f in range(2) for k in range(n)]

    def mul(a, b):
        k1, f1 = a
        k2, f2 = b
        return ((k1 + (-k2 if f1 else k2)) % n, (f1 + f2) % 2)

    return group_from_elements(elements, mul, name=f"D{n}")


def quaternion_group() -> FiniteGroupoid:
    units = ["1", "i", "j", "k"]
    rule = {
        ("1", x): (1, x) for x in units
    }
    rule.update({(x, "1"): (1, x) for x in units})
    rule.update({
        ("i", "i"): (-1, "1"), ("j", "j"): (-1, "1"), ("k", "k"): (-1, "1"),
        ("i", "j"): (1, "k"), ("j", "k"): (1, "i"), ("k", "i"): (1, "j"),
        ("j", "i"): (-1, "k"), ("k", "j"): (-1, "i"), ("i", "k"): (-1, "j"),
    })
    elements = [(s, u) for s in (1, -1) for u in units]

    def mul(a, b):
        s, u = rule[(a[1], b[1])]
        return (a[0] * b[0] * s, u)

    return group_from_elements(elements, mul, name="Q8")


def groups_up_to_order(n: int) -> list[FiniteGroupoid]:
    """One representative of every isomorphism class of groups of order <= n (n <= 8)."""
    if n > 8:
        raise ValueError("the catalogue stops at order 8")
    out = [trivial_group()]
    catalogue = {
        2: [lambda: cyclic_group(2)],
        3: [lambda: cyclic_group(3)],
        4: [lambda: cyclic_group(4), lambda: product_group(2, 2)],
        5: [lambda: cyclic_group(5)],
        6: [lambda: cyclic_group(6), lambda: symmetric_group(3)],
        7: [lambda: cyclic_group(7)],
        8: [lambda: cyclic_group(8), lambda: product_group(4, 2), lambda: product_group(2, 2, 2),
            lambda: dihedral_group(4), lambda: quaternion_group()],
    }
    for order in range(2, n + 1):
        out.extend(f() for f in catalogue[order])
    return out


# ---------------------------------------------------------------------------
# basic groupoids


def empty_groupoid() -> FiniteGroupoid:
    return make_groupoid(0, [], [], {}, name="empty")


def discrete_groupoid(n: int) -> FiniteGroupoid:
    return make_groupoid(n, range(n), range(n), lambda g, h: g, name=f"discrete({n})")


def pair_groupoid(n: int) -> FiniteGroupoid:
    """Objects 0..n-1 with exactly one arrow (i <- j) of id i*n + j."""
    src = [j for i in range(n) for j in range(n)]
    tgt = [i for i in range(n) for j in range(n)]

    def comp(g, h):
        i, _ = divmod(g, n)
        _, k = divmod(h, n)
        return i * n + k

    return make_groupoid(n, src, tgt, comp, object_labels=tuple(range(n)),
                         arrow_labels=tuple((i, j) for i in range(n) for j in range(n)), name=f"pair({n})")


def point_groupoid() -> FiniteGroupoid:
    return discrete_groupoid(1)


def action_groupoid(g: FiniteGroupoid, n_points: int, anchor: Sequence[int], act: Callable[[int, int], int],
                    point_labels: Sequence = (), name: str = "") -> FiniteGroupoid:
    """Translation groupoid of a right action of ``g`` on a finite set over its objects.

    ``anchor[x]`` is the object over the point x, and ``act(x, a)`` is x.a,
    defined when ``anchor[x] == tgt[a]``, lying over ``src[a]``.  The arrow
    (x, a) goes from x.a to x.
    """
    pairs = [(x, a) for x in range(n_points) for a in g.arrows_into(anchor[x])]
    values = {}
    for x, a in pairs:
        y = act(x, a)
        if not 0 <= y < n_points or anchor[y] != g.src[a]:
            raise NotAnAction(f"{x}.{a} lands outside the fibre over the source of {a}")
        values[(x, a)] = y
    for x in range(n_points):
        if values[(x, g.unit[anchor[x]])] != x:
            raise NotAnAction(f"the unit does not fix point {x}")
    for x, a in pairs:
        xa = values[(x, a)]
        for b in g.arrows_into(g.src[a]):
            if values[(xa, b)] != values[(x, g.compose(a, b))]:
                raise NotAnAction(f"(x.a).b != x.(ab) for x={x}, a={a}, b={b}")
    index = {p: i for i, p in enumerate(pairs)}
    src = [values[p] for p in pairs]
    tgt = [x for x, _ in pairs]

    def comp(i, j):
        x, a = pairs[i]
        _, b = pairs[j]
        return index[(x, g.compose(a, b))]

    return make_groupoid(n_points, src, tgt, comp, object_labels=tuple(point_labels) or tuple(range(n_points)),
                         arrow_labels=tuple(pairs), name=name)


def action_projection(action: FiniteGroupoid, g: FiniteGroupoid, anchor: Sequence[int]) -> GroupoidHom:
    """The projection X x| g -> g of an action groupoid built by ``action_groupoid``."""
    return GroupoidHom(action, g, tuple(anchor), tuple(a for _, a in action.arrow_labels))


def translation_groupoid(n_points: int, group: FiniteGroupoid, action: Sequence[Sequence[int]] | Callable,
                         name: str = "") -> FiniteGroupoid:
    """X x| G for a right action ``action[x][a] = x.a`` of a one-object group."""
    if not group.is_group():
        raise GroupoidError("translation_groupoid expects a one-object group")
    act = action if callable(action) else (lambda x, a: action[x][a])
    return action_groupoid(group, n_points, [0] * n_points, act, name=name)


def regular_translation_groupoid(group: FiniteGroupoid) -> FiniteGroupoid:
    """G x| G with G acting on itself by right multiplication."""
    return translation_groupoid(group.n_arrows, group, lambda x, a: group.compose(x, a),
                                name=f"{group.name or 'G'} x| {group.name or 'G'}")


def loops(g: FiniteGroupoid) -> list[int]:
    return [a for a in g.arrows if g.src[a] == g.tgt[a]]


def loop_groupoid(g: FiniteGroupoid) -> FiniteGroupoid:
    """Loops of g acted on by conjugation: gamma . a = a^-1 gamma a."""
    lp = loops(g)
    index = {a: i for i, a in enumerate(lp)}
    anchor = [g.src[a] for a in lp]

    def act(i, a):
        gamma = lp[i]
        return index[g.compose(g.inverse[a], g.compose(gamma, a))]

    return action_groupoid(g, len(lp), anchor, act, point_labels=tuple(lp),
                           name=f"loops({g.name})" if g.name else "")


def disjoint_union(*parts: FiniteGroupoid) -> FiniteGroupoid:
    src, tgt, table = [], [], {}
    obj_off = arr_off = 0
    olab, alab = [], []
    for k, p in enumerate(parts):
        src.extend(s + obj_off for s in p.src)
        tgt.extend(t + obj_off for t in p.tgt)
        for (a, b), c in p.table.items():
            table[(a + arr_off, b + arr_off)] = c + arr_off
        olab.extend((k, x) for x in p.objects)
        alab.extend((k, a) for a in p.arrows)
        obj_off += p.n_objects
        arr_off += p.n_arrows
    return make_groupoid(obj_off, src, tgt, table, object_labels=olab, arrow_labels=alab)


def product(a: FiniteGroupoid, b: FiniteGroupoid) -> FiniteGroupoid:
    objs = [(x, y) for x in a.objects for y in b.objects]
    arrs = [(f, g) for f in a.arrows for g in b.arrows]
    oi = {o: i for i, o in enumerate(objs)}
    ai = {x: i for i, x in enumerate(arrs)}
    src = [oi[(a.src[f], b.src[g])] for f, g in arrs]
    tgt = [oi[(a.tgt[f], b.tgt[g])] for f, g in arrs]

    def comp(i, j):
        f1, g1 = arrs[i]
        f2, g2 = arrs[j]
        return ai[(a.compose(f1, f2), b.compose(g1, g2))]

    return make_groupoid(len(objs), src, tgt, comp, object_labels=objs, arrow_labels=arrs)


def orbits(g: FiniteGroupoid) -> list[list[int]]:
    """Connected components (orbits) as sorted object lists, ordered by least element."""
    seen = [-1] * g.n_objects
    out = []
    for x in g.objects:
        if seen[x] >= 0:
            continue
        comp = []
        stack = [x]
        seen[x] = len(out)
        while stack:
            y = stack.pop()
            comp.append(y)
            for a in g.arrows_out_of(y):
                z = g.tgt[a]
                if seen[z] < 0:
                    seen[z] = len(out)
                    stack.append(z)
        out.append(sorted(comp))
    return out


def isotropy(g: FiniteGroupoid, x: int) -> list[int]:
    return g.hom(x, x)


# ---------------------------------------------------------------------------
# homomorphisms


@dataclass(frozen=True, eq=False)
class GroupoidHom:
    source: FiniteGroupoid
    target: FiniteGroupoid
    object_map: tuple[int, ...]
    arrow_map: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        s, t = self.source, self.target
        object.__setattr__(self, "object_map", tuple(self.object_map))
        object.__setattr__(self, "arrow_map", tuple(self.arrow_map))
        om, am = self.object_map, self.arrow_map
        if len(om) != s.n_objects or len(am) != s.n_arrows:
            raise NotAHomomorphism("object or arrow map has the wrong length")
        for x in s.objects:
            if not 0 <= om[x] < t.n_objects:
                raise NotAHomomorphism(f"object {x} maps outside the target")
            if am[s.unit[x]] != t.unit[om[x]]:
                raise NotAHomomorphism(f"unit of {x} not sent to a unit")
        for k in s.arrows:
            if not 0 <= am[k] < t.n_arrows:
                raise NotAHomomorphism(f"arrow {k} maps outside the target")
            if t.src[am[k]] != om[s.src[k]] or t.tgt[am[k]] != om[s.tgt[k]]:
                raise NotAHomomorphism(f"arrow {k} endpoints not preserved")
        for (g, h), gh in s.table.items():
            if t.compose(am[g], am[h]) != am[gh]:
                raise NotAHomomorphism(f"composition {g} o {h} not preserved")

    def __call__(self, k: int) -> int:
        return self.arrow_map[k]

    def on_object(self, y: int) -> int:
        return self.object_map[y]

    def then(self, other: "GroupoidHom") -> "GroupoidHom":
        """other o self."""
        if other.source is not self.target:
            raise NotAHomomorphism("homomorphisms are not composable")
        return GroupoidHom(self.source, other.target,
                           tuple(other.object_map[y] for y in self.object_map),
                           tuple(other.arrow_map[k] for k in self.arrow_map))


def identity_hom(g: FiniteGroupoid) -> GroupoidHom:
    return GroupoidHom(g, g, tuple(g.objects), tuple(g.arrows), name="id")


def hom_to_point(g: FiniteGroupoid, point: FiniteGroupoid | None = None) -> GroupoidHom:
    pt = point or point_groupoid()
    return GroupoidHom(g, pt, (0,) * g.n_objects, (pt.unit[0],) * g.n_arrows)


def inclusion_of_object(g: FiniteGroupoid, x: int) -> GroupoidHom:
    """The point groupoid mapped to the object x (to its unit)."""
    return GroupoidHom(point_groupoid(), g, (x,), (g.unit[x],))


def group_hom_from_images(source: FiniteGroupoid, target: FiniteGroupoid, images: Sequence[int]) -> GroupoidHom:
    return GroupoidHom(source, target, (0,), tuple(images))


def fold_map(g: FiniteGroupoid, copies: int = 2) -> tuple[FiniteGroupoid, GroupoidHom]:
    """The disjoint union of copies of g with its map back onto g."""
    u = disjoint_union(*([g] * copies))
    return u, GroupoidHom(u, g, tuple(x for _ in range(copies) for x in g.objects),
                          tuple(a for _ in range(copies) for a in g.arrows))


# ---------------------------------------------------------------------------
# comma groupoids, fibered products, Morita equivalences


def comma_groupoid(phi: GroupoidHom, x: int) -> tuple[FiniteGroupoid, GroupoidHom]:
    """x/phi: objects (y, g: x -> phi(y)); an arrow k: (y, g) -> (y', g') has phi(k) o g = g'.

    Returns the groupoid and the forgetful homomorphism to the source of phi.
    """
    k_, g_ = phi.source, phi.target
    objs = [(y, g) for y in k_.objects for g in g_.hom(x, phi.object_map[y])]
    oi = {o: i for i, o in enumerate(objs)}
    arrs = [(o, k) for o in objs for k in k_.arrows_out_of(o[0])]
    ai = {a: i for i, a in enumerate(arrs)}
    src = [oi[o] for o, _ in arrs]
    tgt = []
    for (y, g), k in arrs:
        tgt.append(oi[(k_.tgt[k], g_.compose(phi.arrow_map[k], g))])

    def comp(i, j):
        _, k2 = arrs[i]
        o1, k1 = arrs[j]
        return ai[(o1, k_.compose(k2, k1))]

    comma = make_groupoid(len(objs), src, tgt, comp, object_labels=objs,
                          arrow_labels=tuple((k, o[1]) for o, k in arrs))
    proj = GroupoidHom(comma, k_, tuple(y for y, _ in objs), tuple(k for _, k in arrs))
    return comma, proj


def g_action_on_comma(phi: GroupoidHom, g: int, source_comma=None, target_comma=None) -> GroupoidHom:
    """For g: x -> x' the homomorphism x'/phi -> x/phi, (y, h) -> (y, h o g)."""
    gg = phi.target
    x, x2 = gg.src[g], gg.tgt[g]
    upper = source_comma or comma_groupoid(phi, x2)
    lower = target_comma or comma_groupoid(phi, x)
    up, low = upper[0], lower[0]
    lo_index = {o: i for i, o in enumerate(low.object_labels)}
    obj_map = tuple(lo_index[(y, gg.compose(h, g))] for (y, h) in up.object_labels)
    lo_arr = {}
    for i, (k, h) in enumerate(low.arrow_labels):
        lo_arr[(k, h)] = i
    arr_map = tuple(lo_arr[(k, gg.compose(h, g))] for (k, h) in up.arrow_labels)
    return GroupoidHom(up, low, obj_map, arr_map)


def fibered_product(phi: GroupoidHom, psi: GroupoidHom) -> tuple[FiniteGroupoid, GroupoidHom, GroupoidHom]:
    """Objects (y, g: phi(y) -> psi(z), z); arrows (h, k) with g' o phi(h) = psi(k) o g."""
    if phi.target is not psi.target:
        raise GroupoidError("fibered product needs a common codomain")
    a, b, g_ = phi.source, psi.source, phi.target
    objs = [(y, g, z) for y in a.objects for z in b.objects
            for g in g_.hom(phi.object_map[y], psi.object_map[z])]
    oi = {o: i for i, o in enumerate(objs)}
    arrs = [(o, h, k) for o in objs for h in a.arrows_out_of(o[0]) for k in b.arrows_out_of(o[2])]
    ai = {x: i for i, x in enumerate(arrs)}
    src = [oi[o] for o, _, _ in arrs]
    tgt = []
    for (y, g, z), h, k in arrs:
        g2 = g_.compose(g_.compose(psi.arrow_map[k], g), g_.inverse[phi.arrow_map[h]])
        tgt.append(oi[(a.tgt[h], g2, b.tgt[k])])

    def comp(i, j):
        _, h2, k2 = arrs[i]
        o1, h1, k1 = arrs[j]
        return ai[(o1, a.compose(h2, h1), b.compose(k2, k1))]

    fp = make_groupoid(len(objs), src, tgt, comp, object_labels=objs,
                       arrow_labels=tuple((o, h, k) for o, h, k in arrs))
    p1 = GroupoidHom(fp, a, tuple(o[0] for o in objs), tuple(h for _, h, _ in arrs))
    p2 = GroupoidHom(fp, b, tuple(o[2] for o in objs), tuple(k for _, _, k in arrs))
    return fp, p1, p2


@dataclass(frozen=True)
class MoritaVerdict:
    equivalence: bool
    reason: str = ""
    witness: tuple = ()

    def __bool__(self) -> bool:
        return self.equivalence


def morita_check(phi: GroupoidHom) -> MoritaVerdict:
    """Essential surjectivity and full faithfulness, with a witness on failure."""
    k_, g_ = phi.source, phi.target
    hit = set()
    for y in k_.objects:
        for g in g_.arrows_out_of(phi.object_map[y]):
            hit.add(g_.tgt[g])
    for x in g_.objects:
        if x not in hit:
            return MoritaVerdict(False, "object not reached from the image", (x,))
    for y in k_.objects:
        for y2 in k_.objects:
            images = sorted(phi.arrow_map[k] for k in k_.hom(y, y2))
            target = sorted(g_.hom(phi.object_map[y], phi.object_map[y2]))
            if images != target:
                return MoritaVerdict(False, "hom-set map is not a bijection", (y, y2))
    return MoritaVerdict(True)


def is_morita_equivalence(phi: GroupoidHom) -> bool:
    return morita_check(phi).equivalence


# ---------------------------------------------------------------------------
# nerve


@dataclass(frozen=True, eq=False)
class NerveLevel:
    """Composable strings of length n with face maps into level n-1.

    ``faces[i][s]`` is the index of d_i of string s at the previous level, or
    -1 when the face is degenerate and the level only lists nondegenerate
    strings.  ``first[s]`` is x0 and ``last[s]`` is xn.
    """

    n: int
    strings: list[tuple[int, ...]]
    faces: list[list[int]]
    first: list[int]
    last: list[int]
    nondegenerate: bool = False

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {s: i for i, s in enumerate(self.strings)}

    def __len__(self) -> int:
        return len(self.strings)


def _enumerate(g: FiniteGroupoid, n: int, nondegenerate: bool) -> list[tuple[int, ...]]:
    if n == 0:
        return [(x,) for x in g.objects]
    level = [(a,) for a in g.arrows if not (nondegenerate and g.is_unit(a))]
    for _ in range(n - 1):
        nxt = []
        for s in level:
            for a in g.arrows_into(g.src[s[-1]]):
                if nondegenerate and g.is_unit(a):
                    continue
                nxt.append(s + (a,))
        level = nxt
    return level


def face(g: FiniteGroupoid, s: tuple[int, ...], i: int) -> tuple[int, ...]:
    """d_i of a string of length n >= 1."""
    n = len(s)
    if n == 1:
        return (g.src[s[0]],) if i == 0 else (g.tgt[s[0]],)
    if i == 0:
        return s[1:]
    if i == n:
        return s[:-1]
    return s[: i - 1] + (g.compose(s[i - 1], s[i]),) + s[i + 1:]


def is_degenerate(g: FiniteGroupoid, s: tuple[int, ...], n: int) -> bool:
    return n > 0 and any(g.is_unit(a) for a in s)


def nerve(g: FiniteGroupoid, n: int, nondegenerate: bool = False) -> NerveLevel:
    """Level n of the nerve in lexicographic order by arrow id.

    With ``nondegenerate`` only strings without unit arrows are listed.
    """
    if n < 0:
        raise ValueError("nerve levels are nonnegative")
    key = (n, nondegenerate)
    cache = g._nerve_cache
    if key in cache:
        return cache[key]
    if n == 0:
        strings = _enumerate(g, 0, nondegenerate)
        first = last = [s[0] for s in strings]
        lvl = NerveLevel(0, strings, [], list(first), list(last), nondegenerate)
    elif n == 1:
        strings = _enumerate(g, 1, nondegenerate)
        faces = [[g.src[s[0]] for s in strings], [g.tgt[s[0]] for s in strings]]
        lvl = NerveLevel(1, strings, faces, list(faces[1]), list(faces[0]), nondegenerate)
    else:
        # extend each string of level n-1 by one arrow; d_n is then the parent
        parent_level = nerve(g, n - 1, nondegenerate)
        prev = parent_level.index
        table, src = g.table, g.src
        unit = g.unit_set if nondegenerate else frozenset()
        into = [[a for a in g.arrows_into(x) if a not in unit] for x in g.objects]
        strings, faces = [], [[] for _ in range(n + 1)]
        last_face, first = faces[n], []
        for p, ps in enumerate(parent_level.strings):
            for a in into[src[ps[-1]]]:
                s = ps + (a,)
                strings.append(s)
                last_face.append(p)
        get = prev.get
        for i in range(n):
            row = faces[i]
            if i == 0:
                for s in strings:
                    row.append(get(s[1:], -1))
                continue
            for s in strings:
                m = table[(s[i - 1], s[i])]
                row.append(-1 if m in unit else get(s[: i - 1] + (m,) + s[i + 1:], -1))
        tgt = g.tgt
        first = [tgt[s[0]] for s in strings]
        last = [src[s[-1]] for s in strings]
        lvl = NerveLevel(n, strings, faces, first, last, nondegenerate)
    cache[key] = lvl
    return lvl


def string_objects(g: FiniteGroupoid, s: tuple[int, ...], n: int) -> list[int]:
    """x0, ..., xn of a string."""
    if n == 0:
        return [s[0]]
    return [g.tgt[s[0]]] + [g.src[a] for a in s]
