"""The ten acceptance criteria, exact arithmetic throughout.

Each test records a one-line verdict that conftest.py prints at the end of
the run.  Runtime limits are measured with a wall clock around the work.
"""

import io
import os
import random
import time

from etalehom.cli import run
from etalehom.cyclic import (
    FinDimAlgebra, convolution_algebra, cyclic_module_of_algebra, generic_complex_size, localize_by_loop_orbit,
    loop_comparison, matrix_unit_table, mixed_complex, normalized_mixed_complex, relative_mixed_complex, sbi_check,
)
from etalehom.groupoids import (
    GroupoidHom, action_groupoid, cyclic_group, dihedral_group, disjoint_union, fibered_product,
    group_hom_from_images, groups_up_to_order, hom_to_point, identity_hom, inclusion_of_object, loop_groupoid,
    morita_check, orbits, pair_groupoid, point_groupoid, product, quaternion_group,
    regular_translation_groupoid, symmetric_group,
)
from etalehom.homology import (
    homology_groups, leray_spectral_sequence, sheaf_les_ranks, sheaf_long_exact_sequence,
    transformation_homotopy,
)
from etalehom.linalg import GF, QQ, ZZ
from etalehom.sheaves import (
    SheafMap, constant_sheaf, direct_sum, free_sheaf, hom_basis, permutation_sheaf, ses_from_surjection, split_ses,
)

import oracles
from cli_corpus import RUNS

TESTS = os.path.dirname(os.path.abspath(__file__))
RESULTS = {}


def record(n, ok, detail):
    RESULTS[n] = (ok, detail)
    assert ok, detail


def H(g, coeff, n):
    return homology_groups(g, constant_sheaf(g, coeff), n)


# 1 -------------------------------------------------------------------------

def test_criterion_01_cyclic_group_homology():
    t0 = time.perf_counter()
    bad = []
    for m in (2, 3, 4):
        got = [(h.betti, h.torsion) for h in H(cyclic_group(m), ZZ, 5)]
        want = [oracles.cyclic_group_homology(m, n) for n in range(6)]
        if got != want:
            bad.append((m, got))
    dt = time.perf_counter() - t0
    record(1, not bad and dt < 5, f"Z/m for m in 2,3,4 through degree 5 in {dt:.2f}s; mismatches {bad}")


# 2 -------------------------------------------------------------------------

def morita_pairs():
    pairs = []
    for n in (2, 3, 4, 5):
        phi = inclusion_of_object(pair_groupoid(n), n - 1)
        pairs.append((f"point into pair({n})", phi))
    for g in (cyclic_group(2), cyclic_group(3), symmetric_group(3)):
        pairs.append((f"{g.name} x {g.name} -> point", hom_to_point(regular_translation_groupoid(g))))
    p3 = pair_groupoid(3)
    _, p1, p2 = fibered_product(inclusion_of_object(p3, 0), inclusion_of_object(p3, 2))
    pairs += [("pullback of two point inclusions, first projection", p1),
              ("pullback of two point inclusions, second projection", p2)]
    pt = point_groupoid()
    reg = regular_translation_groupoid(cyclic_group(2))
    _, q1, q2 = fibered_product(hom_to_point(reg, pt), hom_to_point(pair_groupoid(2), pt))
    pairs += [("pullback over the point, first projection", q1), ("pullback over the point, second projection", q2)]
    z2 = cyclic_group(2)
    zp = product(z2, pair_groupoid(2))
    incl = GroupoidHom(z2, zp, (0,), tuple(_product_arrow(zp, a) for a in z2.arrows))
    _, r1, r2 = fibered_product(incl, identity_hom(zp))
    pairs += [("pullback of Z/2 into Z/2 x pair(2), first projection", r1), ("same, second projection", r2)]
    return pairs


def _product_arrow(zp, a):
    # arrow (a, unit at object 0) of Z/2 x pair(2), found by its endpoints and action
    for c in zp.arrows:
        if zp.src[c] == 0 and zp.tgt[c] == 0 and (a == 0) == (c == zp.unit[0]):
            return c
    raise LookupError(a)


def test_criterion_02_morita_invariance():
    t0 = time.perf_counter()
    pairs = morita_pairs()
    bad = []
    for name, phi in pairs:
        if not morita_check(phi):
            bad.append((name, "not Morita"))
            continue
        for k in (ZZ, QQ, GF(2)):
            if H(phi.source, k, 4) != H(phi.target, k, 4):
                bad.append((name, str(k)))
    dt = time.perf_counter() - t0
    record(2, len(pairs) >= 10 and not bad and dt < 60,
           f"{len(pairs)} Morita pairs over Z, Q, F2 through degree 4 in {dt:.1f}s; failures {bad}")


# 3 -------------------------------------------------------------------------

def test_criterion_03_leray_abutment():
    t0 = time.perf_counter()
    bad = []
    z4, z2 = cyclic_group(4), cyclic_group(2)
    cases = [("Z/4 -> Z/2", group_hom_from_images(z4, z2, [0, 1, 0, 1]), GF(2), False)]
    for g in groups_up_to_order(6):
        for k in (GF(2), GF(3)):
            cases.append((f"1 -> {g.name}", GroupoidHom(point_groupoid(), g, (0,), (g.unit[0],)), k, True))
    for name, phi, k, degenerate in cases:
        rep = leray_spectral_sequence(phi, constant_sheaf(phi.source, k), 4)
        sums = [rep.e_infinity.antidiagonal(n) for n in range(5)]
        dom = [h.betti for h in H(phi.source, k, 4)]
        if sums != dom or not rep.abutment_ok:
            bad.append((name, str(k), sums, dom))
        if degenerate:
            row = [rep.e2.dim(p, 0) for p in range(5)]
            upper = [rep.e2.dim(p, q) for p in range(5) for q in range(1, 5 - p)]
            if rep.stabilizes_at > 2 or row != [1, 0, 0, 0, 0] or any(upper):
                bad.append((name, str(k), "E2", row))
    dt = time.perf_counter() - t0
    record(3, not bad and dt < 30, f"{len(cases)} Leray cases through degree 4 in {dt:.1f}s; failures {bad}")


# 4 -------------------------------------------------------------------------

SES_BASES = [cyclic_group(2), cyclic_group(3), symmetric_group(3), pair_groupoid(2),
             action_groupoid(cyclic_group(2), 2, [0, 0], lambda x, a: (x + a) % 2)]


def random_ses(rng):
    """A short exact sequence ker f -> B -> C built from a random equivariant surjection f."""
    while True:
        g = rng.choice(SES_BASES)
        k = rng.choice([QQ, GF(2), GF(3)])
        b = direct_sum(free_sheaf(g, [rng.randint(0, 1) for _ in g.objects], k),
                       constant_sheaf(g, k, rng.randint(1, 2)))
        c = rng.choice([constant_sheaf(g, k, rng.randint(1, 2)), free_sheaf(g, [1] * g.n_objects, k)])
        if max(b.rank) > 4:
            # keeps the degree 4 bar complexes of the cones small enough for exact rank work
            continue
        basis = hom_basis(b, c)
        if not basis:
            continue
        coefs = [rng.randint(-2, 2) for _ in basis]
        mats = []
        for x in g.objects:
            m = [[k.normalize(sum(c_ * f[x][i][j] for c_, f in zip(coefs, basis))) for j in range(b.rank[x])]
                 for i in range(c.rank[x])]
            if oracles._rank(m, c.rank[x], b.rank[x], k.characteristic) != c.rank[x]:
                break
            mats.append(m)
        else:
            return ses_from_surjection(SheafMap(b, c, tuple(mats)))


def integral_ses():
    out = []
    for g in (cyclic_group(2), cyclic_group(3), cyclic_group(4), pair_groupoid(2)):
        reg = free_sheaf(g, [1] * g.n_objects, ZZ)
        ones = tuple([[1] * reg.rank[x]] for x in g.objects)
        out.append(ses_from_surjection(SheafMap(reg, constant_sheaf(g, ZZ), ones)))
    z2 = cyclic_group(2)
    out.append(split_ses(constant_sheaf(z2, ZZ), free_sheaf(z2, [1], ZZ)))
    return out


def permutation_ses():
    s3 = symmetric_group(3)
    out = []
    for k in (QQ, GF(2), GF(3)):
        perm = permutation_sheaf(s3, 3, [0, 0, 0], lambda x, a: s3.arrow_labels[a].index(x), k)
        out.append(ses_from_surjection(SheafMap(perm, constant_sheaf(s3, k), ([[1, 1, 1]],))))
    return out


# dense homology bases stay cheap on groupoids with at most this many arrows
DENSE_ARROWS = 4


def test_criterion_04_long_exact_sequences():
    rng = random.Random(20240604)
    fields = [random_ses(rng) for _ in range(20)] + permutation_ses()
    integral = integral_ses()
    bad = [i for i, s in enumerate(fields) if not sheaf_les_ranks(s, 4).is_exact()]
    dense = [s for s in fields if s.inclusion.target.base.n_arrows <= DENSE_ARROWS] + integral
    bad_dense = [i for i, s in enumerate(dense) if not sheaf_long_exact_sequence(s, 4).is_exact()]
    total = len(fields) + len(integral)
    record(4, total >= 20 and not bad and not bad_dense,
           f"{total} short exact sequences through degree 4 ({len(fields)} by ranks, {len(dense)} by homology "
           f"bases); failures {bad} / {bad_dense}")


# 5 -------------------------------------------------------------------------

def generated_groupoids():
    out = [g for g in groups_up_to_order(8)]
    out += [pair_groupoid(n) for n in range(1, 5)]
    s3 = symmetric_group(3)
    out += [
        action_groupoid(s3, 3, [0, 0, 0], lambda x, a: s3.arrow_labels[a].index(x)),
        action_groupoid(cyclic_group(4), 2, [0, 0], lambda x, a: (x + a) % 2),
        disjoint_union(cyclic_group(3), pair_groupoid(2), symmetric_group(3)),
        product(cyclic_group(2), pair_groupoid(3)),
        loop_groupoid(s3),
        loop_groupoid(dihedral_group(4)),
    ]
    return out


def test_criterion_05_finite_proper_vanishing():
    bad = []
    corpus = generated_groupoids()
    for g in corpus:
        h = H(g, QQ, 4)
        if h[0].betti != len(orbits(g)) or h[0].betti != oracles.orbit_count(g) or any(not x.is_zero() for x in h[1:]):
            bad.append((g.name, [str(x) for x in h]))
    record(5, not bad, f"{len(corpus)} groupoids, rational homology through degree 4; failures {bad}")


# 6 -------------------------------------------------------------------------

def comparison_corpus():
    return list(groups_up_to_order(8)) + [pair_groupoid(n) for n in range(1, 5)]


def test_criterion_06_hochschild_loop_comparison():
    t0 = time.perf_counter()
    bad = []
    corpus = comparison_corpus()
    for g in corpus:
        cmp = loop_comparison(g, QQ, 4)
        if not cmp.equal:
            bad.append((g.name, cmp.hochschild, cmp.loop_homology))
        if g.n_objects == 1 and cmp.hochschild != [oracles.conjugacy_classes(g), 0, 0, 0, 0]:
            bad.append((g.name, "classes", cmp.hochschild))
    dt = time.perf_counter() - t0
    record(6, not bad and dt < 120, f"{len(corpus)} groupoids through degree 4 in {dt:.1f}s; failures {bad}")


# 7 -------------------------------------------------------------------------

GENERIC_CELL_CAP = 150_000


def localization_degree(g):
    """Largest degree <= 4 whose generic normalized complex stays under the cell cap."""
    a = convolution_algebra(g, QQ)
    d = 4
    while d > 0 and generic_complex_size(a, d + 1) > GENERIC_CELL_CAP:
        d -= 1
    return d


def test_criterion_07_localization():
    bad = []
    corpus = comparison_corpus()
    for g in corpus:
        d = localization_degree(g)
        loc = localize_by_loop_orbit(g, QQ, d)
        if not loc.complete:
            bad.append((g.name, d, loc.summed(), loc.total))
        units = localize_by_loop_orbit(g, QQ, 0, which="units", total=False)
        if units.summed()[0] != H(g, QQ, 0)[0].betti:
            bad.append((g.name, "units", units.summed()))
    record(7, not bad, f"{len(corpus)} groupoids, orbit sums against the generic total; failures {bad}")


# 8 -------------------------------------------------------------------------

def algebra_corpus():
    k = QQ
    out = [
        ("k", FinDimAlgebra(k, 1, {(0, 0): {0: 1}}, {0: 1})),
        ("k x k", FinDimAlgebra(k, 2, {(0, 0): {0: 1}, (1, 1): {1: 1}}, {0: 1, 1: 1})),
        ("dual numbers", FinDimAlgebra(k, 2, {(0, 0): {0: 1}, (0, 1): {1: 1}, (1, 0): {1: 1}}, {0: 1})),
        ("upper triangular", FinDimAlgebra(k, 3, {(0, 0): {0: 1}, (0, 1): {1: 1}, (1, 2): {1: 1}, (2, 2): {2: 1}},
                                           {0: 1, 2: 1})),
        ("M2", FinDimAlgebra(k, 4, matrix_unit_table(2), {0: 1, 3: 1})),
    ]
    for g in (cyclic_group(2), cyclic_group(3), pair_groupoid(2)):
        out.append((f"k[{g.name}]", convolution_algebra(g, k)))
    return out


def test_criterion_08_mixed_complexes():
    bad = []
    corpus = algebra_corpus()
    checked = 0
    for name, a in corpus:
        top = 4 if a.dim <= 2 else 3
        try:
            cm = cyclic_module_of_algebra(a, top)
            cm.verify()
            for m in (mixed_complex(cm), normalized_mixed_complex(a, top)):
                m.verify()
                checked += 1
                if not sbi_check(m, top - 1).exact:
                    bad.append((name, "SBI"))
        except Exception as exc:  # a relation failure is a criterion failure, reported by name
            bad.append((name, repr(exc)))
    for g in (symmetric_group(3), pair_groupoid(3), disjoint_union(cyclic_group(2), pair_groupoid(2))):
        m = relative_mixed_complex(g, QQ, 4).complex
        m.verify()
        checked += 1
        if not sbi_check(m, 3).exact:
            bad.append((g.name, "SBI"))
    record(8, not bad, f"{checked} mixed complexes from {len(corpus) + 3} algebras; failures {bad}")


# 9 -------------------------------------------------------------------------

def conjugation(g, c):
    return GroupoidHom(g, g, (0,), tuple(g.compose(g.compose(c, x), g.inverse[c]) for x in g.arrows))


def homotopy_instances():
    z3, s3, q8 = cyclic_group(3), symmetric_group(3), quaternion_group()
    out = [(f"Z/3 conjugation by {c}", conjugation(z3, c), identity_hom(z3), (c,)) for c in (1, 2)]
    out += [(f"S3 conjugation by {c}", conjugation(s3, c), identity_hom(s3), (c,)) for c in (1, 3, 5)]
    out.append(("Q8 conjugation by 2", conjugation(q8, 2), identity_hom(q8), (2,)))
    p = pair_groupoid(3)
    at0 = inclusion_of_object(p, 0)
    collapse = hom_to_point(p, at0.source).then(at0)
    # theta(y) is the arrow y -> 0
    theta = tuple(next(a for a in p.arrows if p.src[a] == y and p.tgt[a] == 0) for y in p.objects)
    out.append(("pair(3) collapse to object 0", collapse, identity_hom(p), theta))
    return out


def test_criterion_09_homotopy_identity():
    bad = []
    inst = homotopy_instances()
    for name, phi, psi, theta in inst:
        for k in (ZZ, GF(2)):
            if not transformation_homotopy(phi, psi, theta, constant_sheaf(phi.target, k), 3).identity_holds():
                bad.append((name, str(k)))
    record(9, len(inst) >= 5 and not bad, f"{len(inst)} natural transformations over Z and F2; failures {bad}")


# 10 ------------------------------------------------------------------------

def _run_corpus():
    outs = {}
    old = os.getcwd()
    os.chdir(TESTS)
    try:
        for stem, argv in RUNS:
            buf, err = io.StringIO(), io.StringIO()
            code = run(argv, buf, err)
            outs[stem] = (code, buf.getvalue().encode("utf-8"))
    finally:
        os.chdir(old)
    return outs


def test_criterion_10_cli_determinism():
    first, second = _run_corpus(), _run_corpus()
    bad = []
    for stem in first:
        with open(os.path.join(TESTS, "golden", stem + ".json"), "rb") as fh:
            golden = fh.read()
        if first[stem][0] != 0 or first[stem] != second[stem] or first[stem][1] != golden:
            bad.append(stem)
    record(10, not bad, f"{len(first)} golden runs, two passes each; differing {bad}")
