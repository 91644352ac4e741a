"""Command-line front end: read a groupoid description, compute, print a JSON report.

Input is a JSON document (lines starting with ``#`` are comments)::

    {
      "main": "Z2",
      "groupoids": {
        "Z2": {"cayley_table": [[0, 1], [1, 0]]},
        "P3": {"pair": 3},
        "pt": {"pair": 1}
      },
      "homs": {
        "incl": {"source": "pt", "target": "P3", "object_map": [0], "arrow_map": [0]}
      }
    }

Groupoid constructors (exactly one per entry): ``cayley_table``, ``action``
(``{"set": n, "group": name, "table": [[x.a for each arrow a] for each x]}``),
``pair``, ``loops_of``, ``fibered`` (``[hom1, hom2]``), ``explicit``
(``{"objects": n, "arrows": [[src, tgt], ...], "compose": [[g, h, g o h], ...]}``)
and ``named`` (``cyclic-m``, ``symmetric-n``, ``dihedral-n``, ``quaternion``,
``product-a-b-...``, ``discrete-n``, ``pair-n``, ``point``).  An ``action``
entry also defines the hom ``<name>.projection`` and a ``fibered`` entry the
homs ``<name>.p1`` and ``<name>.p2``.

Homs: ``{"source", "target", "object_map", "arrow_map"}``; either map may be
left out when the target has a single object or a single arrow.

Sheaves: ``{"constant": {"on": name, "rank": r}}`` or
``{"explicit": {"on": name, "ranks": [...], "act": [matrix per arrow]}}``;
entries may be integers or ``"p/q"`` strings.

Exit codes: 0 success, 2 input or flag error, 3 unsupported coefficients.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import cyclic as cyc
from .groupoids import (
    FiniteGroupoid,
    GroupoidError,
    GroupoidHom,
    action_groupoid,
    action_projection,
    cyclic_group,
    dihedral_group,
    discrete_groupoid,
    fibered_product,
    group_from_table,
    loop_groupoid,
    make_groupoid,
    morita_check,
    orbits,
    pair_groupoid,
    point_groupoid,
    product_group,
    quaternion_group,
    symmetric_group,
)
from .homology import cohomology, homology_groups, leray_spectral_sequence
from .linalg import Coefficients
from .sheaves import GSheaf, SheafError, constant_sheaf

SCHEMA = "etalehom.report/1"
EXIT_OK, EXIT_INPUT, EXIT_COEFF = 0, 2, 3
GROUPOID_KINDS = ("cayley_table", "action", "pair", "loops_of", "fibered", "explicit", "named")


class CliError(Exception):
    exit_code = EXIT_INPUT


class ParseError(CliError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


class UnknownReference(ParseError):
    pass


class FlagError(CliError):
    pass


class UnsupportedCoefficients(CliError):
    exit_code = EXIT_COEFF


# ---------------------------------------------------------------------------
# parsing


def _strip_comments(text: str) -> str:
    # keep the line structure so JSON error positions stay correct
    return "\n".join("" if ln.lstrip().startswith("#") else ln for ln in text.split("\n"))


def _position(text: str, path: tuple) -> tuple[int, int]:
    """Best-effort line/column of a key path, found by successive key searches."""
    pos = 0
    for key in path:
        m = re.compile(r'"' + re.escape(str(key)) + r'"').search(text, pos)
        if m is None:
            break
        pos = m.start()
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


@dataclass
class Document:
    """A parsed input file with lazily built groupoids, homs and sheaves."""

    text: str
    data: dict
    groupoids: dict[str, FiniteGroupoid] = field(default_factory=dict)
    homs: dict[str, GroupoidHom] = field(default_factory=dict)
    _building: set = field(default_factory=set)

    def error(self, message: str, *path, cls=ParseError) -> ParseError:
        line, col = _position(self.text, path)
        return cls(message, line, col)

    def section(self, name: str) -> dict:
        sec = self.data.get(name, {})
        if not isinstance(sec, dict):
            raise self.error(f"'{name}' must be an object", name)
        return sec

    # groupoids -------------------------------------------------------------

    def groupoid(self, name: str, *ref_path) -> FiniteGroupoid:
        if name in self.groupoids:
            return self.groupoids[name]
        entries = self.section("groupoids")
        if not isinstance(name, str) or name not in entries:
            raise self.error(f"unknown groupoid {name!r}", *(ref_path or ("groupoids",)), cls=UnknownReference)
        if name in self._building:
            raise self.error(f"groupoid {name!r} is defined in terms of itself", "groupoids", name)
        self._building.add(name)
        try:
            g = self._build_groupoid(name, entries[name])
        except (GroupoidError, ValueError, TypeError, KeyError, IndexError) as exc:
            if isinstance(exc, CliError):
                raise
            raise self.error(f"groupoid {name!r}: {exc}", "groupoids", name) from None
        finally:
            self._building.discard(name)
        object.__setattr__(g, "name", name)
        self.groupoids[name] = g
        return g

    def _build_groupoid(self, name: str, entry: Any) -> FiniteGroupoid:
        here = ("groupoids", name)
        if not isinstance(entry, dict):
            raise self.error("a groupoid entry must be an object", *here)
        kinds = [k for k in entry if k in GROUPOID_KINDS]
        if len(kinds) != 1:
            raise self.error(f"expected exactly one of {', '.join(GROUPOID_KINDS)}", *here)
        kind = kinds[0]
        body = entry[kind]
        if kind == "cayley_table":
            return group_from_table(body, labels=entry.get("labels", ()))
        if kind == "pair":
            return pair_groupoid(_int(self, body, *here, kind))
        if kind == "named":
            return _named(self, body, here)
        if kind == "loops_of":
            return loop_groupoid(self.groupoid(body, *here, kind))
        if kind == "action":
            if not isinstance(body, dict):
                raise self.error("action needs {set, group, table}", *here, kind)
            grp = self.groupoid(body.get("group"), *here, kind, "group")
            n = _int(self, body.get("set"), *here, kind, "set")
            table = body.get("table")
            if grp.n_objects != 1:
                raise self.error("action expects a one-object group", *here, kind, "group")
            if not isinstance(table, list) or len(table) != n:
                raise self.error("action table needs one row per point", *here, kind, "table")
            g = action_groupoid(grp, n, [0] * n, lambda x, a: table[x][a])
            self.homs[f"{name}.projection"] = action_projection(g, grp, [0] * n)
            return g
        if kind == "fibered":
            if not (isinstance(body, list) and len(body) == 2):
                raise self.error("fibered needs a list of two hom names", *here, kind)
            phi = self.hom(body[0], *here, kind)
            psi = self.hom(body[1], *here, kind)
            g, p1, p2 = fibered_product(phi, psi)
            self.homs[f"{name}.p1"], self.homs[f"{name}.p2"] = p1, p2
            return g
        # explicit
        if not isinstance(body, dict):
            raise self.error("explicit needs {objects, arrows, compose}", *here, kind)
        n = _int(self, body.get("objects"), *here, kind, "objects")
        arrows = body.get("arrows", [])
        comp = {(int(a), int(b)): int(c) for a, b, c in body.get("compose", [])}
        src = [int(s) for s, _ in arrows]
        tgt = [int(t) for _, t in arrows]
        for (a, b) in comp:
            if src[a] != tgt[b]:
                raise self.error(f"compose lists a non-composable pair ({a}, {b})", *here, kind, "compose")
        try:
            return make_groupoid(n, src, tgt, comp)
        except KeyError as exc:
            raise self.error(f"compose is missing the composable pair {exc.args[0]}", *here, kind, "compose") from None

    # homs ------------------------------------------------------------------

    def hom(self, name: str, *ref_path) -> GroupoidHom:
        if name in self.homs:
            return self.homs[name]
        entries = self.section("homs")
        if isinstance(name, str) and "." in name and name not in entries:
            base = name.split(".", 1)[0]
            if base in self.section("groupoids"):
                self.groupoid(base, *ref_path)
                if name in self.homs:
                    return self.homs[name]
        if not isinstance(name, str) or name not in entries:
            raise self.error(f"unknown hom {name!r}", *(ref_path or ("homs",)), cls=UnknownReference)
        entry = entries[name]
        here = ("homs", name)
        if not isinstance(entry, dict):
            raise self.error("a hom entry must be an object", *here)
        src = self.groupoid(entry.get("source"), *here, "source")
        tgt = self.groupoid(entry.get("target"), *here, "target")
        om = entry.get("object_map")
        if om is None and tgt.n_objects == 1:
            om = [0] * src.n_objects
        am = entry.get("arrow_map")
        if am is None and tgt.n_arrows == 1:
            am = [0] * src.n_arrows
        if om is None or am is None:
            raise self.error("a hom needs object_map and arrow_map", *here)
        try:
            phi = GroupoidHom(src, tgt, tuple(om), tuple(am), name=name)
        except (GroupoidError, TypeError, ValueError) as exc:
            raise self.error(f"hom {name!r}: {exc}", *here) from None
        self.homs[name] = phi
        return phi

    # sheaves ---------------------------------------------------------------

    def sheaf(self, name: str, coeff: Coefficients) -> GSheaf:
        entries = self.section("sheaves")
        if name not in entries:
            raise self.error(f"unknown sheaf {name!r}", "sheaves", cls=UnknownReference)
        entry = entries[name]
        here = ("sheaves", name)
        if not isinstance(entry, dict) or len(entry) != 1:
            raise self.error("a sheaf entry has one constructor: constant or explicit", *here)
        kind, body = next(iter(entry.items()))
        if kind not in ("constant", "explicit") or not isinstance(body, dict):
            raise self.error("a sheaf entry has one constructor: constant or explicit", *here)
        g = self.groupoid(body.get("on"), *here, kind, "on")
        try:
            if kind == "constant":
                return constant_sheaf(g, coeff, _int(self, body.get("rank", 1), *here, kind, "rank"))
            ranks = tuple(body["ranks"])
            act = tuple(tuple(tuple(_number(v) for v in row) for row in m) for m in body["act"])
            return GSheaf(g, coeff, ranks, act, name=name)
        except (SheafError, KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise self.error(f"sheaf {name!r}: {exc}", *here) from None

    def sheaf_base(self, name: str) -> FiniteGroupoid:
        entry = self.section("sheaves").get(name)
        if not isinstance(entry, dict) or len(entry) != 1:
            raise self.error(f"unknown sheaf {name!r}", "sheaves", cls=UnknownReference)
        body = next(iter(entry.values()))
        return self.groupoid(body.get("on") if isinstance(body, dict) else None, "sheaves", name)

    def main_groupoid(self, requested: str | None) -> FiniteGroupoid:
        if requested:
            return self.groupoid(requested)
        if "main" in self.data:
            return self.groupoid(self.data["main"], "main")
        names = list(self.section("groupoids"))
        if len(names) == 1:
            return self.groupoid(names[0])
        raise FlagError("several groupoids are defined: pick one with --groupoid or a 'main' entry")


def _int(doc: Document, v, *path) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise doc.error(f"expected a nonnegative integer, got {v!r}", *path)
    return v


def _number(v):
    if isinstance(v, bool):
        raise ValueError("booleans are not matrix entries")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        return Fraction(v)
    raise ValueError(f"matrix entries are integers or 'p/q' strings, got {v!r}")


def _named(doc: Document, body, here) -> FiniteGroupoid:
    if not isinstance(body, str):
        raise doc.error("named expects a string", *here, "named")
    parts = body.split("-")
    head, nums = parts[0], parts[1:]
    try:
        args = [int(x) for x in nums]
    except ValueError:
        raise doc.error(f"bad named groupoid {body!r}", *here, "named") from None
    makers = {
        "cyclic": (1, cyclic_group), "symmetric": (1, symmetric_group), "dihedral": (1, dihedral_group),
        "discrete": (1, discrete_groupoid), "pair": (1, pair_groupoid),
        "quaternion": (0, quaternion_group), "point": (0, point_groupoid),
    }
    if head == "product" and args:
        return product_group(*args)
    if head in makers and len(args) == makers[head][0]:
        return makers[head][1](*args)
    raise doc.error(f"unknown named groupoid {body!r}", *here, "named")


def parse_document(text: str) -> Document:
    cleaned = _strip_comments(text)
    try:
        data = json.loads(cleaned)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise ParseError("the document must be a JSON object", 1, 1)
    unknown = set(data) - {"main", "groupoids", "homs", "sheaves", "schema"}
    if unknown:
        key = sorted(unknown)[0]
        line, col = _position(cleaned, (key,))
        raise ParseError(f"unknown top-level key {key!r}", line, col)
    return Document(cleaned, data)


def load(path: str) -> Document:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    return parse_document(text)


# ---------------------------------------------------------------------------
# serialization


def describe_groupoid(g: FiniteGroupoid) -> dict:
    """An ``explicit`` description that reparses to the same groupoid, ids included."""
    return {
        "explicit": {
            "objects": g.n_objects,
            "arrows": [[g.src[a], g.tgt[a]] for a in g.arrows],
            "compose": [[a, b, c] for (a, b), c in sorted(g.table.items())],
        }
    }


def same_groupoid(a: FiniteGroupoid, b: FiniteGroupoid) -> bool:
    """Identical ids: same objects, endpoints and composition table."""
    return (a.n_objects == b.n_objects and a.src == b.src and a.tgt == b.tgt
            and dict(a.table) == dict(b.table))


# ---------------------------------------------------------------------------
# commands


def _coeff(text: str) -> Coefficients:
    try:
        return Coefficients.parse(text)
    except ValueError as exc:
        raise FlagError(str(exc)) from None


def _groupoid_summary(g: FiniteGroupoid) -> dict:
    return {"name": g.name, "objects": g.n_objects, "arrows": g.n_arrows, "orbits": len(orbits(g))}


def _header(command: str, args, coeff: Coefficients | None) -> dict:
    out = {"schema": SCHEMA, "command": command, "input": os.path.basename(args.input)}
    if coeff is not None:
        out["coefficients"] = str(coeff)
    return out


def _sheaf_and_base(doc: Document, args, coeff: Coefficients) -> tuple[FiniteGroupoid, GSheaf]:
    if args.sheaf:
        g = doc.sheaf_base(args.sheaf)
        if args.groupoid and doc.groupoid(args.groupoid) is not g:
            raise FlagError("--sheaf lives on a different groupoid than --groupoid")
        return g, doc.sheaf(args.sheaf, coeff)
    g = doc.main_groupoid(args.groupoid)
    return g, constant_sheaf(g, coeff)


def _check_degree(n: int) -> int:
    if n < 0:
        raise FlagError("--max-degree must be nonnegative")
    return n


def cmd_homology(doc: Document, args) -> dict:
    coeff = _coeff(args.coeff)
    n = _check_degree(args.max_degree)
    g, a = _sheaf_and_base(doc, args, coeff)
    groups = homology_groups(g, a, n)
    out = _header("homology", args, coeff)
    out["groupoid"] = _groupoid_summary(g)
    out["sheaf"] = args.sheaf or "constant"
    out["degrees"] = [{"degree": k, "group": str(h), "betti": h.betti, "torsion": list(h.torsion)}
                      for k, h in enumerate(groups)]
    return out


def cmd_cohomology(doc: Document, args) -> dict:
    coeff = _coeff(args.coeff)
    n = _check_degree(args.max_degree)
    g, a = _sheaf_and_base(doc, args, coeff)
    out = _header("cohomology", args, coeff)
    out["groupoid"] = _groupoid_summary(g)
    out["sheaf"] = args.sheaf or "constant"
    degrees = []
    for k in range(n + 1):
        h = cohomology(g, a, k)
        degrees.append({"degree": k, "group": str(h), "betti": h.betti, "torsion": list(h.torsion)})
    out["degrees"] = degrees
    return out


def cmd_leray(doc: Document, args) -> dict:
    coeff = _coeff(args.coeff)
    if not coeff.is_field:
        raise UnsupportedCoefficients("leray needs field coefficients (Q or Fp)")
    n = _check_degree(args.max_degree)
    phi = doc.hom(args.hom)
    a = doc.sheaf(args.sheaf, coeff) if args.sheaf else constant_sheaf(phi.source, coeff)
    if a.base is not phi.source:
        raise FlagError("the sheaf must live on the source of the hom")
    rep = leray_spectral_sequence(phi, a, n)
    out = _header("leray", args, coeff)
    out["hom"] = {"name": args.hom, "source": _groupoid_summary(phi.source), "target": _groupoid_summary(phi.target)}
    out["e2"] = rep.e2.table(n, n)
    out["e2_matches_derived_sheaves"] = rep.e2_ok
    out["stabilizes_at"] = rep.stabilizes_at
    out["e_infinity"] = rep.e_infinity.table(n, n)
    out["abutment"] = [rep.abutment.get(k, 0) for k in range(n + 1)]
    out["domain_homology"] = [rep.target_dims.get(k, 0) for k in range(n + 1)]
    out["abutment_ok"] = rep.abutment_ok
    return out


def cmd_morita(doc: Document, args) -> dict:
    phi = doc.hom(args.hom)
    v = morita_check(phi)
    out = _header("morita", args, None)
    out["hom"] = {"name": args.hom, "source": _groupoid_summary(phi.source), "target": _groupoid_summary(phi.target)}
    out["verdict"] = v.equivalence
    if not v.equivalence:
        out["failed_condition"] = v.reason
        out["witness"] = list(v.witness)
    return out


def cmd_cyclic(doc: Document, args) -> dict:
    coeff = _coeff(args.coeff)
    if not coeff.is_field:
        raise UnsupportedCoefficients("cyclic homology is computed over a field")
    char0 = coeff.characteristic == 0
    if args.compare_loops and not char0:
        raise UnsupportedCoefficients("--compare-loops needs characteristic 0")
    n = _check_degree(args.max_degree)
    g = doc.main_groupoid(args.groupoid)
    rel = cyc.relative_mixed_complex(g, coeff, n + 1, check=True)
    out = _header("cyclic", args, coeff)
    out["groupoid"] = _groupoid_summary(g)
    out["hochschild"] = cyc.hochschild_dims(rel.complex, n)
    out["cyclic"] = cyc.cyclic_dims(rel.complex, n) if char0 else None
    if args.localize:
        loc = cyc.localize_by_loop_orbit(g, coeff, n, which=args.localize, total=False)
        out["localization"] = {
            "which": args.localize,
            "orbits": [{"orbit": k, "representative": loc.orbit_loops[k][0], "size": len(loc.orbit_loops[k]),
                        "unit": k in loc.unit_orbits, "hochschild": loc.per_orbit[k]} for k in loc.selected],
            "summed": loc.summed(),
            "matches_total": loc.summed() == out["hochschild"] if args.localize == "all-orbits" else None,
        }
    if args.compare_loops:
        cmp = cyc.loop_comparison(g, coeff, n)
        out["loop_comparison"] = {
            "hochschild": cmp.hochschild,
            "loop_homology": cmp.loop_homology,
            "equal": cmp.equal,
        }
    return out


def cmd_export(doc: Document, args) -> dict:
    g = doc.main_groupoid(args.groupoid)
    return {"main": g.name, "groupoids": {g.name: describe_groupoid(g)}}


COMMANDS = {
    "homology": cmd_homology,
    "cohomology": cmd_cohomology,
    "leray": cmd_leray,
    "morita": cmd_morita,
    "cyclic": cmd_cyclic,
    "export": cmd_export,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise FlagError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="etalehom", description="Exact homology of finite groupoids.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("homology", "cohomology"):
        s = sub.add_parser(name, help=f"{name} with coefficients in a sheaf")
        s.add_argument("input")
        s.add_argument("--coeff", default="Z", help="Z, Q or Fp such as F2")
        s.add_argument("--max-degree", type=int, default=4)
        s.add_argument("--sheaf")
        s.add_argument("--groupoid")
    s = sub.add_parser("leray", help="Leray spectral sequence of a hom")
    s.add_argument("input")
    s.add_argument("--hom", required=True)
    s.add_argument("--coeff", default="F2")
    s.add_argument("--max-degree", type=int, default=4)
    s.add_argument("--sheaf")
    s = sub.add_parser("morita", help="is a hom a Morita equivalence")
    s.add_argument("input")
    s.add_argument("--hom", required=True)
    s = sub.add_parser("cyclic", help="Hochschild and cyclic homology of the convolution algebra")
    s.add_argument("input")
    s.add_argument("--coeff", default="Q")
    s.add_argument("--max-degree", type=int, default=4)
    s.add_argument("--localize", choices=("units", "all-orbits"))
    s.add_argument("--compare-loops", action="store_true")
    s.add_argument("--groupoid")
    s = sub.add_parser("export", help="print an explicit description of a groupoid")
    s.add_argument("input")
    s.add_argument("--groupoid")
    return p


def render(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        doc = load(args.input)
        report = COMMANDS[args.command](doc, args)
    except CliError as exc:
        print(f"etalehom: {exc}", file=stderr)
        return exc.exit_code
    stdout.write(render(report))
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
