import io
import json
import os
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from etalehom.cli import describe_groupoid, parse_document, run, same_groupoid
from etalehom.groupoids import (
    action_groupoid, cyclic_group, dihedral_group, disjoint_union, loop_groupoid, pair_groupoid, product,
    quaternion_group, symmetric_group,
)

from cli_corpus import RUNS

TESTS = os.path.dirname(os.path.abspath(__file__))


def cli(argv, cwd=TESTS):
    out, err = io.StringIO(), io.StringIO()
    old = os.getcwd()
    os.chdir(cwd)
    try:
        code = run(argv, out, err)
    finally:
        os.chdir(old)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, text, name="in.json"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_homology_of_cyclic_two():
    code, out, _ = cli(["homology", "fixtures/z2.json", "--coeff", "Z", "--max-degree", "4"])
    assert code == 0
    assert [d["group"] for d in json.loads(out)["degrees"]] == ["Z", "Z/2", "0", "Z/2", "0"]


def test_morita_point_inclusion():
    code, out, _ = cli(["morita", "fixtures/pair3.json", "--hom", "incl"])
    assert code == 0 and json.loads(out)["verdict"] is True


def test_cyclic_pair_two_compare_loops():
    code, out, _ = cli(["cyclic", "fixtures/pair2.json", "--coeff", "Q", "--max-degree", "4", "--compare-loops"])
    rep = json.loads(out)["loop_comparison"]
    assert rep["hochschild"] == rep["loop_homology"] == [1, 0, 0, 0, 0]
    assert rep["equal"] is True


def test_failed_morita_reports_witness():
    code, out, _ = cli(["morita", "fixtures/fibered.json", "--hom", "F.p2"])
    rep = json.loads(out)
    assert rep["verdict"] is False and rep["failed_condition"] and rep["witness"]


def test_leray_requires_field():
    code, _, err = cli(["leray", "fixtures/z4.json", "--hom", "mod2", "--coeff", "Z"])
    assert code == 3 and "field" in err


def test_cyclic_rejects_integers_and_modular_comparison():
    assert cli(["cyclic", "fixtures/z2.json", "--coeff", "Z"])[0] == 3
    assert cli(["cyclic", "fixtures/z2.json", "--coeff", "F2", "--compare-loops"])[0] == 3


def test_json_syntax_error_has_position(tmp_path):
    path = write(tmp_path, '{\n  "groupoids": {\n    "A": {"pair": 2,}\n  }\n}\n')
    code, _, err = cli(["homology", path])
    assert code == 2 and "line 3" in err


def test_comment_lines_keep_positions(tmp_path):
    path = write(tmp_path, '# a comment\n{\n  "groupoids": {\n    "A": {"loops_of": "missing"}\n  }\n}\n')
    code, _, err = cli(["homology", path])
    assert code == 2 and "line 4" in err and "unknown groupoid" in err


def test_unknown_hom_and_bad_flag():
    assert cli(["morita", "fixtures/pair3.json", "--hom", "nope"])[0] == 2
    assert cli(["homology", "fixtures/z2.json", "--coeff", "R"])[0] == 2
    assert cli(["homology", "fixtures/z2.json", "--bogus"])[0] == 2
    assert cli(["homology", "fixtures/does-not-exist.json"])[0] == 2


def test_self_reference_detected(tmp_path):
    path = write(tmp_path, '{"groupoids": {"A": {"loops_of": "B"}, "B": {"loops_of": "A"}}, "main": "A"}')
    code, _, err = cli(["homology", path])
    assert code == 2 and "itself" in err


def test_invalid_table_is_an_input_error(tmp_path):
    path = write(tmp_path, '{"groupoids": {"A": {"cayley_table": [[0, 1], [1, 1]]}}}')
    assert cli(["homology", path])[0] == 2


def test_ambiguous_main(tmp_path):
    path = write(tmp_path, '{"groupoids": {"A": {"pair": 1}, "B": {"pair": 2}}}')
    assert cli(["homology", path])[0] == 2
    assert cli(["homology", path, "--groupoid", "B"])[0] == 0


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "etalehom.cli", "morita", "fixtures/pair3.json", "--hom", "incl"],
                          cwd=TESTS, capture_output=True, text=True)
    assert proc.returncode == 0 and '"verdict": true' in proc.stdout


@pytest.mark.parametrize("stem,argv", RUNS)
def test_golden(stem, argv):
    code, out, err = cli(argv)
    assert code == 0, err
    with open(os.path.join(TESTS, "golden", stem + ".json"), encoding="utf-8") as fh:
        assert out == fh.read()


def _reparse(g):
    doc = parse_document(json.dumps({"groupoids": {"G": describe_groupoid(g)}}))
    return doc.groupoid("G")


constructed = st.sampled_from([
    cyclic_group(4), symmetric_group(3), dihedral_group(4), quaternion_group(), pair_groupoid(3),
    loop_groupoid(pair_groupoid(2)), loop_groupoid(symmetric_group(3)),
    disjoint_union(cyclic_group(2), pair_groupoid(2)), product(cyclic_group(3), pair_groupoid(2)),
    action_groupoid(cyclic_group(4), 4, [0] * 4, lambda x, a: (x - a) % 4),
])


@settings(max_examples=20, deadline=None)
@given(constructed)
def test_export_round_trip_preserves_ids(g):
    assert same_groupoid(_reparse(g), g)
