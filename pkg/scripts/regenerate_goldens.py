"""Rewrite tests/golden/*.json from the CLI corpus.  Run after a deliberate report change."""

import io
import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
TESTS = os.path.join(HERE, "..", "tests")
sys.path.insert(0, TESTS)

from cli_corpus import RUNS  # noqa: E402
from etalehom.cli import run  # noqa: E402


def main():
    os.chdir(TESTS)
    os.makedirs("golden", exist_ok=True)
    for stem, argv in RUNS:
        out, err = io.StringIO(), io.StringIO()
        code = run(argv, out, err)
        if code:
            raise SystemExit(f"{stem}: exit {code}: {err.getvalue()}")
        with open(os.path.join("golden", stem + ".json"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(out.getvalue())
        print(f"wrote golden/{stem}.json")


if __name__ == "__main__":
    main()
