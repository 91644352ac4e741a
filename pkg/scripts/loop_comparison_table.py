"""Print HH_n(Q[G]) next to H_n(loops(G); Q) for small groups and pair groupoids.

usage: python3 scripts/loop_comparison_table.py [max_degree]
"""

import sys

from etalehom.cyclic import loop_comparison
from etalehom.groupoids import groups_up_to_order, pair_groupoid
from etalehom.linalg import QQ


def main(argv):
    top = int(argv[0]) if argv else 3
    corpus = groups_up_to_order(8) + [pair_groupoid(n) for n in range(1, 5)]
    print(f"{'groupoid':<16} {'HH':<18} {'loops':<18} equal")
    for g in corpus:
        r = loop_comparison(g, QQ, top)
        name = g.name or f"{g.n_objects} obj / {g.n_arrows} arr"
        print(f"{name:<16} {str(r.hochschild):<18} {str(r.loop_homology):<18} {r.equal}")


if __name__ == "__main__":
    main(sys.argv[1:])
