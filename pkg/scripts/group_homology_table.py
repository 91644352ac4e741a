"""Integral homology of every group of order at most 8, with the time taken.

usage: python3 scripts/group_homology_table.py [max_degree]
"""

import sys
import time

from etalehom import ZZ, constant_sheaf, homology_groups
from etalehom.groupoids import groups_up_to_order


def main(argv):
    top = int(argv[0]) if argv else 4
    for g in groups_up_to_order(8):
        t = time.perf_counter()
        hs = homology_groups(g, constant_sheaf(g, ZZ), top)
        dt = time.perf_counter() - t
        print(f"{g.name or g.n_arrows:<16} {', '.join(map(str, hs)):<48} {dt:6.2f}s")


if __name__ == "__main__":
    main(sys.argv[1:])
