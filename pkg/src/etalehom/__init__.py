"""Exact homology of finite discrete groupoids with sheaf coefficients.

>>> from etalehom import cyclic_group, constant_sheaf, homology_groups, ZZ
>>> g = cyclic_group(2)
>>> [str(h) for h in homology_groups(g, constant_sheaf(g, ZZ), 4)]
['Z', 'Z/2', '0', 'Z/2', '0']
"""

from .linalg import GF, QQ, ZZ, AbGroupClass, Coefficients, Matrix
from .groupoids import (
    FiniteGroupoid,
    GroupoidHom,
    action_groupoid,
    cyclic_group,
    dihedral_group,
    discrete_groupoid,
    fibered_product,
    group_from_table,
    loop_groupoid,
    make_groupoid,
    morita_check,
    pair_groupoid,
    point_groupoid,
    quaternion_group,
    symmetric_group,
)
from .sheaves import GSheaf, constant_sheaf
from .homology import cohomology, homology_groups, leray_spectral_sequence

__all__ = [
    "GF",
    "QQ",
    "ZZ",
    "AbGroupClass",
    "Coefficients",
    "Matrix",
    "FiniteGroupoid",
    "GroupoidHom",
    "action_groupoid",
    "cyclic_group",
    "dihedral_group",
    "discrete_groupoid",
    "fibered_product",
    "group_from_table",
    "loop_groupoid",
    "make_groupoid",
    "morita_check",
    "pair_groupoid",
    "point_groupoid",
    "quaternion_group",
    "symmetric_group",
    "GSheaf",
    "constant_sheaf",
    "cohomology",
    "homology_groups",
    "leray_spectral_sequence",
]

__version__ = "0.1.0"
