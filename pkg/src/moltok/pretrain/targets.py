"""Self-supervision targets derived from a (masked) hierarchical graph.

Labels always come from the underlying molecule, not the masked tokens, so
they stay valid as reconstruction targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..hierseg import EdgeKind, HierGraph
from ..molgraph.mol import ELEMENTS

N_ATOM_CLASSES = len(ELEMENTS)
N_BOND_CLASSES = 4  # single, double, triple, aromatic

_ELEMENT_ID = {el: i for i, el in enumerate(ELEMENTS)}


@dataclass
class SslTargets:
    link_pairs: np.ndarray  # (P, 2) int64, all unordered atom pairs i < j
    link_labels: np.ndarray  # (P,) float, 1 where bonded
    masked_atoms: np.ndarray  # (M,) int64, sorted
    atom_labels: np.ndarray  # (M,) int64 element class per masked atom
    masked_bond_ends: np.ndarray  # (K, 2) int64 endpoints of masked bonds
    bond_labels: np.ndarray  # (K,) int64 bond class
    y_an: int  # atom count
    y_bn: int  # bond count
    n_atom_classes: int = N_ATOM_CLASSES
    n_bond_classes: int = N_BOND_CLASSES


def build_targets(hg: HierGraph, masked: frozenset[int] | None = None) -> SslTargets:
    """Targets for one sample; masked bonds are those with >= 1 masked end."""
    mol = hg.mol
    if masked is None:
        masked = hg.masked_atoms
    a = mol.num_atoms
    iu, ju = np.triu_indices(a, k=1)
    pairs = np.stack([iu, ju], axis=1).astype(np.int64)
    bonded = {(min(b.a, b.b), max(b.a, b.b)) for b in mol.bonds}
    labels = np.array(
        [1.0 if (i, j) in bonded else 0.0 for i, j in pairs], dtype=np.float64
    )
    masked_sorted = np.array(sorted(masked), dtype=np.int64)
    atom_labels = np.array(
        [_ELEMENT_ID[mol.atoms[i].element] for i in masked_sorted], dtype=np.int64
    )
    ends = []
    bond_labels = []
    for bond in mol.bonds:
        if bond.a in masked or bond.b in masked:
            ends.append((bond.a, bond.b))
            kind = int(EdgeKind[bond.order.name])
            bond_labels.append(kind)
    return SslTargets(
        link_pairs=pairs,
        link_labels=labels,
        masked_atoms=masked_sorted,
        atom_labels=atom_labels,
        masked_bond_ends=np.array(ends, dtype=np.int64).reshape(-1, 2),
        bond_labels=np.array(bond_labels, dtype=np.int64),
        y_an=a,
        y_bn=mol.num_bonds,
    )
