"""Canonical atom ranking and canonical SMILES emission.

Ranking is iterative neighborhood refinement seeded with per-atom invariants.
Before ranking, kekulized 5- and 6-membered rings with alternating bond
orders are rewritten in aromatic form, so the two common ways of drawing the
same ring compare equal (see ``docs/normalization.md`` for the exact rule and
its limits).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace

from .mol import ATOMIC_NUMBER, Bond, BondOrder, Molecule
from .rings import rings_of_size
from .smiles import write_smiles

# elements that may sit in a normalized aromatic ring; the pivot of a
# 5-ring must additionally donate a lone pair
_AROMATIC_CAPABLE = {"B", "C", "N", "O", "P", "S"}
_PIVOT_DONORS = {"N", "O", "S"}


@dataclass(frozen=True)
class CanonicalForm:
    """Canonical SMILES; equal text means equal molecule within the subset."""

    text: str


def _exocyclic_ok(mol: Molecule, atom: int, ring_bond_ids: set[int]) -> bool:
    for b in mol.adjacency()[atom]:
        if b in ring_bond_ids:
            continue
        if mol.bonds[b].order in (BondOrder.DOUBLE, BondOrder.TRIPLE):
            return False
    return True


def _ring_bond_cycle(mol: Molecule, ring: list[int]) -> list[int] | None:
    ids = []
    for k in range(len(ring)):
        b = mol.bond_index_between(ring[k], ring[(k + 1) % len(ring)])
        if b is None:
            return None
        ids.append(b)
    return ids


def _qualifies(mol: Molecule, ring: list[int]) -> list[int] | None:
    """Bond ids of the ring if it should be rewritten aromatic, else None."""
    bond_ids = _ring_bond_cycle(mol, ring)
    if bond_ids is None:
        return None
    orders = [mol.bonds[b].order for b in bond_ids]
    if any(o not in (BondOrder.SINGLE, BondOrder.DOUBLE) for o in orders):
        return None
    if any(mol.atoms[i].element not in _AROMATIC_CAPABLE for i in ring):
        return None
    id_set = set(bond_ids)
    size = len(ring)
    if size == 6:
        if any(orders[k] == orders[(k + 1) % 6] for k in range(6)):
            return None
        if not all(_exocyclic_ok(mol, i, id_set) for i in ring):
            return None
        return bond_ids
    # 5-ring: two non-adjacent double bonds plus a lone-pair-donor pivot
    # (the one atom whose ring bonds are both single), as in furan/pyrrole
    if orders.count(BondOrder.DOUBLE) != 2:
        return None
    pivots = [
        ring[k]
        for k in range(5)
        if orders[k - 1] is BondOrder.SINGLE and orders[k] is BondOrder.SINGLE
    ]
    if len(pivots) != 1:  # adjacent doubles leave zero or two such atoms
        return None
    if mol.atoms[pivots[0]].element not in _PIVOT_DONORS:
        return None
    if not all(_exocyclic_ok(mol, i, id_set) for i in ring):
        return None
    return bond_ids


def normalize_aromaticity(mol: Molecule) -> Molecule:
    """Rewrite qualifying kekulized rings in aromatic form.

    Qualifying rings are judged on the input bond orders, all at once, so a
    fused pair of alternating rings converts even though converting one
    alone would disturb the other's pattern.
    """
    arom_bonds: set[int] = set()
    arom_atoms: set[int] = set()
    for ring in rings_of_size(mol, (5, 6)):
        bond_ids = _qualifies(mol, ring)
        if bond_ids is not None:
            arom_bonds.update(bond_ids)
            arom_atoms.update(ring)
    if not arom_atoms:
        return mol
    atoms = [
        replace(a, aromatic=True) if i in arom_atoms else replace(a)
        for i, a in enumerate(mol.atoms)
    ]
    bonds = [
        Bond(b.a, b.b, BondOrder.AROMATIC) if j in arom_bonds else b
        for j, b in enumerate(mol.bonds)
    ]
    return Molecule(atoms, bonds)


def _initial_keys(mol: Molecule) -> list[tuple]:
    adj = mol.adjacency()
    keys = []
    for i, atom in enumerate(mol.atoms):
        total_h = atom.explicit_h + sum(
            1 for b in adj[i] if mol.atoms[mol.bonds[b].other(i)].element == "H"
        )
        keys.append((
            ATOMIC_NUMBER[atom.element],
            mol.heavy_degree(i),
            atom.formal_charge,
            total_h,
            atom.aromatic,
        ))
    return keys


def _ranks_from_keys(keys: list[tuple]) -> list[int]:
    index = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [index[k] for k in keys]


def _refine(mol: Molecule, ranks: list[int]) -> list[int]:
    """Neighborhood refinement to a fixed point of the class count."""
    adj = mol.adjacency()
    n = mol.num_atoms
    n_classes = len(set(ranks))
    while True:
        keys = []
        for i in range(n):
            neigh = sorted(
                (int(mol.bonds[b].order), ranks[mol.bonds[b].other(i)])
                for b in adj[i]
            )
            keys.append((ranks[i], tuple(neigh)))
        ranks = _ranks_from_keys(keys)
        new_classes = len(set(ranks))
        if new_classes == n_classes:
            return ranks
        n_classes = new_classes


def canonical_ranks(mol: Molecule) -> list[int]:
    """Permutation 0..n-1 stable under input atom reordering.

    Refine until stable; while classes remain ambiguous, promote the
    lowest-index member of the smallest class (ties broken by lower rank)
    ahead of its peers and refine again.
    """
    n = mol.num_atoms
    if n == 0:
        return []
    ranks = _refine(mol, _ranks_from_keys(_initial_keys(mol)))
    while len(set(ranks)) < n:
        counts = Counter(ranks)
        _, target = min((c, r) for r, c in counts.items() if c > 1)
        promoted = min(i for i in range(n) if ranks[i] == target)
        keys = [(r, 0 if i == promoted else 1) for i, r in enumerate(ranks)]
        ranks = _refine(mol, _ranks_from_keys(keys))
    return ranks


def canonicalize(mol: Molecule) -> CanonicalForm:
    norm = normalize_aromaticity(mol)
    return CanonicalForm(write_smiles(norm, canonical_ranks(norm)))
