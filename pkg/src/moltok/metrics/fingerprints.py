"""Hashed fingerprints and tanimoto similarity.

Three families: Morgan-style circular environments, linear-path hashing (the
RDK-similarity stand-in), and a fixed 32-key structural screen (the
MACCS-similarity stand-in; key table in docs/keys.md).  All hashing is
64-bit FNV-1a over UTF-8 strings so any implementation can reproduce the
bits exactly.  None of these claim bit compatibility with external toolkits.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..molgraph.mol import ATOMIC_NUMBER, BOND_SYMBOL, BondOrder, Molecule
from ..molgraph.rings import min_ring_size, ring_atoms, rings_of_size
from ..util import fnv1a_64_str


@dataclass(frozen=True)
class Fingerprint:
    bits: frozenset[int]
    nbits: int
    kind: str  # morgan | path | structural_keys
    params: tuple

    def __post_init__(self):
        if any(not 0 <= b < self.nbits for b in self.bits):
            raise ValueError("bit index out of range")


def _total_h(mol: Molecule, i: int) -> int:
    explicit = mol.atoms[i].explicit_h
    neighbors = sum(1 for j in mol.neighbors(i) if mol.atoms[j].element == "H")
    return explicit + neighbors


def _atom_invariant(mol: Molecule, i: int) -> int:
    atom = mol.atoms[i]
    key = (
        ATOMIC_NUMBER[atom.element],
        mol.heavy_degree(i),
        atom.formal_charge,
        _total_h(mol, i),
        int(atom.aromatic),
    )
    return fnv1a_64_str(repr(key))


def morgan_fp(mol: Molecule, radius: int = 2, nbits: int = 2048) -> Fingerprint:
    """Circular environment ids for radii 0..radius, each setting one bit.

    Update rule: the new id hashes the atom's current id followed by the
    ascending-sorted (bond-order code, neighbor id) pairs.  Duplicate
    environments are not removed.
    """
    if radius < 0 or nbits < 1:
        raise ValueError("radius must be >= 0 and nbits >= 1")
    ids = [_atom_invariant(mol, i) for i in range(mol.num_atoms)]
    bits = {v % nbits for v in ids}
    adj = [
        [(int(mol.bonds[bi].order), mol.bonds[bi].other(i)) for bi in mol.adjacency()[i]]
        for i in range(mol.num_atoms)
    ]
    for _ in range(radius):
        new_ids = []
        for i in range(mol.num_atoms):
            pairs = sorted((code, ids[j]) for code, j in adj[i])
            new_ids.append(fnv1a_64_str(repr((ids[i], pairs))))
        ids = new_ids
        bits.update(v % nbits for v in ids)
    return Fingerprint(frozenset(bits), nbits, "morgan", (radius,))


def _path_patterns(mol: Molecule, max_len: int) -> set[str]:
    """Strings for every simple path of 0..max_len bonds.

    A zero-bond path is the bare element symbol.  Longer paths alternate
    element and bond characters; the lexicographically smaller of the two
    read directions is the canonical pattern.
    """
    patterns = {a.element for a in mol.atoms}
    adjacency = mol.adjacency()

    def walk(path_atoms: list[int], forward: str, backward: str) -> None:
        head = path_atoms[-1]
        for bi in adjacency[head]:
            bond = mol.bonds[bi]
            nxt = bond.other(head)
            if nxt in path_atoms:
                continue
            sym = BOND_SYMBOL[bond.order]
            f = forward + sym + mol.atoms[nxt].element
            b = mol.atoms[nxt].element + sym + backward
            patterns.add(min(f, b))
            if len(path_atoms) <= max_len - 1:
                walk(path_atoms + [nxt], f, b)

    for start in range(mol.num_atoms):
        el = mol.atoms[start].element
        walk([start], el, el)
    return patterns


def path_fp(mol: Molecule, max_len: int = 7, nbits: int = 2048) -> Fingerprint:
    if max_len < 0 or nbits < 1:
        raise ValueError("max_len must be >= 0 and nbits >= 1")
    bits = {fnv1a_64_str(p) % nbits for p in _path_patterns(mol, max_len)}
    return Fingerprint(frozenset(bits), nbits, "path", (max_len,))


def _has_bond(mol: Molecule, order: BondOrder, elems: tuple[str, str] | None = None) -> bool:
    for bond in mol.bonds:
        if bond.order is not order:
            continue
        if elems is None:
            return True
        pair = (mol.atoms[bond.a].element, mol.atoms[bond.b].element)
        if pair == elems or pair == elems[::-1]:
            return True
    return False


def _has_single(mol: Molecule, elems: tuple[str, str]) -> bool:
    return _has_bond(mol, BondOrder.SINGLE, elems) or _has_bond(
        mol, BondOrder.AROMATIC, elems
    )


def _element_present(mol: Molecule, *symbols: str) -> bool:
    return any(a.element in symbols for a in mol.atoms)


def _cyclomatic(mol: Molecule) -> int:
    return mol.num_bonds - mol.num_atoms + len(mol.fragments())


def _heavy_atoms(mol: Molecule) -> int:
    return sum(1 for a in mol.atoms if a.element != "H")


def _hetero_fraction(mol: Molecule) -> float:
    heavy = [a for a in mol.atoms if a.element != "H"]
    if not heavy:
        return 0.0
    return sum(1 for a in heavy if a.element != "C") / len(heavy)


def _ring_chain_attachment(mol: Molecule) -> bool:
    ring = ring_atoms(mol)
    return any(
        ((b.a in ring) != (b.b in ring))
        and mol.atoms[b.a].element != "H"
        and mol.atoms[b.b].element != "H"
        for b in mol.bonds
    )


def _x_with_h(mol: Molecule, element: str) -> bool:
    return any(
        a.element == element and (a.explicit_h > 0 or _total_h(mol, i) > 0)
        for i, a in enumerate(mol.atoms)
    )


def _max_heavy_degree(mol: Molecule) -> int:
    degs = [mol.heavy_degree(i) for i in range(mol.num_atoms)]
    return max(degs, default=0)


def _has_methyl(mol: Molecule) -> bool:
    return any(
        a.element == "C" and mol.heavy_degree(i) == 1 and _total_h(mol, i) == 3
        for i, a in enumerate(mol.atoms)
    )


# key index -> (label, predicate); the fingerprint bit is the index
STRUCTURAL_KEYS: tuple[tuple[str, object], ...] = (
    ("has C", lambda m: _element_present(m, "C")),
    ("has N", lambda m: _element_present(m, "N")),
    ("has O", lambda m: _element_present(m, "O")),
    ("has S", lambda m: _element_present(m, "S")),
    ("has P", lambda m: _element_present(m, "P")),
    ("has B", lambda m: _element_present(m, "B")),
    ("has halogen", lambda m: _element_present(m, "F", "Cl", "Br", "I")),
    ("has F", lambda m: _element_present(m, "F")),
    ("has Cl or Br or I", lambda m: _element_present(m, "Cl", "Br", "I")),
    ("has positive charge", lambda m: any(a.formal_charge > 0 for a in m.atoms)),
    ("has negative charge", lambda m: any(a.formal_charge < 0 for a in m.atoms)),
    ("has aromatic atom", lambda m: any(a.aromatic for a in m.atoms)),
    ("has ring", lambda m: _cyclomatic(m) >= 1),
    ("has >= 2 rings", lambda m: _cyclomatic(m) >= 2),
    ("has 6-ring", lambda m: any(len(r) == 6 for r in rings_of_size(m, (6,)))),
    ("has 5-ring", lambda m: any(len(r) == 5 for r in rings_of_size(m, (5,)))),
    ("has small ring (3 or 4)", lambda m: any(s in (3, 4) for s in min_ring_size(m).values())),
    ("has double bond", lambda m: _has_bond(m, BondOrder.DOUBLE)),
    ("has triple bond", lambda m: _has_bond(m, BondOrder.TRIPLE)),
    ("has C=O", lambda m: _has_bond(m, BondOrder.DOUBLE, ("C", "O"))),
    ("has C=C", lambda m: _has_bond(m, BondOrder.DOUBLE, ("C", "C"))),
    ("has C#N", lambda m: _has_bond(m, BondOrder.TRIPLE, ("C", "N"))),
    ("has O-H", lambda m: _x_with_h(m, "O")),
    ("has N-H", lambda m: _x_with_h(m, "N")),
    ("has C-N link", lambda m: _has_single(m, ("C", "N"))),
    ("has C-O link", lambda m: _has_single(m, ("C", "O"))),
    ("has C-S link", lambda m: _has_single(m, ("C", "S"))),
    ("has ring-chain attachment", _ring_chain_attachment),
    ("heavy atoms >= 10", lambda m: _heavy_atoms(m) >= 10),
    ("heavy atoms >= 20", lambda m: _heavy_atoms(m) >= 20),
    ("hetero fraction > 0.3", lambda m: _hetero_fraction(m) > 0.3),
    ("has methyl or degree >= 4", lambda m: _has_methyl(m) or _max_heavy_degree(m) >= 4),
)

assert len(STRUCTURAL_KEYS) == 32


def structural_keys_fp(mol: Molecule) -> Fingerprint:
    """32 fixed boolean substructure/size screens; bit i is key i."""
    bits = frozenset(
        i for i, (_, predicate) in enumerate(STRUCTURAL_KEYS) if predicate(mol)
    )
    return Fingerprint(bits, 32, "structural_keys", ())


def tanimoto(f1: Fingerprint, f2: Fingerprint) -> float:
    """|A and B| / |A or B|; 1.0 when both bit sets are empty."""
    if (f1.kind, f1.params, f1.nbits) != (f2.kind, f2.params, f2.nbits):
        raise ValueError(
            f"fingerprint mismatch: {(f1.kind, f1.params, f1.nbits)} "
            f"vs {(f2.kind, f2.params, f2.nbits)}"
        )
    union = len(f1.bits | f2.bits)
    if union == 0:
        return 1.0
    return len(f1.bits & f2.bits) / union
