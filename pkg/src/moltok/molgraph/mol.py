"""Molecular graph data model: atoms, bonds, molecules."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


ELEMENTS = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I", "H")

ATOMIC_NUMBER = {
    "H": 1, "B": 5, "C": 6, "N": 7, "O": 8, "F": 9,
    "P": 15, "S": 16, "Cl": 17, "Br": 35, "I": 53,
}


class BondOrder(enum.IntEnum):
    """Bond order codes; AROMATIC contributes 1.5 to valence sums."""

    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def half_units(self) -> int:
        """Bond order in half-units (single=2, aromatic=3), for exact sums."""
        if self is BondOrder.AROMATIC:
            return 3
        return 2 * int(self)


BOND_SYMBOL = {
    BondOrder.SINGLE: "-",
    BondOrder.DOUBLE: "=",
    BondOrder.TRIPLE: "#",
    BondOrder.AROMATIC: ":",
}


@dataclass
class Atom:
    """One heavy (or explicit hydrogen) atom.

    ``explicit_h`` is the number of attached hydrogens that are not graph
    nodes, whether written in brackets or derived from the valence table.
    """

    element: str
    formal_charge: int = 0
    aromatic: bool = False
    explicit_h: int = 0

    def __post_init__(self):
        if self.element not in ELEMENTS:
            raise ValueError(f"unsupported element: {self.element!r}")
        if not -4 <= self.formal_charge <= 4:
            raise ValueError(f"formal charge out of range: {self.formal_charge}")
        if self.explicit_h < 0:
            raise ValueError("explicit_h must be non-negative")

    def label(self) -> tuple:
        """Identity tuple used by the isomorphism check and canonical ranks."""
        return (self.element, self.formal_charge, self.aromatic, self.explicit_h)


@dataclass(frozen=True)
class Bond:
    """Undirected bond between two atom indices."""

    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("bond endpoints must be distinct")

    def key(self) -> tuple[int, int]:
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)

    def other(self, idx: int) -> int:
        if idx == self.a:
            return self.b
        if idx == self.b:
            return self.a
        raise ValueError(f"atom {idx} is not an endpoint of this bond")


@dataclass
class Molecule:
    """A molecular graph; fragments (connected components) are derived."""

    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)

    def __post_init__(self):
        self._adj: list[list[int]] | None = None
        self._validate()

    def _validate(self):
        n = len(self.atoms)
        seen = set()
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise ValueError(f"bond endpoint out of range: {bond}")
            key = bond.key()
            if key in seen:
                raise ValueError(f"duplicate bond between atoms {key}")
            seen.add(key)
            if bond.order is BondOrder.AROMATIC:
                if not (self.atoms[bond.a].aromatic and self.atoms[bond.b].aromatic):
                    raise ValueError(
                        f"aromatic bond {key} between non-aromatic atoms"
                    )

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)

    def adjacency(self) -> list[list[int]]:
        """Per-atom list of incident bond indices (cached)."""
        if self._adj is None:
            adj = [[] for _ in self.atoms]
            for i, bond in enumerate(self.bonds):
                adj[bond.a].append(i)
                adj[bond.b].append(i)
            self._adj = adj
        return self._adj

    def neighbors(self, idx: int) -> list[int]:
        """Neighbor atom indices of ``idx``, in bond-list order."""
        return [self.bonds[b].other(idx) for b in self.adjacency()[idx]]

    def heavy_degree(self, idx: int) -> int:
        """Number of non-hydrogen neighbors."""
        return sum(1 for j in self.neighbors(idx) if self.atoms[j].element != "H")

    def bond_between(self, i: int, j: int) -> Bond | None:
        b = self.bond_index_between(i, j)
        return None if b is None else self.bonds[b]

    def bond_index_between(self, i: int, j: int) -> int | None:
        for b in self.adjacency()[i]:
            if self.bonds[b].other(i) == j:
                return b
        return None

    def valence_half_units(self, idx: int) -> int:
        """Sum of incident bond orders in half-units (aromatic counts 3)."""
        return sum(self.bonds[b].order.half_units for b in self.adjacency()[idx])

    def fragments(self) -> list[list[int]]:
        """Connected components as sorted atom-index lists, ordered by first atom."""
        seen = [False] * self.num_atoms
        comps = []
        for start in range(self.num_atoms):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in self.neighbors(v):
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            comps.append(sorted(comp))
        return comps


def permute_molecule(mol: Molecule, perm: list[int]) -> Molecule:
    """Relabel atoms so new index ``perm[i]`` holds old atom ``i``.

    ``perm`` must be a permutation of 0..n-1.  Bonds keep their orders; the
    bond list is re-sorted by the new endpoint keys so the result does not
    leak the original ordering.
    """
    n = mol.num_atoms
    if sorted(perm) != list(range(n)):
        raise ValueError("perm is not a permutation of atom indices")
    atoms: list[Atom] = [None] * n  # type: ignore[list-item]
    for old, new in enumerate(perm):
        src = mol.atoms[old]
        atoms[new] = Atom(src.element, src.formal_charge, src.aromatic, src.explicit_h)
    bonds = [Bond(perm[b.a], perm[b.b], b.order) for b in mol.bonds]
    bonds.sort(key=lambda b: b.key())
    return Molecule(atoms, bonds)
