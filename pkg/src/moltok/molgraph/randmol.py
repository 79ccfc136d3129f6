"""Seeded random generation of valence-valid molecules.

Grows a bonded tree under per-atom capacity accounting, optionally seeded
with an aromatic 6-ring, then closes a few extra ring bonds.  Every atom is
topped up with hydrogens to its default valence, so the output always passes
validate_valence; tests lean on that to fuzz downstream code.
"""

from __future__ import annotations

import numpy as np

from .mol import Atom, Bond, BondOrder, Molecule
from .valence import default_valence

_ELEMENTS = ("C", "N", "O", "S", "F", "Cl", "P", "Br", "B")
_ELEMENT_P = (0.60, 0.12, 0.12, 0.05, 0.04, 0.03, 0.02, 0.01, 0.01)
_ORDER_P = {1: 0.75, 2: 0.20, 3: 0.05}


def random_molecule(
    rng: np.random.Generator,
    n_heavy: int = 12,
    ring_tries: int = 2,
    benzene_prob: float = 0.3,
) -> Molecule:
    elements: list[str] = []
    aromatic: list[bool] = []
    bonds: list[tuple[int, int, BondOrder]] = []
    capacity: list[int] = []

    def add_atom(element: str, arom: bool = False) -> int:
        elements.append(element)
        aromatic.append(arom)
        capacity.append(default_valence(element))
        return len(elements) - 1

    def add_bond(a: int, b: int, order: BondOrder):
        bonds.append((a, b, order))
        used = (order.half_units + 1) // 2  # aromatic bond books 2 per pair
        capacity[a] -= used
        capacity[b] -= used

    if n_heavy >= 6 and rng.random() < benzene_prob:
        ring = [add_atom("C", arom=True) for _ in range(6)]
        for k in range(6):
            add_bond(ring[k], ring[(k + 1) % 6], BondOrder.AROMATIC)
        # aromatic ring: 3 half-bond pairs round to 3 of carbon's 4
        for i in ring:
            capacity[i] += 1

    while len(elements) < n_heavy:
        element = str(rng.choice(_ELEMENTS, p=_ELEMENT_P))
        if not elements:
            add_atom(element)
            continue
        open_atoms = [i for i, c in enumerate(capacity) if c >= 1]
        if not open_atoms:
            break
        parent = int(open_atoms[rng.integers(len(open_atoms))])
        new = add_atom(element)
        max_order = min(capacity[parent], capacity[new], 3)
        if aromatic[parent]:
            max_order = 1  # keep normalized rings intact
        orders = [o for o in (1, 2, 3) if o <= max_order]
        weights = np.array([_ORDER_P[o] for o in orders])
        order = int(rng.choice(orders, p=weights / weights.sum()))
        add_bond(parent, new, BondOrder(order))

    taken = {(min(a, b), max(a, b)) for a, b, _ in bonds}
    for _ in range(ring_tries):
        open_atoms = [
            i for i, c in enumerate(capacity) if c >= 1 and not aromatic[i]
        ]
        if len(open_atoms) < 2:
            break
        a, b = (int(x) for x in rng.choice(open_atoms, size=2, replace=False))
        key = (min(a, b), max(a, b))
        if key in taken:
            continue
        taken.add(key)
        add_bond(a, b, BondOrder.SINGLE)

    atoms = [
        Atom(el, aromatic=ar, explicit_h=max(0, capacity[i]))
        for i, (el, ar) in enumerate(zip(elements, aromatic))
    ]
    return Molecule(atoms, [Bond(a, b, o) for a, b, o in bonds])


def random_molecules(
    count: int,
    seed: int,
    min_heavy: int = 3,
    max_heavy: int = 14,
    **kwargs,
) -> list[Molecule]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(min_heavy, max_heavy + 1))
        out.append(random_molecule(rng, n_heavy=n, **kwargs))
    return out
