"""Valence bookkeeping: the documented allowed-valence table and checks.

The rules here are versioned (see docs/normalization.md, rules v1):

* An atom's valence is the sum of its bond orders, with aromatic bonds
  counting 1.5, the total rounded half-to-even, plus its attached hydrogens.
* The allowed set depends on (element, formal charge); combinations absent
  from the table are violations.
* Aromatic N/O/S/P atoms may donate a lone pair into the ring, which the
  1.5-per-aromatic-bond accounting overstates by one.  For those atoms a
  valence of v is also accepted when v-1 is in the allowed set.
"""

from __future__ import annotations

from dataclasses import dataclass

from .mol import Molecule

# (element, formal_charge) -> allowed total valences.
ALLOWED_VALENCE: dict[tuple[str, int], tuple[int, ...]] = {
    ("B", 0): (3,),
    ("B", -1): (4,),
    ("C", 0): (4,),
    ("C", 1): (3,),
    ("C", -1): (3,),
    ("N", 0): (3,),
    ("N", 1): (4,),
    ("N", -1): (2,),
    ("O", 0): (2,),
    ("O", 1): (3,),
    ("O", -1): (1,),
    ("P", 0): (3, 5),
    ("P", 1): (4,),
    ("S", 0): (2, 4, 6),
    ("S", 1): (3, 5),
    ("S", -1): (1,),
    ("F", 0): (1,),
    ("F", -1): (0,),
    ("Cl", 0): (1,),
    ("Cl", -1): (0,),
    ("Br", 0): (1,),
    ("Br", -1): (0,),
    ("I", 0): (1,),
    ("I", -1): (0,),
    ("H", 0): (1,),
    ("H", 1): (0,),
    ("H", -1): (0,),
}

# Elements whose aromatic form may contribute a lone pair instead of a
# ring double bond (pyrrole N, furan O, thiophene S).
LONE_PAIR_DONORS = frozenset({"N", "O", "S", "P"})


@dataclass(frozen=True)
class ValenceViolation:
    atom_index: int
    element: str
    formal_charge: int
    observed: int
    allowed: tuple[int, ...]

    def __str__(self) -> str:
        allowed = ",".join(map(str, self.allowed)) if self.allowed else "none"
        return (
            f"atom {self.atom_index} ({self.element}{self.formal_charge:+d}): "
            f"valence {self.observed} not in {{{allowed}}}"
        )


def rounded_bond_valence(mol: Molecule, idx: int) -> int:
    """Bond-order sum with aromatic=1.5, rounded half-to-even."""
    half = mol.valence_half_units(idx)
    q, r = divmod(half, 2)
    if r == 0:
        return q
    # .5 remainder: round half to even
    return q + (q & 1)

def observed_valence(mol: Molecule, idx: int) -> int:
    return rounded_bond_valence(mol, idx) + mol.atoms[idx].explicit_h


def validate_valence(mol: Molecule) -> list[ValenceViolation]:
    """Check every atom against the allowed-valence table.

    Returns violations as data; an empty list means the molecule is valid.
    """
    violations = []
    for idx, atom in enumerate(mol.atoms):
        allowed = ALLOWED_VALENCE.get((atom.element, atom.formal_charge), ())
        v = observed_valence(mol, idx)
        ok = v in allowed
        if not ok and atom.aromatic and atom.element in LONE_PAIR_DONORS:
            ok = (v - 1) in allowed
        if not ok:
            violations.append(
                ValenceViolation(idx, atom.element, atom.formal_charge, v, allowed)
            )
    return violations


def default_valence(element: str, charge: int = 0) -> int:
    """Lowest allowed valence for the element/charge, or 0 if unknown."""
    allowed = ALLOWED_VALENCE.get((element, charge), ())
    return min(allowed) if allowed else 0


def implicit_h_count(element: str, charge: int, aromatic: bool,
                     bond_half_units: int, n_aromatic_bonds: int) -> int:
    """Hydrogens to add to an organic-subset atom written without brackets.

    For aliphatic atoms: the smallest allowed valence that fits the rounded-up
    bond sum, minus that sum.  For aromatic atoms a sigma-frame count is used:
    each aromatic bond counts 1 and elements that can carry the ring double
    bond (B, C, N, P) are charged one extra; O and S donate a lone pair
    instead.  Matches common SMILES readers on benzene, pyridine, furan,
    thiophene, and fused aromatics.
    """
    allowed = ALLOWED_VALENCE.get((element, charge), ())
    if not allowed:
        return 0
    if aromatic:
        other_half = bond_half_units - 3 * n_aromatic_bonds
        need = n_aromatic_bonds + (other_half + 1) // 2
        if element not in ("O", "S"):
            need += 1
    else:
        need = (bond_half_units + 1) // 2
    fitting = [v for v in allowed if v >= need]
    return (min(fitting) - need) if fitting else 0
