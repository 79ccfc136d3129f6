"""Molecular data model, SMILES/SELFIES codecs, and canonicalization."""

from .mol import (
    ATOMIC_NUMBER,
    ELEMENTS,
    Atom,
    Bond,
    BondOrder,
    Molecule,
    permute_molecule,
)
from .valence import (
    ALLOWED_VALENCE,
    ValenceViolation,
    default_valence,
    validate_valence,
)
from .rings import min_ring_size, ring_atoms, ring_bonds, rings_of_size
from .smiles import SmilesError, parse_smiles, write_smiles
from .canon import CanonicalForm, canonical_ranks, canonicalize, normalize_aromaticity
from .selfies import ALPHABET, SelfiesError, decode_selfies, encode_selfies, tokenize_selfies
from .iso import is_isomorphic
from .randmol import random_molecule, random_molecules

__all__ = [
    "ATOMIC_NUMBER",
    "ELEMENTS",
    "ALPHABET",
    "ALLOWED_VALENCE",
    "Atom",
    "Bond",
    "BondOrder",
    "CanonicalForm",
    "Molecule",
    "SelfiesError",
    "SmilesError",
    "ValenceViolation",
    "canonical_ranks",
    "canonicalize",
    "decode_selfies",
    "default_valence",
    "encode_selfies",
    "is_isomorphic",
    "min_ring_size",
    "normalize_aromaticity",
    "parse_smiles",
    "permute_molecule",
    "random_molecule",
    "random_molecules",
    "ring_atoms",
    "ring_bonds",
    "rings_of_size",
    "tokenize_selfies",
    "validate_valence",
    "write_smiles",
]
