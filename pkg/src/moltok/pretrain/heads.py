"""Prediction heads for the self-supervised objectives.

One linear head per task: atom type (d -> A), bond type (2d -> L, applied
symmetrically), the two scalar count heads, and the linear map that carries
graph vectors into text space for the contrastive term.  Link prediction is
parameter-free (inner product of node embeddings).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .targets import N_ATOM_CLASSES, N_BOND_CLASSES


@dataclass
class Heads:
    d: int
    d_text: int
    blocks: dict[str, np.ndarray]

    def astype(self, dtype) -> "Heads":
        return Heads(self.d, self.d_text, {k: v.astype(dtype) for k, v in self.blocks.items()})

    def copy(self) -> "Heads":
        return Heads(self.d, self.d_text, {k: v.copy() for k, v in self.blocks.items()})


def init_heads(
    seed: int,
    d: int,
    d_text: int = 64,
    n_atom_classes: int = N_ATOM_CLASSES,
    n_bond_classes: int = N_BOND_CLASSES,
) -> Heads:
    rng = np.random.default_rng(seed)

    def uniform(shape: tuple[int, ...], fan_in: int) -> np.ndarray:
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape).astype(np.float32)

    blocks = {
        "head.atom.w": uniform((d, n_atom_classes), d),
        "head.atom.b": uniform((n_atom_classes,), d),
        "head.bond.w": uniform((2 * d, n_bond_classes), 2 * d),
        "head.bond.b": uniform((n_bond_classes,), 2 * d),
        "head.an.w": uniform((d, 1), d),
        "head.an.b": uniform((1,), d),
        "head.bn.w": uniform((d, 1), d),
        "head.bn.b": uniform((1,), d),
        "head.text.w": uniform((d, d_text), d),
    }
    return Heads(d, d_text, blocks)
