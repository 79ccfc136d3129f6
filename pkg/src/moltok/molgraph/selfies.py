"""Robust string codec over a small SELFIES-style alphabet.

Alphabet: atom tokens ``[C]`` (optionally prefixed ``-``, ``=``, ``#``) over
the aliphatic uncharged elements, ``[Branch1]``, ``[Ring1]`` (and ``=``/``#``
ring variants), and dedicated index tokens ``[0]`` .. ``[15]``.  Decoding is
total: a bond that would overflow an atom's capacity is shrunk to fit or the
token is skipped, so every alphabet string yields a valence-valid molecule.
Hydrogens are implied; each decoded atom is topped up to its default valence.
See ``docs/selfies.md`` for the full derivation rules.
"""

from __future__ import annotations

from .mol import Atom, Bond, BondOrder, Molecule
from .valence import default_valence


class SelfiesError(ValueError):
    pass


_ATOM_ELEMENTS = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
_ORDER_PREFIX = {"": 1, "-": 1, "=": 2, "#": 3}
_ORDER_TO_BOND = {1: BondOrder.SINGLE, 2: BondOrder.DOUBLE, 3: BondOrder.TRIPLE}
_INDEX_RANGE = 16

ALPHABET: tuple[str, ...] = tuple(
    [f"[{p}{el}]" for el in _ATOM_ELEMENTS for p in ("", "=", "#")]
    + ["[Branch1]", "[Ring1]", "[=Ring1]", "[#Ring1]"]
    + [f"[{i}]" for i in range(_INDEX_RANGE)]
)


def tokenize_selfies(text: str) -> list[str]:
    """Split into bracket tokens; malformed bracketing or unknown tokens raise."""
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos] != "[":
            raise SelfiesError(f"expected '[' at offset {pos}")
        end = text.find("]", pos)
        if end < 0:
            raise SelfiesError(f"unterminated token at offset {pos}")
        tokens.append(text[pos : end + 1])
        pos = end + 1
    known = set(ALPHABET) | {f"[-{el}]" for el in _ATOM_ELEMENTS}
    for tok in tokens:
        if tok not in known:
            raise SelfiesError(f"unknown token {tok}")
    return tokens


def _parse_atom_token(tok: str) -> tuple[int, str] | None:
    body = tok[1:-1]
    prefix = ""
    if body and body[0] in "-=#":
        prefix, body = body[0], body[1:]
    if body in _ATOM_ELEMENTS:
        return _ORDER_PREFIX[prefix], body
    return None


def _index_value(tok: str) -> int | None:
    body = tok[1:-1]
    return int(body) if body.isdigit() else None


def _ring_order(tok: str) -> int | None:
    return {"[Ring1]": 1, "[=Ring1]": 2, "[#Ring1]": 3}.get(tok)


class _Decoder:
    def __init__(self):
        self.atoms: list[str] = []  # element symbols, in derivation order
        self.bonds: list[tuple[int, int, int]] = []  # (a, b, order)
        self.capacity: list[int] = []
        self.bonded: set[tuple[int, int]] = set()

    def add_atom(self, element: str) -> int:
        self.atoms.append(element)
        self.capacity.append(default_valence(element))
        return len(self.atoms) - 1

    def add_bond(self, a: int, b: int, order: int):
        self.bonds.append((a, b, order))
        self.bonded.add((a, b) if a < b else (b, a))
        self.capacity[a] -= order
        self.capacity[b] -= order

    def derive(self, tokens: list[str], head: int | None):
        """Consume tokens, attaching the first derived atom to ``head``."""
        pos = 0
        while pos < len(tokens):
            tok = tokens[pos]
            pos += 1
            atom = _parse_atom_token(tok)
            if atom is not None:
                order, element = atom
                if head is None:
                    head = self.add_atom(element)
                    continue
                order = min(order, self.capacity[head], default_valence(element))
                if order < 1:
                    continue  # head saturated: skip
                new = self.add_atom(element)
                self.add_bond(head, new, order)
                head = new
                continue
            ring = _ring_order(tok)
            if ring is not None:
                if pos >= len(tokens):
                    break
                idx = _index_value(tokens[pos])
                if idx is None:
                    continue  # not followed by an index: skip the ring token
                pos += 1
                if head is None:
                    continue
                target = head - (idx + 1)
                if target < 0:
                    continue
                order = min(ring, self.capacity[head], self.capacity[target])
                key = (target, head)
                if order < 1 or target == head or key in self.bonded:
                    continue
                self.add_bond(target, head, order)
                continue
            if tok == "[Branch1]":
                if pos >= len(tokens):
                    break
                idx = _index_value(tokens[pos])
                if idx is None:
                    continue
                pos += 1
                length = idx + 1
                payload = tokens[pos : pos + length]
                pos += length
                if head is None or self.capacity[head] < 1:
                    continue  # dead branch: payload consumed and dropped
                self.derive(payload, head)
                continue
            # bare index token outside Branch1/Ring1 context: skip
        return head


def decode_selfies(text: str) -> Molecule:
    """Decode any alphabet string; never fails, output is valence-valid."""
    tokens = tokenize_selfies(text)
    dec = _Decoder()
    dec.derive(tokens, None)
    atoms = [
        Atom(el, explicit_h=dec.capacity[i]) for i, el in enumerate(dec.atoms)
    ]
    bonds = [Bond(a, b, _ORDER_TO_BOND[o]) for a, b, o in dec.bonds]
    return Molecule(atoms, bonds)


def encode_selfies(mol: Molecule) -> str:
    """Encode a single-fragment molecule within the subset alphabet.

    Raises SelfiesError for aromatic or charged atoms, elements outside the
    alphabet, hydrogen counts that differ from the decode-side top-up, or
    branches/rings whose index would exceed the index-token range.
    """
    n = mol.num_atoms
    if n == 0:
        return ""
    if len(mol.fragments()) != 1:
        raise SelfiesError("encode requires a single-fragment molecule")
    for i, atom in enumerate(mol.atoms):
        if atom.element not in _ATOM_ELEMENTS:
            raise SelfiesError(f"element {atom.element!r} not in alphabet")
        if atom.aromatic:
            raise SelfiesError("aromatic atoms are outside the alphabet")
        if atom.formal_charge != 0:
            raise SelfiesError("charged atoms are outside the alphabet")
        free = default_valence(atom.element) - (mol.valence_half_units(i) + 1) // 2
        if atom.explicit_h != free:
            raise SelfiesError(
                f"atom {i} carries {atom.explicit_h}H but decoding would "
                f"assign {free}H"
            )
    for bond in mol.bonds:
        if bond.order is BondOrder.AROMATIC:
            raise SelfiesError("aromatic bonds are outside the alphabet")

    adj = mol.adjacency()

    # spanning tree by DFS from atom 0; non-tree bonds become ring closures
    parent_bond = {0: -1}
    tree_children: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    ring_bond_ids: list[int] = []
    visited = [False] * n
    stack = [0]
    visited[0] = True
    while stack:
        v = stack.pop()
        kids = []
        for bi in sorted(adj[v], key=lambda b: mol.bonds[b].other(v)):
            if bi == parent_bond[v] or bi in ring_bond_ids:
                continue
            w = mol.bonds[bi].other(v)
            if visited[w]:
                ring_bond_ids.append(bi)
            else:
                visited[w] = True
                parent_bond[w] = bi
                kids.append((bi, w))
        tree_children[v] = kids
        stack.extend(w for _, w in reversed(kids))

    # token count of each subtree decides which child continues the chain:
    # the heaviest subtree is emitted last, unbranched, keeping branch
    # payloads short enough for single index tokens
    weight = [0] * n

    def fill_weight(v: int) -> int:
        weight[v] = 1 + sum(fill_weight(w) for _, w in tree_children[v])
        return weight[v]

    fill_weight(0)

    order_token = {1: "", 2: "=", 3: "#"}

    def bond_prefix(bi: int) -> str:
        return order_token[mol.bonds[bi].order.half_units // 2]

    ring_bonds_at: dict[int, list[int]] = {}
    for bi in ring_bond_ids:
        bond = mol.bonds[bi]
        ring_bonds_at.setdefault(bond.a, []).append(bi)
        ring_bonds_at.setdefault(bond.b, []).append(bi)
    position: dict[int, int] = {}  # emission order = decode derivation order

    def emit(v: int, via: int) -> list[str]:
        out = [f"[{bond_prefix(via) if via >= 0 else ''}{mol.atoms[v].element}]"]
        position[v] = len(position)
        # back edges always reach an already-emitted ancestor, so each ring
        # bond closes exactly once, at its later endpoint
        closable = [
            bi for bi in ring_bonds_at.get(v, ())
            if mol.bonds[bi].other(v) in position
        ]
        for bi in sorted(closable, key=lambda b: position[mol.bonds[b].other(v)]):
            offset = position[v] - position[mol.bonds[bi].other(v)] - 1
            if offset >= _INDEX_RANGE:
                raise SelfiesError(f"ring closure span {offset + 1} too large")
            out.append(f"[{bond_prefix(bi)}Ring1]")
            out.append(f"[{offset}]")
        kids = sorted(tree_children[v], key=lambda kw: (weight[kw[1]], kw[1]))
        for bi, w in kids[:-1]:
            payload = emit(w, bi)
            if len(payload) > _INDEX_RANGE:
                raise SelfiesError(f"branch of {len(payload)} tokens too large")
            out.append("[Branch1]")
            out.append(f"[{len(payload) - 1}]")
            out.extend(payload)
        if kids:
            out.extend(emit(kids[-1][1], kids[-1][0]))
        return out

    return "".join(emit(0, -1))
