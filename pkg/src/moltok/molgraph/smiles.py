"""SMILES parsing and writing for the supported grammar subset.

Accepted: organic-subset atoms, aromatic lowercase atoms, bracket atoms with
H-count and charge, branches, ring closures (``1``..``9`` and ``%nn``), bond
symbols ``- = # :``, and dot-separated fragments.  Stereo markers (``/ \\ @``)
are accepted and discarded.  Isotopes and wildcard atoms are rejected.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

from .mol import Atom, Bond, BondOrder, Molecule, ELEMENTS
from .valence import implicit_h_count


class SmilesError(ValueError):
    """Parse failure; ``offset`` is the byte position in the input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_ORGANIC = {"b", "c", "n", "o", "p", "s"}

_BOND_CHARS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
}


@dataclass
class _PendingRing:
    atom: int
    order: BondOrder | None
    offset: int


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[Atom] = []
        self.bonds: list[Bond] = []
        self.bond_keys: set[tuple[int, int]] = set()
        self.rings: dict[int, _PendingRing] = {}
        # running bond totals per atom, needed for implicit-H assignment
        self.arom_bonds: list[int] = []
        self.half_units: list[int] = []
        self.implicit: list[bool] = []

    def error(self, message: str, offset: int | None = None):
        raise SmilesError(message, self.pos if offset is None else offset)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self) -> str:
        if self.pos >= len(self.text):
            self.error("unexpected end of input")
        ch = self.text[self.pos]
        self.pos += 1
        return ch

    # -- atoms ------------------------------------------------------------

    def parse_atom(self) -> int:
        ch = self.peek()
        if ch == "[":
            return self.parse_bracket_atom()
        start = self.pos
        if ch.isupper():
            two = self.text[self.pos : self.pos + 2]
            if two in ORGANIC_SUBSET:
                self.pos += 2
                return self.add_atom(Atom(two), implicit=True)
            if ch in ORGANIC_SUBSET:
                self.pos += 1
                return self.add_atom(Atom(ch), implicit=True)
            self.error(f"unknown element {ch!r}", start)
        if ch in AROMATIC_ORGANIC:
            self.pos += 1
            return self.add_atom(Atom(ch.upper(), aromatic=True), implicit=True)
        self.error(f"expected atom, found {ch!r}", start)
        raise AssertionError  # unreachable

    def parse_bracket_atom(self) -> int:
        start = self.pos
        self.take()  # '['
        if self.peek().isdigit():
            self.error("isotopes are not supported", self.pos)
        first = self.peek()
        if not first.isalpha():
            self.error("expected element symbol in brackets", self.pos)
        aromatic = first.islower()
        symbol = self.take()
        if not aromatic and self.peek().islower():
            symbol += self.take()
        element = symbol.capitalize() if aromatic else symbol
        if element not in ELEMENTS or (aromatic and len(symbol) > 1):
            self.error(f"unknown element {symbol!r}", start + 1)
        while self.peek() == "@":  # chirality: accepted and discarded
            self.take()
        h_count = 0
        if self.peek() == "H":
            self.take()
            h_count = 1
            if self.peek().isdigit():
                h_count = int(self.take())
        charge = 0
        if self.peek() in ("+", "-"):
            sign = 1 if self.take() == "+" else -1
            if self.peek().isdigit():
                charge = sign * int(self.take())
            else:
                charge = sign
                sym = "+" if sign > 0 else "-"
                while self.peek() == sym:
                    self.take()
                    charge += sign
        if self.peek() != "]":
            self.error("expected ']' to close bracket atom", self.pos)
        self.take()
        return self.add_atom(
            Atom(element, formal_charge=charge, aromatic=aromatic, explicit_h=h_count),
            implicit=False,
        )

    def add_atom(self, atom: Atom, implicit: bool) -> int:
        self.atoms.append(atom)
        self.arom_bonds.append(0)
        self.half_units.append(0)
        self.implicit.append(implicit)
        return len(self.atoms) - 1

    # -- bonds ------------------------------------------------------------

    def add_bond(self, a: int, b: int, order: BondOrder | None, offset: int):
        if order is None:
            if self.atoms[a].aromatic and self.atoms[b].aromatic:
                order = BondOrder.AROMATIC
            else:
                order = BondOrder.SINGLE
        if order is BondOrder.AROMATIC and not (
            self.atoms[a].aromatic and self.atoms[b].aromatic
        ):
            self.error("aromatic bond between non-aromatic atoms", offset)
        if a == b:
            self.error("ring closure bonds an atom to itself", offset)
        key = (a, b) if a < b else (b, a)
        if key in self.bond_keys:
            self.error(f"duplicate bond between atoms {key}", offset)
        self.bond_keys.add(key)
        self.bonds.append(Bond(a, b, order))
        for idx in (a, b):
            self.half_units[idx] += order.half_units
            if order is BondOrder.AROMATIC:
                self.arom_bonds[idx] += 1

    def parse_ring_closure(self, prev: int, order: BondOrder | None):
        offset = self.pos
        ch = self.take()
        if ch == "%":
            digits = self.text[self.pos : self.pos + 2]
            if len(digits) < 2 or not digits.isdigit():
                self.error("'%' ring closure needs two digits", offset)
            num = int(digits)
            self.pos += 2
        else:
            num = int(ch)
        pending = self.rings.pop(num, None)
        if pending is None:
            self.rings[num] = _PendingRing(prev, order, offset)
            return
        if pending.order is not None and order is not None and pending.order != order:
            self.error(f"conflicting bond orders for ring closure {num}", offset)
        self.add_bond(pending.atom, prev, order or pending.order, offset)

    # -- main loop ----------------------------------------------------------

    def parse(self) -> Molecule:
        text = self.text
        if not text:
            self.error("empty SMILES", 0)
        prev: int | None = None
        order: BondOrder | None = None
        order_offset = 0
        branch_stack: list[tuple[int, int]] = []  # (return atom, '(' offset)
        while self.pos < len(text):
            ch = self.peek()
            if ch in _BOND_CHARS:
                if order is not None:
                    self.error("two bond symbols in a row", self.pos)
                order = _BOND_CHARS[ch]
                order_offset = self.pos
                self.take()
            elif ch in "/\\":
                if order is not None:
                    self.error("two bond symbols in a row", self.pos)
                order = BondOrder.SINGLE  # stereo marker: plain single bond
                order_offset = self.pos
                self.take()
            elif ch == "(":
                if prev is None:
                    self.error("branch before any atom", self.pos)
                if order is not None:
                    self.error("dangling bond symbol before branch", order_offset)
                branch_stack.append((prev, self.pos))
                self.take()
            elif ch == ")":
                if not branch_stack:
                    self.error("unmatched ')'", self.pos)
                if order is not None:
                    self.error("dangling bond symbol before ')'", order_offset)
                prev, _ = branch_stack.pop()
                self.take()
            elif ch == ".":
                if branch_stack:
                    self.error("'.' inside a branch is not supported", self.pos)
                if order is not None:
                    self.error("bond symbol before '.'", order_offset)
                if prev is None:
                    self.error("'.' before any atom", self.pos)
                prev = None
                self.take()
            elif ch.isdigit() or ch == "%":
                if prev is None:
                    self.error("ring closure before any atom", self.pos)
                self.parse_ring_closure(prev, order)
                order = None
            else:
                at_offset = self.pos
                idx = self.parse_atom()
                if prev is not None:
                    self.add_bond(prev, idx, order, at_offset)
                elif order is not None:
                    self.error("bond symbol before first atom", order_offset)
                prev = idx
                order = None
        if branch_stack:
            self.error("unmatched '('", branch_stack[-1][1])
        if self.rings:
            num, pending = next(iter(self.rings.items()))
            self.error(f"unmatched ring closure {num}", pending.offset)
        if order is not None:
            self.error("dangling bond symbol at end of input", order_offset)
        if prev is None:
            self.error("no atoms parsed", 0)
        self.assign_implicit_h()
        return Molecule(self.atoms, self.bonds)

    def assign_implicit_h(self):
        for i, atom in enumerate(self.atoms):
            if not self.implicit[i]:
                continue
            atom.explicit_h = implicit_h_count(
                atom.element, atom.formal_charge, atom.aromatic,
                self.half_units[i], self.arom_bonds[i],
            )


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a Molecule.

    Raises SmilesError (with byte offset) on malformed input.
    """
    return _Parser(text.strip()).parse()


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------


def _atom_token(mol: Molecule, idx: int) -> str:
    atom = mol.atoms[idx]
    symbol = atom.element.lower() if atom.aromatic else atom.element
    bare_ok = (
        atom.element in ORGANIC_SUBSET
        and atom.formal_charge == 0
        and (not atom.aromatic or symbol in AROMATIC_ORGANIC)
    )
    if bare_ok:
        n_arom = sum(
            1 for b in mol.adjacency()[idx]
            if mol.bonds[b].order is BondOrder.AROMATIC
        )
        recomputed = implicit_h_count(
            atom.element, 0, atom.aromatic, mol.valence_half_units(idx), n_arom
        )
        if recomputed == atom.explicit_h:
            return symbol
    token = symbol
    if atom.explicit_h == 1:
        token += "H"
    elif atom.explicit_h > 1:
        token += f"H{atom.explicit_h}"
    charge = atom.formal_charge
    if charge == 1:
        token += "+"
    elif charge == -1:
        token += "-"
    elif charge > 1:
        token += f"+{charge}"
    elif charge < -1:
        token += f"-{-charge}"
    return f"[{token}]"


def _bond_token(mol: Molecule, bond: Bond) -> str:
    order = bond.order
    if order is BondOrder.AROMATIC:
        return ""  # implied between aromatic atoms
    if order is BondOrder.SINGLE:
        # explicit '-' needed only between two aromatic atoms, where a bare
        # bond would read back as aromatic
        both_aromatic = mol.atoms[bond.a].aromatic and mol.atoms[bond.b].aromatic
        return "-" if both_aromatic else ""
    return {BondOrder.DOUBLE: "=", BondOrder.TRIPLE: "#"}[order]


def write_smiles(mol: Molecule, start_order: list[int] | None = None) -> str:
    """Emit SMILES by DFS, visiting atoms in ``start_order`` rank order.

    ``start_order[i]`` is the rank of atom i; lower ranks are visited first
    and each fragment is rooted at its lowest-ranked atom.  Ring-closure
    digits are allocated smallest-first and reused once closed.  Defaults to
    the identity ranking.
    """
    n = mol.num_atoms
    if n == 0:
        return ""
    rank = start_order if start_order is not None else list(range(n))
    if len(rank) != n:
        raise ValueError("start_order length must equal atom count")
    adj = mol.adjacency()

    # pass 1: DFS spanning forest in rank order, marking ring (back) bonds
    visited = [False] * n
    tree_children: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    ring_bond_ids: set[int] = set()
    roots = sorted(
        (min(comp, key=lambda i: (rank[i], i)) for comp in mol.fragments()),
        key=lambda i: (rank[i], i),
    )

    def explore(root: int):
        order_stack = [root]
        visited[root] = True
        parent_bond = {root: -1}
        while order_stack:
            v = order_stack.pop()
            kids = []
            for bidx in sorted(
                adj[v],
                key=lambda b: (rank[mol.bonds[b].other(v)], mol.bonds[b].other(v)),
            ):
                if bidx == parent_bond[v] or bidx in ring_bond_ids:
                    continue
                w = mol.bonds[bidx].other(v)
                if visited[w]:
                    ring_bond_ids.add(bidx)
                else:
                    visited[w] = True
                    parent_bond[w] = bidx
                    kids.append((bidx, w))
            tree_children[v] = kids
            # push in reverse so the first child is processed first
            order_stack.extend(w for _, w in reversed(kids))

    for root in roots:
        explore(root)

    # pass 2: emit text; ring digits open at the first endpoint reached
    pieces: list[str] = []
    digit_of_bond: dict[int, int] = {}
    open_digits: set[int] = set()

    def next_digit() -> int:
        d = 1
        while d in open_digits:
            d += 1
        if d > 99:
            raise ValueError("too many simultaneously open rings")
        return d

    def ring_tokens(v: int) -> str:
        out = []
        for bidx in sorted(
            (b for b in adj[v] if b in ring_bond_ids),
            key=lambda b: (rank[mol.bonds[b].other(v)], mol.bonds[b].other(v)),
        ):
            if bidx in digit_of_bond:
                d = digit_of_bond[bidx]
                out.append(str(d) if d < 10 else f"%{d:02d}")
                open_digits.discard(d)
            else:
                d = next_digit()
                digit_of_bond[bidx] = d
                open_digits.add(d)
                out.append(_bond_token(mol, mol.bonds[bidx]))
                out.append(str(d) if d < 10 else f"%{d:02d}")
        return "".join(out)

    def emit(v: int, via_bond: int):
        if via_bond >= 0:
            pieces.append(_bond_token(mol, mol.bonds[via_bond]))
        pieces.append(_atom_token(mol, v))
        pieces.append(ring_tokens(v))
        kids = tree_children[v]
        for i, (bidx, w) in enumerate(kids):
            if i < len(kids) - 1:
                pieces.append("(")
                emit(w, bidx)
                pieces.append(")")
            else:
                emit(w, bidx)

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 4 * n + 200))
    try:
        for k, root in enumerate(roots):
            if k:
                pieces.append(".")
            emit(root, -1)
    finally:
        sys.setrecursionlimit(old_limit)
    return "".join(pieces)
