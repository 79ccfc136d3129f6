"""Exact graph-isomorphism oracle for small molecules.

Backtracking with label and degree pruning.  Intended as a test oracle, so
clarity beats speed; the size guard keeps worst cases out.
"""

from __future__ import annotations

from .mol import Molecule

_DEFAULT_MAX_HEAVY = 16


def _label(mol: Molecule, i: int) -> tuple:
    a = mol.atoms[i]
    # explicit_h is part of the label: "C" and "[CH3]" parse to different
    # molecules and must not compare equal
    return (a.element, a.formal_charge, a.aromatic, a.explicit_h)


def _heavy_count(mol: Molecule) -> int:
    return sum(1 for a in mol.atoms if a.element != "H")


def is_isomorphic(a: Molecule, b: Molecule, max_heavy: int = _DEFAULT_MAX_HEAVY) -> bool:
    """True iff a label- and bond-order-preserving bijection exists.

    Raises ValueError when either molecule has more than ``max_heavy`` heavy
    atoms; the backtracking search is only meant for test-sized inputs.
    """
    if _heavy_count(a) > max_heavy or _heavy_count(b) > max_heavy:
        raise ValueError(f"is_isomorphic is limited to {max_heavy} heavy atoms")
    n = a.num_atoms
    if n != b.num_atoms or a.num_bonds != b.num_bonds:
        return False
    la = [_label(a, i) for i in range(n)]
    lb = [_label(b, i) for i in range(n)]
    da = [len(a.adjacency()[i]) for i in range(n)]
    db = [len(b.adjacency()[i]) for i in range(n)]
    if sorted(zip(la, da)) != sorted(zip(lb, db)):
        return False
    if n == 0:
        return True

    # order a's atoms so each one (after the first of a component) touches an
    # already-placed atom; rarer (label, degree) pairs go first
    rarity = {key: 0 for key in zip(la, da)}
    for key in zip(la, da):
        rarity[key] += 1
    order: list[int] = []
    seen = [False] * n
    while len(order) < n:
        frontier = [
            w
            for v in order
            for bi in a.adjacency()[v]
            for w in (a.bonds[bi].other(v),)
            if not seen[w]
        ]
        pool = frontier or [i for i in range(n) if not seen[i]]
        nxt = min(pool, key=lambda i: (rarity[(la[i], da[i])], -da[i], i))
        seen[nxt] = True
        order.append(nxt)

    mapping = [-1] * n  # a index -> b index
    used = [False] * n

    def candidates(ai: int):
        for bj in range(n):
            if used[bj] or lb[bj] != la[ai] or db[bj] != da[ai]:
                continue
            ok = True
            for bi in a.adjacency()[ai]:
                bond = a.bonds[bi]
                u = bond.other(ai)
                if mapping[u] < 0:
                    continue
                other = b.bond_between(bj, mapping[u])
                if other is None or other.order != bond.order:
                    ok = False
                    break
            if ok:
                yield bj

    def extend(k: int) -> bool:
        if k == n:
            return True
        ai = order[k]
        for bj in candidates(ai):
            mapping[ai] = bj
            used[bj] = True
            if extend(k + 1):
                return True
            mapping[ai] = -1
            used[bj] = False
        return False

    return extend(0)
