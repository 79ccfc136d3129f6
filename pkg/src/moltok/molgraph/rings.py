"""Ring perception: ring bonds via bridge finding, plus smallest-cycle lookup."""

from __future__ import annotations

from collections import deque

from .mol import Molecule


def bridge_bonds(mol: Molecule) -> set[int]:
    """Bond indices that are bridges (removal disconnects their component)."""
    n = mol.num_atoms
    adj = mol.adjacency()
    disc = [-1] * n
    low = [0] * n
    bridges: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        # iterative DFS: (vertex, parent-bond, iterator position)
        stack = [(root, -1, 0)]
        disc[root] = low[root] = timer
        timer += 1
        while stack:
            v, pbond, i = stack[-1]
            if i < len(adj[v]):
                stack[-1] = (v, pbond, i + 1)
                bidx = adj[v][i]
                if bidx == pbond:
                    continue
                w = mol.bonds[bidx].other(v)
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, bidx, 0))
                else:
                    low[v] = min(low[v], disc[w])
            else:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        bridges.add(pbond)
    return bridges


def ring_bonds(mol: Molecule) -> set[int]:
    """Bond indices that lie on at least one cycle."""
    bridges = bridge_bonds(mol)
    return {i for i in range(mol.num_bonds) if i not in bridges}


def ring_atoms(mol: Molecule) -> set[int]:
    atoms: set[int] = set()
    for i in ring_bonds(mol):
        atoms.add(mol.bonds[i].a)
        atoms.add(mol.bonds[i].b)
    return atoms


def smallest_ring_through(mol: Molecule, bond_idx: int) -> list[int] | None:
    """Atom indices of the smallest cycle containing the bond, or None.

    BFS from one endpoint to the other with the bond itself removed; the
    shortest such path closed by the bond is the smallest ring through it.
    """
    bond = mol.bonds[bond_idx]
    src, dst = bond.a, bond.b
    prev = {src: -1}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        if v == dst:
            break
        for bidx in mol.adjacency()[v]:
            if bidx == bond_idx:
                continue
            w = mol.bonds[bidx].other(v)
            if w not in prev:
                prev[w] = v
                queue.append(w)
    if dst not in prev:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path


def rings_of_size(mol: Molecule, sizes: tuple[int, ...] = (5, 6)) -> list[list[int]]:
    """Distinct smallest rings whose length is in ``sizes``.

    One candidate ring per ring bond, deduplicated by atom set.  Good enough
    for aromaticity normalization and structural keys; not a full SSSR.
    """
    found: dict[frozenset[int], list[int]] = {}
    for bidx in ring_bonds(mol):
        ring = smallest_ring_through(mol, bidx)
        if ring and len(ring) in sizes:
            found.setdefault(frozenset(ring), ring)
    return list(found.values())


def min_ring_size(mol: Molecule) -> dict[int, int]:
    """Smallest ring size through each ring bond index."""
    out = {}
    for bidx in ring_bonds(mol):
        ring = smallest_ring_through(mol, bidx)
        if ring:
            out[bidx] = len(ring)
    return out
