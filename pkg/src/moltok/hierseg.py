"""Hierarchical graph segmentation.

Cuts a molecule into motifs along selected acyclic single bonds, then builds
the augmented graph: atom nodes, one node per motif, and a single virtual
graph node linked to every motif.  Atom-atom edges keep their bond order;
hierarchy edges carry dedicated MOTIF_LINK / GRAPH_LINK kinds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable

from .molgraph.mol import Bond, BondOrder, Molecule
from .molgraph.rings import ring_atoms, ring_bonds

_HETERO_LINK = {"N", "O", "S", "P"}


class NodeLevel(IntEnum):
    ATOM = 0
    MOTIF = 1
    GRAPH = 2


class EdgeKind(IntEnum):
    SINGLE = 0
    DOUBLE = 1
    TRIPLE = 2
    AROMATIC = 3
    MOTIF_LINK = 4
    GRAPH_LINK = 5


_BOND_TO_KIND = {
    BondOrder.SINGLE: EdgeKind.SINGLE,
    BondOrder.DOUBLE: EdgeKind.DOUBLE,
    BondOrder.TRIPLE: EdgeKind.TRIPLE,
    BondOrder.AROMATIC: EdgeKind.AROMATIC,
}

# cut rules: each sees (mol, bond, ring-atom set) for a bond that already
# passed the shared filter (single, acyclic, no heavy-degree-1 endpoint)
CutPredicate = Callable[[Molecule, Bond, frozenset[int]], bool]


def _rule_ring_attachment(mol: Molecule, bond: Bond, ring: frozenset[int]) -> bool:
    return (bond.a in ring) != (bond.b in ring)


def _rule_hetero_link(mol: Molecule, bond: Bond, ring: frozenset[int]) -> bool:
    for x, y in ((bond.a, bond.b), (bond.b, bond.a)):
        if (
            mol.atoms[x].element == "C"
            and mol.atoms[y].element in _HETERO_LINK
            and y not in ring
        ):
            return True
    return False


@dataclass(frozen=True)
class FragmentationRules:
    """Named cut-rule set; predicates apply only to single acyclic bonds."""

    name: str
    predicates: tuple[CutPredicate, ...]


SIMPLE_BRICS = FragmentationRules(
    "simple-brics", (_rule_ring_attachment, _rule_hetero_link)
)

RULE_SETS = {SIMPLE_BRICS.name: SIMPLE_BRICS}


def fragment_bonds(mol: Molecule, rules: FragmentationRules = SIMPLE_BRICS) -> set[int]:
    """Bond indices to cut under the rule set.

    A bond is a candidate iff it is single, acyclic, and neither endpoint
    has heavy degree 1; candidates are cut when any rule predicate fires.
    """
    in_ring = ring_bonds(mol)
    on_ring = frozenset(ring_atoms(mol))
    cuts: set[int] = set()
    for idx, bond in enumerate(mol.bonds):
        if bond.order is not BondOrder.SINGLE or idx in in_ring:
            continue
        if mol.heavy_degree(bond.a) == 1 or mol.heavy_degree(bond.b) == 1:
            continue
        if any(rule(mol, bond, on_ring) for rule in rules.predicates):
            cuts.add(idx)
    return cuts


@dataclass(frozen=True)
class MotifPartition:
    """Dense per-atom motif ids; motifs are connected under the kept bonds."""

    motif_id: tuple[int, ...]
    num_motifs: int
    cut_bonds: frozenset[int]

    def atoms_of(self, motif: int) -> list[int]:
        return [i for i, m in enumerate(self.motif_id) if m == motif]

    def motif_sizes(self) -> list[int]:
        sizes = [0] * self.num_motifs
        for m in self.motif_id:
            sizes[m] += 1
        return sizes


def build_motifs(mol: Molecule, cuts: set[int]) -> MotifPartition:
    """Connected components after removing cut bonds, ids by first atom."""
    n = mol.num_atoms
    motif_id = [-1] * n
    adj = mol.adjacency()
    current = 0
    for start in range(n):
        if motif_id[start] >= 0:
            continue
        stack = [start]
        motif_id[start] = current
        while stack:
            v = stack.pop()
            for bidx in adj[v]:
                if bidx in cuts:
                    continue
                w = mol.bonds[bidx].other(v)
                if motif_id[w] < 0:
                    motif_id[w] = current
                    stack.append(w)
        current += 1
    return MotifPartition(tuple(motif_id), current, frozenset(cuts))


@dataclass(frozen=True)
class HierEdge:
    u: int
    v: int
    kind: EdgeKind


@dataclass
class HierGraph:
    """Augmented graph: atom nodes, motif nodes, one graph node.

    Node ids: atoms 0..a-1 keep their molecule indices, motif j is a+j, and
    the graph node is a+b.  Edges are undirected, listed bonds first, then
    one MOTIF_LINK per atom, then one GRAPH_LINK per motif.
    """

    mol: Molecule
    partition: MotifPartition
    edges: list[HierEdge] = field(default_factory=list)
    masked_atoms: frozenset[int] = frozenset()

    @property
    def a(self) -> int:
        return self.mol.num_atoms

    @property
    def b(self) -> int:
        return self.partition.num_motifs

    @property
    def num_nodes(self) -> int:
        return self.a + self.b + 1

    def motif_node(self, motif: int) -> int:
        return self.a + motif

    @property
    def graph_node(self) -> int:
        return self.a + self.b

    def level_of(self, node: int) -> NodeLevel:
        if node < self.a:
            return NodeLevel.ATOM
        if node < self.a + self.b:
            return NodeLevel.MOTIF
        return NodeLevel.GRAPH

    def validate(self) -> None:
        """Assert the structural invariants; raises AssertionError."""
        a, b = self.a, self.b
        motif_links = [e for e in self.edges if e.kind is EdgeKind.MOTIF_LINK]
        graph_links = [e for e in self.edges if e.kind is EdgeKind.GRAPH_LINK]
        bond_edges = [
            e for e in self.edges
            if e.kind not in (EdgeKind.MOTIF_LINK, EdgeKind.GRAPH_LINK)
        ]
        assert len(motif_links) == a, "one MOTIF_LINK per atom"
        assert len(graph_links) == b, "one GRAPH_LINK per motif"
        seen_atoms = {e.u for e in motif_links}
        assert seen_atoms == set(range(a))
        for e in motif_links:
            assert e.v == self.motif_node(self.partition.motif_id[e.u])
        assert {e.v for e in graph_links} == {self.motif_node(j) for j in range(b)}
        assert all(e.u == self.graph_node for e in graph_links)
        assert len(bond_edges) == self.mol.num_bonds
        for e, bond in zip(bond_edges, self.mol.bonds):
            assert {e.u, e.v} == {bond.a, bond.b}
            assert e.kind == _BOND_TO_KIND[bond.order]


def build_hier_graph(mol: Molecule, partition: MotifPartition) -> HierGraph:
    hg = HierGraph(mol, partition)
    for bond in mol.bonds:
        hg.edges.append(HierEdge(bond.a, bond.b, _BOND_TO_KIND[bond.order]))
    for atom in range(mol.num_atoms):
        hg.edges.append(
            HierEdge(atom, hg.motif_node(partition.motif_id[atom]), EdgeKind.MOTIF_LINK)
        )
    for motif in range(partition.num_motifs):
        hg.edges.append(
            HierEdge(hg.graph_node, hg.motif_node(motif), EdgeKind.GRAPH_LINK)
        )
    return hg


def segment(mol: Molecule, rules: FragmentationRules = SIMPLE_BRICS) -> HierGraph:
    """fragment_bonds + build_motifs + build_hier_graph in one call."""
    return build_hier_graph(mol, build_motifs(mol, fragment_bonds(mol, rules)))
