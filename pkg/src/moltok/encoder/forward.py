"""Message-passing forward pass over the hierarchical graph.

One pass produces all three feature levels.  Each layer updates
h_v <- MLP((1 + eps) * h_v + sum over neighbors u of (h_u + e_uv)) with a
ReLU between the two perceptron layers.  Directed edges are processed in
ascending (destination, source) order, so accumulation is deterministic and
outputs are bit-identical across runs and backends.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..hierseg import HierGraph
from ..molgraph.mol import ELEMENTS
from .params import GNNParams, MASK_TOKEN, MOTIF_TOKEN, GRAPH_TOKEN

_ELEMENT_ID = {el: i for i, el in enumerate(ELEMENTS)}


@dataclass
class LevelFeatures:
    node_mat: np.ndarray  # (a, d)
    motif_mat: np.ndarray  # (b, d)
    graph_vec: np.ndarray  # (1, d)

    @property
    def a(self) -> int:
        return self.node_mat.shape[0]

    @property
    def b(self) -> int:
        return self.motif_mat.shape[0]

    @property
    def d(self) -> int:
        return self.graph_vec.shape[1]


@dataclass
class BatchedFeatures:
    node_mat: np.ndarray  # (B, max_a, d), zero padded
    node_mask: np.ndarray  # (B, max_a) bool
    motif_mat: np.ndarray  # (B, max_b, d), zero padded
    motif_mask: np.ndarray  # (B, max_b) bool
    graph_vec: np.ndarray  # (B, d)

    def sample(self, i: int) -> LevelFeatures:
        # mask-indexed, so padding may sit anywhere, not just at the tail
        return LevelFeatures(
            self.node_mat[i][self.node_mask[i]],
            self.motif_mat[i][self.motif_mask[i]],
            self.graph_vec[i : i + 1].copy(),
        )


def node_token_ids(hg: HierGraph) -> np.ndarray:
    ids = np.empty(hg.num_nodes, dtype=np.int64)
    for i, atom in enumerate(hg.mol.atoms):
        ids[i] = MASK_TOKEN if i in hg.masked_atoms else _ELEMENT_ID[atom.element]
    ids[hg.a : hg.a + hg.b] = MOTIF_TOKEN
    ids[hg.graph_node] = GRAPH_TOKEN
    return ids


def directed_edges(hg: HierGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Both directions of every edge, sorted ascending by (dst, src)."""
    m = len(hg.edges)
    src = np.empty(2 * m, dtype=np.int64)
    dst = np.empty(2 * m, dtype=np.int64)
    kind = np.empty(2 * m, dtype=np.int64)
    for k, e in enumerate(hg.edges):
        src[k], dst[k], kind[k] = e.u, e.v, int(e.kind)
        src[m + k], dst[m + k], kind[m + k] = e.v, e.u, int(e.kind)
    order = np.lexsort((src, dst))
    return src[order], dst[order], kind[order]


def encode_tensors(
    hg: HierGraph, blocks: dict[str, Tensor], n_layers: int
) -> tuple[Tensor, Tensor, Tensor]:
    """Forward pass on autodiff tensors; used by both inference and training."""
    n = hg.num_nodes
    ids = node_token_ids(hg)
    src, dst, kind = directed_edges(hg)
    h = ad.gather_rows(blocks["atom_table"], ids)
    for layer in range(n_layers):
        erow = ad.gather_rows(blocks["edge_table"], kind)
        agg = ad.edge_message_sum(h, erow, src, dst, n)
        eps = blocks[f"layer{layer}.eps"]
        pre = h * (eps + 1.0) + agg
        hidden = ad.relu(pre @ blocks[f"layer{layer}.w1"] + blocks[f"layer{layer}.b1"])
        h = hidden @ blocks[f"layer{layer}.w2"] + blocks[f"layer{layer}.b2"]
    a, b = hg.a, hg.b
    node_t = ad.gather_rows(h, np.arange(a, dtype=np.int64))
    motif_t = ad.gather_rows(h, np.arange(a, a + b, dtype=np.int64))
    graph_t = ad.gather_rows(h, np.arange(a + b, a + b + 1, dtype=np.int64))
    return node_t, motif_t, graph_t


def encode(hg: HierGraph, params: GNNParams) -> LevelFeatures:
    """Inference forward pass; deterministic, no gradient tape."""
    with ad.no_grad():
        blocks = {k: Tensor(v) for k, v in params.blocks.items()}
        node_t, motif_t, graph_t = encode_tensors(hg, blocks, params.L)
    return LevelFeatures(node_t.data, motif_t.data, graph_t.data)


def encode_batch(hgs: list[HierGraph], params: GNNParams) -> BatchedFeatures:
    """Per-sample encode, zero-padded; masked positions are exactly zero."""
    if not hgs:
        raise ValueError("encode_batch needs a non-empty list")
    feats = [encode(hg, params) for hg in hgs]
    n = len(feats)
    d = params.d
    max_a = max(f.a for f in feats)
    max_b = max(f.b for f in feats)
    node = np.zeros((n, max_a, d), dtype=np.float32)
    nmask = np.zeros((n, max_a), dtype=bool)
    motif = np.zeros((n, max_b, d), dtype=np.float32)
    mmask = np.zeros((n, max_b), dtype=bool)
    graph = np.zeros((n, d), dtype=np.float32)
    for i, f in enumerate(feats):
        node[i, : f.a] = f.node_mat
        nmask[i, : f.a] = True
        motif[i, : f.b] = f.motif_mat
        mmask[i, : f.b] = True
        graph[i] = f.graph_vec[0]
    return BatchedFeatures(node, nmask, motif, mmask, graph)


FEATURE_MAGIC = b"MTOKFEAT"
FEATURE_FORMAT_VERSION = 1


def save_features(path, features: list[LevelFeatures]) -> None:
    """Per-record feature file: (a, b) header then a+b+1 float32 rows."""
    if not features:
        raise ValueError("no features to save")
    d = features[0].d
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<III", FEATURE_FORMAT_VERSION, len(features), d))
        for f in features:
            if f.d != d:
                raise ValueError("inconsistent feature dimension")
            fh.write(struct.pack("<II", f.a, f.b))
            rows = np.concatenate([f.node_mat, f.motif_mat, f.graph_vec])
            fh.write(np.ascontiguousarray(rows, dtype="<f4").tobytes())


def load_features(path) -> list[LevelFeatures]:
    with open(path, "rb") as fh:
        if fh.read(8) != FEATURE_MAGIC:
            raise ValueError("not a feature file (bad magic)")
        version, count, d = struct.unpack("<III", fh.read(12))
        if version != FEATURE_FORMAT_VERSION:
            raise ValueError(f"unsupported feature format version {version}")
        out = []
        for _ in range(count):
            a, b = struct.unpack("<II", fh.read(8))
            raw = fh.read(4 * (a + b + 1) * d)
            if len(raw) != 4 * (a + b + 1) * d:
                raise ValueError("truncated feature file")
            rows = np.frombuffer(raw, dtype="<f4")
            mat = rows.reshape(a + b + 1, d).astype(np.float32)
            out.append(LevelFeatures(mat[:a], mat[a : a + b], mat[a + b :]))
    return out


def mask_atoms(hg: HierGraph, ratio: float, seed: int) -> tuple[HierGraph, frozenset[int]]:
    """Replace ceil(ratio * a) atoms with the MASK token, deterministically."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("ratio must be in [0, 1]")
    count = math.ceil(ratio * hg.a)
    if count == 0:
        return replace(hg, masked_atoms=frozenset()), frozenset()
    rng = np.random.default_rng(seed)
    chosen = frozenset(int(i) for i in rng.choice(hg.a, size=count, replace=False))
    return replace(hg, masked_atoms=chosen), chosen
