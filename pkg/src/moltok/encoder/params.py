"""Encoder parameter container, seeded initialization, and checkpoint I/O.

Checkpoint layout (all little-endian): 8-byte magic, u32 format version,
u32 d_GNN, u32 L, u32 block count, then per block a u16 name length, the
UTF-8 name, a u8 rank, u32 dims, and the raw float32 payload row-major.
Round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..molgraph.mol import ELEMENTS

# atom-type vocabulary: one row per element plus the three special tokens
MOTIF_TOKEN = len(ELEMENTS)
GRAPH_TOKEN = len(ELEMENTS) + 1
MASK_TOKEN = len(ELEMENTS) + 2
ATOM_VOCAB = len(ELEMENTS) + 3
EDGE_VOCAB = 6  # single, double, triple, aromatic, MOTIF_LINK, GRAPH_LINK

MAGIC = b"MTOKCKPT"
FORMAT_VERSION = 1


@dataclass
class GNNParams:
    d: int
    L: int
    blocks: dict[str, np.ndarray]

    def astype(self, dtype) -> "GNNParams":
        return GNNParams(
            self.d, self.L, {k: v.astype(dtype) for k, v in self.blocks.items()}
        )

    def copy(self) -> "GNNParams":
        return GNNParams(self.d, self.L, {k: v.copy() for k, v in self.blocks.items()})


def layer_block_names(layer: int) -> tuple[str, ...]:
    base = f"layer{layer}"
    return (f"{base}.w1", f"{base}.b1", f"{base}.w2", f"{base}.b2", f"{base}.eps")


def init_params(seed: int, d_gnn: int = 300, n_layers: int = 5) -> GNNParams:
    """Uniform init on [-1/sqrt(fan_in), 1/sqrt(fan_in)]; eps starts at 0."""
    if d_gnn < 1 or n_layers < 1:
        raise ValueError("d_gnn and n_layers must be >= 1")
    rng = np.random.default_rng(seed)

    def uniform(shape: tuple[int, ...], fan_in: int) -> np.ndarray:
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape).astype(np.float32)

    blocks: dict[str, np.ndarray] = {
        "atom_table": uniform((ATOM_VOCAB, d_gnn), d_gnn),
        "edge_table": uniform((EDGE_VOCAB, d_gnn), d_gnn),
    }
    for layer in range(n_layers):
        w1, b1, w2, b2, eps = layer_block_names(layer)
        blocks[w1] = uniform((d_gnn, d_gnn), d_gnn)
        blocks[b1] = uniform((d_gnn,), d_gnn)
        blocks[w2] = uniform((d_gnn, d_gnn), d_gnn)
        blocks[b2] = uniform((d_gnn,), d_gnn)
        blocks[eps] = np.zeros(1, dtype=np.float32)
    return GNNParams(d_gnn, n_layers, blocks)


def _core_block_names(n_layers: int) -> list[str]:
    names = ["atom_table", "edge_table"]
    for layer in range(n_layers):
        names.extend(layer_block_names(layer))
    return names


def save_checkpoint(
    path, params: GNNParams, extra: dict[str, np.ndarray] | None = None
) -> None:
    """Write params (and optional extra named blocks) to ``path``."""
    blocks = dict(params.blocks)
    for name, arr in (extra or {}).items():
        if name in blocks:
            raise ValueError(f"extra block name collides with core: {name}")
        blocks[name] = arr
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", FORMAT_VERSION, params.d, params.L))
        fh.write(struct.pack("<I", len(blocks)))
        for name, arr in blocks.items():
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[GNNParams, dict[str, np.ndarray]]:
    """Read a checkpoint; returns (params, extra blocks)."""
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError("not a checkpoint file (bad magic)")
        version, d_gnn, n_layers = struct.unpack("<III", fh.read(12))
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        (count,) = struct.unpack("<I", fh.read(4))
        blocks: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            size = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(4 * size), dtype="<f4")
            blocks[name] = data.reshape(shape).astype(np.float32)
    core_names = _core_block_names(n_layers)
    missing = [n for n in core_names if n not in blocks]
    if missing:
        raise ValueError(f"checkpoint missing blocks: {missing}")
    core = {n: blocks.pop(n) for n in core_names}
    return GNNParams(d_gnn, n_layers, core), blocks
