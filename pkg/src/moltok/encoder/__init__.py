"""Multi-level graph encoder: parameters, forward pass, batching, masking."""

from .params import (
    ATOM_VOCAB,
    EDGE_VOCAB,
    GNNParams,
    GRAPH_TOKEN,
    MASK_TOKEN,
    MOTIF_TOKEN,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .forward import (
    BatchedFeatures,
    LevelFeatures,
    directed_edges,
    encode,
    encode_batch,
    encode_tensors,
    load_features,
    mask_atoms,
    node_token_ids,
    save_features,
)

__all__ = [
    "ATOM_VOCAB",
    "EDGE_VOCAB",
    "BatchedFeatures",
    "GNNParams",
    "GRAPH_TOKEN",
    "LevelFeatures",
    "MASK_TOKEN",
    "MOTIF_TOKEN",
    "directed_edges",
    "encode",
    "encode_batch",
    "encode_tensors",
    "init_params",
    "load_checkpoint",
    "load_features",
    "mask_atoms",
    "node_token_ids",
    "save_checkpoint",
    "save_features",
]
