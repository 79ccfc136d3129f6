"""Projector, token reductions, projector alignment, and token export.

The projector is one affine map shared by all three levels.  Reductions
collapse the projected feature set into the bundle handed to a language
model: keep everything, pool per level, pool globally, or pick one level.
Token files round-trip bit-exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .encoder.forward import BatchedFeatures, LevelFeatures
from .hierseg import NodeLevel
from .pretrain.losses import _loss_contrastive_t

TOKEN_MAGIC = b"MTOKTOKS"
TOKEN_FORMAT_VERSION = 1

# reduction tags; fixed codes so the token-file header stays fixed-width
REDUCTION_CODES = {
    "none": 0,
    "hierarchical": 1,
    "all": 2,
    "level:node": 3,
    "level:motif": 4,
    "level:graph": 5,
}
_CODE_TO_REDUCTION = {v: k for k, v in REDUCTION_CODES.items()}

_LEVEL_TAGS = {
    "node": NodeLevel.ATOM,
    "motif": NodeLevel.MOTIF,
    "graph": NodeLevel.GRAPH,
}


@dataclass
class ProjectorParams:
    W: np.ndarray  # (d_GNN, d_LLM)
    bias: np.ndarray  # (d_LLM,)

    def __post_init__(self):
        if self.W.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("W must be 2-D and bias 1-D")
        if self.W.shape[1] != self.bias.shape[0]:
            raise ValueError("W columns must match bias length")
        if self.W.shape[1] < 1:
            raise ValueError("d_LLM must be >= 1")
        if not (np.isfinite(self.W).all() and np.isfinite(self.bias).all()):
            raise ValueError("projector parameters must be finite")

    @property
    def d_gnn(self) -> int:
        return self.W.shape[0]

    @property
    def d_llm(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "ProjectorParams":
        return ProjectorParams(self.W.copy(), self.bias.copy())


def init_projector(seed: int, d_gnn: int, d_llm: int = 2048) -> ProjectorParams:
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(d_gnn)
    w = rng.uniform(-bound, bound, size=(d_gnn, d_llm)).astype(np.float32)
    return ProjectorParams(w, np.zeros(d_llm, dtype=np.float32))


def project(features: LevelFeatures, p: ProjectorParams) -> LevelFeatures:
    """Apply the shared affine map row-wise to all three levels."""
    if features.d != p.d_gnn:
        raise ValueError(f"feature dim {features.d} != projector input {p.d_gnn}")
    return LevelFeatures(
        features.node_mat @ p.W + p.bias,
        features.motif_mat @ p.W + p.bias,
        features.graph_vec @ p.W + p.bias,
    )


@dataclass
class TokenBundle:
    tokens: np.ndarray  # (k, d_LLM)
    level_ids: np.ndarray  # (k,) uint8 of NodeLevel values
    reduction: str

    def __post_init__(self):
        if self.reduction not in REDUCTION_CODES:
            raise ValueError(f"unknown reduction tag: {self.reduction}")
        if self.tokens.shape[0] != self.level_ids.shape[0]:
            raise ValueError("one level id per token required")

    @property
    def k(self) -> int:
        return self.tokens.shape[0]

    @property
    def d_llm(self) -> int:
        return self.tokens.shape[1]


def _levels(*counts_and_levels: tuple[int, NodeLevel]) -> np.ndarray:
    parts = [np.full(n, int(lvl), dtype=np.uint8) for n, lvl in counts_and_levels]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)


def reduce_none(projected: LevelFeatures) -> TokenBundle:
    """All tokens, order nodes then motifs then graph; k = a + b + 1."""
    tokens = np.concatenate(
        [projected.node_mat, projected.motif_mat, projected.graph_vec], axis=0
    )
    ids = _levels(
        (projected.a, NodeLevel.ATOM),
        (projected.b, NodeLevel.MOTIF),
        (1, NodeLevel.GRAPH),
    )
    return TokenBundle(tokens, ids, "none")


def reduce_hierarchical(projected: LevelFeatures) -> TokenBundle:
    """[node mean, motif mean, graph token]; k = 3."""
    if projected.a == 0 or projected.b == 0:
        raise ValueError("hierarchical reduction needs non-empty node and motif levels")
    tokens = np.stack(
        [
            projected.node_mat.mean(axis=0),
            projected.motif_mat.mean(axis=0),
            projected.graph_vec[0],
        ]
    )
    ids = _levels((1, NodeLevel.ATOM), (1, NodeLevel.MOTIF), (1, NodeLevel.GRAPH))
    return TokenBundle(tokens, ids, "hierarchical")


def reduce_all(projected: LevelFeatures) -> TokenBundle:
    """One token: the plain mean over all a + b + 1 projected tokens."""
    stacked = np.concatenate(
        [projected.node_mat, projected.motif_mat, projected.graph_vec], axis=0
    )
    tokens = stacked.mean(axis=0, keepdims=True)
    return TokenBundle(tokens, _levels((1, NodeLevel.GRAPH)), "all")


def select_level(projected: LevelFeatures, level: NodeLevel) -> TokenBundle:
    """Mean of a single level's tokens; k = 1."""
    level = NodeLevel(level)
    mats = {
        NodeLevel.ATOM: projected.node_mat,
        NodeLevel.MOTIF: projected.motif_mat,
        NodeLevel.GRAPH: projected.graph_vec,
    }
    mat = mats[level]
    if mat.shape[0] == 0:
        raise ValueError(f"level {level.name} is empty")
    tag = {
        NodeLevel.ATOM: "level:node",
        NodeLevel.MOTIF: "level:motif",
        NodeLevel.GRAPH: "level:graph",
    }[level]
    return TokenBundle(mat.mean(axis=0, keepdims=True), _levels((1, level)), tag)


def reduce_sample(projected: LevelFeatures, mode: str) -> TokenBundle:
    """Dispatch on a reduction-mode string (CLI names)."""
    if mode == "none":
        return reduce_none(projected)
    if mode in ("hier", "hierarchical"):
        return reduce_hierarchical(projected)
    if mode == "all":
        return reduce_all(projected)
    if mode in _LEVEL_TAGS:
        return select_level(projected, _LEVEL_TAGS[mode])
    raise ValueError(f"unknown reduction mode: {mode}")


def project_batch(batched: BatchedFeatures, p: ProjectorParams) -> BatchedFeatures:
    """Project a padded batch; padded rows stay exactly zero.

    An affine map sends zero rows to the bias, so the mask is re-applied
    after projection to keep padding inert.
    """
    if batched.node_mat.shape[-1] != p.d_gnn:
        raise ValueError(
            f"feature dim {batched.node_mat.shape[-1]} != projector input {p.d_gnn}"
        )
    node = (batched.node_mat @ p.W + p.bias) * batched.node_mask[..., None]
    motif = (batched.motif_mat @ p.W + p.bias) * batched.motif_mask[..., None]
    graph = batched.graph_vec @ p.W + p.bias
    return BatchedFeatures(node, batched.node_mask, motif, batched.motif_mask, graph)


def reduce_batch(batched: BatchedFeatures, mode: str) -> list[TokenBundle]:
    """Per-sample reduction honoring masks; divisor is the mask count."""
    out = []
    for i in range(batched.node_mat.shape[0]):
        out.append(reduce_sample(batched.sample(i), mode))
    return out


@dataclass
class AlignConfig:
    seed: int = 0
    lr: float = 1e-3
    steps: int = 200


def align_projector(
    features: list[LevelFeatures],
    text_vecs: np.ndarray,
    config: AlignConfig,
    init: ProjectorParams | None = None,
) -> ProjectorParams:
    """Fit the projector so reduce_all tokens match paired text vectors.

    Minimizes the same logistic matched/mismatched loss as contrastive
    pre-training, but over projector parameters only (encoder frozen).
    Because the map is affine, reduce_all(project(x)) equals
    project(mean of raw tokens), so the per-sample constant is that mean.
    """
    if len(features) != text_vecs.shape[0]:
        raise ValueError("one text vector per feature set required")
    if len(features) < 2:
        raise ValueError("alignment needs at least two pairs")
    d_gnn = features[0].d
    d_llm = text_vecs.shape[1]
    if init is None:
        init = init_projector(config.seed, d_gnn, d_llm)
    if init.d_gnn != d_gnn or init.d_llm != d_llm:
        raise ValueError("projector dims must match features and text vectors")

    raw_means = np.stack(
        [
            np.concatenate([f.node_mat, f.motif_mat, f.graph_vec]).mean(axis=0)
            for f in features
        ]
    ).astype(np.float32)
    xt = text_vecs.astype(np.float32)

    p = init.copy()
    blocks = {"w": p.W, "b": p.bias}
    from .pretrain.train import Adam

    optimizer = Adam(blocks, lr=config.lr)
    rng = np.random.default_rng(config.seed)
    for step in range(config.steps):
        w_t = Tensor(blocks["w"], requires_grad=True)
        b_t = Tensor(blocks["b"], requires_grad=True)
        xm_t = Tensor(raw_means) @ w_t + b_t
        loss = _loss_contrastive_t(xm_t, xt, int(rng.integers(2**31 - 1)))
        if not np.isfinite(loss.data):
            raise FloatingPointError(f"alignment diverged at step {step}")
        loss.backward()
        optimizer.step(
            {
                "w": w_t.grad if w_t.grad is not None else np.zeros_like(blocks["w"]),
                "b": b_t.grad if b_t.grad is not None else np.zeros_like(blocks["b"]),
            }
        )
    return p


def matched_vs_mismatched(
    projector: ProjectorParams,
    features: list[LevelFeatures],
    text_vecs: np.ndarray,
    seed: int = 0,
) -> float:
    """Fraction of pairs whose matched score beats a deranged mismatch."""
    from .pretrain.losses import derangement

    xm = np.stack([reduce_all(project(f, projector)).tokens[0] for f in features])
    xt = text_vecs
    sigma = derangement(len(features), seed)
    matched = (xm * xt).sum(axis=1)
    mismatched = (xm * xt[sigma]).sum(axis=1)
    return float((matched > mismatched).mean())


PROJECTOR_MAGIC = b"MTOKPROJ"


def save_projector(path, p: ProjectorParams) -> None:
    """Dedicated container: magic, version, dims, W rows, bias; bit-exact."""
    with open(path, "wb") as fh:
        fh.write(PROJECTOR_MAGIC)
        fh.write(struct.pack("<III", TOKEN_FORMAT_VERSION, p.d_gnn, p.d_llm))
        fh.write(np.ascontiguousarray(p.W, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(p.bias, dtype="<f4").tobytes())


def load_projector(path) -> ProjectorParams:
    with open(path, "rb") as fh:
        if fh.read(8) != PROJECTOR_MAGIC:
            raise ValueError("not a projector file (bad magic)")
        version, d_gnn, d_llm = struct.unpack("<III", fh.read(12))
        if version != TOKEN_FORMAT_VERSION:
            raise ValueError(f"unsupported projector format version {version}")
        raw_w = fh.read(4 * d_gnn * d_llm)
        raw_b = fh.read(4 * d_llm)
    if len(raw_w) != 4 * d_gnn * d_llm or len(raw_b) != 4 * d_llm:
        raise ValueError("truncated projector file")
    w = np.frombuffer(raw_w, dtype="<f4")
    bias = np.frombuffer(raw_b, dtype="<f4")
    return ProjectorParams(
        w.reshape(d_gnn, d_llm).astype(np.float32), bias.astype(np.float32)
    )


def export_tokens(bundle: TokenBundle, path) -> None:
    """Write a bundle; header then little-endian float32 rows, bit-exact."""
    with open(path, "wb") as fh:
        fh.write(TOKEN_MAGIC)
        fh.write(
            struct.pack(
                "<IIIB",
                TOKEN_FORMAT_VERSION,
                bundle.k,
                bundle.d_llm,
                REDUCTION_CODES[bundle.reduction],
            )
        )
        fh.write(np.ascontiguousarray(bundle.level_ids, dtype=np.uint8).tobytes())
        fh.write(np.ascontiguousarray(bundle.tokens, dtype="<f4").tobytes())


def load_tokens(path) -> TokenBundle:
    with open(path, "rb") as fh:
        if fh.read(8) != TOKEN_MAGIC:
            raise ValueError("not a token file (bad magic)")
        version, k, d_llm, code = struct.unpack("<IIIB", fh.read(13))
        if version != TOKEN_FORMAT_VERSION:
            raise ValueError(f"unsupported token format version {version}")
        if code not in _CODE_TO_REDUCTION:
            raise ValueError(f"unknown reduction code {code}")
        raw_ids = fh.read(k)
        raw_data = fh.read(4 * k * d_llm)
        if len(raw_ids) != k or len(raw_data) != 4 * k * d_llm:
            raise ValueError("truncated token file")
        ids = np.frombuffer(raw_ids, dtype=np.uint8).copy()
        tokens = np.frombuffer(raw_data, dtype="<f4").reshape(k, d_llm).astype(np.float32)
    return TokenBundle(tokens, ids, _CODE_TO_REDUCTION[code])
