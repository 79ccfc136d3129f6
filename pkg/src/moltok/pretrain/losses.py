"""The six pre-training objectives.

Link prediction (binary cross-entropy over all unordered atom pairs, summed),
masked atom- and bond-type recovery (cross-entropy, mean over the masked
set), atom/bond count regression (smooth-L1 on graph-vector heads), and the
batch-level molecule-text contrastive term with in-batch derangement
negatives.  Tensor-level internals (leading underscore) serve the training
loop; the public functions evaluate on plain arrays and return floats.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..encoder.forward import LevelFeatures
from ..hierseg import HierGraph
from .heads import Heads
from .targets import SslTargets, build_targets

_P_LO = 1e-7
_P_HI = 1.0 - 1e-7


# -- tensor-level internals ----------------------------------------------------


def _bce_sum(scores: Tensor, labels: np.ndarray) -> Tensor:
    p = ad.clip(ad.sigmoid(scores), _P_LO, _P_HI)
    y = Tensor(labels.astype(p.dtype))
    y_neg = Tensor((1.0 - labels).astype(p.dtype))
    return -((y * ad.log(p) + y_neg * ad.log(1.0 - p)).sum())


def _ce_mean(logits: Tensor, labels: np.ndarray, n_classes: int) -> Tensor:
    lsm = ad.log_softmax(logits, axis=-1)
    onehot = np.eye(n_classes, dtype=lsm.dtype)[labels]
    per_row = (lsm * Tensor(onehot)).sum(axis=1)
    return -(per_row.mean())


def _loss_link_t(node_t: Tensor, targets: SslTargets) -> Tensor:
    ni = ad.gather_rows(node_t, targets.link_pairs[:, 0])
    nj = ad.gather_rows(node_t, targets.link_pairs[:, 1])
    scores = (ni * nj).sum(axis=1)
    return _bce_sum(scores, targets.link_labels)


def _loss_atom_type_t(node_t: Tensor, targets: SslTargets, blocks) -> Tensor:
    if targets.masked_atoms.size == 0:
        raise ValueError("atom-type loss needs a non-empty masked set")
    x = ad.gather_rows(node_t, targets.masked_atoms)
    logits = x @ blocks["head.atom.w"] + blocks["head.atom.b"]
    return _ce_mean(logits, targets.atom_labels, targets.n_atom_classes)


def _loss_bond_type_t(node_t: Tensor, targets: SslTargets, blocks) -> Tensor:
    if targets.bond_labels.size == 0:
        raise ValueError("bond-type loss needs a non-empty masked bond set")
    u = ad.gather_rows(node_t, targets.masked_bond_ends[:, 0])
    v = ad.gather_rows(node_t, targets.masked_bond_ends[:, 1])
    uv = ad.concat([u, v], axis=1) @ blocks["head.bond.w"]
    vu = ad.concat([v, u], axis=1) @ blocks["head.bond.w"]
    logits = (uv + vu) * 0.5 + blocks["head.bond.b"]
    return _ce_mean(logits, targets.bond_labels, targets.n_bond_classes)


def _smooth_l1_t(pred: Tensor, target: float) -> Tensor:
    diff = pred - target
    dist = ad.absval(diff)
    quad = (np.abs(diff.data) < 1.0).astype(diff.dtype)  # branch choice, no grad
    branched = Tensor(quad) * (diff * diff * 0.5) + Tensor(1.0 - quad) * (dist - 0.5)
    return branched.sum()


def _loss_counts_t(
    graph_t: Tensor, targets: SslTargets, blocks
) -> tuple[Tensor, Tensor]:
    pred_an = graph_t @ blocks["head.an.w"] + blocks["head.an.b"]
    pred_bn = graph_t @ blocks["head.bn.w"] + blocks["head.bn.b"]
    return _smooth_l1_t(pred_an, float(targets.y_an)), _smooth_l1_t(
        pred_bn, float(targets.y_bn)
    )


def derangement(n: int, seed: int) -> np.ndarray:
    """Seeded fixed-point-free permutation by rejection sampling."""
    if n < 2:
        raise ValueError("derangement needs n >= 2")
    rng = np.random.default_rng(seed)
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == np.arange(n)):
            return perm.astype(np.int64)


def _loss_contrastive_t(xm_t: Tensor, xt: np.ndarray, seed: int) -> Tensor:
    """xm_t: (B, d_text) projected graph vectors; xt: (B, d_text) constants."""
    n = xm_t.shape[0]
    if n < 2:
        raise ValueError("contrastive loss needs batch size >= 2")
    sigma = derangement(n, seed)
    xt = xt.astype(xm_t.dtype)
    xt_c = Tensor(xt)
    xt_neg = Tensor(xt[sigma])
    xm_neg = ad.gather_rows(xm_t, sigma)

    def log_sig(scores: Tensor) -> Tensor:
        return ad.log(ad.clip(ad.sigmoid(scores), _P_LO, _P_HI))

    def log_one_minus_sig(scores: Tensor) -> Tensor:
        return ad.log(1.0 - ad.clip(ad.sigmoid(scores), _P_LO, _P_HI))

    pos = log_sig((xm_t * xt_c).sum(axis=1))
    neg_text = log_one_minus_sig((xm_t * xt_neg).sum(axis=1))
    neg_mol = log_one_minus_sig((xm_neg * xt_c).sum(axis=1))
    per_sample = (pos + neg_text + neg_mol) * (-0.5)
    return per_sample.mean()


# -- public evaluation API -------------------------------------------------------


def loss_link(features: LevelFeatures, hg: HierGraph) -> float:
    targets = build_targets(hg, frozenset())
    with ad.no_grad():
        return float(_loss_link_t(Tensor(features.node_mat), targets).data)


def loss_atom_type(features: LevelFeatures, targets: SslTargets, heads: Heads) -> float:
    with ad.no_grad():
        blocks = {k: Tensor(v) for k, v in heads.blocks.items()}
        return float(_loss_atom_type_t(Tensor(features.node_mat), targets, blocks).data)


def loss_bond_type(features: LevelFeatures, targets: SslTargets, heads: Heads) -> float:
    with ad.no_grad():
        blocks = {k: Tensor(v) for k, v in heads.blocks.items()}
        return float(_loss_bond_type_t(Tensor(features.node_mat), targets, blocks).data)


def loss_counts(
    features: LevelFeatures, targets: SslTargets, heads: Heads
) -> tuple[float, float]:
    with ad.no_grad():
        blocks = {k: Tensor(v) for k, v in heads.blocks.items()}
        l_an, l_bn = _loss_counts_t(Tensor(features.graph_vec), targets, blocks)
    return float(l_an.data), float(l_bn.data)


def loss_contrastive(
    graph_vecs: np.ndarray, text_vecs: np.ndarray, heads: Heads, seed: int
) -> float:
    """graph_vecs: (B, d_GNN); text_vecs: (B, d_text); projected internally."""
    with ad.no_grad():
        xm = Tensor(graph_vecs) @ Tensor(heads.blocks["head.text.w"])
        return float(_loss_contrastive_t(xm, text_vecs, seed).data)


_LOSS_NAMES = ("link", "atom_type", "bond_type", "atom_count", "bond_count", "contrastive")


@dataclass
class LossWeights:
    link: float = 1.0
    atom_type: float = 1.0
    bond_type: float = 1.0
    atom_count: float = 1.0
    bond_count: float = 1.0
    contrastive: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"negative loss weight: {f.name}")

    def as_dict(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}


@dataclass
class LossReport:
    link: float
    atom_type: float
    bond_type: float
    atom_count: float
    bond_count: float
    contrastive: float
    total: float

    def values(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in _LOSS_NAMES}


def total_loss(losses: dict[str, float], weights: LossWeights | None = None) -> float:
    """Weighted sum over the named loss terms; missing terms count as 0."""
    weights = weights or LossWeights()
    wdict = weights.as_dict()
    unknown = set(losses) - set(wdict)
    if unknown:
        raise ValueError(f"unknown loss terms: {sorted(unknown)}")
    return float(sum(wdict[k] * v for k, v in losses.items()))
