"""Joint pre-training loop: batch assembly, gradients, Adam updates.

Per-sample objectives are summed across the batch (so duplicating a sample
exactly doubles its gradient); the contrastive term is computed once per
batch on the stacked graph vectors.  Training runs in float32; gradient
checking re-runs the identical graph in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..encoder.forward import encode_tensors, mask_atoms
from ..encoder.params import GNNParams, init_params
from ..hierseg import HierGraph, segment
from ..molgraph.mol import Molecule
from .heads import Heads, init_heads
from .losses import (
    LossReport,
    LossWeights,
    _loss_atom_type_t,
    _loss_bond_type_t,
    _loss_contrastive_t,
    _loss_counts_t,
    _loss_link_t,
)
from .targets import SslTargets, build_targets


@dataclass
class TrainConfig:
    seed: int = 0
    d_gnn: int = 64
    n_layers: int = 3
    d_text: int = 64
    lr: float = 1e-3
    batch_size: int = 8
    mask_ratio: float = 0.15
    steps: int = 100
    weights: LossWeights = field(default_factory=LossWeights)


@dataclass
class Sample:
    """One training example: a masked graph, its targets, and a text vector."""

    hg: HierGraph
    targets: SslTargets
    text_vec: np.ndarray  # (d_text,)


def batch_loss_t(
    samples: list[Sample],
    blocks: dict[str, Tensor],
    n_layers: int,
    weights: LossWeights,
    contrastive_seed: int,
) -> tuple[Tensor, LossReport]:
    """Weighted batch loss as a Tensor plus the float report.

    Samples whose masked bond set is empty skip the bond-type term (the op
    itself rejects an empty set); everything else always contributes.
    """
    terms: dict[str, list[Tensor]] = {
        "link": [], "atom_type": [], "bond_type": [],
        "atom_count": [], "bond_count": [],
    }
    graph_vecs: list[Tensor] = []
    for sample in samples:
        node_t, _, graph_t = encode_tensors(sample.hg, blocks, n_layers)
        terms["link"].append(_loss_link_t(node_t, sample.targets))
        if sample.targets.masked_atoms.size:
            terms["atom_type"].append(
                _loss_atom_type_t(node_t, sample.targets, blocks)
            )
        if sample.targets.bond_labels.size:
            terms["bond_type"].append(
                _loss_bond_type_t(node_t, sample.targets, blocks)
            )
        l_an, l_bn = _loss_counts_t(graph_t, sample.targets, blocks)
        terms["atom_count"].append(l_an)
        terms["bond_count"].append(l_bn)
        graph_vecs.append(graph_t.reshape(-1))

    def tensor_sum(parts: list[Tensor]) -> Tensor | None:
        if not parts:
            return None
        acc = parts[0]
        for p in parts[1:]:
            acc = acc + p
        return acc

    report_values: dict[str, float] = {}
    weighted: list[Tensor] = []
    wdict = weights.as_dict()
    for name, parts in terms.items():
        summed = tensor_sum(parts)
        report_values[name] = 0.0 if summed is None else float(summed.data)
        if summed is not None and wdict[name] != 0.0:
            weighted.append(summed * wdict[name])

    if wdict["contrastive"] != 0.0 and len(samples) >= 2:
        xm = ad.stack_rows(graph_vecs) @ blocks["head.text.w"]
        xt = np.stack([s.text_vec for s in samples])
        contrastive = _loss_contrastive_t(xm, xt, contrastive_seed)
        report_values["contrastive"] = float(contrastive.data)
        weighted.append(contrastive * wdict["contrastive"])
    else:
        report_values["contrastive"] = 0.0

    total = tensor_sum(weighted)
    if total is None:
        total = Tensor(np.zeros((), dtype=np.float32))
    total_value = float(total.data)
    report = LossReport(total=total_value, **report_values)
    return total, report


def grad(
    params: GNNParams,
    heads: Heads,
    samples: list[Sample],
    weights: LossWeights | None = None,
    contrastive_seed: int = 0,
) -> tuple[dict[str, np.ndarray], LossReport]:
    """Reverse-mode gradients of the weighted batch loss for every block."""
    if not samples:
        raise ValueError("grad needs a non-empty batch")
    weights = weights or LossWeights()
    blocks = {
        name: Tensor(arr, requires_grad=True)
        for name, arr in {**params.blocks, **heads.blocks}.items()
    }
    total, report = batch_loss_t(
        samples, blocks, params.L, weights, contrastive_seed
    )
    if not np.isfinite(total.data):
        raise FloatingPointError(f"non-finite loss: {total.data}")
    total.backward()
    grads = {
        name: (t.grad if t.grad is not None else np.zeros_like(t.data))
        for name, t in blocks.items()
    }
    return grads, report


class Adam:
    """Moment-based optimizer; beta1 0.9, beta2 0.999, eps 1e-8 defaults."""

    def __init__(
        self,
        blocks: dict[str, np.ndarray],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.blocks = blocks
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in blocks.items()}
        self.v = {k: np.zeros_like(v) for k, v in blocks.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for name, p in self.blocks.items():
            g = grads[name].astype(p.dtype)
            m = self.m[name]
            v = self.v[name]
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


@dataclass
class TrainResult:
    params: GNNParams
    heads: Heads
    log: list[LossReport]


def make_samples(
    hgs: list[HierGraph],
    text_vecs: np.ndarray,
    mask_ratio: float,
    seeds: list[int],
) -> list[Sample]:
    out = []
    for hg, vec, seed in zip(hgs, text_vecs, seeds):
        masked_hg, masked = mask_atoms(hg, mask_ratio, seed)
        out.append(Sample(masked_hg, build_targets(hg, masked), vec))
    return out


def train(
    molecules: list[Molecule],
    config: TrainConfig,
    text_vecs: np.ndarray | None = None,
) -> TrainResult:
    """Pre-train encoder and heads; deterministic for a given config.

    ``text_vecs`` is an optional (N, d_text) array aligned with the molecule
    list; when absent the contrastive term is dropped (weight forced to 0).
    """
    if not molecules:
        raise ValueError("empty dataset")
    hgs = [segment(mol) for mol in molecules]
    weights = config.weights
    if text_vecs is None:
        weights = replace(weights, contrastive=0.0)
        text_vecs = np.zeros((len(molecules), config.d_text), dtype=np.float32)

    params = init_params(config.seed, config.d_gnn, config.n_layers)
    heads = init_heads(config.seed + 1, config.d_gnn, config.d_text)
    trainable = {**params.blocks, **heads.blocks}
    optimizer = Adam(trainable, lr=config.lr)
    rng = np.random.default_rng(config.seed)
    log: list[LossReport] = []
    for step in range(config.steps):
        idx = rng.choice(len(hgs), size=min(config.batch_size, len(hgs)), replace=False)
        mask_seeds = [int(s) for s in rng.integers(0, 2**31 - 1, size=len(idx))]
        contrastive_seed = int(rng.integers(0, 2**31 - 1))
        samples = make_samples(
            [hgs[i] for i in idx], text_vecs[idx], config.mask_ratio, mask_seeds
        )
        try:
            grads, report = grad(params, heads, samples, weights, contrastive_seed)
        except FloatingPointError as err:
            raise FloatingPointError(f"diverged at step {step}: {err}") from err
        optimizer.step(grads)
        log.append(report)
    return TrainResult(params, heads, log)


def masked_atom_accuracy(
    params: GNNParams,
    heads: Heads,
    hgs: list[HierGraph],
    mask_ratio: float,
    seed: int,
) -> float:
    """Fraction of masked atoms whose head argmax matches the true element."""
    hits = 0
    total = 0
    rng = np.random.default_rng(seed)
    w = heads.blocks["head.atom.w"]
    b = heads.blocks["head.atom.b"]
    for hg in hgs:
        masked_hg, masked = mask_atoms(hg, mask_ratio, int(rng.integers(2**31 - 1)))
        if not masked:
            continue
        targets = build_targets(hg, masked)
        with ad.no_grad():
            blocks = {k: Tensor(v) for k, v in params.blocks.items()}
            node_t, _, _ = encode_tensors(masked_hg, blocks, params.L)
        logits = node_t.data[targets.masked_atoms] @ w + b
        hits += int((logits.argmax(axis=1) == targets.atom_labels).sum())
        total += len(targets.atom_labels)
    return hits / total if total else 0.0
