"""Built-in verification suites behind the `selfcheck` CLI command.

Three independent checks: analytic gradients against central finite
differences, pooling algebra identities, and canonical-form stability
under atom permutation.  Each returns a result record instead of raising,
so the CLI can print one line per suite and exit nonzero on any failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .encoder.forward import LevelFeatures
from .encoder.params import init_params
from .fusion import init_projector, project, reduce_all, reduce_hierarchical, reduce_none
from .hierseg import segment
from .molgraph.canon import canonicalize
from .molgraph.mol import permute_molecule
from .molgraph.randmol import random_molecules
from .molgraph.smiles import parse_smiles
from .pretrain.heads import init_heads
from .pretrain.losses import LossWeights
from .pretrain.train import batch_loss_t, grad, make_samples


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: dict


def gradient_check_suite(
    seed: int = 0,
    n_molecules: int = 10,
    d: int = 8,
    n_layers: int = 2,
    probes_per_block: int = 4,
    step: float = 1e-5,
    tol: float = 1e-4,
) -> SuiteResult:
    """Reverse-mode gradients vs central differences, float64, all blocks."""
    mols = random_molecules(n_molecules, seed=seed, min_heavy=4, max_heavy=12)
    hgs = [segment(m) for m in mols]
    d_text = 8
    rng = np.random.default_rng(seed + 1)
    texts = rng.normal(size=(len(hgs), d_text)).astype(np.float64)
    samples = make_samples(hgs, texts, 0.3, list(range(len(hgs))))
    weights = LossWeights()
    params = init_params(seed + 2, d, n_layers).astype(np.float64)
    heads = init_heads(seed + 3, d, d_text).astype(np.float64)
    grads, _ = grad(params, heads, samples, weights, contrastive_seed=seed)

    blocks = {**params.blocks, **heads.blocks}

    def loss_at() -> float:
        tensors = {k: Tensor(v) for k, v in blocks.items()}
        total, _ = batch_loss_t(samples, tensors, n_layers, weights, seed)
        return float(total.data)

    probe_rng = np.random.default_rng(seed + 4)
    worst = 0.0
    worst_block = ""
    for name, arr in blocks.items():
        flat = arr.reshape(-1)
        count = min(probes_per_block, flat.size)
        for idx in probe_rng.choice(flat.size, size=count, replace=False):
            orig = flat[idx]
            flat[idx] = orig + step
            up = loss_at()
            flat[idx] = orig - step
            down = loss_at()
            flat[idx] = orig
            fd = (up - down) / (2.0 * step)
            an = float(grads[name].reshape(-1)[idx])
            rel = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
            if rel > worst:
                worst, worst_block = rel, name
    return SuiteResult(
        "gradient-check",
        worst <= tol,
        {"worst_rel_err": worst, "worst_block": worst_block, "tol": tol,
         "molecules": n_molecules, "probes_per_block": probes_per_block},
    )


def _random_features(rng: np.random.Generator, d: int) -> LevelFeatures:
    a = int(rng.integers(1, 9))
    b = int(rng.integers(1, 5))
    return LevelFeatures(
        rng.normal(size=(a, d)).astype(np.float64),
        rng.normal(size=(b, d)).astype(np.float64),
        rng.normal(size=(1, d)).astype(np.float64),
    )


def pooling_algebra_suite(
    seed: int = 0, trials: int = 1000, d: int = 16, d_llm: int = 8, tol: float = 1e-5
) -> SuiteResult:
    """reduce_all vs weighted hierarchical mean vs projection of raw mean."""
    rng = np.random.default_rng(seed)
    projector = init_projector(seed + 1, d, d_llm)
    worst = 0.0
    for _ in range(trials):
        feats = _random_features(rng, d)
        pf = project(feats, projector)
        bundle_none = reduce_none(pf)
        bundle_hier = reduce_hierarchical(pf)
        bundle_all = reduce_all(pf)
        a, b = feats.a, feats.b
        if (bundle_none.k, bundle_hier.k, bundle_all.k) != (a + b + 1, 3, 1):
            return SuiteResult(
                "pooling-algebra", False,
                {"error": "token-count contract violated", "a": a, "b": b},
            )
        weighted = (
            a * bundle_hier.tokens[0] + b * bundle_hier.tokens[1] + bundle_hier.tokens[2]
        ) / (a + b + 1)
        raw_mean = np.concatenate(
            [feats.node_mat, feats.motif_mat, feats.graph_vec]
        ).mean(axis=0)
        commuted = raw_mean @ projector.W + projector.bias
        target = bundle_all.tokens[0]
        scale = max(float(np.abs(target).max()), 1e-12)
        worst = max(
            worst,
            float(np.abs(target - weighted).max()) / scale,
            float(np.abs(target - commuted).max()) / scale,
        )
    return SuiteResult(
        "pooling-algebra",
        worst <= tol,
        {"worst_rel_err": worst, "tol": tol, "trials": trials},
    )


def canon_stability_suite(
    seed: int = 0, n_molecules: int = 100, perms_per_molecule: int = 5
) -> SuiteResult:
    """Canonical text invariant under permutation and under reparsing."""
    mols = random_molecules(n_molecules, seed=seed, min_heavy=3, max_heavy=14)
    rng = np.random.default_rng(seed + 1)
    failures = 0
    checked = 0
    for mol in mols:
        reference = canonicalize(mol).text
        if canonicalize(parse_smiles(reference)).text != reference:
            failures += 1
        for _ in range(perms_per_molecule):
            perm = list(rng.permutation(mol.num_atoms))
            if canonicalize(permute_molecule(mol, perm)).text != reference:
                failures += 1
            checked += 1
    return SuiteResult(
        "canon-stability",
        failures == 0,
        {"molecules": n_molecules, "permutations": checked, "failures": failures},
    )


def run_all(seed: int = 0) -> list[SuiteResult]:
    return [
        gradient_check_suite(seed=seed),
        pooling_algebra_suite(seed=seed),
        canon_stability_suite(seed=seed),
    ]
