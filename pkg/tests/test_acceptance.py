"""Release gate: eleven numbered checks, each printing one pass/fail line.

Every check re-derives its expected values independently of the library
(finite differences, exponential recursions, closed-form constants) and
asserts at a fixed tolerance.  Run with -s to see the lines; under plain
pytest each criterion is still visible as its own test result.  Criterion
11 is a soft performance target that documents the envelope on the build
machine rather than a portable guarantee.
"""

import math
import time
from functools import lru_cache

import numpy as np

from moltok.dataprep import clean
from moltok.encoder.forward import LevelFeatures, encode
from moltok.encoder.params import init_params, load_checkpoint, save_checkpoint
from moltok.fusion import (
    AlignConfig,
    align_projector,
    export_tokens,
    init_projector,
    load_tokens,
    matched_vs_mismatched,
    project,
    reduce_all,
    reduce_hierarchical,
    reduce_none,
    reduce_sample,
)
from moltok.hierseg import RULE_SETS, EdgeKind, segment
from moltok.metrics.fingerprints import morgan_fp, tanimoto
from moltok.metrics.strings import bleu_n, levenshtein, rouge_l, rouge_n
from moltok.molgraph import (
    canonicalize,
    decode_selfies,
    is_isomorphic,
    parse_smiles,
    permute_molecule,
)
from moltok.molgraph.randmol import random_molecules
from moltok.molgraph.rings import ring_bonds
from moltok.molgraph.selfies import ALPHABET
from moltok.molgraph.valence import validate_valence
from moltok.pretrain.heads import init_heads
from moltok.pretrain.losses import LossWeights, _smooth_l1_t, loss_contrastive
from moltok.pretrain.train import (
    TrainConfig,
    grad,
    make_samples,
    masked_atom_accuracy,
    train,
)
from moltok.autodiff import Tensor

RULES = RULE_SETS["simple-brics"]


def report(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"[{'pass' if ok else 'FAIL'}] criterion {num:02d} {name}: {detail}"
    print(line)
    assert ok, line


def rel_err(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(np.max(np.abs(x - y)) / max(np.max(np.abs(y)), 1e-8))


# -- 1. gradient correctness ------------------------------------------------------


def test_criterion_01_gradients_match_finite_differences():
    t0 = time.perf_counter()
    mols = random_molecules(10, seed=4)
    hgs = [segment(m, RULES) for m in mols]
    params = init_params(0, d_gnn=8, n_layers=2).astype(np.float64)
    heads = init_heads(1, d=8, d_text=8).astype(np.float64)
    texts = np.random.default_rng(2).normal(size=(10, 8))
    samples = make_samples(hgs, texts, 0.3, seeds=list(range(10)))
    weights = LossWeights()
    grads, _ = grad(params, heads, samples, weights, contrastive_seed=5)

    def total() -> float:
        _, rep = grad(params, heads, samples, weights, contrastive_seed=5)
        return rep.total

    h = 1e-5
    worst = 0.0
    worst_block = ""
    for name, block in {**params.blocks, **heads.blocks}.items():
        flat = block.reshape(-1)
        g = grads[name].reshape(-1)
        # probe the largest-magnitude entries; tiny entries drown in FD noise
        probes = np.argsort(-np.abs(g))[:3]
        for i in probes:
            keep = flat[i]
            flat[i] = keep + h
            up = total()
            flat[i] = keep - h
            down = total()
            flat[i] = keep
            fd = (up - down) / (2.0 * h)
            if max(abs(fd), abs(g[i])) < 1e-8:
                continue
            err = abs(fd - g[i]) / max(abs(fd), abs(g[i]))
            if err > worst:
                worst, worst_block = err, name
    dt = time.perf_counter() - t0
    ok = worst <= 1e-4 and dt < 60.0
    report(1, "gradient correctness", ok,
           f"worst rel err {worst:.2e} at {worst_block or 'n/a'} "
           f"(tol 1e-4), {len(mols)} molecules, {dt:.1f}s")


# -- 2. pooling algebra -----------------------------------------------------------


def test_criterion_02_pooling_algebra():
    rng = np.random.default_rng(6)
    projector = init_projector(3, d_gnn=24, d_llm=16)
    w64 = projector.W.astype(np.float64)
    b64 = projector.bias.astype(np.float64)
    worst = 0.0
    for _ in range(1000):
        a = int(rng.integers(1, 31))
        b = int(rng.integers(1, 9))
        f = LevelFeatures(
            node_mat=rng.normal(size=(a, 24)).astype(np.float32),
            motif_mat=rng.normal(size=(b, 24)).astype(np.float32),
            graph_vec=rng.normal(size=(1, 24)).astype(np.float32),
        )
        p = project(f, projector)
        t_none, t_hier, t_all = reduce_none(p), reduce_hierarchical(p), reduce_all(p)
        assert (t_none.k, t_hier.k, t_all.k) == (a + b + 1, 3, 1)
        weighted = (
            a * t_hier.tokens[0] + b * t_hier.tokens[1] + t_hier.tokens[2]
        ) / (a + b + 1)
        raw = np.vstack([f.node_mat, f.motif_mat, f.graph_vec]).astype(np.float64)
        of_mean = raw.mean(axis=0) @ w64 + b64
        worst = max(worst, rel_err(t_all.tokens[0], weighted),
                    rel_err(t_all.tokens[0], of_mean))
    ok = worst <= 1e-5
    report(2, "pooling algebra", ok,
           f"1000 feature sets, worst rel err {worst:.2e} (tol 1e-5), "
           f"token counts exact")


# -- 3. segmentation laws ---------------------------------------------------------


def test_criterion_03_segmentation_laws():
    mols = []
    for m in random_molecules(1200, seed=8, min_heavy=5):
        r = clean(canonicalize(m).text)
        if r.accepted:
            mols.append(parse_smiles(r.canonical))
    assert len(mols) >= 1000
    mols = mols[:1000]
    violations = 0
    for mol in mols:
        hg = segment(mol, RULES)
        hg.validate()
        part = hg.partition
        kinds = [e.kind for e in hg.edges]
        ok_mol = (
            len(part.motif_id) == hg.a
            and set(part.motif_id) == set(range(part.num_motifs))
            and part.num_motifs == hg.b
            and kinds.count(EdgeKind.MOTIF_LINK) == hg.a
            and kinds.count(EdgeKind.GRAPH_LINK) == hg.b
            and not (part.cut_bonds & ring_bonds(mol))
        )
        # motifs connected under the kept bonds
        for motif in range(part.num_motifs):
            atoms = part.atoms_of(motif)
            seen = {atoms[0]}
            frontier = [atoms[0]]
            adj = {i: [] for i in atoms}
            for bi, bond in enumerate(mol.bonds):
                if bi in part.cut_bonds:
                    continue
                if bond.a in adj and bond.b in adj:
                    adj[bond.a].append(bond.b)
                    adj[bond.b].append(bond.a)
            while frontier:
                cur = frontier.pop()
                for nxt in adj[cur]:
                    if nxt not in seen:
                        seen.add(nxt)
                        frontier.append(nxt)
            ok_mol = ok_mol and seen == set(atoms)
        violations += not ok_mol
    ok = violations == 0
    report(3, "segmentation laws", ok,
           f"{len(mols)} cleaned molecules, {violations} violations")


# -- 4. smooth-L1 branch agreement ------------------------------------------------


def test_criterion_04_smooth_l1_branches():
    def f(v: float) -> float:
        return float(_smooth_l1_t(Tensor(np.array(v, dtype=np.float64)), 0.0).data)

    quad_at_one = 0.5 * 1.0**2
    lin_at_one = abs(1.0) - 0.5
    gap = abs(quad_at_one - lin_at_one)
    impl_gap = abs(f(1.0) - 0.5)
    kink = abs(f(1.0 - 1e-9) - f(1.0 + 1e-9))
    ok = (
        gap <= 1e-12
        and impl_gap <= 1e-12
        and f(0.5) == 0.125
        and f(2.0) == 1.5
        and f(-2.0) == 1.5
        and kink <= 1e-8
    )
    report(4, "smooth-L1 branch agreement", ok,
           f"branch gap {gap:.1e} at 1.0, f(0.5)={f(0.5)}, f(2)={f(2.0)}, "
           f"kink gap {kink:.1e}")


# -- 5. contrastive sanity --------------------------------------------------------


def test_criterion_05_contrastive_sanity():
    heads = init_heads(0, d=8, d_text=8).astype(np.float64)
    zero = loss_contrastive(np.zeros((4, 8)), np.zeros((4, 8)), heads, seed=0)
    const = 1.5 * math.log(2.0)
    zero_gap = abs(zero - const)

    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    feats = []
    for _ in range(64):
        a = int(rng.integers(4, 12))
        b = int(rng.integers(1, 4))
        feats.append(LevelFeatures(
            node_mat=rng.normal(size=(a, 64)).astype(np.float32),
            motif_mat=rng.normal(size=(b, 64)).astype(np.float32),
            graph_vec=rng.normal(size=(1, 64)).astype(np.float32),
        ))
    texts = np.eye(64, dtype=np.float32)
    projector = align_projector(feats, texts, AlignConfig(seed=3, lr=5e-2, steps=500))
    score = matched_vs_mismatched(projector, feats, texts, seed=3)
    dt = time.perf_counter() - t0
    ok = zero_gap <= 1e-9 and score >= 0.90 and dt < 120.0
    report(5, "contrastive sanity", ok,
           f"all-zero loss off by {zero_gap:.1e} from (3/2)ln2, "
           f"matched beats mismatched for {score:.0%} of 64 pairs "
           f"after 500 steps, {dt:.1f}s")


# -- 6. overfit check -------------------------------------------------------------


def test_criterion_06_overfit_small_corpus():
    t0 = time.perf_counter()
    mols = random_molecules(16, seed=11, min_heavy=4, max_heavy=8)
    hgs = [segment(m, RULES) for m in mols]
    config = TrainConfig(seed=0, d_gnn=64, n_layers=2, d_text=16, lr=1e-2,
                         batch_size=16, mask_ratio=0.15, steps=500,
                         weights=LossWeights(atom_type=20.0))
    result = train(mols, config, None)
    acc = masked_atom_accuracy(result.params, result.heads, hgs, 0.15, seed=99)
    first, last = result.log[0].total, result.log[-1].total
    dt = time.perf_counter() - t0
    ok = acc >= 0.95 and last < first and dt < 120.0
    report(6, "overfit check", ok,
           f"16 molecules, 500 steps: masked atom accuracy {acc:.3f} "
           f"(>= 0.95), loss {first:.1f} -> {last:.1f}, {dt:.1f}s")


# -- 7. canonicalization stability ------------------------------------------------


def test_criterion_07_canonicalization_stability():
    mols = random_molecules(500, seed=12, max_heavy=12)
    rng = np.random.default_rng(13)
    perm_failures = 0
    for mol in mols:
        ref = canonicalize(mol).text
        for _ in range(20):
            perm = list(rng.permutation(mol.num_atoms))
            if canonicalize(permute_molecule(mol, perm)).text != ref:
                perm_failures += 1
    oracle_failures = 0
    pairs = 0
    canon = [canonicalize(m).text for m in mols]
    for _ in range(300):
        i, j = rng.integers(len(mols), size=2)
        same_text = canon[i] == canon[j]
        if same_text != is_isomorphic(mols[i], mols[j]):
            oracle_failures += 1
        pairs += 1
    for i in rng.integers(len(mols), size=100):  # guaranteed-isomorphic pairs
        perm = list(rng.permutation(mols[i].num_atoms))
        twin = permute_molecule(mols[i], perm)
        if not (canonicalize(twin).text == canon[i] and is_isomorphic(mols[i], twin)):
            oracle_failures += 1
        pairs += 1
    ok = perm_failures == 0 and oracle_failures == 0
    report(7, "canonicalization stability", ok,
           f"500 molecules x 20 permutations: {perm_failures} drift; "
           f"isomorphism oracle agreement on {pairs} pairs: "
           f"{oracle_failures} disagreements")


# -- 8. robust string decoding ----------------------------------------------------


def test_criterion_08_selfies_robustness():
    rng = np.random.default_rng(14)
    violations = 0
    for _ in range(1000):
        length = int(rng.integers(1, 41))
        tokens = rng.integers(len(ALPHABET), size=length)
        text = "".join(ALPHABET[i] for i in tokens)
        mol = decode_selfies(text)
        violations += bool(validate_valence(mol))
    ok = violations == 0
    report(8, "robust string decoding", ok,
           f"1000 random token strings decoded, {violations} valence violations")


# -- 9. metric oracles ------------------------------------------------------------


def test_criterion_09_metric_oracles():
    @lru_cache(maxsize=None)
    def slow(a: str, b: str) -> int:
        if not a:
            return len(b)
        if not b:
            return len(a)
        return min(
            slow(a[1:], b) + 1,
            slow(a, b[1:]) + 1,
            slow(a[1:], b[1:]) + (a[0] != b[0]),
        )

    rng = np.random.default_rng(15)
    lev_bad = 0
    for _ in range(200):
        a = "".join(rng.choice(list("abcd"), size=rng.integers(0, 9)))
        b = "".join(rng.choice(list("abcd"), size=rng.integers(0, 9)))
        lev_bad += levenshtein(a, b) != slow(a, b)

    mols = random_molecules(40, seed=15)
    fps = [morgan_fp(m) for m in mols]
    tan_bad = sum(tanimoto(fp, fp) != 1.0 for fp in fps)
    for _ in range(1000):
        i, j = rng.integers(len(fps), size=2)
        t = tanimoto(fps[i], fps[j])
        tan_bad += not (0.0 <= t <= 1.0)

    toks = "four score and seven years ago".split()
    text_bad = (
        bleu_n(toks, toks, 4) != 1.0
        or rouge_n(toks, toks, 2) != 1.0
        or rouge_l(toks, toks) != 1.0
    )
    ok = lev_bad == 0 and tan_bad == 0 and not text_bad
    report(9, "metric oracles", ok,
           f"levenshtein vs recursion 200 pairs: {lev_bad} off; tanimoto "
           f"identity+bounds 1000 pairs: {tan_bad} off; identical-text "
           f"BLEU/ROUGE exactly 1.0: {not text_bad}")


# -- 10. determinism and formats --------------------------------------------------


def test_criterion_10_determinism_and_formats(tmp_path):
    mols = random_molecules(6, seed=16)
    config = TrainConfig(seed=3, d_gnn=16, n_layers=2, d_text=8, lr=1e-3,
                         batch_size=4, mask_ratio=0.15, steps=3,
                         weights=LossWeights())
    ck = [tmp_path / "a.ckpt", tmp_path / "b.ckpt"]
    for path in ck:
        result = train(mols, config, None)
        save_checkpoint(path, result.params, extra=result.heads.blocks)
    same_train = ck[0].read_bytes() == ck[1].read_bytes()

    params, extra = load_checkpoint(ck[0])
    save_checkpoint(tmp_path / "rt.ckpt", params, extra=extra)
    ckpt_roundtrip = (tmp_path / "rt.ckpt").read_bytes() == ck[0].read_bytes()

    projector = init_projector(5, 16, 8)
    feature = encode(segment(mols[0], RULES), params)
    bundle = reduce_sample(project(feature, projector), "hier")
    tk = [tmp_path / "a.tok", tmp_path / "b.tok"]
    for path in tk:
        export_tokens(bundle, path)
    same_tokens = tk[0].read_bytes() == tk[1].read_bytes()
    export_tokens(load_tokens(tk[0]), tmp_path / "rt.tok")
    tok_roundtrip = (tmp_path / "rt.tok").read_bytes() == tk[0].read_bytes()

    ok = same_train and ckpt_roundtrip and same_tokens and tok_roundtrip
    report(10, "determinism and formats", ok,
           f"repeat-train checkpoints identical: {same_train}; checkpoint "
           f"round-trip bit-exact: {ckpt_roundtrip}; token files identical: "
           f"{same_tokens}; token round-trip bit-exact: {tok_roundtrip}")


# -- 11. throughput (soft target) --------------------------------------------------


def test_criterion_11_throughput():
    mols = random_molecules(150, seed=17, min_heavy=10, max_heavy=45)
    params = init_params(0, d_gnn=300, n_layers=5)
    encode(segment(mols[0], RULES), params)  # warm caches before timing
    t0 = time.perf_counter()
    for m in mols:
        encode(segment(m, RULES), params)
    rate = len(mols) / (time.perf_counter() - t0)
    ok = rate >= 100.0
    report(11, "throughput", ok,
           f"segment+encode {rate:.0f} molecules/s single worker "
           f"(soft target 100/s, d=300, 5 layers, <=45 heavy atoms)")
