"""Objective functions against hand-computed oracles."""

import math

import numpy as np
import pytest

from moltok.autodiff import Tensor
from moltok.encoder.forward import LevelFeatures
from moltok.hierseg import segment
from moltok.molgraph import parse_smiles
from moltok.pretrain import (
    Heads,
    LossReport,
    LossWeights,
    N_ATOM_CLASSES,
    N_BOND_CLASSES,
    build_targets,
    derangement,
    init_heads,
    loss_atom_type,
    loss_bond_type,
    loss_contrastive,
    loss_counts,
    loss_link,
    total_loss,
)
from moltok.pretrain.losses import _smooth_l1_t

LN2 = math.log(2.0)


def seg(smiles):
    return segment(parse_smiles(smiles))


def zero_features(a, b, d):
    return LevelFeatures(
        np.zeros((a, d), dtype=np.float64),
        np.zeros((b, d), dtype=np.float64),
        np.zeros((1, d), dtype=np.float64),
    )


def make_heads(d, d_text=4, **overrides):
    h = init_heads(seed=0, d=d, d_text=d_text)
    blocks = {k: np.zeros_like(v) for k, v in h.blocks.items()}
    blocks.update(overrides)
    return Heads(d, d_text, blocks)


# -- link prediction ------------------------------------------------------------


def test_link_all_zero_is_pairs_times_ln2():
    # zero embeddings: every pair scores sigmoid(0) = 1/2, -ln(1/2) = ln2
    hg = seg("CCO")
    feats = zero_features(hg.a, hg.b, 6)
    assert math.isclose(loss_link(feats, hg), 3 * LN2, rel_tol=1e-12)


def test_link_single_pair_is_minus_log_half():
    hg = seg("C=C")
    feats = zero_features(2, hg.b, 4)
    assert math.isclose(loss_link(feats, hg), -math.log(0.5), rel_tol=1e-12)


def test_link_engineered_scores():
    # bonded pair dotted to +2, non-bonded to -2:
    # loss = -ln s(2) per correct pair, identical value for the wrong sign
    hg = seg("CCO")  # bonds (0,1), (1,2); non-bond (0,2)
    node = np.array(
        [
            [math.sqrt(2.0), 0.0, 0.0],
            [math.sqrt(2.0), 0.0, 0.0],
            [-math.sqrt(2.0), 0.0, 0.0],
        ]
    )
    # dots: (0,1)=+2 label 1, (0,2)=-2 label 0, (1,2)=-2 label 1
    feats = LevelFeatures(node, np.zeros((1, 3)), np.zeros((1, 3)))
    good = math.log(1.0 + math.exp(-2.0))
    bad = 2.0 + good  # -ln s(-2) = 2 + ln(1 + e^-2)
    assert math.isclose(loss_link(feats, hg), 2 * good + bad, rel_tol=1e-10)


def test_link_perfect_scores_near_zero():
    hg = seg("CC")
    feats = LevelFeatures(np.full((2, 1), 10.0), np.zeros((1, 1)), np.zeros((1, 1)))
    assert loss_link(feats, hg) < 1e-4


# -- masked atom type -------------------------------------------------------------


def test_atom_type_uniform_is_log_k():
    # zero features and zero head give uniform logits: CE = ln(num classes)
    hg, masked = seg("CCO"), frozenset({0, 2})
    targets = build_targets(hg, masked)
    feats = zero_features(3, hg.b, 5)
    got = loss_atom_type(feats, targets, make_heads(5))
    assert math.isclose(got, math.log(N_ATOM_CLASSES), rel_tol=1e-12)


def test_atom_type_bias_only_oracle():
    # bias puts weight w on the correct class for every masked atom
    hg = seg("CC")
    targets = build_targets(hg, frozenset({0, 1}))
    label = targets.atom_labels[0]
    bias = np.zeros(N_ATOM_CLASSES, dtype=np.float64)
    bias[label] = 3.0
    heads = make_heads(4, **{"head.atom.b": bias})
    feats = zero_features(2, hg.b, 4)
    expect = -(3.0 - math.log(math.exp(3.0) + (N_ATOM_CLASSES - 1)))
    assert math.isclose(loss_atom_type(feats, targets, heads), expect, rel_tol=1e-12)


def test_atom_type_mean_not_sum():
    hg2 = seg("CC")
    t_one = build_targets(hg2, frozenset({0}))
    t_two = build_targets(hg2, frozenset({0, 1}))
    feats = zero_features(2, hg2.b, 4)
    heads = make_heads(4)
    assert math.isclose(
        loss_atom_type(feats, t_one, heads), loss_atom_type(feats, t_two, heads),
        rel_tol=1e-12,
    )


def test_atom_type_empty_mask_raises():
    hg = seg("CC")
    targets = build_targets(hg, frozenset())
    with pytest.raises(ValueError, match="masked set"):
        loss_atom_type(zero_features(2, hg.b, 4), targets, make_heads(4))


# -- masked bond type --------------------------------------------------------------


def test_bond_type_uniform_is_log_k():
    hg = seg("C=CC")
    targets = build_targets(hg, frozenset({1}))
    got = loss_bond_type(zero_features(3, hg.b, 4), targets, make_heads(4))
    assert math.isclose(got, math.log(N_BOND_CLASSES), rel_tol=1e-12)


def test_bond_head_symmetric_under_end_swap():
    hg = seg("C=CC")
    targets = build_targets(hg, frozenset({1}))
    swapped = build_targets(hg, frozenset({1}))
    swapped.masked_bond_ends[:] = swapped.masked_bond_ends[:, ::-1]
    rng = np.random.default_rng(0)
    heads = make_heads(
        4,
        **{
            "head.bond.w": rng.normal(size=(8, N_BOND_CLASSES)),
            "head.bond.b": rng.normal(size=N_BOND_CLASSES),
        },
    )
    node = rng.normal(size=(3, 4))
    feats = LevelFeatures(node, np.zeros((1, 4)), np.zeros((1, 4)))
    assert math.isclose(
        loss_bond_type(feats, targets, heads),
        loss_bond_type(feats, swapped, heads),
        rel_tol=1e-12,
    )


def test_bond_type_empty_set_raises():
    hg = seg("C.C")  # no bonds at all
    targets = build_targets(hg, frozenset({0}))
    assert targets.bond_labels.size == 0
    with pytest.raises(ValueError, match="bond"):
        loss_bond_type(zero_features(2, hg.b, 4), targets, make_heads(4))


# -- count regression ----------------------------------------------------------------


def test_smooth_l1_branch_values():
    for diff, expect in [(0.5, 0.125), (1.0, 0.5), (-1.0, 0.5), (2.0, 1.5), (-2.0, 1.5), (0.0, 0.0)]:
        got = float(_smooth_l1_t(Tensor(np.array([diff])), 0.0).data)
        assert abs(got - expect) < 1e-12, diff


def test_smooth_l1_continuous_at_kink():
    lo = float(_smooth_l1_t(Tensor(np.array([1.0 - 1e-9])), 0.0).data)
    hi = float(_smooth_l1_t(Tensor(np.array([1.0 + 1e-9])), 0.0).data)
    assert abs(lo - hi) < 1e-8


def test_counts_bias_only_oracle():
    hg = seg("CCO")  # 3 atoms, 2 bonds
    targets = build_targets(hg, frozenset())
    heads = make_heads(
        4,
        **{
            "head.an.b": np.array([3.5]),  # pred 3.5 vs 3 -> 0.125
            "head.bn.b": np.array([4.0]),  # pred 4.0 vs 2 -> 1.5
        },
    )
    l_an, l_bn = loss_counts(zero_features(3, hg.b, 4), targets, heads)
    assert math.isclose(l_an, 0.125, rel_tol=1e-9)
    assert math.isclose(l_bn, 1.5, rel_tol=1e-9)


# -- contrastive -----------------------------------------------------------------------


def test_contrastive_all_zero_oracle():
    # every dot product is 0: loss = 3/2 ln 2 exactly
    heads = init_heads(seed=1, d=4, d_text=3)
    got = loss_contrastive(np.zeros((3, 4)), np.zeros((3, 3)), heads, seed=0)
    assert math.isclose(got, 1.5 * LN2, rel_tol=1e-12)


def test_contrastive_engineered_dots():
    # matched dot +2, mismatched -2 for both samples:
    # per sample -1/2 [ln s(2) + 2 ln(1 - s(-2))] = 3/2 ln(1 + e^-2)
    w = np.eye(2, dtype=np.float32)
    heads = Heads(2, 2, {"head.text.w": w})
    xm = np.array([[2.0, 0.0], [-2.0, 0.0]])
    xt = np.array([[1.0, 0.0], [-1.0, 0.0]])
    got = loss_contrastive(xm, xt, heads, seed=0)
    assert math.isclose(got, 0.19039201656445894, rel_tol=1e-9)
    assert math.isclose(got, 1.5 * math.log(1.0 + math.exp(-2.0)), rel_tol=1e-12)


def test_contrastive_needs_two():
    heads = init_heads(seed=1, d=4, d_text=3)
    with pytest.raises(ValueError, match=">= 2"):
        loss_contrastive(np.zeros((1, 4)), np.zeros((1, 3)), heads, seed=0)


def test_contrastive_seed_changes_negatives():
    rng = np.random.default_rng(3)
    heads = Heads(3, 3, {"head.text.w": np.eye(3, dtype=np.float32)})
    xm = rng.normal(size=(5, 3))
    xt = rng.normal(size=(5, 3))
    vals = {round(loss_contrastive(xm, xt, heads, seed=s), 12) for s in range(8)}
    assert len(vals) > 1


# -- derangement -------------------------------------------------------------------------


def test_derangement_no_fixed_points():
    for n in [2, 3, 5, 17]:
        for seed in range(10):
            perm = derangement(n, seed)
            assert sorted(perm) == list(range(n))
            assert not np.any(perm == np.arange(n))


def test_derangement_deterministic():
    assert np.array_equal(derangement(9, 4), derangement(9, 4))


def test_derangement_covers_options():
    # n=3 has exactly two derangements; both should appear across seeds
    seen = {tuple(derangement(3, s)) for s in range(50)}
    assert seen == {(1, 2, 0), (2, 0, 1)}


def test_derangement_rejects_small():
    with pytest.raises(ValueError):
        derangement(1, 0)


# -- targets -------------------------------------------------------------------------------


def test_build_targets_link_structure():
    hg = seg("CCO")
    t = build_targets(hg, frozenset())
    assert t.link_pairs.shape == (3, 2)
    assert t.link_labels.tolist() == [1.0, 0.0, 1.0]  # (0,1) (0,2) (1,2)
    assert (t.y_an, t.y_bn) == (3, 2)


def test_build_targets_labels_from_molecule_not_mask():
    hg = seg("CCO")
    t = build_targets(hg, frozenset({2}))
    assert t.masked_atoms.tolist() == [2]
    # label is the real element class of the oxygen
    from moltok.molgraph.mol import ELEMENTS

    assert t.atom_labels.tolist() == [ELEMENTS.index("O")]


def test_build_targets_masked_bonds_touch_mask():
    hg = seg("C=CC#N")
    t = build_targets(hg, frozenset({1}))
    # bonds (0,1) double and (1,2) single touch atom 1
    assert t.masked_bond_ends.tolist() == [[0, 1], [1, 2]]
    assert t.bond_labels.tolist() == [1, 0]  # double, single


def test_build_targets_aromatic_bond_class():
    hg = seg("c1ccccc1")
    t = build_targets(hg, frozenset({0}))
    assert set(t.bond_labels.tolist()) == {3}


def test_build_targets_uses_graph_mask_by_default():
    from moltok.encoder import mask_atoms

    hg, chosen = mask_atoms(seg("CCCCC"), 0.4, seed=0)
    t = build_targets(hg)
    assert frozenset(t.masked_atoms.tolist()) == chosen


# -- weights and aggregation ---------------------------------------------------------------


def test_total_loss_weighted_sum():
    w = LossWeights(link=2.0, atom_type=0.5, contrastive=0.0)
    losses = {"link": 1.0, "atom_type": 4.0, "contrastive": 100.0}
    assert total_loss(losses, w) == 4.0


def test_total_loss_missing_terms_zero():
    assert total_loss({}, LossWeights()) == 0.0


def test_total_loss_unknown_term():
    with pytest.raises(ValueError, match="unknown"):
        total_loss({"wat": 1.0})


def test_negative_weight_rejected():
    with pytest.raises(ValueError, match="negative"):
        LossWeights(link=-0.1)


def test_loss_report_values():
    r = LossReport(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, total=21.0)
    assert r.values() == {
        "link": 1.0,
        "atom_type": 2.0,
        "bond_type": 3.0,
        "atom_count": 4.0,
        "bond_count": 5.0,
        "contrastive": 6.0,
    }
    assert r.total == 21.0
