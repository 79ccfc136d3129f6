"""String metrics, fingerprints, and corpus scoring against oracles."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moltok.metrics import (
    MOL_COLUMNS,
    STRUCTURAL_KEYS,
    TEXT_COLUMNS,
    bleu_n,
    evaluate_corpus,
    evaluate_pairs,
    exact_match,
    levenshtein,
    morgan_fp,
    path_fp,
    rouge_l,
    rouge_n,
    structural_keys_fp,
    tanimoto,
    tokenize_chars,
    tokenize_whitespace,
    validity,
)
from moltok.molgraph import parse_smiles, permute_molecule, random_molecules


# -- levenshtein ------------------------------------------------------------------


def lev_oracle(a: str, b: str) -> int:
    """Exponential textbook recursion; only usable on tiny strings."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    cost = 0 if a[0] == b[0] else 1
    return min(
        lev_oracle(a[1:], b) + 1,
        lev_oracle(a, b[1:]) + 1,
        lev_oracle(a[1:], b[1:]) + cost,
    )


def test_levenshtein_known_values():
    assert levenshtein("kitten", "sitting") == 3
    assert levenshtein("flaw", "lawn") == 2
    assert levenshtein("", "abc") == 3
    assert levenshtein("abc", "") == 3
    assert levenshtein("same", "same") == 0


def test_levenshtein_vs_recursive_oracle():
    import random

    rng = random.Random(0)
    alphabet = "abcd"
    for _ in range(200):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
        assert levenshtein(a, b) == lev_oracle(a, b), (a, b)


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=20), st.text(max_size=20), st.text(max_size=20))
def test_levenshtein_metric_axioms(a, b, c):
    assert levenshtein(a, b) == levenshtein(b, a)
    assert levenshtein(a, a) == 0
    assert (levenshtein(a, b) == 0) == (a == b)
    assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


# -- BLEU --------------------------------------------------------------------------


def test_bleu_identical_is_one():
    for text in ["a b c d e", "one two", "x"]:
        toks = text.split()
        assert bleu_n(toks, toks, 4) == pytest.approx(1.0)


def test_bleu_effective_order_capping():
    # 2-token sentences have no 4-grams; the order drops to min(n, len)
    assert bleu_n(["a", "b"], ["a", "b"], 4) == pytest.approx(1.0)


def test_bleu_hand_computed():
    # cand "a b c", ref "a b d": p1 = 2/3, p2 = 1/2, p3 = 0 -> BLEU 0 (zero clip)
    assert bleu_n(list("abc"), list("abd"), 3) == 0.0
    # order 2: (2/3 * 1/2)^(1/2), no brevity penalty (same length)
    expect = math.sqrt((2 / 3) * (1 / 2))
    assert bleu_n(list("abc"), list("abd"), 2) == pytest.approx(expect)


def test_bleu_brevity_penalty():
    # cand shorter than ref: BP = exp(1 - r/c)
    cand, ref = list("ab"), list("abcd")
    p1, p2 = 2 / 2, 1 / 1
    bp = math.exp(1 - 4 / 2)
    assert bleu_n(cand, ref, 2) == pytest.approx(bp * math.sqrt(p1 * p2))


def test_bleu_no_penalty_when_longer():
    # cand longer than ref: BP is 1
    cand, ref = list("abcd"), list("ab")
    p1 = 2 / 4
    p2 = 1 / 3
    assert bleu_n(cand, ref, 2) == pytest.approx(math.sqrt(p1 * p2))


def test_bleu_clipping_counts():
    # "a a a a" vs "a a": count of "a" clips to 2 -> p1 = 2/4
    assert bleu_n(["a"] * 4, ["a"] * 2, 1) == pytest.approx(0.5)


def test_bleu_empty_candidate_zero():
    assert bleu_n([], ["a"], 4) == 0.0


def test_bleu_empty_reference_raises():
    with pytest.raises(ValueError, match="empty reference"):
        bleu_n(["a"], [], 4)


# -- ROUGE -------------------------------------------------------------------------


def test_rouge_n_identical():
    toks = "the cat sat on the mat".split()
    assert rouge_n(toks, toks, 1) == pytest.approx(1.0)
    assert rouge_n(toks, toks, 2) == pytest.approx(1.0)


def test_rouge_1_hand_computed():
    # cand {a b c}, ref {a b d}: overlap 2; P = R = 2/3, F1 = 2/3
    assert rouge_n(list("abc"), list("abd"), 1) == pytest.approx(2 / 3)


def test_rouge_2_hand_computed():
    cand = "a b c d".split()
    ref = "a b x d".split()
    # bigrams cand {ab, bc, cd}, ref {ab, bx, xd}: overlap 1 -> F1 = 1/3
    assert rouge_n(cand, ref, 2) == pytest.approx(1 / 3)


def test_rouge_short_reference_zero_not_error():
    # one-word reference has no bigrams; corpus runs must survive
    assert rouge_n(["hello"], ["hi"], 2) == 0.0


def test_rouge_empty_reference_raises():
    with pytest.raises(ValueError):
        rouge_n(["a"], [], 1)


def test_rouge_l_hand_computed():
    cand = "a b c d".split()
    ref = "a c b d".split()
    # LCS = 3 (a b d or a c d): P = R = 3/4 -> F1 = 3/4
    assert rouge_l(cand, ref) == pytest.approx(3 / 4)


def test_rouge_l_disjoint_zero():
    assert rouge_l(list("abc"), list("xyz")) == 0.0


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.sampled_from("abcde"), min_size=1, max_size=12),
    st.lists(st.sampled_from("abcde"), min_size=1, max_size=12),
)
def test_string_metrics_bounded(cand, ref):
    for n in (1, 2, 3, 4):
        assert 0.0 <= bleu_n(cand, ref, n) <= 1.0
        assert 0.0 <= rouge_n(cand, ref, n) <= 1.0
    assert 0.0 <= rouge_l(cand, ref) <= 1.0


def test_tokenizers():
    assert tokenize_chars("ab c") == ["a", "b", " ", "c"]
    # case is preserved; collapsing whitespace is the only normalization
    assert tokenize_whitespace("  Hello   world ") == ["Hello", "world"]
    assert tokenize_chars("") == []


# -- fingerprints ------------------------------------------------------------------


def test_structural_keys_count():
    assert len(STRUCTURAL_KEYS) == 32
    assert len({label for label, _ in STRUCTURAL_KEYS}) == 32


def test_structural_keys_benzene():
    fp = structural_keys_fp(parse_smiles("c1ccccc1"))
    labels = {label for i, (label, _) in enumerate(STRUCTURAL_KEYS) if i in fp.bits}
    assert labels == {"has C", "has aromatic atom", "has ring", "has 6-ring"}
    assert fp.nbits == 32


def test_structural_keys_known_bits():
    # aromatic ring sets ring + aromatic + 6-ring predicates, never halogen
    fp_benzene = structural_keys_fp(parse_smiles("c1ccccc1"))
    fp_methane = structural_keys_fp(parse_smiles("C"))
    assert fp_benzene.bits != fp_methane.bits
    preds_b = {label: (i in fp_benzene.bits) for i, (label, _) in enumerate(STRUCTURAL_KEYS)}
    ring_keys = [l for l in preds_b if "ring" in l.lower()]
    assert any(preds_b[l] for l in ring_keys)


def test_fingerprint_kinds_distinct():
    mol = parse_smiles("CCO")
    kinds = {morgan_fp(mol).kind, path_fp(mol).kind, structural_keys_fp(mol).kind}
    assert len(kinds) == 3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 20_000), st.integers(0, 999))
def test_fingerprints_permutation_invariant(seed, perm_seed):
    import random

    (mol,) = random_molecules(1, seed=seed)
    perm = list(range(mol.num_atoms))
    random.Random(perm_seed).shuffle(perm)
    twin = permute_molecule(mol, perm)
    assert morgan_fp(mol).bits == morgan_fp(twin).bits
    assert path_fp(mol).bits == path_fp(twin).bits
    assert structural_keys_fp(mol).bits == structural_keys_fp(twin).bits


def test_fingerprints_deterministic():
    mol = parse_smiles("CC(=O)Oc1ccccc1C(=O)O")
    assert morgan_fp(mol).bits == morgan_fp(mol).bits
    assert path_fp(mol, max_len=5).bits == path_fp(mol, max_len=5).bits


def test_morgan_radius_and_nbits_params():
    mol = parse_smiles("CC(=O)Oc1ccccc1C(=O)O")
    assert morgan_fp(mol, radius=1).params != morgan_fp(mol, radius=2).params
    small = morgan_fp(mol, nbits=64)
    assert all(b < 64 for b in small.bits)


def test_path_fp_discriminates_isomers():
    a = path_fp(parse_smiles("CCCCO"))
    b = path_fp(parse_smiles("CC(C)CO"))
    assert a.bits != b.bits


# -- tanimoto -----------------------------------------------------------------------


def test_tanimoto_identical_one():
    fp = morgan_fp(parse_smiles("CCO"))
    assert tanimoto(fp, fp) == 1.0


def test_tanimoto_both_empty_one():
    from moltok.metrics import Fingerprint

    a = Fingerprint(frozenset(), 64, "morgan", (2,))
    b = Fingerprint(frozenset(), 64, "morgan", (2,))
    assert tanimoto(a, b) == 1.0


def test_tanimoto_hand_computed():
    from moltok.metrics import Fingerprint

    a = Fingerprint(frozenset({1, 2, 3}), 64, "morgan", (2,))
    b = Fingerprint(frozenset({2, 3, 4, 5}), 64, "morgan", (2,))
    assert tanimoto(a, b) == pytest.approx(2 / 5)


def test_tanimoto_mismatch_errors():
    mol = parse_smiles("CCO")
    with pytest.raises(ValueError):
        tanimoto(morgan_fp(mol), path_fp(mol))
    with pytest.raises(ValueError):
        tanimoto(morgan_fp(mol, nbits=64), morgan_fp(mol, nbits=128))
    with pytest.raises(ValueError):
        tanimoto(morgan_fp(mol, radius=1), morgan_fp(mol, radius=2))


def test_tanimoto_bounds_random_pairs():
    mols = random_molecules(50, seed=5)
    fps = [morgan_fp(m) for m in mols]
    checked = 0
    for i in range(len(fps)):
        for j in range(i + 1, len(fps)):
            s = tanimoto(fps[i], fps[j])
            assert 0.0 <= s <= 1.0
            checked += 1
    assert checked > 1000


def test_similarity_tracks_structure():
    base = parse_smiles("CCCCCCO")
    near = parse_smiles("CCCCCO")
    far = parse_smiles("c1ccccc1N(=O)")
    s_near = tanimoto(path_fp(base), path_fp(near))
    s_far = tanimoto(path_fp(base), path_fp(far))
    assert s_near > s_far


# -- validity and exact match ----------------------------------------------------------


def test_validity_flags():
    assert validity("CCO") == 1
    assert validity("C(C)(C)(C)(C)C") == 0  # pentavalent carbon
    assert validity("not a molecule") == 0
    assert validity("[C][C][O]", fmt="selfies") == 1


def test_exact_match_canonical():
    assert exact_match("OCC", "CCO") == 1
    assert exact_match("c1ccccc1", "C1=CC=CC=C1") == 1
    assert exact_match("CCO", "CCN") == 0
    assert exact_match("garbage", "CCO") == 0


# -- corpus evaluation -------------------------------------------------------------------


def test_column_names_exact():
    assert MOL_COLUMNS == ("BLEU", "Exact", "Levenshtein", "Validity", "MACCS", "RDK", "Morgan")
    assert TEXT_COLUMNS == ("BLEU-2", "BLEU-4", "ROUGE-1", "ROUGE-2", "ROUGE-L")


def test_mol_mode_identical_predictions():
    preds = ["CCO", "c1ccccc1", "CC(=O)Oc1ccccc1C(=O)O"]
    report = evaluate_pairs(preds, preds, "mol")
    assert report.columns == MOL_COLUMNS
    agg = report.aggregates
    assert agg["BLEU"] == pytest.approx(1.0)
    assert agg["Exact"] == 1.0
    assert agg["Levenshtein"] == 0.0
    assert agg["Validity"] == 1.0
    assert agg["MACCS"] == 1.0
    assert agg["RDK"] == 1.0
    assert agg["Morgan"] == 1.0


def test_mol_mode_invalid_prediction_line():
    preds = ["CCO"] * 9 + ["!!junk!!"]
    gts = ["CCO"] * 10
    report = evaluate_pairs(preds, gts, "mol")
    assert report.aggregates["Validity"] == pytest.approx(0.9)
    bad = report.rows[-1]
    assert bad["Exact"] == 0 and bad["Morgan"] == 0.0
    assert bad["Levenshtein"] > 0


def test_mol_mode_unparseable_ground_truth_raises():
    with pytest.raises(ValueError, match="ground-truth"):
        evaluate_pairs(["CCO"], ["%%%"], "mol")


def test_text_mode_scores():
    preds = ["the cat sat", "a dog ran fast"]
    report = evaluate_pairs(preds, preds, "text")
    assert report.columns == TEXT_COLUMNS
    for c in TEXT_COLUMNS:
        assert report.aggregates[c] == pytest.approx(1.0), c


def test_text_mode_partial_overlap():
    report = evaluate_pairs(["the cat sat"], ["the cat slept"], "text")
    assert 0.0 < report.aggregates["ROUGE-1"] < 1.0


def test_evaluate_pairs_errors():
    with pytest.raises(ValueError, match="mismatch"):
        evaluate_pairs(["a"], ["a", "b"], "text")
    with pytest.raises(ValueError, match="empty"):
        evaluate_pairs([], [], "mol")
    with pytest.raises(ValueError, match="mode"):
        evaluate_pairs(["a"], ["a"], "nope")


def test_summary_csv_shape():
    report = evaluate_pairs(["CCO"], ["CCO"], "mol")
    lines = report.summary_csv().splitlines()
    assert lines[0] == ",".join(MOL_COLUMNS)
    values = lines[1].split(",")
    assert len(values) == len(MOL_COLUMNS)
    assert values[0] == "1.0000"


def test_evaluate_corpus_files(tmp_path):
    pred = tmp_path / "pred.txt"
    gt = tmp_path / "gt.txt"
    pred.write_text("CCO\nCCN\n")
    gt.write_text("OCC\nCCN\n")
    report = evaluate_corpus(pred, gt, "mol")
    assert len(report.rows) == 2
    assert report.aggregates["Exact"] == 1.0


def test_selfies_format_corpus():
    report = evaluate_pairs(["[C][C][O]"], ["[C][C][O]"], "mol", fmt="selfies")
    assert report.aggregates["Exact"] == 1.0
    assert report.aggregates["Validity"] == 1.0
