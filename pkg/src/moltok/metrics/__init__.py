"""Evaluation metrics: string distances, fingerprints, corpus scoring."""

from .corpus import (
    MOL_COLUMNS,
    TEXT_COLUMNS,
    MetricReport,
    evaluate_corpus,
    evaluate_pairs,
    exact_match,
    validity,
)
from .fingerprints import (
    STRUCTURAL_KEYS,
    Fingerprint,
    morgan_fp,
    path_fp,
    structural_keys_fp,
    tanimoto,
)
from .strings import (
    bleu_n,
    levenshtein,
    rouge_l,
    rouge_n,
    tokenize_chars,
    tokenize_whitespace,
)

__all__ = [
    "Fingerprint",
    "MetricReport",
    "MOL_COLUMNS",
    "STRUCTURAL_KEYS",
    "TEXT_COLUMNS",
    "bleu_n",
    "evaluate_corpus",
    "evaluate_pairs",
    "exact_match",
    "levenshtein",
    "morgan_fp",
    "path_fp",
    "rouge_l",
    "rouge_n",
    "structural_keys_fp",
    "tanimoto",
    "tokenize_chars",
    "tokenize_whitespace",
    "validity",
]
