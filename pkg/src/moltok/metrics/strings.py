"""String metrics: edit distance, BLEU, ROUGE.

Molecule strings are tokenized per character, captions by whitespace; the
metric functions themselves only see token lists.
"""

from __future__ import annotations

import math
from collections import Counter


def tokenize_chars(text: str) -> list[str]:
    return list(text)


def tokenize_whitespace(text: str) -> list[str]:
    return text.split()


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance, one-row dynamic program."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_n(cand: list[str], ref: list[str], n: int) -> float:
    """Brevity penalty times geometric mean of clipped 1..n-gram precisions.

    Zero whenever any order has zero matches (no smoothing).  The order is
    capped at the shorter sequence length (effective order), so identical
    short sequences still score 1.0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not ref:
        raise ValueError("empty reference")
    if not cand:
        return 0.0
    n = min(n, len(cand), len(ref))
    log_sum = 0.0
    for k in range(1, n + 1):
        cand_grams = _ngrams(cand, k)
        total = sum(cand_grams.values())
        ref_grams = _ngrams(ref, k)
        clipped = sum(min(c, ref_grams[g]) for g, c in cand_grams.items())
        if clipped == 0:
            return 0.0
        log_sum += math.log(clipped / total)
    brevity = 1.0 if len(cand) > len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return brevity * math.exp(log_sum / n)


def _overlap_f1(cand_grams: Counter, ref_grams: Counter) -> float:
    cand_total = sum(cand_grams.values())
    ref_total = sum(ref_grams.values())
    if ref_total == 0:
        raise ValueError("empty reference")
    if cand_total == 0:
        return 0.0
    overlap = sum(min(c, ref_grams[g]) for g, c in cand_grams.items())
    if overlap == 0:
        return 0.0
    precision = overlap / cand_total
    recall = overlap / ref_total
    return 2.0 * precision * recall / (precision + recall)


def rouge_n(cand: list[str], ref: list[str], n: int) -> float:
    """F1 over clipped n-gram overlap.

    A non-empty reference shorter than n has no n-grams; scored 0 rather
    than rejected so corpus runs survive one-word captions.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not ref:
        raise ValueError("empty reference")
    if len(ref) < n:
        return 0.0
    return _overlap_f1(_ngrams(cand, n), _ngrams(ref, n))


def _lcs_length(a: list[str], b: list[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for ca in a:
        cur = [0]
        for j, cb in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if ca == cb else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(cand: list[str], ref: list[str]) -> float:
    """F1 from the longest common subsequence."""
    if not ref:
        raise ValueError("empty reference")
    if not cand:
        return 0.0
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2.0 * precision * recall / (precision + recall)
