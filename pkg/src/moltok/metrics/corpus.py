"""Corpus-level evaluation matching the result-table column layouts.

Molecule tasks score each prediction/ground-truth line pair with
per-character BLEU, canonical exact match, raw-string edit distance,
validity, and three fingerprint similarities.  Text tasks score BLEU-2/4
and ROUGE-1/2/L on whitespace tokens.  An unparseable prediction scores
0 on exact match and every similarity; an unparseable ground-truth line is
a data error and raises.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..molgraph.canon import canonicalize
from ..molgraph.mol import Molecule
from ..molgraph.selfies import SelfiesError, decode_selfies
from ..molgraph.smiles import SmilesError, parse_smiles
from ..molgraph.valence import validate_valence
from .fingerprints import morgan_fp, path_fp, structural_keys_fp, tanimoto
from .strings import (
    bleu_n,
    levenshtein,
    rouge_l,
    rouge_n,
    tokenize_chars,
    tokenize_whitespace,
)

MOL_COLUMNS = ("BLEU", "Exact", "Levenshtein", "Validity", "MACCS", "RDK", "Morgan")
TEXT_COLUMNS = ("BLEU-2", "BLEU-4", "ROUGE-1", "ROUGE-2", "ROUGE-L")


def _parse(text: str, fmt: str) -> Molecule | None:
    try:
        if fmt == "smiles":
            return parse_smiles(text)
        if fmt == "selfies":
            return decode_selfies(text)
    except (SmilesError, SelfiesError, ValueError):
        return None
    raise ValueError(f"unknown molecule format: {fmt}")


def validity(text: str, fmt: str = "smiles") -> int:
    """1 iff the string parses and every atom passes the valence table."""
    mol = _parse(text, fmt)
    if mol is None:
        return 0
    return 1 if not validate_valence(mol) else 0


def exact_match(pred: str, gt: str, fmt: str = "smiles") -> int:
    """1 iff both parse and share one canonical form."""
    pm = _parse(pred, fmt)
    gm = _parse(gt, fmt)
    if pm is None or gm is None:
        return 0
    return 1 if canonicalize(pm) == canonicalize(gm) else 0


@dataclass
class MetricReport:
    mode: str  # mol | text
    columns: tuple[str, ...]
    rows: list[dict]
    aggregates: dict[str, float]

    def summary_csv(self) -> str:
        header = ",".join(self.columns)
        values = ",".join(f"{self.aggregates[c]:.4f}" for c in self.columns)
        return f"{header}\n{values}\n"


def _score_mol_pair(pred: str, gt: str, fmt: str) -> dict:
    gm = _parse(gt, fmt)
    if gm is None:
        raise ValueError(f"ground-truth line does not parse: {gt!r}")
    row: dict = {
        "BLEU": bleu_n(tokenize_chars(pred), tokenize_chars(gt), 4),
        "Exact": 0,
        "Levenshtein": levenshtein(pred, gt),
        "Validity": validity(pred, fmt),
        "MACCS": 0.0,
        "RDK": 0.0,
        "Morgan": 0.0,
    }
    pm = _parse(pred, fmt)
    if pm is None:
        return row
    row["Exact"] = 1 if canonicalize(pm) == canonicalize(gm) else 0
    row["MACCS"] = tanimoto(structural_keys_fp(pm), structural_keys_fp(gm))
    row["RDK"] = tanimoto(path_fp(pm), path_fp(gm))
    row["Morgan"] = tanimoto(morgan_fp(pm), morgan_fp(gm))
    return row


def _score_text_pair(pred: str, gt: str) -> dict:
    cand = tokenize_whitespace(pred)
    ref = tokenize_whitespace(gt)
    return {
        "BLEU-2": bleu_n(cand, ref, 2),
        "BLEU-4": bleu_n(cand, ref, 4),
        "ROUGE-1": rouge_n(cand, ref, 1),
        "ROUGE-2": rouge_n(cand, ref, 2),
        "ROUGE-L": rouge_l(cand, ref),
    }


def evaluate_pairs(
    preds: list[str], gts: list[str], mode: str, fmt: str = "smiles"
) -> MetricReport:
    if len(preds) != len(gts):
        raise ValueError(f"line-count mismatch: {len(preds)} vs {len(gts)}")
    if not preds:
        raise ValueError("empty evaluation input")
    if mode == "mol":
        columns = MOL_COLUMNS
        rows = [_score_mol_pair(p, g, fmt) for p, g in zip(preds, gts)]
    elif mode == "text":
        columns = TEXT_COLUMNS
        rows = [_score_text_pair(p, g) for p, g in zip(preds, gts)]
    else:
        raise ValueError(f"unknown evaluation mode: {mode}")
    aggregates = {c: sum(r[c] for r in rows) / len(rows) for c in columns}
    return MetricReport(mode, columns, rows, aggregates)


def _read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def evaluate_corpus(pred_path, gt_path, mode: str, fmt: str = "smiles") -> MetricReport:
    """Score two line-aligned files; see evaluate_pairs for semantics."""
    return evaluate_pairs(_read_lines(pred_path), _read_lines(gt_path), mode, fmt)
