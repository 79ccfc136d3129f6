"""Dataset cleaning, file ingestion, and the deterministic text-vector stub.

Cleaning mirrors the usual pipeline for raw SMILES corpora: split off
counter-ions by keeping the largest fragment, drop tiny molecules, drop
valence violations, and emit canonical forms.  Rejections are data, not
errors; each carries a reason tag so corpus reports can count them.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .molgraph.canon import canonicalize
from .molgraph.smiles import SmilesError, parse_smiles
from .molgraph.valence import validate_valence
from .util import fnv1a_64_str


@dataclass(frozen=True)
class CleanConfig:
    min_heavy_atoms: int = 5
    keep_largest_fragment: bool = True

    def __post_init__(self):
        if self.min_heavy_atoms < 1:
            raise ValueError("min_heavy_atoms must be >= 1")


@dataclass(frozen=True)
class CleanResult:
    accepted: bool
    canonical: str | None  # set iff accepted
    reason: str | None  # parse_error | size | valence; set iff rejected


def _heavy_atoms_in(smiles: str) -> int:
    mol = parse_smiles(smiles)
    return sum(1 for a in mol.atoms if a.element != "H")


def clean(smiles: str, config: CleanConfig | None = None) -> CleanResult:
    """Normalize one raw SMILES; never raises, rejections carry a reason.

    Dot fragments are split textually before parsing so one bad counter-ion
    cannot sink an otherwise fine record; the fragment with the most heavy
    atoms wins (ties: first in input order).
    """
    config = config or CleanConfig()
    candidates = smiles.split(".") if config.keep_largest_fragment else [smiles]
    best: str | None = None
    best_heavy = -1
    for frag in candidates:
        frag = frag.strip()
        if not frag:
            continue
        try:
            heavy = _heavy_atoms_in(frag)
        except (SmilesError, ValueError):
            continue
        if heavy > best_heavy:
            best, best_heavy = frag, heavy
    if best is None:
        return CleanResult(False, None, "parse_error")
    if best_heavy < config.min_heavy_atoms:
        return CleanResult(False, None, "size")
    mol = parse_smiles(best)
    if validate_valence(mol):
        return CleanResult(False, None, "valence")
    return CleanResult(True, canonicalize(mol).text, None)


@dataclass(frozen=True)
class PairRecord:
    molecule: str  # canonical SMILES
    text: str


class MalformedLine(ValueError):
    def __init__(self, lineno: int, line: str, why: str):
        super().__init__(f"line {lineno}: {why}: {line!r}")
        self.lineno = lineno
        self.line = line
        self.why = why


def _ingest(path, on_error: str) -> Iterator[tuple[int, str]]:
    if on_error not in ("skip", "abort"):
        raise ValueError("on_error must be 'skip' or 'abort'")
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.strip():
                yield lineno, line


def load_smiles_file(path, on_error: str = "abort") -> Iterator[str]:
    """Yield parseable SMILES lines; blank lines are ignored."""
    for lineno, line in _ingest(path, on_error):
        text = line.strip()
        try:
            parse_smiles(text)
        except (SmilesError, ValueError) as err:
            if on_error == "abort":
                raise MalformedLine(lineno, line, str(err)) from err
            continue
        yield text


def load_pairs_file(path, on_error: str = "abort") -> Iterator[PairRecord]:
    """Yield (canonical molecule, text) records from a TSV file."""
    for lineno, line in _ingest(path, on_error):
        parts = line.split("\t", 1)
        if len(parts) != 2 or not parts[1].strip():
            err = MalformedLine(lineno, line, "expected 'smiles<TAB>text'")
            if on_error == "abort":
                raise err
            continue
        try:
            mol = parse_smiles(parts[0].strip())
        except (SmilesError, ValueError) as exc:
            if on_error == "abort":
                raise MalformedLine(lineno, line, str(exc)) from exc
            continue
        yield PairRecord(canonicalize(mol).text, parts[1].strip())


def text_embed_stub(text: str, d_text: int, seed: int = 0) -> np.ndarray:
    """Hashed bag-of-words stand-in for a real sentence encoder.

    Each lowercase whitespace token lands on one coordinate with a hashed
    sign; the sum is L2-normalized.  ``seed`` salts the hash so different
    stub vocabularies can coexist.
    """
    if d_text < 8:
        raise ValueError("d_text must be >= 8")
    vec = np.zeros(d_text, dtype=np.float32)
    for token in text.lower().split():
        h = fnv1a_64_str(f"{seed}:{token}")
        coord = h % d_text
        sign = 1.0 if (h >> 63) & 1 else -1.0
        vec[coord] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        vec[0] = 1.0
        return vec
    return vec / norm


def save_embeddings(path, vectors: np.ndarray) -> None:
    """Sidecar vector file: u32 count, u32 d_text, then rows of f32."""
    if vectors.ndim != 2:
        raise ValueError("vectors must be 2-D (count, d_text)")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", vectors.shape[0], vectors.shape[1]))
        fh.write(np.ascontiguousarray(vectors, dtype="<f4").tobytes())


def load_embeddings(path) -> np.ndarray:
    with open(path, "rb") as fh:
        count, d_text = struct.unpack("<II", fh.read(8))
        raw = fh.read(4 * count * d_text)
    if len(raw) != 4 * count * d_text:
        raise ValueError("truncated embedding file")
    return np.frombuffer(raw, dtype="<f4").reshape(count, d_text).astype(np.float32)


def clean_report(results: list[CleanResult]) -> dict[str, int]:
    """Counts per outcome: accepted plus one bucket per rejection reason."""
    report = {"accepted": 0, "parse_error": 0, "size": 0, "valence": 0}
    for r in results:
        report["accepted" if r.accepted else r.reason] += 1
    return report
