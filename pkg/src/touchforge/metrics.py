"""Edit-distance alignment and the WER/PER evaluation protocol.

`align` reports the substitution/deletion/insertion split of a minimal-cost
alignment. Among the (possibly many) minimal alignments it fixes the split
by maximizing substitutions; together with the length difference this pins
deletions and insertions, so the reported triple is unique and swapping
ref/hyp swaps del/ins while leaving sub untouched.

Word units are characters for Chinese, whitespace words for English, and a
per-script mix for code-switched text. Seed results pool by micro-average:
summed errors over summed reference lengths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import g2p as g2p_mod
from .frontend import split_script_runs


class EmptyReferenceError(ValueError):
    """Reference side has no units, so no rate is defined."""


@dataclass(frozen=True)
class ErrorCounts:
    subs: int
    dels: int
    ins: int
    ref_len: int

    def __post_init__(self):
        if min(self.subs, self.dels, self.ins, self.ref_len) < 0:
            raise ValueError("counts must be non-negative")
        if self.subs + self.dels > self.ref_len:
            raise ValueError("sub + del cannot exceed the reference length")

    @property
    def total(self) -> int:
        return self.subs + self.dels + self.ins

    def rate(self) -> float:
        if self.ref_len == 0:
            raise EmptyReferenceError("empty reference")
        return self.total / self.ref_len

    def __add__(self, other: "ErrorCounts") -> "ErrorCounts":
        return ErrorCounts(self.subs + other.subs, self.dels + other.dels,
                           self.ins + other.ins, self.ref_len + other.ref_len)


@dataclass(frozen=True)
class SeedResult:
    seed: int
    counts: ErrorCounts


def align(ref: Sequence, hyp: Sequence) -> ErrorCounts:
    """Minimal-edit alignment with unit costs.

    Ties between minimal alignments resolve toward substitutions first
    (then deletions over insertions, which the substitution count already
    determines). Empty reference against n hypothesis symbols counts n
    insertions with ref_len 0.
    """
    lr, lh = len(ref), len(hyp)
    # Cell value (cost, -subs): lexicographic minimum maximizes subs at equal cost.
    prev = [(j, 0) for j in range(lh + 1)]
    for i in range(1, lr + 1):
        cur = [(i, 0)]
        ri = ref[i - 1]
        for j in range(1, lh + 1):
            dc, ds = prev[j - 1]
            if ri == hyp[j - 1]:
                best = (dc, ds)
            else:
                best = (dc + 1, ds - 1)
            up = (prev[j][0] + 1, prev[j][1])
            if up < best:
                best = up
            left = (cur[j - 1][0] + 1, cur[j - 1][1])
            if left < best:
                best = left
            cur.append(best)
        prev = cur
    total, neg_subs = prev[lh]
    subs = -neg_subs
    # total = S+D+I and lr-lh = D-I fix the remaining counts.
    dels = (total - subs + lr - lh) // 2
    ins = total - subs - dels
    return ErrorCounts(subs, dels, ins, lr)


def text_units(text: str, lang: str) -> list[str]:
    """Scoring units: zh per character, en per whitespace word, mixed per
    script (CJK characters, whitespace words elsewhere)."""
    if lang == "zh":
        return [ch for ch in text if not ch.isspace()]
    if lang == "en":
        return text.split()
    if lang == "mixed":
        units: list[str] = []
        for run, cls in split_script_runs(text):
            if cls == "cjk":
                units.extend(run)
            else:
                units.extend(run.split())
        return units
    raise ValueError(f"unknown lang {lang!r}")


def wer(ref_text: str, hyp_text: str, lang: str) -> tuple[ErrorCounts, float]:
    """Word (or character) error rate over punctuation-stripped text."""
    ref = text_units(ref_text, lang)
    hyp = text_units(hyp_text, lang)
    if not ref:
        raise EmptyReferenceError("empty reference")
    counts = align(ref, hyp)
    return counts, counts.rate()


def per(ref_text: str, hyp_text: str, tables, lang: str) -> tuple[ErrorCounts, float]:
    """Phoneme error rate: both sides through G2P, then aligned."""
    ref = g2p_mod.to_phonemes(ref_text, lang, tables).phones
    hyp = g2p_mod.to_phonemes(hyp_text, lang, tables).phones
    if not ref:
        raise EmptyReferenceError("empty phoneme reference")
    counts = align(ref, hyp)
    return counts, counts.rate()


def aggregate_seeds(results: Sequence[SeedResult]) -> float:
    """Pooled micro-average: summed S+D+I over summed reference lengths."""
    if not results:
        raise ValueError("no seed results to aggregate")
    pooled = results[0].counts
    for r in results[1:]:
        pooled = pooled + r.counts
    return pooled.rate()


def read_embeddings(path) -> list[np.ndarray]:
    """Embedding file: one vector per line, space-separated decimals."""
    vectors = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                vectors.append(np.array([float(x) for x in line.split()], dtype=np.float64))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: not a decimal vector") from None
    return vectors


def sim_average(pairs) -> float:
    """Mean cosine similarity over embedding pairs."""
    sims = []
    for a, b in pairs:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise ValueError(f"embedding dimensions differ: {a.shape} vs {b.shape}")
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na == 0.0 or nb == 0.0:
            raise ValueError("zero-norm embedding")
        sims.append(float(np.dot(a, b) / (na * nb)))
    if not sims:
        raise ValueError("no embedding pairs")
    return float(np.mean(sims))
