"""Punctuation-free text frontend.

Chinese is tokenized one character per token so the token count matches the
pronunciation count; English (and digit runs) go through greedy BPE with
lowercasing. Mixed text is split into script runs first. Token id 0 is
reserved for unknown symbols in both vocabularies; Chinese character ids
live in their own range above any BPE id.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from itertools import groupby
from pathlib import Path

BPE_VOCAB_PATH = Path(__file__).parent / "data" / "bpe_vocab.txt"
BPE_MERGES_PATH = Path(__file__).parent / "data" / "bpe_merges.txt"

ZH_CHAR = "zh_char"
EN_BPE = "en_bpe"
UNK_ID = 0
ZH_ID_BASE = 100000

_APOSTROPHES = ("'", "’")

_CJK_RANGES = (
    (0x4E00, 0x9FFF),    # CJK Unified Ideographs
    (0x3400, 0x4DBF),    # Extension A
    (0xF900, 0xFAFF),    # Compatibility Ideographs
    (0x20000, 0x2EBEF),  # Extensions B..F
)


@dataclass(frozen=True)
class Token:
    id: int
    surface: str
    kind: str
    word_start: bool = False  # first piece after whitespace in the source text


@dataclass
class TokenSeq:
    tokens: list[Token] = field(default_factory=list)

    def ids(self) -> list[int]:
        return [t.id for t in self.tokens]

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def detokenize(self) -> str:
        parts: list[str] = []
        for i, t in enumerate(self.tokens):
            if i > 0 and t.word_start:
                parts.append(" ")
            parts.append(t.surface)
        return "".join(parts)

    def __len__(self) -> int:
        return len(self.tokens)


def strip_punctuation(text: str) -> str:
    """Remove all Unicode punctuation, keeping apostrophes inside Latin words.

    Whitespace runs collapse to a single space and the result is trimmed.
    Idempotent.
    """
    kept: list[str] = []
    for i, ch in enumerate(text):
        if ch in _APOSTROPHES and _is_latin_letter_at(text, i - 1) and _is_latin_letter_at(text, i + 1):
            kept.append(ch)
        elif unicodedata.category(ch).startswith("P"):
            continue
        else:
            kept.append(ch)
    return " ".join("".join(kept).split())


def _is_latin_letter_at(text: str, i: int) -> bool:
    return 0 <= i < len(text) and _is_latin_letter(text[i])


def _is_latin_letter(ch: str) -> bool:
    if "a" <= ch <= "z" or "A" <= ch <= "Z":
        return True
    return ch.isalpha() and "LATIN" in unicodedata.name(ch, "")


def script_class(ch: str) -> str:
    """One of cjk, latin, digit, other."""
    cp = ord(ch)
    for lo, hi in _CJK_RANGES:
        if lo <= cp <= hi:
            return "cjk"
    if _is_latin_letter(ch):
        return "latin"
    if unicodedata.category(ch) == "Nd":
        return "digit"
    return "other"


def split_script_runs(text: str) -> list[tuple[str, str]]:
    """Maximal same-script runs; concatenating the runs restores the input."""
    return [("".join(group), cls) for cls, group in groupby(text, key=script_class)]


class CharVocab:
    """Chinese character vocabulary; unknown characters map to UNK_ID."""

    def __init__(self, mapping: dict[str, int]):
        self.mapping = dict(mapping)

    @classmethod
    def from_characters(cls, chars, base_id: int = ZH_ID_BASE) -> "CharVocab":
        mapping: dict[str, int] = {}
        for ch in chars:
            if ch not in mapping:
                mapping[ch] = base_id + len(mapping)
        return cls(mapping)

    def id_of(self, ch: str) -> int:
        return self.mapping.get(ch, UNK_ID)

    def __len__(self) -> int:
        return len(self.mapping)


@dataclass
class BpeModel:
    """Greedy BPE model: surface vocabulary plus rank-ordered merges."""
    vocab: dict[str, int]
    merges: list[tuple[str, str]]

    def __post_init__(self):
        for a, b in self.merges:
            if a + b not in self.vocab:
                raise ValueError(f"merge ({a!r}, {b!r}) produces {a + b!r} which is not in the vocabulary")

    @classmethod
    def load(cls, vocab_path, merges_path) -> "BpeModel":
        vocab: dict[str, int] = {}
        with open(vocab_path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                surface, _, ident = line.partition("\t")
                vocab[surface] = int(ident)
        merges: list[tuple[str, str]] = []
        with open(merges_path, "r", encoding="utf-8") as f:
            for line in f:
                parts = line.split()
                if not parts or parts[0].startswith("#"):
                    continue
                if len(parts) != 2:
                    raise ValueError(f"merges file {merges_path}: expected two fields, got {line!r}")
                merges.append((parts[0], parts[1]))
        return cls(vocab=vocab, merges=merges)


def tokenize_zh_char(run: str, vocab: CharVocab) -> TokenSeq:
    """One token per character; characters missing from the vocabulary keep
    their surface under the reserved UNK id."""
    return TokenSeq([Token(vocab.id_of(ch), ch, ZH_CHAR) for ch in run])


def tokenize_en_bpe(run: str, model: BpeModel) -> TokenSeq:
    """Greedy BPE over whitespace-separated words, lowercased before lookup.

    Whole-word vocabulary hits short-circuit; otherwise merges apply in rank
    order over the character pieces. Symbols outside the base alphabet map
    to UNK with their surface retained. Each word's first piece is flagged
    as a word start.
    """
    tokens: list[Token] = []
    for word in run.split():
        word = word.lower()
        if word in model.vocab:
            tokens.append(Token(model.vocab[word], word, EN_BPE, word_start=True))
            continue
        pieces = _apply_merges(list(word), model.merges)
        for j, piece in enumerate(pieces):
            tokens.append(Token(model.vocab.get(piece, UNK_ID), piece, EN_BPE, word_start=(j == 0)))
    return TokenSeq(tokens)


def _apply_merges(pieces: list[str], merges: list[tuple[str, str]]) -> list[str]:
    for a, b in merges:
        merged: list[str] = []
        i = 0
        while i < len(pieces):
            if i + 1 < len(pieces) and pieces[i] == a and pieces[i + 1] == b:
                merged.append(a + b)
                i += 2
            else:
                merged.append(pieces[i])
                i += 1
        pieces = merged
    return pieces


def tokenize_text(text: str, bpe: BpeModel, chars: CharVocab, strip: bool = True) -> TokenSeq:
    """Full frontend: strip punctuation, split script runs, tokenize each run.

    CJK runs become per-character tokens; everything else goes through BPE.
    Whitespace produces no tokens but flags the next token as a word start so
    detokenize() can restore the normalized text.
    """
    if strip:
        text = strip_punctuation(text)
    tokens: list[Token] = []
    after_space = False
    for run, cls in split_script_runs(text):
        if run.isspace():
            after_space = True
            continue
        seq = tokenize_zh_char(run, chars) if cls == "cjk" else tokenize_en_bpe(run, bpe)
        for j, t in enumerate(seq.tokens):
            start = after_space if j == 0 else t.word_start
            tokens.append(Token(t.id, t.surface, t.kind, word_start=start))
        after_space = False
    return TokenSeq(tokens)
