"""Grapheme-to-phoneme lookup for PER scoring.

Chinese characters map to toneless pinyin syllables (first listed reading
wins for polyphones); English words map through a bundled stress-free
ARPABET dictionary with an uppercase letter-name fallback for words it
does not know. Both tables are plain text shipped with the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .frontend import split_script_runs

UNK_PHONE = "UNK"

DATA_DIR = Path(__file__).parent / "data"
ZH_TABLE_PATH = DATA_DIR / "pinyin_zh.tsv"
EN_DICT_PATH = DATA_DIR / "cmudict_en.tsv"


@dataclass
class PhonemeSeq:
    phones: list[str]
    lang: str

    def __len__(self) -> int:
        return len(self.phones)


class G2pTables:
    """Character-to-pinyin and word-to-phoneme lookup tables."""

    def __init__(self, zh_table: dict[str, list[str]], en_dict: dict[str, list[str]]):
        for ch, readings in zh_table.items():
            if not readings or any(not r for r in readings):
                raise ValueError(f"zh table entry {ch!r} has an empty reading")
        self.zh_table = zh_table
        self.en_dict = en_dict

    @classmethod
    def load(cls, zh_path=ZH_TABLE_PATH, en_path=EN_DICT_PATH) -> "G2pTables":
        zh_table: dict[str, list[str]] = {}
        with open(zh_path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                ch, _, readings = line.partition("\t")
                zh_table[ch] = readings.split(",")
        en_dict: dict[str, list[str]] = {}
        with open(en_path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                word, _, phones = line.partition("\t")
                en_dict[word.lower()] = phones.split()
        return cls(zh_table, en_dict)

    @classmethod
    def bundled(cls) -> "G2pTables":
        return cls.load()

    def zh_chars(self):
        """Characters of the pinyin table, in file order (feeds CharVocab)."""
        return self.zh_table.keys()


def zh_to_phonemes(text: str, tables: G2pTables) -> PhonemeSeq:
    """One toneless syllable per character; polyphones take the first
    listed reading; unmapped characters become the UNK phone."""
    phones = [tables.zh_table.get(ch, [UNK_PHONE])[0] for ch in text if not ch.isspace()]
    return PhonemeSeq(phones, "zh")


def en_to_phonemes(text: str, tables: G2pTables) -> PhonemeSeq:
    """Dictionary lookup per word (case-folded); out-of-vocabulary words
    fall back to one uppercase letter-name phone per letter."""
    phones: list[str] = []
    for word in text.split():
        entry = tables.en_dict.get(word.lower())
        if entry is not None:
            phones.extend(entry)
        else:
            phones.extend(ch.upper() for ch in word if ch.isalpha())
    return PhonemeSeq(phones, "en")


def to_phonemes(text: str, lang: str, tables: G2pTables) -> PhonemeSeq:
    """Language dispatch; mixed text routes CJK runs through the pinyin
    table and everything else through the English dictionary."""
    if lang == "zh":
        return zh_to_phonemes(text, tables)
    if lang == "en":
        return en_to_phonemes(text, tables)
    if lang == "mixed":
        phones: list[str] = []
        for run, cls in split_script_runs(text):
            if cls == "cjk":
                phones.extend(zh_to_phonemes(run, tables).phones)
            elif not run.isspace():
                phones.extend(en_to_phonemes(run, tables).phones)
        return PhonemeSeq(phones, "mixed")
    raise ValueError(f"unknown lang {lang!r}")
