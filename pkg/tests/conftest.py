import numpy as np
import pytest

from touchforge.frontend import BpeModel, CharVocab
from touchforge.g2p import G2pTables


@pytest.fixture(scope="session")
def tables() -> G2pTables:
    return G2pTables.bundled()


@pytest.fixture(scope="session")
def char_vocab(tables) -> CharVocab:
    return CharVocab.from_characters(tables.zh_chars())


@pytest.fixture()
def toy_bpe() -> BpeModel:
    letters = {ch: i + 1 for i, ch in enumerate("abcdefghijklmnopqrstuvwxyz")}
    vocab = dict(letters)
    vocab.update({"he": 30, "th": 31, "the": 32, "cat": 33, "'": 34})
    merges = [("h", "e"), ("t", "h"), ("th", "e")]
    return BpeModel(vocab=vocab, merges=merges)


def make_tone_wav(path, sample_rate=16000, lead_s=1.0, tone_s=4.0, tail_s=1.0,
                  freq=440.0, amplitude=0.5):
    """Silence + sine burst + silence, written as 16-bit PCM."""
    from touchforge.audio import AudioClip, write_wav
    t = np.arange(int(tone_s * sample_rate)) / sample_rate
    tone = amplitude * np.sin(2 * np.pi * freq * t)
    samples = np.concatenate([
        np.zeros(int(lead_s * sample_rate)),
        tone,
        np.zeros(int(tail_s * sample_rate)),
    ])
    write_wav(path, AudioClip(id="tone", samples=samples, sample_rate=sample_rate))
    return path
