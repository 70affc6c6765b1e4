"""Dynamic-chunk attention masks for unified streaming / non-streaming flow.

Positions see everything inside their own chunk, a configurable number of
chunks behind it, and nothing ahead. Training samples a chunk size per
sequence (or the whole sentence, 50% of the time by default); inference
applies the identical visibility rule over the processed prefix, which is
what keeps the two phases' receptive fields bit-for-bit aligned.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChunkLayout:
    n: int
    chunk_sizes: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("layout length must be >= 1")
        if not self.chunk_sizes or any(c < 1 for c in self.chunk_sizes):
            raise ValueError("chunk sizes must be positive")
        if sum(self.chunk_sizes) != self.n:
            raise ValueError(f"chunk sizes {self.chunk_sizes} do not sum to n={self.n}")

    @classmethod
    def tiled(cls, n: int, chunk: int) -> "ChunkLayout":
        """Tile `chunk`-sized chunks over n tokens; the last may be short."""
        if chunk >= n:
            return cls(n, (n,))
        sizes = [chunk] * (n // chunk)
        if n % chunk:
            sizes.append(n % chunk)
        return cls(n, tuple(sizes))

    @property
    def num_chunks(self) -> int:
        return len(self.chunk_sizes)

    def chunk_ids(self) -> np.ndarray:
        """Chunk index of every position."""
        return np.repeat(np.arange(self.num_chunks), self.chunk_sizes)

    def end_of(self, chunk: int) -> int:
        return int(sum(self.chunk_sizes[: chunk + 1]))


@dataclass(frozen=True)
class MaskSchedule:
    token_rate: int = 25
    min_chunk_tokens: int = 13  # ceil(0.5 s at 25 tokens/s)
    full_sentence_prob: float = 0.5
    history_choices: tuple[int, ...] = (0, 1)

    def __post_init__(self):
        if self.min_chunk_tokens < 1:
            raise ValueError("min_chunk_tokens must be >= 1")
        if not 0 <= self.full_sentence_prob <= 1:
            raise ValueError("full_sentence_prob must be in [0, 1]")
        if not self.history_choices:
            raise ValueError("history_choices must be non-empty")

    @classmethod
    def for_token_rate(cls, token_rate: int, min_chunk_s: float = 0.5, **kwargs) -> "MaskSchedule":
        return cls(token_rate=token_rate,
                   min_chunk_tokens=max(1, math.ceil(min_chunk_s * token_rate)), **kwargs)


def sample_layout(n: int, schedule: MaskSchedule, rng: random.Random) -> tuple[ChunkLayout, int]:
    """Draw a (layout, history) pair for one training sequence.

    Sequences at or below the minimum chunk size cannot split and come back
    as one chunk; otherwise the full-sentence branch fires with the
    configured probability, else one uniform chunk size in
    [min_chunk_tokens, n] is tiled and a history depth is drawn.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n <= schedule.min_chunk_tokens:
        return ChunkLayout(n, (n,)), 0
    if rng.random() < schedule.full_sentence_prob:
        return ChunkLayout(n, (n,)), 0
    chunk = rng.randint(schedule.min_chunk_tokens, n)
    history = rng.choice(sorted(schedule.history_choices))
    return ChunkLayout.tiled(n, chunk), history


def training_mask(layout: ChunkLayout, history: int) -> np.ndarray:
    """n x n boolean visibility: row i sees column j iff j's chunk is within
    [chunk(i) - history, chunk(i)]."""
    if history < 0:
        raise ValueError("history must be >= 0")
    ids = layout.chunk_ids()
    ci = ids[:, None]
    cj = ids[None, :]
    return (cj <= ci) & (cj >= ci - history)


def inference_mask(layout: ChunkLayout, current_chunk: int, history: int) -> np.ndarray:
    """Visibility over the processed prefix, up to the end of current_chunk.

    Bit-equal to the top-left sub-matrix of the training mask: the current
    chunk's rows see the whole current chunk plus `history` chunks behind.
    """
    if not 0 <= current_chunk < layout.num_chunks:
        raise ValueError(f"current_chunk {current_chunk} out of range for {layout.num_chunks} chunks")
    if history < 0:
        raise ValueError("history must be >= 0")
    m = layout.end_of(current_chunk)
    ids = layout.chunk_ids()[:m]
    ci = ids[:, None]
    cj = ids[None, :]
    return (cj <= ci) & (cj >= ci - history)


def visible_spans(layout: ChunkLayout, history: int) -> list[tuple[int, int]]:
    """Per-row visible column range [start, end) — the run-length form of the
    training mask (each row's visibility is one contiguous block)."""
    spans = []
    for c, size in enumerate(layout.chunk_sizes):
        start = layout.end_of(c - history - 1) if c - history - 1 >= 0 else 0
        end = layout.end_of(c)
        spans.extend([(start, end)] * size)
    return spans


def write_mask(mask: np.ndarray, path, chunk: int, history: int) -> None:
    """Mask file: header "n c h", then one row of 0/1 characters per line."""
    n = mask.shape[0]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{n} {chunk} {history}\n")
        for row in mask:
            f.write("".join("1" if v else "0" for v in row))
            f.write("\n")


def read_mask(path) -> tuple[np.ndarray, int, int]:
    """Inverse of write_mask; returns (mask, chunk, history)."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().split()
        n, chunk, history = (int(x) for x in header)
        rows = [[ch == "1" for ch in f.readline().strip()] for _ in range(n)]
    mask = np.array(rows, dtype=bool)
    if mask.shape != (n, n):
        raise ValueError(f"{path}: expected {n}x{n} mask, got {mask.shape}")
    return mask, chunk, history
