"""Streaming chunk planning, boundary crossfade, and the first-packet
latency model.

A stream config "(a b c)" means: first chunk a seconds, later chunks b
seconds, c tokens of overlap regenerated before each later chunk to smooth
the boundary. Seconds convert to tokens at the given token rate; a value
with a "t" suffix is already in tokens.

First-packet latency = LLM time for the first chunk + one flow invocation.
The LLM term is either analytic (prefill the input, decode the first chunk
at the measured rates) or a measured first-chunk statistic (max/avg/p95).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class StreamConfigError(ValueError):
    """Malformed stream configuration text or profile file."""


@dataclass(frozen=True)
class StreamConfig:
    first_chunk_tokens: int
    chunk_tokens: int
    overlap_tokens: int

    def __post_init__(self):
        if self.first_chunk_tokens < 1 or self.chunk_tokens < 1:
            raise StreamConfigError("chunk sizes must be >= 1 token")
        if not 0 <= self.overlap_tokens < min(self.first_chunk_tokens, self.chunk_tokens):
            raise StreamConfigError(
                f"overlap {self.overlap_tokens} must be in [0, min(first, chunk)) = "
                f"[0, {min(self.first_chunk_tokens, self.chunk_tokens)})")


@dataclass(frozen=True)
class ChunkSpan:
    gen_start: int
    gen_end: int
    emit_start: int
    emit_end: int

    @property
    def overlap(self) -> int:
        return self.emit_start - self.gen_start


def parse_config(text: str, token_rate: int = 25) -> StreamConfig:
    """Parse "(a b c)" or "a b c": a and b in seconds (or tokens with a "t"
    suffix), c always raw tokens."""
    s = text.strip()
    if s.startswith("(") and s.endswith(")"):
        s = s[1:-1]
    parts = s.split()
    if len(parts) != 3:
        raise StreamConfigError(f"expected three fields in stream config, got {text!r}")
    try:
        first = _to_tokens(parts[0], token_rate)
        chunk = _to_tokens(parts[1], token_rate)
        overlap = int(parts[2].rstrip("t"))
    except ValueError as e:
        raise StreamConfigError(f"bad stream config {text!r}: {e}") from None
    return StreamConfig(first, chunk, overlap)


def _to_tokens(field: str, token_rate: int) -> int:
    if field.endswith("t"):
        return int(field[:-1])
    return int(math.floor(float(field) * token_rate + 0.5))  # round half up


def plan_chunks(total_tokens: int, cfg: StreamConfig) -> list[ChunkSpan]:
    """Emit ranges partition [0, total); each later chunk regenerates
    overlap_tokens of history before its emit start."""
    if total_tokens < 1:
        raise ValueError("total_tokens must be >= 1")
    first_end = min(cfg.first_chunk_tokens, total_tokens)
    plan = [ChunkSpan(0, first_end, 0, first_end)]
    pos = first_end
    while pos < total_tokens:
        emit_end = min(pos + cfg.chunk_tokens, total_tokens)
        plan.append(ChunkSpan(max(pos - cfg.overlap_tokens, 0), emit_end, pos, emit_end))
        pos = emit_end
    return plan


def crossfade(tail, head, ramp_len: int):
    """Linear blend of two equal-shape frame runs over the overlap region.

    output[t] = (1-w)*tail[t] + w*head[t] with w = (t+1)/(ramp_len+1);
    computed as tail + w*(head-tail) so crossfade(x, x) == x exactly.
    """
    tail = np.asarray(tail, dtype=np.float64)
    head = np.asarray(head, dtype=np.float64)
    if tail.shape != head.shape:
        raise ValueError(f"tail/head shapes differ: {tail.shape} vs {head.shape}")
    if len(tail) != ramp_len:
        raise ValueError(f"expected {ramp_len} frames, got {len(tail)}")
    if ramp_len == 0:
        return tail.copy()
    w = (np.arange(ramp_len, dtype=np.float64) + 1.0) / (ramp_len + 1.0)
    if tail.ndim > 1:
        w = w.reshape((ramp_len,) + (1,) * (tail.ndim - 1))
    return tail + w * (head - tail)


def overlap_frames(cfg: StreamConfig, frames_per_token: int = 2) -> int:
    """Crossfade length in feature frames for one chunk boundary."""
    if frames_per_token < 1:
        raise ValueError("frames_per_token must be >= 1")
    return cfg.overlap_tokens * frames_per_token


@dataclass(frozen=True)
class FirstChunkStats:
    max_ms: float
    avg_ms: float
    p95_ms: float

    def get(self, which: str) -> float:
        try:
            return {"max": self.max_ms, "avg": self.avg_ms, "p95": self.p95_ms}[which]
        except KeyError:
            raise ValueError(f"measured statistic must be max, avg, or p95, got {which!r}") from None


@dataclass(frozen=True)
class ThroughputProfile:
    llm_prefill_rate: float  # tokens/s
    llm_decode_rate: float   # tokens/s
    flow_chunk_ms: float     # one flow invocation over a chunk
    flow_steps: int = 5
    llm_first_chunk_ms: FirstChunkStats | None = None

    def __post_init__(self):
        if self.llm_prefill_rate <= 0 or self.llm_decode_rate <= 0:
            raise ValueError("throughput rates must be positive")
        if self.flow_steps < 1:
            raise ValueError("flow_steps must be >= 1")


_PROFILE_KEYS = ("llm_prefill_rate", "llm_decode_rate", "flow_chunk_ms", "flow_steps",
                 "llm_first_chunk_max_ms", "llm_first_chunk_avg_ms", "llm_first_chunk_p95_ms")


def load_profile(path) -> ThroughputProfile:
    """Profile file: key=value lines, # comments allowed."""
    values: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or key not in _PROFILE_KEYS:
                raise StreamConfigError(f"{path}: line {lineno}: unknown profile entry {line!r}")
            values[key] = float(value.strip())
    for required in ("llm_prefill_rate", "llm_decode_rate", "flow_chunk_ms"):
        if required not in values:
            raise StreamConfigError(f"{path}: missing required key {required}")
    stats = None
    stat_keys = ("llm_first_chunk_max_ms", "llm_first_chunk_avg_ms", "llm_first_chunk_p95_ms")
    if any(k in values for k in stat_keys):
        if not all(k in values for k in stat_keys):
            raise StreamConfigError(f"{path}: measured stats need all of {stat_keys}")
        stats = FirstChunkStats(values[stat_keys[0]], values[stat_keys[1]], values[stat_keys[2]])
    return ThroughputProfile(
        llm_prefill_rate=values["llm_prefill_rate"],
        llm_decode_rate=values["llm_decode_rate"],
        flow_chunk_ms=values["flow_chunk_ms"],
        flow_steps=int(values.get("flow_steps", 5)),
        llm_first_chunk_ms=stats,
    )


def estimate_first_packet_latency(profile: ThroughputProfile, input_tokens: int,
                                  cfg: StreamConfig, measured: str | None = None) -> float:
    """First-packet latency in milliseconds.

    Analytic mode: prefill the input tokens, decode the first chunk, add one
    flow invocation. Measured mode replaces the LLM terms with the selected
    first-chunk statistic.
    """
    if input_tokens < 0:
        raise ValueError("input_tokens must be >= 0")
    if measured is None:
        llm_ms = (1000.0 * input_tokens / profile.llm_prefill_rate
                  + 1000.0 * cfg.first_chunk_tokens / profile.llm_decode_rate)
    else:
        if profile.llm_first_chunk_ms is None:
            raise ValueError("profile has no measured first-chunk statistics")
        llm_ms = profile.llm_first_chunk_ms.get(measured)
    return llm_ms + profile.flow_chunk_ms
