"""Audio clips and WAV file I/O.

Clips are mono float arrays in [-1, 1]. The reader accepts PCM WAV files
with 16-bit integer or 32-bit float samples at any rate; the writer always
emits 16-bit PCM. No resampling, no lossy codecs.
"""

from __future__ import annotations

import io
import struct
import wave
from dataclasses import dataclass

import numpy as np


class AudioError(ValueError):
    """Unreadable or unsupported audio input."""


@dataclass
class AudioClip:
    id: str
    samples: np.ndarray  # float64, shape (n,), values in [-1, 1]
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise AudioError(f"clip {self.id!r}: samples must be 1-D, got shape {self.samples.shape}")
        if self.sample_rate <= 0:
            raise AudioError(f"clip {self.id!r}: sample_rate must be positive, got {self.sample_rate}")
        if self.samples.size and (np.max(self.samples) > 1.0 or np.min(self.samples) < -1.0):
            raise AudioError(f"clip {self.id!r}: samples outside [-1, 1]")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(path, clip_id: str | None = None) -> AudioClip:
    """Read a mono WAV file (16-bit PCM or 32-bit IEEE float).

    Samples are scaled to [-1, 1] and clamped against float rounding spill.
    """
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4:pos + 8])
        body = data[pos + 8:pos + 8 + size]
        if chunk_id == b"fmt ":
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif chunk_id == b"data":
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise AudioError(f"{path}: missing fmt or data chunk")
    audio_format, channels, sample_rate, _, _, bits = fmt
    if channels != 1:
        raise AudioError(f"{path}: expected mono audio, got {channels} channels")

    if audio_format == 1 and bits == 16:
        samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    elif audio_format == 3 and bits == 32:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise AudioError(f"{path}: unsupported format (format={audio_format}, bits={bits}); "
                         "expected 16-bit PCM or 32-bit float")

    samples = np.clip(samples, -1.0, 1.0)
    if clip_id is None:
        clip_id = _stem(path)
    return AudioClip(id=clip_id, samples=samples, sample_rate=sample_rate)


def write_wav(path, clip: AudioClip) -> None:
    """Write a clip as mono 16-bit PCM."""
    pcm = np.clip(np.round(clip.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate)
        w.writeframes(pcm.tobytes())


def wav_bytes(clip: AudioClip) -> bytes:
    """Encode a clip as an in-memory 16-bit PCM WAV blob."""
    buf = io.BytesIO()
    pcm = np.clip(np.round(clip.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate)
        w.writeframes(pcm.tobytes())
    return buf.getvalue()


def slice_clip(clip: AudioClip, start_s: float, end_s: float, clip_id: str | None = None) -> AudioClip:
    """Cut [start_s, end_s) out of a clip by sample offsets."""
    if not 0 <= start_s < end_s:
        raise AudioError(f"invalid slice [{start_s}, {end_s})")
    lo = int(round(start_s * clip.sample_rate))
    hi = min(int(round(end_s * clip.sample_rate)), len(clip.samples))
    if lo >= len(clip.samples):
        raise AudioError(f"slice start {start_s}s past end of clip {clip.id!r}")
    return AudioClip(id=clip_id or clip.id, samples=clip.samples[lo:hi], sample_rate=clip.sample_rate)


def _stem(path) -> str:
    name = str(path).replace("\\", "/").rsplit("/", 1)[-1]
    return name.rsplit(".", 1)[0] if "." in name else name
