"""Transcription backends: an HTTP client with retry/backoff and a
file-backed stub for tests and offline runs.

Wire format: POST {base_url}/transcribe as multipart form data with fields
id, model_name and the WAV bytes under "audio"; the service answers JSON
{"text": ...}. 5xx and transport failures are retried with exponential
backoff up to max_retries; other non-2xx responses fail immediately.

Batch transcription treats per-record failures as data: the record comes
back with an empty transcript and a reason instead of aborting the batch.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import requests

from .audio import read_wav, slice_clip, wav_bytes
from .manifest import Utterance

ASR_URL_ENV = "TOUCHFORGE_ASR_URL"


class AsrError(RuntimeError):
    pass


class AsrTransportError(AsrError):
    """Timeout or connection failure after all retries."""


class AsrServiceError(AsrError):
    """Non-2xx response, carrying status and a body snippet."""

    def __init__(self, status: int, body: str):
        super().__init__(f"ASR service returned {status}: {body[:200]}")
        self.status = status


@dataclass(frozen=True)
class AsrEndpoint:
    base_url: str
    model_name: str = "default"
    timeout_ms: int = 30000
    max_retries: int = 2

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


class HttpAsr:
    """Blocking HTTP transcription client; shareable across threads."""

    def __init__(self, endpoint: AsrEndpoint, backoff_base_s: float = 0.1, session=None):
        self.endpoint = endpoint
        self.backoff_base_s = backoff_base_s
        self.session = session or requests.Session()

    def transcribe(self, utt_id: str, audio_wav: bytes) -> str:
        url = self.endpoint.base_url.rstrip("/") + "/transcribe"
        timeout_s = self.endpoint.timeout_ms / 1000.0
        last_exc: Exception | None = None
        for attempt in range(self.endpoint.max_retries + 1):
            if attempt:
                time.sleep(self.backoff_base_s * (2 ** (attempt - 1)))
            try:
                resp = self.session.post(
                    url,
                    data={"id": utt_id, "model_name": self.endpoint.model_name},
                    files={"audio": (f"{utt_id}.wav", audio_wav, "audio/wav")},
                    timeout=timeout_s,
                )
            except (requests.Timeout, requests.ConnectionError) as e:
                last_exc = AsrTransportError(f"transcribe {utt_id!r}: {e}")
                continue
            if 500 <= resp.status_code < 600:
                last_exc = AsrServiceError(resp.status_code, resp.text)
                continue
            if not resp.ok:
                raise AsrServiceError(resp.status_code, resp.text)
            return str(resp.json()["text"])
        assert last_exc is not None
        raise last_exc


class StubAsr:
    """Transcripts looked up from an id -> text mapping."""

    def __init__(self, transcripts: dict[str, str]):
        self.transcripts = dict(transcripts)

    @classmethod
    def from_file(cls, path) -> "StubAsr":
        transcripts: dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                utt_id, _, text = line.partition("\t")
                transcripts[utt_id] = text
        return cls(transcripts)

    def transcribe(self, utt_id: str, audio_wav: bytes = b"") -> str:
        if utt_id not in self.transcripts:
            raise AsrError(f"unknown utterance {utt_id!r}")
        return self.transcripts[utt_id]


def make_backend(descriptor: str | None, model_name: str = "default",
                 timeout_ms: int = 30000, max_retries: int = 2):
    """Build a backend from "stub:<file>" or an http(s) URL.

    Falls back to the TOUCHFORGE_ASR_URL environment variable when the
    descriptor is None; raises ValueError if neither is set.
    """
    if descriptor is None:
        descriptor = os.environ.get(ASR_URL_ENV)
    if not descriptor:
        raise ValueError("no ASR endpoint configured (flag or TOUCHFORGE_ASR_URL)")
    if descriptor.startswith("stub:"):
        return StubAsr.from_file(descriptor[len("stub:"):])
    return HttpAsr(AsrEndpoint(descriptor, model_name=model_name,
                               timeout_ms=timeout_ms, max_retries=max_retries))


def load_clip_audio(u: Utterance, audio_root) -> bytes:
    """WAV bytes for one utterance: a pre-cut <id>.wav if present, else the
    source <source_id>.wav sliced at the segment offsets."""
    root = Path(audio_root)
    cut = root / f"{u.id}.wav"
    if cut.exists():
        with open(cut, "rb") as f:
            return f.read()
    source = root / f"{u.segment.source_id}.wav"
    if not source.exists():
        raise FileNotFoundError(f"no audio for {u.id!r}: neither {cut.name} nor {source.name} under {root}")
    clip = read_wav(source, clip_id=u.segment.source_id)
    return wav_bytes(slice_clip(clip, u.segment.start_s, u.segment.end_s, clip_id=u.id))


def transcribe_batch(backend, utts: list[Utterance], audio_root, concurrency: int = 1,
                     target: str = "asr") -> list[Utterance]:
    """Transcribe a manifest with at most `concurrency` requests in flight.

    Output order equals input order. Records that already carry the target
    transcript pass through untouched (resumability); failures come back
    with an empty transcript and the failure reason.
    """
    if concurrency < 1:
        raise ValueError("concurrency must be >= 1")
    if target not in ("asr", "copilot"):
        raise ValueError(f"target must be asr or copilot, got {target!r}")
    field = f"text_{target}"

    def work(u: Utterance) -> Utterance:
        if getattr(u, field) is not None:
            return u
        try:
            audio = load_clip_audio(u, audio_root)
            text = backend.transcribe(u.id, audio)
            return u.with_fields(**{field: text})
        except FileNotFoundError:
            return u.with_fields(**{field: ""}, reason="audio-missing")
        except Exception as e:  # noqa: BLE001 - failures are data at batch level
            return u.with_fields(**{field: ""}, reason=f"transcription-failed: {e}")

    if not utts:
        return []
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        return list(pool.map(work, utts))
