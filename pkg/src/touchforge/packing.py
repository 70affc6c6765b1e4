"""Training-sequence layouts for the unified TTS/ASR task family.

One sample = one sentence of text and one span of speech, never word-level
alternation. TTS conditions on a speaker embedding and text, losses over
the audio tokens; ASR consumes audio (continuous features or discrete
tokens) and losses over the text. Start/separator/end markers take one
position each, and the loss region includes the end marker.
"""

from __future__ import annotations

from dataclasses import dataclass

ROLE_START = "start"
ROLE_SPEAKER = "speaker_embedding"
ROLE_TEXT = "text"
ROLE_SEPARATOR = "separator"
ROLE_AUDIO = "audio_tokens"
ROLE_CONTINUOUS = "continuous_features"
ROLE_END = "end"


@dataclass(frozen=True)
class Slot:
    role: str
    length: int


@dataclass(frozen=True)
class PackedSample:
    task: str  # "tts" | "asr"
    slots: tuple[Slot, ...]

    @property
    def total_length(self) -> int:
        return sum(s.length for s in self.slots)

    @property
    def loss_span(self) -> tuple[int, int]:
        """[start, end) positions under the loss: final content slot + end."""
        content_len = self.slots[-2].length  # slot before the end marker
        return self.total_length - content_len - 1, self.total_length

    @property
    def loss_length(self) -> int:
        lo, hi = self.loss_span
        return hi - lo


def pack_tts(text_tokens: int, audio_tokens: int) -> PackedSample:
    """[start][speaker][text...][sep][audio...][end]; loss on audio + end."""
    if text_tokens < 1 or audio_tokens < 1:
        raise ValueError("text_tokens and audio_tokens must be >= 1")
    return PackedSample("tts", (
        Slot(ROLE_START, 1),
        Slot(ROLE_SPEAKER, 1),
        Slot(ROLE_TEXT, text_tokens),
        Slot(ROLE_SEPARATOR, 1),
        Slot(ROLE_AUDIO, audio_tokens),
        Slot(ROLE_END, 1),
    ))


def pack_asr(feature_frames: int, text_tokens: int, use_continuous: bool) -> PackedSample:
    """[start][audio...][sep][text...][end]; loss on text + end. The input
    slot is continuous features or discrete tokens depending on the flag."""
    if feature_frames < 1 or text_tokens < 1:
        raise ValueError("feature_frames and text_tokens must be >= 1")
    input_role = ROLE_CONTINUOUS if use_continuous else ROLE_AUDIO
    return PackedSample("asr", (
        Slot(ROLE_START, 1),
        Slot(input_role, feature_frames),
        Slot(ROLE_SEPARATOR, 1),
        Slot(ROLE_TEXT, text_tokens),
        Slot(ROLE_END, 1),
    ))
