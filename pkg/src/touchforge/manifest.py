"""Utterance records and the line-delimited JSON manifest format.

One UTF-8 JSON object per line. Known keys are written in a fixed order
(id, source_id, start_s, end_s, lang, text_asr, text_copilot, cross_wer,
cross_per, keep, reason); optional keys are omitted when absent; unknown
keys survive a read/write round trip unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

LANGS = ("zh", "en", "mixed")

_KNOWN_KEYS = ("id", "source_id", "start_s", "end_s", "lang",
               "text_asr", "text_copilot", "cross_wer", "cross_per", "keep", "reason")


class ManifestError(ValueError):
    """Malformed manifest file or record."""


@dataclass(frozen=True)
class Segment:
    """A window [start_s, end_s) into a source recording."""
    source_id: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not (0 <= self.start_s < self.end_s):
            raise ManifestError(
                f"segment of {self.source_id!r}: need 0 <= start_s < end_s, "
                f"got [{self.start_s}, {self.end_s})")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class Utterance:
    """One clip with its dual transcripts, cross metrics, and keep decision.

    keep may be set only when both transcripts are present, and cross_wer /
    cross_per are present exactly when keep is. Unlisted input keys ride in
    `extra` and are preserved on write.
    """
    id: str
    segment: Segment
    lang: str = "zh"
    text_asr: str | None = None
    text_copilot: str | None = None
    cross_wer: float | None = None
    cross_per: float | None = None
    keep: bool | None = None
    reason: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lang not in LANGS:
            raise ManifestError(f"utterance {self.id!r}: lang must be one of {LANGS}, got {self.lang!r}")
        has_both = self.text_asr is not None and self.text_copilot is not None
        if self.keep is not None and not has_both:
            raise ManifestError(f"utterance {self.id!r}: keep set without both transcripts")
        if (self.cross_wer is None) != (self.keep is None) or (self.cross_per is None) != (self.keep is None):
            raise ManifestError(f"utterance {self.id!r}: cross_wer/cross_per must be present iff keep is")
        for name in ("cross_wer", "cross_per"):
            v = getattr(self, name)
            if v is not None and not (0.0 <= v <= 1.0):
                raise ManifestError(f"utterance {self.id!r}: {name} must be in [0, 1], got {v}")

    @property
    def domain(self) -> str:
        return str(self.extra.get("domain", "default"))

    def with_fields(self, **kwargs) -> "Utterance":
        return replace(self, **kwargs)

    def to_record(self) -> dict:
        rec = {
            "id": self.id,
            "source_id": self.segment.source_id,
            "start_s": self.segment.start_s,
            "end_s": self.segment.end_s,
            "lang": self.lang,
        }
        for key in ("text_asr", "text_copilot", "cross_wer", "cross_per", "keep", "reason"):
            value = getattr(self, key)
            if value is not None:
                rec[key] = value
        rec.update(self.extra)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Utterance":
        missing = [k for k in ("id", "source_id", "start_s", "end_s", "lang") if k not in rec]
        if missing:
            raise ManifestError(f"record missing required keys: {', '.join(missing)}")
        extra = {k: v for k, v in rec.items() if k not in _KNOWN_KEYS}
        return cls(
            id=str(rec["id"]),
            segment=Segment(str(rec["source_id"]), float(rec["start_s"]), float(rec["end_s"])),
            lang=rec["lang"],
            text_asr=rec.get("text_asr"),
            text_copilot=rec.get("text_copilot"),
            cross_wer=rec.get("cross_wer"),
            cross_per=rec.get("cross_per"),
            keep=rec.get("keep"),
            reason=rec.get("reason"),
            extra=extra,
        )


Manifest = list  # a manifest is an ordered list of Utterance records


def read_manifest(path) -> list[Utterance]:
    """Read a JSONL manifest, preserving file order.

    Raises ManifestError naming the 1-based line of the first malformed
    record, or both lines of a duplicated id.
    """
    utts: list[Utterance] = []
    seen: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                if not isinstance(rec, dict):
                    raise ManifestError("record is not an object")
                utt = Utterance.from_record(rec)
            except ManifestError as e:
                raise ManifestError(f"{path}: line {lineno}: {e}") from None
            except (ValueError, TypeError) as e:
                raise ManifestError(f"{path}: line {lineno}: {e}") from None
            if utt.id in seen:
                raise ManifestError(
                    f"{path}: duplicate id {utt.id!r} at lines {seen[utt.id]} and {lineno}")
            seen[utt.id] = lineno
            utts.append(utt)
    return utts


def write_manifest(utts: list[Utterance], path) -> None:
    """Write one record per line in deterministic key order."""
    seen: dict[str, int] = {}
    for i, u in enumerate(utts, start=1):
        if u.id in seen:
            raise ManifestError(f"duplicate id {u.id!r} at records {seen[u.id]} and {i}")
        seen[u.id] = i
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for u in utts:
            f.write(json.dumps(u.to_record(), ensure_ascii=False, separators=(",", ":")))
            f.write("\n")
