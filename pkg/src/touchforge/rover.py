"""Copilot-ASR cross-validation filter.

Each utterance's two transcripts are scored against each other (WER on text
units, PER on phonemes); an utterance is dropped when BOTH rates exceed
their thresholds, so pure homophone disagreement (high WER, zero PER)
survives. Thresholds are strict: a rate exactly equal to its bound keeps
the record. A --any style disjunctive drop is available behind a flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .frontend import strip_punctuation
from .g2p import G2pTables
from .manifest import Utterance
from .metrics import EmptyReferenceError, per, wer

REFERENCE_SIDES = ("asr", "copilot")


@dataclass(frozen=True)
class RoverConfig:
    wer_max: float = 0.10
    per_max: float = 0.05
    reference_side: str = "asr"
    drop_if_any: bool = False  # True = drop when either rate exceeds its bound

    def __post_init__(self):
        if not 0 < self.wer_max <= 1 or not 0 < self.per_max <= 1:
            raise ValueError("wer_max and per_max must be in (0, 1]")
        if self.reference_side not in REFERENCE_SIDES:
            raise ValueError(f"reference_side must be one of {REFERENCE_SIDES}")


@dataclass
class RetentionReport:
    total: int = 0
    kept: int = 0
    per_domain: dict = field(default_factory=dict)  # domain -> [total, kept]

    @property
    def retention(self) -> float | None:
        return self.kept / self.total if self.total else None

    def add(self, domain: str, kept: bool) -> None:
        self.total += 1
        bucket = self.per_domain.setdefault(domain, [0, 0])
        bucket[0] += 1
        if kept:
            self.kept += 1
            bucket[1] += 1


def render_percent(num: int, den: int) -> str:
    return f"{100.0 * num / den:.1f}%" if den else "n/a"


def render_report(report: RetentionReport) -> str:
    lines = [
        f"total\t{report.total}",
        f"kept\t{report.kept}",
        f"retention\t{render_percent(report.kept, report.total)}",
    ]
    for domain in sorted(report.per_domain):
        total, kept = report.per_domain[domain]
        lines.append(f"domain\t{domain}\t{total}\t{kept}\t{render_percent(kept, total)}")
    return "\n".join(lines) + "\n"


def cross_validate(u: Utterance, cfg: RoverConfig, tables: G2pTables) -> Utterance:
    """Score transcript agreement and decide keep/drop for one utterance.

    Rates above 1 (possible with heavy insertion) are stored clamped to 1;
    the raw rates drive the decision. An empty reference transcript drops
    the record with reason "empty-reference" and both rates pinned to 1.
    """
    if u.text_asr is None or u.text_copilot is None:
        raise ValueError(f"utterance {u.id!r}: both transcripts required")
    if cfg.reference_side == "asr":
        ref_text, hyp_text = u.text_asr, u.text_copilot
    else:
        ref_text, hyp_text = u.text_copilot, u.text_asr
    ref_text = strip_punctuation(ref_text)
    hyp_text = strip_punctuation(hyp_text)

    try:
        _, wer_rate = wer(ref_text, hyp_text, u.lang)
        _, per_rate = per(ref_text, hyp_text, tables, u.lang)
    except EmptyReferenceError:
        return u.with_fields(cross_wer=1.0, cross_per=1.0, keep=False, reason="empty-reference")

    if cfg.drop_if_any:
        drop = wer_rate > cfg.wer_max or per_rate > cfg.per_max
    else:
        drop = wer_rate > cfg.wer_max and per_rate > cfg.per_max
    return u.with_fields(cross_wer=min(wer_rate, 1.0), cross_per=min(per_rate, 1.0),
                         keep=not drop, reason=None)


def filter_manifest(utts: list[Utterance], cfg: RoverConfig,
                    tables: G2pTables) -> tuple[list[Utterance], RetentionReport]:
    """Annotate every record and tally retention, never aborting the batch.

    Records missing a transcript cannot legally carry a keep flag; they get
    reason "missing-transcript" and count as not kept.
    """
    out: list[Utterance] = []
    report = RetentionReport()
    for u in utts:
        if u.text_asr is None or u.text_copilot is None:
            annotated = u.with_fields(reason="missing-transcript")
        else:
            annotated = cross_validate(u, cfg, tables)
        out.append(annotated)
        report.add(annotated.domain, annotated.keep is True)
    return out, report
