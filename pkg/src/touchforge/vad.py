"""Energy-based voice activity detection and 2-30 s clip segmentation.

The detector is self-contained and deterministic: frame log-energies are
thresholded against an adaptive noise floor (a low quantile of all frame
energies plus a margin), active frames are grown by a hangover, nearby
regions merged, and the surviving regions forced into the configured
duration window by dropping short ones and splitting long ones at their
quietest interior frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioClip
from .manifest import Segment

ENERGY_FLOOR = 1e-12  # added to mean square before the log


@dataclass(frozen=True)
class VadConfig:
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    noise_percentile: float = 0.10
    margin_db: float = 6.0
    hangover_ms: float = 300.0
    merge_gap_ms: float = 200.0
    min_clip_s: float = 2.0
    max_clip_s: float = 30.0

    def __post_init__(self):
        if not 0 < self.hop_ms <= self.frame_ms:
            raise ValueError(f"need 0 < hop_ms <= frame_ms, got hop={self.hop_ms} frame={self.frame_ms}")
        if not self.min_clip_s < self.max_clip_s:
            raise ValueError(f"need min_clip_s < max_clip_s, got {self.min_clip_s} >= {self.max_clip_s}")
        if not 0 < self.noise_percentile < 1:
            raise ValueError(f"noise_percentile must be in (0, 1), got {self.noise_percentile}")


def frame_energies(clip: AudioClip, cfg: VadConfig = VadConfig()) -> np.ndarray:
    """Per-frame energy in dB: 10*log10(mean square + 1e-12).

    Frames of frame_ms every hop_ms; a clip shorter than one frame yields an
    empty array. An empty clip is an error.
    """
    if len(clip.samples) == 0:
        raise ValueError(f"clip {clip.id!r} is empty")
    frame_len = int(round(cfg.frame_ms * clip.sample_rate / 1000.0))
    hop_len = int(round(cfg.hop_ms * clip.sample_rate / 1000.0))
    if frame_len < 1 or hop_len < 1:
        raise ValueError(f"frame/hop too short for sample rate {clip.sample_rate}")
    if len(clip.samples) < frame_len:
        return np.empty(0, dtype=np.float64)
    windows = np.lib.stride_tricks.sliding_window_view(clip.samples, frame_len)[::hop_len]
    mean_sq = np.mean(windows * windows, axis=1)
    return 10.0 * np.log10(mean_sq + ENERGY_FLOOR)


def detect_speech_regions(energies: np.ndarray, cfg: VadConfig = VadConfig()) -> list[tuple[float, float]]:
    """Threshold frames and return merged speech regions as (start_s, end_s).

    A frame is speech iff its energy exceeds quantile(energies,
    noise_percentile) + margin_db. Regions get hangover_ms appended, then
    regions separated by less than merge_gap_ms are merged.
    """
    energies = np.asarray(energies, dtype=np.float64)
    if energies.size == 0:
        raise ValueError("energies is empty")
    hop_s = cfg.hop_ms / 1000.0
    frame_s = cfg.frame_ms / 1000.0
    total_s = (energies.size - 1) * hop_s + frame_s

    threshold = float(np.quantile(energies, cfg.noise_percentile)) + cfg.margin_db
    speech = energies > threshold

    regions: list[tuple[float, float]] = []
    start = None
    for i, active in enumerate(speech):
        if active and start is None:
            start = i
        elif not active and start is not None:
            regions.append((start, i - 1))
            start = None
    if start is not None:
        regions.append((start, energies.size - 1))

    hangover_s = cfg.hangover_ms / 1000.0
    timed = [(i * hop_s, min(j * hop_s + frame_s + hangover_s, total_s)) for i, j in regions]

    merge_gap_s = cfg.merge_gap_ms / 1000.0
    merged: list[tuple[float, float]] = []
    for s, e in timed:
        if merged and s - merged[-1][1] < merge_gap_s:
            merged[-1] = (merged[-1][0], max(merged[-1][1], e))
        else:
            merged.append((s, e))
    return merged


def enforce_duration_bounds(regions: list[tuple[float, float]], energies: np.ndarray,
                            cfg: VadConfig = VadConfig(), source_id: str = "") -> list[Segment]:
    """Force regions into [min_clip_s, max_clip_s].

    Regions under the minimum are dropped. Regions over the maximum are split
    recursively at the quietest frame strictly inside them (earliest on ties),
    and any resulting piece under the minimum is dropped too.
    """
    energies = np.asarray(energies, dtype=np.float64)
    hop_s = cfg.hop_ms / 1000.0
    out: list[Segment] = []
    stack = list(reversed(regions))
    while stack:
        start, end = stack.pop()
        if end - start > cfg.max_clip_s:
            split = _quietest_interior_time(start, end, energies, hop_s)
            stack.append((split, end))
            stack.append((start, split))
        elif end - start >= cfg.min_clip_s:
            out.append(Segment(source_id, start, end))
    return out


def _quietest_interior_time(start: float, end: float, energies: np.ndarray, hop_s: float) -> float:
    """Time of the minimum-energy frame strictly inside (start, end)."""
    lo = int(np.floor(start / hop_s + 1e-9)) + 1
    hi = int(np.ceil(end / hop_s - 1e-9)) - 1
    lo = max(lo, 0)
    hi = min(hi, energies.size - 1)
    if lo > hi:
        return (start + end) / 2.0  # no interior frame; cannot happen with ms-scale hops
    offset = int(np.argmin(energies[lo:hi + 1]))  # argmin takes the earliest on ties
    return (lo + offset) * hop_s


def segment_clip(clip: AudioClip, cfg: VadConfig = VadConfig()) -> list[Segment]:
    """Run the full VAD chain on one clip."""
    energies = frame_energies(clip, cfg)
    if energies.size == 0:
        return []
    regions = detect_speech_regions(energies, cfg)
    return enforce_duration_bounds(regions, energies, cfg, source_id=clip.id)
