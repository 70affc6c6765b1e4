"""touchforge: a corpus-forge and streaming-inference toolkit.

Pipeline stages (VAD segmentation, dual-ASR transcription, rover
filtering), a char/BPE text frontend with G2P-backed PER/WER scoring,
dynamic-chunk attention masks, and streaming chunk / first-packet latency
planning. See the CLI (`touchforge --help`) for the end-to-end pipeline.
"""

from .audio import AudioClip, read_wav, write_wav
from .frontend import BpeModel, CharVocab, Token, TokenSeq, strip_punctuation, tokenize_text
from .g2p import G2pTables, PhonemeSeq, to_phonemes
from .manifest import Manifest, ManifestError, Segment, Utterance, read_manifest, write_manifest
from .masks import ChunkLayout, MaskSchedule, inference_mask, sample_layout, training_mask
from .metrics import ErrorCounts, SeedResult, aggregate_seeds, align, per, sim_average, wer
from .packing import PackedSample, pack_asr, pack_tts
from .rover import RetentionReport, RoverConfig, cross_validate, filter_manifest
from .streaming import (ChunkSpan, StreamConfig, ThroughputProfile, crossfade,
                        estimate_first_packet_latency, parse_config, plan_chunks)
from .vad import VadConfig, detect_speech_regions, enforce_duration_bounds, frame_energies, segment_clip

__version__ = "0.1.0"
