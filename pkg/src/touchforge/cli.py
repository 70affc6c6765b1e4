"""touchforge command line: every pipeline stage as a subcommand, plus
`run` for the whole segment -> transcribe -> rover chain.

Exit codes: 0 success, 1 runtime failure, 2 configuration error. Progress
goes to stderr; machine output goes to stdout or files. Settings resolve
as flags > TOUCHFORGE_* environment variables > config file.
"""

from __future__ import annotations

import argparse
import glob as globmod
import os
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from . import frontend, g2p, masks, metrics, packing, rover, streaming, vad
from .asr import make_backend, transcribe_batch
from .audio import read_wav, slice_clip, write_wav
from .manifest import ManifestError, Utterance, read_manifest, write_manifest

ENV_PREFIX = "TOUCHFORGE_"


class ConfigError(ValueError):
    """Bad or missing configuration; exits with status 2."""


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------- settings

def load_config_file(path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}: line {lineno}: expected key=value, got {line!r}")
            values[key.strip()] = value.strip()
    return values


class Settings:
    """flags > env > file resolution for the run command."""

    def __init__(self, args: argparse.Namespace, file_values: dict[str, str]):
        self.args = args
        self.file_values = file_values

    def get(self, key: str, default=None, cast=str):
        attr = "in_" if key == "in" else key.replace("-", "_")
        flag = getattr(self.args, attr, None)
        if flag is not None:
            return flag
        env = os.environ.get(ENV_PREFIX + key.replace("-", "_").upper())
        if env is not None:
            return cast(env)
        if key in self.file_values:
            return cast(self.file_values[key])
        return default

    def require(self, key: str, stage: str, cast=str):
        value = self.get(key, cast=cast)
        if value is None:
            raise ConfigError(f"{stage} stage requires setting {key!r} "
                              f"(flag --{key}, env {ENV_PREFIX}{key.upper()}, or config file)")
        return value


# ----------------------------------------------------------------- segment

def _wav_paths(location: str) -> list[Path]:
    p = Path(location)
    if p.is_dir():
        return sorted(p.glob("*.wav"))
    if p.is_file():
        return [p]
    raise ConfigError(f"--in {location!r}: no such file or directory")


def _vad_config(args) -> vad.VadConfig:
    return vad.VadConfig(
        frame_ms=args.frame_ms, hop_ms=args.hop_ms,
        noise_percentile=args.noise_percentile, margin_db=args.margin_db,
        hangover_ms=args.hangover_ms, merge_gap_ms=args.merge_gap_ms,
        min_clip_s=args.min_s, max_clip_s=args.max_s)


def cmd_segment(args) -> int:
    cfg = _vad_config(args)
    utts: list[Utterance] = []
    for wav_path in _wav_paths(args.inp):
        clip = read_wav(wav_path)
        segments = vad.segment_clip(clip, cfg)
        _progress(f"segment: {wav_path} -> {len(segments)} clip(s)")
        for i, seg in enumerate(segments):
            utt = Utterance(id=f"{clip.id}-{i:04d}", segment=seg, lang=args.lang)
            utts.append(utt)
            if args.export_clips:
                out_dir = Path(args.export_clips)
                out_dir.mkdir(parents=True, exist_ok=True)
                write_wav(out_dir / f"{utt.id}.wav",
                          slice_clip(clip, seg.start_s, seg.end_s, clip_id=utt.id))
    write_manifest(utts, args.out)
    _progress(f"segment: wrote {len(utts)} utterance(s) to {args.out}")
    return 0


def _add_vad_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--frame-ms", type=float, default=25.0)
    p.add_argument("--hop-ms", type=float, default=10.0)
    p.add_argument("--noise-percentile", type=float, default=0.10)
    p.add_argument("--margin-db", type=float, default=6.0)
    p.add_argument("--hangover-ms", type=float, default=300.0)
    p.add_argument("--merge-gap-ms", type=float, default=200.0)
    p.add_argument("--min-s", type=float, default=2.0)
    p.add_argument("--max-s", type=float, default=30.0)


# -------------------------------------------------------------- transcribe

def cmd_transcribe(args) -> int:
    try:
        backend = make_backend(args.endpoint, model_name=args.model_name,
                               timeout_ms=args.timeout_ms, max_retries=args.max_retries)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    utts = read_manifest(args.inp)
    out = transcribe_batch(backend, utts, args.audio_root,
                           concurrency=args.concurrency, target=args.target)
    write_manifest(out, args.out)
    done = sum(1 for u in out if getattr(u, f"text_{args.target}") not in (None, ""))
    _progress(f"transcribe[{args.target}]: {done}/{len(out)} transcript(s) -> {args.out}")
    return 0


# ------------------------------------------------------------------- rover

def _g2p_tables(args) -> g2p.G2pTables:
    return g2p.G2pTables.load(args.zh_table, args.en_dict)


def _add_table_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--zh-table", default=g2p.ZH_TABLE_PATH)
    p.add_argument("--en-dict", default=g2p.EN_DICT_PATH)


def cmd_rover(args) -> int:
    cfg = rover.RoverConfig(wer_max=args.wer_max, per_max=args.per_max,
                            reference_side=args.reference_side, drop_if_any=args.any)
    utts = read_manifest(args.inp)
    out, report = rover.filter_manifest(utts, cfg, _g2p_tables(args))
    write_manifest(out, args.out)
    text = rover.render_report(report)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- frontend

def cmd_tokenize(args) -> int:
    bpe = frontend.BpeModel.load(args.bpe_vocab, args.bpe_merges)
    chars = frontend.CharVocab.from_characters(g2p.G2pTables.load(args.zh_table, args.en_dict).zh_chars())
    texts: list[str]
    if args.text is not None:
        texts = [args.text]
    elif args.manifest is not None:
        field = f"text_{args.field}"
        texts = [getattr(u, field) or "" for u in read_manifest(args.manifest)]
    else:
        raise ConfigError("tokenize needs --text or --manifest")
    for text in texts:
        seq = frontend.tokenize_text(text, bpe, chars)
        for t in seq.tokens:
            print(f"{t.id}\t{t.surface}\t{t.kind}")
    return 0


def cmd_g2p(args) -> int:
    phones = g2p.to_phonemes(frontend.strip_punctuation(args.text), args.lang, _g2p_tables(args))
    print(" ".join(phones.phones))
    return 0


# ------------------------------------------------------------------- score

def _read_lines(path) -> list[str]:
    with open(path, "r", encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def _score_counts(ref_lines, hyp_lines, args, tables) -> metrics.ErrorCounts:
    if len(ref_lines) != len(hyp_lines):
        raise ValueError(f"ref has {len(ref_lines)} lines but hyp has {len(hyp_lines)}")
    pooled = metrics.ErrorCounts(0, 0, 0, 0)
    for ref_text, hyp_text in zip(ref_lines, hyp_lines):
        ref_text = frontend.strip_punctuation(ref_text)
        hyp_text = frontend.strip_punctuation(hyp_text)
        if args.metric == "wer":
            counts, _ = metrics.wer(ref_text, hyp_text, args.lang)
        else:
            counts, _ = metrics.per(ref_text, hyp_text, tables, args.lang)
        pooled = pooled + counts
    return pooled


def cmd_score(args) -> int:
    if args.metric == "sim":
        if not args.hyp:
            raise ConfigError("score --metric sim needs --hyp")
        ref_vecs = metrics.read_embeddings(args.ref)
        hyp_vecs = metrics.read_embeddings(args.hyp)
        if len(ref_vecs) != len(hyp_vecs):
            raise ValueError(f"ref has {len(ref_vecs)} vectors but hyp has {len(hyp_vecs)}")
        print(f"sim\t{metrics.sim_average(list(zip(ref_vecs, hyp_vecs))):.6f}")
        return 0
    tables = _g2p_tables(args)
    ref_lines = _read_lines(args.ref)
    if args.per_seed:
        hyp_paths = sorted(globmod.glob(args.per_seed))
        if not hyp_paths:
            raise ConfigError(f"--per-seed {args.per_seed!r} matched no files")
        results = []
        for seed_idx, path in enumerate(hyp_paths):
            counts = _score_counts(ref_lines, _read_lines(path), args, tables)
            results.append(metrics.SeedResult(seed_idx, counts))
            print(f"seed\t{Path(path).name}\t{counts.rate():.6f}")
        rate = metrics.aggregate_seeds(results)
        pooled = results[0].counts
        for r in results[1:]:
            pooled = pooled + r.counts
        print(f"{args.metric}\t{100.0 * rate:.3f}%\tsub={pooled.subs}\tdel={pooled.dels}"
              f"\tins={pooled.ins}\tref_len={pooled.ref_len}")
    else:
        if not args.hyp:
            raise ConfigError("score needs --hyp or --per-seed")
        counts = _score_counts(ref_lines, _read_lines(args.hyp), args, tables)
        print(f"{args.metric}\t{100.0 * counts.rate():.3f}%\tsub={counts.subs}\tdel={counts.dels}"
              f"\tins={counts.ins}\tref_len={counts.ref_len}")
    return 0


# -------------------------------------------------------------------- mask

def cmd_mask(args) -> int:
    if args.chunk == "dynamic":
        schedule = masks.MaskSchedule.for_token_rate(args.rate)
        layout, history = masks.sample_layout(args.n, schedule, random.Random(args.seed))
        chunk = layout.chunk_sizes[0]
    else:
        try:
            chunk = int(args.chunk)
        except ValueError:
            raise ConfigError(f"--chunk must be an integer or 'dynamic', got {args.chunk!r}") from None
        layout = masks.ChunkLayout.tiled(args.n, chunk)
        history = args.history
    mask = masks.training_mask(layout, history)
    masks.write_mask(mask, args.out, chunk, history)
    _progress(f"mask: {mask.shape[0]}x{mask.shape[1]} (chunk={chunk} history={history}) -> {args.out}")
    return 0


# ----------------------------------------------------------- stream / pack

def cmd_stream_plan(args) -> int:
    cfg = streaming.parse_config(args.config, token_rate=args.rate)
    plan = streaming.plan_chunks(args.total, cfg)
    fade = streaming.overlap_frames(cfg, args.frames_per_token)
    print("# chunk\tgen_start\tgen_end\temit_start\temit_end\tcrossfade_frames")
    for k, span in enumerate(plan):
        frames = fade if span.overlap else 0
        print(f"{k}\t{span.gen_start}\t{span.gen_end}\t{span.emit_start}\t{span.emit_end}\t{frames}")
    return 0


def cmd_latency(args) -> int:
    profile = streaming.load_profile(args.profile)
    cfg = streaming.parse_config(args.config, token_rate=args.rate)
    ms = streaming.estimate_first_packet_latency(profile, args.input_tokens, cfg,
                                                 measured=args.measured)
    print(f"latency_ms={ms:.2f}")
    return 0


def cmd_pack(args) -> int:
    if args.task == "tts":
        sample = packing.pack_tts(args.text_len, args.speech_len)
    else:
        sample = packing.pack_asr(args.speech_len, args.text_len, args.continuous)
    for slot in sample.slots:
        print(f"{slot.role}\t{slot.length}")
    print(f"total\t{sample.total_length}")
    lo, hi = sample.loss_span
    print(f"loss\t{lo}\t{hi}")
    return 0


# ------------------------------------------------------------------ report

def cmd_report(args) -> int:
    report = rover.RetentionReport()
    for u in read_manifest(args.inp):
        report.add(u.domain, u.keep is True)
    text = rover.render_report(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------- run

@dataclass
class PipelineConfig:
    in_path: str
    workdir: str
    out_path: str
    report_path: str | None
    lang: str
    asr_endpoint: str
    copilot_endpoint: str
    asr_model: str
    copilot_model: str
    timeout_ms: int
    max_retries: int
    parallelism: int
    vad_cfg: vad.VadConfig
    rover_cfg: rover.RoverConfig
    zh_table: str
    en_dict: str


def run_pipeline(cfg: PipelineConfig) -> rover.RetentionReport:
    """segment -> transcribe(asr) -> transcribe(copilot) -> rover.

    Each stage persists its manifest under the workdir and skips records
    that already carry its outputs, so reruns are no-ops.
    """
    workdir = Path(cfg.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    audio_root = Path(cfg.in_path) if Path(cfg.in_path).is_dir() else Path(cfg.in_path).parent

    try:
        asr_backend = make_backend(cfg.asr_endpoint, model_name=cfg.asr_model,
                                   timeout_ms=cfg.timeout_ms, max_retries=cfg.max_retries)
    except ValueError as e:
        raise ConfigError(f"transcribe-asr stage: {e}") from None
    try:
        copilot_backend = make_backend(cfg.copilot_endpoint, model_name=cfg.copilot_model,
                                       timeout_ms=cfg.timeout_ms, max_retries=cfg.max_retries)
    except ValueError as e:
        raise ConfigError(f"transcribe-copilot stage: {e}") from None

    seg_path = workdir / "segments.jsonl"
    if seg_path.exists():
        _progress(f"run: segments already at {seg_path}, skipping VAD")
        utts = read_manifest(seg_path)
    else:
        utts = []
        for wav_path in _wav_paths(cfg.in_path):
            clip = read_wav(wav_path)
            for i, seg in enumerate(vad.segment_clip(clip, cfg.vad_cfg)):
                utts.append(Utterance(id=f"{clip.id}-{i:04d}", segment=seg, lang=cfg.lang))
        write_manifest(utts, seg_path)
        _progress(f"run: segmented {len(utts)} utterance(s)")

    utts = transcribe_batch(asr_backend, utts, audio_root,
                            concurrency=cfg.parallelism, target="asr")
    write_manifest(utts, workdir / "asr.jsonl")
    _progress("run: primary transcription done")

    utts = transcribe_batch(copilot_backend, utts, audio_root,
                            concurrency=cfg.parallelism, target="copilot")
    write_manifest(utts, workdir / "copilot.jsonl")
    _progress("run: copilot transcription done")

    tables = g2p.G2pTables.load(cfg.zh_table, cfg.en_dict)
    annotated, report = rover.filter_manifest(utts, cfg.rover_cfg, tables)
    write_manifest(annotated, cfg.out_path)
    if cfg.report_path:
        Path(cfg.report_path).write_text(rover.render_report(report), encoding="utf-8")
    _progress(f"run: kept {report.kept}/{report.total} -> {cfg.out_path}")
    return report


def cmd_run(args) -> int:
    file_values = load_config_file(args.config) if args.config else {}
    settings = Settings(args, file_values)
    cfg = PipelineConfig(
        in_path=settings.require("in", "segment"),
        workdir=settings.require("workdir", "run"),
        out_path=settings.require("out", "run"),
        report_path=settings.get("report"),
        lang=settings.get("lang", "zh"),
        asr_endpoint=settings.require("asr", "transcribe-asr"),
        copilot_endpoint=settings.require("copilot", "transcribe-copilot"),
        asr_model=settings.get("asr-model", "default"),
        copilot_model=settings.get("copilot-model", "default"),
        timeout_ms=settings.get("timeout-ms", 30000, cast=int),
        max_retries=settings.get("max-retries", 2, cast=int),
        parallelism=settings.get("parallelism", 1, cast=int),
        vad_cfg=vad.VadConfig(
            frame_ms=settings.get("frame-ms", 25.0, cast=float),
            hop_ms=settings.get("hop-ms", 10.0, cast=float),
            noise_percentile=settings.get("noise-percentile", 0.10, cast=float),
            margin_db=settings.get("margin-db", 6.0, cast=float),
            hangover_ms=settings.get("hangover-ms", 300.0, cast=float),
            merge_gap_ms=settings.get("merge-gap-ms", 200.0, cast=float),
            min_clip_s=settings.get("min-s", 2.0, cast=float),
            max_clip_s=settings.get("max-s", 30.0, cast=float),
        ),
        rover_cfg=rover.RoverConfig(
            wer_max=settings.get("wer-max", 0.10, cast=float),
            per_max=settings.get("per-max", 0.05, cast=float),
            reference_side=settings.get("reference-side", "asr"),
            drop_if_any=bool(settings.get("any", False, cast=lambda s: s.lower() in ("1", "true", "yes"))),
        ),
        zh_table=settings.get("zh-table", str(g2p.ZH_TABLE_PATH)),
        en_dict=settings.get("en-dict", str(g2p.EN_DICT_PATH)),
    )
    if cfg.parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    report = run_pipeline(cfg)
    sys.stdout.write(rover.render_report(report))
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="touchforge",
                                     description="speech corpus pipeline and streaming toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="VAD-segment WAV files into 2-30 s clips")
    p.add_argument("--in", dest="inp", required=True, help="wav file or directory")
    p.add_argument("--out", required=True, help="output manifest path")
    p.add_argument("--lang", default="zh", choices=("zh", "en", "mixed"))
    p.add_argument("--export-clips", default=None, help="directory for cut WAVs")
    _add_vad_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("transcribe", help="fill transcripts via an ASR backend")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--audio-root", required=True)
    p.add_argument("--endpoint", default=None, help="http(s) URL or stub:<file>; "
                                                    "default $TOUCHFORGE_ASR_URL")
    p.add_argument("--target", default="asr", choices=("asr", "copilot"))
    p.add_argument("--model-name", default="default")
    p.add_argument("--timeout-ms", type=int, default=30000)
    p.add_argument("--max-retries", type=int, default=2)
    p.add_argument("--concurrency", type=int, default=1)
    p.set_defaults(func=cmd_transcribe)

    p = sub.add_parser("rover", help="cross-validate transcripts and filter")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--wer-max", type=float, default=0.10)
    p.add_argument("--per-max", type=float, default=0.05)
    p.add_argument("--reference-side", default="asr", choices=("asr", "copilot"))
    group = p.add_mutually_exclusive_group()
    group.add_argument("--any", action="store_true", help="drop when either rate exceeds")
    group.add_argument("--all", action="store_true", help="drop only when both exceed (default)")
    p.add_argument("--report", default=None)
    _add_table_flags(p)
    p.set_defaults(func=cmd_rover)

    p = sub.add_parser("tokenize", help="char/BPE tokenize text")
    p.add_argument("--text", default=None)
    p.add_argument("--manifest", default=None)
    p.add_argument("--field", default="asr", choices=("asr", "copilot"))
    p.add_argument("--bpe-vocab", default=frontend.BPE_VOCAB_PATH)
    p.add_argument("--bpe-merges", default=frontend.BPE_MERGES_PATH)
    _add_table_flags(p)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("g2p", help="text to phonemes")
    p.add_argument("--text", required=True)
    p.add_argument("--lang", default="zh", choices=("zh", "en", "mixed"))
    _add_table_flags(p)
    p.set_defaults(func=cmd_g2p)

    p = sub.add_parser("score", help="WER/PER between line-aligned files, "
                                     "or cosine similarity between embedding files")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", default=None)
    p.add_argument("--metric", default="wer", choices=("wer", "per", "sim"))
    p.add_argument("--lang", default="zh", choices=("zh", "en", "mixed"))
    p.add_argument("--per-seed", default=None, help="glob of per-seed hyp files")
    _add_table_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("mask", help="emit a dynamic-chunk attention mask")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--chunk", default="dynamic", help="chunk size in tokens, or 'dynamic'")
    p.add_argument("--history", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate", type=int, default=25)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("stream-plan", help="plan streaming chunks with overlap")
    p.add_argument("--total", type=int, required=True)
    p.add_argument("--config", required=True, help='e.g. "(1 2 5)"')
    p.add_argument("--rate", type=int, default=25)
    p.add_argument("--frames-per-token", type=int, default=2)
    p.set_defaults(func=cmd_stream_plan)

    p = sub.add_parser("latency", help="first-packet latency estimate")
    p.add_argument("--profile", required=True)
    p.add_argument("--input-tokens", type=int, required=True)
    p.add_argument("--config", default="(1 2 5)")
    p.add_argument("--rate", type=int, default=25)
    p.add_argument("--measured", default=None, choices=("max", "avg", "p95"))
    p.set_defaults(func=cmd_latency)

    p = sub.add_parser("pack", help="training-sequence slot layout")
    p.add_argument("--task", required=True, choices=("tts", "asr"))
    p.add_argument("--text-len", type=int, required=True)
    p.add_argument("--speech-len", type=int, required=True)
    p.add_argument("--continuous", action="store_true")
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("report", help="retention report from a manifest")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="full pipeline: segment, transcribe x2, rover")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--in", dest="in_", default=None)
    p.add_argument("--workdir", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None)
    p.add_argument("--lang", default=None, choices=("zh", "en", "mixed"))
    p.add_argument("--asr", default=None, help="primary ASR endpoint (URL or stub:<file>)")
    p.add_argument("--copilot", default=None, help="copilot ASR endpoint")
    p.add_argument("--parallelism", type=int, default=None)
    p.add_argument("--wer-max", type=float, default=None)
    p.add_argument("--per-max", type=float, default=None)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"touchforge: config error: {e}", file=sys.stderr)
        return 2
    except (ManifestError, OSError, ValueError, RuntimeError) as e:
        print(f"touchforge: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
