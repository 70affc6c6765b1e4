import random

import pytest

from touchforge.manifest import Segment, Utterance
from touchforge.rover import (RetentionReport, RoverConfig, cross_validate, filter_manifest,
                              render_report)


def utt(i, asr=None, copilot=None, lang="zh", domain=None):
    extra = {"domain": domain} if domain else {}
    return Utterance(id=f"u{i:04d}", segment=Segment("src", 0.0, 3.0), lang=lang,
                     text_asr=asr, text_copilot=copilot, extra=extra)


CFG = RoverConfig()


def test_identical_transcripts_keep(tables):
    out = cross_validate(utt(0, "天黑了", "天黑了"), CFG, tables)
    assert out.keep is True
    assert out.cross_wer == 0.0 and out.cross_per == 0.0


def test_both_rates_over_thresholds_drop(tables):
    # 10 en words, 2 substituted with one-phone changes: WER 0.20, PER 2/25 = 0.08
    ref = "the cat sat on the mat the dog ran out"
    hyp = "the cap sat on the map the dog ran out"
    out = cross_validate(utt(0, ref, hyp, lang="en"), CFG, tables)
    assert out.cross_wer == pytest.approx(0.20)
    assert out.cross_per == pytest.approx(0.08)
    assert out.keep is False


def test_homophone_disagreement_keeps(tables):
    # 买/卖 are toneless homophones: WER 1/3, PER 0 -> conjunction keeps it
    out = cross_validate(utt(0, "买豆腐", "卖豆腐"), CFG, tables)
    assert out.cross_wer == pytest.approx(1 / 3)
    assert out.cross_per == 0.0
    assert out.keep is True


def test_boundary_equality_keeps(tables):
    # WER exactly 0.10 (1 of 10 chars), PER exactly 0.05 (via construction)
    ref = "买" * 20
    hyp = "好" + "买" * 18 + "卖"  # one pinyin change + one homophone = WER 0.10, PER 0.05
    out = cross_validate(utt(0, ref, hyp), CFG, tables)
    assert out.cross_wer == pytest.approx(0.10)
    assert out.cross_per == pytest.approx(0.05)
    assert out.keep is True


def test_disjunctive_flag_drops_on_either(tables):
    cfg = RoverConfig(drop_if_any=True)
    out = cross_validate(utt(0, "买豆腐", "卖豆腐"), cfg, tables)
    assert out.keep is False  # WER alone exceeds under --any


def test_empty_reference_drops_with_reason(tables):
    out = cross_validate(utt(0, "", "天黑了"), CFG, tables)
    assert out.keep is False
    assert out.reason == "empty-reference"
    assert out.cross_wer == 1.0 and out.cross_per == 1.0


def test_reference_side_copilot(tables):
    cfg = RoverConfig(reference_side="copilot")
    out = cross_validate(utt(0, "天黑了", ""), cfg, tables)
    assert out.reason == "empty-reference"


def test_missing_transcript_raises(tables):
    with pytest.raises(ValueError):
        cross_validate(utt(0, "天黑了", None), CFG, tables)


def test_rates_clamp_to_one(tables):
    # hypothesis much longer than reference: raw WER > 1
    out = cross_validate(utt(0, "天", "好好好好好好"), CFG, tables)
    assert out.cross_wer == 1.0
    assert out.keep is False


def test_transcripts_with_punctuation_normalized(tables):
    out = cross_validate(utt(0, "天黑了，路灯亮起。", "天黑了路灯亮起"), CFG, tables)
    assert out.keep is True
    assert out.cross_wer == 0.0


# ----------------------------------------------------------------- batches

def test_filter_all_identical_retention_one(tables):
    utts = [utt(i, "天黑了", "天黑了") for i in range(10)]
    out, report = filter_manifest(utts, CFG, tables)
    assert report.total == 10 and report.kept == 10
    assert report.retention == 1.0
    assert [u.id for u in out] == [u.id for u in utts]


def test_filter_retention_51_6_percent(tables):
    utts = [utt(i, "天黑了", "天黑了" if i < 650 else "好好好好") for i in range(1260)]
    out, report = filter_manifest(utts, CFG, tables)
    assert report.total == 1260 and report.kept == 650
    assert render_report(report).splitlines()[2] == "retention\t51.6%"


def test_filter_empty_manifest(tables):
    out, report = filter_manifest([], CFG, tables)
    assert out == [] and report.total == 0
    assert report.retention is None
    assert "retention\tn/a" in render_report(report)


def test_filter_missing_transcript_is_reason_not_abort(tables):
    utts = [utt(0, "天黑了", "天黑了"), utt(1, "天黑了", None)]
    out, report = filter_manifest(utts, CFG, tables)
    assert out[1].keep is None
    assert out[1].reason == "missing-transcript"
    assert report.total == 2 and report.kept == 1


def test_filter_per_domain(tables):
    utts = [utt(0, "天黑了", "天黑了", domain="audiobook"),
            utt(1, "天黑了", "好好好好", domain="live"),
            utt(2, "天黑了", "天黑了", domain="live")]
    _, report = filter_manifest(utts, CFG, tables)
    assert report.per_domain == {"audiobook": [1, 1], "live": [2, 1]}
    text = render_report(report)
    assert "domain\taudiobook\t1\t1\t100.0%" in text
    assert "domain\tlive\t2\t1\t50.0%" in text


def test_monotonicity_of_thresholds(tables):
    rng = random.Random(31)
    chars = ["买", "卖", "好", "天", "黑"]
    utts = []
    for i in range(60):
        ref = "".join(rng.choice(chars) for _ in range(10))
        hyp = "".join(ch if rng.random() < 0.8 else rng.choice(chars) for ch in ref)
        utts.append(utt(i, ref, hyp))
    tight = RoverConfig(wer_max=0.05, per_max=0.02)
    loose = RoverConfig(wer_max=0.50, per_max=0.40)
    _, tight_report = filter_manifest(utts, tight, tables)
    _, loose_report = filter_manifest(utts, loose, tables)
    assert loose_report.kept >= tight_report.kept


def test_reference_side_invariance_of_decision(tables):
    rng = random.Random(37)
    chars = ["买", "卖", "好", "天", "黑", "了"]
    for i in range(100):
        a = "".join(rng.choice(chars) for _ in range(rng.randint(1, 12)))
        b = "".join(rng.choice(chars) for _ in range(rng.randint(1, 12)))
        u = utt(i, a, b)
        fwd = cross_validate(u, RoverConfig(reference_side="asr"), tables)
        rev = cross_validate(u, RoverConfig(reference_side="copilot"), tables)
        # total error counts match; rates differ only by the ref_len denominator,
        # but the keep decision is symmetric for same-length transcripts
        if len(a) == len(b):
            assert fwd.keep == rev.keep


def test_config_validation():
    with pytest.raises(ValueError):
        RoverConfig(wer_max=0.0)
    with pytest.raises(ValueError):
        RoverConfig(reference_side="primary")


def test_report_rendering_deterministic():
    r = RetentionReport()
    r.add("b", True)
    r.add("a", False)
    assert render_report(r) == render_report(r)
