import random

import numpy as np
import pytest

from touchforge.masks import (ChunkLayout, MaskSchedule, inference_mask, read_mask,
                              sample_layout, training_mask, visible_spans, write_mask)

SCHED = MaskSchedule()


# ----------------------------------------------------------------- layouts

def test_layout_below_minimum_is_single_chunk():
    layout, history = sample_layout(5, SCHED, random.Random(0))
    assert layout.chunk_sizes == (5,)
    assert history == 0


def test_full_sentence_branch():
    sched = MaskSchedule(full_sentence_prob=1.0)
    layout, _ = sample_layout(50, sched, random.Random(123))
    assert layout.chunk_sizes == (50,)


def test_tiling_rule():
    assert ChunkLayout.tiled(50, 13).chunk_sizes == (13, 13, 13, 11)
    assert ChunkLayout.tiled(50, 50).chunk_sizes == (50,)
    assert ChunkLayout.tiled(50, 60).chunk_sizes == (50,)


def test_sampled_layout_is_tiled_and_deterministic():
    sched = MaskSchedule(full_sentence_prob=0.0)
    for seed in range(30):
        layout, history = sample_layout(64, sched, random.Random(seed))
        again, history2 = sample_layout(64, sched, random.Random(seed))
        assert layout == again and history == history2
        c = layout.chunk_sizes[0]
        assert SCHED.min_chunk_tokens <= c <= 64
        assert layout == ChunkLayout.tiled(64, c)
        assert history in SCHED.history_choices


def test_layout_validation():
    with pytest.raises(ValueError):
        ChunkLayout(5, (2, 2))
    with pytest.raises(ValueError):
        ChunkLayout(4, (2, 0, 2))
    with pytest.raises(ValueError):
        sample_layout(0, SCHED, random.Random(0))


def test_schedule_for_token_rate():
    assert MaskSchedule.for_token_rate(25).min_chunk_tokens == 13  # ceil(0.5 * 25)
    assert MaskSchedule.for_token_rate(50).min_chunk_tokens == 25


# ------------------------------------------------------------------- masks

def test_single_chunk_mask_all_true():
    mask = training_mask(ChunkLayout(4, (4,)), history=0)
    assert mask.shape == (4, 4)
    assert mask.all()


def test_two_chunks_no_history_block_diagonal():
    mask = training_mask(ChunkLayout(4, (2, 2)), history=0)
    expected = np.array([
        [1, 1, 0, 0],
        [1, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 1, 1],
    ], dtype=bool)
    assert (mask == expected).all()


def test_two_chunks_one_history():
    mask = training_mask(ChunkLayout(4, (2, 2)), history=1)
    expected = np.array([
        [1, 1, 0, 0],
        [1, 1, 0, 0],
        [1, 1, 1, 1],
        [1, 1, 1, 1],
    ], dtype=bool)
    assert (mask == expected).all()


def test_inference_first_chunk_all_true():
    layout = ChunkLayout(10, (3, 3, 4))
    mask = inference_mask(layout, current_chunk=0, history=0)
    assert mask.shape == (3, 3)
    assert mask.all()


def test_inference_equals_training_submatrix_example():
    layout = ChunkLayout(4, (2, 2))
    train = training_mask(layout, history=1)
    infer = inference_mask(layout, current_chunk=1, history=1)
    assert (infer == train[:4, :4]).all()


def test_history_saturation():
    layout = ChunkLayout(9, (3, 3, 3))
    mask = inference_mask(layout, current_chunk=2, history=10)
    assert mask[8].all()  # current rows see the whole prefix


def test_inference_index_out_of_range():
    with pytest.raises(ValueError):
        inference_mask(ChunkLayout(4, (2, 2)), current_chunk=2, history=0)


# -------------------------------------------------------------- properties

def test_training_inference_consistency_random():
    rng = random.Random(2024)
    sched = MaskSchedule(min_chunk_tokens=1, full_sentence_prob=0.3, history_choices=(0, 1, 2))
    for _ in range(300):
        n = rng.randint(1, 64)
        layout, history = sample_layout(n, sched, rng)
        train = training_mask(layout, history)
        for chunk in range(layout.num_chunks):
            m = layout.end_of(chunk)
            infer = inference_mask(layout, chunk, history)
            assert (infer == train[:m, :m]).all()


def test_no_future_leakage_and_symmetry_random():
    rng = random.Random(7)
    for _ in range(100):
        n = rng.randint(1, 48)
        layout, history = sample_layout(n, MaskSchedule(min_chunk_tokens=1), rng)
        mask = training_mask(layout, history)
        ids = layout.chunk_ids()
        future = ids[None, :] > ids[:, None]
        assert not mask[future].any()
        same = ids[None, :] == ids[:, None]
        assert mask[same].all()


def test_history_monotonicity():
    layout = ChunkLayout(20, (5, 5, 5, 5))
    prev = training_mask(layout, 0)
    for h in (1, 2, 3):
        cur = training_mask(layout, h)
        assert (cur | prev == cur).all()  # only false -> true flips
        prev = cur


def test_degenerate_full_chunk():
    assert training_mask(ChunkLayout.tiled(16, 16), 0).all()
    assert training_mask(ChunkLayout.tiled(16, 20), 0).all()


def test_visible_spans_match_mask():
    layout = ChunkLayout(10, (3, 3, 4))
    for history in (0, 1, 2):
        mask = training_mask(layout, history)
        for i, (lo, hi) in enumerate(visible_spans(layout, history)):
            row = np.zeros(10, dtype=bool)
            row[lo:hi] = True
            assert (mask[i] == row).all()


def test_mask_file_round_trip(tmp_path):
    layout = ChunkLayout.tiled(10, 4)
    mask = training_mask(layout, 1)
    path = tmp_path / "m.mask"
    write_mask(mask, path, chunk=4, history=1)
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == "10 4 1"
    back, chunk, history = read_mask(path)
    assert (back == mask).all() and chunk == 4 and history == 1
