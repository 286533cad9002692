"""Slot padding, motion cost, elimination mask, mask application."""

import numpy as np
import pytest

from statefuse import (
    INVALID_COST,
    MotionElimConfig,
    MotionMask,
    ValidationError,
    apply_motion_mask,
    motion_cost,
    motion_mask,
    pad_frames,
    padding_query,
)
from statefuse import PosEmbedParams, pos_embed
from statefuse.queries import Query3D


def query_at(center, category=0, frame=0, d=6, seed=0):
    pe = PosEmbedParams.seeded(d, seed=seed)
    q_pos = pos_embed(np.asarray(center, dtype=float), pe)
    return Query3D(
        q_sem=np.zeros(d),
        q_pos=q_pos,
        q_3d=q_pos,
        center3d=np.asarray(center, dtype=float),
        category=category,
        source_frame=frame,
        valid=True,
    )


# --- padding ---

def test_pad_counts():
    frames = [
        [query_at([float(i), 0, 0], frame=0) for i in range(3)],
        [query_at([float(i), 1, 0], frame=1) for i in range(5)],
        [query_at([float(i), 2, 0], frame=2) for i in range(2)],
    ]
    seq = pad_frames(frames)
    assert seq.k_queries == 5
    assert seq.n_frames == 3
    assert seq.current_index == 2
    invalid_counts = [int((~seq.validity(i)).sum()) for i in range(3)]
    assert invalid_counts == [2, 0, 3]


def test_pad_equal_counts_untouched():
    frames = [[query_at([1.0, 0, 0])], [query_at([2.0, 0, 0], frame=1)]]
    seq = pad_frames(frames)
    assert seq.k_queries == 1
    assert all(seq.validity(i).all() for i in range(2))


def test_pad_single_frame():
    seq = pad_frames([[query_at([float(i), 0, 0]) for i in range(7)]])
    assert seq.k_queries == 7
    assert seq.n_frames == 1
    assert seq.current_index == 0


def test_padding_query_shape():
    q = padding_query(8, 3)
    assert not q.valid
    assert q.category == -1
    assert q.source_frame == 3
    assert np.array_equal(q.q_3d, np.zeros(8))
    assert np.array_equal(q.center3d, np.zeros(3))


def test_pad_rejects_empty():
    with pytest.raises(ValidationError):
        pad_frames([])
    with pytest.raises(ValidationError):
        pad_frames([[], []])


# --- cost matrix ---

def test_cost_identical_centers_zero_diagonal():
    centers = np.array([[0.0, 0, 0], [3.0, 4.0, 0], [1.0, 1.0, 1.0]])
    validity = np.ones((3, 2), dtype=bool)
    cost = motion_cost(centers, centers, validity)
    assert np.array_equal(np.diag(cost.cost), np.zeros(3))


def test_cost_345_triangle():
    cur = np.array([[0.0, 0.0, 0.0]])
    past = np.array([[3.0, 4.0, 0.0]])
    cost = motion_cost(cur, past, np.ones((1, 2), dtype=bool))
    assert cost.cost[0, 0] == 5.0


def test_cost_invalid_column_is_inf():
    cur = np.zeros((2, 3))
    past = np.zeros((2, 3))
    validity = np.array([[True, True], [True, False]])
    cost = motion_cost(cur, past, validity)
    assert np.all(cost.cost[:, 1] == INVALID_COST)
    assert np.all(np.isfinite(cost.cost[:, 0]))


def test_cost_invalid_row_is_inf():
    validity = np.array([[False, True], [True, True]])
    cost = motion_cost(np.zeros((2, 3)), np.zeros((2, 3)), validity)
    assert np.all(cost.cost[0, :] == INVALID_COST)


# --- elimination mask ---

def test_mask_example_two_slots():
    # slot 0 sits 0.2 m from a same-category current slot, slot 1 is far
    cur = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    past = np.array([[0.2, 0.0, 0.0], [4.0, 4.0, 0.0]])
    assert abs(np.linalg.norm(past[1]) - 5.656854249492381) < 1e-12
    cost = motion_cost(cur, past, np.ones((2, 2), dtype=bool))
    mask = motion_mask(cost, [0, 1], [0, 1], MotionElimConfig(alpha=0.5))
    assert np.array_equal(mask, [0, 1])


def test_mask_alpha_zero_keeps_everything():
    rng = np.random.default_rng(137)
    cur = rng.uniform(-5, 5, size=(4, 3))
    past = cur + rng.uniform(0.01, 1.0, size=(4, 3))
    cost = motion_cost(cur, past, np.ones((4, 2), dtype=bool))
    mask = motion_mask(cost, np.zeros(4, int), np.zeros(4, int), MotionElimConfig(alpha=0.0))
    assert np.array_equal(mask, np.ones(4, dtype=np.int8))


def test_mask_category_veto():
    cur = np.array([[0.0, 0.0, 0.0]])
    past = np.array([[0.1, 0.0, 0.0]])
    cost = motion_cost(cur, past, np.ones((1, 2), dtype=bool))
    vetoed = motion_mask(cost, [0], [1], MotionElimConfig(alpha=0.5))
    assert np.array_equal(vetoed, [1])
    ignored = motion_mask(
        cost, [0], [1], MotionElimConfig(alpha=0.5, require_same_category=False)
    )
    assert np.array_equal(ignored, [0])


def test_mask_invalid_past_slot_always_zero():
    cur = np.zeros((2, 3))
    past = np.full((2, 3), 100.0)
    validity = np.array([[True, True], [True, False]])
    cost = motion_cost(cur, past, validity)
    mask = motion_mask(cost, [0, 0], [0, 0], MotionElimConfig(alpha=0.5))
    assert mask[1] == 0


def test_mask_matches_brute_force():
    rng = np.random.default_rng(139)
    for _ in range(100):
        k = int(rng.integers(1, 8))
        cur = rng.uniform(-6, 6, size=(k, 3))
        past = rng.uniform(-6, 6, size=(k, 3))
        validity = rng.uniform(size=(k, 2)) < 0.8
        cats_cur = rng.integers(0, 3, size=k)
        cats_past = rng.integers(0, 3, size=k)
        alpha = float(rng.uniform(0.0, 8.0))
        same_cat = bool(rng.integers(0, 2))
        cfg = MotionElimConfig(alpha=alpha, require_same_category=same_cat)
        cost = motion_cost(cur, past, validity)
        got = motion_mask(cost, cats_cur, cats_past, cfg)
        want = np.ones(k, dtype=np.int8)
        for n in range(k):
            if not validity[n, 1]:
                want[n] = 0
                continue
            for m in range(k):
                if not validity[m, 0]:
                    continue
                if np.linalg.norm(cur[m] - past[n]) > alpha:
                    continue
                if same_cat and cats_cur[m] != cats_past[n]:
                    continue
                want[n] = 0
        assert np.array_equal(got, want)


def test_mask_monotone_in_alpha():
    rng = np.random.default_rng(149)
    for _ in range(25):
        k = 5
        cur = rng.uniform(-4, 4, size=(k, 3))
        past = rng.uniform(-4, 4, size=(k, 3))
        cost = motion_cost(cur, past, np.ones((k, 2), dtype=bool))
        cats = np.zeros(k, dtype=int)
        prev = None
        for alpha in sorted(rng.uniform(0.0, 10.0, size=4)):
            mask = motion_mask(cost, cats, cats, MotionElimConfig(alpha=alpha))
            if prev is not None:
                assert np.all(mask <= prev)
            prev = mask


# --- mask application ---

def test_apply_all_ones_identity():
    frames = [
        [query_at([1.0, 0, 0], frame=0), query_at([4.0, 0, 0], frame=0)],
        [query_at([1.5, 0, 0], frame=1), query_at([4.5, 0, 0], frame=1)],
    ]
    seq = pad_frames(frames)
    mask = MotionMask((np.ones(2, dtype=np.int8), np.ones(2, dtype=np.int8)))
    out = apply_motion_mask(seq, mask)
    for i in range(2):
        assert np.array_equal(out.q3d(i), seq.q3d(i))
        assert all(a is b for a, b in zip(out.frames[i], seq.frames[i]))


def test_apply_zeros_blanks_past_only():
    frames = [
        [query_at([1.0, 0, 0], frame=0)],
        [query_at([2.0, 0, 0], frame=1)],
    ]
    seq = pad_frames(frames)
    mask = MotionMask((np.zeros(1, dtype=np.int8), np.zeros(1, dtype=np.int8)))
    out = apply_motion_mask(seq, mask)
    assert np.array_equal(out.q3d(0), np.zeros((1, 6)))
    assert not out.validity(0)[0]
    # the current frame ignores its mask row
    assert np.array_equal(out.q3d(1), seq.q3d(1))
    assert out.validity(1)[0]


def test_apply_survivor_count_matches_mask():
    rng = np.random.default_rng(151)
    frames = [
        [query_at([float(j), float(i), 0], frame=i) for j in range(4)]
        for i in range(3)
    ]
    seq = pad_frames(frames)
    rows = tuple(rng.integers(0, 2, size=4).astype(np.int8) for _ in range(3))
    mask = MotionMask(rows)
    out = apply_motion_mask(seq, mask)
    for i in range(2):
        assert int(out.validity(i).sum()) == int(rows[i].sum())
    assert int(out.validity(2).sum()) == 4


def test_apply_shape_mismatch():
    seq = pad_frames([[query_at([0.0, 0, 0])]])
    mask = MotionMask((np.ones(2, dtype=np.int8),))
    with pytest.raises(ValidationError):
        apply_motion_mask(seq, mask)


def test_mask_type_validates_entries():
    with pytest.raises(ValidationError):
        MotionMask((np.array([0, 2], dtype=np.int8),))
