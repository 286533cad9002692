"""Feature sampling, deformable read-out, depth reduction, query assembly."""

import numpy as np
import pytest

from statefuse import (
    CameraModel,
    DeformAttnParams,
    FeatureMap,
    PosEmbedParams,
    Proposal2D,
    ValidationError,
    bilinear_sample,
    build_query,
    default_depth_bins,
    deformable_attention,
    expected_depth,
    pos_embed,
)


def grid_map(h=2, w=2, c=1, frame=0, cam=0):
    data = np.arange(float(h * w * c)).reshape(h, w, c)
    return FeatureMap(data, camera_id=cam, frame_index=frame)


def make_proposal(center, dist, bins_n=None, category=0, cam=0, frame=0):
    return Proposal2D(
        center=np.asarray(center, dtype=float),
        box=np.array([0.1, 0.1]),
        category=category,
        score=1.0,
        depth_dist=np.asarray(dist, dtype=float),
        camera_id=cam,
        frame_index=frame,
    )


# --- bilinear sampling ---

def test_bilinear_integer_coordinates_exact():
    f = grid_map(3, 4, 2)
    for y in range(3):
        for x in range(4):
            assert np.array_equal(bilinear_sample(f, [x, y]), f.data[y, x])


def test_bilinear_center_of_2x2():
    f = grid_map(2, 2, 1)  # values 0, 1, 2, 3
    assert bilinear_sample(f, [0.5, 0.5])[0] == 1.5


def test_bilinear_quarter_point():
    f = grid_map(2, 2, 1)
    # (1 - .25)(1 - .75)*0 + .25(1 - .75)*1 + (1 - .25)(.75)*2 + .25*.75*3
    assert bilinear_sample(f, [0.25, 0.75])[0] == 1.75


def test_bilinear_clamps_outside():
    f = grid_map(2, 2, 1)
    assert bilinear_sample(f, [-5.0, -5.0])[0] == f.data[0, 0, 0]
    assert bilinear_sample(f, [9.0, 9.0])[0] == f.data[1, 1, 0]


def test_bilinear_batch_shape():
    f = grid_map(4, 4, 3)
    pts = np.array([[0.5, 0.5], [1.0, 2.0], [3.0, 3.0]])
    out = bilinear_sample(f, pts)
    assert out.shape == (3, 3)


# --- deformable read-out ---

def test_deform_single_sample_collapse():
    """One head, one key, identity projections: just a bilinear sample."""
    f = grid_map(4, 4, 1)
    params = DeformAttnParams(
        value_proj=np.ones((1, 1, 1)),
        out_proj=np.ones((1, 1, 1)),
        offsets=np.zeros((1, 1, 2)),
        weights=np.ones((1, 1)),
    )
    c2d = np.array([0.4, 0.7])
    out = deformable_attention(np.zeros(1), c2d, f, params)
    want = bilinear_sample(f, [c2d[0] * 3.0, c2d[1] * 3.0])
    assert np.array_equal(out, want)


def test_deform_constant_field():
    data = np.full((5, 6, 3), 2.0)
    f = FeatureMap(data, camera_id=0, frame_index=0)
    params = DeformAttnParams.seeded(3, seed=2, n_heads=2, n_keys=4)
    out = deformable_attention(np.zeros(3), [0.5, 0.5], f, params)
    # every sample is the same vector, so the weights collapse to 1
    want = np.zeros(3)
    for m in range(2):
        want += (np.full(3, 2.0) @ params.value_proj[m]) @ params.out_proj[m]
    assert np.max(np.abs(out - want)) <= 1e-12


def test_deform_matches_naive_loops():
    rng = np.random.default_rng(103)
    f = FeatureMap(rng.uniform(-1, 1, size=(8, 8, 4)), camera_id=0, frame_index=0)
    params = DeformAttnParams.seeded(4, seed=9, n_heads=2, n_keys=3)
    c2d = np.array([0.37, 0.81])
    base = np.array([c2d[0] * 7.0, c2d[1] * 7.0])
    want = np.zeros(4)
    for m in range(params.n_heads):
        head = np.zeros(params.value_proj.shape[2])
        for n in range(params.n_keys):
            sample = bilinear_sample(f, base + params.offsets[m, n])
            head += params.weights[m, n] * (sample @ params.value_proj[m])
        want += head @ params.out_proj[m]
    got = deformable_attention(np.zeros(4), c2d, f, params)
    assert np.max(np.abs(got - want)) <= 1e-12


def test_deform_channel_mismatch():
    f = grid_map(4, 4, 2)
    params = DeformAttnParams.seeded(3, seed=0)
    with pytest.raises(ValidationError):
        deformable_attention(np.zeros(3), [0.5, 0.5], f, params)


def test_deform_params_validate_weights():
    with pytest.raises(ValidationError):
        DeformAttnParams(
            value_proj=np.ones((1, 1, 1)),
            out_proj=np.ones((1, 1, 1)),
            offsets=np.zeros((1, 2, 2)),
            weights=np.array([[0.4, 0.4]]),  # does not sum to 1
        )


# --- depth reduction ---

def test_expected_depth_one_hot():
    bins = default_depth_bins()
    dist = np.zeros(60)
    dist[11] = 1.0
    assert expected_depth(dist, bins) == bins[11]


def test_expected_depth_midpoint():
    assert expected_depth([0.5, 0.5], [5.0, 10.0]) == 7.5


def test_expected_depth_weighted():
    assert abs(expected_depth([0.2, 0.3, 0.5], [2.0, 4.0, 8.0]) - 5.6) < 1e-12


def test_expected_depth_validates():
    with pytest.raises(ValidationError):
        expected_depth([0.7, 0.7], [1.0, 2.0])
    with pytest.raises(ValidationError):
        expected_depth([1.0], [1.0, 2.0])


def test_default_depth_bins_layout():
    bins = default_depth_bins()
    assert bins.shape == (60,)
    assert bins[0] == 1.5
    assert bins[-1] == 60.5
    assert np.array_equal(np.diff(bins), np.ones(59))


# --- query assembly ---

def one_hot(i, n=60):
    d = np.zeros(n)
    d[i] = 1.0
    return d


def test_build_query_zero_sem_proj():
    rng = np.random.default_rng(107)
    f = FeatureMap(rng.uniform(-1, 1, size=(6, 6, 4)), camera_id=0, frame_index=0)
    cam = CameraModel(np.eye(3), np.eye(4), camera_id=0)
    attn = DeformAttnParams.seeded(4, seed=1)
    pe = PosEmbedParams.seeded(12, seed=2)
    prop = make_proposal([0.5, 0.25], one_hot(9))
    q = build_query(prop, f, cam, attn, pe, np.zeros((4, 12)))
    assert np.array_equal(q.q_sem, np.zeros(12))
    assert np.array_equal(q.q_3d, q.q_pos)
    assert np.array_equal(q.q_pos, pos_embed(q.center3d, pe))


def test_build_query_center_from_depth():
    """Identity camera, exact one-hot depth 10: the lifted center is known."""
    rng = np.random.default_rng(109)
    f = FeatureMap(rng.uniform(-1, 1, size=(6, 6, 4)), camera_id=0, frame_index=0)
    cam = CameraModel(np.eye(3), np.eye(4), camera_id=0)
    attn = DeformAttnParams.seeded(4, seed=1)
    pe = PosEmbedParams.seeded(12, seed=2)
    bins = np.array([5.0, 10.0, 20.0])
    prop = make_proposal([0.5, 0.25], [0.0, 1.0, 0.0])
    q = build_query(prop, f, cam, attn, pe, np.zeros((4, 12)), bins=bins)
    assert np.max(np.abs(q.center3d - [5.0, 2.5, 10.0])) <= 1e-12
    assert q.category == prop.category
    assert q.valid


def test_build_query_deterministic():
    rng = np.random.default_rng(113)
    f = FeatureMap(rng.uniform(-1, 1, size=(6, 6, 4)), camera_id=0, frame_index=0)
    cam = CameraModel(np.eye(3), np.eye(4), camera_id=0)
    attn = DeformAttnParams.seeded(4, seed=1)
    pe = PosEmbedParams.seeded(12, seed=2)
    sem = np.random.default_rng(5).uniform(-0.1, 0.1, size=(4, 12))
    prop = make_proposal([0.3, 0.6], one_hot(20))
    a = build_query(prop, f, cam, attn, pe, sem)
    b = build_query(prop, f, cam, attn, pe, sem)
    assert np.array_equal(a.q_3d, b.q_3d)
    assert np.array_equal(a.center3d, b.center3d)
    assert np.max(np.abs(a.q_3d - (a.q_pos + a.q_sem))) <= 1e-12


def test_build_query_argmax_mode():
    rng = np.random.default_rng(127)
    f = FeatureMap(rng.uniform(-1, 1, size=(6, 6, 4)), camera_id=0, frame_index=0)
    cam = CameraModel(np.eye(3), np.eye(4), camera_id=0)
    attn = DeformAttnParams.seeded(4, seed=1)
    pe = PosEmbedParams.seeded(12, seed=2)
    bins = np.array([5.0, 10.0, 20.0])
    prop = make_proposal([0.5, 0.25], [0.2, 0.7, 0.1])
    q = build_query(
        prop, f, cam, attn, pe, np.zeros((4, 12)), bins=bins, depth_mode="argmax"
    )
    # argmax picks depth 10 even though the expectation is 9.5
    assert np.max(np.abs(q.center3d - [5.0, 2.5, 10.0])) <= 1e-12


def test_build_query_id_mismatch():
    rng = np.random.default_rng(131)
    f = FeatureMap(rng.uniform(-1, 1, size=(6, 6, 4)), camera_id=1, frame_index=0)
    cam = CameraModel(np.eye(3), np.eye(4), camera_id=0)
    attn = DeformAttnParams.seeded(4, seed=1)
    pe = PosEmbedParams.seeded(12, seed=2)
    prop = make_proposal([0.5, 0.25], one_hot(9), cam=0)
    with pytest.raises(ValidationError):
        build_query(prop, f, cam, attn, pe, np.zeros((4, 12)))


def test_proposal_validates_center_and_dist():
    with pytest.raises(ValidationError):
        make_proposal([1.2, 0.5], one_hot(0))
    with pytest.raises(ValidationError):
        make_proposal([0.5, 0.5], np.full(60, 0.5))


def test_feature_map_rejects_non_finite():
    data = np.zeros((2, 2, 1))
    data[0, 0, 0] = np.nan
    with pytest.raises(ValidationError):
        FeatureMap(data, camera_id=0, frame_index=0)
