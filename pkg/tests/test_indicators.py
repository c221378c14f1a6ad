import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from drivermon.errors import DegenerateEye, DegenerateMouth, NonFinite, WrongLength
from drivermon.indicators import (LAYOUT, NUM_LANDMARKS, OUTPUT_SIZE, FaceIndicators,
                                  LandmarkSchema, RegionIds, RoiBox, compute_ear, compute_mar,
                                  decode_output_vector, denormalize_landmarks,
                                  encode_output_vector)


def _points(**assign):
    pts = np.zeros((NUM_LANDMARKS, 2))
    for idx, xy in assign.items():
        pts[int(idx[1:])] = xy
    return pts


def test_layout_covers_all_209_in_order():
    assert OUTPUT_SIZE == 209
    spans = [LAYOUT[k] for k in ("landmarks", "eye_viz", "eye_open", "mouth", "head", "action")]
    assert [s.stop - s.start for s in spans] == [196, 2, 2, 3, 3, 3]
    assert all(a.stop == b.start for a, b in zip(spans, spans[1:]))


def test_decode_equal_mouth_logits_gives_uniform():
    ind = decode_output_vector(np.zeros(209))
    assert np.allclose(ind.mouth, 1 / 3)
    assert np.allclose(ind.action, 1 / 3)
    assert np.array_equal(ind.eye_open, [0.5, 0.5])
    assert np.array_equal(ind.eye_viz, [0.5, 0.5])


def test_decode_wrong_length_and_nonfinite():
    with pytest.raises(WrongLength):
        decode_output_vector(np.zeros(208))
    raw = np.zeros(209)
    raw[200] = np.nan
    with pytest.raises(NonFinite):
        decode_output_vector(raw)
    raw[200] = np.inf
    with pytest.raises(NonFinite):
        decode_output_vector(raw)


def test_decode_clamps_and_flags():
    raw = np.zeros(209)
    raw[0] = 1.5
    raw[1] = -0.2
    raw[LAYOUT["head"].start] = 2.0
    ind = decode_output_vector(raw)
    assert ind.clamped
    assert ind.landmarks[0, 0] == 1.0 and ind.landmarks[0, 1] == 0.0
    assert ind.yaw == pytest.approx(math.pi / 2)
    assert not decode_output_vector(np.full(209, 0.3)).clamped


def test_decode_applied_passthrough():
    raw = np.full(209, 0.25)
    raw[LAYOUT["mouth"]] = (0.2, 0.3, 0.5)
    raw[LAYOUT["action"]] = (1.0, 0.0, 0.0)
    ind = decode_output_vector(raw, activations_applied=True)
    assert np.array_equal(ind.eye_open, [0.25, 0.25])
    assert np.allclose(ind.mouth, (0.2, 0.3, 0.5))
    assert ind.action_class == 0


def test_indicator_invariants_rejected():
    good = dict(landmarks=np.full((98, 2), 0.5), eye_viz=(1, 1), eye_open=(1, 1),
                mouth=(1, 0, 0), head=(0, 0, 0), action=(1, 0, 0))
    FaceIndicators(**good)
    for field, bad in (("landmarks", np.full((97, 2), 0.5)), ("eye_viz", (1.2, 0)),
                       ("mouth", (0.5, 0.6, 0)), ("head", (2.0, 0, 0)), ("action", (-0.1, 1.1, 0))):
        with pytest.raises(ValueError):
            FaceIndicators(**{**good, field: bad})


def test_indicator_arrays_read_only():
    ind = decode_output_vector(np.zeros(209))
    with pytest.raises(ValueError):
        ind.landmarks[0, 0] = 0.3


unit = st.floats(0.0, 1.0, allow_nan=False)
logit = st.floats(-8.0, 8.0, allow_nan=False)


@st.composite
def indicators(draw):
    lms = draw(st.lists(unit, min_size=196, max_size=196))
    mouth = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3)))
    action = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3)))
    return FaceIndicators(
        landmarks=np.reshape(lms, (98, 2)),
        eye_viz=draw(st.tuples(st.floats(0.01, 0.99), st.floats(0.01, 0.99))),
        eye_open=draw(st.tuples(st.floats(0.01, 0.99), st.floats(0.01, 0.99))),
        mouth=mouth / mouth.sum(), action=action / action.sum(),
        head=draw(st.tuples(*[st.floats(-1.5, 1.5)] * 3)))


@given(indicators())
def test_decode_encode_round_trip(ind):
    back = decode_output_vector(encode_output_vector(ind))
    assert np.array_equal(back.landmarks, ind.landmarks)
    assert np.array_equal(back.head, ind.head)
    for f in ("eye_viz", "eye_open", "mouth", "action"):
        assert np.allclose(getattr(back, f), getattr(ind, f), atol=1e-6, rtol=0)
    raw = decode_output_vector(encode_output_vector(ind, apply_inverse=False), activations_applied=True)
    assert np.allclose(raw.mouth, ind.mouth, atol=1e-12)


def test_ear_examples():
    eye = RegionIds((0, 1), ((2, 3),))
    pts = _points(p0=(0, 0), p1=(4, 0), p2=(2, 1), p3=(2, -1))
    assert compute_ear(pts, eye) == 0.5
    eye2 = RegionIds((0, 1), ((2, 3), (4, 5)))
    pts = _points(p0=(0, 0), p1=(4, 0), p2=(1, 0.5), p3=(1, -0.5), p4=(3, 1.5), p5=(3, -1.5))
    assert compute_ear(pts, eye2) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(DegenerateEye):
        compute_ear(np.zeros((98, 2)), eye)


def test_mar_examples():
    m = RegionIds((10, 11), ((12, 13),))
    pts = _points(p10=(0, 0), p11=(6, 0), p12=(3, 1.5), p13=(3, -1.5))
    assert compute_mar(pts, m) == 0.5
    pts = _points(p10=(0, 0), p11=(6, 0), p12=(3, 0), p13=(3, 0))
    assert compute_mar(pts, m) == 0.0
    with pytest.raises(DegenerateMouth):
        compute_mar(np.zeros((98, 2)), m)


@given(st.floats(0, 2 * math.pi), st.floats(0.1, 10), st.lists(st.floats(-1, 1), min_size=16, max_size=16))
def test_ear_rigid_and_scale_invariant(theta, scale, coords):
    schema = LandmarkSchema()
    pts = np.full((98, 2), 0.5)
    ids = schema.left_eye.ids
    pts[ids] = np.reshape(coords, (8, 2))
    pts[ids[0]] = (-1.5, 0.1)
    pts[ids[1]] = (1.5, -0.1)
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    moved = scale * pts @ rot.T + np.array([3.0, -7.0])
    assert compute_ear(moved, schema.left_eye) == pytest.approx(compute_ear(pts, schema.left_eye),
                                                                abs=1e-9)


def test_default_schema_is_wflw_layout():
    s = LandmarkSchema()
    assert s.left_eye.corners == (60, 64) and s.right_eye.corners == (68, 72)
    assert s.mouth.corners == (88, 92) and s.iod == (60, 72)


def test_region_validation():
    with pytest.raises(ValueError):
        RegionIds((0, 98), ((1, 2),))
    with pytest.raises(ValueError):
        RegionIds((0, 1), ())
    with pytest.raises(ValueError):
        RegionIds((0, 1), ((1, 2),))
    with pytest.raises(ValueError):
        LandmarkSchema(iod=(5, 5))


def test_denormalize_examples():
    roi = RoiBox(10, 20, 100, 50)
    pts = np.zeros((98, 2))
    pts[1] = (1, 1)
    out = denormalize_landmarks(pts, roi)
    assert tuple(out[0]) == (10, 20) and tuple(out[1]) == (110, 70)
    pts[2] = (0.5, 0.5)
    assert tuple(denormalize_landmarks(pts, RoiBox(0, 0, 160, 160))[2]) == (80, 80)


@given(st.floats(0, 1), st.lists(unit, min_size=4, max_size=4))
def test_denormalize_affine(alpha, c):
    roi = RoiBox(3.0, 5.0, 64.0, 32.0)
    p = np.array([[c[0], c[1]]] * 98)
    q = np.array([[c[2], c[3]]] * 98)
    mix = alpha * p + (1 - alpha) * q
    lhs = denormalize_landmarks(mix, roi)
    rhs = alpha * denormalize_landmarks(p, roi) + (1 - alpha) * denormalize_landmarks(q, roi)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12)


def test_roibox_invariants():
    with pytest.raises(ValueError):
        RoiBox(0, 0, 0, 1)
    with pytest.raises(ValueError):
        RoiBox(0, 0, 1, 1, score=1.5)
    assert RoiBox.from_corners(1, 2, 4, 6).corners() == (1, 2, 4, 6)
