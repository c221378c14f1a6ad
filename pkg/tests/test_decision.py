import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from drivermon.decision import (PRIORITY, Baseline, DecisionUnit, Module, RiskScores, SlidingWindow,
                                Thresholds, Tier, calibrate_step, classify_eye_closed,
                                event_frequency, global_state, head_deviation, perclos, root_cause,
                                safeness_from_components, safeness_score, tiered_score)
from drivermon.errors import EmptyWindow, InvalidSample, NotCalibrated
from drivermon.indicators import FaceIndicators, one_hot

import oracles

BASE = Baseline(ear_open=0.8, head_zero=(0.0, 0.0, 0.0), sample_count=100, completed=True)


def _ind(eye=0.8, viz=0.98, mouth=0, action=0, head=(0.0, 0.0, 0.0)):
    return FaceIndicators(landmarks=np.full((98, 2), 0.5), eye_viz=(viz, viz), eye_open=(eye, eye),
                          mouth=one_hot(mouth), head=head, action=one_hot(action))


def test_tiered_score_examples():
    assert tiered_score(0.1, 0.3, 0.7) == 0
    assert tiered_score(0.5, 0.3, 0.7) == 1
    assert tiered_score(0.3, 0.3, 0.7) == 0
    assert tiered_score(0.7, 0.3, 0.7) == 1
    assert tiered_score(0.71, 0.3, 0.7) == 2
    with pytest.raises(ValueError):
        tiered_score(0.5, 0.7, 0.3)
    with pytest.raises(ValueError):
        Tier(1.0, 1.0)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.01, 5), st.floats(0.01, 5))
def test_tiered_score_monotone(m1, m2, lo, gap):
    a, b = sorted((m1, m2))
    assert tiered_score(a, lo, lo + gap) <= tiered_score(b, lo, lo + gap)


def test_classify_examples():
    assert classify_eye_closed((0.1, 0.12), (1, 1), BASE) == (True, True)
    assert classify_eye_closed((0.5, 0.5), (1, 1), BASE) == (True, False)
    assert classify_eye_closed((0.0, 0.0), (0.4, 0.2), BASE) == (False, False)
    # one eye hidden: judged on the visible one only
    assert classify_eye_closed((0.1, 0.9), (1.0, 0.1), BASE) == (True, True)
    assert classify_eye_closed((0.1, 0.9), (1.0, 1.0), BASE) == (True, False)
    assert classify_eye_closed((0.16, 0.16), (1, 1), BASE) == (True, False)
    with pytest.raises(NotCalibrated):
        classify_eye_closed((0.1, 0.1), (1, 1), Baseline())


def test_perclos_spot_values():
    w = SlidingWindow(60_000)
    for i in range(60):
        w.add(i * 1000, True, i < 15)
    assert perclos(w, 59_999 + 1) == (25.0, True)
    w2 = SlidingWindow(60_000)
    for i in range(60):
        w2.add(i * 1000, True, False)
    assert perclos(w2, 60_000).percent == 0.0


def test_perclos_insufficient_and_empty():
    w = SlidingWindow(10_000)
    w.add(0, True, True)
    assert perclos(w, 2000) == (0.0, False)
    assert perclos(w, 2500) == (100.0, True)
    w.add(3000, False, False)
    with pytest.raises(EmptyWindow):
        perclos(w, 20_000)
    with pytest.raises(ValueError):
        w.add(3000, True, False)
    with pytest.raises(TypeError):
        SlidingWindow(100).add(1.5, True, True)


def test_unobserved_time_excluded():
    w = SlidingWindow(10_000)
    w.add(0, True, True)
    w.add(2000, False, True)
    w.add(4000, True, False)
    assert perclos(w, 6000) == (50.0, True)


@st.composite
def timelines(draw):
    n = draw(st.integers(1, 60))
    gaps = draw(st.lists(st.integers(1, 400), min_size=n, max_size=n))
    flags = draw(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=n, max_size=n))
    t = list(itertools.accumulate(gaps))
    return [(ti, o, c) for ti, (o, c) in zip(t, flags)]


@given(timelines(), st.sampled_from([500, 1000, 3000]))
def test_perclos_matches_raster_oracle(samples, window):
    w = SlidingWindow(window)
    for i, (t, o, c) in enumerate(samples):
        w.add(t, o, c)
        now = t + 7
        seen = [(ti, oi, oi and ci) for ti, oi, ci in samples[:i + 1]]
        ref = oracles.ref_perclos(seen, now, window)
        if ref is None:
            with pytest.raises(EmptyWindow):
                perclos(w, now)
            continue
        assert perclos(w, now) == ref
        obs_ms, closed_ms = oracles.raster_perclos(seen, now, window)
        assert w.times(now) == (obs_ms, closed_ms)
        assert all(ts >= now - window for ts, _, _ in w)


@given(timelines(), st.data())
def test_perclos_monotone_under_closing(samples, data):
    def value(seq):
        w = SlidingWindow(100_000)
        for s in seq:
            w.add(*s)
        return perclos(w, seq[-1][0] + 1, 0.0).percent

    candidates = [i for i, (_, o, c) in enumerate(samples) if o and not c]
    base = value(samples)
    assert 0.0 <= base <= 100.0
    if candidates:
        i = data.draw(st.sampled_from(candidates))
        flipped = list(samples)
        flipped[i] = (samples[i][0], True, True)
        assert value(flipped) >= base


def test_head_deviation_examples():
    tm = math.radians(30)
    assert head_deviation((0, 0, 0), BASE, tm) == 0.0
    assert head_deviation((tm, 0, 0), BASE, tm) == pytest.approx(1.0)
    assert head_deviation((tm / 2, -tm / 4, 0), BASE, tm) == pytest.approx(0.5)
    assert head_deviation((0, 0, 1.0), BASE, tm) == 0.0
    assert head_deviation((0, 0, tm), BASE, tm, include_roll=True) == pytest.approx(1.0)
    with pytest.raises(NotCalibrated):
        head_deviation((0, 0, 0), Baseline(), tm)


def test_event_frequency_examples():
    assert event_frequency([10_000, 20_000, 30_000], 60_000, 60_000) == 3.0
    assert event_frequency([], 60_000, 60_000) == 0.0
    assert event_frequency([40_000, 50_000], 30_000, 60_000) == 4.0
    assert event_frequency([1_000, 40_000], 30_000, 60_000) == 2.0


def test_safeness_examples():
    ones = (1, 1, 1, 1)
    assert safeness_score(RiskScores(), ones) == -2.0
    assert safeness_score(RiskScores(perclos=2, headpose=1, cellphone=1), ones) == 2.0
    assert safeness_score(RiskScores(perclos=2, headpose=1, smoking=1), ones) == 2.0
    assert safeness_score(RiskScores(2, 2, 2, 2, 2), (0, 0, 0, 0)) == 0.0


@given(st.lists(st.floats(0, 10), min_size=4, max_size=4),
       st.tuples(*[st.integers(0, 1)] * 4))
def test_safeness_affine_unit_steps(lam, s):
    f = lambda *v: safeness_from_components(*v, lam)
    base = f(*s)
    signs = (+1, -1, +1, +1)
    for k in range(4):
        bumped = list(s)
        bumped[k] += 1
        assert f(*bumped) - base == pytest.approx(signs[k] * lam[k], abs=1e-12)


def test_arbitration_all_tuples():
    for levels in itertools.product(range(3), repeat=5):
        s = RiskScores(*levels)
        assert global_state(s) == max(levels)
        cause = root_cause(s)
        assert s[cause] == max(levels)
        assert cause == next(m for m in PRIORITY if s[m] == max(levels))
    assert root_cause(RiskScores(1, 1)) is Module.PERCLOS
    assert root_cause(RiskScores()) is Module.PERCLOS
    assert root_cause(RiskScores(0, 1, 1)) is Module.HEADPOSE


def test_calibration():
    cal = Baseline()
    for i in range(99):
        cal = calibrate_step(_ind(0.8), cal)
    assert not cal.completed and cal.sample_count == 99
    cal = calibrate_step(_ind(0.8), cal)
    assert cal.completed and cal.ear_open == pytest.approx(0.8)
    assert cal.head_zero == pytest.approx((0, 0, 0))
    with pytest.raises(InvalidSample):
        calibrate_step(_ind(viz=0.1), Baseline())

    cal = Baseline()
    for v in (0.7, 0.8, 0.9, 0.75, 0.85):
        cal = calibrate_step(_ind(v), cal, min_samples=5)
    assert cal.ear_open == pytest.approx(0.8)


def test_calibration_circular_head_mean():
    cal = Baseline()
    for a in (1.5, 1.4, 1.45):
        cal = calibrate_step(_ind(head=(a, -a, 0.0)), cal, min_samples=3)
    assert cal.head_zero[0] == pytest.approx(1.45, abs=1e-3)
    assert cal.head_zero[1] == pytest.approx(-1.45, abs=1e-3)


def test_decision_unit_calibrates_then_scores():
    du = DecisionUnit(Thresholds(), calibration_samples=10)
    outs = [du.update(i * 50, _ind()) for i in range(10)]
    assert all(o.calibrating for o in outs[:-1]) and outs[-1].calibration_done
    out = du.update(500, _ind())
    assert out.scores == RiskScores(safeness=-2.0) and out.metrics["perclos_sufficient"] is False


def test_decision_unit_skips_invisible_calibration_samples():
    du = DecisionUnit(Thresholds(), calibration_samples=3)
    du.update(0, _ind(viz=0.1))
    du.update(50, None)
    assert du.baseline.sample_count == 0
    for i in range(3):
        du.update(100 + i, _ind())
    assert du.calibrated


def test_yawn_requires_min_duration():
    th = Thresholds(mouth=Tier(0.5, 1.5))
    du = DecisionUnit(th, calibration_samples=1)
    du.update(0, _ind())
    t = 50
    for _ in range(7):  # 300 ms open: too short
        du.update(t, _ind(mouth=2))
        t += 50
    out = du.update(t, _ind())
    assert out.metrics["yawn_rate"] == 0.0
    t += 50
    for _ in range(10):  # 450 ms
        out = du.update(t, _ind(mouth=2))
        t += 50
    assert out.metrics["yawn_rate"] == 1.0 and out.scores.mouth == 1


def test_action_fractions():
    du = DecisionUnit(Thresholds(), calibration_samples=1)
    du.update(0, _ind())
    for i in range(1, 11):
        out = du.update(i * 100, _ind(action=1 if i <= 6 else 2))
    assert out.metrics["phone_fraction"] == pytest.approx(0.6)
    assert out.metrics["smoking_fraction"] == pytest.approx(0.4)
    assert out.scores.cellphone == 2 and out.scores.smoking == 1


def test_thresholds_validation():
    with pytest.raises(ValueError):
        Thresholds(weights=(1, 1, -1, 1))
    with pytest.raises(ValueError):
        Thresholds(perclos_window_ms=0)
    with pytest.raises(ValueError):
        RiskScores(perclos=3)
