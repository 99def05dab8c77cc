"""Signal arithmetic: evaluation, calculus, merged-grid combination, metrics."""

import json

import numpy as np
import pytest

from hystctl.signals import (
    DomainError,
    PolylineSignal,
    StepSignal,
    TimeGrid,
    add,
    antiderivative,
    breakpoints,
    combine,
    derivative,
    evaluate,
    l1_distance,
    sample,
    signal_from_json,
    signal_to_json,
    subtract,
    sup_distance,
)


def step(points, values):
    return StepSignal(TimeGrid(tuple(points)), tuple(values))


def random_step(rng, max_knots=20):
    n = rng.integers(1, max_knots)
    pts = np.concatenate([[0.0], np.cumsum(rng.uniform(0.05, 1.0, n))])
    pts *= 4.0 / pts[-1]
    return step(pts, rng.uniform(-3.0, 3.0, n))


def random_polyline(rng, max_knots=20):
    n = rng.integers(2, max_knots)
    pts = np.concatenate([[0.0], np.cumsum(rng.uniform(0.05, 1.0, n - 1))])
    pts *= 4.0 / pts[-1]
    return PolylineSignal(tuple(zip(pts, rng.uniform(-3.0, 3.0, n))))


def dense_metrics(a, b, dt=1e-5):
    # midpoint rule on the breakpoint-refined dense grid (exact on affine
    # pieces, so the only error source is sign changes of the difference)
    breaks = np.concatenate([breakpoints(a), breakpoints(b)])
    ts = np.unique(np.concatenate([np.arange(0.0, a.horizon, dt), [a.horizon], breaks]))
    mids = 0.5 * (ts[:-1] + ts[1:])
    diff_mid = np.abs(sample(a, mids) - sample(b, mids))
    l1 = float(np.sum(diff_mid * np.diff(ts)))
    # sup attained at breakpoints (one-sided); sample both sides of each break
    side = np.clip(np.concatenate([breaks, breaks - 1e-12]), 0.0, a.horizon)
    probe = np.concatenate([ts, side])
    sup = float(np.abs(sample(a, probe) - sample(b, probe)).max())
    return l1, sup


# ---------------------------------------------------------------------------
# construction and evaluation

def test_grid_validation():
    with pytest.raises(DomainError):
        TimeGrid((0.0,))
    with pytest.raises(DomainError):
        TimeGrid((0.0, 1.0, 1.0))
    with pytest.raises(DomainError):
        TimeGrid((0.0, float("inf")))


def test_step_evaluation_convention():
    s = step([0.0, 1.0, 2.0], [1.0, -1.0])
    assert evaluate(s, 0.5) == 1.0
    assert s(1.0) == -1.0  # half-open: knot belongs to the right interval
    assert s(2.0) == -1.0  # last interval closed
    with pytest.raises(DomainError):
        s(2.5)


def test_polyline_interpolation():
    p = PolylineSignal(((0.0, 0.0), (1.0, 1.0)))
    assert p(0.5) == 0.5
    assert p(1.0) == 1.0
    with pytest.raises(DomainError):
        p(-0.1)


def test_reference_step_control():
    ubar = step([0.0, 1.0, 2.0, 3.0, 4.0], [1.0, -1.0, 0.5, 2.0])
    assert ubar(2.5) == 0.5


def test_step_value_count_mismatch():
    with pytest.raises(DomainError):
        step([0.0, 1.0, 2.0], [1.0])


def test_sample_matches_scalar_evaluation():
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = random_step(rng) if rng.random() < 0.5 else random_polyline(rng)
        ts = np.sort(rng.uniform(0.0, s.horizon, 50))
        vals = sample(s, ts)
        assert max(abs(v - s(t)) for t, v in zip(ts, vals)) < 1e-12


# ---------------------------------------------------------------------------
# calculus

def test_antiderivative_simple():
    p = antiderivative(step([0.0, 1.0], [1.0]), 0.0)
    assert p.knots == ((0.0, 0.0), (1.0, 1.0))


def test_antiderivative_telescoping():
    p = antiderivative(step([0.0, 1.0, 2.0], [1.0, -1.0]), 2.0)
    assert p.knots == ((0.0, 2.0), (1.0, 3.0), (2.0, 2.0))


def test_antiderivative_loop_control_is_tent():
    alpha, T = 1.5, 0.7
    u1 = step([0.0, T, 2 * T, 3 * T, 4 * T], [alpha, 0.0, -alpha, 0.0])
    x = antiderivative(u1, 0.0)
    assert abs(x(T) - alpha * T) < 1e-15
    assert abs(x(2 * T) - alpha * T) < 1e-15
    assert abs(x(4 * T)) < 1e-15


def test_derivative_roundtrip():
    rng = np.random.default_rng(1)
    for _ in range(20):
        s = random_step(rng)
        p = antiderivative(s, rng.uniform(-1, 1))
        assert derivative(p).values == pytest.approx(s.values, abs=1e-12)
        q = antiderivative(derivative(p), p.knots[0][1])
        assert all(abs(a[1] - b[1]) < 1e-12 for a, b in zip(p.knots, q.knots))


# ---------------------------------------------------------------------------
# combination on merged grids

def test_combine_pointwise_property():
    rng = np.random.default_rng(2)
    for _ in range(30):
        kind = rng.integers(0, 3)
        a = random_step(rng) if kind != 1 else random_polyline(rng)
        b = random_polyline(rng) if kind != 0 else random_step(rng)
        c = combine(a, b, 2.0, -0.5)
        for t in rng.uniform(0.0, 4.0, 1000):
            assert abs(c(t) - (2.0 * a(t) - 0.5 * b(t))) < 1e-12


def test_add_subtract_same_kind_closure():
    a = step([0.0, 1.0, 2.0], [1.0, 2.0])
    b = step([0.0, 0.5, 2.0], [3.0, 4.0])
    s = add(a, b)
    assert isinstance(s, StepSignal)
    assert s(0.25) == 4.0 and s(0.75) == 5.0 and s(1.5) == 6.0
    pa = PolylineSignal(((0.0, 0.0), (2.0, 2.0)))
    pb = PolylineSignal(((0.0, 1.0), (1.0, 0.0), (2.0, 1.0)))
    d = subtract(pa, pb)
    assert isinstance(d, PolylineSignal)
    assert d(1.0) == pytest.approx(1.0)


def test_combine_horizon_mismatch():
    with pytest.raises(DomainError):
        add(step([0.0, 1.0], [1.0]), step([0.0, 2.0], [1.0]))


# ---------------------------------------------------------------------------
# metrics

def test_l1_trivial_cases():
    a = step([0.0, 1.0], [1.0])
    b = step([0.0, 1.0], [0.0])
    assert l1_distance(a, a) == 0.0
    assert l1_distance(a, b) == 1.0


def test_sup_trivial_cases():
    p = PolylineSignal(((0.0, 0.0), (1.0, 1.0)))
    z = step([0.0, 1.0], [0.0])
    assert sup_distance(p, p) == 0.0
    assert sup_distance(p, z) == 1.0  # attained at t=1


def test_metrics_against_dense_oracle():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = random_step(rng) if rng.random() < 0.5 else random_polyline(rng)
        b = random_step(rng) if rng.random() < 0.5 else random_polyline(rng)
        l1_ref, sup_ref = dense_metrics(a, b)
        assert abs(l1_distance(a, b) - l1_ref) < 1e-6
        assert abs(sup_distance(a, b) - sup_ref) < 1e-6


def test_metric_axioms():
    rng = np.random.default_rng(4)
    for _ in range(10):
        sigs = [random_polyline(rng) for _ in range(3)]
        a, b, c = sigs
        for dist in (l1_distance, sup_distance):
            assert abs(dist(a, b) - dist(b, a)) < 1e-12
            assert dist(a, c) <= dist(a, b) + dist(b, c) + 1e-12


def test_sign_change_split_in_l1():
    # difference crosses zero mid-interval; closed form must split there
    a = PolylineSignal(((0.0, -1.0), (1.0, 1.0)))
    b = step([0.0, 1.0], [0.0])
    assert l1_distance(a, b) == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# serialization

def test_json_roundtrip():
    s = step([0.0, 1.0, 2.0], [1.0, -1.0])
    p = PolylineSignal(((0.0, 0.5), (2.0, -1.5)))
    for sig in (s, p):
        blob = json.dumps(signal_to_json(sig))
        back = signal_from_json(json.loads(blob))
        assert back == sig


def test_csv_rows():
    s = step([0.0, 1.0, 2.0], [1.0, -1.0])
    assert s.csv_rows() == [(0.0, 1.0), (1.0, -1.0), (2.0, -1.0)]
    p = PolylineSignal(((0.0, 0.0), (1.0, 1.0)))
    assert p.csv_rows() == [(0.0, 0.0), (1.0, 1.0)]
