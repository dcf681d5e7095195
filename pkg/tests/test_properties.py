"""Invariants checked on generated inputs."""

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from limitshadow.base_space import Word, full_shift_system, swap_system
from limitshadow.pseudo_orbit import ErrorSchedule, FlowPseudoOrbit, generate_limit_pseudo_orbit, sums_of
from limitshadow.reparam import Reparam, invert, remove_gap
from limitshadow.singular import SingularFlow
from limitshadow.suspension import SuspensionFlow, SuspensionPoint, canonical, near_level_decompose

SWAP = swap_system()
SHIFT = full_shift_system()
SWAP_FLOW = SuspensionFlow(SWAP)
SHIFT_FLOW = SuspensionFlow(SHIFT)

heights = st.floats(0, 1, exclude_max=True, allow_nan=False)
times = st.floats(-50, 50, allow_nan=False)
bits = st.lists(st.integers(0, 1), min_size=1, max_size=6)


@st.composite
def words(draw):
    return Word(tuple(draw(bits)), tuple(draw(bits)), draw(st.integers(-4, 4)), tuple(draw(bits)))


@st.composite
def swap_points(draw):
    return SWAP_FLOW.point(draw(st.sampled_from(["a", "b"])), draw(heights))


@st.composite
def reparams(draw):
    # increasing knots through the origin
    steps_t = draw(st.lists(st.floats(0.2, 3), min_size=2, max_size=5))
    steps_v = draw(st.lists(st.floats(0.2, 3), min_size=len(steps_t), max_size=len(steps_t)))
    k = draw(st.integers(0, len(steps_t) - 1))
    ts = np.concatenate([[0.0], np.cumsum(steps_t)]) - sum(steps_t[:k])
    vs = np.concatenate([[0.0], np.cumsum(steps_v)]) - sum(steps_v[:k])
    ts[k], vs[k] = 0.0, 0.0
    return Reparam.piecewise_linear(ts.tolist(), vs.tolist())


@given(words(), st.floats(-20, 20, allow_nan=False))
def test_canonical_idempotent(w, s):
    p = canonical(SHIFT.f, w, s)
    assert 0 <= p.height < 1
    assert canonical(SHIFT.f, p.base, p.height) == p


@given(st.integers(-8, 8), st.integers(-8, 8), words())
def test_iterate_group_law(m, n, w):
    f = SHIFT.f
    assert f.power(w, m + n) == f.power(f.power(w, m), n)


@settings(max_examples=300)
@given(words(), heights, times, times)
def test_suspension_group_law(w, h, s, t):
    p = SHIFT_FLOW.point(w, h)
    a = SHIFT_FLOW.eval(SHIFT_FLOW.eval(p, s), t)
    b = SHIFT_FLOW.eval(p, s + t)
    if abs(a.height - b.height) <= 0.5:
        assert a.base == b.base and abs(a.height - b.height) <= 1e-12
    else:
        # the two sides straddle the seam within round-off (bases may coincide when f fixes w)
        assert SHIFT_FLOW.distance(a, b) <= 1e-12


@given(swap_points(), swap_points(), swap_points())
def test_bw_metric_axioms(p, q, r):
    d = SWAP_FLOW.distance
    assert abs(d(p, q) - d(q, p)) <= 1e-9
    assert d(p, r) <= d(p, q) + d(q, r) + 1e-9
    assert (d(p, q) == 0.0) == (p == q)


@given(reparams(), st.floats(0.1, 4))
def test_remove_gap_past_and_bound(h, K):
    alpha = remove_gap(h, K)
    for t in np.linspace(-10, 0, 21):
        assert alpha(float(t)) == h(float(t))
    for t in np.linspace(0.05, 10, 40):
        t = float(t)
        assert abs(alpha(t) - h(t) - K) <= K * (1 - math.exp(-1 / (t * t))) + 1e-12


@given(reparams(), st.floats(-4, -0.1))
def test_remove_gap_negative_exact_after_t0(h, K):
    alpha = remove_gap(h, K)
    t0 = invert(h, 1 - K)
    for t in np.linspace(t0 + 1e-9, t0 + 10, 25):
        assert alpha(float(t)) == h(float(t)) + K
    assert alpha(0.0) == 0.0


@given(reparams(), st.floats(-100, 100))
def test_invert_is_inverse(h, t):
    s = invert(h, t)
    assert abs(h(s) - t) <= 1e-9


@given(st.lists(st.floats(1, 5), min_size=1, max_size=20), st.data())
def test_sums_telescope(ts, data):
    first = data.draw(st.integers(-len(ts), 0))
    s = sums_of(ts, first)
    assert s[-first] == 0.0
    # float sums: exact up to one rounding per step
    for i, t in enumerate(ts):
        assert abs(s[i + 1] - s[i] - t) <= 1e-12 * max(1.0, abs(s[i]))


@given(st.lists(st.floats(1, 4), min_size=3, max_size=10), st.data())
def test_star_bracket_totality(ts, data):
    po = FlowPseudoOrbit((0.0,) * len(ts), ts, -1)
    t = data.draw(st.floats(po.s(po.first), po.s(po.last + 1), exclude_max=True))
    i = po.bracket(t)
    assert po.s(i) <= t < po.s(i + 1)


@settings(max_examples=10, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10**6))
def test_generated_pseudo_orbits_conform(seed):
    seeds = [Word.periodic((0, 1)), Word.periodic((1, 1, 0))]
    po = generate_limit_pseudo_orbit(SHIFT_FLOW, seeds, ErrorSchedule("limit"), 16, seed=seed)
    assert po.conforms(SHIFT_FLOW)
    assert all(t >= 1 for t in po.durations)


@given(st.floats(0, 3), st.floats(2, 4), st.integers(-1, 1))
def test_near_level_correction_is_valid(s_k, t_k, c):
    w = math.floor(s_k + t_k)
    s_next = s_k + t_k - w - c
    if not 0 <= s_next < 1:
        return
    case, corr = near_level_decompose(s_k, t_k, s_next, w)
    assert abs(s_k + t_k - (w + corr) - s_next) < 0.25


SING = SingularFlow(SWAP, "a")


@settings(max_examples=40, deadline=None)
@given(swap_points(), st.floats(-8, 8), st.floats(-8, 8))
def test_singular_group_law(p, s, t):
    a = SING.eval(SING.eval(p, s), t)
    b = SING.eval(p, s + t)
    assert SING.distance(a, b) <= 1e-6
