import math

import numpy as np
import pytest

from limitshadow.base_space import Word, full_shift_system, swap_system
from limitshadow.pseudo_orbit import (
    ErrorSchedule,
    FlowPseudoOrbit,
    MapPseudoOrbit,
    PseudoOrbitError,
    concatenate,
    exact_orbit,
    generate_limit_pseudo_orbit,
    map_splice,
    project_map_to_flow,
    pseudo_orbit_from_json,
    sums_of,
)
from limitshadow.suspension import CircleRotation, SuspensionFlow, SuspensionPoint


def test_unit_sums():
    assert list(sums_of([1.0] * 7, -3)) == list(range(-3, 5))


def test_sums_around_origin():
    po = FlowPseudoOrbit((0.0, 0.0, 0.0), (2.0, 3.0, 1.5), -1)
    assert po.s(1) == 3.0
    assert po.s(-1) == -2.0
    assert po.s(0) == 0.0


def test_star_on_circle():
    rot = CircleRotation()
    po = FlowPseudoOrbit((0.0,) * 7, (1.0,) * 7, -3, ErrorSchedule("exact"))
    assert po.star(rot, 0.0) == 0.0
    assert po.star(rot, 2.5) == pytest.approx(0.5)


def test_star_half_open_bracket():
    flow = SuspensionFlow(swap_system())
    pts = (flow.point("a", 0.1), flow.point("b", 0.7), flow.point("a", 0.3))
    po = FlowPseudoOrbit(pts, (2.0, 2.5, 2.0), 0)
    assert po.bracket(2.0) == 1
    assert po.star(flow, 2.0) == pts[1]
    assert po.bracket(1.999) == 0


def test_exact_orbit_star_is_flow():
    flow = SuspensionFlow(swap_system())
    p = flow.point("a", 0.3)
    po = exact_orbit(flow, p, 8, 2.5)
    for t in np.linspace(po.s(-8), po.s(8) - 0.01, 97):
        q = flow.eval(p, float(t))
        assert flow.distance(po.star(flow, float(t)), q) < 1e-9
    assert po.conforms(flow)
    assert all(j < 1e-12 for j in po.jumps(flow))


def test_exact_schedule_generation():
    flow = SuspensionFlow(swap_system())
    po = generate_limit_pseudo_orbit(flow, ["a"], ErrorSchedule("exact"), 6, seed=1)
    assert max(po.jumps(flow)) < 1e-12


def test_swap_splice_parity_mismatch():
    flow = SuspensionFlow(swap_system())
    po = generate_limit_pseudo_orbit(flow, ["a", "b"], ErrorSchedule("limit"), 8, seed=0, durations=(2.0, 2.0), perturb=False,
                                     height=0.5)
    jumps = po.jumps(flow)
    # a single jump of size one at the splice, exact elsewhere
    assert jumps[8] == pytest.approx(1.0)
    assert max(jumps[:8] + jumps[9:]) < 1e-12


def test_shift_perturbation_respects_schedule():
    flow = SuspensionFlow(full_shift_system())
    seeds = [Word.periodic((0, 1, 1)), Word.periodic((1, 0, 0))]
    po = generate_limit_pseudo_orbit(flow, seeds, ErrorSchedule("limit", 1.0), 32, seed=5)
    assert po.conforms(flow)
    assert all(1 <= t < 4 for t in po.durations) and min(po.durations) >= 2
    # at |i| = 9 the bound is 0.1; realized jumps are at most that
    js = dict(zip(range(po.first, po.last), po.jumps(flow)))
    assert js[9] <= 0.1 and js[-9] <= 0.1


def test_concatenate_single_segment_is_identity():
    flow = SuspensionFlow(swap_system())
    seg = exact_orbit(flow, flow.point("a", 0.2), 3)
    out = concatenate([seg], [], [0.5], flow)
    assert out.points == seg.points
    assert out.durations == seg.durations


def test_concatenate_records_deltas():
    flow = SuspensionFlow(swap_system())
    segs = []
    p = flow.point("a", 0.2)
    for n in range(1, 6):
        seg = exact_orbit(flow, p, 2)
        segs.append(FlowPseudoOrbit(seg.points, seg.durations, 0))
        end = seg.points[-1]
        p = flow.point(end.base, end.height + 0.5 / (n + 1))
    out = concatenate(segs, [], [1 / n for n in range(1, 6)], flow)
    assert out.conforms(flow)


def test_concatenate_rejects_far_start():
    flow = SuspensionFlow(swap_system())
    a = exact_orbit(flow, flow.point("a", 0.2), 2)
    b = exact_orbit(flow, flow.point("b", 0.9), 2)
    with pytest.raises(PseudoOrbitError):
        concatenate([FlowPseudoOrbit(a.points, a.durations), FlowPseudoOrbit(b.points, b.durations)], [],
                    [0.01, 0.01], flow)


def test_project_exact_map_orbit():
    s = swap_system()
    flow = SuspensionFlow(s)
    mpo = map_splice(s, "a", "a", 6)
    fpo = project_map_to_flow(mpo, flow)
    assert max(fpo.jumps(flow)) < 1e-12
    assert fpo.x(0) == SuspensionPoint("a", 0.5)


def test_project_jump_is_half_sum():
    # jump of the lifted flow orbit is (d(f x_n, x_{n+1}) + d(f^2 x_n, f x_{n+1}))/2
    s = full_shift_system()
    flow = SuspensionFlow(s)
    z = Word.periodic((0,))
    x1 = Word((0,), (1,), 3, (0,))
    mpo = MapPseudoOrbit((z, x1), 0)
    fpo = project_map_to_flow(mpo, flow)
    delta = s.distance(s.f(z), x1)
    eps = s.distance(s.f(s.f(z)), s.f(x1))
    assert fpo.jumps(flow)[0] == pytest.approx(delta / 2 + eps / 2, abs=1e-12)


def test_durations_below_one_rejected():
    with pytest.raises(PseudoOrbitError):
        FlowPseudoOrbit((0.0, 0.0), (1.0, 0.5))


def test_json_round_trip():
    flow = SuspensionFlow(full_shift_system())
    po = generate_limit_pseudo_orbit(flow, [Word.periodic((0, 1))], ErrorSchedule("limit"), 8, seed=2)
    space = flow.space
    back = pseudo_orbit_from_json(po.to_json(space), space)
    assert back.points == po.points and back.durations == po.durations and back.first == po.first
