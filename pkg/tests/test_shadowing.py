import math

import numpy as np
import pytest

from limitshadow.base_space import (
    FinitePointSpace,
    MetricSystem,
    Word,
    full_shift_system,
    permutation_map,
    swap_system,
    two_swaps_system,
)
from limitshadow.pseudo_orbit import (
    ErrorSchedule,
    FlowPseudoOrbit,
    exact_orbit,
    generate_limit_pseudo_orbit,
    generate_map_pseudo_orbit,
    map_splice,
    project_map_to_flow,
)
from limitshadow.shadowing import (
    NOT_SHADOWED,
    SHADOWED,
    SHADOWED_WITH_GAP,
    chain_transitivity_witness,
    coding_point,
    lift_shadow_to_suspension,
    map_tsls_gap_search,
    normalize_durations,
    project_shadow_to_base,
    tail_verdict,
    transitivity_probe,
)
from limitshadow.suspension import SuspensionFlow, SuspensionPoint


def test_tail_verdict_needs_decay():
    keys = list(range(-8, 9))
    flat = [0.05] * len(keys)
    ok, tail, early = tail_verdict(keys, flat, 8, 0.1)
    assert not ok and tail == 0.05
    decaying = [0.1 / (1 + abs(k)) for k in keys]
    assert tail_verdict(keys, decaying, 8, 0.1)[0]
    zeros = [0.0] * len(keys)
    assert tail_verdict(keys, zeros, 8, 0.1)[0]


def test_exact_map_orbit_is_shadowed_by_x0():
    s = full_shift_system()
    x0 = Word((0,), (1, 1, 0, 1), -2, (1,))
    mpo = map_splice(s, x0, x0, 16)
    v = map_tsls_gap_search(s, mpo, 4, 0.1)
    assert v.status == SHADOWED and v.gap == 0
    assert all(e == 0 for _, e in v.trace)
    assert s.distance(v.witness, x0) == 0


def test_swap_gap_one():
    s = swap_system()
    mpo = map_splice(s, "a", "b", 16)
    assert map_tsls_gap_search(s, mpo, 0, 0.1).status == NOT_SHADOWED
    v = map_tsls_gap_search(s, mpo, 1, 0.1)
    assert v.status == SHADOWED_WITH_GAP and abs(v.gap) == 1
    assert v.tail_error == 0.0


def test_shift_splice_shadowed_without_gap():
    s = full_shift_system()
    mpo = generate_map_pseudo_orbit(s, [Word.periodic((0, 1, 1)), Word.periodic((1, 0))], 64, seed=3)
    v = map_tsls_gap_search(s, mpo, 4, 0.1)
    assert v.status == SHADOWED and v.gap == 0
    assert v.tail_error <= 0.1


def test_coding_point_reads_zeroth_symbols():
    s = full_shift_system()
    mpo = generate_map_pseudo_orbit(s, [Word.periodic((0, 1, 1)), Word.periodic((1, 0))], 16, seed=1)
    for K in (0, 2, -1):
        y = coding_point(s, mpo, K)
        for j in range(-16, 0):
            assert y[j] == mpo.x(j)[0]
        # with K < 0 the first -K future symbols fall on the past branch
        for j in range(max(0, -K), 17):
            assert y[j + K] == mpo.x(j)[0]


def test_gap_bound_monotone():
    s = swap_system()
    mpo = map_splice(s, "a", "b", 16)
    shadowed = [map_tsls_gap_search(s, mpo, N, 0.1).shadowed for N in range(0, 5)]
    # once shadowed, larger bounds stay shadowed
    first = shadowed.index(True)
    assert all(shadowed[first:])


def test_lift_exact_suspension_orbit():
    flow = SuspensionFlow(full_shift_system())
    p = flow.point(Word((0,), (1, 0, 1), -1, (1,)), 0.3)
    fpo = exact_orbit(flow, p, 16, 2.5)
    v = lift_shadow_to_suspension(flow, fpo)
    assert v.status == SHADOWED
    assert max(e for _, _, e in v.trace) <= 1e-9
    # slope one everywhere
    for t in np.linspace(-30, 30, 13):
        assert v.reparam(float(t)) == pytest.approx(float(t), abs=1e-9)


def test_lift_swap_example_removes_gap():
    s = swap_system()
    flow = SuspensionFlow(s)
    fpo = project_map_to_flow(map_splice(s, "a", "b", 32), flow)
    v = lift_shadow_to_suspension(flow, normalize_durations(fpo, flow))
    assert v.status == SHADOWED and v.gap == 0
    assert v.details["base_gap"] != 0


def test_project_exact_orbit_gap_zero():
    s = full_shift_system()
    flow = SuspensionFlow(s)
    x0 = Word((0,), (1, 1), 0, (1, 0))
    mpo = map_splice(s, x0, x0, 32)
    from limitshadow.shadowing import shadow_flow_pseudo_orbit

    sv = shadow_flow_pseudo_orbit(flow, project_map_to_flow(mpo, flow), 4, 0.1, 4)
    v = project_shadow_to_base(flow, sv, mpo)
    assert v.shadowed and v.gap == 0
    assert v.tail_error == 0.0


def test_normalized_durations_in_range():
    s = swap_system()
    flow = SuspensionFlow(s)
    fpo = project_map_to_flow(map_splice(s, "a", "b", 16), flow)
    out = normalize_durations(fpo, flow)
    assert all(2 <= t < 4 for t in out.durations)


def test_chain_witness_on_forward_orbit():
    flow = SuspensionFlow(swap_system())
    x = flow.point("a", 0.2)
    y = flow.eval(x, 3.5)
    po = chain_transitivity_witness(flow, x, y, 0.1)
    assert len(po.points) == 2
    assert po.jumps(flow)[0] < 1e-12


def test_chain_witness_swap_any_points():
    flow = SuspensionFlow(swap_system())
    x, y = flow.point("a", 0.15), flow.point("b", 0.85)
    po = chain_transitivity_witness(flow, x, y, 0.1)
    assert po.x(po.first) == x and po.x(po.last) == y
    assert max(po.jumps(flow)) <= 0.1 + 1e-12


def test_chain_witness_shift_periodic_lifts():
    flow = SuspensionFlow(full_shift_system())
    x = flow.point(Word.periodic((0,)), 0.5)
    y = flow.point(Word.periodic((0, 1, 1)), 0.25)
    po = chain_transitivity_witness(flow, x, y, 0.25)
    assert len(po.points) == 4
    assert max(po.jumps(flow)) < 0.25


def test_transitivity_one_point():
    space = FinitePointSpace(["p"], [[0]])
    s = MetricSystem(space, permutation_map(space, {"p": "p"}))
    rep = transitivity_probe(SuspensionFlow(s), max_k=2)
    assert rep["transitive"]


def test_transitivity_two_components_reports_missing():
    rep = transitivity_probe(SuspensionFlow(two_swaps_system()), max_k=2)
    assert not rep["transitive"]
    miss = rep["missing"]
    assert {miss["from"].base, miss["to"].base} & {"a", "b"}
    assert {miss["from"].base, miss["to"].base} & {"c", "d"}
