import numpy as np
import pytest

from limitshadow.base_space import (
    FinitePointSpace,
    MetricSystem,
    SpaceError,
    SubshiftSpace,
    Word,
    check_metric_axioms,
    enumerate_candidates,
    full_shift_system,
    iterate,
    omega_limit_sample,
    preset_system,
    swap_system,
)


def test_one_point_space_passes_axioms():
    rep = check_metric_axioms(FinitePointSpace(["p"], [[0]]))
    assert rep.ok and rep.diameter == 0


def test_discrete_two_points():
    rep = check_metric_axioms(swap_system().space)
    assert rep.ok
    assert rep.diameter == 1


def test_triangle_violation_reported():
    # 1 > 0.4 + 0.4
    space = FinitePointSpace(["p", "q", "r"], [[0, 0.4, 1], [0.4, 0, 0.4], [1, 0.4, 0]])
    rep = check_metric_axioms(space)
    assert not rep.ok
    assert not rep.checks["triangle"]
    assert rep.checks["symmetry"]


def test_diameter_is_normalized():
    space = FinitePointSpace(["p", "q"], [[0, 4], [4, 0]])
    assert space.distance("p", "q") == 1.0


def test_swap_iterate():
    f = swap_system().f
    assert iterate(f, "a", 2) == "a"
    assert iterate(f, "a", 1) == "b"
    assert iterate(f, "b", -3) == "a"
    assert iterate(f, "a", 0) == "a"


def test_shift_of_period_two_word():
    f = full_shift_system().f
    assert iterate(f, Word.periodic((0, 1)), 1) == Word.periodic((1, 0))


def test_shift_convention():
    w = Word((0,), (1, 1, 0), 0, (0,))
    v = w.shift(2)
    for i in range(-6, 6):
        assert v[i] == w[i + 2]


def test_omega_limit_of_fixed_point():
    s = full_shift_system()
    z = Word.periodic((0,))
    assert omega_limit_sample(s, z, 10, 0.1).samples == (z,)


def test_omega_limit_swap():
    sample = omega_limit_sample(swap_system(), "a", 10, 0.1)
    assert set(sample.samples) == {"a", "b"}


def test_omega_limit_transitive_point_hits_all_cylinders():
    # de Bruijn-style concatenation of all 3-blocks repeated as a periodic tail
    blocks = [tuple(int(c) for c in format(n, "03b")) for n in range(8)]
    core = tuple(s for b in blocks for s in b)
    space = SubshiftSpace((0, 1), (), 12, 4)
    s = MetricSystem(space, full_shift_system().f)
    p = Word((0,), core, 0, core)
    sample = omega_limit_sample(s, p, 2**6, 2.0**-3)
    seen = {tuple(w.symbols(0, 2)) for w in (s.f.power(p, n) for n in range(32, 65))}
    assert seen == set(blocks)
    assert len(sample.samples) >= 8


def test_enumerate_two_point_space():
    assert enumerate_candidates(swap_system().space) == ["a", "b"]


def test_enumerate_full_shift_period_two():
    space = SubshiftSpace((0, 1), (), 12, 2)
    got = set(enumerate_candidates(space))
    want = {Word.periodic(b) for b in [(0,), (1,), (0, 1), (1, 0)]}
    assert got == want


def test_enumerate_golden_mean():
    space = SubshiftSpace((0, 1), ((1, 1),), 12, 2)
    got = set(enumerate_candidates(space))
    assert got == {Word.periodic((0,)), Word.periodic((0, 1)), Word.periodic((1, 0))}


def test_word_metric_values():
    space = full_shift_system().space
    z = Word.periodic((0,))
    one = Word((0,), (1,), 0, (0,))
    far = Word((0,), (1,), 5, (0,))
    assert space.distance(z, one) == 1.0
    assert space.distance(z, far) == 2.0**-5
    assert space.distance(z, z) == 0.0


def test_word_metric_window_consistency():
    # agrees at window W+4 whenever d >= 2^-(W-1)
    rng = np.random.default_rng(3)
    for _ in range(50):
        core = tuple(int(b) for b in rng.integers(0, 2, 20))
        core2 = list(core)
        k = int(rng.integers(0, 20))
        core2[k] ^= 1
        x, y = Word((0,), core, -10, (1,)), Word((0,), tuple(core2), -10, (1,))
        d12 = SubshiftSpace((0, 1), (), 12).distance(x, y)
        d16 = SubshiftSpace((0, 1), (), 16).distance(x, y)
        if d12 >= 2.0**-11:
            assert d12 == d16


def test_descriptor_round_trip():
    s = full_shift_system(2, 10, 3)
    t = MetricSystem.from_descriptor(s.descriptor())
    assert t.space == s.space
    w = swap_system()
    u = MetricSystem.from_descriptor(w.descriptor())
    assert u.f("a") == "b"


def test_unknown_preset():
    with pytest.raises(SpaceError):
        preset_system("nope")


def test_inadmissible_word_rejected():
    space = SubshiftSpace((0, 1), ((1, 1),), 12, 2)
    with pytest.raises(SpaceError):
        space.point_from_json({"periodic": [1]})
