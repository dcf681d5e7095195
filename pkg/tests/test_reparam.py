import math

import numpy as np
import pytest

from limitshadow.reparam import (
    Reparam,
    ReparamError,
    certify,
    compose,
    gap_convergence_trace,
    invert,
    remove_gap,
)
from limitshadow.shadowing import LiftData, lift_reparam
from limitshadow.suspension import SuspensionFlow
from limitshadow.base_space import swap_system

from oracles import gap_alpha


def test_identity():
    assert Reparam.identity()(3.7) == 3.7


def test_lift_alpha_single_bracket():
    # s_k = s_{k+1} = 0, n_k = 1, t_k = 2, N_k = 0: alpha(T_k + 1) = 1/2
    data = LiftData(M=0, w={0: 2}, n={0: 1}, N={0: 0, 1: 1}, T={0: 0.0, 1: 2.0},
                    heights={0: 0.0, 1: 0.0}, base_po=None, alignment=0.0, min_slope_numerator=1.0)
    h = lift_reparam(data, 0, 0)
    assert h(1.0) == pytest.approx(0.5, abs=1e-15)


def test_gap_overlay_at_one():
    alpha = remove_gap(Reparam.identity(), 2)
    assert alpha(1.0) == pytest.approx(1 + 2 * math.exp(-1), abs=1e-12)


def test_invert_examples():
    assert invert(Reparam.identity(), 5.0) == pytest.approx(5.0, abs=1e-12)
    h = Reparam.piecewise_linear([0, 2, 3], [0, 1, 2])
    # tol bounds |h(s) - t|; slope 1/2 doubles it in s
    s = invert(h, 1.0)
    assert abs(h(s) - 1.0) <= 1e-12
    assert s == pytest.approx(2.0, abs=2e-12)
    assert invert(Reparam.linear(2.0), -4.0) == pytest.approx(-2.0, abs=1e-12)


def test_zero_gap_is_identity_op():
    h = Reparam.linear(1.5)
    assert remove_gap(h, 0) is h


def test_negative_gap_three_pieces():
    alpha = remove_gap(Reparam.identity(), -1)
    assert alpha(1.0) == pytest.approx(0.5, abs=1e-12)
    assert alpha(2.0) == pytest.approx(1.0, abs=1e-12)
    assert alpha(3.0) == 2.0
    assert alpha(-2.5) == -2.5


def test_compose_with_identity():
    alpha = remove_gap(Reparam.identity(), -1)
    assert compose(alpha, Reparam.identity())(2.0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("K", [3.0, 0.5, -0.5, -2.0])
def test_remove_gap_against_closed_form(K):
    h = Reparam.piecewise_linear([-3, 0, 2, 5], [-2, 0, 3, 4])
    alpha = remove_gap(h, K)
    for t in np.linspace(-5, 12, 171):
        assert alpha(float(t)) == pytest.approx(gap_alpha(h, K, float(t)), abs=1e-9)


def test_removed_gap_certifies():
    for K in (2.0, -1.5):
        alpha = remove_gap(Reparam.identity(), K)
        assert certify(alpha, -50, 50, 1e-2).ok


def test_certify_rejects_decreasing():
    assert not certify(Reparam.piecewise_linear([0, 1, 2], [0, 1, 0.5]), -5, 5, 1e-2).ok


def test_bad_slope():
    with pytest.raises(ReparamError):
        Reparam.linear(0)


def test_json_round_trip():
    alpha = remove_gap(Reparam.piecewise_linear([0, 1, 4], [0, 2, 3]), -0.7)
    beta = Reparam.from_json(alpha.to_json())
    ts = np.linspace(-6, 9, 61)
    assert np.array_equal(alpha(ts), beta(ts))


def test_gap_convergence_trace_goes_to_zero():
    flow = SuspensionFlow(swap_system())
    h = Reparam.identity()
    alpha = remove_gap(h, 1.0)
    rows = gap_convergence_trace(h, alpha, 1.0, flow, flow.point("a", 0.25), [1, 2, 4, 8, 16, 32])
    errs = [e for _, e in rows]
    assert errs[-1] < 1e-2
    assert errs[-1] < errs[0]
