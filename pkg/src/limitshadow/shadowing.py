"""Shadowing verdicts and the constructive shadowing pipelines.

Limits are checked on finite horizons.  A trace "tends to zero" when the
maximum error over the last quarter of the horizon is at most ``tol`` and at
most half the maximum over the second quarter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .base_space import MetricSystem, SubshiftSpace, Word, enumerate_candidates, splice_words
from .pseudo_orbit import ErrorSchedule, FlowPseudoOrbit, MapPseudoOrbit, _with_window, concatenate
from .reparam import Reparam, remove_gap
from .suspension import SuspensionFlow, SuspensionPoint, near_level_decompose

SHADOWED = "shadowed"
SHADOWED_WITH_GAP = "shadowed-with-gap"
NOT_SHADOWED = "not-shadowed-within-search"


NOISE_FLOOR = 1e-12


class ShadowingError(RuntimeError):
    pass


@dataclass
class ShadowVerdict:
    status: str
    mode: str
    witness: Any = None
    reparam: Reparam | None = None
    gap: float = 0
    trace: list = field(default_factory=list)
    tail_error: float = math.inf
    tol: float = 0.1
    horizon: int = 0
    search_domain: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def shadowed(self) -> bool:
        return self.status in (SHADOWED, SHADOWED_WITH_GAP)

    def to_json(self, space) -> dict:
        witness = None
        if isinstance(self.witness, SuspensionPoint):
            witness = self.witness.to_json(space)
        elif self.witness is not None:
            witness = space.point_to_json(self.witness)
        return {
            "status": self.status,
            "mode": self.mode,
            "witness": witness,
            "reparam": self.reparam.to_json() if self.reparam is not None else None,
            "gap": self.gap,
            "tail_error": self.tail_error,
            "tol": self.tol,
            "horizon": self.horizon,
            "trace": [list(row) for row in self.trace],
            "search_domain": self.search_domain,
            "details": self.details,
        }


def tail_verdict(keys: Sequence[int], errors: Sequence[float], horizon: int, tol: float) -> tuple[bool, float, float]:
    """Apply the finite-horizon decay criterion.

    Returns ``(ok, last_quarter_max, second_quarter_max)``; ``keys`` are the
    signed indices the errors belong to.
    """
    keys = np.abs(np.asarray(keys))
    errors = np.asarray(errors, dtype=float)
    last = errors[keys >= math.ceil(3 * horizon / 4)]
    second = errors[(keys >= horizon / 4) & (keys < horizon / 2)]
    tail = float(last.max()) if last.size else 0.0
    early = float(second.max()) if second.size else 0.0
    # errors at round-off level count as zero: they cannot show decay
    return tail <= tol and tail <= max(0.5 * early, NOISE_FLOOR), tail, early


# ---------------------------------------------------------------------------
# Maps
# ---------------------------------------------------------------------------


def coding_point(system: MetricSystem, mpo: MapPseudoOrbit, gap: int = 0) -> Word:
    """The word reading the 0-th symbol along the pseudo-orbit.

    ``y_j = (x_j)_0`` for ``j < 0`` and ``y_{j+gap} = (x_j)_0`` for ``j >= 0``,
    continued by the end points' own tails beyond the realized range.
    """
    first, last = mpo.first, mpo.last
    outer = splice_words(mpo.x(first).shift(-first), mpo.x(last).shift(-(last + gap)), cut=0)
    vals = {m: mpo.x(m)[0] for m in range(first, 0)}
    for m in range(0, last + gap + 1):
        i = m - gap
        vals[m] = mpo.x(i)[0] if i >= 0 else mpo.x(0)[i]
    return _with_window(outer, first, [vals[m] for m in range(first, last + gap + 1)])


def _gap_order(N: int) -> list[int]:
    return sorted(range(-N, N + 1), key=lambda K: (abs(K), K))


def map_errors(system: MetricSystem, y, mpo: MapPseudoOrbit, K: int, indices: Sequence[int]) -> list[float]:
    """``d(f^i(y), x_i)`` for ``i < 0`` and ``d(f^{K+i}(y), x_i)`` for ``i >= 0``."""
    f = system.f
    return [system.distance(f.power(y, i if i < 0 else K + i), mpo.x(i)) for i in indices]


def map_tsls_gap_search(system: MetricSystem, mpo: MapPseudoOrbit, N: int = 4, tol: float = 0.1,
                        horizon: int | None = None, candidates: Sequence | None = None,
                        decay_evidence: bool = True) -> ShadowVerdict:
    """Brute-force search for a point two-sided limit shadowing ``mpo`` with gap ``|K| <= N``.

    Gaps are tried in the order 0, -1, 1, -2, 2, ...; within a gap the
    candidate with the smallest last-quarter error wins, ties going to the
    earliest candidate.  ``decay_evidence=False`` drops the second-quarter
    comparison and keeps only the tail bound.
    """
    I = horizon if horizon is not None else min(-mpo.first, mpo.last)
    if I < 4:
        raise ShadowingError("horizon too short for the tail criterion")
    base = list(candidates) if candidates is not None else enumerate_candidates(system.space)
    is_shift = isinstance(system.space, SubshiftSpace)
    if not base and not is_shift:
        raise ShadowingError("empty candidate set")
    idx_all = list(range(-I, I + 1))
    tail_idx = [i for i in idx_all if abs(i) >= math.ceil(3 * I / 4)]
    early_idx = [i for i in idx_all if I / 4 <= abs(i) < I / 2]
    log = []
    for K in _gap_order(N):
        pool = list(base)
        if is_shift and candidates is None:
            pool.append(coding_point(system, mpo, K))
        best = None
        for c, y in enumerate(pool):
            tail = max(map_errors(system, y, mpo, K, tail_idx))
            if tail > tol:
                log.append((c, K, tail))
                continue
            early = max(map_errors(system, y, mpo, K, early_idx))
            ok = tail <= max(0.5 * early, NOISE_FLOOR) or not decay_evidence
            log.append((c, K, tail))
            if ok and (best is None or tail < best[0]):
                best = (tail, c, y)
        if best is not None:
            tail, c, y = best
            errs = map_errors(system, y, mpo, K, idx_all)
            return ShadowVerdict(
                SHADOWED if K == 0 else SHADOWED_WITH_GAP, "map", witness=y, gap=K,
                trace=[(i, e) for i, e in zip(idx_all, errs)], tail_error=tail, tol=tol, horizon=I,
                search_domain=_map_domain(system, len(pool), N),
                details={"candidate_index": c},
            )
    return ShadowVerdict(
        NOT_SHADOWED, "map", tol=tol, horizon=I,
        trace=[(c, K, e) for c, K, e in log],
        tail_error=min(e for _, _, e in log) if log else math.inf,
        search_domain=_map_domain(system, len(base) + (1 if is_shift else 0), N),
    )


def _map_domain(system, n_candidates: int, N: int) -> dict:
    space = system.space
    if isinstance(space, SubshiftSpace):
        desc = f"periodic words of period <= {space.period_bound} plus the coding point of the pseudo-orbit"
    else:
        desc = "all points of the finite space"
    return {"candidates": desc, "n_candidates": n_candidates, "gap_bound": N,
            "criterion": "last-quarter max <= tol and <= half the second-quarter max"}


# ---------------------------------------------------------------------------
# Flows: duration normalization and the suspension lift
# ---------------------------------------------------------------------------


def normalize_durations(fpo: FlowPseudoOrbit, flow) -> FlowPseudoOrbit:
    """Regroup entries so every duration lies in ``[2, 4)``.

    Short entries are merged with their successors (forward from index 0,
    backward from index -1); long ones are cut along their own orbit.  The
    star-evaluation changes only inside merged brackets, by at most the
    jumps that were absorbed.  A short group left over at either end is
    dropped, so the result may cover a slightly shorter time span.
    """

    def emit(x, total, out):
        if total >= 4:
            n = math.floor(total / 2)
            part = total / n
            out.extend((flow.eval(x, k * part), part) for k in range(n))
        else:
            out.append((x, total))

    def groups(indices):
        out: list = []
        current: list = []
        total = 0.0
        for i in indices:
            current.append(i)
            total += fpo.t(i)
            if total >= 2:
                out.append((current, total))
                current, total = [], 0.0
        return out

    fwd: list = []
    for idx, total in groups(range(0, fpo.last + 1)):
        emit(fpo.x(idx[0]), total, fwd)
    back: list = []
    for idx, total in groups(range(-1, fpo.first - 1, -1)):
        group: list = []
        emit(fpo.x(min(idx)), total, group)
        back = group + back
    entries = back + fwd
    return FlowPseudoOrbit(tuple(p for p, _ in entries), tuple(t for _, t in entries), -len(back), fpo.schedule)


@dataclass
class LiftData:
    M: int
    w: dict
    n: dict
    N: dict
    T: dict
    heights: dict
    base_po: MapPseudoOrbit
    alignment: float
    min_slope_numerator: float


def lift_construction(flow: SuspensionFlow, fpo: FlowPseudoOrbit, short_steps: str = "floor") -> LiftData:
    """The integers ``w_k, n_k, N_k`` and the derived base pseudo-orbit ``(y_i)``.

    For ``|k| < M`` any positive ``n_k`` works; ``short_steps="floor"`` uses
    ``w_k`` (no time compression near the origin, so gaps survive a round
    trip), ``"unit"`` uses 1.
    """
    if short_steps not in ("floor", "unit"):
        raise ValueError("short_steps must be 'floor' or 'unit'")
    first, last = fpo.first, fpo.last
    if any(not 2 <= t < 4 for t in fpo.durations):
        raise ShadowingError("durations must lie in [2, 4); normalize the pseudo-orbit first")
    f = flow.f
    sk = {k: fpo.x(k).height for k in fpo.indices()}
    w = {k: math.floor(sk[k] + fpo.t(k)) for k in fpo.indices()}
    jumps = dict(zip(range(first, last), fpo.jumps(flow)))
    bad = [abs(k) for k, j in jumps.items() if j >= 0.25]
    M = 1 + max(bad) if bad else 0
    if M > min(-first, last) // 2:
        raise ShadowingError(f"quarter-threshold index M={M} leaves no tail in the realized range")
    # height reached at the end of the last bracket stands in for s_{last+1}
    sk[last + 1] = sk[last] + fpo.t(last) - w[last]
    n = {}
    worst = 0.0
    for k in range(first, last):
        if abs(k) < M:
            n[k] = w[k] if short_steps == "floor" else 1
        else:
            _, c = near_level_decompose(sk[k], fpo.t(k), sk[k + 1], w[k])
            n[k] = w[k] + c
            worst = max(worst, abs(sk[k] + fpo.t(k) - n[k] - sk[k + 1]))
    n[last] = w[last]
    N = {0: 0}
    for k in range(0, last + 1):
        N[k + 1] = N[k] + n[k]
    for k in range(-1, first - 1, -1):
        N[k] = N[k + 1] - n[k]
    T = {k: fpo.s(k) for k in range(first, last + 2)}
    ys = []
    for k in range(first, last + 1):
        x = fpo.x(k).base
        for i in range(N[k], N[k + 1]):
            ys.append(f.power(x, i - N[k]))
    base_po = MapPseudoOrbit(tuple(ys), N[first])
    slope_num = min(sk[k + 1] + n[k] - sk[k] for k in range(first, last + 1))
    return LiftData(M, w, n, N, T, sk, base_po, worst, slope_num)


def lift_reparam(data: LiftData, first: int, last: int) -> Reparam:
    """Piecewise linear ``alpha`` with ``alpha(T_k) = s_k + N_k - s_0``."""
    s0 = data.heights[0]
    ts = [data.T[k] for k in range(first, last + 2)]
    vs = [data.heights[k] + data.N[k] - s0 for k in range(first, last + 2)]
    vs[-first] = 0.0
    return Reparam.piecewise_linear(ts, vs)


def flow_trace(flow, fpo: FlowPseudoOrbit, witness, h: Reparam, samples_per_bracket: int = 4) -> list:
    """Rows ``(t, k, d(phi_{h(t)}(witness), x_0 * t))`` on a grid inside every bracket."""
    rows = []
    for k in fpo.indices():
        xk, tk, Tk = fpo.x(k), fpo.t(k), fpo.s(k)
        for j in range(samples_per_bracket):
            t = Tk + j * tk / samples_per_bracket
            star = flow.eval(xk, t - Tk)
            rows.append((t, k, flow.distance(flow.eval(witness, h(t)), star)))
    return rows


def lift_shadow_to_suspension(flow: SuspensionFlow, fpo: FlowPseudoOrbit, N: int = 4, tol: float = 0.1,
                              samples_per_bracket: int = 4, base_verdict: ShadowVerdict | None = None,
                              short_steps: str = "floor") -> ShadowVerdict:
    """Shadow a suspension pseudo-orbit through the base map.

    Builds the derived base pseudo-orbit, shadows it by brute force (unless
    ``base_verdict`` is supplied), assembles the piecewise linear ``alpha``
    and, if the base shadowing has a gap, removes it from the flow
    reparametrization.  The returned verdict is gap-free when shadowed.
    """
    data = lift_construction(flow, fpo, short_steps)
    first, last = fpo.first, fpo.last
    if base_verdict is None:
        # the flow trace gets the full decay test below; the derived base
        # pseudo-orbit only needs a witness inside the tolerance
        base_verdict = map_tsls_gap_search(flow.system, data.base_po, N, tol, decay_evidence=False)
    if not base_verdict.shadowed:
        raise ShadowingError("derived base pseudo-orbit is not shadowed within the search domain")
    alpha = lift_reparam(data, first, last)
    K = base_verdict.gap
    h = remove_gap(alpha, K) if K else alpha
    witness = SuspensionPoint(base_verdict.witness, data.heights[0])
    trace = flow_trace(flow, fpo, witness, h, samples_per_bracket)
    I = min(-first, last)
    ok, tail, early = tail_verdict([k for _, k, _ in trace], [e for _, _, e in trace], I, tol)
    identities = {
        "M": data.M,
        "max_alignment_residual": data.alignment,
        "alignment_ok": data.alignment < 0.25,
        "min_slope_numerator": data.min_slope_numerator,
        "slopes_positive": data.min_slope_numerator > 0,
    }
    return ShadowVerdict(
        SHADOWED if ok else NOT_SHADOWED, "flow", witness=witness, reparam=h, gap=0,
        trace=trace, tail_error=tail, tol=tol, horizon=I,
        search_domain={"base": base_verdict.search_domain, "reparametrization": "constructed piecewise linear lift"},
        details={"base_gap": K, "base_tail_error": base_verdict.tail_error, "second_quarter_max": early,
                 "identities": identities, "n": [data.n[k] for k in range(first, last + 1)]},
    )


def shadow_flow_pseudo_orbit(flow: SuspensionFlow, fpo: FlowPseudoOrbit, N: int = 4, tol: float = 0.1,
                             samples_per_bracket: int = 4) -> ShadowVerdict:
    """Normalize durations if needed, then lift; failures become negative verdicts."""
    if any(not 2 <= t < 4 for t in fpo.durations):
        work = normalize_durations(fpo, flow)
    else:
        work = fpo
    try:
        verdict = lift_shadow_to_suspension(flow, work, N, tol, samples_per_bracket)
    except ShadowingError as exc:
        return ShadowVerdict(NOT_SHADOWED, "flow", tol=tol, horizon=min(-work.first, work.last),
                             search_domain={"reparametrization": "constructed piecewise linear lift"},
                             details={"reason": str(exc)})
    if work is not fpo:
        # brackets merged into the final group have no successor left to
        # steer the witness, so only that group's first bracket is scored
        lo, hi = work.s(work.first), work.s(work.last)
        covered = [k for k in fpo.indices() if fpo.s(k) >= lo - 1e-9 and fpo.s(k) <= hi + 1e-9]
        trimmed = FlowPseudoOrbit(tuple(fpo.x(k) for k in covered), tuple(fpo.t(k) for k in covered),
                                  covered[0], fpo.schedule)
        trace = flow_trace(flow, trimmed, verdict.witness, verdict.reparam, samples_per_bracket)
        I = min(-trimmed.first, trimmed.last)
        ok, tail, early = tail_verdict([k for _, k, _ in trace], [e for _, _, e in trace], I, tol)
        verdict.trace, verdict.tail_error, verdict.horizon = trace, tail, I
        verdict.status = SHADOWED if ok else NOT_SHADOWED
        verdict.details["normalized"] = True
        verdict.details["second_quarter_max"] = early
    return verdict


def project_shadow_to_base(flow: SuspensionFlow, suspension_verdict: ShadowVerdict, mpo: MapPseudoOrbit,
                           tol: float = 0.1, samples_per_step: int = 4) -> ShadowVerdict:
    """Recover base shadowing with a gap from a suspension verdict for ``((x_n, 1/2), 1)``.

    ``T`` is the last sampled time at which the flow error reaches 1/4;
    ``M = floor(T + 1)``, ``N1 = floor(h(M) + s)``, ``N2 = floor(h(-M) + s)``,
    witness ``f^{N2+M}(x)`` and gap ``N1 - 2M - N2``.
    """
    if not suspension_verdict.shadowed:
        raise ShadowingError("suspension verdict is not shadowed")
    system = flow.system
    f = flow.f
    h = suspension_verdict.reparam
    wit = suspension_verdict.witness
    x, s = wit.base, wit.height
    first, last = mpo.first, mpo.last
    far = 0.0
    for n in range(first, last + 1):
        p = flow.point(mpo.x(n), 0.5)
        for j in range(samples_per_step):
            t = n + j / samples_per_step
            if flow.distance(flow.eval(wit, h(t)), flow.eval(p, j / samples_per_step)) >= 0.25:
                far = max(far, abs(t), abs(n))
    M = math.floor(far + 1)
    if M >= min(-first, last):
        raise ShadowingError("flow errors never drop below 1/4 inside the realized range")
    N1 = math.floor(h(M) + s)
    N2 = math.floor(h(-M) + s)
    K = N1 - 2 * M - N2
    w = f.power(x, N2 + M)
    # only indices the suspension verdict actually covered are scored
    I = min(-first, last, suspension_verdict.horizon or last)
    idx = list(range(-I, I + 1))
    errs = map_errors(system, w, mpo, K, idx)
    ok, tail, early = tail_verdict(idx, errs, I, tol)
    status = (SHADOWED if K == 0 else SHADOWED_WITH_GAP) if ok else NOT_SHADOWED
    return ShadowVerdict(status, "map", witness=w, gap=K, trace=list(zip(idx, errs)), tail_error=tail,
                         tol=tol, horizon=I, search_domain={"source": "projection of a suspension verdict"},
                         details={"M": M, "N1": N1, "N2": N2})


# ---------------------------------------------------------------------------
# Finite shadowing, chain transitivity, transitivity
# ---------------------------------------------------------------------------


def suspension_candidates(flow, heights_step: float = 0.1) -> list[SuspensionPoint]:
    hs = np.arange(0.0, 1.0 - 1e-12, heights_step)
    return [flow.point(x, float(h)) for x in enumerate_candidates(flow.space) for h in hs]


def _random_finite_pseudo_orbit(flow, start, delta: float, L: int, rng, bases) -> FlowPseudoOrbit:
    pts = [start]
    ts = []
    for _ in range(L - 1):
        t = float(rng.uniform(1.0, 2.0))
        ts.append(t)
        q = flow.eval(pts[-1], t)
        shift = float(rng.uniform(-1, 1)) * delta
        moved = flow.eval(q, shift)
        if bases and rng.random() < 0.5:
            room = delta - abs(shift)
            near = [b for b in bases if b != moved.base and flow.level_metric(moved.base, b, moved.height) <= room]
            if near:
                moved = SuspensionPoint(near[int(rng.integers(len(near)))], moved.height)
        pts.append(moved)
    ts.append(1.0)
    return FlowPseudoOrbit(tuple(pts), tuple(ts), 0, ErrorSchedule("uniform", delta=delta))


def greedy_time_slide(flow, fpo: FlowPseudoOrbit, y, samples_per_bracket: int = 4, corrections: int = 41):
    """Track ``fpo`` from ``y`` with slopes in ``[1/2, 2]``, choosing each bracket's slope greedily.

    Returns ``(max_error, knots_t, knots_v)``.
    """
    q = y
    v = 0.0
    knots_t, knots_v = [0.0], [0.0]
    worst = 0.0
    for k in range(fpo.first, fpo.last):
        xk, tk, Tk = fpo.x(k), fpo.t(k), fpo.s(k)
        target = fpo.x(k + 1)
        cs = np.linspace(-tk / 2, tk, corrections)
        dists = [flow.distance(flow.eval(q, tk + c), target) for c in cs]
        c = float(cs[int(np.argmin(dists))])
        slope = (tk + c) / tk
        for j in range(samples_per_bracket + 1):
            tau = j * tk / samples_per_bracket
            e = flow.distance(flow.eval(q, slope * tau), flow.eval(xk, tau))
            worst = max(worst, e)
        q = flow.eval(q, tk + c)
        v += tk + c
        knots_t.append(Tk + tk)
        knots_v.append(v)
    e = flow.distance(q, fpo.x(fpo.last))
    return max(worst, e), knots_t, knots_v


def finite_shadowing_check(flow, eps_values: Sequence[float], deltas: Sequence[float] | None = None, L: int = 6,
                           n_samples: int = 8, seed: int = 0, heights_step: float = 0.1,
                           starts: Sequence | None = None) -> dict:
    """For each epsilon, the largest ladder delta whose sampled finite pseudo-orbits are all eps-shadowed.

    Shadowing is searched over candidate start points within ``eps`` of the
    pseudo-orbit's first point, with reparametrizations built by greedy time
    sliding (piecewise linear, slopes in ``[1/2, 2]``).
    """
    deltas = sorted(deltas or [2.0**-j for j in range(1, 9)], reverse=True)
    rng = np.random.default_rng(seed)
    cands = suspension_candidates(flow, heights_step)
    bases = list(enumerate_candidates(flow.space))
    report = {}
    for eps in eps_values:
        found = None
        tried = []
        for delta in deltas:
            all_ok = True
            worst = 0.0
            for _ in range(n_samples):
                pool = starts if starts is not None else cands
                start = pool[int(rng.integers(len(pool)))]
                po = _random_finite_pseudo_orbit(flow, start, delta, L, rng, bases)
                near = sorted((flow.distance(c, start), i) for i, c in enumerate(cands))
                ys = [start] + [cands[i] for d, i in near if d <= eps]
                best = math.inf
                for y in ys:
                    err, _, _ = greedy_time_slide(flow, po, y)
                    best = min(best, err)
                    if best <= eps:
                        break
                worst = max(worst, best)
                if best > eps:
                    all_ok = False
                    break
            tried.append({"delta": delta, "passed": all_ok, "worst_error": worst})
            if all_ok:
                found = delta
                break
        report[eps] = {"delta": found, "tried": tried}
    return report


def flow_limit_sample(flow, p, horizon: float, tol: float, kind: str = "omega", step: float = 0.25) -> list:
    """Tol-separated points of ``phi_t(p)`` for ``t`` in the second half of the horizon."""
    sign = 1 if kind == "omega" else -1
    reps: list = []
    for t in np.arange(horizon / 2, horizon + step / 2, step):
        q = flow.eval(p, sign * float(t))
        if all(flow.distance(q, r) > tol for r in reps):
            reps.append(q)
    return reps


def _forward_orbit_time(flow, x, y, reach: int) -> float | None:
    """A time ``tau >= 1`` with ``phi_tau(x) = y`` on a suspension, if any within ``reach``."""
    f = flow.f
    for n in range(0, reach + 1):
        if f.power(x.base, n) == y.base:
            tau = n + y.height - x.height
            if tau >= 1:
                return tau
    return None


def chain_transitivity_witness(flow: SuspensionFlow, x: SuspensionPoint, y: SuspensionPoint, eps: float,
                               horizon: float = 16.0, I: int = 16, N: int = 4) -> FlowPseudoOrbit:
    """A finite eps-pseudo-orbit from ``x`` to ``y`` built through two-sided limit shadowing.

    The orbit of ``x`` is followed into its omega-limit set, a shadowing
    orbit of the spliced pseudo-orbit (past in ``omega(x)``, future in
    ``alpha(y)``) carries it across, and the orbit of a point in ``alpha(y)``
    brings it to ``y``.  The last entry is ``y`` itself.
    """
    tau = _forward_orbit_time(flow, x, y, int(horizon))
    if tau is not None:
        return FlowPseudoOrbit((x, y), (tau, 1.0), 0, ErrorSchedule("uniform", delta=eps))
    z1 = flow.eval(x, horizon)
    z2 = flow.eval(y, -horizon)
    pts = [flow.eval(z2 if n >= 0 else z1, n) for n in range(-I, I + 1)]
    splice = FlowPseudoOrbit(tuple(pts), (1.0,) * (2 * I + 1), -I)
    verdict = shadow_flow_pseudo_orbit(flow, splice, N=N, tol=eps / 2)
    if not verdict.shadowed:
        raise ShadowingError(f"shadow search failed: {verdict.details.get('reason', verdict.status)}")
    z, h = verdict.witness, verdict.reparam
    rows = verdict.trace
    late = [abs(t) for t, _, e in rows if e >= eps / 2]
    T = max([1.0] + [t + 1.0 for t in late])
    while h(T) - h(-T) < 1:
        T += 1.0
    if T >= splice.s(splice.last):
        raise ShadowingError("sampling horizon exhausted before the shadowing error settled")
    start_mid = flow.eval(z, h(-T))
    end_mid = flow.eval(z, h(T))
    tx = _settle_time(flow, x, flow.eval(z1, -T), eps / 2, T, horizon, sign=1)
    ty = _settle_time(flow, y, flow.eval(z2, T), eps / 2, T, horizon, sign=-1)
    pts = (x, start_mid, flow.eval(y, -ty), y)
    ts = (tx, h(T) - h(-T), ty, 1.0)
    po = FlowPseudoOrbit(pts, ts, 0, ErrorSchedule("uniform", delta=eps))
    if any(j > eps for j in po.jumps(flow)[:2]):
        raise ShadowingError("constructed connector has a jump above eps")
    return po


def _settle_time(flow, anchor, target, radius: float, lo: float, horizon: float, sign: int, step: float = 1 / 64) -> float:
    """First ``t > lo`` with ``d(phi_{sign t}(anchor), target) < radius``."""
    t = lo + step
    while t <= lo + 4 * horizon:
        if flow.distance(flow.eval(anchor, sign * t), target) < radius:
            return t
        t += step
    raise ShadowingError("sampling horizon exhausted while returning to the limit set")


@dataclass
class ConnectorLibrary:
    """Finite eps-pseudo-orbits between anchor points, computed on demand."""

    flow: Any
    horizon: float = 16.0
    I: int = 16
    store: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def get(self, p, q, eps: float) -> FlowPseudoOrbit | None:
        key = (p, q, eps)
        if key not in self.store:
            try:
                po = chain_transitivity_witness(self.flow, p, q, eps, self.horizon, self.I)
            except ShadowingError as exc:
                po = None
                self.failures[key] = str(exc)
            self.store[key] = po
        return self.store[key]


def _net(flow, k: int) -> list[SuspensionPoint]:
    step = 2.0**-k
    return suspension_candidates(flow, step)


def transitivity_probe(flow: SuspensionFlow, max_k: int = 4, I: int = 16, orbit_horizon: float = 64.0,
                       library: ConnectorLibrary | None = None) -> dict:
    """Chain the nets at resolutions ``2^-1 .. 2^-max_k`` into a limit pseudo-orbit and test density.

    Returns a report with ``transitive`` (bool), a missing connector if one
    was needed but not found, and per-resolution density results for the
    shadowing point's forward orbit.
    """
    lib = library or ConnectorLibrary(flow, I=I)
    nets = [_net(flow, k) for k in range(1, max_k + 1)]
    segments = []
    deltas = []
    for k, net in enumerate(nets, start=1):
        eps = 2.0**-k
        chain = list(net)
        if k < max_k:
            chain.append(nets[k][0])
        for p, q in zip(chain, chain[1:]):
            con = lib.get(p, q, eps)
            if con is None:
                return {"transitive": False, "missing": {"from": p, "to": q, "eps": eps,
                                                         "reason": lib.failures.get((p, q, eps), "")},
                        "density": {}}
            segments.append(con)
            deltas.append(eps)
    if not segments:
        return {"transitive": True, "missing": None, "density": {}, "note": "single net point"}
    glued = concatenate(segments, [], deltas, flow)
    start = glued.x(0)
    past = [flow.eval(start, -n) for n in range(I, 0, -1)]
    two_sided = FlowPseudoOrbit(tuple(past) + glued.points, (1.0,) * I + glued.durations, -I)
    verdict = shadow_flow_pseudo_orbit(flow, two_sided, tol=0.5)
    if verdict.witness is None:
        return {"transitive": False, "missing": None, "density": {}, "reason": verdict.details.get("reason")}
    w = verdict.witness
    by_base: dict = {}
    for t in np.arange(0.0, orbit_horizon, 1 / 32):
        q = flow.eval(w, float(t))
        by_base.setdefault(q.base, []).append(q.height)
    density = {}
    for k, net in enumerate(nets, start=1):
        eps = 2.0**-k
        density[eps] = all(
            min(float(flow.bw_distance_many(q, b, hs).min()) for b, hs in by_base.items()) <= eps for q in net
        )
    return {"transitive": all(density.values()), "missing": None, "density": density,
            "witness": w, "pseudo_orbit_length": len(glued.points)}
