"""Singular suspension: the vertical flow slowed down to a fixed point ``e = (a, 1/2)``.

The base space is embedded in a Euclidean space (simplex vertices for
finite spaces, weighted coordinates for subshifts) and the vertical speed
is ``c(x, u)``, a smooth bump vanishing only at ``e`` and equal to 1
outside the ball of radius 1/4 around it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp

from .base_space import FinitePointSpace, MetricSystem, SubshiftSpace, Word, enumerate_candidates
from .pseudo_orbit import ErrorSchedule, FlowPseudoOrbit
from .shadowing import NOT_SHADOWED, SHADOWED, ShadowVerdict, shadow_flow_pseudo_orbit
from .suspension import SuspensionFlow, SuspensionPoint, canonical

RADIUS = 0.25


class SingularError(ValueError):
    pass


def bump_speed(r2: float) -> float:
    """``1 - exp(1 - 1/(1 - 16 r^2))`` inside the ball, 1 outside; about ``16 r^2`` near 0."""
    if r2 >= RADIUS * RADIUS:
        return 1.0
    return -math.expm1(1.0 - 1.0 / (1.0 - 16.0 * r2))


class Embedding:
    """Euclidean coordinates for base points."""

    def __init__(self, space):
        self.space = space
        if isinstance(space, FinitePointSpace):
            self.kind = "simplex"
        elif isinstance(space, SubshiftSpace):
            self.kind = "weighted"
            self.window = space.window
            self.weights = np.array([2.0 ** (-abs(i) - 1) for i in range(-space.window, space.window + 1)])
            self.values = {a: float(v) for v, a in enumerate(space.alphabet)}
        else:
            raise SingularError("no embedding for this space")

    def coords(self, x) -> np.ndarray:
        if self.kind == "simplex":
            v = np.zeros(len(self.space.points))
            v[self.space.index(x)] = 1.0 / math.sqrt(2.0)
            return v
        syms = x.symbols(-self.window, self.window)
        return self.weights * np.array([self.values[s] for s in syms])

    def sqdist(self, x, y) -> float:
        d = self.coords(x) - self.coords(y)
        return float(d @ d)


@dataclass
class BumpProfile:
    """Speed profile around ``e = (a, 1/2)``."""

    a: Any
    embedding: Embedding
    radius: float = RADIUS
    _rho2: dict = field(default_factory=dict, repr=False)

    def rho2(self, x) -> float:
        """Squared horizontal distance from the column of ``x`` to the column of ``a``."""
        if x not in self._rho2:
            self._rho2[x] = self.embedding.sqdist(x, self.a)
        return self._rho2[x]

    def c(self, x, u: float) -> float:
        return bump_speed(self.rho2(x) + (u - 0.5) ** 2)

    def slow_band(self, x) -> tuple[float, float] | None:
        """Heights of the column of ``x`` inside the ball, or None if it misses it."""
        r2 = self.rho2(x)
        if r2 >= self.radius**2:
            return None
        w = math.sqrt(self.radius**2 - r2)
        return 0.5 - w, 0.5 + w

    def modulus(self, n: int = 2001) -> float:
        """Largest slope of ``c`` along a column through ``e`` on a grid."""
        us = np.linspace(0.0, 1.0, n)
        cs = np.array([bump_speed((u - 0.5) ** 2) for u in us])
        return float(np.max(np.abs(np.diff(cs)) / np.diff(us)))


class SingularFlow:
    """Singular suspension of ``system`` with fixed point ``(a, 1/2)``.

    ``eval`` follows ``du/ds = c(x, u)`` column by column: unit-speed parts
    are exact, full crossings of the slow band use quadrature and partial
    crossings an adaptive Runge-Kutta solve.  Distances are those of the
    plain suspension space.
    """

    def __init__(self, system: MetricSystem, a, rtol: float = 1e-10, atol: float = 1e-12,
                 clamp: float = 1e-6, depth: int = 4):
        if a not in system.space:
            raise SingularError("singular point must lie in the base space")
        self.system = system
        self.f = system.f
        self.a = a
        self.profile = BumpProfile(a, Embedding(system.space))
        self.plain = SuspensionFlow(system, depth)
        self.rtol, self.atol, self.clamp = rtol, atol, clamp
        self.e = SuspensionPoint(a, 0.5)
        self.last_near_fixed = False
        self._cross = {}

    @property
    def space(self):
        return self.system.space

    def point(self, x, s: float = 0.0) -> SuspensionPoint:
        return self.plain.point(x, s)

    def distance(self, p, q) -> float:
        return self.plain.distance(p, q)

    def speed(self, p: SuspensionPoint) -> float:
        return self.profile.c(p.base, p.height)

    def _band_time(self, x, u0: float, u1: float) -> float:
        """``int_{u0}^{u1} du / c(x, u)``, reflected so that ``u0 <= u1``."""
        if u1 <= u0:
            return 0.0
        r2 = self.profile.rho2(x)
        if r2 == 0.0 and u0 < 0.5 < u1 or (r2 == 0.0 and (u0 == 0.5 or u1 == 0.5)):
            return math.inf
        key = (x, u0, u1)
        if key not in self._cross:
            val, _ = quad(lambda u: 1.0 / bump_speed(r2 + (u - 0.5) ** 2), u0, u1,
                          epsabs=1e-11, epsrel=1e-11, limit=400, points=[0.5] if u0 < 0.5 < u1 else None)
            self._cross[key] = val
        return self._cross[key]

    def _ode(self, x, u: float, t: float) -> float:
        r2 = self.profile.rho2(x)
        sol = solve_ivp(lambda s, y: [bump_speed(r2 + (y[0] - 0.5) ** 2)], (0.0, t), [u], method="RK45",
                        rtol=self.rtol, atol=self.atol)
        return float(sol.y[0, -1])

    def _forward(self, x, v: float, t: float, step, mirrored: bool):
        """Advance height ``v`` in column ``x`` for time ``t``; ``step`` moves to the next column.

        In mirrored mode the column coordinate is ``1 - u``; ``c`` is
        symmetric about 1/2 so the same integration applies.
        """
        remaining = t
        while True:
            band = self.profile.slow_band(x)
            if band is None:
                if v + remaining < 1.0:
                    return x, v + remaining
                remaining -= 1.0 - v
                x, v = step(x), 0.0
                continue
            lo, hi = band
            if v < lo:
                if v + remaining < lo:
                    return x, v + remaining
                remaining -= lo - v
                v = lo
            if v < hi:
                r2 = self.profile.rho2(x)
                if r2 + (v - 0.5) ** 2 < self.clamp**2:
                    self.last_near_fixed = True
                    return x, v
                cross = self._band_time(x, v, hi)
                if cross > remaining:
                    out = self._ode(x, v, remaining)
                    if r2 == 0.0 and v < 0.5:
                        out = min(out, 0.5 - 1e-15)
                    return x, out
                remaining -= cross
                v = hi
            if v + remaining < 1.0:
                return x, v + remaining
            remaining -= 1.0 - v
            x, v = step(x), 0.0

    def eval(self, p: SuspensionPoint, t: float) -> SuspensionPoint:
        """``phi_t(p)`` for the singular flow; ``e`` is stationary."""
        self.last_near_fixed = False
        if t == 0 or p == self.e:
            return p
        if t > 0:
            x, v = self._forward(p.base, p.height, float(t), self.f.forward, False)
            return canonical(self.f, x, v)
        # backward: mirror heights so the column is traversed upward
        x, v = p.base, 1.0 - p.height
        if v >= 1.0:
            x, v = self.f.backward(x), 0.0
        x, v = self._forward(x, v, float(-t), self.f.backward, True)
        return canonical(self.f, x, 1.0 - v)

    def eval_flagged(self, p: SuspensionPoint, t: float) -> tuple[SuspensionPoint, bool]:
        q = self.eval(p, t)
        return q, self.last_near_fixed

    def time_of_flight(self, p: SuspensionPoint, q: SuspensionPoint, max_columns: int = 64) -> float:
        """Time for the orbit of ``p`` to reach ``q`` moving forward through at most ``max_columns`` columns."""
        x, u = p.base, p.height
        total = 0.0
        for _ in range(max_columns + 1):
            if x == q.base and q.height >= u:
                return total + self._column_time(x, u, q.height)
            total += self._column_time(x, u, 1.0)
            if math.isinf(total):
                break
            x, u = self.f.forward(x), 0.0
        raise SingularError("target not reached along the forward orbit")

    def _column_time(self, x, u0: float, u1: float) -> float:
        band = self.profile.slow_band(x)
        if band is None:
            return u1 - u0
        lo, hi = band
        a, b = max(u0, lo), min(u1, hi)
        slow = self._band_time(x, a, b) if a < b else 0.0
        return (u1 - u0) - max(0.0, b - a) + slow


def beta(flow: SingularFlow, x) -> float:
    """Time from ``(x, 1/2)`` to ``(f(x), 1/2)``."""
    fx = flow.f.forward(x)
    if x == flow.a or fx == flow.a:
        raise SingularError("return time undefined when the path meets the fixed point")
    return flow._column_time(x, 0.5, 1.0) + flow._column_time(fx, 0.0, 0.5)


def beta_profile(flow: SingularFlow, points: Sequence) -> list[tuple[Any, float]]:
    return [(x, beta(flow, x)) for x in points]


def approach_sequence(flow: SingularFlow, n: int | None = None) -> list:
    """Base points converging to ``a``: for words, ``a`` with one symbol changed at growing distance."""
    space = flow.space
    if not isinstance(space, SubshiftSpace):
        raise SingularError("the singular point is isolated in a finite space")
    n = space.window if n is None else n
    a = flow.a
    out = []
    for k in range(1, n + 1):
        core = list(a.symbols(-k, k + 1))
        core[2 * k] = next(s for s in space.alphabet if s != core[2 * k])
        w = Word(tuple(a[i] for i in range(-k - len(a.left), -k)), core, -k, tuple(a[i] for i in range(k + 1, k + 1 + len(a.right))))
        if space.is_admissible(w):
            out.append(w)
    return out


# ---------------------------------------------------------------------------
# Stable and unstable sets
# ---------------------------------------------------------------------------


def stable_unstable_probe(flow: SingularFlow, horizon: float = 200.0, tol: float = 0.05,
                          heights: Sequence[float] | None = None, candidates: Sequence | None = None) -> dict:
    """Classify grid points by whether they approach ``e`` forward, backward, both or neither."""
    hs = np.arange(0.05, 1.0, 0.1) if heights is None else heights
    pts = list(candidates) if candidates is not None else [
        flow.point(x, float(h)) for x in enumerate_candidates(flow.space) for h in hs
    ]
    pts.append(flow.e)
    stable, unstable, neither = [], [], []
    for p in pts:
        fw = flow.distance(flow.eval(p, horizon), flow.e) < tol
        bw = flow.distance(flow.eval(p, -horizon), flow.e) < tol
        if fw:
            stable.append(p)
        if bw:
            unstable.append(p)
        if not fw and not bw:
            neither.append(p)
    return {
        "stable": stable,
        "unstable": unstable,
        "neither": neither,
        "stable_single_orbit": _one_orbit(flow, [p for p in stable if p != flow.e]),
        "unstable_single_orbit": _one_orbit(flow, [p for p in unstable if p != flow.e]),
    }


def _one_orbit(flow: SingularFlow, pts: list, reach: int = 16) -> bool:
    if not pts:
        return True
    p0 = pts[0]
    for q in pts[1:]:
        if not any(flow.f.power(p0.base, n) == q.base for n in range(-reach, reach + 1)):
            return False
    return True


# ---------------------------------------------------------------------------
# The turn pseudo-orbit and the non-shadowing demonstration
# ---------------------------------------------------------------------------


def turn_offsets(I: int) -> dict[int, float]:
    """Distance from ``e`` of the turn points: ``1/(16(1+|n|))``."""
    return {n: 1.0 / (16.0 * (1 + abs(n))) for n in range(-I, I + 2)}


def _loop_period(flow, a, cap: int = 64) -> int:
    f = flow.f
    x = f.forward(a)
    for p in range(1, cap + 1):
        if x == a:
            return p
        x = f.forward(x)
    raise SingularError("singular point is not periodic; no homoclinic loop to turn along")


def turn_pseudo_orbit(flow, I: int = 16, loops: int | None = None) -> FlowPseudoOrbit:
    """Turns around the loop through ``e``: start just above ``e``, return just below, jump across.

    ``x_n = (a, 1/2 + eta_n)`` and ``t_n`` is the flight time to
    ``(a, 1/2 - eta_{n+1})``; the jump is ``eta_n + eta_{n+1}`` vertically.
    ``flow`` may be singular or plain; for the plain flow the number of
    loops is raised until durations are at least 1.
    """
    a = flow.a if isinstance(flow, SingularFlow) else None
    if a is None:
        raise SingularError("use plain_turn_pseudo_orbit for plain suspensions")
    p = _loop_period(flow, a)
    eta = turn_offsets(I)
    pts, ts = [], []
    for n in range(-I, I + 1):
        start = SuspensionPoint(a, 0.5 + eta[n])
        end = SuspensionPoint(a, 0.5 - eta[n + 1])
        t = flow.time_of_flight(start, end, max_columns=p)
        pts.append(start)
        ts.append(t)
    return FlowPseudoOrbit(tuple(pts), tuple(ts), -I, ErrorSchedule("limit"))


def plain_turn_pseudo_orbit(plain: SuspensionFlow, a, I: int = 16) -> FlowPseudoOrbit:
    """The same turns against the unit-speed suspension, looping enough times that ``t_n >= 1``."""
    f = plain.f
    p = 1
    x = f.forward(a)
    while x != a:
        x = f.forward(x)
        p += 1
    eta = turn_offsets(I)
    pts, ts = [], []
    for n in range(-I, I + 1):
        t = p - eta[n] - eta[n + 1]
        if t < 1:
            t += p * math.ceil((1 - t) / p)
        pts.append(SuspensionPoint(a, 0.5 + eta[n]))
        ts.append(t)
    return FlowPseudoOrbit(tuple(pts), tuple(ts), -I, ErrorSchedule("limit"))


@dataclass
class OrbitSketch:
    """Positions visited by an orbit, in order: a prefix then either a repeating cycle or a terminal point."""

    prefix: list
    cycle: list
    terminal: Any = None


def _column_positions(x, lo: float, hi: float, grid: np.ndarray, reverse: bool) -> list:
    hs = [h for h in grid if lo <= h < hi]
    if reverse:
        hs = hs[::-1]
    return [SuspensionPoint(x, float(h)) for h in hs]


def orbit_sketch(flow: SingularFlow, z: SuspensionPoint, forward: bool, back_columns: int, grid: np.ndarray,
                 cap: int = 64) -> OrbitSketch:
    """Grid positions along the forward (or backward) singular orbit of ``z``.

    The sketch starts up to ``back_columns`` columns behind ``z`` so that
    every reparametrization and every gap of that many time units is
    covered; a column is traversed at speed at most 1.
    """
    f = flow.f
    a = flow.a
    if z == flow.e:
        return OrbitSketch([], [], flow.e)
    ahead, behind = (f.forward, f.backward) if forward else (f.backward, f.forward)
    bottom = 0.0 if forward else 1.0
    x, u = z.base, z.height
    for _ in range(back_columns):
        # the orbit cannot be followed back through the fixed point
        if x == a and (u > 0.5 if forward else u < 0.5):
            u = 0.5 + 1e-9 if forward else 0.5 - 1e-9
            break
        x, u = behind(x), bottom
    prefix: list = []
    starts: dict = {}
    for _ in range(cap):
        at_start = u == bottom
        if at_start and x in starts and x != a:
            i = starts[x]
            return OrbitSketch(prefix[:i], prefix[i:], None)
        if at_start:
            starts[x] = len(prefix)
        if x == a and (u < 0.5 if forward else u > 0.5):
            if forward:
                prefix += _column_positions(x, u, 0.5, grid, False)
            else:
                prefix += _column_positions(x, 0.5 + 1e-12, u + 1e-12, grid, True)
            return OrbitSketch(prefix, [], flow.e)
        if forward:
            prefix += _column_positions(x, u, 1.0, grid, False)
        else:
            prefix += _column_positions(x, 0.0, u + 1e-12, grid, True)
        x, u = ahead(x), bottom
    raise SingularError("orbit sketch did not close up within the column cap")


def _turn_samples(flow: SingularFlow, n_lo: int, n_hi: int, eta: dict, grid: np.ndarray, forward: bool) -> list:
    """Grid positions visited by the star along turns ``n_lo .. n_hi`` in time order (reversed for the past)."""
    f = flow.f
    a = flow.a
    out: list = []
    for n in range(n_lo, n_hi + 1):
        turn = [SuspensionPoint(a, 0.5 + eta[n])]
        turn += _column_positions(a, 0.5 + eta[n], 1.0, grid, False)
        x = f.forward(a)
        while x != a:
            turn += _column_positions(x, 0.0, 1.0, grid, False)
            x = f.forward(x)
        turn += _column_positions(a, 0.0, 0.5 - eta[n + 1], grid, False)
        turn.append(SuspensionPoint(a, 0.5 - eta[n + 1]))
        out += turn
    return out if forward else out[::-1]


def _alignment_floor(dist_rows: np.ndarray, sketch_len: tuple[int, int, bool], resolution: float) -> float:
    """Largest ``thr`` such that no monotone alignment keeps every sample within ``thr + resolution/2``.

    ``dist_rows[j, k]`` is the distance from star sample ``j`` to sketch
    position ``k``; positions ``[0, n_prefix)`` are the prefix, the next
    ``n_cycle`` repeat forever, and a terminal point (if any) is the last
    column and repeats forever.
    """
    n_prefix, n_cycle, has_terminal = sketch_len

    def feasible(thr: float) -> bool:
        ok = dist_rows < thr + resolution / 2
        pos = 0
        total = dist_rows.shape[1]
        for j in range(ok.shape[0]):
            row = ok[j]
            k = pos
            found = False
            # scan prefix, then at most one full cycle, then the terminal
            while True:
                if k < n_prefix:
                    if row[k]:
                        found = True
                        break
                    k += 1
                    continue
                if n_cycle:
                    rel = k - n_prefix
                    for step in range(n_cycle):
                        kk = n_prefix + (rel + step) % n_cycle
                        if row[kk]:
                            found = True
                            k = n_prefix + rel + step
                            break
                    if found:
                        break
                    break
                if has_terminal and row[total - 1]:
                    found = True
                    k = total - 1
                break
            if not found:
                return False
            pos = k
        return True

    if feasible(0.0):
        return 0.0
    lo, hi = 0.0, float(dist_rows.max()) + 1.0
    if not feasible(hi):
        return hi
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return lo


def _distance_rows(flow: SingularFlow, samples: list, positions: list) -> np.ndarray:
    plain = flow.plain
    cols: dict = {}
    for k, q in enumerate(positions):
        cols.setdefault(q.base, []).append(k)
    rows = np.empty((len(samples), len(positions)))
    for j, p in enumerate(samples):
        for base, ks in cols.items():
            rows[j, ks] = plain.bw_distance_many(p, base, [positions[k].height for k in ks])
    return rows


def orbit_candidates(flow: SingularFlow, heights: Sequence[float] = (0.25, 0.75)) -> list[SuspensionPoint]:
    """One representative per orbit class: ``e``, points on the singular column, and periodic orbits."""
    out = [flow.e]
    seen = set()
    for x in enumerate_candidates(flow.space):
        orbit = set()
        y = x
        for _ in range(128):
            orbit.add(y)
            y = flow.f.forward(y)
            if y == x:
                break
        key = frozenset(orbit)
        if x == flow.a or flow.a in orbit:
            for h in heights:
                out.append(SuspensionPoint(x, h))
            continue
        if key in seen:
            continue
        seen.add(key)
        out.append(SuspensionPoint(x, 0.0))
    return out


def singular_nonshadowing_demo(flow: SingularFlow, I: int = 16, tol: float = 0.1, N: int = 4,
                               resolution: float = 1 / 64, control: bool = True) -> ShadowVerdict:
    """Check that no orbit in the candidate domain shadows the turn pseudo-orbit.

    For every candidate the future (past) tail of the turn pseudo-orbit is
    matched against the candidate's forward (backward) orbit by monotone
    alignment of grid positions, which covers every reparametrization and
    every gap up to ``N``.  The floor error of a candidate is the largest
    threshold at which no alignment exists; it bounds from below the tail
    error of any reparametrized orbit of that candidate.
    """
    fpo = turn_pseudo_orbit(flow, I)
    eta = turn_offsets(I)
    grid = np.arange(0.0, 1.0, resolution)
    tail_lo = math.ceil(3 * I / 4)
    fut = _turn_samples(flow, tail_lo, I, eta, grid, True)
    past = _turn_samples(flow, -I, -tail_lo, eta, grid, False)
    floors = []
    for z in orbit_candidates(flow):
        worst = 0.0
        for samples, forward in ((fut, True), (past, False)):
            sk = orbit_sketch(flow, z, forward, N, grid)
            positions = sk.prefix + sk.cycle + ([sk.terminal] if sk.terminal is not None else [])
            rows = _distance_rows(flow, samples, positions)
            fl = _alignment_floor(rows, (len(sk.prefix), len(sk.cycle), sk.terminal is not None), resolution)
            worst = max(worst, fl)
        floors.append((z, worst))
    min_floor = min(f for _, f in floors)
    details: dict = {
        "floors": [[_point_json(flow, z), f] for z, f in floors],
        "min_floor": min_floor,
        "turns": 2 * I + 1,
        "max_jump_ratio": max(j / fpo.schedule.bound(i) for i, j in zip(fpo.indices(), fpo.jumps(flow))),
        "min_duration": min(fpo.durations),
        "scope": "certifies failure only within the declared candidate domain and tolerance",
    }
    if control:
        plain_po = plain_turn_pseudo_orbit(flow.plain, flow.a, I)
        ctrl = shadow_flow_pseudo_orbit(flow.plain, plain_po, N=N, tol=tol)
        details["control"] = {"status": ctrl.status, "tail_error": ctrl.tail_error}
    status = NOT_SHADOWED if min_floor > tol else SHADOWED
    return ShadowVerdict(
        status, "flow", tol=tol, horizon=I, tail_error=min_floor,
        trace=[(i, f) for i, (_, f) in enumerate(floors)],
        search_domain={"candidates": "fixed point, singular-column points and one point per periodic orbit "
                                     f"of period <= bound", "gap_bound": N,
                       "reparametrizations": "all monotone alignments of grid positions",
                       "resolution": resolution},
        details=details,
    )


def _point_json(flow, p: SuspensionPoint):
    return {"base": flow.space.point_to_json(p.base), "height": p.height}
