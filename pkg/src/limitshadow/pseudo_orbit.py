"""Pseudo-orbits of maps and flows.

A flow pseudo-orbit is a finite window ``first .. last`` of a two-sided
sequence of pairs ``(x_i, t_i)``.  Index 0 must lie in the window (or be the
index just past it) so that the sums sequence is anchored at ``s_0 = 0``.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .base_space import FinitePointSpace, SubshiftSpace, Word
from .suspension import SuspensionFlow, SuspensionPoint, canonical


class PseudoOrbitError(ValueError):
    pass


@dataclass(frozen=True)
class ErrorSchedule:
    """Declared bound on the jump at index ``i``.

    ``limit``: ``C / (1 + |i|)``; ``uniform``: ``delta``; ``exact``: 0;
    ``listed``: ``values[i - first]``.
    """

    kind: str = "limit"
    C: float = 1.0
    delta: float = 0.0
    values: tuple = ()
    first: int = 0

    def __post_init__(self):
        if self.kind not in ("limit", "uniform", "exact", "listed"):
            raise PseudoOrbitError(f"unknown schedule kind {self.kind!r}")

    def bound(self, i: int) -> float:
        if self.kind == "limit":
            return self.C / (1 + abs(i))
        if self.kind == "uniform":
            return self.delta
        if self.kind == "exact":
            return 0.0
        return self.values[i - self.first]

    def to_json(self) -> dict:
        out = {"kind": self.kind, "C": self.C, "delta": self.delta}
        if self.kind == "listed":
            out["values"] = list(self.values)
            out["first"] = self.first
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ErrorSchedule":
        return cls(obj["kind"], float(obj.get("C", 1.0)), float(obj.get("delta", 0.0)),
                   tuple(obj.get("values", ())), int(obj.get("first", 0)))


def sums_of(durations: Sequence[float], first: int) -> np.ndarray:
    """Sums ``s_i`` for ``i = first .. first + len(durations)``, with ``s_0 = 0``."""
    n = len(durations)
    if not first <= 0 <= first + n:
        raise PseudoOrbitError("index 0 must lie in the realized range")
    s = np.zeros(n + 1)
    zero = -first
    for k in range(zero, n):
        s[k + 1] = s[k] + durations[k]
    for k in range(zero - 1, -1, -1):
        s[k] = s[k + 1] - durations[k]
    return s


@dataclass(frozen=True)
class FlowPseudoOrbit:
    points: tuple
    durations: tuple
    first: int = 0
    schedule: ErrorSchedule = field(default_factory=lambda: ErrorSchedule("limit"))

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "durations", tuple(float(t) for t in self.durations))
        if len(self.points) != len(self.durations):
            raise PseudoOrbitError("need one duration per point")
        if any(t < 1 for t in self.durations):
            raise PseudoOrbitError("durations must be at least 1")
        object.__setattr__(self, "_sums", sums_of(self.durations, self.first))

    @property
    def last(self) -> int:
        return self.first + len(self.points) - 1

    def indices(self) -> range:
        return range(self.first, self.last + 1)

    def x(self, i: int):
        return self.points[i - self.first]

    def t(self, i: int) -> float:
        return self.durations[i - self.first]

    def s(self, i: int) -> float:
        """``s_i`` for ``first <= i <= last + 1``."""
        return float(self._sums[i - self.first])

    def sums(self) -> np.ndarray:
        return self._sums.copy()

    def bracket(self, t: float) -> int:
        """The index ``i`` with ``s_i <= t < s_{i+1}``."""
        s = self._sums
        if not s[0] <= t < s[-1]:
            raise PseudoOrbitError(f"time {t} outside realized range [{s[0]}, {s[-1]})")
        return self.first + bisect.bisect_right(s.tolist(), t) - 1

    def star(self, flow, t: float):
        """``x_0 * t = phi_{t - s_i}(x_i)`` for the bracketing index ``i``."""
        i = self.bracket(t)
        return flow.eval(self.x(i), t - self.s(i))

    def jumps(self, flow) -> list[float]:
        """``d(phi_{t_i}(x_i), x_{i+1})`` for ``first <= i < last``."""
        return [flow.distance(flow.eval(self.x(i), self.t(i)), self.x(i + 1)) for i in range(self.first, self.last)]

    def conforms(self, flow, slack: float = 1e-12) -> bool:
        return all(j <= self.schedule.bound(i) + slack for i, j in zip(range(self.first, self.last), self.jumps(flow)))

    def to_json(self, space) -> dict:
        return {
            "type": "flow",
            "first": self.first,
            "points": [p.to_json(space) if isinstance(p, SuspensionPoint) else p for p in self.points],
            "durations": list(self.durations),
            "schedule": self.schedule.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict, space) -> "FlowPseudoOrbit":
        pts = []
        for p in obj["points"]:
            if isinstance(p, dict) and "height" in p:
                pts.append(SuspensionPoint(space.point_from_json(p["base"]), float(p["height"])))
            else:
                pts.append(p)
        return cls(tuple(pts), tuple(obj["durations"]), int(obj["first"]),
                   ErrorSchedule.from_json(obj.get("schedule", {"kind": "limit"})))

    def to_csv(self, flow, space) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "x", "height", "t", "s", "jump_error"])
        jumps = self.jumps(flow) + [float("nan")]
        for k, i in enumerate(self.indices()):
            p = self.x(i)
            base = space.point_to_json(p.base) if isinstance(p, SuspensionPoint) else p
            height = p.height if isinstance(p, SuspensionPoint) else ""
            w.writerow([i, base, height, self.t(i), self.s(i), jumps[k]])
        return buf.getvalue()

    def window(self, lo: int, hi: int) -> "FlowPseudoOrbit":
        """Entries ``lo..hi`` re-indexed so that ``lo`` becomes index 0."""
        pts = [self.x(i) for i in range(lo, hi + 1)]
        ts = [self.t(i) for i in range(lo, hi + 1)]
        return FlowPseudoOrbit(tuple(pts), tuple(ts), 0, self.schedule)


@dataclass(frozen=True)
class MapPseudoOrbit:
    points: tuple
    first: int = 0

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def last(self) -> int:
        return self.first + len(self.points) - 1

    def indices(self) -> range:
        return range(self.first, self.last + 1)

    def x(self, i: int):
        return self.points[i - self.first]

    def jumps(self, system) -> list[float]:
        f = system.f
        return [system.distance(f(self.x(i)), self.x(i + 1)) for i in range(self.first, self.last)]

    def to_json(self, space) -> dict:
        return {"type": "map", "first": self.first, "points": [space.point_to_json(p) for p in self.points]}

    @classmethod
    def from_json(cls, obj: dict, space) -> "MapPseudoOrbit":
        return cls(tuple(space.point_from_json(p) for p in obj["points"]), int(obj["first"]))


def pseudo_orbit_from_json(obj: dict, space):
    if obj.get("type") == "map":
        return MapPseudoOrbit.from_json(obj, space)
    return FlowPseudoOrbit.from_json(obj, space)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _flip_far_symbols(space: SubshiftSpace, w: Word, m: int, rng) -> Word:
    """Change the symbol at index ``m`` (and maybe ``-m``) keeping admissibility."""
    for positions in ([m, -m], [m]) if rng.random() < 0.5 else ([m],):
        lo, hi = -m - 1, m + 1
        core = list(w.symbols(lo, hi))
        for pos in positions:
            choices = [a for a in space.alphabet if a != w[pos]]
            core[pos - lo] = choices[int(rng.integers(len(choices)))]
        new = _with_window(w, lo, core)
        if space.is_admissible(new):
            return new
    return w


def _with_window(w: Word, lo: int, core: list) -> Word:
    """``w`` with indices ``lo .. lo+len(core)-1`` replaced by ``core``."""
    hi = lo + len(core)
    a = min(lo, w.start) - len(w.left)
    b = max(hi, w.start + len(w.core)) + len(w.right)
    seq = [w[i] for i in range(a, lo)] + list(core) + [w[i] for i in range(hi, b)]
    left = tuple(w[i] for i in range(a - len(w.left), a))
    right = tuple(w[i] for i in range(b, b + len(w.right)))
    return Word(left, seq, a, right)


def _perturb(flow: SuspensionFlow, q: SuspensionPoint, bound: float, rng) -> SuspensionPoint:
    if bound <= 0:
        return q
    space = flow.space
    # shift height first so that a seam crossing cannot move the flipped
    # symbol one place closer to the origin
    delta = (1 if rng.random() < 0.5 else -1) * rng.uniform(0.8, 1.0) * bound / 4
    moved = canonical(flow.f, q.base, q.height + delta)
    base = moved.base
    if isinstance(space, SubshiftSpace):
        m = max(1, math.ceil(-math.log2(bound / 16)))
        base = _flip_far_symbols(space, base, m, rng)
    elif isinstance(space, FinitePointSpace):
        near = [w for w in space.points if w != base and flow.level_metric(base, w, moved.height) <= bound / 2]
        if near and rng.random() < 0.5:
            base = near[int(rng.integers(len(near)))]
    return SuspensionPoint(base, moved.height)


def generate_limit_pseudo_orbit(flow: SuspensionFlow, seeds: Sequence, schedule: ErrorSchedule, I: int = 64,
                                seed: int = 0, durations: tuple[float, float] = (2.0, 4.0),
                                perturb: bool = True, height: float | None = None) -> FlowPseudoOrbit:
    """A two-sided pseudo-orbit on ``[-I, I]`` conforming to ``schedule``.

    The past (indices ``<= 0``) follows the suspension orbit of ``seeds[0]``,
    the future that of ``seeds[-1]``; with two seeds the splice jump sits at
    index 0.  With ``perturb`` every other jump is a random perturbation of
    size within the schedule: far symbol flips for subshifts, small height
    shifts everywhere.  Finite spaces whose points are too far apart for the
    bound get exact jumps in the base.
    """
    if len(seeds) not in (1, 2):
        raise PseudoOrbitError("need one or two seed points")
    if schedule.kind == "exact":
        perturb = False
    rng = np.random.default_rng(seed)
    lo, hi = durations
    if lo < 1:
        raise PseudoOrbitError("durations must be at least 1")
    ts = rng.uniform(lo, hi, size=2 * I + 1) if hi > lo else np.full(2 * I + 1, lo)
    ts = tuple(float(t) for t in ts)
    h0 = float(rng.uniform(0.05, 0.95)) if height is None else height
    pts: dict[int, SuspensionPoint] = {0: flow.point(seeds[0], h0)}

    def tt(i):
        return ts[i + I]

    def bump(q, i):
        return _perturb(flow, q, schedule.bound(i), rng) if perturb else q

    for i in range(-1, -I - 1, -1):
        pts[i] = flow.eval(bump(pts[i + 1], i), -tt(i))
    nxt = flow.eval(pts[0], tt(0))
    if len(seeds) == 2:
        pts[1] = flow.point(seeds[1], nxt.height)
    else:
        pts[1] = bump(nxt, 0)
    for i in range(1, I):
        pts[i + 1] = bump(flow.eval(pts[i], tt(i)), i)
    po = FlowPseudoOrbit(tuple(pts[i] for i in range(-I, I + 1)), ts, -I, schedule)
    if not po.conforms(flow):
        worst = max((j - schedule.bound(i), i) for i, j in zip(range(-I, I), po.jumps(flow)))
        raise PseudoOrbitError(f"generated jump at index {worst[1]} exceeds its bound by {worst[0]:.3g}")
    return po


def exact_orbit(flow, p, I: int, duration: float = 2.0) -> FlowPseudoOrbit:
    """The true orbit of ``p`` cut into pieces of equal duration."""
    pts = [flow.eval(p, i * duration) for i in range(-I, I + 1)]
    return FlowPseudoOrbit(tuple(pts), (duration,) * (2 * I + 1), -I, ErrorSchedule("exact"))


def map_splice(system, past, future, I: int, cut: int = 0) -> MapPseudoOrbit:
    """``x_i = f^i(past)`` for ``i < cut`` and ``f^i(future)`` for ``i >= cut``."""
    f = system.f
    pts = [f.power(past if i < cut else future, i) for i in range(-I, I + 1)]
    return MapPseudoOrbit(tuple(pts), -I)


def generate_map_pseudo_orbit(system, seeds: Sequence, I: int = 64, seed: int = 0, C: float = 1.0) -> MapPseudoOrbit:
    """Limit pseudo-orbit of the map with jumps ``<= C/(1+|i|)``, spliced at index 0."""
    rng = np.random.default_rng(seed)
    space = system.space
    f = system.f

    def bump(w, i):
        if not isinstance(space, SubshiftSpace):
            return w
        bound = C / (1 + abs(i))
        m = max(1, math.ceil(-math.log2(bound / 2)))
        return _flip_far_symbols(space, w, m, rng)

    pts = {0: seeds[0]}
    for i in range(-1, -I - 1, -1):
        pts[i] = f.backward(bump(pts[i + 1], i))
    pts[1] = f.power(seeds[-1], 1) if len(seeds) == 2 else bump(f(pts[0]), 0)
    for i in range(1, I):
        pts[i + 1] = bump(f(pts[i]), i)
    return MapPseudoOrbit(tuple(pts[i] for i in range(-I, I + 1)), -I)


def concatenate(segments: Sequence[FlowPseudoOrbit], connectors: Sequence[FlowPseudoOrbit],
                deltas: Sequence[float], flow) -> FlowPseudoOrbit:
    """Join ``seg_1 con_1 seg_2 con_2 ...`` into one pseudo-orbit starting at index 0.

    Each piece's last entry is its endpoint; the next piece must start within
    that piece's ``delta`` of it, and the endpoint entry is dropped.  The
    result's schedule lists, per index, the delta of the piece it came from.
    """
    if connectors and len(connectors) not in (len(segments) - 1, len(segments)):
        raise PseudoOrbitError("need one connector between consecutive segments")
    pieces: list[tuple[FlowPseudoOrbit, float]] = []
    for n, seg in enumerate(segments):
        pieces.append((seg, deltas[n]))
        if n < len(connectors):
            pieces.append((connectors[n], deltas[n]))
    pts: list = []
    ts: list = []
    bounds: list = []
    for k, (piece, delta) in enumerate(pieces):
        if k > 0:
            prev_end = pts.pop()
            ts.pop()
            bounds.pop()
            gap = flow.distance(prev_end, piece.x(piece.first))
            if gap > delta + 1e-12:
                raise PseudoOrbitError(f"piece {k} starts {gap:.3g} away from the previous endpoint (delta {delta})")
        pts.extend(piece.points)
        ts.extend(piece.durations)
        bounds.extend([delta] * len(piece.points))
    po = FlowPseudoOrbit(tuple(pts), tuple(ts), 0, ErrorSchedule("listed", values=tuple(bounds), first=0))
    return po


def project_map_to_flow(mpo: MapPseudoOrbit, flow, beta: Callable | None = None) -> FlowPseudoOrbit:
    """Lift ``(x_i)`` to ``((x_i, 1/2), beta(x_i))``; ``beta`` defaults to 1."""
    pts = []
    ts = []
    for i in mpo.indices():
        x = mpo.x(i)
        t = 1.0 if beta is None else beta(x)
        pts.append(flow.point(x, 0.5))
        ts.append(t)
    return FlowPseudoOrbit(tuple(pts), tuple(ts), mpo.first, ErrorSchedule("limit"))
