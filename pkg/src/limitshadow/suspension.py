"""Suspension flows under the constant height function 1.

Points of the suspension space are pairs ``(x, s)`` with ``0 <= s < 1``;
``(x, 1)`` is identified with ``(f(x), 0)``.  The Bowen-Walters distance is
computed as a shortest path over a finite family of chains (see
:meth:`SuspensionFlow.bw_distance`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base_space import FinitePointSpace, MetricSystem

SEAM_BAND = 1e-13


@dataclass(frozen=True)
class SuspensionPoint:
    base: object
    height: float

    def to_json(self, space) -> dict:
        return {"base": space.point_to_json(self.base), "height": self.height}


class SuspensionError(ValueError):
    pass


def canonical(f, x, s: float) -> SuspensionPoint:
    """Representative of ``(x, s)`` with height in ``[0, 1)``."""
    s = float(s)
    n = math.floor(s)
    h = s - n
    if h >= 1.0 - SEAM_BAND:
        n += 1
        h = 0.0
    elif h < SEAM_BAND:
        h = 0.0
    return SuspensionPoint(f.power(x, n) if n else x, h)


def level_metric(system: MetricSystem, x, y, t: float) -> float:
    """Distance between ``(x, t)`` and ``(y, t)`` within the level ``X x {t}``."""
    if not 0.0 <= t <= 1.0:
        raise SuspensionError(f"level {t} outside [0, 1]")
    f = system.f
    return (1.0 - t) * system.distance(x, y) + t * system.distance(f(x), f(y))


class SuspensionFlow:
    """The unit-speed vertical flow on the mapping torus of ``system.f``."""

    def __init__(self, system: MetricSystem, depth: int = 4):
        if depth < 1:
            raise ValueError("depth must be at least 1")
        self.system = system
        self.f = system.f
        self.depth = depth

    @property
    def space(self):
        return self.system.space

    def point(self, x, s: float = 0.0) -> SuspensionPoint:
        return canonical(self.f, x, s)

    def eval(self, p: SuspensionPoint, t: float) -> SuspensionPoint:
        """``phi_t(p) = (f^n(x), s + t - n)`` with ``n = floor(s + t)``."""
        if t == 0:
            return p
        return canonical(self.f, p.base, p.height + t)

    def level_metric(self, x, y, t: float) -> float:
        return level_metric(self.system, x, y, t)

    # -- Bowen-Walters distance ------------------------------------------------

    def _node_points(self, x, y) -> list:
        space = self.system.space
        if isinstance(space, FinitePointSpace):
            return list(space.points)
        f = self.f
        pts: list = []
        for z in (x, y, f.forward(x), f.forward(y), f.backward(x), f.backward(y)):
            if z not in pts:
                pts.append(z)
        return pts

    def bw_distance_many(self, p: SuspensionPoint, y, heights: Sequence[float], depth: int | None = None) -> np.ndarray:
        """Distances from ``p`` to ``(y, u)`` for every ``u`` in ``heights``.

        Chains alternate horizontal hops (at levels ``0``, ``p.height`` or
        ``u``, which suffices because the level metric is affine in the
        level) with vertical moves along the flow, possibly across the seam.
        At most ``depth`` segments are used; intermediate base points are the
        whole space when finite, else the one-step orbits of both endpoints.
        """
        depth = self.depth if depth is None else depth
        us = np.asarray(heights, dtype=float).reshape(-1)
        B = us.size
        x, s = p.base, p.height
        Z = self._node_points(x, y)
        m = len(Z)
        dist = self.system.distance
        F = [self.f.forward(z) for z in Z]
        D0 = np.zeros((m, m))
        D1 = np.zeros((m, m))
        for i in range(m):
            for j in range(i + 1, m):
                D0[i, j] = D0[j, i] = dist(Z[i], Z[j])
                D1[i, j] = D1[j, i] = dist(F[i], F[j])
        index = {z: i for i, z in enumerate(Z)}
        succ = [index.get(fz, -1) for fz in F]

        levels = np.empty((B, 3))
        levels[:, 0] = 0.0
        levels[:, 1] = s
        levels[:, 2] = us
        n = 3 * m
        W = np.full((B, n, n), np.inf)
        col = np.arange(m) * 3
        for a in range(3):
            lv = levels[:, a][:, None, None]
            W[:, a::3, a::3] = (1.0 - lv) * D0 + lv * D1
        for a in range(3):
            for b in range(3):
                vert = np.abs(levels[:, a] - levels[:, b])
                W[:, col + a, col + b] = np.minimum(W[:, col + a, col + b], vert[:, None])
        for i, j in enumerate(succ):
            if j < 0:
                continue
            for a in range(3):
                for b in range(3):
                    cost = (1.0 - levels[:, a]) + levels[:, b]
                    W[:, 3 * i + a, 3 * j + b] = np.minimum(W[:, 3 * i + a, 3 * j + b], cost)
                    W[:, 3 * j + b, 3 * i + a] = np.minimum(W[:, 3 * j + b, 3 * i + a], cost)

        src = 3 * index[x] + 1
        dst = 3 * index[y] + 2
        d = np.full((B, n), np.inf)
        d[:, src] = 0.0
        for _ in range(depth):
            d = np.minimum(d, np.min(d[:, :, None] + W, axis=1))
        out = d[:, dst]
        same = np.array([SuspensionPoint(x, s) == canonical(self.f, y, u) for u in us])
        out[same] = 0.0
        return out

    def bw_distance(self, p: SuspensionPoint, q: SuspensionPoint, depth: int | None = None) -> float:
        if p == q:
            return 0.0
        return float(self.bw_distance_many(p, q.base, [q.height], depth)[0])

    distance = bw_distance

    def chain_length(self, points: Sequence[SuspensionPoint], kinds: Sequence[str]) -> float:
        """Length of an explicit chain; ``kinds[i]`` tags segment ``points[i] -> points[i+1]``."""
        if len(kinds) != len(points) - 1:
            raise SuspensionError("need one kind per segment")
        total = 0.0
        for (p, q), kind in zip(zip(points, points[1:]), kinds):
            if kind == "horizontal":
                if abs(p.height - q.height) > SEAM_BAND:
                    raise SuspensionError("horizontal segment must stay in one level")
                total += self.level_metric(p.base, q.base, p.height)
            elif kind == "vertical":
                total += abs(self.orbit_time(p, q))
            else:
                raise SuspensionError(f"unknown segment kind {kind!r}")
        return total

    def orbit_time(self, p: SuspensionPoint, q: SuspensionPoint, reach: int = 8) -> float:
        """Smallest-magnitude ``tau`` with ``phi_tau(p) = q``."""
        best = None
        for n in range(-reach, reach + 1):
            if self.f.power(p.base, n) == q.base:
                tau = n + q.height - p.height
                if best is None or abs(tau) < abs(best):
                    best = tau
        if best is None:
            raise SuspensionError("points are not on a common short orbit segment")
        return best

    def near_level_decompose(self, s_k: float, t_k: float, s_next: float, w_k: int | None = None):
        return near_level_decompose(s_k, t_k, s_next, w_k)


def near_level_decompose(s_k: float, t_k: float, s_next: float, w_k: int | None = None) -> tuple[int, int]:
    """Which of the three quarter-alignment cases holds, with its integer correction.

    Returns ``(case, c)`` such that ``|s_k + t_k - (w_k + c) - s_next| < 1/4``;
    case 1 has ``c = 0``, case 2 ``c = -1`` and case 3 ``c = +1``.
    """
    if w_k is None:
        w_k = math.floor(s_k + t_k)
    for case, c in ((1, 0), (2, -1), (3, 1)):
        if abs(s_k + t_k - (w_k + c) - s_next) < 0.25:
            return case, c
    raise SuspensionError(
        f"no alignment case holds for s_k={s_k}, t_k={t_k}, s_next={s_next}, w_k={w_k}; "
        "the endpoints are not within 1/4"
    )


class CircleRotation:
    """Rotation flow on the circle ``R / circumference``; points are floats."""

    def __init__(self, speed: float = 1.0, circumference: float = 1.0):
        self.speed = speed
        self.circumference = circumference

    def eval(self, p: float, t: float) -> float:
        return (p + self.speed * t) % self.circumference

    def distance(self, p: float, q: float) -> float:
        d = abs(p - q) % self.circumference
        return min(d, self.circumference - d)


def grid_points(flow: SuspensionFlow, step: float = 0.1, bases=None) -> list:
    """``(x, j*step)`` for every base point (finite spaces) or every given base."""
    if bases is None:
        bases = list(flow.space.points)
    n = int(round(1.0 / step))
    return [flow.point(x, j * step) for x in bases for j in range(n)]


def distance_matrix(flow: SuspensionFlow, pts: Sequence[SuspensionPoint], depth: int | None = None) -> np.ndarray:
    n = len(pts)
    D = np.zeros((n, n))
    # group targets by base so each source needs one batched call per base
    by_base: dict = {}
    for j, q in enumerate(pts):
        by_base.setdefault(q.base, []).append(j)
    for i, p in enumerate(pts):
        for y, js in by_base.items():
            D[i, js] = flow.bw_distance_many(p, y, [pts[j].height for j in js], depth)
    return D


def metric_suite(flow: SuspensionFlow, step: float = 0.1, atol: float = 1e-9, bases=None) -> dict:
    """Symmetry, identity of indiscernibles and the triangle inequality on a height grid."""
    pts = grid_points(flow, step, bases)
    D = distance_matrix(flow, pts)
    sym = float(np.max(np.abs(D - D.T)))
    equal = np.array([[p == q for q in pts] for p in pts])
    zero_off = float(np.min(D[~equal])) if (~equal).any() else math.inf
    diag = float(np.max(np.abs(D[equal])))
    # D[i,k] <= D[i,j] + D[j,k] for all triples
    viol = float(np.max(D[:, None, :] - D[:, :, None] - D[None, :, :]))
    return {
        "points": len(pts),
        "depth": flow.depth,
        "symmetry_error": sym,
        "max_equal_distance": diag,
        "min_distinct_distance": zero_off,
        "triangle_violation": max(viol, 0.0),
        "symmetric": sym <= atol,
        "identity": diag <= atol and zero_off > atol,
        "triangle": viol <= atol,
        "ok": sym <= atol and diag <= atol and zero_off > atol and viol <= atol,
    }
