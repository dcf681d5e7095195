"""Independent reference computations used to check the package.

None of these import the code under test beyond plain data types; they
recompute from definitions with different algorithms (graph search,
exact rationals, arbitrary precision quadrature).
"""

import heapq
import math
from fractions import Fraction

import mpmath


def chain_oracle(points, dist, fmap, p, q, levels=40):
    """Shortest chain length between suspension points by Dijkstra on a level graph.

    Nodes are ``(x, u)`` for every base point and every level ``j/levels``
    plus the endpoint heights.  Edges: horizontal moves within a level with
    cost ``(1-u) d(x,y) + u d(fx,fy)``, vertical moves between adjacent
    levels of one column, and the free seam ``(x,1) ~ (f(x),0)``.  Chains
    of any length are allowed.
    """
    us = sorted({Fraction(j, levels) for j in range(levels + 1)} | {Fraction(p[1]).limit_denominator(10**6),
                                                                     Fraction(q[1]).limit_denominator(10**6)})
    start = (p[0], Fraction(p[1]).limit_denominator(10**6))
    goal = (q[0], Fraction(q[1]).limit_denominator(10**6))
    best = {start: 0.0}
    heap = [(0.0, 0, start)]
    tick = 1
    while heap:
        d, _, node = heapq.heappop(heap)
        if d > best.get(node, math.inf):
            continue
        if node == goal:
            return d
        x, u = node
        nbrs = []
        k = us.index(u)
        if k > 0:
            nbrs.append(((x, us[k - 1]), float(u - us[k - 1])))
        if k + 1 < len(us):
            nbrs.append(((x, us[k + 1]), float(us[k + 1] - u)))
        if u == 1:
            nbrs.append(((fmap[x], Fraction(0)), 0.0))
        if u == 0:
            inv = next(y for y in points if fmap[y] == x)
            nbrs.append(((inv, Fraction(1)), 0.0))
        uf = float(u)
        for y in points:
            if y != x:
                nbrs.append(((y, u), (1 - uf) * dist[x][y] + uf * dist[fmap[x]][fmap[y]]))
        for nb, c in nbrs:
            nd = d + c
            if nd < best.get(nb, math.inf) - 1e-15:
                best[nb] = nd
                heapq.heappush(heap, (nd, tick, nb))
                tick += 1
    return math.inf


def exact_flow(fmap, x, s, t):
    """``phi_t(x, s)`` with exact rational height arithmetic; fmap is a dict permutation."""
    inv = {v: k for k, v in fmap.items()}
    h = Fraction(s) + Fraction(t)
    while h >= 1:
        x, h = fmap[x], h - 1
    while h < 0:
        x, h = inv[x], h + 1
    return x, h


def gap_alpha(h, K, t):
    """Closed form of the gap-absorbing reparametrization for identity-like h."""
    if t <= 0:
        return h(t)
    if K > 0:
        return h(t) + K * math.exp(-1.0 / (t * t))
    # K < 0: t0 solves h(t0) + K = 1
    lo, hi = 0.0, 1.0
    while h(hi) + K < 1:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) + K < 1:
            lo = mid
        else:
            hi = mid
    t0 = 0.5 * (lo + hi)
    return t / t0 if t <= t0 else h(t) + K


def bump_oracle(r2):
    if r2 >= 1 / 16:
        return mpmath.mpf(1)
    return 1 - mpmath.e ** (1 - 1 / (1 - 16 * mpmath.mpf(r2)))


def beta_oracle(rho2_x, rho2_fx):
    """Return time (x,1/2) -> (f(x),1/2) as an arbitrary-precision integral of 1/c."""
    mpmath.mp.dps = 30

    def cuts(r2, lo, hi):
        w = math.sqrt(max(1 / 16 - r2, 0.0))
        return sorted({lo, hi} | {c for c in (0.5 - w, 0.5 + w) if lo < c < hi})

    up = mpmath.quad(lambda u: 1 / bump_oracle(rho2_x + (u - 0.5) ** 2), cuts(rho2_x, 0.5, 1.0))
    down = mpmath.quad(lambda u: 1 / bump_oracle(rho2_fx + (u - 0.5) ** 2), cuts(rho2_fx, 0.0, 0.5))
    return float(up + down)


def word_weight_sqdist(x_syms, a_syms, W):
    """Squared distance of the weighted embeddings x_i 2^{-|i|-1}, |i| <= W."""
    total = 0.0
    for i in range(-W, W + 1):
        d = (x_syms[i + W] - a_syms[i + W]) * 2.0 ** (-abs(i) - 1)
        total += d * d
    return total
