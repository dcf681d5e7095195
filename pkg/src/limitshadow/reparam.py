"""Reparametrizations: increasing homeomorphisms of the line fixing 0.

A :class:`Reparam` is a sorted list of breakpoints, each starting a piece
that is valid up to the next breakpoint.  Only three piece shapes exist
(linear, exponential gap overlay, shifted copy) plus composition, which
keeps the monotonicity certificate checkable by sampling.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ReparamError(ValueError):
    pass


class Piece:
    kind = ""

    def __call__(self, t):
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Linear(Piece):
    t0: float
    v0: float
    slope: float
    kind = "linear"

    def __call__(self, t):
        return self.v0 + self.slope * (t - self.t0)

    def to_json(self):
        return {"kind": self.kind, "t0": self.t0, "v0": self.v0, "slope": self.slope}


@dataclass(frozen=True)
class Inner(Piece):
    """Delegates to another reparametrization unchanged."""

    h: "Reparam"
    kind = "inner"

    def __call__(self, t):
        return self.h(t)

    def to_json(self):
        return {"kind": self.kind, "h": self.h.to_json()}


def _bump(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        safe = np.where(t > 0, t, 1.0)
        out = np.where(t > 0, np.exp(-1.0 / (safe * safe)), 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class GapOverlay(Piece):
    """``h(t) + K exp(-1/t^2)`` for ``t > 0``."""

    h: "Reparam"
    K: float
    kind = "analytic-gap"

    def __call__(self, t):
        return self.h(t) + self.K * _bump(t)

    def to_json(self):
        return {"kind": self.kind, "h": self.h.to_json(), "K": self.K}


@dataclass(frozen=True)
class Shifted(Piece):
    """``h(t) + K``."""

    h: "Reparam"
    K: float
    kind = "shifted-copy"

    def __call__(self, t):
        return self.h(t) + self.K

    def to_json(self):
        return {"kind": self.kind, "h": self.h.to_json(), "K": self.K}


@dataclass(frozen=True)
class Composed(Piece):
    outer: "Reparam"
    inner: "Reparam"
    kind = "composed"

    def __call__(self, t):
        return self.outer(self.inner(t))

    def to_json(self):
        return {"kind": self.kind, "outer": self.outer.to_json(), "inner": self.inner.to_json()}


def _piece_from_json(obj) -> Piece:
    kind = obj["kind"]
    if kind == "linear":
        return Linear(float(obj["t0"]), float(obj["v0"]), float(obj["slope"]))
    if kind == "inner":
        return Inner(Reparam.from_json(obj["h"]))
    if kind == "analytic-gap":
        return GapOverlay(Reparam.from_json(obj["h"]), float(obj["K"]))
    if kind == "shifted-copy":
        return Shifted(Reparam.from_json(obj["h"]), float(obj["K"]))
    if kind == "composed":
        return Composed(Reparam.from_json(obj["outer"]), Reparam.from_json(obj["inner"]))
    raise ReparamError(f"unknown piece kind {kind!r}")


class Reparam:
    """Piecewise increasing map of the reals with ``h(0) = 0``.

    ``breaks[0]`` is ``-inf``; piece ``j`` applies on ``[breaks[j], breaks[j+1])``.
    """

    def __init__(self, breaks: Sequence[float], pieces: Sequence[Piece]):
        if len(breaks) != len(pieces) or not pieces:
            raise ReparamError("need one breakpoint per piece")
        breaks = [float(b) for b in breaks]
        if breaks[0] != -math.inf:
            raise ReparamError("first breakpoint must be -inf")
        if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
            raise ReparamError("breakpoints must be strictly increasing")
        self.breaks = tuple(breaks)
        self.pieces = tuple(pieces)
        self._inner_breaks = np.array(self.breaks[1:])

    @classmethod
    def identity(cls) -> "Reparam":
        return cls([-math.inf], [Linear(0.0, 0.0, 1.0)])

    @classmethod
    def linear(cls, slope: float) -> "Reparam":
        if slope <= 0:
            raise ReparamError("slope must be positive")
        return cls([-math.inf], [Linear(0.0, 0.0, float(slope))])

    @classmethod
    def piecewise_linear(cls, knots_t: Sequence[float], knots_v: Sequence[float]) -> "Reparam":
        """Interpolate increasing knots; extended with the end slopes beyond them."""
        ts = [float(t) for t in knots_t]
        vs = [float(v) for v in knots_v]
        if len(ts) < 2 or len(ts) != len(vs):
            raise ReparamError("need at least two knots")
        breaks = [-math.inf]
        pieces = []
        for j in range(len(ts) - 1):
            slope = (vs[j + 1] - vs[j]) / (ts[j + 1] - ts[j])
            if j > 0:
                breaks.append(ts[j])
            pieces.append(Linear(ts[j], vs[j], slope))
        return cls(breaks, pieces)

    def __call__(self, t):
        if np.ndim(t) == 0:
            j = bisect.bisect_right(self.breaks, float(t)) - 1
            return float(self.pieces[j](float(t)))
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._inner_breaks, t, side="right")
        out = np.empty_like(t)
        for j in np.unique(idx):
            mask = idx == j
            out[mask] = self.pieces[j](t[mask])
        return out

    evaluate = __call__

    def to_json(self) -> dict:
        return {
            "breaks": [None if math.isinf(b) else b for b in self.breaks],
            "pieces": [p.to_json() for p in self.pieces],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Reparam":
        breaks = [-math.inf if b is None else float(b) for b in obj["breaks"]]
        return cls(breaks, [_piece_from_json(p) for p in obj["pieces"]])

    def __repr__(self):
        kinds = ",".join(p.kind for p in self.pieces)
        return f"Reparam({len(self.pieces)} pieces: {kinds})"


@dataclass
class Certificate:
    ok: bool
    value_at_zero: float
    min_increment: float
    max_jump: float
    failure: str = ""


def certify(h: Reparam, lo: float = -1e3, hi: float = 1e3, step: float = 1e-3,
            continuity_tol: float = 1e-12) -> Certificate:
    """Sample-based check that ``h`` belongs to Rep on ``[lo, hi]``."""
    v0 = h(0.0)
    grid = np.arange(lo, hi + step / 2, step)
    vals = h(grid)
    incs = np.diff(vals)
    min_inc = float(incs.min()) if incs.size else math.inf
    max_jump = 0.0
    for b, left_piece, right_piece in zip(h.breaks[1:], h.pieces[:-1], h.pieces[1:]):
        if lo <= b <= hi:
            jump = abs(float(left_piece(b)) - float(right_piece(b)))
            max_jump = max(max_jump, jump / max(1.0, abs(float(right_piece(b)))))
    failure = ""
    if v0 != 0.0:
        failure = f"h(0) = {v0!r}"
    elif not min_inc > 0:
        failure = f"not strictly increasing (min increment {min_inc:.3g})"
    elif max_jump > continuity_tol:
        failure = f"discontinuous at a breakpoint (jump {max_jump:.3g})"
    return Certificate(not failure, v0, min_inc, max_jump, failure)


def invert(h: Reparam, t: float, tol: float = 1e-12, max_expand: int = 200) -> float:
    """Solve ``h(s) = t`` by monotone bisection."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = -1.0, 1.0
    width = 1.0
    for _ in range(max_expand):
        if h(lo) <= t:
            break
        width *= 2
        lo = -width
    else:
        raise ReparamError(f"cannot bracket {t} from below")
    width = 1.0
    for _ in range(max_expand):
        if h(hi) >= t:
            break
        width *= 2
        hi = width
    else:
        raise ReparamError(f"cannot bracket {t} from above")
    if h(lo) > t or h(hi) < t:
        raise ReparamError("bracketing failed; is h increasing?")
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        v = h(mid)
        if abs(v - t) <= tol or hi - lo <= 1e-15 * max(1.0, abs(mid)):
            return mid
        if v < t:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def compose(g: Reparam, h: Reparam) -> Reparam:
    """``g o h``."""
    return Reparam([-math.inf], [Composed(g, h)])


def remove_gap(h: Reparam, K: float, tol: float = 1e-12) -> Reparam:
    """A reparametrization agreeing with ``h`` on ``t <= 0`` that absorbs a gap ``K``.

    For ``K > 0`` the result is ``h(t) + K exp(-1/t^2)`` on ``t > 0``; for
    ``K < 0`` it is ``t / t0`` on ``(0, t0]`` and ``h(t) + K`` afterwards,
    where ``h(t0) + K = 1``.
    """
    K = float(K)
    if K == 0:
        return h
    past = Inner(h)
    if K > 0:
        return Reparam([-math.inf, 0.0], [past, GapOverlay(h, K)])
    try:
        t0 = invert(h, 1.0 - K, tol)
    except ReparamError as exc:
        raise ReparamError(f"no t0 > 0 with h(t0) + K = 1: {exc}") from exc
    if t0 <= 0:
        raise ReparamError("t0 must be positive")
    return Reparam([-math.inf, 0.0, t0], [past, Linear(0.0, 0.0, 1.0 / t0), Shifted(h, K)])


def gap_convergence_trace(h: Reparam, alpha: Reparam, K: float, flow, z, times) -> list:
    """``(t, d(phi_{h(t)+K}(z), phi_{alpha(t)}(z)))`` samples."""
    return [(float(t), flow.distance(flow.eval(z, h(t) + K), flow.eval(z, alpha(t)))) for t in times]
