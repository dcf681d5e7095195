"""Compact metric spaces, homeomorphisms on them and limit-set probes.

Two concrete kinds of space are supported:

* :class:`FinitePointSpace`, a finite set with an explicit distance matrix;
* :class:`SubshiftSpace`, a subshift of finite type whose points are
  eventually periodic two-sided words (:class:`Word`), so that iteration and
  the word metric are exactly computable.

A :class:`MetricSystem` bundles a space with a homeomorphism and is the
object every other module consumes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

import numpy as np

Point = Hashable


class SpaceError(ValueError):
    """Raised for points outside a space or malformed space descriptors."""


# ---------------------------------------------------------------------------
# Eventually periodic two-sided words
# ---------------------------------------------------------------------------


def _primitive(w: tuple) -> tuple:
    n = len(w)
    for p in range(1, n + 1):
        if n % p == 0 and w == w[:p] * (n // p):
            return w[:p]
    return w


def _rotate(w: tuple, k: int) -> tuple:
    k %= len(w)
    return w[k:] + w[:k]


class Word:
    """An eventually periodic bi-infinite word.

    The symbol at index ``i`` is ``core[i - start]`` inside the core,
    ``right[(i - end) % len(right)]`` to the right of it and
    ``left[(i - start) % len(left)]`` to the left.  Instances are always
    stored in canonical form, so ``==`` is equality of sequences.
    """

    __slots__ = ("left", "core", "start", "right", "_hash", "_windows")

    def __init__(self, left: Sequence, core: Sequence, start: int, right: Sequence):
        left, core, right = tuple(left), tuple(core), tuple(right)
        if not left or not right:
            raise SpaceError("word tails must be non-empty")
        left, core, start, right = self._canonical(left, core, int(start), right)
        self.left = left
        self.core = core
        self.start = start
        self.right = right
        self._hash = hash((left, core, start, right))
        self._windows: dict[int, tuple] = {}

    @staticmethod
    def _canonical(left, core, start, right):
        left, right = _primitive(left), _primitive(right)
        while core and core[-1] == right[-1]:
            core = core[:-1]
            right = right[-1:] + right[:-1]
        while core and core[0] == left[0]:
            core = core[1:]
            start += 1
            left = left[1:] + left[:1]
        if core:
            return left, core, start, right
        if left == right:
            # purely periodic: anchor the period at index 0
            per = _rotate(right, -start)
            return per, (), 0, per
        for _ in range(len(left) * len(right) + 1):
            if left[-1] != right[-1]:
                break
            start -= 1
            right = right[-1:] + right[:-1]
            left = left[-1:] + left[:-1]
        return left, (), start, right

    @classmethod
    def periodic(cls, block: Sequence) -> "Word":
        """The periodic word with ``x[i] = block[i % len(block)]``."""
        return cls(block, (), 0, block)

    @property
    def is_periodic(self) -> bool:
        return not self.core and self.left == self.right and self.start == 0

    def __getitem__(self, i: int):
        start = self.start
        end = start + len(self.core)
        if i >= end:
            return self.right[(i - end) % len(self.right)]
        if i >= start:
            return self.core[i - start]
        return self.left[(i - start) % len(self.left)]

    def symbols(self, lo: int, hi: int) -> tuple:
        """Symbols at indices ``lo..hi`` inclusive."""
        return tuple(self[i] for i in range(lo, hi + 1))

    def window(self, radius: int) -> tuple:
        win = self._windows.get(radius)
        if win is None:
            win = self.symbols(-radius, radius)
            self._windows[radius] = win
        return win

    def shift(self, n: int = 1) -> "Word":
        """``sigma^n`` of this word, where ``sigma(x)_i = x_{i+1}``."""
        if n == 0:
            return self
        if self.is_periodic:
            return Word.periodic(_rotate(self.right, n))
        return Word(self.left, self.core, self.start - n, self.right)

    def __eq__(self, other):
        if not isinstance(other, Word):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.start == other.start
            and self.core == other.core
            and self.left == other.left
            and self.right == other.right
        )

    def __hash__(self):
        return self._hash

    def __lt__(self, other: "Word"):
        return self.sort_key() < other.sort_key()

    def sort_key(self):
        return (len(self.core), len(self.right), len(self.left), self.right, self.left, self.core, self.start)

    def __repr__(self):
        if self.is_periodic:
            return f"({''.join(map(str, self.right))})^inf"
        return (
            f"Word(left={''.join(map(str, self.left))}, core={''.join(map(str, self.core))}, "
            f"start={self.start}, right={''.join(map(str, self.right))})"
        )

    def to_json(self) -> dict:
        if self.is_periodic:
            return {"periodic": list(self.right)}
        return {"left": list(self.left), "core": list(self.core), "start": self.start, "right": list(self.right)}

    @classmethod
    def from_json(cls, obj: dict) -> "Word":
        if "periodic" in obj:
            return cls.periodic(obj["periodic"])
        return cls(obj["left"], obj["core"], obj["start"], obj["right"])


def splice_words(past: Word, future: Word, cut: int = 0) -> Word:
    """Word equal to ``past`` at indices ``< cut`` and to ``future`` at ``>= cut``."""
    lo = min(past.start, cut) - len(past.left)
    hi = max(future.start + len(future.core), cut) + len(future.right)
    lo = min(lo, cut)
    core = [past[i] for i in range(lo, cut)] + [future[i] for i in range(cut, hi)]
    # left tail of `past` seen from `lo`, right tail of `future` seen from `hi`
    left = tuple(past[i] for i in range(lo - len(past.left), lo))
    right = tuple(future[i] for i in range(hi, hi + len(future.right)))
    return Word(left, core, lo, right)


# ---------------------------------------------------------------------------
# Spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FinitePointSpace:
    """Finite metric space with an explicit distance matrix.

    Distances are rescaled at construction so the diameter is at most one;
    the factor applied is kept in ``scale``.
    """

    points: tuple
    dist: np.ndarray = field(repr=False)
    scale: float = 1.0

    def __init__(self, points: Sequence, dist, normalize: bool = True):
        pts = tuple(points)
        if len(set(pts)) != len(pts):
            raise SpaceError("duplicate point identifiers")
        mat = np.array(dist, dtype=float)
        if mat.shape != (len(pts), len(pts)):
            raise SpaceError(f"distance matrix shape {mat.shape} does not match {len(pts)} points")
        scale = 1.0
        diam = float(mat.max()) if mat.size else 0.0
        if normalize and diam > 1.0:
            scale = 1.0 / diam
            mat = mat * scale
        mat.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dist", mat)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(pts)})

    def index(self, p: Point) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise SpaceError(f"point {p!r} is not in the space") from None

    def __contains__(self, p) -> bool:
        return p in self._index

    def distance(self, p: Point, q: Point) -> float:
        return float(self.dist[self.index(p), self.index(q)])

    def min_positive_distance(self) -> float:
        pos = self.dist[self.dist > 0]
        return float(pos.min()) if pos.size else math.inf

    def point_to_json(self, p):
        return p

    def point_from_json(self, obj):
        if obj not in self._index:
            raise SpaceError(f"point {obj!r} is not in the space")
        return obj

    def descriptor(self) -> dict:
        return {"kind": "finite", "points": list(self.points), "dist": (self.dist / self.scale).tolist()}


def _as_word_tuple(w) -> tuple:
    if isinstance(w, str):
        return tuple(int(c) for c in w)
    return tuple(w)


@dataclass(frozen=True)
class SubshiftSpace:
    """Subshift of finite type on ``alphabet`` avoiding ``forbidden`` words.

    ``window`` is the truncation radius of the word metric: points that agree
    on ``[-window, window]`` but differ are reported at distance
    ``2**-(window + 1)``, which keeps the metric an ultrametric.
    """

    alphabet: tuple
    forbidden: tuple = ()
    window: int = 12
    period_bound: int = 4

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "forbidden", tuple(_as_word_tuple(w) for w in self.forbidden))
        if self.window < 1 or self.period_bound < 1:
            raise SpaceError("window and period_bound must be positive")

    def __contains__(self, p) -> bool:
        return isinstance(p, Word) and self.is_admissible(p)

    def is_admissible(self, p: Word) -> bool:
        if any(s not in self.alphabet for s in p.left + p.core + p.right):
            return False
        if not self.forbidden:
            return True
        longest = max(len(w) for w in self.forbidden)
        lo = p.start - len(p.left) * longest - longest
        hi = p.start + len(p.core) + len(p.right) * longest + longest
        seq = p.symbols(lo, hi)
        for w in self.forbidden:
            n = len(w)
            for i in range(len(seq) - n + 1):
                if seq[i : i + n] == w:
                    return False
        return True

    def distance(self, p: Word, q: Word) -> float:
        if p is q:
            return 0.0
        W = self.window
        a, b = p.window(W), q.window(W)
        if a[W] != b[W]:
            return 1.0
        for k in range(1, W + 1):
            if a[W + k] != b[W + k] or a[W - k] != b[W - k]:
                return 2.0**-k
        return 0.0 if p == q else 2.0 ** -(W + 1)

    def point_to_json(self, p: Word):
        return p.to_json()

    def point_from_json(self, obj) -> Word:
        w = Word.from_json(obj)
        if not self.is_admissible(w):
            raise SpaceError(f"word {w!r} is not admissible")
        return w

    def descriptor(self) -> dict:
        return {
            "kind": "subshift",
            "alphabet": list(self.alphabet),
            "forbidden": [list(w) for w in self.forbidden],
            "window": self.window,
            "period_bound": self.period_bound,
        }


# ---------------------------------------------------------------------------
# Homeomorphisms
# ---------------------------------------------------------------------------


class Homeomorphism:
    """An invertible map on a space, given by forward and backward callables."""

    def __init__(self, space, forward: Callable, backward: Callable, power: Callable | None = None,
                 descriptor: dict | None = None):
        self.space = space
        self.forward = forward
        self.backward = backward
        self._power = power
        self._descriptor = descriptor or {}

    def __call__(self, p):
        return self.forward(p)

    def iterate(self, p, n: int):
        if p not in self.space:
            raise SpaceError(f"point {p!r} is not in the space")
        return self.power(p, n)

    def power(self, p, n: int):
        """``f^n(p)`` without membership checking."""
        if self._power is not None:
            return self._power(p, n)
        step = self.forward if n >= 0 else self.backward
        for _ in range(abs(n)):
            p = step(p)
        return p

    def descriptor(self) -> dict:
        return dict(self._descriptor)


def permutation_map(space: FinitePointSpace, table: dict) -> Homeomorphism:
    if set(table) != set(space.points) or set(table.values()) != set(space.points):
        raise SpaceError("permutation table must be a bijection of the space")
    inverse = {v: k for k, v in table.items()}
    # cycle decomposition makes powers O(1)
    cycle_of: dict = {}
    for p in space.points:
        if p in cycle_of:
            continue
        cyc = [p]
        q = table[p]
        while q != p:
            cyc.append(q)
            q = table[q]
        for i, q in enumerate(cyc):
            cycle_of[q] = (cyc, i)

    def power(p, n):
        cyc, i = cycle_of[p]
        return cyc[(i + n) % len(cyc)]

    return Homeomorphism(space, table.__getitem__, inverse.__getitem__, power,
                         {"kind": "permutation", "table": dict(table)})


def shift_map(space: SubshiftSpace) -> Homeomorphism:
    return Homeomorphism(space, lambda w: w.shift(1), lambda w: w.shift(-1), lambda w, n: w.shift(n),
                         {"kind": "shift"})


@dataclass(frozen=True)
class MetricSystem:
    """A compact metric space together with a homeomorphism of it."""

    space: Any
    f: Homeomorphism

    def distance(self, p, q) -> float:
        return self.space.distance(p, q)

    def descriptor(self) -> dict:
        d = self.space.descriptor()
        d["map"] = self.f.descriptor()
        return d

    @classmethod
    def from_descriptor(cls, desc: dict) -> "MetricSystem":
        kind = desc.get("kind")
        mdesc = desc.get("map", {})
        if kind == "finite":
            space = FinitePointSpace(desc["points"], desc["dist"])
            if mdesc.get("kind", "permutation") != "permutation":
                raise SpaceError("finite spaces need a permutation map")
            table = mdesc.get("table")
            if table is None:
                raise SpaceError("permutation map descriptor needs a table")
            return cls(space, permutation_map(space, table))
        if kind == "subshift":
            space = SubshiftSpace(
                tuple(desc["alphabet"]),
                tuple(desc.get("forbidden", ())),
                int(desc.get("window", 12)),
                int(desc.get("period_bound", 4)),
            )
            if mdesc.get("kind", "shift") != "shift":
                raise SpaceError("subshifts only support the shift map")
            return cls(space, shift_map(space))
        raise SpaceError(f"unknown system kind {kind!r}")


def swap_system() -> MetricSystem:
    """The two-point space with the discrete metric and the swap map."""
    space = FinitePointSpace(["a", "b"], [[0, 1], [1, 0]])
    return MetricSystem(space, permutation_map(space, {"a": "b", "b": "a"}))


def two_swaps_system() -> MetricSystem:
    """Two disjoint swapped pairs: a system with two invariant components."""
    space = FinitePointSpace(["a", "b", "c", "d"], [[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]])
    return MetricSystem(space, permutation_map(space, {"a": "b", "b": "a", "c": "d", "d": "c"}))


def preset_system(name: str, **kw) -> MetricSystem:
    presets = {"swap": swap_system, "two-swaps": two_swaps_system, "full-shift": full_shift_system}
    if name not in presets:
        raise SpaceError(f"unknown preset {name!r}; choose from {sorted(presets)}")
    return presets[name](**kw)


def full_shift_system(symbols: int = 2, window: int = 12, period_bound: int = 4) -> MetricSystem:
    space = SubshiftSpace(tuple(range(symbols)), (), window, period_bound)
    return MetricSystem(space, shift_map(space))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


@dataclass
class AxiomReport:
    ok: bool
    checks: dict
    violations: dict
    diameter: float

    def to_json(self) -> dict:
        return {"ok": self.ok, "checks": self.checks, "violations": self.violations, "diameter": self.diameter}


def check_metric_axioms(space: FinitePointSpace, atol: float = 0.0) -> AxiomReport:
    """Check the metric axioms exhaustively, reporting the first violation of each."""
    if len(space.points) < 1:
        raise SpaceError("space must have at least one point")
    pts = space.points
    D = space.dist
    n = len(pts)
    violations: dict = {}
    for i in range(n):
        if abs(D[i, i]) > atol:
            violations.setdefault("zero_diagonal", [pts[i]])
        for j in range(n):
            if i != j and D[i, j] <= atol:
                violations.setdefault("identity", [pts[i], pts[j]])
            if abs(D[i, j] - D[j, i]) > atol:
                violations.setdefault("symmetry", [pts[i], pts[j]])
            if D[i, j] < 0:
                violations.setdefault("nonnegative", [pts[i], pts[j]])
    for i, j, k in itertools.product(range(n), repeat=3):
        if D[i, k] > D[i, j] + D[j, k] + atol:
            violations.setdefault("triangle", [pts[i], pts[j], pts[k]])
            break
    diameter = float(D.max())
    if diameter > 1 + atol:
        violations.setdefault("diameter", [diameter])
    names = ["zero_diagonal", "identity", "symmetry", "nonnegative", "triangle", "diameter"]
    checks = {name: name not in violations for name in names}
    return AxiomReport(not violations, checks, violations, diameter)


def iterate(f: Homeomorphism, p, n: int):
    """``f^n(p)`` for signed ``n``."""
    return f.iterate(p, n)


@dataclass(frozen=True)
class LimitSetSample:
    kind: str
    anchor: Any
    samples: tuple
    horizon: int


def _cluster(points, dist, tol) -> list:
    reps: list = []
    for q in points:
        if all(dist(q, r) > tol for r in reps):
            reps.append(q)
    return reps


def omega_limit_sample(system: MetricSystem, p, horizon: int, tol: float, kind: str = "omega") -> LimitSetSample:
    """Tol-separated representatives of ``f^n(p)`` over the second half of the horizon.

    ``kind='alpha'`` samples ``n`` in ``[-horizon, -horizon/2]`` instead.
    """
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    if kind not in ("omega", "alpha"):
        raise ValueError(f"kind must be 'omega' or 'alpha', not {kind!r}")
    sign = 1 if kind == "omega" else -1
    f = system.f
    orbit = (f.power(p, sign * n) for n in range(horizon // 2, horizon + 1))
    reps = _cluster(orbit, system.distance, tol)
    return LimitSetSample(kind, p, tuple(reps), horizon)


def enumerate_candidates(space) -> list:
    """All points of a finite space, or all admissible periodic words of period <= P."""
    if isinstance(space, FinitePointSpace):
        return list(space.points)
    if isinstance(space, SubshiftSpace):
        seen: set = set()
        out = []
        for p in range(1, space.period_bound + 1):
            for block in itertools.product(space.alphabet, repeat=p):
                w = Word.periodic(block)
                if w in seen or not space.is_admissible(w):
                    continue
                seen.add(w)
                out.append(w)
        return out
    raise SpaceError(f"cannot enumerate points of {type(space).__name__}")
