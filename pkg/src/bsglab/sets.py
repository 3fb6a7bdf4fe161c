import json
import logging
import typing
from fractions import Fraction
from pathlib import Path

import numpy as np

from .config import Budget, DEFAULT_BUDGET, ensure_within
from .errors import EncodingOverflow, InvalidParameter, ReferenceMismatch

logger = logging.getLogger(__name__)

# encoded integers stay below 2**62 in magnitude so a sum of two never overflows int64
_LIMIT = 1 << 62
# runs at least this long are treated as intervals by the kernels
_BLOCK = 32
# runs at least this long make the JSON writer switch to the run encoding
_JSON_RUN = 64
# number of int64 cells a single vectorised step may materialise
_CHUNK = 1 << 22

IntArray = np.ndarray


def _cap(budget: Budget | None, key: str) -> int:
    return (budget or DEFAULT_BUDGET).get(key, DEFAULT_BUDGET[key])


def _as_int_array(values) -> IntArray:
    if isinstance(values, np.ndarray) and values.dtype.kind in "iu":
        arr = values.astype(np.int64, copy=False).ravel()
        if len(arr) and int(np.abs(arr).max()) >= _LIMIT:
            raise EncodingOverflow(f"Integer of magnitude >= 2**62 in {len(arr)} values")
        return arr
    ints = [int(v) for v in values]
    if ints and max(abs(min(ints)), abs(max(ints))) >= _LIMIT:
        raise EncodingOverflow(f"Integer of magnitude >= 2**62 among {len(ints)} values")
    return np.array(ints, dtype=np.int64)


def _readonly(arr: IntArray) -> IntArray:
    arr = np.ascontiguousarray(arr, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def _member(sorted_values: IntArray, queries: IntArray) -> np.ndarray:
    if not len(sorted_values):
        return np.zeros(np.shape(queries), dtype=bool)
    pos = np.searchsorted(sorted_values, queries)
    np.minimum(pos, len(sorted_values) - 1, out=pos)
    return sorted_values[pos] == queries


def _merge_runs(starts: IntArray, stops: IntArray) -> tuple[IntArray, IntArray]:
    keep = stops >= starts
    starts, stops = starts[keep], stops[keep]
    if not len(starts):
        return np.empty(0, np.int64), np.empty(0, np.int64)
    order = np.argsort(starts, kind="stable")
    starts, stops = starts[order], stops[order]
    reach = np.maximum.accumulate(stops)
    head = np.ones(len(starts), dtype=bool)
    head[1:] = starts[1:] > reach[:-1] + 1
    first = np.flatnonzero(head)
    last = np.r_[first[1:] - 1, len(starts) - 1]
    return starts[first], reach[last]


# sets


class IntSet:
    """Finite set of integers stored as maximal runs of consecutive values."""

    __slots__ = ("starts", "stops", "_offsets")

    def __init__(self, starts: IntArray, stops: IntArray):
        self.starts = _readonly(starts)
        self.stops = _readonly(stops)
        self._offsets = _readonly(np.concatenate(([0], np.cumsum(self.stops - self.starts + 1))))

    @classmethod
    def empty(cls) -> "IntSet":
        return cls(np.empty(0, np.int64), np.empty(0, np.int64))

    @classmethod
    def of(cls, values: typing.Iterable[int] | IntArray) -> "IntSet":
        return cls.from_sorted(np.unique(_as_int_array(values)))

    @classmethod
    def from_sorted(cls, arr: IntArray) -> "IntSet":
        if not len(arr):
            return cls.empty()
        breaks = np.flatnonzero(np.diff(arr) != 1)
        return cls(arr[np.r_[0, breaks + 1]], arr[np.r_[breaks, len(arr) - 1]])

    @classmethod
    def from_runs(cls, starts: typing.Iterable[int] | IntArray, stops: typing.Iterable[int] | IntArray) -> "IntSet":
        return cls(*_merge_runs(_as_int_array(starts), _as_int_array(stops)))

    @classmethod
    def interval(cls, lo: int, hi: int) -> "IntSet":
        return cls.from_runs([lo], [hi])

    def __len__(self) -> int:
        return int(self._offsets[-1])

    def __iter__(self) -> typing.Iterator[int]:
        for s, e in zip(self.starts.tolist(), self.stops.tolist()):
            yield from range(s, e + 1)

    def __contains__(self, x: object) -> bool:
        if not isinstance(x, (int, np.integer)) or abs(int(x)) >= _LIMIT:
            return False
        return bool(self.contains_many(np.array([x], dtype=np.int64))[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntSet):
            return NotImplemented
        return np.array_equal(self.starts, other.starts) and np.array_equal(self.stops, other.stops)

    def __hash__(self) -> int:
        return hash((self.starts.tobytes(), self.stops.tobytes()))

    def __repr__(self) -> str:
        if len(self) <= 12:
            return f"IntSet({list(self)})"
        return f"IntSet(<{len(self)} elements in {self.run_count} runs, {self.min}..{self.max}>)"

    @property
    def run_count(self) -> int:
        return len(self.starts)

    @property
    def min(self) -> int:
        if not len(self):
            raise InvalidParameter("min of an empty IntSet")
        return int(self.starts[0])

    @property
    def max(self) -> int:
        if not len(self):
            raise InvalidParameter("max of an empty IntSet")
        return int(self.stops[-1])

    @property
    def magnitude(self) -> int:
        return max(abs(self.min), abs(self.max)) if len(self) else 0

    def contains_many(self, values: IntArray) -> np.ndarray:
        values = np.asarray(values, dtype=np.int64)
        if not len(self):
            return np.zeros(values.shape, dtype=bool)
        run = np.searchsorted(self.starts, values, side="right") - 1
        inside = run >= 0
        run = np.maximum(run, 0)
        return inside & (values <= self.stops[run])

    def rank(self, values: IntArray) -> IntArray:
        """Number of elements <= each value."""
        values = np.asarray(values, dtype=np.int64)
        if not len(self):
            return np.zeros(values.shape, dtype=np.int64)
        run = np.searchsorted(self.starts, values, side="right") - 1
        safe = np.maximum(run, 0)
        within = np.minimum(values, self.stops[safe]) - self.starts[safe] + 1
        return np.where(run >= 0, self._offsets[safe] + within, 0)

    def index_of(self, values: IntArray) -> IntArray:
        values = np.asarray(values, dtype=np.int64)
        if not self.contains_many(values).all():
            raise ReferenceMismatch("index_of called with values outside the set")
        return self.rank(values) - 1

    def element_at(self, indices: IntArray) -> IntArray:
        indices = np.asarray(indices, dtype=np.int64)
        if len(indices) and (indices.min() < 0 or indices.max() >= len(self)):
            raise ReferenceMismatch(f"index out of range for a set of {len(self)} elements")
        run = np.searchsorted(self._offsets, indices, side="right") - 1
        return self.starts[run] + (indices - self._offsets[run])

    def to_array(self, budget: Budget | None = None) -> IntArray:
        ensure_within(budget, "max_elements", len(self), "materialised IntSet")
        lengths = self.stops - self.starts + 1
        return np.repeat(self.starts - self._offsets[:-1], lengths) + np.arange(len(self), dtype=np.int64)

    def split(self, block: int = _BLOCK) -> tuple[IntArray, IntArray, IntArray]:
        """Elements of short runs, then the starts and stops of the runs of length >= block."""
        long = self.stops - self.starts + 1 >= block
        short = IntSet(self.starts[~long], self.stops[~long])
        return short.to_array(), self.starts[long], self.stops[long]

    def union(self, other: "IntSet") -> "IntSet":
        return _combine(self, other, np.logical_or)

    def intersection(self, other: "IntSet") -> "IntSet":
        return _combine(self, other, np.logical_and)

    def difference(self, other: "IntSet") -> "IntSet":
        return _combine(self, other, lambda x, y: x & ~y)

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def issubset(self, other: "IntSet") -> bool:
        return not len(self.difference(other))

    def window(self, lo: int, hi: int) -> "IntSet":
        return self.intersection(IntSet.interval(lo, hi))

    def shifted(self, c: int) -> "IntSet":
        if len(self) and self.magnitude + abs(c) >= _LIMIT:
            raise EncodingOverflow(f"Shift by {c} leaves the int64 range")
        return IntSet(self.starts + c, self.stops + c)

    def negated(self) -> "IntSet":
        return IntSet(-self.stops[::-1], -self.starts[::-1])

    def without(self, values: IntArray) -> "IntSet":
        return self.difference(IntSet.of(values))


def _combine(a: IntSet, b: IntSet, keep) -> IntSet:
    edges = np.unique(np.concatenate((a.starts, a.stops + 1, b.starts, b.stops + 1)))
    if len(edges) < 2:
        return IntSet.empty()
    left = edges[:-1]
    mask = keep(a.contains_many(left), b.contains_many(left))
    return IntSet.from_runs(left[mask], edges[1:][mask] - 1)


class LatticeSet:
    """Finite set of points of Z^d inside the box [-M, M]^d, kept in lexicographic order."""

    __slots__ = ("dim", "box_radius", "points", "keys")

    def __init__(self, dim: int, box_radius: int, points: typing.Iterable[typing.Sequence[int]] | IntArray):
        if dim < 1 or box_radius < 0:
            raise InvalidParameter(f"LatticeSet needs dim >= 1 and box_radius >= 0, got {dim}, {box_radius}")
        pts = np.asarray(points if isinstance(points, np.ndarray) else list(points), dtype=np.int64)
        pts = pts.reshape(-1, dim)
        if len(pts) and int(np.abs(pts).max()) > box_radius:
            raise InvalidParameter(f"Point outside the box [-{box_radius}, {box_radius}]^{dim}")
        keys = _lattice_keys(pts, box_radius, dim)
        keys, first = np.unique(keys, return_index=True)
        self.dim = dim
        self.box_radius = box_radius
        self.points = _readonly(pts[first].reshape(-1, dim))
        self.keys = _readonly(keys)

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self) -> typing.Iterator[tuple[int, ...]]:
        return (tuple(p) for p in self.points.tolist())

    def __contains__(self, point: object) -> bool:
        try:
            pts = np.asarray(point, dtype=np.int64).reshape(1, self.dim)
        except (TypeError, ValueError):
            return False
        return bool(self.contains_many(pts)[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LatticeSet):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.points, other.points)

    def __hash__(self) -> int:
        return hash((self.dim, self.points.tobytes()))

    def __repr__(self) -> str:
        return f"LatticeSet(dim={self.dim}, box_radius={self.box_radius}, <{len(self)} points>)"

    def contains_many(self, points: IntArray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.dim)
        inside = (np.abs(pts) <= self.box_radius).all(axis=1)
        found = np.zeros(len(pts), dtype=bool)
        if inside.any():
            found[inside] = _member(self.keys, _lattice_keys(pts[inside], self.box_radius, self.dim))
        return found

    def index_of(self, points: IntArray) -> IntArray:
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.dim)
        if not self.contains_many(pts).all():
            raise ReferenceMismatch("index_of called with points outside the set")
        return np.searchsorted(self.keys, _lattice_keys(pts, self.box_radius, self.dim))

    def subset(self, mask: np.ndarray) -> "LatticeSet":
        return LatticeSet(self.dim, self.box_radius, self.points[np.asarray(mask, dtype=bool)])

    def negated(self) -> "LatticeSet":
        return LatticeSet(self.dim, self.box_radius, -self.points)


def _lattice_weights(box_radius: int, dim: int) -> IntArray:
    radix = 2 * box_radius + 1
    if radix**dim >= _LIMIT:
        raise EncodingOverflow(f"Box [-{box_radius}, {box_radius}]^{dim} does not fit a 62-bit key")
    return np.array([radix ** (dim - 1 - i) for i in range(dim)], dtype=np.int64)


def _lattice_keys(pts: IntArray, box_radius: int, dim: int) -> IntArray:
    return (pts.reshape(-1, dim) + box_radius) @ _lattice_weights(box_radius, dim)


AnySet = IntSet | LatticeSet


class PairConstraint:
    """A subset Gamma of left x right, stored as its complement (the removed index pairs)."""

    __slots__ = ("left", "right", "removed")

    def __init__(self, left: AnySet, right: AnySet, removed: IntArray | typing.Iterable[typing.Sequence[int]] = ()):
        arr = np.asarray(removed if isinstance(removed, np.ndarray) else list(removed), dtype=np.int64).reshape(-1, 2)
        n, m = len(left), len(right)
        if len(arr) and (arr.min() < 0 or arr[:, 0].max() >= n or arr[:, 1].max() >= m):
            raise InvalidParameter(f"Removed pair index outside {n} x {m}")
        codes = np.unique(arr[:, 0] * max(m, 1) + arr[:, 1])
        self.left = left
        self.right = right
        self.removed = _readonly(np.column_stack((codes // max(m, 1), codes % max(m, 1))).reshape(-1, 2))

    @classmethod
    def full(cls, left: AnySet, right: AnySet) -> "PairConstraint":
        return cls(left, right)

    @classmethod
    def nothing_kept(cls, left: AnySet, right: AnySet, budget: Budget | None = None) -> "PairConstraint":
        ensure_within(budget, "max_pairs", len(left) * len(right), "removed pairs")
        i, j = np.divmod(np.arange(len(left) * len(right), dtype=np.int64), max(len(right), 1))
        return cls(left, right, np.column_stack((i, j)))

    def __repr__(self) -> str:
        return f"PairConstraint(<{len(self.left)} x {len(self.right)}, {self.removed_count} removed>)"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PairConstraint):
            return NotImplemented
        return self.references(other.left, other.right) and np.array_equal(self.removed, other.removed)

    @property
    def total(self) -> int:
        return len(self.left) * len(self.right)

    @property
    def removed_count(self) -> int:
        return len(self.removed)

    @property
    def kept_count(self) -> int:
        return self.total - self.removed_count

    @property
    def density(self) -> Fraction:
        return Fraction(self.removed_count, self.total) if self.total else Fraction(0)

    def references(self, left: AnySet, right: AnySet) -> bool:
        return (self.left is left or self.left == left) and (self.right is right or self.right == right)

    def union(self, other: "PairConstraint") -> "PairConstraint":
        _ensure_references(other, self.left, self.right)
        return PairConstraint(self.left, self.right, np.concatenate((self.removed, other.removed)))

    def contains_pairs(self, pairs: IntArray) -> np.ndarray:
        """True where the index pair is kept (is an element of Gamma)."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        m = max(len(self.right), 1)
        return ~_member(self.removed[:, 0] * m + self.removed[:, 1], pairs[:, 0] * m + pairs[:, 1])

    def reindexed(self, left: AnySet, right: AnySet, left_map: IntArray, right_map: IntArray) -> "PairConstraint":
        left_map = np.asarray(left_map, dtype=np.int64)
        right_map = np.asarray(right_map, dtype=np.int64)
        pairs = np.column_stack((left_map[self.removed[:, 0]], right_map[self.removed[:, 1]]))
        return PairConstraint(left, right, pairs)


def _ensure_references(gamma: PairConstraint, left: AnySet, right: AnySet):
    if not gamma.references(left, right):
        raise ReferenceMismatch(f"{gamma!r} does not reference the given sets ({len(left)} x {len(right)})")


class ApCover(typing.NamedTuple):
    start: int
    diff: int
    length: int

    @property
    def stop(self) -> int:
        return self.start + (self.length - 1) * self.diff

    def contains_many(self, values: IntArray) -> np.ndarray:
        offset = np.asarray(values, dtype=np.int64) - self.start
        return (offset >= 0) & (offset % self.diff == 0) & (offset // self.diff < self.length)

    def covers(self, a: IntSet) -> bool:
        if not len(a):
            return True
        if a.min < self.start or a.max > self.stop:
            return False
        if self.diff == 1:
            return True
        return bool((a.stops == a.starts).all() and self.contains_many(a.starts).all())

    def count_in(self, a: IntSet) -> int:
        if self.diff == 1:
            return len(a.window(self.start, self.stop))
        return int(self.contains_many(a.window(self.start, self.stop).to_array()).sum())


# kernels


def _point_sumset(x: IntArray, y: IntArray, budget: Budget | None) -> IntArray:
    if len(x) > len(y):
        x, y = y, x
    lo = int(x[0] + y[0])
    span = int(x[-1] + y[-1]) - lo + 1
    cap = _cap(budget, "max_span")
    y_span = int(y[-1] - y[0]) + 1
    if span <= cap and y_span <= 8 * len(y):
        hit = np.zeros(span, dtype=bool)
        indicator = np.zeros(y_span, dtype=bool)
        indicator[y - y[0]] = True
        for offset in (x - x[0]).tolist():
            hit[offset : offset + y_span] |= indicator
        return np.flatnonzero(hit) + lo
    # scatter into a bitset over one window of the output span at a time
    found = list[IntArray]()
    width = min(span, cap)
    step = max(1, _CHUNK // len(y))
    for w0 in range(lo, lo + span, width):
        w1 = min(w0 + width, lo + span)
        hit = np.zeros(w1 - w0, dtype=bool)
        first, last = np.searchsorted(x, w0 - y[-1]), np.searchsorted(x, w1 - y[0])
        for i in range(first, last, step):
            xs = x[i : min(i + step, last)]
            ys = y[np.searchsorted(y, w0 - xs[-1]) : np.searchsorted(y, w1 - xs[0])]
            s = (xs[:, None] + ys[None, :]).ravel() - w0
            hit[s[(s >= 0) & (s < w1 - w0)]] = True
        found.append(np.flatnonzero(hit) + w0)
    return np.concatenate(found)


def _check_sum_range(a: IntSet, b: IntSet):
    if a.magnitude + b.magnitude >= _LIMIT:
        raise EncodingOverflow("Sums leave the 62-bit range")


def _cross_runs(points: IntArray, starts: IntArray, stops: IntArray, budget: Budget | None):
    ensure_within(budget, "max_pairs", len(points) * len(starts), "point-run sums")
    return (points[:, None] + starts[None, :]).ravel(), (points[:, None] + stops[None, :]).ravel()


def _integer_sumset(a: IntSet, b: IntSet, budget: Budget | None) -> IntSet:
    if not len(a) or not len(b):
        return IntSet.empty()
    _check_sum_range(a, b)
    pa, sa, ea = a.split()
    pb, sb, eb = b.split()
    starts, stops = list[IntArray](), list[IntArray]()
    if len(pa) and len(pb):
        pp = IntSet.from_sorted(_point_sumset(pa, pb, budget))
        starts.append(pp.starts)
        stops.append(pp.stops)
    for points, bs, be in ((pa, sb, eb), (pb, sa, ea)):
        if len(points) and len(bs):
            s, e = _cross_runs(points, bs, be, budget)
            starts.append(s)
            stops.append(e)
    if len(sa) and len(sb):
        starts.append((sa[:, None] + sb[None, :]).ravel())
        stops.append((ea[:, None] + eb[None, :]).ravel())
    return IntSet.from_runs(np.concatenate(starts), np.concatenate(stops))


def _window_counts(points: IntArray, targets: IntArray, starts: IntArray, stops: IntArray) -> IntArray:
    counts = np.zeros(len(targets), dtype=np.int64)
    if not len(points) or not len(starts):
        return counts
    step = max(1, _CHUNK // len(starts))
    for i in range(0, len(targets), step):
        t = targets[i : i + step, None]
        hi = np.searchsorted(points, t - starts[None, :], side="right")
        lo = np.searchsorted(points, t - stops[None, :], side="left")
        counts[i : i + step] = (hi - lo).sum(axis=1)
    return counts


def _point_pair_counts(x: IntArray, y: IntArray, targets: IntArray, budget: Budget | None) -> IntArray:
    if len(x) < len(y):
        x, y = y, x
    counts = np.zeros(len(targets), dtype=np.int64)
    lo = int(x[0] + y[0])
    span = int(x[-1] + y[-1]) - lo + 1
    if len(targets) * len(y) <= len(x) * len(y) // 4 or span > _cap(budget, "max_span"):
        step = max(1, _CHUNK // len(y))
        for i in range(0, len(targets), step):
            counts[i : i + step] = _member(x, targets[i : i + step, None] - y[None, :]).sum(axis=1)
        return counts
    tally = np.zeros(span, dtype=np.int64)
    base = y - lo
    step = max(1, _CHUNK // len(y))
    for i in range(0, len(x), step):
        tally += np.bincount((x[i : i + step, None] + base[None, :]).ravel(), minlength=span)
    inside = (targets >= lo) & (targets < lo + span)
    counts[inside] = tally[targets[inside] - lo]
    return counts


def _integer_representation_counts(a: IntSet, b: IntSet, targets: IntArray, budget: Budget | None) -> IntArray:
    counts = np.zeros(len(targets), dtype=np.int64)
    if not len(targets) or not len(a) or not len(b):
        return counts
    _check_sum_range(a, b)
    pa, sa, ea = a.split()
    pb, sb, eb = b.split()
    if len(pa) and len(pb):
        counts += _point_pair_counts(pa, pb, targets, budget)
    counts += _window_counts(pa, targets, sb, eb)
    counts += _window_counts(pb, targets, sa, ea)
    for s1, e1 in zip(sa.tolist(), ea.tolist()):
        lo = np.maximum(s1, targets[:, None] - eb[None, :])
        hi = np.minimum(e1, targets[:, None] - sb[None, :])
        counts += np.clip(hi - lo + 1, 0, None).sum(axis=1)
    return counts


# lattice sets are handled through a Freiman-isomorphic integer model


def _encode(a: LatticeSet, base: int) -> IntArray:
    if a.box_radius * sum(base**i for i in range(a.dim)) >= _LIMIT // 4:
        raise EncodingOverflow(f"Base {base} in dimension {a.dim} leaves the 62-bit range")
    weights = np.array([base**i for i in range(a.dim)], dtype=np.int64)
    return a.points @ weights


def embed_values(a: LatticeSet, base: int) -> IntArray:
    """pi(a) = a_1 + a_2 base + ... + a_d base^(d-1) for every point, in point order."""
    if base < max(2, 10 * a.box_radius):
        raise InvalidParameter(
            f"Base {base} is too small for box radius {a.box_radius}; additive quadruples need base >= 10M"
        )
    return _encode(a, base)


def decode_values(values: IntArray, base: int, dim: int) -> IntArray:
    """Inverse of embed_values on sums whose digits lie strictly inside (-base/2, base/2)."""
    rest = np.asarray(values, dtype=np.int64).copy()
    half = base // 2
    digits = np.empty((len(rest), dim), dtype=np.int64)
    for i in range(dim):
        digits[:, i] = (rest + half) % base - half
        rest = (rest - digits[:, i]) // base
    assert not rest.any(), "value outside the decodable range"
    return digits


class _IntegerModel(typing.NamedTuple):
    left: IntSet
    right: IntSet
    left_map: IntArray
    right_map: IntArray
    base: int
    dim: int
    box_radius: int


def _integer_model(a: LatticeSet, b: LatticeSet) -> _IntegerModel:
    if a.dim != b.dim:
        raise ReferenceMismatch(f"Lattice dimensions differ: {a.dim} and {b.dim}")
    radius = max(a.box_radius, b.box_radius, 1)
    base = 4 * radius + 1
    va, vb = _encode(a, base), _encode(b, base)
    left, right = IntSet.of(va), IntSet.of(vb)
    return _IntegerModel(left, right, left.index_of(va), right.index_of(vb), base, a.dim, radius)


def _lattice_from_values(values: IntSet, model: _IntegerModel) -> LatticeSet:
    return LatticeSet(model.dim, 2 * model.box_radius, decode_values(values.to_array(), model.base, model.dim))


# operations


def sumset(a: AnySet, b: AnySet, budget: Budget | None = None) -> AnySet:
    if isinstance(a, LatticeSet) and isinstance(b, LatticeSet):
        model = _integer_model(a, b)
        return _lattice_from_values(_integer_sumset(model.left, model.right, budget), model)
    if isinstance(a, IntSet) and isinstance(b, IntSet):
        return _integer_sumset(a, b, budget)
    raise ReferenceMismatch("sumset operands must both be IntSets or both LatticeSets")


def representation_counts(a: IntSet, b: IntSet, targets: IntArray, budget: Budget | None = None) -> IntArray:
    """Number of ordered pairs (x, y) in a x b with x + y = t, for every target t."""
    return _integer_representation_counts(a, b, _as_int_array(targets), budget)


def _integer_restricted_sumset(a: IntSet, b: IntSet, gamma: PairConstraint, budget: Budget | None) -> IntSet:
    full = _integer_sumset(a, b, budget)
    if not gamma.removed_count:
        return full
    sums = a.element_at(gamma.removed[:, 0]) + b.element_at(gamma.removed[:, 1])
    candidates, removed_reps = np.unique(sums, return_counts=True)
    reps = _integer_representation_counts(a, b, candidates, budget)
    assert (reps >= removed_reps).all()
    lost = candidates[reps == removed_reps]
    logger.debug("restricted sumset: %d candidate sums, %d lost", len(candidates), len(lost))
    return full.difference(IntSet.from_sorted(lost))


def restricted_sumset(a: AnySet, b: AnySet, gamma: PairConstraint, budget: Budget | None = None) -> AnySet:
    _ensure_references(gamma, a, b)
    if isinstance(a, LatticeSet) and isinstance(b, LatticeSet):
        model = _integer_model(a, b)
        moved = gamma.reindexed(model.left, model.right, model.left_map, model.right_map)
        return _lattice_from_values(_integer_restricted_sumset(model.left, model.right, moved, budget), model)
    if isinstance(a, IntSet) and isinstance(b, IntSet):
        return _integer_restricted_sumset(a, b, gamma, budget)
    raise ReferenceMismatch("restricted_sumset operands must both be IntSets or both LatticeSets")


def dilate(a: IntSet, c: int, budget: Budget | None = None) -> IntSet:
    if not len(a):
        return a
    if c == 0:
        return IntSet.of([0])
    if c == 1:
        return a
    if a.magnitude * abs(c) >= _LIMIT:
        raise EncodingOverflow(f"Dilation by {c} leaves the 62-bit range")
    if c == -1:
        return a.negated()
    return IntSet.of(a.to_array(budget) * c)


def _halve_same_parity(x: IntArray, y: IntArray) -> IntArray:
    return (x >> 1) + (y >> 1) + (x & 1)


def _midpoint_pairs_from_keys(keys: IntArray, classes: IntArray, budget: Budget | None) -> IntArray:
    found = list[IntArray]()
    total = 0
    for c in np.unique(classes).tolist():
        members = np.flatnonzero(classes == c)
        member_keys = keys[members]
        step = max(1, _CHUNK // len(members))
        for s in range(0, len(members), step):
            mid = _halve_same_parity(member_keys[s : s + step, None], member_keys[None, :])
            ii, jj = np.nonzero(_member(keys, mid))
            total += len(ii)
            ensure_within(budget, "max_pairs", total, "midpoint pairs")
            found.append(np.column_stack((members[s + ii], members[jj])))
    if not found:
        return np.empty((0, 2), dtype=np.int64)
    pairs = np.concatenate(found)
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


def midpoint_pairs(a: AnySet, budget: Budget | None = None) -> IntArray:
    """Ordered index pairs (i, j), diagonal included, whose midpoint is an element of the set."""
    if not len(a):
        return np.empty((0, 2), dtype=np.int64)
    if isinstance(a, LatticeSet):
        classes = ((a.points & 1) << np.arange(a.dim, dtype=np.int64)).sum(axis=1)
        return _midpoint_pairs_from_keys(a.keys, classes, budget)
    values = a.to_array(budget)
    return _midpoint_pairs_from_keys(values, values & 1, budget)


def count_three_term_progressions(a: AnySet, budget: Budget | None = None) -> int:
    return len(midpoint_pairs(a, budget)) - len(a)


def minimal_ap_cover(a: IntSet) -> ApCover:
    if len(a) < 2:
        raise InvalidParameter(f"minimal_ap_cover needs at least two elements, got {len(a)}")
    if (a.stops > a.starts).any():
        diff = 1
    else:
        diff = int(np.gcd.reduce(a.starts[1:] - a.starts[0]))
    return ApCover(a.min, diff, (a.max - a.min) // diff + 1)


def freiman_embed(a: LatticeSet, base: int) -> IntSet:
    image = IntSet.of(embed_values(a, base))
    assert len(image) == len(a)
    return image


class DoublingReport(typing.NamedTuple):
    size: int
    sumset_size: int
    restricted_size: int
    removed_pairs: int
    delta: Fraction
    K: Fraction
    doubling: Fraction

    def as_dict(self) -> dict[str, typing.Any]:
        return {
            "N": self.size,
            "sumset_size": self.sumset_size,
            "restricted_size": self.restricted_size,
            "removed_pairs": self.removed_pairs,
            "delta": float(self.delta),
            "K": float(self.K),
            "doubling": float(self.doubling),
        }


def doubling_report(a: IntSet, gamma: PairConstraint | None = None, budget: Budget | None = None) -> DoublingReport:
    full = _integer_sumset(a, a, budget)
    if gamma is None:
        restricted, removed, delta = full, 0, Fraction(0)
    else:
        _ensure_references(gamma, a, a)
        restricted, removed, delta = _integer_restricted_sumset(a, a, gamma, budget), gamma.removed_count, gamma.density
    n = len(a)
    return DoublingReport(
        size=n,
        sumset_size=len(full),
        restricted_size=len(restricted),
        removed_pairs=removed,
        delta=delta,
        K=Fraction(len(restricted), n) if n else Fraction(0),
        doubling=Fraction(len(full), n) if n else Fraction(0),
    )


# json


def to_json(obj: AnySet | PairConstraint) -> dict[str, typing.Any]:
    if isinstance(obj, IntSet):
        if len(obj.starts) and int((obj.stops - obj.starts).max()) + 1 >= _JSON_RUN:
            return {"type": "int_set", "runs": np.column_stack((obj.starts, obj.stops)).tolist()}
        return {"type": "int_set", "elements": obj.to_array().tolist()}
    if isinstance(obj, LatticeSet):
        return {"type": "lattice_set", "dim": obj.dim, "box_radius": obj.box_radius, "points": obj.points.tolist()}
    if isinstance(obj, PairConstraint):
        return {"type": "pair_complement", "removed": obj.removed.tolist()}
    raise InvalidParameter(f"No JSON form for {type(obj).__name__}")


def from_json(data: dict[str, typing.Any], left: AnySet | None = None, right: AnySet | None = None):
    kind = data.get("type")
    if kind == "int_set":
        if "runs" in data:
            runs = np.asarray(data["runs"], dtype=np.int64).reshape(-1, 2)
            return IntSet.from_runs(runs[:, 0], runs[:, 1])
        return IntSet.of(data["elements"])
    if kind == "lattice_set":
        return LatticeSet(int(data["dim"]), int(data["box_radius"]), data["points"])
    if kind == "pair_complement":
        if left is None:
            raise ReferenceMismatch("pair_complement needs the sets it refers to")
        return PairConstraint(left, right if right is not None else left, data["removed"])
    raise InvalidParameter(f"Unknown set format '{kind}'")


def dumps(data: typing.Any) -> str:
    return json.dumps(data, ensure_ascii=False, separators=(",", ":")) + "\n"


def dump_json(obj: AnySet | PairConstraint, path: str | Path):
    Path(path).write_text(dumps(to_json(obj)), encoding="utf-8")


def load_json(path: str | Path, left: AnySet | None = None, right: AnySet | None = None):
    return from_json(json.loads(Path(path).read_text(encoding="utf-8")), left, right)


def ceil_div(p: int, q: int) -> int:
    return -(-p // q)
