"""Exact representations of nondecreasing integer functions.

Everything here is exact rational arithmetic (``fractions.Fraction``); no
floating point is involved in evaluation or validation.

Axes are 0-based in Python. The JSON spec format numbers axes from 1.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

__all__ = [
    "Rational",
    "parse_rational",
    "format_rational",
    "Report",
    "QuiltAffine",
    "quilt_eval",
    "quilt_delta",
    "quilt_validate",
    "ObliviousSpec",
    "SpecError",
    "spec_eval",
    "spec_eval_orders",
    "spec_validate",
    "default_window",
    "decomposition_terms",
    "Domain1D",
    "Piece1D",
    "Semilinear1D",
    "Eventual1DForm",
    "sl1d_eval",
    "extract_eventual_1d",
    "superadditive_check",
    "scaling_limit",
    "scaled_sample",
    "window_points",
]

Rational = Fraction


_RATIONAL_RE = re.compile(r"^-?\d+(/\d+)?$")


class SpecError(ValueError):
    """A function description is malformed or takes an invalid value."""


def parse_rational(text: str | int | Fraction) -> Fraction:
    if isinstance(text, (int, Fraction)) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise SpecError(f"not a rational: {text!r}")
    compact = "".join(text.split())
    if not _RATIONAL_RE.match(compact):
        raise SpecError(f"not a rational: {text!r}")
    try:
        return Fraction(compact)
    except ZeroDivisionError:
        raise SpecError(f"not a rational: {text!r}") from None


def format_rational(q: Fraction) -> str:
    return str(Fraction(q))


def _as_int(q: Fraction, what: str) -> int:
    if q.denominator != 1:
        raise SpecError(f"{what} is not an integer: {q}")
    return q.numerator


@dataclass(frozen=True)
class Report:
    """Outcome of a bounded structural check.

    ``check`` names the failing condition, ``witness`` carries the offending
    point (or class/axis pair).
    """

    ok: bool
    check: str | None = None
    message: str = ""
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.ok

    @classmethod
    def passed(cls) -> "Report":
        return cls(True, message="pass")


def window_points(d: int, window: int | Sequence[int]) -> Iterator[tuple[int, ...]]:
    """All points of ``[0, window]^d`` in lexicographic order."""
    bounds = [window] * d if isinstance(window, int) else list(window)
    if len(bounds) != d:
        raise ValueError(f"window {window} does not match dimension {d}")
    return itertools.product(*(range(b + 1) for b in bounds))


# -- quilt-affine functions ------------------------------------------------


@dataclass(frozen=True)
class QuiltAffine:
    """``g(x) = gradient . x + B(x mod period)``.

    ``offsets`` lists ``B`` over the classes of ``(Z/pZ)^d`` in the order of
    ``itertools.product(range(p), repeat=d)``.
    """

    gradient: tuple[Fraction, ...]
    period: int
    offsets: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "gradient", tuple(Fraction(q) for q in self.gradient))
        object.__setattr__(self, "offsets", tuple(Fraction(q) for q in self.offsets))
        if self.period < 1:
            raise SpecError(f"period must be positive, got {self.period}")
        if any(q < 0 for q in self.gradient):
            raise SpecError(f"gradient must be nonnegative: {self.gradient}")
        if len(self.offsets) != self.period ** self.dimension:
            raise SpecError(
                f"offset table has {len(self.offsets)} entries, expected {self.period}^{self.dimension}"
            )

    @property
    def dimension(self) -> int:
        return len(self.gradient)

    def classes(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(range(self.period), repeat=self.dimension)

    def offset(self, cls: Sequence[int]) -> Fraction:
        p = self.period
        idx = 0
        for a in cls:
            idx = idx * p + (a % p)
        return self.offsets[idx]

    def linear(self, x: Sequence[int | Fraction]) -> Fraction:
        return sum((g * v for g, v in zip(self.gradient, x)), Fraction(0))

    def __call__(self, x: Sequence[int]) -> int:
        return quilt_eval(self, x)

    @classmethod
    def make(cls, gradient: Sequence, period: int = 1, offsets: Mapping | Sequence | None = None) -> "QuiltAffine":
        """Build from a gradient and a (possibly sparse) offset mapping."""
        gradient = tuple(parse_rational(q) for q in gradient)
        d = len(gradient)
        table = []
        for c in itertools.product(range(period), repeat=d):
            if offsets is None:
                table.append(Fraction(0))
            elif isinstance(offsets, Mapping):
                table.append(parse_rational(offsets.get(c, 0)))
            else:
                table = [parse_rational(q) for q in offsets]
                break
        return cls(gradient, period, tuple(table))

    @classmethod
    def from_values(cls, gradient: Sequence, period: int, fn: Callable[[tuple[int, ...]], int]) -> "QuiltAffine":
        """Offsets chosen so that ``g`` agrees with ``fn`` on ``[0, p)^d``."""
        gradient = tuple(parse_rational(q) for q in gradient)
        table = []
        for c in itertools.product(range(period), repeat=len(gradient)):
            table.append(Fraction(fn(c)) - sum((g * a for g, a in zip(gradient, c)), Fraction(0)))
        return cls(gradient, period, tuple(table))

    @classmethod
    def constant(cls, value: int, d: int) -> "QuiltAffine":
        return cls((Fraction(0),) * d, 1, (Fraction(value),))

    def shift(self, n: Sequence[int]) -> "QuiltAffine":
        """``h(y) = g(y + n)``."""
        base = self.linear(n)
        table = tuple(self.offset(tuple(a + b for a, b in zip(c, n))) + base for c in self.classes())
        return QuiltAffine(self.gradient, self.period, table)

    def substitute(self, values: Mapping[int, int]) -> "QuiltAffine":
        """Pin the axes in ``values`` and return a quilt over the remaining axes."""
        keep = [i for i in range(self.dimension) if i not in values]
        const = sum((self.gradient[i] * v for i, v in values.items()), Fraction(0))
        table = []
        for c in itertools.product(range(self.period), repeat=len(keep)):
            full = [0] * self.dimension
            for i, a in zip(keep, c):
                full[i] = a
            for i, v in values.items():
                full[i] = v
            table.append(self.offset(full) + const)
        g = QuiltAffine(tuple(self.gradient[i] for i in keep), self.period, tuple(table))
        return g.reduce_period()

    def reduce_period(self) -> "QuiltAffine":
        """Smallest period describing the same function."""
        p, d = self.period, self.dimension
        for q in sorted(k for k in range(1, p + 1) if p % k == 0):
            cand = QuiltAffine(self.gradient, q, tuple(self.offset(c) for c in itertools.product(range(q), repeat=d)))
            if all(cand.offset(c) == self.offset(c) for c in self.classes()):
                return cand
        return self

    def depends_on(self, axis: int) -> bool:
        return any(quilt_delta(self, c, axis) != 0 for c in self.classes())


def quilt_eval(g: QuiltAffine, x: Sequence[int]) -> int:
    if len(x) != g.dimension:
        raise SpecError(f"point {tuple(x)} has dimension {len(x)}, quilt has {g.dimension}")
    return _as_int(g.linear(x) + g.offset(x), f"g{tuple(x)}")


def quilt_delta(g: QuiltAffine, cls: Sequence[int], axis: int) -> Fraction:
    """Finite difference ``g(x + e_axis) - g(x)`` for any ``x`` in class ``cls``."""
    nxt = list(cls)
    nxt[axis] += 1
    return g.gradient[axis] + g.offset(nxt) - g.offset(cls)


def quilt_validate(g: QuiltAffine) -> Report:
    for c in g.classes():
        for i in range(g.dimension):
            delta = quilt_delta(g, c, i)
            if delta.denominator != 1:
                return Report(False, "delta-integral", f"delta at class {c}, axis {i + 1} is {delta}", (c, i))
            if delta < 0:
                return Report(False, "delta-nonnegative", f"delta at class {c}, axis {i + 1} is {delta}", (c, i))
    for c in g.classes():
        v = g.linear(c) + g.offset(c)
        if v.denominator != 1:
            return Report(False, "integer-valued", f"g{c} = {v} is not an integer", c)
    return Report.passed()


# -- recursive oblivious specs ---------------------------------------------


@dataclass(frozen=True)
class ObliviousSpec:
    """Eventually-min-of-quilts description with fixed-input restrictions.

    For ``x >= floor`` on the free axes the value is the minimum of the
    pieces. Below the floor the value comes from ``restrictions[(i, j)]``,
    a nested spec with axis ``i`` pinned to ``j``. ``fixed`` lists the axes
    pinned by enclosing specs; it is filled in when a spec is nested.
    """

    dimension: int
    floor: tuple[int, ...]
    pieces: tuple[QuiltAffine, ...]
    restrictions: tuple[tuple[tuple[int, int], "ObliviousSpec"], ...] = ()
    fixed: tuple[tuple[int, int], ...] = ()
    reference: str | None = field(default=None, compare=False)

    def __post_init__(self):
        d = self.dimension
        object.__setattr__(self, "floor", tuple(int(v) for v in self.floor))
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "fixed", tuple(sorted((int(i), int(j)) for i, j in self.fixed)))
        if isinstance(self.restrictions, Mapping):
            object.__setattr__(self, "restrictions", tuple(self.restrictions.items()))
        fixed = dict(self.fixed)
        if len(fixed) != len(self.fixed):
            raise SpecError(f"axis fixed twice: {self.fixed}")
        if len(self.floor) != d:
            raise SpecError(f"floor {self.floor} does not have dimension {d}")
        if any(v < 0 for v in self.floor):
            raise SpecError(f"floor entries must be nonnegative: {self.floor}")
        if any(self.floor[i] for i in fixed):
            raise SpecError(f"floor must be 0 on fixed axes {sorted(fixed)}: {self.floor}")
        if not self.pieces:
            raise SpecError("spec needs at least one piece")
        for g in self.pieces:
            if g.dimension != d:
                raise SpecError(f"piece has dimension {g.dimension}, spec has {d}")
        if len(fixed) == d and len(self.pieces) != 1:
            raise SpecError("fully fixed spec must have a single constant piece")
        expected = {(i, j) for i in range(d) if i not in fixed for j in range(self.floor[i])}
        rebound = []
        for key, sub in sorted(self.restrictions, key=lambda kv: kv[0]):
            i, j = key
            if (i, j) not in expected:
                raise SpecError(f"unexpected restriction axis {i + 1} = {j}")
            want = tuple(sorted(self.fixed + ((i, j),)))
            if sub.dimension != d:
                raise SpecError(f"restriction axis {i + 1} = {j} has dimension {sub.dimension}")
            if sub.fixed and sub.fixed != want:
                raise SpecError(f"restriction axis {i + 1} = {j} is fixed at {sub.fixed}, expected {want}")
            rebound.append(((i, j), sub if sub.fixed == want else replace(sub, fixed=want)))
        missing = expected - {k for k, _ in rebound}
        if missing:
            i, j = min(missing)
            raise SpecError(f"missing restriction axis {i + 1} = {j}")
        object.__setattr__(self, "restrictions", tuple(rebound))

    @property
    def free_axes(self) -> tuple[int, ...]:
        fixed = dict(self.fixed)
        return tuple(i for i in range(self.dimension) if i not in fixed)

    def restriction(self, axis: int, value: int) -> "ObliviousSpec":
        for key, sub in self.restrictions:
            if key == (axis, value):
                return sub
        raise KeyError((axis, value))

    def walk(self) -> Iterator["ObliviousSpec"]:
        yield self
        for _, sub in self.restrictions:
            yield from sub.walk()

    def __call__(self, x: Sequence[int]) -> int:
        return spec_eval(self, x)


def _check_point(s: ObliviousSpec, x: Sequence[int]) -> None:
    if len(x) != s.dimension:
        raise SpecError(f"point {tuple(x)} has dimension {len(x)}, spec has {s.dimension}")
    for i, j in s.fixed:
        if x[i] != j:
            raise SpecError(f"point {tuple(x)} violates fixed axis {i + 1} = {j}")


def _pieces_min(s: ObliviousSpec, x: Sequence[int]) -> int:
    v = min(quilt_eval(g, x) for g in s.pieces)
    if v < 0:
        raise SpecError(f"spec value at {tuple(x)} is negative ({v})")
    return v


def spec_eval(s: ObliviousSpec, x: Sequence[int]) -> int:
    """Evaluate, recursing on the smallest free axis below the floor."""
    _check_point(s, x)
    while True:
        below = [i for i in s.free_axes if x[i] < s.floor[i]]
        if not below:
            return _pieces_min(s, x)
        s = s.restriction(below[0], x[below[0]])


def spec_eval_orders(s: ObliviousSpec, x: Sequence[int]) -> set[int]:
    """Values obtained over every admissible recursion order."""
    _check_point(s, x)
    below = [i for i in s.free_axes if x[i] < s.floor[i]]
    if not below:
        return {_pieces_min(s, x)}
    out: set[int] = set()
    for i in below:
        out |= spec_eval_orders(s.restriction(i, x[i]), x)
    return out


def default_window(s: ObliviousSpec) -> int:
    periods = [g.period for t in s.walk() for g in t.pieces]
    return max(s.floor, default=0) + 2 * math.lcm(*periods)


def decomposition_terms(s: ObliviousSpec, x: Sequence[int]) -> list[int]:
    """Terms whose minimum reassembles ``f(x)`` from ``f(x v n)`` and restrictions.

    The first term is ``f(x v n)``; then, for each free axis ``i`` and
    ``j < n(i)``, ``f[x(i) -> j](x) + [x(i) > j] * f(x v n)``.
    """
    _check_point(s, x)
    top = tuple(max(v, n) for v, n in zip(x, s.floor))
    f_top = _pieces_min(s, top)
    terms = [f_top]
    for (i, j), sub in s.restrictions:
        pinned = list(x)
        pinned[i] = j
        terms.append(spec_eval(sub, pinned) + (f_top if x[i] > j else 0))
    return terms


def _points_for(s: ObliviousSpec, window: int) -> Iterator[tuple[int, ...]]:
    fixed = dict(s.fixed)
    ranges = [range(fixed[i], fixed[i] + 1) if i in fixed else range(window + 1) for i in range(s.dimension)]
    return itertools.product(*ranges)


def spec_validate(
    s: ObliviousSpec,
    window: int | None = None,
    reference: Callable[[tuple[int, ...]], int] | None = None,
) -> Report:
    """Bounded check of the structural conditions on ``[0, window]^d``.

    Checks, in order: every piece is a valid quilt; values are defined and
    nonnegative; nondecreasing along each axis; all recursion orders agree;
    every piece dominates (the reference function when given, else the spec
    value) at points above the floor; and, with a reference, exact agreement.
    """
    if window is None:
        window = default_window(s)
    periods = [g.period for t in s.walk() for g in t.pieces]
    if window < max(s.floor, default=0) + math.lcm(*periods):
        raise ValueError(f"window {window} is smaller than floor plus one period")

    for t in s.walk():
        for k, g in enumerate(t.pieces):
            r = quilt_validate(g)
            if not r:
                return Report(False, "piece", f"piece {k + 1} (fixed {t.fixed}): {r.message}", r.witness)

    values: dict[tuple[int, ...], int] = {}
    for x in _points_for(s, window):
        try:
            values[x] = spec_eval(s, x)
        except SpecError as e:
            return Report(False, "nonnegative", str(e), x)

    for x, v in values.items():
        for i in range(s.dimension):
            y = x[:i] + (x[i] + 1,) + x[i + 1:]
            if y in values and values[y] < v:
                return Report(False, "nondecreasing", f"f{x} = {v} > f{y} = {values[y]}", (x, y))

    for x in values:
        try:
            orders = spec_eval_orders(s, x)
        except SpecError as e:
            return Report(False, "nonnegative", str(e), x)
        if len(orders) > 1:
            return Report(False, "recursion", f"recursion orders disagree at {x}: {sorted(orders)}", x)

    for t in s.walk():
        for x in _points_for(t, window):
            if any(x[i] < t.floor[i] for i in t.free_axes):
                continue
            target = reference(x) if reference is not None else values[x]
            for k, g in enumerate(t.pieces):
                gv = quilt_eval(g, x)
                if gv < target:
                    return Report(
                        False,
                        "dominance",
                        f"piece {k + 1} (fixed {t.fixed}) at {x}: g = {gv} < f = {target}",
                        (k, x),
                    )

    if reference is not None:
        for x, v in values.items():
            want = reference(x)
            if v != want:
                return Report(False, "reference", f"spec value {v} at {x} differs from reference {want}", x)
    return Report.passed()


# -- scaling limit ---------------------------------------------------------


def scaling_limit(s: ObliviousSpec) -> list[tuple[Fraction, ...]]:
    """Gradients of the top-level pieces.

    On the open positive orthant the infinity-scaling of ``s`` is
    ``z -> min_k gradient_k . z``.
    """
    out: list[tuple[Fraction, ...]] = []
    for g in s.pieces:
        if g.gradient not in out:
            out.append(g.gradient)
    return out


def scaled_sample(f: Callable[[tuple[int, ...]], int], z: Sequence[Fraction], c: int) -> Fraction:
    """``f(floor(c z)) / c`` computed exactly."""
    point = tuple(math.floor(Fraction(c) * Fraction(v)) for v in z)
    return Fraction(f(point), c)


# -- one-dimensional semilinear functions ----------------------------------


@dataclass(frozen=True)
class Domain1D:
    """``lower <= x < upper`` and ``x = residue (mod modulus)``."""

    lower: int = 0
    upper: int | None = None
    modulus: int = 1
    residue: int = 0

    def __post_init__(self):
        if self.modulus < 1:
            raise SpecError(f"modulus must be positive, got {self.modulus}")
        if self.lower < 0:
            object.__setattr__(self, "lower", 0)
        object.__setattr__(self, "residue", self.residue % self.modulus)

    def __contains__(self, x: int) -> bool:
        if x < self.lower or (self.upper is not None and x >= self.upper):
            return False
        return x % self.modulus == self.residue

    def thresholds(self) -> list[int]:
        out = [self.lower] if self.lower > 0 else []
        if self.upper is not None:
            out.append(self.upper)
        return out


@dataclass(frozen=True)
class Piece1D:
    domain: Domain1D
    slope: Fraction
    intercept: Fraction

    def __post_init__(self):
        object.__setattr__(self, "slope", parse_rational(self.slope))
        object.__setattr__(self, "intercept", parse_rational(self.intercept))

    def value(self, x: int) -> Fraction:
        return self.slope * x + self.intercept


@dataclass(frozen=True)
class Semilinear1D:
    """Finite union of affine partial functions on disjoint semilinear domains."""

    pieces: tuple[Piece1D, ...]

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not self.pieces:
            raise SpecError("semilinear function needs at least one piece")
        for x in range(self.horizon()):
            hits = [p for p in self.pieces if x in p.domain]
            if len(hits) != 1:
                kind = "no piece" if not hits else f"{len(hits)} overlapping pieces"
                raise SpecError(f"{kind} at x = {x}")
            v = hits[0].value(x)
            if v.denominator != 1 or v < 0:
                raise SpecError(f"value {v} at x = {x} is not a natural number")

    def threshold_max(self) -> int | None:
        ts = [t for p in self.pieces for t in p.domain.thresholds()]
        return max(ts) if ts else None

    def modulus(self) -> int:
        return math.lcm(*(p.domain.modulus for p in self.pieces))

    def horizon(self) -> int:
        """Past this point the piece layout and integrality repeat periodically."""
        dens = [p.slope.denominator for p in self.pieces]
        return (self.threshold_max() or 0) + 1 + math.lcm(self.modulus(), *dens)

    def __call__(self, x: int) -> int:
        return sl1d_eval(self, x)

    @classmethod
    def affine(cls, slope, intercept=0) -> "Semilinear1D":
        return cls((Piece1D(Domain1D(), slope, intercept),))


def sl1d_eval(f: Semilinear1D, x: int) -> int:
    if x < 0:
        raise SpecError(f"negative input {x}")
    hits = [p for p in f.pieces if x in p.domain]
    if not hits:
        raise SpecError(f"no piece covers x = {x}")
    if len(hits) > 1:
        raise SpecError(f"{len(hits)} pieces overlap at x = {x}")
    return _as_int(hits[0].value(x), f"f({x})")


@dataclass(frozen=True)
class Eventual1DForm:
    """``f(x+1) - f(x) = deltas[x mod p]`` for all ``x >= n``."""

    n: int
    p: int
    prefix: tuple[int, ...]
    deltas: tuple[int, ...]

    def value(self, x: int) -> int:
        if x <= self.n:
            return self.prefix[x]
        v = self.prefix[self.n]
        for y in range(self.n, x):
            v += self.deltas[y % self.p]
        return v

    def tightened(self) -> "Eventual1DForm":
        """Smallest ``n`` for which the periodic differences already hold."""
        n = self.n
        while n > 0 and self.prefix[n] - self.prefix[n - 1] == self.deltas[(n - 1) % self.p]:
            n -= 1
        return Eventual1DForm(n, self.p, self.prefix[: n + 1], self.deltas)

    def with_n(self, n: int) -> "Eventual1DForm":
        """Same function, periodic tail declared from ``n`` (must be >= the current ``n``)."""
        if n < self.n:
            raise ValueError(f"cannot lower n from {self.n} to {n}")
        return Eventual1DForm(n, self.p, tuple(self.value(x) for x in range(n + 1)), self.deltas)


class NotNondecreasingError(SpecError):
    def __init__(self, x: int, fx: int, fy: int):
        super().__init__(f"f({x}) = {fx} > f({x + 1}) = {fy}")
        self.witness = (x, x + 1)


def extract_eventual_1d(f: Semilinear1D) -> Eventual1DForm:
    """Threshold ``n`` and period ``p`` past which ``f`` has periodic differences."""
    tmax = f.threshold_max()
    n = 0 if tmax is None else tmax + 1
    p = f.modulus()
    vals = [sl1d_eval(f, x) for x in range(n + 2 * p + 1)]
    for x in range(len(vals) - 1):
        if vals[x] > vals[x + 1]:
            raise NotNondecreasingError(x, vals[x], vals[x + 1])
    tail = {p.slope for p in f.pieces if p.domain.upper is None}
    if len(tail) > 1:
        # unequal eventual slopes: f decreases somewhere further out
        x = len(vals) - 1
        prev = vals[-1]
        while True:
            cur = sl1d_eval(f, x + 1)
            if cur < prev:
                raise NotNondecreasingError(x, prev, cur)
            x, prev = x + 1, cur
    deltas = [vals[x + 1] - vals[x] for x in range(n, n + p)]
    deltas = [deltas[(a - n) % p] for a in range(p)]
    for x in range(n + p, n + 2 * p):
        if vals[x + 1] - vals[x] != deltas[x % p]:
            raise SpecError(f"differences are not {p}-periodic from {n} (at x = {x})")
    return Eventual1DForm(n, p, tuple(vals[: n + 1]), tuple(deltas))


def superadditive_check(f: Callable[[int], int], bound: int) -> tuple[int, int] | None:
    """First ``(x, z)`` with ``x <= z <= bound`` and ``f(x) + f(z) > f(x + z)``."""
    vals = [f(v) for v in range(2 * bound + 1)]
    for x in range(bound + 1):
        for z in range(x, bound + 1):
            if vals[x] + vals[z] > vals[x + z]:
                return (x, z)
    return None
