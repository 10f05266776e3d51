"""Reference functions, hand-written CRNs, and a small spec corpus."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .crn import Crn, Reaction
from .funcspec import Domain1D, ObliviousSpec, Piece1D, QuiltAffine, Semilinear1D

__all__ = [
    "UnknownBuiltin",
    "Builtin",
    "BUILTINS",
    "builtin_function",
    "builtin_1d",
    "double_crn",
    "min_crn",
    "max_crn",
    "naive_max_crn",
    "roof_spec",
    "min1_spec",
    "corner_spec",
    "floor3x2_quilt",
    "checkerboard_quilt",
]


class UnknownBuiltin(KeyError):
    def __str__(self) -> str:
        return f"unknown builtin {self.args[0]!r}; choose from {', '.join(sorted(BUILTINS))}"


def _max(x):
    return max(x)


def _min(x):
    return min(x)


def _depressed_strip(x):
    a, b = x
    return a + b + (a != b)


def _roof(x):
    a, b = x
    if a < b:
        return a + 1
    if a > b:
        return b + 1
    return a


def _floor3x2(x):
    return 3 * x[0] // 2


def _min1(x):
    return min(1, x[0])


def _double(x):
    return 2 * x[0]


def _corner(x):
    a, b = x
    if a and b:
        return a + b
    return min(1, a) + min(1, b)


@dataclass(frozen=True)
class Builtin:
    name: str
    dimension: int | None  # None: any
    fn: Callable[[tuple[int, ...]], int]
    doc: str

    def __call__(self, x) -> int:
        x = tuple(int(v) for v in x)
        if self.dimension is not None and len(x) != self.dimension:
            raise ValueError(f"{self.name} takes {self.dimension} inputs, got {len(x)}")
        if any(v < 0 for v in x):
            raise ValueError(f"{self.name}: negative input {x}")
        return self.fn(x)


BUILTINS: dict[str, Builtin] = {
    b.name: b
    for b in [
        Builtin("max", None, _max, "maximum of the inputs"),
        Builtin("min", None, _min, "minimum of the inputs"),
        Builtin("depressed-strip", 2, _depressed_strip, "x1 + x2 + 1, or x1 + x2 on the diagonal"),
        Builtin("roof", 2, _roof, "x1 + 1 below the diagonal, x2 + 1 above, x1 on it"),
        Builtin("floor3x2", 1, _floor3x2, "floor(3x / 2)"),
        Builtin("min1", 1, _min1, "min(1, x)"),
        Builtin("double", 1, _double, "2x"),
        Builtin("corner", 2, _corner, "x1 + x2 when both are positive, else min(1,x1) + min(1,x2)"),
    ]
}


def builtin_function(name: str) -> Builtin:
    try:
        return BUILTINS[name]
    except KeyError:
        raise UnknownBuiltin(name) from None


_EVEN = Domain1D(0, None, 2, 0)
_ODD = Domain1D(0, None, 2, 1)

_SEMILINEAR_1D = {
    "floor3x2": lambda: Semilinear1D((Piece1D(_EVEN, "3/2", 0), Piece1D(_ODD, "3/2", "-1/2"))),
    "min1": lambda: Semilinear1D((Piece1D(Domain1D(0, 1), 0, 0), Piece1D(Domain1D(1), 0, 1))),
    "double": lambda: Semilinear1D.affine(2),
}


def builtin_1d(name: str) -> Semilinear1D:
    """Piecewise description of a one-dimensional builtin."""
    try:
        return _SEMILINEAR_1D[name]()
    except KeyError:
        raise UnknownBuiltin(name) from None


# -- hand-written CRNs -----------------------------------------------------


def _crn(inputs, reactions, leader=None) -> Crn:
    return Crn(tuple(inputs), "Y", tuple(Reaction.parse(r) for r in reactions), leader)


def double_crn() -> Crn:
    return _crn(["X"], ["X -> 2 Y"])


def min_crn() -> Crn:
    return _crn(["X1", "X2"], ["X1 + X2 -> Y"])


def max_crn() -> Crn:
    """Overshoots with one Y per input, then cancels the shared part."""
    return _crn(["X1", "X2"], ["X1 -> Z1 + Y", "X2 -> Z2 + Y", "Z1 + Z2 -> K", "K + Y -> 0"])


def naive_max_crn() -> Crn:
    return _crn(["X1", "X2"], ["X1 -> Y", "X2 -> Y"])


# -- spec corpus -----------------------------------------------------------


def floor3x2_quilt() -> QuiltAffine:
    return QuiltAffine.make(["3/2"], 2, {(1,): "-1/2"})


def checkerboard_quilt() -> QuiltAffine:
    """``x1 + x2 + [x1 odd] * [x2 odd]``-style period-2 piece with mixed offsets."""
    return QuiltAffine.make(["1/2", "1"], 2, {(1, 0): "1/2", (1, 1): "1/2"})


def roof_spec() -> ObliviousSpec:
    return ObliviousSpec(
        2,
        (0, 0),
        (
            QuiltAffine.make([1, 0], 1, {(0, 0): 1}),
            QuiltAffine.make([0, 1], 1, {(0, 0): 1}),
            QuiltAffine.make(["1/2", "1/2"], 2, {(0, 1): "1/2", (1, 0): "1/2"}),
        ),
        reference="roof",
    )


def min1_spec() -> ObliviousSpec:
    zero = ObliviousSpec(1, (0,), (QuiltAffine.constant(0, 1),))
    return ObliviousSpec(1, (1,), (QuiltAffine.constant(1, 1),), {(0, 0): zero}, reference="min1")


def corner_spec() -> ObliviousSpec:
    """Eventually ``x1 + x2``; with an axis at zero it degrades to ``min(1, other)``."""

    def edge(axis: int) -> ObliviousSpec:
        other = 1 - axis
        zero_pin = ObliviousSpec(2, (0, 0), (QuiltAffine.constant(0, 2),), fixed=((axis, 0), (other, 0)))
        floor = [0, 0]
        floor[other] = 1
        return ObliviousSpec(
            2, tuple(floor), (QuiltAffine.constant(1, 2),), {(other, 0): zero_pin}, fixed=((axis, 0),)
        )

    return ObliviousSpec(
        2,
        (1, 1),
        (QuiltAffine.make([1, 1], 1, {}),),
        {(0, 0): edge(0), (1, 0): edge(1)},
        reference="corner",
    )
