import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oblivious_crn.builtins import builtin_1d, builtin_function, corner_spec, floor3x2_quilt, min1_spec, roof_spec
from oblivious_crn.funcspec import (
    Domain1D,
    NotNondecreasingError,
    ObliviousSpec,
    Piece1D,
    QuiltAffine,
    Semilinear1D,
    SpecError,
    decomposition_terms,
    extract_eventual_1d,
    parse_rational,
    quilt_delta,
    quilt_eval,
    quilt_validate,
    scaled_sample,
    scaling_limit,
    sl1d_eval,
    spec_eval,
    spec_eval_orders,
    spec_validate,
    superadditive_check,
    window_points,
)

import oracles


def fig2b_quilt():
    # (1,2).x + B(x mod 3), B zero except on three classes
    return QuiltAffine.make([1, 2], 3, {(1, 2): -1, (2, 2): -1, (2, 1): -1})


# -- rationals -------------------------------------------------------------


def test_parse_rational():
    assert parse_rational("6/4") == Fraction(3, 2)
    assert parse_rational(" -1 / 2 ") == Fraction(-1, 2)
    assert parse_rational(3) == 3
    with pytest.raises(SpecError):
        parse_rational("1/0")
    with pytest.raises(SpecError):
        parse_rational("0.5")


# -- quilt-affine ----------------------------------------------------------


def test_quilt_eval_examples():
    g = floor3x2_quilt()
    assert quilt_eval(g, (4,)) == 6
    assert quilt_eval(g, (0,)) == 0
    assert quilt_eval(fig2b_quilt(), (0, 0)) == 0
    assert [quilt_eval(g, (x,)) for x in range(40)] == [oracles.floor3x2(x) for x in range(40)]
    with pytest.raises(SpecError):
        quilt_eval(g, (1, 2))


def test_quilt_delta_examples():
    g = floor3x2_quilt()
    assert quilt_delta(g, (0,), 0) == 1
    assert quilt_delta(g, (1,), 0) == 2
    assert quilt_delta(QuiltAffine.constant(5, 1), (0,), 0) == 0


def test_quilt_validate_examples():
    assert quilt_validate(floor3x2_quilt())
    assert quilt_validate(fig2b_quilt())
    half = quilt_validate(QuiltAffine.make(["1/2"], 1))
    assert not half and half.check == "delta-integral"
    dip = quilt_validate(QuiltAffine.make([0], 2, {(1,): -1}))
    assert not dip and dip.check == "delta-nonnegative"
    assert dip.witness == ((0,), 0)  # class 0 steps down by 1, class 1 up by 1


def test_quilt_validate_integer_values():
    # differences integral but values off by 1/2
    r = quilt_validate(QuiltAffine.make([1], 1, {(0,): "1/2"}))
    assert not r and r.check == "integer-valued"


def test_quilt_rejects_bad_shape():
    with pytest.raises(SpecError):
        QuiltAffine((Fraction(-1),), 1, (Fraction(0),))
    with pytest.raises(SpecError):
        QuiltAffine((Fraction(1),), 2, (Fraction(0),))
    with pytest.raises(SpecError):
        QuiltAffine((Fraction(1),), 0, ())


def test_shift_and_substitute_agree_with_direct_evaluation():
    g = fig2b_quilt()
    h = g.shift((2, 1))
    for x in oracles.box(2, 7):
        assert quilt_eval(h, x) == quilt_eval(g, (x[0] + 2, x[1] + 1))
    s = g.substitute({0: 4})
    for y in range(10):
        assert quilt_eval(s, (y,)) == quilt_eval(g, (4, y))


def test_reduce_period_and_depends_on():
    g = QuiltAffine.make([1, 0], 4, {(a, b): 0 for a in range(4) for b in range(4)})
    assert g.reduce_period().period == 1
    assert g.depends_on(0) and not g.depends_on(1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=2), st.integers(1, 3), st.data())
def test_differences_are_periodic(grad, p, data):
    d = len(grad)
    values = {c: data.draw(st.integers(0, 6)) for c in oracles.box(d, p - 1)}
    g = QuiltAffine.from_values(grad, p, lambda c: values[c] + sum(grad[i] * c[i] for i in range(d)))
    if not quilt_validate(g):
        return
    for x in oracles.box(d, 2 * p + 1):
        for i in range(d):
            y = list(x)
            y[i] += 1
            cls = tuple(v % p for v in x)
            assert quilt_eval(g, y) - quilt_eval(g, x) == quilt_delta(g, cls, i)


# -- recursive specs -------------------------------------------------------


def test_spec_eval_examples():
    m = min1_spec()
    assert spec_eval(m, (0,)) == 0 and spec_eval(m, (3,)) == 1
    r = roof_spec()
    assert spec_eval(r, (2, 2)) == 2
    assert spec_eval(r, (1, 3)) == 2


def test_roof_spec_matches_piecewise_definition():
    r = roof_spec()
    for a, b in oracles.box(2, 12):
        assert spec_eval(r, (a, b)) == oracles.roof(a, b)


def test_corner_spec_matches_definition():
    c = corner_spec()
    f = builtin_function("corner")
    for x in oracles.box(2, 8):
        assert spec_eval(c, x) == f(x)
    assert spec_eval_orders(c, (0, 0)) == {0}


def test_spec_eval_errors():
    with pytest.raises(SpecError):
        spec_eval(roof_spec(), (1,))
    neg = ObliviousSpec(1, (0,), (QuiltAffine.make([1], 1, {(0,): -2}),))
    with pytest.raises(SpecError):
        spec_eval(neg, (0,))
    child = min1_spec().restriction(0, 0)
    with pytest.raises(SpecError):
        spec_eval(child, (2,))


def test_spec_structure_is_checked():
    one = QuiltAffine.constant(1, 1)
    with pytest.raises(SpecError, match="missing restriction"):
        ObliviousSpec(1, (1,), (one,))
    with pytest.raises(SpecError):
        ObliviousSpec(1, (0,), ())
    with pytest.raises(SpecError):
        ObliviousSpec(2, (0,), (QuiltAffine.constant(1, 2),))


def test_spec_validate_examples():
    assert spec_validate(roof_spec(), window=6)
    bad = ObliviousSpec(2, (0, 0), roof_spec().pieces[:2] + (QuiltAffine.make([1, 0], 1),))
    r = spec_validate(bad, window=6, reference=builtin_function("roof"))
    assert not r and r.check == "dominance"
    k, x = r.witness
    assert k == 2 and quilt_eval(bad.pieces[2], x) < oracles.roof(*x)
    assert quilt_eval(bad.pieces[2], (0, 5)) == 0 and oracles.roof(0, 5) == 1
    strip = ObliviousSpec(2, (0, 0), (QuiltAffine.make([1, 1], 1, {(0, 0): 1}),))
    r = spec_validate(strip, window=6, reference=builtin_function("depressed-strip"))
    assert not r and r.check == "reference"
    assert spec_eval(strip, (1, 1)) == 3 and oracles.depressed_strip(1, 1) == 2


def test_spec_validate_detects_decrease_and_disagreement():
    dec = ObliviousSpec(1, (1,), (QuiltAffine.constant(0, 1),), {(0, 0): ObliviousSpec(1, (0,), (QuiltAffine.constant(2, 1),))})
    r = spec_validate(dec)
    assert not r and r.check == "nondecreasing"

    # below both floors, pinning axis 1 first or axis 2 first gives different values
    def pinned(axis, value):
        other = 1 - axis
        leaf = ObliviousSpec(2, (0, 0), (QuiltAffine.constant(value, 2),), fixed=((0, 0), (1, 0)))
        floor = [0, 0]
        floor[other] = 1
        return ObliviousSpec(2, tuple(floor), (QuiltAffine.constant(5, 2),), {(other, 0): leaf}, fixed=((axis, 0),))

    s = ObliviousSpec(2, (1, 1), (QuiltAffine.constant(5, 2),), {(0, 0): pinned(0, 0), (1, 0): pinned(1, 1)})
    r = spec_validate(s)
    assert not r and r.check in {"recursion", "nondecreasing"}
    assert spec_eval_orders(s, (0, 0)) == {0, 1}


def test_spec_validate_window_precondition():
    with pytest.raises(ValueError):
        spec_validate(roof_spec(), window=1)


def test_corpus_specs_validate_against_references():
    for s in (roof_spec(), min1_spec(), corner_spec()):
        assert spec_validate(s, reference=builtin_function(s.reference)), s.reference


@pytest.mark.parametrize("make,window", [(min1_spec, 6), (roof_spec, 4), (corner_spec, 6)])
def test_decomposition_identity(make, window):
    s = make()
    for x in window_points(s.dimension, window):
        assert spec_eval(s, x) == min(decomposition_terms(s, x))


def test_scaling_limit_examples():
    assert set(scaling_limit(roof_spec())) == {(1, 0), (0, 1), (Fraction(1, 2), Fraction(1, 2))}
    assert scaling_limit(min1_spec()) == [(0,)]
    single = ObliviousSpec(1, (0,), (floor3x2_quilt(),))
    assert scaling_limit(single) == [(Fraction(3, 2),)]


def test_scaled_samples_converge_to_gradients():
    rng = random.Random(7)
    r = roof_spec()
    for _ in range(10):
        z = (Fraction(rng.randint(1, 50), rng.randint(1, 9)), Fraction(rng.randint(1, 50), rng.randint(1, 9)))
        for c in (10**3, 10**4):
            for g in r.pieces:
                bmax = max(abs(b) for b in g.offsets)
                gz = g.linear(z)
                assert abs(scaled_sample(g, z, c) - gz) <= (2 * bmax + sum(g.gradient)) / c
            limit = min(g.linear(z) for g in r.pieces)
            assert abs(scaled_sample(r, z, c) - limit) <= Fraction(3, c)


# -- one-dimensional functions ---------------------------------------------


def test_sl1d_eval_examples():
    f = builtin_1d("floor3x2")
    assert sl1d_eval(f, 5) == 7
    m = builtin_1d("min1")
    assert sl1d_eval(m, 0) == 0 and sl1d_eval(m, 9) == 1


def test_semilinear_rejects_gaps_overlaps_and_fractions():
    with pytest.raises(SpecError, match="no piece"):
        Semilinear1D((Piece1D(Domain1D(0, 3), 0, 0), Piece1D(Domain1D(4), 0, 1)))
    with pytest.raises(SpecError, match="overlapping"):
        Semilinear1D((Piece1D(Domain1D(0, 3), 0, 0), Piece1D(Domain1D(2), 0, 1)))
    with pytest.raises(SpecError, match="natural"):
        Semilinear1D.affine("1/2")


def test_extract_examples():
    e = extract_eventual_1d(builtin_1d("floor3x2"))
    assert (e.n, e.p, e.deltas, e.prefix) == (0, 2, (1, 2), (0,))
    e = extract_eventual_1d(builtin_1d("min1"))
    assert (e.n, e.p, e.deltas, e.prefix) == (2, 1, (0,), (0, 1, 1))
    e = extract_eventual_1d(Semilinear1D.affine(0, 7))
    assert (e.n, e.p, e.deltas, e.prefix) == (0, 1, (0,), (7,))


def test_extract_rejects_decreasing():
    f = Semilinear1D((Piece1D(Domain1D(0, 3), 0, 5), Piece1D(Domain1D(3), 1, 0)))
    with pytest.raises(NotNondecreasingError) as e:
        extract_eventual_1d(f)
    assert e.value.witness == (2, 3)
    # unequal eventual slopes on alternating classes always dip eventually
    g = Semilinear1D((Piece1D(Domain1D(0, None, 2, 0), 2, 0), Piece1D(Domain1D(0, None, 2, 1), 1, 1)))
    with pytest.raises(NotNondecreasingError):
        extract_eventual_1d(g)


def _random_semilinear(rng):
    """Nondecreasing function: prefix steps then periodic increments."""
    n, p = rng.randint(0, 4), rng.randint(1, 3)
    deltas = [rng.randint(0, 3) for _ in range(p)]
    vals = [rng.randint(0, 2)]
    for _ in range(n):
        vals.append(vals[-1] + rng.randint(0, 3))
    pieces = [Piece1D(Domain1D(x, x + 1), 0, vals[x]) for x in range(n)]
    # tail: f(n + k) = vals[n] + sum of deltas over the classes passed
    slope = Fraction(sum(deltas), p)
    for a in range(p):
        x0 = n + ((a - n) % p)
        v0 = vals[n] + sum(deltas[y % p] for y in range(n, x0))
        pieces.append(Piece1D(Domain1D(n, None, p, a), slope, v0 - slope * x0))
    return Semilinear1D(tuple(pieces)), vals, deltas, n, p


def test_extract_round_trip_random():
    rng = random.Random(3)
    for _ in range(200):
        f, _, _, _, _ = _random_semilinear(rng)
        e = extract_eventual_1d(f)
        for x in range(e.n + 4 * e.p + 1):
            assert e.value(x) == f(x)
        t = e.tightened()
        for x in range(e.n + 4 * e.p + 1):
            assert t.value(x) == f(x)


def test_superadditive_examples():
    assert superadditive_check(lambda x: 2 * x, 20) is None
    assert superadditive_check(builtin_1d("min1"), 5) == (1, 1)
    assert superadditive_check(oracles.floor3x2, 20) is None


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=6))
def test_superadditive_implies_nondecreasing(steps):
    vals = [0]
    for s in steps:
        vals.append(vals[-1] + s - 2)
    bound = len(vals) // 2
    f = lambda x: vals[x] if x < len(vals) else 10**6  # noqa: E731
    if superadditive_check(f, bound) is None and min(vals[: 2 * bound + 1]) >= 0:
        assert all(vals[x] <= vals[x + 1] for x in range(bound))
