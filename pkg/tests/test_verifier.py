import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oblivious_crn.builtins import (
    builtin_1d,
    builtin_function,
    corner_spec,
    double_crn,
    max_crn,
    min1_spec,
    min_crn,
    naive_max_crn,
    roof_spec,
)
from oblivious_crn.compiler import compile_1d, compile_quilt, compile_spec
from oblivious_crn.builtins import floor3x2_quilt
from oblivious_crn.crn import Configuration, Crn, Reaction, initial_configuration, is_output_oblivious
from oblivious_crn.verifier import (
    CAPS_ENV,
    CapExceeded,
    Caps,
    dickson_search,
    format_trace,
    is_stable,
    overproduction_witness,
    reachable,
    replay,
    stably_computes,
    verify_window,
)

import oracles

C = Configuration.of


def node_set(g):
    return {g.config(i) for i in range(len(g))}


# -- reachable -------------------------------------------------------------


def test_reachable_examples():
    assert node_set(reachable(min_crn(), C(X1=1, X2=1))) == {C(X1=1, X2=1), C(Y=1)}
    assert node_set(reachable(double_crn(), C(X=2))) == {C(X=2), C(X=1, Y=2), C(Y=4)}
    g = reachable(max_crn(), C(X1=1, X2=1))
    assert max(g.y(i) for i in range(len(g))) == 2


def test_reachable_edges_point_at_members():
    g = reachable(max_crn(), C(X1=2, X2=3))
    assert len(g.succ) == len(g)
    for i, out in enumerate(g.succ):
        for ri, j in out:
            assert 0 <= j < len(g)
            r = g.crn.reactions[ri]
            assert replay(g.crn, g.config(i), [(r, g.config(j))]) == g.config(j)


def test_reachable_matches_oracle():
    for crn, x in [(max_crn(), (2, 2)), (compile_quilt(floor3x2_quilt()), (5,)), (min_crn(), (3, 1))]:
        start = initial_configuration(crn, x)
        seen, _ = oracles.reach(oracles.rules_of(crn), oracles.start_of(crn, x))
        assert {c.items for c in node_set(reachable(crn, start))} == set(seen)


# -- stability -------------------------------------------------------------


def test_is_stable_examples():
    assert is_stable(min_crn(), C(X2=1, Y=2))
    assert not is_stable(min_crn(), C(X1=1, X2=1))
    assert not is_stable(max_crn(), C(Z1=1, Z2=1, Y=2))


def test_stably_computes_examples():
    assert stably_computes(min_crn(), min, (2, 3))
    assert stably_computes(max_crn(), max, (1, 1))
    v = stably_computes(naive_max_crn(), max, (1, 1))
    assert v.status == "refuted"
    assert v.witness_config["Y"] == 2
    assert replay(naive_max_crn(), v.start, v.witness) == v.witness_config


def test_refuted_non_oblivious_has_trace_to_dead_end():
    # max claimed to be min: from {X1:1, X2:2} every path ends at Y = 2 != 1
    v = stably_computes(max_crn(), min, (1, 2))
    assert v.status == "refuted" and "no stable configuration" in v.detail
    assert replay(max_crn(), v.start, v.witness) == v.witness_config


# -- verify_window ---------------------------------------------------------


def test_verify_window_examples():
    assert verify_window(compile_quilt(floor3x2_quilt()), lambda x: 3 * x[0] // 2, 10)
    roof = verify_window(compile_spec(roof_spec()), builtin_function("roof"), (4, 4))
    assert roof and len(roof.verdicts) == 25
    assert roof.summary().startswith("all 25 inputs verified")
    naive = verify_window(naive_max_crn(), max, (2, 2))
    assert naive.status == "refuted"
    assert naive.first("refuted").x == (1, 1)


def test_verify_window_report_json():
    rep = verify_window(min_crn(), min, 2)
    data = rep.to_json()
    assert data["status"] == "verified"
    assert len(data["verdicts"]) == 9
    assert all({"status", "witness", "graph_size"} <= set(v) for v in data["verdicts"])
    assert rep.max_graph_size == max(v["graph_size"] for v in data["verdicts"])


def test_verify_window_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        verify_window(min_crn(), min, (1, 2, 3))


def test_verify_window_workers_agree():
    crn = compile_1d(builtin_1d("floor3x2"))
    f = builtin_function("floor3x2")
    one = verify_window(crn, f, 6)
    two = verify_window(crn, f, 6, workers=2)
    assert json.dumps(one.to_json()) == json.dumps(two.to_json())


# -- overproduction --------------------------------------------------------


def test_overproduction_examples():
    trace = overproduction_witness(naive_max_crn(), max, (1, 1))
    assert len(trace) == 2 and trace[-1][1]["Y"] == 2
    assert overproduction_witness(min_crn(), min, (3, 3)) is None
    assert overproduction_witness(compile_spec(min1_spec()), lambda x: min(1, x[0]), (4,)) is None
    with pytest.raises(ValueError):
        overproduction_witness(max_crn(), max, (1, 1))


def test_format_trace():
    trace = overproduction_witness(naive_max_crn(), max, (1, 1))
    text = format_trace(C(X1=1, X2=1), trace).splitlines()
    assert text[0] == "start: X1:1 X2:1"
    assert all(line.startswith("fire: ") and " => " in line for line in text[1:])


# -- caps ------------------------------------------------------------------

GROWTH = Crn(("X",), "Y", (Reaction.parse("X -> 2 X + Y"),))


def test_caps_parse_and_env(monkeypatch):
    assert Caps.parse("100,7") == Caps(100, 7)
    assert Caps.parse(",7") == Caps(10**6, 7)
    assert Caps() == Caps(10**6, 10**4)
    for bad in ["a,b", "0,1", "1,2,3"]:
        with pytest.raises(ValueError):
            Caps.parse(bad)
    monkeypatch.setenv(CAPS_ENV, "50,20")
    assert Caps.from_env() == Caps(50, 20)
    assert reachable(GROWTH, C(X=1)).capped
    monkeypatch.delenv(CAPS_ENV)
    assert Caps.from_env() == Caps()


def test_capped_verdicts():
    caps = Caps(100, 30)
    v = stably_computes(GROWTH, lambda x: 0, (1,), caps)
    assert v.status == "capped" and not v
    assert verify_window(GROWTH, lambda x: 0, 1, caps).status == "capped"
    with pytest.raises(CapExceeded):
        is_stable(GROWTH, C(X=1), caps)
    with pytest.raises(CapExceeded):
        overproduction_witness(GROWTH, lambda x: 10**9, (1,), caps)
    # growth reached the per-species cap before producing the overshoot: still found if reachable
    assert overproduction_witness(GROWTH, lambda x: 3, (1,), caps) is not None


# -- Dickson search --------------------------------------------------------


def test_dickson_max():
    w = dickson_search(builtin_function("max"), 2, 5)
    assert w is not None and w.lhs > w.rhs
    assert all(p <= q for p, q in zip(w.a, w.b)) and w.a != w.b
    assert (w.a, w.b, w.delta, w.lhs, w.rhs) == ((0, 0), (5, 0), (0, 5), 5, 0)
    f = builtin_function("max")
    shift = lambda p: tuple(u + v for u, v in zip(p, w.delta))  # noqa: E731
    assert f(shift(w.a)) - f(w.a) == w.lhs and f(shift(w.b)) - f(w.b) == w.rhs


def test_dickson_depressed_strip():
    f = builtin_function("depressed-strip")
    w = dickson_search(f, 2, 5)
    assert w is not None and w.lhs > w.rhs
    # the witness runs along the first axis with the displacement on the second
    assert w.a[1] == w.b[1] == 0 and w.delta[0] == 0
    assert len(w.chain) == 6


@pytest.mark.parametrize("name", ["min", "roof", "floor3x2", "min1", "corner"])
def test_dickson_none_on_computable(name):
    b = builtin_function(name)
    assert dickson_search(b, b.dimension or 2, 5) is None


def test_dickson_none_on_compiled_corpus():
    from oblivious_crn.funcspec import spec_eval

    for s in (roof_spec(), min1_spec(), corner_spec()):
        assert dickson_search(lambda x, s=s: spec_eval(s, x), s.dimension, 5) is None


# -- properties ------------------------------------------------------------

SPECIES = ["A", "B", "C", "Y"]
SMALL_CAPS = Caps(400, 12)


@st.composite
def random_crn(draw, oblivious=False):
    reactant_species = SPECIES[:-1] if oblivious else SPECIES
    side_r = st.dictionaries(st.sampled_from(reactant_species), st.integers(1, 2), min_size=1, max_size=2)
    side_p = st.dictionaries(st.sampled_from(SPECIES), st.integers(1, 2), max_size=2)
    rules = []
    for _ in range(draw(st.integers(1, 4))):
        r, p = draw(side_r), draw(side_p)
        if r != p:
            rules.append(Reaction.of(r, p))
    return Crn(("A", "B"), "Y", tuple(rules))


inputs = st.tuples(st.integers(0, 3), st.integers(0, 3))


@settings(max_examples=1000, deadline=None)
@given(random_crn(oblivious=True), inputs)
def test_output_never_decreases_on_oblivious_graphs(crn, x):
    if not crn.reactions:
        return
    assert is_output_oblivious(crn)
    g = reachable(crn, initial_configuration(crn, x), SMALL_CAPS)
    for i, out in enumerate(g.succ):
        for _, j in out:
            assert g.y(j) >= g.y(i)


@settings(max_examples=1000, deadline=None)
@given(random_crn(), inputs, st.integers(0, 3))
def test_refutations_replay(crn, x, target):
    if not crn.reactions:
        return
    v = stably_computes(crn, lambda _: target, x, SMALL_CAPS)
    if v.status == "refuted":
        assert replay(crn, v.start, v.witness) == v.witness_config
        assert v.witness_config in node_set(reachable(crn, v.start, SMALL_CAPS))


@settings(max_examples=300, deadline=None)
@given(random_crn(), inputs, st.integers(0, 3))
def test_verdict_matches_quadratic_oracle(crn, x, target):
    if not crn.reactions:
        return
    v = stably_computes(crn, lambda _: target, x, SMALL_CAPS)
    if v.status == "capped":
        return
    assert bool(v) == oracles.stably_computes(oracles.rules_of(crn), oracles.start_of(crn, x), "Y", target)


@settings(max_examples=200, deadline=None)
@given(random_crn(), inputs)
def test_scc_stability_is_sound(crn, x):
    """Stable per SCC condensation iff every descendant in the raw graph has the same Y."""
    if not crn.reactions:
        return
    g = reachable(crn, initial_configuration(crn, x), SMALL_CAPS)
    if g.capped or len(g) > 1000:
        return
    from oblivious_crn.verifier import _closure

    cl = _closure(g)
    edges = {i: [j for _, j in out] for i, out in enumerate(g.succ)}
    for i in range(len(g)):
        ys = {g.y(j) for j in oracles.descendants(edges, i)}
        assert cl.stable(i) == (len(ys) == 1)


def test_verdicts_are_byte_deterministic():
    crn = compile_spec(roof_spec())
    f = builtin_function("roof")
    a = [stably_computes(crn, f, x).dumps() for x in [(1, 2), (3, 3)]]
    b = [stably_computes(crn, f, x).dumps() for x in [(1, 2), (3, 3)]]
    assert a == b
    r1 = verify_window(naive_max_crn(), max, 2).to_json()
    r2 = verify_window(naive_max_crn(), max, 2).to_json()
    assert json.dumps(r1, sort_keys=True) == json.dumps(r2, sort_keys=True)
