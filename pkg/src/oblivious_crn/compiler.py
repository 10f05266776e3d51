"""Emit output-oblivious CRNs from function descriptions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .crn import SEP, Crn, Reaction, is_output_oblivious
from .funcspec import (
    Eventual1DForm,
    ObliviousSpec,
    QuiltAffine,
    Semilinear1D,
    extract_eventual_1d,
    quilt_delta,
    quilt_eval,
    quilt_validate,
    spec_validate,
    superadditive_check,
)

__all__ = [
    "CompileError",
    "GadgetInstance",
    "input_names",
    "compile_quilt",
    "compile_constant",
    "compile_min",
    "compile_indicator",
    "compile_truncate",
    "compile_fanout",
    "compile_spec",
    "compile_1d",
    "compile_1d_leaderless",
]


class CompileError(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class GadgetInstance:
    """A fragment with possibly several outputs.

    ``crn`` carries the reactions with ``outputs[0]`` as its designated
    output; :meth:`project` retargets it to any other output.
    """

    crn: Crn
    outputs: tuple[str, ...]
    namespace: str = ""

    @property
    def inputs(self) -> tuple[str, ...]:
        return self.crn.inputs

    @property
    def leader(self) -> str | None:
        return self.crn.leader

    def project(self, k: int) -> Crn:
        return Crn(self.crn.inputs, self.outputs[k], self.crn.reactions, self.crn.leader)


def input_names(d: int) -> tuple[str, ...]:
    return ("X",) if d == 1 else tuple(f"X{i + 1}" for i in range(d))


def _state(prefix: str, cls: Sequence[int]) -> str:
    return f"{prefix}_{'_'.join(map(str, cls)) or '0'}"


def _rxn(reactants: Mapping[str, int], products: Mapping[str, int]) -> Reaction:
    return Reaction.of({s: k for s, k in reactants.items() if k}, {s: k for s, k in products.items() if k})


def _emitted(crn: Crn) -> Crn:
    assert is_output_oblivious(crn), f"emitted CRN consumes its output:\n{crn}"
    return crn


def compile_quilt(g: QuiltAffine) -> Crn:
    """Leader walk over the residue classes, emitting each finite difference."""
    report = quilt_validate(g)
    if not report:
        raise CompileError(f"invalid quilt-affine function: {report.message}", report.witness)
    for r in g.classes():
        v = quilt_eval(g, r)
        if v < 0:
            raise CompileError(f"quilt-affine function is negative at {r}: {v}", r)
    d, p = g.dimension, g.period
    xs = input_names(d)
    zero = (0,) * d
    reactions = [_rxn({"L": 1}, {"Y": quilt_eval(g, zero), _state("L", zero): 1})]
    for i in range(d):
        for cls in g.classes():
            nxt = list(cls)
            nxt[i] = (nxt[i] + 1) % p
            delta = int(quilt_delta(g, cls, i))
            reactions.append(_rxn({_state("L", cls): 1, xs[i]: 1}, {"Y": delta, _state("L", nxt): 1}))
    return _emitted(Crn(xs, "Y", tuple(reactions), "L"))


def compile_constant(c: int, d: int = 0) -> Crn:
    if c < 0:
        raise CompileError(f"negative constant {c}")
    return _emitted(Crn(input_names(d), "Y", (_rxn({"L": 1}, {"Y": c}),), "L"))


def compile_min(k: int) -> Crn:
    if k < 1:
        raise CompileError("min needs at least one input")
    xs = tuple(f"X{i + 1}" for i in range(k))
    return _emitted(Crn(xs, "Y", (_rxn({x: 1 for x in xs}, {"Y": 1}),)))


def compile_indicator(axis: int, j: int, d: int | None = None) -> Crn:
    """``a + [x(axis) > j] * b`` with inputs ``A, B, X_1..X_d``.

    ``axis`` is 0-based; ``d`` defaults to ``axis + 1``.
    """
    d = axis + 1 if d is None else d
    if not 0 <= axis < d:
        raise CompileError(f"axis {axis} outside dimension {d}")
    xs = tuple(f"X{i + 1}" for i in range(d))
    xi = xs[axis]
    reactions = (
        _rxn({"A": 1}, {"Y": 1}),
        _rxn({xi: j + 1, "B": 1}, {xi: j + 1, "Y": 1}),
    )
    return _emitted(Crn(("A", "B") + xs, "Y", reactions))


def compile_truncate(n: int, d: int = 1) -> GadgetInstance:
    """``(x - n)_+`` on every axis: ``(n+1) X_i -> n X_i + Y_i``."""
    if n < 0:
        raise CompileError(f"negative truncation {n}")
    xs = tuple(f"X{i + 1}" for i in range(d))
    ys = tuple(f"Y{i + 1}" for i in range(d))
    reactions = tuple(_rxn({x: n + 1}, {x: n, y: 1}) for x, y in zip(xs, ys))
    crn = _emitted(Crn(xs, ys[0], reactions))
    return GadgetInstance(crn, ys)


def compile_fanout(m: int, d: int = 1) -> GadgetInstance:
    """``X_i -> X_i^1 + ... + X_i^m``; outputs ordered axis-major."""
    if m < 1:
        raise CompileError("fan-out needs at least one copy")
    xs = tuple(f"X{i + 1}" for i in range(d))
    outs = tuple(f"{x}_c{k + 1}" for x in xs for k in range(m))
    reactions = tuple(_rxn({x: 1}, {f"{x}_c{k + 1}": 1 for k in range(m)}) for x in xs)
    crn = _emitted(Crn(xs, outs[0], reactions))
    return GadgetInstance(crn, outs)


# -- recursive assembly ----------------------------------------------------


class _Assembler:
    """Collects namespaced gadget reactions and sub-leaders."""

    def __init__(self):
        self.reactions: list[Reaction] = []
        self.leaders: list[str] = []

    def embed(self, crn: Crn, prefix: str, wiring: Mapping[str, str] = {}, extra_outputs: Sequence[str] = ()) -> dict[str, str]:
        mapping = {s: wiring.get(s, f"{prefix}{SEP}{s}") for s in crn.species}
        for s in extra_outputs:
            mapping.setdefault(s, wiring.get(s, f"{prefix}{SEP}{s}"))
        self.reactions.extend(r.rename(mapping) for r in crn.reactions)
        if crn.leader:
            self.leaders.append(mapping[crn.leader])
        return mapping


def _piece_gadget(g: QuiltAffine, floor: Sequence[int], fixed: Mapping[int, int], free: Sequence[int]):
    """Shift by the floor, pin fixed axes, and drop axes the piece ignores.

    Returns the reduced quilt and the original axis of each of its inputs.
    """
    h = g.shift(floor).substitute(dict(fixed))
    axes = list(free)
    ignored = {k: 0 for k, _ in enumerate(axes) if not h.depends_on(k)}
    if ignored:
        h = h.substitute(ignored)
        axes = [a for k, a in enumerate(axes) if k not in ignored]
    for r in h.classes():
        v = quilt_eval(h, r)
        if v < 0:
            raise CompileError(f"shifted piece is negative at {r} ({v}); dominance check failed", r)
    return h, axes


def _assemble(s: ObliviousSpec) -> Crn:
    d = s.dimension
    xs = input_names(d)
    fixed = dict(s.fixed)
    free = s.free_axes
    asm = _Assembler()
    consumers: dict[int, list[str]] = {i: [] for i in free}

    shaped = [_piece_gadget(g, s.floor, fixed, free) for g in s.pieces]
    n_terms = 1 + len(s.restrictions)
    term_out = ["Y"] if n_terms == 1 else [f"w{t}" for t in range(n_terms)]

    def pipeline(t: int, out: str) -> None:
        """``f(x v n)`` into species ``out``."""
        piece_out = [out] if len(shaped) == 1 else [f"t{t}{SEP}g{k}{SEP}out" for k in range(len(shaped))]
        for k, (h, axes) in enumerate(shaped):
            prefix = f"t{t}{SEP}g{k}"
            if not axes:
                asm.embed(compile_constant(quilt_eval(h, ())), prefix, {"Y": piece_out[k]})
                continue
            q = compile_quilt(h)
            wiring = {"Y": piece_out[k]}
            for qx, i in zip(q.inputs, axes):
                if s.floor[i] > 0:
                    trunc = compile_truncate(s.floor[i], 1)
                    tname = f"{prefix}{SEP}tr{i + 1}"
                    m = asm.embed(trunc.crn, tname, {"Y1": f"{prefix}{SEP}{qx}"})
                    consumers[i].append(m["X1"])
                    wiring[qx] = f"{prefix}{SEP}{qx}"
                else:
                    consumers[i].append(f"{prefix}{SEP}{qx}")
            asm.embed(q, prefix, wiring, extra_outputs=q.inputs)
        if len(shaped) > 1:
            mn = compile_min(len(shaped))
            wiring = {x: o for x, o in zip(mn.inputs, piece_out)}
            wiring["Y"] = out
            asm.embed(mn, f"t{t}{SEP}min", wiring)

    pipeline(0, term_out[0])
    for t, ((i, j), sub) in enumerate(s.restrictions, start=1):
        prefix = f"r{i + 1}_{j}"
        child = _assemble(sub)
        m = asm.embed(child, prefix, extra_outputs=child.inputs)
        used = {sp for r in child.reactions for sp in r.species()}
        for a in sub.free_axes:
            if child.inputs[a] in used:
                consumers[a].append(m[child.inputs[a]])
        b_name = f"t{t}{SEP}out"
        pipeline(t, b_name)
        ind = compile_indicator(i, j, d)
        ind_x = f"{prefix}{SEP}ind{SEP}X{i + 1}"
        consumers[i].append(ind_x)
        asm.embed(ind, f"{prefix}{SEP}ind", {"A": m[child.output], "B": b_name, f"X{i + 1}": ind_x, "Y": term_out[t]})

    if n_terms > 1:
        mn = compile_min(n_terms)
        wiring = {x: o for x, o in zip(mn.inputs, term_out)}
        wiring["Y"] = "Y"
        asm.embed(mn, "min", wiring)

    rename: dict[str, str] = {}
    head: list[Reaction] = []
    for i in free:
        names = consumers[i]
        if len(names) == 1:
            rename[names[0]] = xs[i]
        elif names:
            fan = compile_fanout(len(names), 1)
            wiring = {o: n for o, n in zip(fan.outputs, names)}
            wiring["X1"] = xs[i]
            head.extend(r.rename({s_: wiring.get(s_, s_) for s_ in r.species()}) for r in fan.crn.reactions)

    leaders = asm.leaders
    if len(leaders) == 1:
        rename[leaders[0]] = "L"
    elif leaders:
        cur = "L"
        for k, ld in enumerate(leaders[:-2]):
            rest = f"split{SEP}L{k + 1}"
            head.append(_rxn({cur: 1}, {ld: 1, rest: 1}))
            cur = rest
        head.append(_rxn({cur: 1}, {leaders[-2]: 1, leaders[-1]: 1}))

    reactions = [r.rename(rename) for r in head + asm.reactions]
    return Crn(xs, "Y", tuple(reactions), "L" if leaders else None)


def compile_spec(s: ObliviousSpec, validate: bool = True) -> Crn:
    """Assemble the min-of-terms network for a recursive spec.

    The output is the minimum of ``f(x v n)`` and, for each free axis ``i``
    and ``j < n(i)``, ``f[x(i) -> j](x) + [x(i) > j] * f(x v n)``. Every
    term gets its own truncate/quilt/min pipeline; restriction terms recurse.
    """
    if validate:
        report = spec_validate(s)
        if not report:
            raise CompileError(f"spec failed validation ({report.check}): {report.message}", report.witness)
    return _emitted(_assemble(s))


# -- one-dimensional constructions -----------------------------------------


def _normalized_form(f: Semilinear1D, minimum: int = 0) -> Eventual1DForm:
    form = extract_eventual_1d(f).tightened()
    n = max(form.n, minimum)
    n = -(-n // form.p) * form.p
    return form.with_n(n)


def compile_1d(f: Semilinear1D) -> Crn:
    """Leader counts inputs up to ``n``, then tracks ``x mod p``."""
    from .funcspec import NotNondecreasingError

    try:
        form = _normalized_form(f)
    except NotNondecreasingError as e:
        raise CompileError(str(e), e.witness) from None
    n, p, fv = form.n, form.p, form.value
    ls = [f"L_{i}" for i in range(n)]
    ps = [f"P_{a}" for a in range(p)]
    reactions = []
    if n == 0:
        reactions.append(_rxn({"L": 1}, {"Y": fv(0), ps[0]: 1}))
    else:
        reactions.append(_rxn({"L": 1}, {"Y": fv(0), ls[0]: 1}))
        for i in range(n - 1):
            reactions.append(_rxn({ls[i]: 1, "X": 1}, {"Y": fv(i + 1) - fv(i), ls[i + 1]: 1}))
        reactions.append(_rxn({ls[n - 1]: 1, "X": 1}, {"Y": fv(n) - fv(n - 1), ps[n % p]: 1}))
    for a in range(p):
        reactions.append(_rxn({ps[a]: 1, "X": 1}, {"Y": form.deltas[a], ps[(a + 1) % p]: 1}))
    return _emitted(Crn(("X",), "Y", tuple(reactions), "L"))


def compile_1d_leaderless(f: Semilinear1D, check_bound: int | None = None) -> Crn:
    """Leaderless variant: partial counters merge pairwise and pay the deficit."""
    if f(0) != 0:
        raise CompileError(f"f(0) = {f(0)}; a leaderless oblivious CRN needs f(0) = 0", (0,))
    form = _normalized_form(f, minimum=1)
    n, p, fv = form.n, form.p, f
    need = 2 * (n + p)
    if check_bound is None:
        check_bound = need
    elif check_bound < need:
        raise ValueError(f"check_bound {check_bound} is below 2(n + p) = {need}")
    witness = superadditive_check(f, check_bound)
    if witness is not None:
        x, z = witness
        raise CompileError(f"not superadditive: f({x}) + f({z}) > f({x + z})", witness)

    def state(total: int) -> str:
        return f"L_{total}" if total < n else f"P_{total % p}"

    def merge(a: int, b: int, total: int, react: Mapping[str, int]) -> Reaction:
        deficit = fv(total) - fv(a) - fv(b)
        if deficit < 0:
            raise CompileError(f"not superadditive: f({a}) + f({b}) > f({total})", (a, b))
        return _rxn(react, {"Y": deficit, state(total): 1})

    reactions = [_rxn({"X": 1}, {"Y": fv(1), state(1): 1})]
    for i in range(1, n):
        reactions.append(_rxn({f"L_{i}": 1, "X": 1}, {"Y": fv(i + 1) - fv(i), state(i + 1): 1}))
    for a in range(p):
        reactions.append(_rxn({f"P_{a}": 1, "X": 1}, {"Y": form.deltas[a], f"P_{(a + 1) % p}": 1}))
    for i in range(1, n):
        for j in range(i, n):
            react = {f"L_{i}": 2} if i == j else {f"L_{i}": 1, f"L_{j}": 1}
            reactions.append(merge(i, j, i + j, react))
    for i in range(1, n):
        for a in range(p):
            reactions.append(merge(i, n + a, i + n + a, {f"L_{i}": 1, f"P_{a}": 1}))
    for a in range(p):
        for b in range(a, p):
            react = {f"P_{a}": 2} if a == b else {f"P_{a}": 1, f"P_{b}": 1}
            reactions.append(merge(n + a, n + b, 2 * n + a + b, react))
    return _emitted(Crn(("X",), "Y", tuple(reactions)))
