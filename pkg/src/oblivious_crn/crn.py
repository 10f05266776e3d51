"""Discrete chemical reaction networks: species, reactions, configurations.

Species are plain strings. Namespaced species use ``::`` separators
(``t0::q1::L``); interface species (inputs, output, global leader) live in
the root namespace.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Configuration",
    "CrnError",
    "NotApplicableError",
    "Reaction",
    "Crn",
    "initial_configuration",
    "applicable",
    "apply",
    "is_output_oblivious",
    "is_output_monotonic",
    "monotonic_to_oblivious",
    "concatenate",
    "namespace",
    "parse_crn",
    "format_crn",
    "format_config",
]

SEP = "::"
_IDENT = r"[A-Za-z_][A-Za-z0-9_]*(?:::[A-Za-z_][A-Za-z0-9_]*)*"
_IDENT_RE = re.compile(rf"^{_IDENT}$")
_TERM_RE = re.compile(rf"^(?:(\d+)\s*)?({_IDENT})$")


class CrnError(ValueError):
    """Malformed network, reaction or configuration."""


class NotApplicableError(CrnError):
    pass


def _multiset(counts: Mapping[str, int] | Iterable[tuple[str, int]]) -> tuple[tuple[str, int], ...]:
    items = counts.items() if isinstance(counts, Mapping) else counts
    merged: dict[str, int] = {}
    for name, k in items:
        if not _IDENT_RE.match(name):
            raise CrnError(f"bad species name {name!r}")
        if k < 0:
            raise CrnError(f"negative count {k} for {name}")
        merged[name] = merged.get(name, 0) + int(k)
    return tuple(sorted((s, k) for s, k in merged.items() if k))


@dataclass(frozen=True)
class Configuration:
    """Sparse, canonical count vector. Absent species have count 0."""

    items: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "items", _multiset(self.items))

    @classmethod
    def of(cls, counts: Mapping[str, int] | None = None, **kw: int) -> "Configuration":
        merged = dict(counts or {})
        merged.update(kw)
        return cls(tuple(merged.items()))

    def __getitem__(self, species: str) -> int:
        for s, k in self.items:
            if s == species:
                return k
        return 0

    def as_dict(self) -> dict[str, int]:
        return dict(self.items)

    def species(self) -> set[str]:
        return {s for s, _ in self.items}

    def __add__(self, other: "Configuration") -> "Configuration":
        merged = self.as_dict()
        for s, k in other.items:
            merged[s] = merged.get(s, 0) + k
        return Configuration(tuple(merged.items()))

    def __le__(self, other: "Configuration") -> bool:
        return all(k <= other[s] for s, k in self.items)

    def __str__(self) -> str:
        return format_config(self)


@dataclass(frozen=True)
class Reaction:
    """A reaction ``R -> P`` with reactant and product multisets."""

    reactants: tuple[tuple[str, int], ...]
    products: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "reactants", _multiset(self.reactants))
        object.__setattr__(self, "products", _multiset(self.products))
        if self.reactants == self.products:
            raise CrnError(f"null reaction {self}")

    @classmethod
    def of(cls, reactants: Mapping[str, int] | str, products: Mapping[str, int] | str) -> "Reaction":
        if isinstance(reactants, str):
            reactants = _parse_side(reactants)
        if isinstance(products, str):
            products = _parse_side(products)
        return cls(tuple(reactants.items()), tuple(products.items()))

    @classmethod
    def parse(cls, text: str) -> "Reaction":
        if "->" not in text:
            raise CrnError(f"missing '->' in reaction {text!r}")
        lhs, rhs = text.split("->", 1)
        return cls.of(_parse_side(lhs), _parse_side(rhs))

    def reactant(self, species: str) -> int:
        return dict(self.reactants).get(species, 0)

    def product(self, species: str) -> int:
        return dict(self.products).get(species, 0)

    def net(self, species: str) -> int:
        return self.product(species) - self.reactant(species)

    def species(self) -> set[str]:
        return {s for s, _ in self.reactants} | {s for s, _ in self.products}

    def rename(self, mapping: Mapping[str, str]) -> "Reaction":
        return Reaction(
            tuple((mapping.get(s, s), k) for s, k in self.reactants),
            tuple((mapping.get(s, s), k) for s, k in self.products),
        )

    def __str__(self) -> str:
        return f"{_format_side(self.reactants)} -> {_format_side(self.products)}"


def _parse_side(text: str) -> dict[str, int]:
    text = text.strip()
    if text == "0":
        return {}
    if not text:
        raise CrnError("empty reaction side; write 0 for no species")
    out: dict[str, int] = {}
    for term in text.split("+"):
        m = _TERM_RE.match(term.strip())
        if not m:
            raise CrnError(f"bad reaction term {term.strip()!r}")
        k = int(m.group(1)) if m.group(1) is not None else 1
        if k == 0:
            raise CrnError(f"zero coefficient in {term.strip()!r}")
        out[m.group(2)] = out.get(m.group(2), 0) + k
    return out


def _format_side(side: tuple[tuple[str, int], ...]) -> str:
    if not side:
        return "0"
    return " + ".join(s if k == 1 else f"{k} {s}" for s, k in side)


@dataclass(frozen=True)
class Crn:
    """A CRN computing ``f: N^d -> N``.

    ``inputs`` is the ordered tuple X_1..X_d. The species set is derived from
    the interface species and the reactions. Duplicate reactions are dropped,
    keeping the first occurrence.
    """

    inputs: tuple[str, ...]
    output: str
    reactions: tuple[Reaction, ...] = ()
    leader: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        seen: dict[Reaction, None] = {}
        for r in self.reactions:
            seen.setdefault(r, None)
        object.__setattr__(self, "reactions", tuple(seen))
        names = list(self.inputs) + [self.output] + ([self.leader] if self.leader else [])
        for name in names:
            if not _IDENT_RE.match(name):
                raise CrnError(f"bad species name {name!r}")
        if len(set(names)) != len(names):
            raise CrnError(f"interface species must be distinct: {names}")

    @property
    def dimension(self) -> int:
        return len(self.inputs)

    @property
    def species(self) -> tuple[str, ...]:
        names = set(self.inputs) | {self.output}
        if self.leader:
            names.add(self.leader)
        for r in self.reactions:
            names |= r.species()
        return tuple(sorted(names))

    def kind(self, species: str) -> str:
        """One of ``input``, ``output``, ``leader``, ``auxiliary``."""
        if species in self.inputs:
            return "input"
        if species == self.output:
            return "output"
        if species == self.leader:
            return "leader"
        if species in self.species:
            return "auxiliary"
        raise KeyError(species)

    def rename(self, mapping: Mapping[str, str]) -> "Crn":
        return Crn(
            inputs=tuple(mapping.get(s, s) for s in self.inputs),
            output=mapping.get(self.output, self.output),
            reactions=tuple(r.rename(mapping) for r in self.reactions),
            leader=mapping.get(self.leader, self.leader) if self.leader else None,
        )

    def __str__(self) -> str:
        return format_crn(self)


def initial_configuration(crn: Crn, x: Sequence[int]) -> Configuration:
    if len(x) != crn.dimension:
        raise CrnError(f"input has length {len(x)}, CRN has dimension {crn.dimension}")
    if any(v < 0 for v in x):
        raise CrnError(f"negative input {tuple(x)}")
    counts = dict(zip(crn.inputs, x))
    if crn.leader:
        counts[crn.leader] = 1
    return Configuration.of(counts)


def applicable(c: Configuration, r: Reaction) -> bool:
    return all(c[s] >= k for s, k in r.reactants)


def apply(c: Configuration, r: Reaction) -> Configuration:
    if not applicable(c, r):
        raise NotApplicableError(f"{r} is not applicable to {format_config(c)}")
    counts = c.as_dict()
    for s, k in r.reactants:
        counts[s] -= k
    for s, k in r.products:
        counts[s] = counts.get(s, 0) + k
    return Configuration.of(counts)


def is_output_oblivious(crn: Crn) -> bool:
    return all(r.reactant(crn.output) == 0 for r in crn.reactions)


def is_output_monotonic(crn: Crn) -> bool:
    return all(r.net(crn.output) >= 0 for r in crn.reactions)


def _fresh(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    if base not in taken:
        return base
    i = 1
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def monotonic_to_oblivious(crn: Crn) -> Crn:
    """Replace the output as catalyst by a shadow species ``Z``.

    ``Z`` is produced alongside every net copy of the output, so its count
    always equals the output count and every catalytic use sees the same
    enabling condition.
    """
    if not is_output_monotonic(crn):
        bad = next(r for r in crn.reactions if r.net(crn.output) < 0)
        raise CrnError(f"not output-monotonic: {bad} decreases {crn.output}")
    if is_output_oblivious(crn):
        return crn
    y = crn.output
    z = _fresh("Z", crn.species)
    out = []
    for r in crn.reactions:
        c = r.reactant(y)
        k = r.net(y)
        if c == 0 and k == 0:
            out.append(r)
            continue
        reactants = {s: n for s, n in r.reactants if s != y}
        products = {s: n for s, n in r.products if s != y}
        if c:
            reactants[z] = c
        if k:
            products[y] = k
        if c + k:
            products[z] = c + k
        out.append(Reaction.of(reactants, products))
    return Crn(crn.inputs, crn.output, tuple(out), crn.leader)


def namespace(crn: Crn, prefix: str, keep: Iterable[str] = ()) -> Crn:
    """Rename every species outside ``keep`` to ``prefix::name``."""
    if not prefix:
        raise CrnError("namespace prefix must be nonempty")
    keep = set(keep)
    mapping = {s: f"{prefix}{SEP}{s}" for s in crn.species if s not in keep}
    return crn.rename(mapping)


def concatenate(upstream: Crn, downstream: Crn, leader: str = "L") -> Crn:
    """Feed ``upstream``'s output into ``downstream``'s single input.

    Upstream inputs and downstream output stay in the root namespace; all
    other species move to ``f::`` (upstream) or ``g::`` (downstream). When
    either side has a leader, a fresh root leader splits into the present
    sides' leaders. Only sound when ``upstream`` is output-oblivious.
    """
    if downstream.dimension != 1:
        raise CrnError(f"downstream must have exactly one input, has {downstream.dimension}")
    if not is_output_oblivious(upstream):
        warnings.warn(
            "upstream CRN consumes its output; concatenation may not compute the composition",
            stacklevel=2,
        )
    f = namespace(upstream, "f", keep=upstream.inputs)
    g = namespace(downstream, "g", keep=[downstream.output])
    link = g.inputs[0]
    f = f.rename({f.output: link})
    if downstream.output in upstream.inputs:
        raise CrnError(f"downstream output {downstream.output} collides with an upstream input")
    reactions = list(f.reactions) + list(g.reactions)
    root_leader = None
    sub_leaders = [s for s in (f.leader, g.leader) if s]
    if sub_leaders:
        root_leader = _fresh(leader, set(upstream.inputs) | {downstream.output})
        reactions.insert(0, Reaction.of({root_leader: 1}, {s: 1 for s in sub_leaders}))
    return Crn(upstream.inputs, downstream.output, tuple(reactions), root_leader)


# -- text format -----------------------------------------------------------


def format_config(c: Configuration, species: Sequence[str] | None = None) -> str:
    names = species if species is not None else [s for s, _ in c.items]
    return " ".join(f"{s}:{c[s]}" for s in names)


def format_crn(crn: Crn) -> str:
    lines = [f"inputs: {' '.join(crn.inputs)}".rstrip(), f"output: {crn.output}"]
    if crn.leader:
        lines.append(f"leader: {crn.leader}")
    lines.extend(str(r) for r in crn.reactions)
    return "\n".join(lines) + "\n"


def parse_crn(text: str) -> Crn:
    inputs: tuple[str, ...] | None = None
    output = leader = None
    reactions = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if "->" in line:
                reactions.append(Reaction.parse(line))
                continue
            key, _, value = line.partition(":")
            key, value = key.strip(), value.strip()
            if not _ or key not in ("inputs", "output", "leader"):
                raise CrnError(f"unrecognised line {line!r}")
            if key == "inputs":
                inputs = tuple(value.split())
            elif key == "output":
                output = value
            else:
                leader = value
            for name in value.split():
                if not _IDENT_RE.match(name):
                    raise CrnError(f"bad species name {name!r}")
        except CrnError as e:
            raise CrnError(f"line {lineno}: {e}") from None
    if inputs is None or output is None:
        raise CrnError("CRN text needs 'inputs:' and 'output:' headers")
    return Crn(inputs, output, tuple(reactions), leader or None)
