"""Exhaustive reachability checks for stable computation on bounded inputs."""

from __future__ import annotations

import itertools
import json
import os
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from .crn import Configuration, Crn, Reaction, format_config, initial_configuration, is_output_oblivious

__all__ = [
    "Caps",
    "CapExceeded",
    "ReachGraph",
    "Verdict",
    "WindowReport",
    "DicksonWitness",
    "reachable",
    "is_stable",
    "stably_computes",
    "verify_window",
    "overproduction_witness",
    "replay",
    "format_trace",
    "dickson_search",
]

CAPS_ENV = "OBLIVIOUS_CRN_CAPS"


@dataclass(frozen=True)
class Caps:
    max_configs: int = 10**6
    max_count: int = 10**4

    @classmethod
    def parse(cls, text: str) -> "Caps":
        """``"configs,count"``; either part may be empty to keep the default."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) > 2:
            raise ValueError(f"caps must look like 'configs,count', got {text!r}")
        base = cls()
        configs = int(parts[0]) if parts[0] else base.max_configs
        count = int(parts[1]) if len(parts) > 1 and parts[1] else base.max_count
        if configs < 1 or count < 1:
            raise ValueError(f"caps must be positive, got {text!r}")
        return cls(configs, count)

    @classmethod
    def from_env(cls) -> "Caps":
        text = os.environ.get(CAPS_ENV)
        return cls.parse(text) if text else cls()


class CapExceeded(RuntimeError):
    pass


# -- reachability graph ----------------------------------------------------


class _Compiled:
    """Reactions as index arrays over a fixed species order."""

    def __init__(self, crn: Crn, extra: Sequence[str] = ()):
        self.species = tuple(sorted(set(crn.species) | set(extra)))
        self.index = {s: i for i, s in enumerate(self.species)}
        self.reactions = crn.reactions
        self.needs = [tuple((self.index[s], k) for s, k in r.reactants) for r in crn.reactions]
        self.deltas = []
        for r in crn.reactions:
            net = {}
            for s, k in r.reactants:
                net[self.index[s]] = net.get(self.index[s], 0) - k
            for s, k in r.products:
                net[self.index[s]] = net.get(self.index[s], 0) + k
            self.deltas.append(tuple((i, k) for i, k in sorted(net.items()) if k))
        self.y = self.index[crn.output]

    def encode(self, c: Configuration) -> tuple[int, ...]:
        v = [0] * len(self.species)
        for s, k in c.items:
            v[self.index[s]] = k
        return tuple(v)

    def decode(self, v: Sequence[int]) -> Configuration:
        return Configuration(tuple((s, k) for s, k in zip(self.species, v) if k))

    def successors(self, v: tuple[int, ...]) -> Iterator[tuple[int, tuple[int, ...]]]:
        for ri, need in enumerate(self.needs):
            if all(v[i] >= k for i, k in need):
                w = list(v)
                for i, k in self.deltas[ri]:
                    w[i] += k
                yield ri, tuple(w)


@dataclass
class ReachGraph:
    """Configurations reachable from ``start`` with BFS-tree parents."""

    crn: Crn
    species: tuple[str, ...]
    nodes: list[tuple[int, ...]]
    succ: list[list[tuple[int, int]]]
    parent: list[tuple[int, int] | None]
    y_index: int
    capped: str | None = None

    def __len__(self) -> int:
        return len(self.nodes)

    def config(self, i: int) -> Configuration:
        return Configuration(tuple((s, k) for s, k in zip(self.species, self.nodes[i]) if k))

    def y(self, i: int) -> int:
        return self.nodes[i][self.y_index]

    def trace_to(self, i: int) -> list[tuple[Reaction, Configuration]]:
        steps = []
        while self.parent[i] is not None:
            ri, prev = self.parent[i]
            steps.append((self.crn.reactions[ri], self.config(i)))
            i = prev
        steps.reverse()
        return steps


def _explore(crn: Crn, start: Configuration, caps: Caps, stop: Callable[[tuple[int, ...], int], bool] | None = None):
    comp = _Compiled(crn, start.species())
    v0 = comp.encode(start)
    index = {v0: 0}
    nodes = [v0]
    succ: list[list[tuple[int, int]]] = []
    parent: list[tuple[int, int] | None] = [None]
    capped = None
    found = None
    if max(v0, default=0) > caps.max_count:
        capped = f"initial configuration exceeds count cap {caps.max_count}"
    queue = deque([0]) if capped is None else deque()
    if stop is not None and stop(v0, comp.y):
        found, queue = 0, deque()
    while queue:
        u = queue.popleft()
        while len(succ) <= u:
            succ.append([])
        out = succ[u]
        for ri, w in comp.successors(nodes[u]):
            j = index.get(w)
            if j is None:
                if max(w) > caps.max_count:
                    capped = f"species count exceeds cap {caps.max_count}"
                    continue
                if len(nodes) >= caps.max_configs:
                    capped = f"more than {caps.max_configs} reachable configurations"
                    continue
                j = len(nodes)
                index[w] = j
                nodes.append(w)
                parent.append((ri, u))
                if stop is not None and stop(w, comp.y):
                    found = j
                    queue.clear()
                    out.append((ri, j))
                    break
                queue.append(j)
            out.append((ri, j))
    while len(succ) < len(nodes):
        succ.append([])
    graph = ReachGraph(crn, comp.species, nodes, succ, parent, comp.y, capped)
    return graph, found


def reachable(crn: Crn, start: Configuration, caps: Caps | None = None) -> ReachGraph:
    """Full reachability graph from ``start``; ``graph.capped`` says if it was cut short."""
    graph, _ = _explore(crn, start, caps or Caps.from_env())
    return graph


def _sccs(succ: list[list[tuple[int, int]]]) -> tuple[list[int], list[list[int]]]:
    """Iterative Tarjan; components come out sinks first."""
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp_of = [-1] * n
    comps: list[list[int]] = []
    stack: list[int] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, k = work[-1]
            edges = succ[v]
            if k < len(edges):
                work[-1] = (v, k + 1)
                w = edges[k][1]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                members = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp_of[w] = len(comps)
                    members.append(w)
                    if w == v:
                        break
                comps.append(members)
    return comp_of, comps


@dataclass
class _Closure:
    comp_of: list[int]
    comps: list[list[int]]
    ymin: list[int]
    ymax: list[int]
    succ_comps: list[set[int]]

    def stable(self, i: int) -> bool:
        c = self.comp_of[i]
        return self.ymin[c] == self.ymax[c]


def _closure(graph: ReachGraph) -> _Closure:
    comp_of, comps = _sccs(graph.succ)
    ymin, ymax, succ_comps = [], [], []
    yi = graph.y_index
    for c, members in enumerate(comps):
        lo = min(graph.nodes[v][yi] for v in members)
        hi = max(graph.nodes[v][yi] for v in members)
        out = set()
        for v in members:
            for _, w in graph.succ[v]:
                d = comp_of[w]
                if d != c:
                    out.add(d)
        for d in out:
            lo = min(lo, ymin[d])
            hi = max(hi, ymax[d])
        ymin.append(lo)
        ymax.append(hi)
        succ_comps.append(out)
    return _Closure(comp_of, comps, ymin, ymax, succ_comps)


def is_stable(crn: Crn, c: Configuration, caps: Caps | None = None) -> bool:
    """Whether every configuration reachable from ``c`` has the same output count."""
    graph = reachable(crn, c, caps)
    if graph.capped:
        raise CapExceeded(graph.capped)
    ys = {graph.y(i) for i in range(len(graph))}
    return len(ys) == 1


# -- verdicts --------------------------------------------------------------


def format_trace(start: Configuration, steps: Sequence[tuple[Reaction, Configuration]]) -> str:
    lines = [f"start: {format_config(start)}"]
    lines += [f"fire: {r} => {format_config(c)}" for r, c in steps]
    return "\n".join(lines)


def replay(crn: Crn, start: Configuration, steps: Sequence[tuple[Reaction, Configuration]]) -> Configuration:
    """Re-fire a witness trace, checking every intermediate configuration."""
    from .crn import apply

    c = start
    for r, expected in steps:
        if r not in crn.reactions:
            raise ValueError(f"reaction {r} is not in the CRN")
        c = apply(c, r)
        if c != expected:
            raise ValueError(f"after {r}: got {format_config(c)}, trace says {format_config(expected)}")
    return c


@dataclass
class Verdict:
    status: str  # "verified" | "refuted" | "capped"
    x: tuple[int, ...]
    expected: int
    graph_size: int
    start: Configuration
    witness: list[tuple[Reaction, Configuration]] = field(default_factory=list)
    detail: str = ""

    def __bool__(self) -> bool:
        return self.status == "verified"

    @property
    def witness_config(self) -> Configuration:
        return self.witness[-1][1] if self.witness else self.start

    def trace_text(self) -> str:
        return format_trace(self.start, self.witness)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "input": list(self.x),
            "expected": self.expected,
            "graph_size": self.graph_size,
            "detail": self.detail,
            "start": format_config(self.start),
            "witness": [{"reaction": str(r), "config": format_config(c)} for r, c in self.witness],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def stably_computes(crn: Crn, f: Callable[[tuple[int, ...]], int], x: Sequence[int], caps: Caps | None = None) -> Verdict:
    """Decide whether ``crn`` stably computes ``f(x)`` from the initial configuration of ``x``.

    Every configuration reachable from the start must be able to reach a
    stable configuration whose output equals ``f(x)``.
    """
    x = tuple(int(v) for v in x)
    target = int(f(x))
    start = initial_configuration(crn, x)
    graph = reachable(crn, start, caps)
    if graph.capped:
        return Verdict("capped", x, target, len(graph), start, detail=graph.capped)
    cl = _closure(graph)
    good = []
    for c, _ in enumerate(cl.comps):
        ok = (cl.ymin[c] == cl.ymax[c] == target) or any(good[d] for d in cl.succ_comps[c])
        good.append(ok)
    if is_output_oblivious(crn):
        for i in range(len(graph)):
            if graph.y(i) > target:
                return Verdict(
                    "refuted", x, target, len(graph), start, graph.trace_to(i),
                    f"output {graph.y(i)} exceeds f{x} = {target} and can never decrease",
                )
    for i in range(len(graph)):
        if not good[cl.comp_of[i]]:
            return Verdict(
                "refuted", x, target, len(graph), start, graph.trace_to(i),
                f"no stable configuration with output {target} is reachable from here",
            )
    return Verdict("verified", x, target, len(graph), start, detail=f"{len(graph)} configurations")


def overproduction_witness(crn: Crn, f: Callable[[tuple[int, ...]], int], x: Sequence[int], caps: Caps | None = None):
    """Shortest trace to a configuration whose output exceeds ``f(x)``, or ``None``."""
    if not is_output_oblivious(crn):
        raise ValueError("overproduction witnesses are only conclusive for output-oblivious CRNs")
    x = tuple(int(v) for v in x)
    target = int(f(x))
    start = initial_configuration(crn, x)
    graph, found = _explore(crn, start, caps or Caps.from_env(), stop=lambda v, yi: v[yi] > target)
    if found is not None:
        return graph.trace_to(found)
    if graph.capped:
        raise CapExceeded(graph.capped)
    return None


@dataclass
class WindowReport:
    verdicts: dict[tuple[int, ...], Verdict]

    @property
    def status(self) -> str:
        statuses = {v.status for v in self.verdicts.values()}
        if "refuted" in statuses:
            return "refuted"
        if "capped" in statuses:
            return "capped"
        return "verified"

    def __bool__(self) -> bool:
        return self.status == "verified"

    def first(self, status: str) -> Verdict | None:
        return next((v for v in self.verdicts.values() if v.status == status), None)

    @property
    def max_graph_size(self) -> int:
        return max((v.graph_size for v in self.verdicts.values()), default=0)

    def summary(self) -> str:
        n = len(self.verdicts)
        if self.status == "verified":
            return f"all {n} inputs verified (largest graph {self.max_graph_size} configurations)"
        bad = self.first(self.status)
        counts = {s: sum(v.status == s for v in self.verdicts.values()) for s in ("verified", "refuted", "capped")}
        head = ", ".join(f"{k} {v}" for k, v in counts.items() if v)
        return f"{head} of {n} inputs; first {self.status} at x = {bad.x}: {bad.detail}"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "summary": self.summary(),
            "verdicts": [v.to_json() for _, v in sorted(self.verdicts.items())],
        }


def _window_box(d: int, window: int | Sequence[int]) -> list[tuple[int, ...]]:
    bounds = [window] * d if isinstance(window, int) else list(window)
    if len(bounds) != d:
        raise ValueError(f"window {window} does not have dimension {d}")
    return list(itertools.product(*(range(b + 1) for b in bounds)))


def _verify_one(args):
    crn, f, x, caps = args
    return stably_computes(crn, f, x, caps)


def verify_window(crn: Crn, f: Callable[[tuple[int, ...]], int], window: int | Sequence[int], caps: Caps | None = None, workers: int = 1) -> WindowReport:
    """Run :func:`stably_computes` on every ``x`` in ``[0, window]^d``.

    With ``workers > 1`` the inputs are spread over processes; ``f`` must then
    be picklable. Results do not depend on the worker count.
    """
    caps = caps or Caps.from_env()
    points = _window_box(crn.dimension, window)
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_verify_one, [(crn, f, x, caps) for x in points]))
    else:
        results = [stably_computes(crn, f, x, caps) for x in points]
    return WindowReport(dict(zip(points, results)))


# -- Dickson-style overproduction search -----------------------------------


@dataclass(frozen=True)
class DicksonWitness:
    """``f(a + delta) - f(a) > f(b + delta) - f(b)`` with ``a < b``.

    ``lhs`` and ``rhs`` are the two sides. ``chain`` is the run of evenly
    spaced points from ``a`` to ``b`` in which every earlier/later pair
    violates the inequality for some displacement within the bound.
    """

    a: tuple[int, ...]
    b: tuple[int, ...]
    delta: tuple[int, ...]
    lhs: int
    rhs: int
    chain: tuple[tuple[int, ...], ...] = ()


def _best_violation(f, a, b, bound: int, d: int):
    """Displacement maximizing ``lhs - rhs`` (first in product order), or ``None``."""
    fa, fb = f(a), f(b)
    best = None
    for delta in itertools.product(range(bound + 1), repeat=d):
        lhs = f(tuple(u + v for u, v in zip(a, delta))) - fa
        rhs = f(tuple(u + v for u, v in zip(b, delta))) - fb
        if lhs > rhs and (best is None or lhs - rhs > best[0] - best[1]):
            best = (lhs, rhs, delta)
    return best


def _directions(d: int) -> list[tuple[int, ...]]:
    units = [tuple(int(k == i) for k in range(d)) for i in range(d)]
    rest = [u for u in itertools.product((0, 1), repeat=d) if sum(u) > 1]
    return units + sorted(rest, key=sum)


def dickson_search(f: Callable[[tuple[int, ...]], int], d: int, bound: int) -> DicksonWitness | None:
    """Bounded search for an overproduction-forcing sequence.

    An output-oblivious CRN never retracts output, so ``f`` is not
    obliviously computable if there is an infinite sequence ``a_1, a_2, ...``
    in which every pair ``i < j`` has a displacement ``delta`` with
    ``f(a_i + delta) - f(a_i) > f(a_j + delta) - f(a_j)``. A single
    violating pair proves nothing (``min`` has plenty), so the search looks
    for the finite shadow of such a sequence: ``bound + 1`` points
    ``a + i u`` along a 0/1 direction ``u`` that cross the whole box, start
    at most ``bound // 2`` from the moving axes, and violate pairwise with
    ``delta <= bound``. A hit is a heuristic signal, not a proof, and
    ``None`` does not prove computability. ``f`` must be total on
    ``[0, 2 * bound]^d``.
    """
    cache: dict = {}

    def fv(x):
        if x not in cache:
            cache[x] = int(f(x))
        return cache[x]

    pairs: dict = {}

    def violation(a, b):
        if (a, b) not in pairs:
            pairs[(a, b)] = _best_violation(fv, a, b, bound, d)
        return pairs[(a, b)]

    for u in _directions(d):
        still = [k for k in range(d) if not u[k]]
        for base in itertools.product(range(bound // 2 + 1), repeat=len(still)):
            a0 = [0] * d
            for k, v in zip(still, base):
                a0[k] = v
            chain = [tuple(c + i * s for c, s in zip(a0, u)) for i in range(bound + 1)]
            if all(violation(chain[i], chain[j]) for j in range(1, len(chain)) for i in range(j)):
                lhs, rhs, delta = violation(chain[0], chain[-1])
                return DicksonWitness(chain[0], chain[-1], delta, lhs, rhs, tuple(chain))
    return None
