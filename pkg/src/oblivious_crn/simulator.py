"""Seeded random execution under a uniform choice among applicable reactions."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .crn import Configuration, Crn, format_config, initial_configuration

__all__ = ["Trace", "ConvergenceSummary", "simulate", "convergence_stats"]

_BATCH = 4096


@dataclass(frozen=True)
class Trace:
    seed: int
    steps: tuple[tuple[int, int], ...]  # (reaction index, Y count after firing)
    terminal: Configuration
    converged: bool

    @property
    def output(self) -> int:
        return self.steps[-1][1] if self.steps else 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "reaction_index", "Y_count"])
        for k, (ri, y) in enumerate(self.steps, start=1):
            w.writerow([k, ri, y])
        return buf.getvalue()

    def gnuplot_data(self) -> str:
        """Whitespace columns ``step Y`` ready for ``plot 'file' with steps``."""
        lines = [f"# seed {self.seed}", "# step Y"]
        lines += [f"{k} {y}" for k, (_, y) in enumerate(self.steps, start=1)]
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "steps": len(self.steps),
            "converged": self.converged,
            "terminal": format_config(self.terminal),
        }


def simulate(crn: Crn, x: Sequence[int], seed: int, max_steps: int = 10**5) -> Trace:
    """Fire reactions until none applies or ``max_steps`` is reached.

    Each step picks uniformly among the applicable reaction types using a
    PCG64 stream seeded with ``seed``.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    start = initial_configuration(crn, x)
    species = sorted(set(crn.species) | set(start.species()))
    index = {s: i for i, s in enumerate(species)}
    counts = [0] * len(species)
    for s, k in start.items:
        counts[index[s]] = k
    needs = [tuple((index[s], k) for s, k in r.reactants) for r in crn.reactions]
    deltas = []
    for r in crn.reactions:
        net: dict[int, int] = {}
        for s, k in r.reactants:
            net[index[s]] = net.get(index[s], 0) - k
        for s, k in r.products:
            net[index[s]] = net.get(index[s], 0) + k
        deltas.append(tuple((i, k) for i, k in net.items() if k))
    yi = index[crn.output]

    rng = np.random.Generator(np.random.PCG64(seed))
    uniforms = rng.random(_BATCH)
    used = 0
    steps = []
    converged = False
    for _ in range(max_steps):
        live = [ri for ri, need in enumerate(needs) if all(counts[i] >= k for i, k in need)]
        if not live:
            converged = True
            break
        if used == _BATCH:
            uniforms, used = rng.random(_BATCH), 0
        ri = live[int(uniforms[used] * len(live))]
        used += 1
        for i, k in deltas[ri]:
            counts[i] += k
        steps.append((ri, counts[yi]))
    else:
        converged = not any(all(counts[i] >= k for i, k in need) for need in needs)
    terminal = Configuration(tuple((s, k) for s, k in zip(species, counts) if k))
    return Trace(int(seed), tuple(steps), terminal, converged)


@dataclass(frozen=True)
class ConvergenceSummary:
    runs: int
    correct: int
    expected: int
    mean_steps: float
    max_steps: int
    failures: tuple[tuple[int, int, bool], ...]  # (seed, terminal Y, converged)

    @property
    def fraction(self) -> float:
        return self.correct / self.runs if self.runs else 0.0

    def to_json(self) -> dict:
        return {
            "runs": self.runs,
            "correct": self.correct,
            "fraction": self.fraction,
            "expected": self.expected,
            "mean_steps": self.mean_steps,
            "max_steps": self.max_steps,
            "failures": [{"seed": s, "Y": y, "converged": c} for s, y, c in self.failures],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _run(args):
    crn, x, seed, max_steps = args
    return simulate(crn, x, seed, max_steps)


def convergence_stats(
    crn: Crn,
    x: Sequence[int],
    f: Callable[[tuple[int, ...]], int],
    seeds: Sequence[int],
    max_steps: int = 10**5,
    workers: int = 1,
) -> ConvergenceSummary:
    x = tuple(int(v) for v in x)
    expected = int(f(x))
    jobs = [(crn, x, s, max_steps) for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(_run, jobs))
    else:
        traces = [_run(j) for j in jobs]
    ok = [t.converged and t.terminal[crn.output] == expected for t in traces]
    lengths = [len(t.steps) for t in traces]
    failures = tuple((t.seed, t.terminal[crn.output], t.converged) for t, good in zip(traces, ok) if not good)
    return ConvergenceSummary(
        len(traces),
        sum(ok),
        expected,
        sum(lengths) / len(lengths) if lengths else 0.0,
        max(lengths, default=0),
        failures,
    )
