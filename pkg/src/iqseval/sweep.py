"""Weight sensitivity: score a method across a grid of weight triples.

The grid enumerates every convex combination with components that are
multiples of the step, built from integer triples so every weight is an exact
ratio i/n and permutations of a triple reuse bitwise-identical floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import UsageError
from .metrics import compose_iqs
from .types import IQSWeights, TermTriple


@dataclass(frozen=True)
class SweepStats:
    """Distribution of composite scores over one weight grid."""

    method_id: str
    task_id: str
    mean: float
    std_population: float
    std_sample: float | None
    n_combos: int

    def to_dict(self) -> dict:
        return {
            "method_id": self.method_id,
            "task_id": self.task_id,
            "mean": self.mean,
            "std_population": self.std_population,
            "std_sample": self.std_sample,
            "n_combos": self.n_combos,
        }


def generate_weight_grid(step: float = 0.1) -> list[IQSWeights]:
    """All weight triples on the step lattice, in lexicographic order.

    The step must divide 1 exactly (0.1 gives 66 triples). It is read as the
    nearest unit fraction 1/n, so both 0.1 and the float 1/3 work; 0.3 or
    0.07 do not. Triples are enumerated as integers (i, j, k) with
    i + j + k = n and emitted as (i/n, j/n, k/n).
    """
    if isinstance(step, bool) or not isinstance(step, (int, float)):
        raise UsageError(f"step must be a number, got {step!r}")
    if not 0 < step <= 1 or not math.isfinite(step):
        raise UsageError(f"step must lie in (0, 1], got {step!r}")
    snapped = Fraction(step).limit_denominator(1000)
    if snapped.numerator != 1:
        raise UsageError(f"step {step!r} must divide 1 exactly")
    n = snapped.denominator
    grid: list[IQSWeights] = []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            k = n - i - j
            grid.append(IQSWeights(i / n, j / n, k / n))
    return grid


def sweep(
    terms: TermTriple,
    grid: list[IQSWeights] | None = None,
    *,
    method_id: str = "",
    task_id: str = "",
) -> SweepStats:
    """Compose the terms under every grid weight and summarize the spread.

    std_population divides by n, std_sample by n - 1 (None when n == 1).
    """
    if grid is None:
        grid = generate_weight_grid()
    if not grid:
        raise UsageError("weight grid must not be empty")
    scores = [compose_iqs(*terms.as_tuple(), w) for w in grid]
    n = len(scores)
    mean = sum(scores) / n
    sq = sum((s - mean) ** 2 for s in scores)
    std_population = math.sqrt(sq / n)
    std_sample = math.sqrt(sq / (n - 1)) if n > 1 else None
    return SweepStats(
        method_id=method_id,
        task_id=task_id,
        mean=mean,
        std_population=std_population,
        std_sample=std_sample,
        n_combos=n,
    )
