"""Turn raw attribution vectors into signed feature sets.

A feature set holds the token indices a method highlights for one class.
Positive attributions support the class mapped to ``positive_attribution`` in
the task's sign map, negative ones the other class. A token with attribution
exactly zero is never selected by any policy.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError, StructuralError
from .types import AttributionExplanation, AttributionSign, SignedFeatureSets, TaskSpec


class PolicyMode(str, Enum):
    RELATIVE_THRESHOLD = "relative_threshold"
    ABSOLUTE_THRESHOLD = "absolute_threshold"
    TOP_K = "top_k"


@dataclass(frozen=True)
class ExtractionPolicy:
    """How to decide which attributions survive.

    relative_threshold keeps |a_i| >= value * max|a|, absolute_threshold keeps
    |a_i| >= value, top_k keeps the k largest by |a_i| (ties broken toward the
    lower index).
    """

    mode: PolicyMode
    value: float

    def __post_init__(self) -> None:
        try:
            mode = PolicyMode(self.mode)
        except ValueError:
            raise ConfigError(f"unknown extraction policy mode {self.mode!r}") from None
        object.__setattr__(self, "mode", mode)
        v = self.value
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"extraction policy value must be a number, got {v!r}")
        v = float(v)
        if mode is PolicyMode.RELATIVE_THRESHOLD:
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"relative_threshold value must lie in [0, 1], got {v!r}")
        elif mode is PolicyMode.ABSOLUTE_THRESHOLD:
            if v < 0.0 or v != v:
                raise ConfigError(f"absolute_threshold value must be nonnegative, got {v!r}")
        else:
            if v < 1 or v != int(v):
                raise ConfigError(f"top_k value must be an integer >= 1, got {v!r}")
        object.__setattr__(self, "value", v)

    @classmethod
    def parse(cls, text: str) -> "ExtractionPolicy":
        """Parse the ``mode:value`` form used on the command line."""
        mode, sep, raw = text.partition(":")
        if not sep:
            raise ConfigError(f"extraction policy must look like mode:value, got {text!r}")
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(f"extraction policy value {raw!r} is not a number") from None
        return cls(PolicyMode(mode) if mode in PolicyMode._value2member_map_ else mode, value)


DEFAULT_POLICY = ExtractionPolicy(PolicyMode.RELATIVE_THRESHOLD, 0.05)


def _surviving_indices(attributions: tuple[float, ...], policy: ExtractionPolicy) -> list[int]:
    if policy.mode is PolicyMode.TOP_K:
        nonzero = [i for i, a in enumerate(attributions) if a != 0.0]
        nonzero.sort(key=lambda i: (-abs(attributions[i]), i))
        return nonzero[: int(policy.value)]
    if policy.mode is PolicyMode.RELATIVE_THRESHOLD:
        peak = max((abs(a) for a in attributions), default=0.0)
        if peak == 0.0:
            return []
        cut = policy.value * peak
    else:
        cut = policy.value
    # Zero attributions carry no signal, so they never pass, even at cut 0.
    return [i for i, a in enumerate(attributions) if a != 0.0 and abs(a) >= cut]


def extract_feature_sets(
    explanation: AttributionExplanation,
    task: TaskSpec,
    policy: ExtractionPolicy = DEFAULT_POLICY,
    *,
    n_tokens: int | None = None,
) -> SignedFeatureSets:
    """Select surviving tokens and split them by attribution sign.

    The result always has an entry for every feature class of the task, so
    callers can rely on empty sets rather than missing keys.
    """
    if n_tokens is not None and len(explanation.attributions) != n_tokens:
        raise StructuralError(
            f"explanation ({explanation.sample_id!r}, {explanation.method_id!r}) has "
            f"{len(explanation.attributions)} attributions for {n_tokens} tokens"
        )
    positive_class = task.class_for_sign(AttributionSign.POSITIVE)
    negative_class = task.class_for_sign(AttributionSign.NEGATIVE)
    sets: dict[str, set[int]] = {cls: set() for cls in task.feature_classes}
    for i in _surviving_indices(explanation.attributions, policy):
        a = explanation.attributions[i]
        sets[positive_class if a > 0 else negative_class].add(i)
    return SignedFeatureSets({cls: frozenset(idxs) for cls, idxs in sets.items()})


def count_chunks(sets: SignedFeatureSets) -> int:
    """Number of highlighted tokens across all classes; drives simplicity."""
    return len(sets.all_indices)
