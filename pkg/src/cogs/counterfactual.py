"""Counterfactual test, enumeration over the abstract state space, counting.

A state is a counterfactual when the undesired label does not hold and the
state is causally consistent. Each such interval-box state stands for the
whole set of concrete instances inside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .errors import StateSpaceTooLargeError
from .rules import RuleSet, collect_thresholds
from .schema import (
    Categorical,
    Mutability,
    Partition,
    PointInstance,
    State,
    Value,
    box_of,
    discretize,
    iter_states,
    sample_point,
    state_space_size,
)
from .semantics import causally_consistent, decide

DEFAULT_STATE_CAP = 10**8


@dataclass(frozen=True)
class CounterfactualSet:
    """One counterfactual interval-box, optionally with a concrete witness."""

    state: State
    witness: PointInstance | None = None


def is_counterfactual(state: State, rs: RuleSet) -> bool:
    """True iff the undesired label does not hold and the state is consistent."""
    if decide(state, rs).holds:
        return False
    return causally_consistent(state, rs).consistent


def ruleset_partition(rs: RuleSet) -> Partition:
    """The interval partition induced by every numeric constant in the rules."""
    return discretize(rs.schema, collect_thresholds(rs))


def _pinned_values(rs: RuleSet, partition: Partition, instance: PointInstance) -> dict[str, Value]:
    box = box_of(instance, partition)
    return {
        decl.name: box.value(decl.name)
        for decl in rs.schema
        if decl.mutability is Mutability.IMMUTABLE
    }


def iter_counterfactuals(
    rs: RuleSet,
    *,
    instance: PointInstance | None = None,
    cap: int = DEFAULT_STATE_CAP,
    partition: Partition | None = None,
) -> Iterator[State]:
    """Counterfactual states in lexicographic feature/value order.

    With an instance, immutable features are pinned to the instance's boxed
    values; otherwise every feature ranges over its full domain or partition.
    Raises StateSpaceTooLargeError before iterating when the (pinned) product
    exceeds the cap.
    """
    partition = partition if partition is not None else ruleset_partition(rs)
    pinned = _pinned_values(rs, partition, instance) if instance is not None else {}
    size = 1
    for decl in rs.schema:
        if decl.name in pinned:
            continue
        if isinstance(decl.domain, Categorical):
            size *= len(decl.domain.values)
        else:
            size *= len(partition.intervals_for(decl.name))
    if size > cap:
        raise StateSpaceTooLargeError(size, cap)
    for state in iter_states(rs.schema, partition, pinned):
        if is_counterfactual(state, rs):
            yield state


def enumerate_counterfactuals(
    rs: RuleSet,
    *,
    instance: PointInstance | None = None,
    cap: int = DEFAULT_STATE_CAP,
    partition: Partition | None = None,
    with_witnesses: bool = False,
) -> list[CounterfactualSet]:
    return [
        CounterfactualSet(state, sample_point(state) if with_witnesses else None)
        for state in iter_counterfactuals(rs, instance=instance, cap=cap, partition=partition)
    ]


def count_counterfactuals(
    rs: RuleSet,
    *,
    instance: PointInstance | None = None,
    cap: int = DEFAULT_STATE_CAP,
    partition: Partition | None = None,
) -> int:
    """Length of enumerate_counterfactuals without materializing the list."""
    return sum(
        1 for _ in iter_counterfactuals(rs, instance=instance, cap=cap, partition=partition)
    )


def abstract_state_count(rs: RuleSet, partition: Partition | None = None) -> int:
    partition = partition if partition is not None else ruleset_partition(rs)
    return state_space_size(rs.schema, partition)
