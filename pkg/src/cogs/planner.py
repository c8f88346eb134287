"""Minimal intervention paths from an initial state to a counterfactual goal.

The planner performs iterative deepening on the number of direct
interventions. One planning step is a direct change to one feature followed
immediately by causal propagation to a fixpoint; the causal changes are
recorded on the path but cost nothing. Every state reached at a step
boundary must be causally consistent, and no state may repeat along a path.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .counterfactual import DEFAULT_STATE_CAP, is_counterfactual, ruleset_partition
from .errors import IllegalActionError, NoPathFoundError, ReplayMismatchError
from .rules import RuleSet
from .schema import Categorical, Mutability, Partition, State, Value, iter_states
from .semantics import causally_consistent, decide, propagate


class StepKind(Enum):
    DIRECT = "direct"
    CAUSAL = "causal"


@dataclass(frozen=True)
class Intervention:
    """One path step: a chosen direct change or an induced causal change."""

    kind: StepKind
    feature: str
    from_value: Value
    to_value: Value
    cause: int | None = None  # causal rule index; None for direct steps

    def __post_init__(self):
        if self.from_value == self.to_value:
            raise IllegalActionError(f"intervention on '{self.feature}' changes nothing")
        if (self.cause is not None) != (self.kind is StepKind.CAUSAL):
            raise IllegalActionError("exactly the causal steps carry a rule index")


@dataclass(frozen=True)
class Path:
    """Ordered interventions from an initial state to a counterfactual goal."""

    initial: State
    steps: tuple[Intervention, ...]
    goal: State
    direct_count: int


Action = tuple[str, Value]


def legal_direct_actions(
    state: State, rs: RuleSet, partition: Partition | None = None
) -> list[Action]:
    """All (feature, new value) moves on direct-mutable features.

    Ordered by feature declaration, then by domain or partition order;
    causal and immutable features never appear.
    """
    partition = partition if partition is not None else ruleset_partition(rs)
    actions: list[Action] = []
    for decl in rs.schema:
        if decl.mutability is not Mutability.DIRECT:
            continue
        current = state.value(decl.name)
        if isinstance(decl.domain, Categorical):
            candidates: tuple[Value, ...] = decl.domain.values
        else:
            candidates = partition.intervals_for(decl.name)
        actions.extend((decl.name, v) for v in candidates if v != current)
    return actions


def apply(state: State, action: Action, rs: RuleSet) -> tuple[State, list[Intervention]]:
    """Perform one direct change, then propagate causal rules to a fixpoint.

    Returns the settled state and the direct intervention followed by the
    induced causal interventions in firing order. ConflictingCausesError
    from propagation passes through.
    """
    feature, value = action
    decl = rs.schema.feature(feature)
    if decl.mutability is not Mutability.DIRECT:
        raise IllegalActionError(f"feature '{feature}' is not direct-mutable")
    current = state.value(feature)
    if current == value:
        raise IllegalActionError(f"feature '{feature}' already has value {value}")
    moved = state.replace(feature, value)
    settled, causal_actions = propagate(moved, rs)
    steps = [Intervention(StepKind.DIRECT, feature, current, value)]
    steps.extend(
        Intervention(StepKind.CAUSAL, a.feature, a.old, a.new, cause=a.rule)
        for a in causal_actions
    )
    return settled, steps


def find_minimal_paths(
    initial: State,
    rs: RuleSet,
    max_depth: int = 5,
    all_paths: bool = False,
    partition: Partition | None = None,
    state_cap: int = DEFAULT_STATE_CAP,
) -> list[Path]:
    """Search for shortest intervention paths by iterative deepening.

    Path length counts direct interventions only. At the first depth d where
    any goal is reachable, returns the first path found (all_paths False) or
    every loop-free path with exactly d direct steps (all_paths True), in
    deterministic action order. An initial state that is already a
    counterfactual yields one empty path.

    Raises NoPathFoundError when no goal lies within max_depth; the error
    records whether any counterfactual exists at all (None when the state
    space exceeds state_cap).
    """
    partition = partition if partition is not None else ruleset_partition(rs)
    if is_counterfactual(initial, rs):
        return [Path(initial, (), initial, 0)]

    for depth in range(1, max_depth + 1):
        found: list[Path] = []
        steps: list[Intervention] = []
        on_path: set[State] = {initial}
        expanded: dict[State, int] = {}

        def dfs(state: State, used: int) -> bool:
            for action in legal_direct_actions(state, rs, partition):
                nxt, interventions = apply(state, action, rs)
                if nxt in on_path:
                    continue
                if not causally_consistent(nxt, rs).consistent:
                    continue
                steps.extend(interventions)
                stop = False
                if not decide(nxt, rs).holds:
                    found.append(Path(initial, tuple(steps), nxt, used + 1))
                    stop = not all_paths
                elif used + 1 < depth:
                    expand = True
                    if not all_paths:
                        prior = expanded.get(nxt)
                        if prior is not None and prior <= used + 1:
                            expand = False
                        else:
                            expanded[nxt] = used + 1
                    if expand:
                        on_path.add(nxt)
                        stop = dfs(nxt, used + 1)
                        on_path.discard(nxt)
                del steps[len(steps) - len(interventions) :]
                if stop:
                    return True
            return False

        dfs(initial, 0)
        if found:
            unique: list[Path] = []
            seen: set[tuple[Intervention, ...]] = set()
            for path in found:
                if path.steps not in seen:
                    seen.add(path.steps)
                    unique.append(path)
            return unique

    try:
        exists: bool | None = count_counterfactuals(rs, cap=state_cap, partition=partition) > 0
    except StateSpaceTooLargeError:
        exists = None
    raise NoPathFoundError(max_depth, exists)


def replay(path: Path, rs: RuleSet) -> State:
    """Re-execute a path from its initial state and verify every step.

    Each direct step must be legal at its position and must induce exactly
    the causal steps recorded after it; the final state must equal the
    path's goal. Returns the final state.
    """
    state = path.initial
    i = 0
    while i < len(path.steps):
        step = path.steps[i]
        if step.kind is not StepKind.DIRECT:
            raise ReplayMismatchError(
                f"step {i} is a causal step with no direct step to induce it"
            )
        if state.value(step.feature) != step.from_value:
            raise ReplayMismatchError(
                f"step {i}: feature '{step.feature}' is {state.value(step.feature)}, "
                f"but the path expects {step.from_value}"
            )
        try:
            state, interventions = apply(state, (step.feature, step.to_value), rs)
        except IllegalActionError as e:
            raise ReplayMismatchError(f"step {i} is illegal: {e}") from None
        recorded = path.steps[i : i + len(interventions)]
        if tuple(recorded) != tuple(interventions):
            raise ReplayMismatchError(
                f"steps {i}..{i + len(interventions) - 1} diverge from the causal "
                f"consequences of replaying step {i}"
            )
        i += len(interventions)
    if state != path.goal:
        raise ReplayMismatchError("replayed final state differs from the path goal")
    return state
