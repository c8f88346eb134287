"""Rule evaluation on abstract states and causal-completion semantics.

Causal rules are read as equivalences, not implications: a rule
``causal f == v :- body.`` both forces f to v whenever the body holds
(forward direction) and forbids f from holding v unless some rule for
(f, v) has a satisfied body (completion direction). Feature values never
targeted by a causal head stay unconstrained.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import ConflictingCausesError, InternalError, PropagationLoopError
from .rules import Atom, Literal, Rule, RuleSet
from .schema import AtomicInterval, State, Value

FORWARD = "forward"
COMPLETION = "completion"


@dataclass(frozen=True)
class Outcome:
    """Result of evaluating the undesired label on a state."""

    label: str
    fired_rules: tuple[int, ...]

    @property
    def holds(self) -> bool:
        return bool(self.fired_rules)


@dataclass(frozen=True)
class Violation:
    rule: int
    direction: str  # FORWARD or COMPLETION
    feature: str


@dataclass(frozen=True)
class CausalVerdict:
    consistent: bool
    violations: tuple[Violation, ...]


@dataclass(frozen=True)
class CausalAction:
    """One feature forced to a new value by a causal rule."""

    feature: str
    old: Value
    new: Value
    rule: int


def _interval_truth(interval: AtomicInterval, comparator: str, c: float) -> bool | None:
    """Truth of ``x <cmp> c`` for every x in the interval, or None if mixed."""
    lo, hi = interval.lower, interval.upper
    lc, uc = interval.lower_closed, interval.upper_closed
    if comparator == "<":
        if hi < c or (hi == c and not uc):
            return True
        if lo >= c:
            return False
        return None
    if comparator == "<=":
        if hi <= c:
            return True
        if lo > c or (lo == c and not lc):
            return False
        return None
    if comparator == ">":
        if lo > c or (lo == c and not lc):
            return True
        if hi <= c:
            return False
        return None
    if comparator == ">=":
        if lo >= c:
            return True
        if hi < c or (hi == c and not uc):
            return False
        return None
    if comparator == "==":
        if interval.is_point and lo == c:
            return True
        if not interval.contains(c):
            return False
        return None
    # "!=" mirrors "==".
    if not interval.contains(c):
        return True
    if interval.is_point and lo == c:
        return False
    return None


def eval_atom(state: State, atom: Atom) -> bool:
    """Evaluate one comparison; the atom must be constant on the assigned interval."""
    value = state.value(atom.feature)
    if isinstance(value, str):
        if not isinstance(atom.rhs, str):
            raise InternalError(f"categorical feature '{atom.feature}' compared with a number")
        return (value == atom.rhs) == (atom.comparator == "==")
    if isinstance(atom.rhs, str):
        raise InternalError(f"numeric feature '{atom.feature}' compared with a name")
    truth = _interval_truth(value, atom.comparator, float(atom.rhs))
    if truth is None:
        raise InternalError(
            f"atom '{atom}' is not constant on {value}; the partition is missing a threshold"
        )
    return truth


def aux_table(state: State, rs: RuleSet) -> dict[str, bool]:
    """Truth of every aux predicate, computed stratum by stratum to a fixpoint."""
    table: dict[str, bool] = {}
    for stratum in rs.strata:
        for name in stratum:
            table[name] = False
        current = set(stratum)
        changed = True
        while changed:
            changed = False
            for rule in rs.aux_rules:
                head = rule.head
                if head in current and not table[head] and _body_holds(state, rule, table):
                    table[head] = True  # type: ignore[index]
                    changed = True
    return table


def _literal_holds(state: State, lit: Literal, table: dict[str, bool]) -> bool:
    if lit.is_aux:
        value = table[lit.ref]
    else:
        value = eval_atom(state, lit.ref)  # type: ignore[arg-type]
    return not value if lit.negated else value


def _body_holds(state: State, rule: Rule, table: dict[str, bool]) -> bool:
    return all(_literal_holds(state, lit, table) for lit in rule.body)


def decide(state: State, rs: RuleSet) -> Outcome:
    """Evaluate the undesired label: it holds iff any of its rule bodies holds."""
    table = aux_table(state, rs)
    fired = tuple(
        i
        for i, rule in enumerate(rs.decision_rules)
        if rule.head == rs.undesired_label and _body_holds(state, rule, table)
    )
    return Outcome(rs.undesired_label, fired)


def _head_target(head: Atom) -> Value:
    if isinstance(head.rhs, str):
        return head.rhs
    return AtomicInterval.point(float(head.rhs))


def causally_consistent(state: State, rs: RuleSet) -> CausalVerdict:
    """Check both directions of every causal equivalence on the state.

    Forward: a satisfied body forces the head feature to the head value.
    Completion: a head value may hold only if some rule for that
    (feature, value) pair has a satisfied body. A completion violation is
    reported against the first rule of the unsupported group.
    """
    table = aux_table(state, rs)
    violations: list[Violation] = []
    supported: dict[tuple[str, Value], bool] = {}
    first_rule: dict[tuple[str, Value], int] = {}
    for i, rule in enumerate(rs.causal_rules):
        head = rule.head
        assert isinstance(head, Atom)
        target = _head_target(head)
        key = (head.feature, target)
        first_rule.setdefault(key, i)
        fired = _body_holds(state, rule, table)
        supported[key] = supported.get(key, False) or fired
        if fired and state.value(head.feature) != target:
            violations.append(Violation(i, FORWARD, head.feature))
    for (feature, target), ok in supported.items():
        if not ok and state.value(feature) == target:
            violations.append(Violation(first_rule[(feature, target)], COMPLETION, feature))
    return CausalVerdict(not violations, tuple(violations))


def propagate(state: State, rs: RuleSet) -> tuple[State, tuple[CausalAction, ...]]:
    """Apply causal rules to a fixpoint, in declaration order.

    Each pass walks the causal rules once; a rule whose body holds and whose
    head feature differs from the head value sets the feature and records a
    CausalAction. Raises ConflictingCausesError when two rules force
    different values on one feature within a pass, and PropagationLoopError
    if the fixpoint is not reached within |features| * |causal rules| passes.
    """
    actions: list[CausalAction] = []
    guard = max(1, len(state.schema) * len(rs.causal_rules))
    for _ in range(guard + 1):
        table = aux_table(state, rs)
        forced_in_pass: dict[str, tuple[Value, int]] = {}
        changed = False
        for i, rule in enumerate(rs.causal_rules):
            head = rule.head
            assert isinstance(head, Atom)
            if not _body_holds(state, rule, table):
                continue
            target = _head_target(head)
            current = state.value(head.feature)
            if current == target:
                continue
            if head.feature in forced_in_pass:
                prev_value, prev_rule = forced_in_pass[head.feature]
                if prev_value != target:
                    raise ConflictingCausesError(head.feature, prev_rule, i)
            forced_in_pass[head.feature] = (target, i)
            actions.append(CausalAction(head.feature, current, target, i))
            state = state.replace(head.feature, target)
            table = aux_table(state, rs)
            changed = True
        if not changed:
            return state, tuple(actions)
    raise PropagationLoopError(
        f"causal propagation did not reach a fixpoint within {guard} passes"
    )
