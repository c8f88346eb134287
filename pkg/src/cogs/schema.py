"""Feature schemas, threshold-induced interval partitions, and states.

A state assigns every feature either a categorical value or an atomic
interval of its numeric domain. Atomic intervals are chosen so that every
comparison appearing in a ruleset is uniformly true or uniformly false on
each interval, which makes rule truth a function of the abstract state and
keeps enumeration finite and exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Iterator, Mapping, Sequence, Union

from .errors import DomainError, ValidationError


class Mutability(Enum):
    DIRECT = "direct"
    CAUSAL = "causal"
    IMMUTABLE = "immutable"


class CutKind(Enum):
    """How a threshold splits a numeric domain.

    BEFORE separates x < v from x >= v (comparators < and >=), AFTER
    separates x <= v from x > v (comparators <= and >), and POINT isolates
    [v, v] (comparators == and !=).
    """

    BEFORE = "before"
    AFTER = "after"
    POINT = "point"


@dataclass(frozen=True)
class Threshold:
    value: float
    cut: CutKind


@dataclass(frozen=True)
class Categorical:
    """Finite set of named values; declaration order is significant."""

    values: tuple[str, ...]

    def __post_init__(self):
        if not self.values:
            raise ValidationError("categorical domain must declare at least one value")
        if len(set(self.values)) != len(self.values):
            raise ValidationError(f"duplicate categorical values: {self.values}")


@dataclass(frozen=True)
class Numeric:
    """Closed numeric range; infinite endpoints are allowed but must be
    accompanied by at least one threshold at discretization time."""

    lower: float
    upper: float

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ValidationError("numeric bounds must not be NaN")
        if self.lower > self.upper:
            raise ValidationError(f"numeric bounds out of order: [{self.lower}, {self.upper}]")
        if math.isinf(self.lower) and self.lower > 0:
            raise ValidationError("lower bound cannot be +inf")
        if math.isinf(self.upper) and self.upper < 0:
            raise ValidationError("upper bound cannot be -inf")

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


Domain = Union[Categorical, Numeric]


@dataclass(frozen=True)
class FeatureDecl:
    name: str
    domain: Domain
    mutability: Mutability = Mutability.DIRECT

    @property
    def is_numeric(self) -> bool:
        return isinstance(self.domain, Numeric)


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature declarations; the order fixes all tie-breaking."""

    features: tuple[FeatureDecl, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate feature names: {names}")

    def __iter__(self) -> Iterator[FeatureDecl]:
        return iter(self.features)

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def feature(self, name: str) -> FeatureDecl:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def has(self, name: str) -> bool:
        return any(f.name == name for f in self.features)

    def index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(name)


@dataclass(frozen=True)
class AtomicInterval:
    """Non-empty numeric interval; a point interval has equal closed ends."""

    lower: float
    upper: float
    lower_closed: bool
    upper_closed: bool

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValidationError(f"empty interval: lower {self.lower} > upper {self.upper}")
        if self.lower == self.upper and not (self.lower_closed and self.upper_closed):
            raise ValidationError("a point interval must be closed on both ends")
        if math.isinf(self.lower) and self.lower_closed:
            raise ValidationError("an infinite endpoint cannot be closed")
        if math.isinf(self.upper) and self.upper_closed:
            raise ValidationError("an infinite endpoint cannot be closed")

    @classmethod
    def point(cls, value: float) -> "AtomicInterval":
        return cls(float(value), float(value), True, True)

    @property
    def is_point(self) -> bool:
        return self.lower == self.upper

    def contains(self, x: float) -> bool:
        if x < self.lower or (x == self.lower and not self.lower_closed):
            return False
        if x > self.upper or (x == self.upper and not self.upper_closed):
            return False
        return True

    def __str__(self) -> str:
        lo = "[" if self.lower_closed else "("
        hi = "]" if self.upper_closed else ")"
        return f"{lo}{format_number(self.lower)},{format_number(self.upper)}{hi}"


Value = Union[str, AtomicInterval]
PointValue = Union[str, float]


def format_number(x: float) -> str:
    """Canonical text for a numeric constant: 60000.0 -> '60000', inf -> 'inf'."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


@dataclass(frozen=True)
class Partition:
    """Per numeric feature, the ordered atomic intervals covering its domain."""

    intervals: Mapping[str, tuple[AtomicInterval, ...]]

    def intervals_for(self, name: str) -> tuple[AtomicInterval, ...]:
        try:
            return self.intervals[name]
        except KeyError:
            raise DomainError(f"no partition for feature '{name}'") from None

    def locate(self, name: str, x: float) -> AtomicInterval:
        for iv in self.intervals_for(name):
            if iv.contains(x):
                return iv
        raise DomainError(f"value {format_number(x)} of feature '{name}' lies outside its domain")


@dataclass(frozen=True)
class State:
    """Total assignment of every schema feature to a value or atomic interval."""

    schema: FeatureSchema = field(compare=False)
    values: tuple[Value, ...] = field(default=())

    def __post_init__(self):
        if len(self.values) != len(self.schema):
            raise ValidationError("state must assign every schema feature exactly once")

    def value(self, name: str) -> Value:
        return self.values[self.schema.index(name)]

    def replace(self, name: str, value: Value) -> "State":
        i = self.schema.index(name)
        vals = self.values[:i] + (value,) + self.values[i + 1 :]
        return State(self.schema, vals)

    @property
    def assignment(self) -> dict[str, Value]:
        return dict(zip(self.schema.names, self.values))

    def __str__(self) -> str:
        parts = (f"{n}={v}" for n, v in zip(self.schema.names, self.values))
        return "{" + ", ".join(parts) + "}"


@dataclass(frozen=True)
class PointInstance:
    """Concrete input: every feature mapped to a categorical value or number."""

    schema: FeatureSchema = field(compare=False)
    values: tuple[PointValue, ...] = ()

    def __post_init__(self):
        if len(self.values) != len(self.schema):
            raise ValidationError("instance must assign every schema feature exactly once")
        for decl, v in zip(self.schema, self.values):
            if isinstance(decl.domain, Categorical):
                if not isinstance(v, str) or v not in decl.domain.values:
                    raise DomainError(f"value {v!r} is not in the domain of '{decl.name}'")
            else:
                if isinstance(v, str) or not decl.domain.contains(float(v)):
                    raise DomainError(f"value {v!r} is outside the bounds of '{decl.name}'")

    def value(self, name: str) -> PointValue:
        return self.values[self.schema.index(name)]

    @property
    def assignment(self) -> dict[str, PointValue]:
        return dict(zip(self.schema.names, self.values))


# Boundary positions encode a spot on the number line between values:
# (v, LEFT) sits just below v and (v, RIGHT) just above it. Sorting positions
# lexicographically therefore orders boundaries correctly, and two adjacent
# positions always enclose a non-empty interval.
_LEFT = 0
_RIGHT = 1


def _cut_positions(t: Threshold) -> list[tuple[float, int]]:
    if t.cut is CutKind.BEFORE:
        return [(t.value, _LEFT)]
    if t.cut is CutKind.AFTER:
        return [(t.value, _RIGHT)]
    return [(t.value, _LEFT), (t.value, _RIGHT)]


def _interval_between(left: tuple[float, int], right: tuple[float, int]) -> AtomicInterval:
    lo, lo_side = left
    hi, hi_side = right
    return AtomicInterval(
        lower=lo,
        upper=hi,
        lower_closed=lo_side == _LEFT and not math.isinf(lo),
        upper_closed=hi_side == _RIGHT and not math.isinf(hi),
    )


def discretize(
    schema: FeatureSchema, thresholds: Mapping[str, Sequence[Threshold]]
) -> Partition:
    """Split every numeric domain at its rule thresholds.

    Produces the coarsest partition on which every contributing comparison is
    constant: < and >= split just below their constant, <= and > just above
    it, and == isolates the constant as a point interval. Duplicate
    thresholds merge silently; thresholds at a domain bound that would leave
    an empty side are dropped.

    Raises DomainError for a threshold outside the declared bounds, and for
    an infinite bound with no threshold to anchor the partition.
    """
    out: dict[str, tuple[AtomicInterval, ...]] = {}
    for decl in schema:
        if not isinstance(decl.domain, Numeric):
            continue
        dom = decl.domain
        ts = thresholds.get(decl.name, ())
        if (math.isinf(dom.lower) or math.isinf(dom.upper)) and not ts:
            raise DomainError(
                f"feature '{decl.name}' has an infinite bound and no thresholds; "
                "declare finite bounds or add a rule threshold"
            )
        start = (dom.lower, _LEFT)
        end = (dom.upper, _RIGHT)
        positions = {start, end}
        for t in ts:
            if math.isnan(t.value) or math.isinf(t.value):
                raise DomainError(f"threshold for '{decl.name}' must be finite, got {t.value}")
            if not dom.contains(t.value):
                raise DomainError(
                    f"threshold {format_number(t.value)} lies outside the domain "
                    f"[{format_number(dom.lower)}, {format_number(dom.upper)}] of '{decl.name}'"
                )
            for pos in _cut_positions(t):
                if start < pos < end:
                    positions.add(pos)
        ordered = sorted(positions)
        out[decl.name] = tuple(
            _interval_between(ordered[i], ordered[i + 1]) for i in range(len(ordered) - 1)
        )
    return Partition(out)


def box_of(instance: PointInstance, partition: Partition) -> State:
    """Abstract a concrete instance into its interval-box state."""
    values: list[Value] = []
    for decl, v in zip(instance.schema, instance.values):
        if isinstance(decl.domain, Categorical):
            values.append(v)  # type: ignore[arg-type]
        else:
            values.append(partition.locate(decl.name, float(v)))
    return State(instance.schema, tuple(values))


def state_space_size(schema: FeatureSchema, partition: Partition) -> int:
    """Number of abstract states: the product of per-feature value counts."""
    n = 1
    for decl in schema:
        if isinstance(decl.domain, Categorical):
            n *= len(decl.domain.values)
        else:
            n *= len(partition.intervals_for(decl.name))
    return n


def iter_states(
    schema: FeatureSchema,
    partition: Partition,
    pinned: Mapping[str, Value] | None = None,
) -> Iterator[State]:
    """All states in lexicographic feature/value order; pinned features are fixed."""
    pinned = pinned or {}
    axes: list[tuple[Value, ...]] = []
    for decl in schema:
        if decl.name in pinned:
            axes.append((pinned[decl.name],))
        elif isinstance(decl.domain, Categorical):
            axes.append(decl.domain.values)
        else:
            axes.append(partition.intervals_for(decl.name))
    for combo in product(*axes):
        yield State(schema, combo)


def _interior_point(iv: AtomicInterval) -> float:
    if iv.is_point:
        return iv.lower
    if math.isinf(iv.lower) and math.isinf(iv.upper):
        return 0.0
    if math.isinf(iv.lower):
        return iv.upper - 1.0
    if math.isinf(iv.upper):
        return iv.lower + 1.0
    return (iv.lower + iv.upper) / 2.0


def sample_point(state: State) -> PointInstance:
    """Deterministic concrete witness inside every interval of the box."""
    values: list[PointValue] = []
    for v in state.values:
        values.append(_interior_point(v) if isinstance(v, AtomicInterval) else v)
    return PointInstance(state.schema, tuple(values))
