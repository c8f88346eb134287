"""The rule DSL: feature declarations, decision/causal/aux rules, parsing.

Concrete syntax (Prolog-flavoured, `%` comments, UTF-8, whitespace free):

    program    := (decl | rule | directive | comment)*
    decl       := "feature" NAME ("categorical" "{" NAME ("," NAME)* "}"
                               | "numeric" "[" NUM "," NUM "]") MUT? "."
    MUT        := "direct" | "causal" | "immutable"
    rule       := ("decision" NAME | "causal" atom | "aux" NAME)
                  ":-" literal ("," literal)* "."
    literal    := "not"? (atom | NAME)
    atom       := NAME CMP (NAME | NUM)
    CMP        := "==" | "!=" | "<=" | "<" | ">=" | ">"
    directive  := "undesired" NAME "."

Causal rule heads are equalities on causal-mutability features. Multiple
rules for one decision label or aux name are disjunctive. Negation through
aux predicates must be stratified.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Union

from .errors import NonStratifiedError, ParseError, ValidationError
from .schema import (
    Categorical,
    CutKind,
    FeatureDecl,
    FeatureSchema,
    Mutability,
    Numeric,
    Threshold,
    format_number,
)

COMPARATORS = ("==", "!=", "<=", "<", ">=", ">")

_CUT_OF_COMPARATOR = {
    "<": CutKind.BEFORE,
    ">=": CutKind.BEFORE,
    "<=": CutKind.AFTER,
    ">": CutKind.AFTER,
    "==": CutKind.POINT,
    "!=": CutKind.POINT,
}


@dataclass(frozen=True)
class Atom:
    """One comparison of a feature against a value or number."""

    feature: str
    comparator: str
    rhs: Union[str, float]

    def __post_init__(self):
        if self.comparator not in COMPARATORS:
            raise ValidationError(f"unknown comparator {self.comparator!r}")

    def __str__(self) -> str:
        rhs = self.rhs if isinstance(self.rhs, str) else format_number(self.rhs)
        return f"{self.feature} {self.comparator} {rhs}"


@dataclass(frozen=True)
class Literal:
    """An atom or aux-rule reference, optionally negated."""

    ref: Union[Atom, str]
    negated: bool = False

    @property
    def is_aux(self) -> bool:
        return isinstance(self.ref, str)

    def __str__(self) -> str:
        body = self.ref if isinstance(self.ref, str) else str(self.ref)
        return f"not {body}" if self.negated else f"{body}"


class RuleKind(Enum):
    DECISION = "decision"
    CAUSAL = "causal"
    AUX = "aux"


@dataclass(frozen=True)
class Rule:
    kind: RuleKind
    head: Union[str, Atom]
    body: tuple[Literal, ...]

    def __post_init__(self):
        if not self.body:
            raise ValidationError("rule body must not be empty")
        if self.kind is RuleKind.CAUSAL:
            if not isinstance(self.head, Atom) or self.head.comparator != "==":
                raise ValidationError("causal rule heads must be equalities")
        elif not isinstance(self.head, str):
            raise ValidationError(f"{self.kind.value} rule heads must be names")

    def __str__(self) -> str:
        head = self.head if isinstance(self.head, str) else str(self.head)
        return f"{self.kind.value} {head} :- {', '.join(map(str, self.body))}."


@dataclass(frozen=True)
class RuleSet:
    """Schema plus decision rules, causal rules, aux rules and the undesired label."""

    schema: FeatureSchema
    decision_rules: tuple[Rule, ...]
    causal_rules: tuple[Rule, ...]
    aux_rules: tuple[Rule, ...]
    undesired_label: str
    strata: tuple[tuple[str, ...], ...] = field(
        init=False, compare=False, repr=False, default=()
    )

    def __post_init__(self):
        _validate_ruleset(self)
        object.__setattr__(self, "strata", tuple(map(tuple, stratify(self))))

    @property
    def aux_names(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for r in self.aux_rules:
            seen.setdefault(r.head, None)  # type: ignore[arg-type]
        return tuple(seen)


def _check_atom(schema: FeatureSchema, atom: Atom) -> None:
    if not schema.has(atom.feature):
        raise ValidationError(f"unknown feature '{atom.feature}'")
    decl = schema.feature(atom.feature)
    if isinstance(decl.domain, Categorical):
        if not isinstance(atom.rhs, str):
            raise ValidationError(
                f"feature '{atom.feature}' is categorical but is compared with a number"
            )
        if atom.comparator not in ("==", "!="):
            raise ValidationError(
                f"categorical feature '{atom.feature}' admits only == and !="
            )
        if atom.rhs not in decl.domain.values:
            raise ValidationError(
                f"'{atom.rhs}' is not a declared value of feature '{atom.feature}'"
            )
    else:
        if isinstance(atom.rhs, str):
            raise ValidationError(
                f"feature '{atom.feature}' is numeric but is compared with '{atom.rhs}'"
            )
        if math.isinf(atom.rhs) or math.isnan(atom.rhs):
            raise ValidationError(f"comparison constant for '{atom.feature}' must be finite")
        if not decl.domain.contains(float(atom.rhs)):
            raise ValidationError(
                f"constant {format_number(atom.rhs)} lies outside the domain of '{atom.feature}'"
            )


def _validate_ruleset(rs: RuleSet) -> None:
    aux_names = {r.head for r in rs.aux_rules}
    for name in aux_names:
        if rs.schema.has(name):  # type: ignore[arg-type]
            raise ValidationError(f"aux rule '{name}' collides with a feature name")
    for rule in rs.decision_rules:
        if rule.kind is not RuleKind.DECISION:
            raise ValidationError("decision_rules may contain only decision rules")
    for rule in rs.causal_rules:
        if rule.kind is not RuleKind.CAUSAL:
            raise ValidationError("causal_rules may contain only causal rules")
        head = rule.head
        assert isinstance(head, Atom)
        _check_atom(rs.schema, head)
        if rs.schema.feature(head.feature).mutability is not Mutability.CAUSAL:
            raise ValidationError(
                f"causal rule head targets '{head.feature}', which is not causal-mutable"
            )
    for rule in rs.aux_rules:
        if rule.kind is not RuleKind.AUX:
            raise ValidationError("aux_rules may contain only aux rules")
    for rule in (*rs.decision_rules, *rs.causal_rules, *rs.aux_rules):
        for lit in rule.body:
            if lit.is_aux:
                if lit.ref not in aux_names:
                    raise ValidationError(f"unknown aux rule '{lit.ref}' referenced in a body")
            else:
                _check_atom(rs.schema, lit.ref)  # type: ignore[arg-type]
    if not rs.undesired_label:
        raise ValidationError("a ruleset must designate an undesired outcome label")


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUM_RE = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")

_KEYWORDS = {
    "feature", "categorical", "numeric", "direct", "causal", "immutable",
    "decision", "aux", "undesired", "not",
}


@dataclass(frozen=True)
class _Token:
    kind: str  # "name", "number", "punct", "eof"
    text: str
    value: float | None
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        m = _NAME_RE.match(text, i)
        if m:
            word = m.group(0)
            if word == "inf":
                tokens.append(_Token("number", word, math.inf, line, col))
            else:
                tokens.append(_Token("name", word, None, line, col))
            col += len(word)
            i = m.end()
            continue
        if c == "-" or c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            start_col = col
            sign = 1.0
            j = i
            if c == "-":
                sign = -1.0
                j += 1
            rest = _NAME_RE.match(text, j)
            if rest and rest.group(0) == "inf":
                tokens.append(_Token("number", text[i : rest.end()], sign * math.inf, line, start_col))
                col += rest.end() - i
                i = rest.end()
                continue
            m = _NUM_RE.match(text, j)
            if not m:
                raise ParseError(f"unexpected character {c!r}", line, col)
            tokens.append(
                _Token("number", text[i : m.end()], sign * float(m.group(0)), line, start_col)
            )
            col += m.end() - i
            i = m.end()
            continue
        two = text[i : i + 2]
        if two in (":-", "==", "!=", "<=", ">="):
            tokens.append(_Token("punct", two, None, line, col))
            i += 2
            col += 2
            continue
        if c in "{}[],.<>":
            tokens.append(_Token("punct", c, None, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(_Token("eof", "", None, line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, message: str, tok: _Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.column)

    def expect_punct(self, text: str) -> _Token:
        tok = self.next()
        if tok.kind != "punct" or tok.text != text:
            raise self.fail(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def expect_name(self, what: str) -> _Token:
        tok = self.next()
        if tok.kind != "name":
            raise self.fail(f"expected {what}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def expect_number(self, what: str) -> _Token:
        tok = self.next()
        if tok.kind != "number":
            raise self.fail(f"expected {what}, found {tok.text or 'end of input'!r}", tok)
        return tok

    # --- grammar productions -------------------------------------------

    def parse_program(self):
        decls: list[tuple[FeatureDecl, _Token]] = []
        rules: list[tuple[Rule, _Token, list[_Token]]] = []
        undesired: list[tuple[str, _Token]] = []
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.kind != "name":
                raise self.fail(f"expected a declaration or rule, found {tok.text!r}", tok)
            if tok.text == "feature":
                decls.append(self.parse_decl())
            elif tok.text == "undesired":
                self.next()
                label = self.expect_name("an outcome label")
                self.expect_punct(".")
                undesired.append((label.text, label))
            elif tok.text in ("decision", "causal", "aux"):
                rules.append(self.parse_rule())
            else:
                raise self.fail(
                    f"expected 'feature', 'decision', 'causal', 'aux' or 'undesired', "
                    f"found {tok.text!r}",
                    tok,
                )
        return decls, rules, undesired

    def parse_decl(self) -> tuple[FeatureDecl, _Token]:
        self.next()  # "feature"
        name = self.expect_name("a feature name")
        kind = self.expect_name("'categorical' or 'numeric'")
        if kind.text == "categorical":
            self.expect_punct("{")
            values = [self.expect_name("a value name").text]
            while self.peek().text == ",":
                self.next()
                values.append(self.expect_name("a value name").text)
            self.expect_punct("}")
            if len(set(values)) != len(values):
                raise self.fail(f"duplicate values in feature '{name.text}'", name)
            domain: Categorical | Numeric = Categorical(tuple(values))
        elif kind.text == "numeric":
            self.expect_punct("[")
            lo = self.expect_number("a lower bound")
            self.expect_punct(",")
            hi = self.expect_number("an upper bound")
            self.expect_punct("]")
            try:
                domain = Numeric(lo.value, hi.value)  # type: ignore[arg-type]
            except ValidationError as e:
                raise self.fail(f"invalid bounds of '{name.text}': {e}", lo) from None
        else:
            raise self.fail("expected 'categorical' or 'numeric'", kind)
        mut = Mutability.DIRECT
        tok = self.peek()
        if tok.kind == "name" and tok.text in ("direct", "causal", "immutable"):
            self.next()
            mut = Mutability(tok.text)
        self.expect_punct(".")
        return FeatureDecl(name.text, domain, mut), name

    def parse_rule(self) -> tuple[Rule, _Token, list[_Token]]:
        kind_tok = self.next()
        kind = RuleKind(kind_tok.text)
        if kind is RuleKind.CAUSAL:
            head: str | Atom
            head, head_tok = self.parse_atom()
            if head.comparator != "==":
                raise self.fail("causal rule heads must use ==", head_tok)
        else:
            head_tok = self.expect_name(f"a {kind.value} name")
            head = head_tok.text
        self.expect_punct(":-")
        body: list[Literal] = []
        body_positions: list[_Token] = []
        while True:
            lit, tok = self.parse_literal()
            body.append(lit)
            body_positions.append(tok)
            if self.peek().text == ",":
                self.next()
                continue
            break
        self.expect_punct(".")
        return Rule(kind, head, tuple(body)), head_tok, body_positions

    def parse_literal(self) -> tuple[Literal, _Token]:
        negated = False
        tok = self.peek()
        if tok.kind == "name" and tok.text == "not":
            self.next()
            negated = True
        name = self.expect_name("a feature or aux name")
        nxt = self.peek()
        if nxt.kind == "punct" and nxt.text in COMPARATORS:
            atom, _ = self.parse_atom(name)
            return Literal(atom, negated), name
        return Literal(name.text, negated), name

    def parse_atom(self, name: _Token | None = None) -> tuple[Atom, _Token]:
        if name is None:
            name = self.expect_name("a feature name")
        op = self.next()
        if op.kind != "punct" or op.text not in COMPARATORS:
            raise self.fail(f"expected a comparator, found {op.text!r}", op)
        rhs = self.next()
        if rhs.kind == "name":
            return Atom(name.text, op.text, rhs.text), name
        if rhs.kind == "number":
            return Atom(name.text, op.text, rhs.value), name  # type: ignore[arg-type]
        raise self.fail(f"expected a value or number, found {rhs.text or 'end of input'!r}", rhs)


def parse_ruleset(text: str) -> RuleSet:
    """Parse DSL text into a validated RuleSet.

    All errors carry a 1-based line and column. Stratification violations
    raise NonStratifiedError rather than ParseError.
    """
    parser = _Parser(text)
    decls, rules, undesired = parser.parse_program()

    seen: dict[str, _Token] = {}
    for decl, tok in decls:
        if decl.name in seen:
            raise ParseError(f"feature '{decl.name}' declared twice", tok.line, tok.column)
        seen[decl.name] = tok
    schema = FeatureSchema(tuple(d for d, _ in decls))

    if not undesired:
        raise ParseError("missing 'undesired <label>.' directive", 1, 1)
    if len(undesired) > 1:
        _, tok = undesired[1]
        raise ParseError("multiple 'undesired' directives", tok.line, tok.column)
    undesired_label = undesired[0][0]

    aux_names = {r.head for r, _, _ in rules if r.kind is RuleKind.AUX}
    decision, causal, aux = [], [], []
    for rule, head_tok, body_toks in rules:
        if rule.kind is RuleKind.CAUSAL:
            head = rule.head
            assert isinstance(head, Atom)
            _positioned_atom_check(schema, head, head_tok)
            decl = schema.feature(head.feature)
            if decl.mutability is not Mutability.CAUSAL:
                raise ParseError(
                    f"causal rule head targets '{head.feature}', which is declared "
                    f"{decl.mutability.value}, not causal",
                    head_tok.line,
                    head_tok.column,
                )
            causal.append(rule)
        elif rule.kind is RuleKind.AUX:
            if schema.has(rule.head):  # type: ignore[arg-type]
                raise ParseError(
                    f"aux rule '{rule.head}' collides with a feature name",
                    head_tok.line,
                    head_tok.column,
                )
            aux.append(rule)
        else:
            decision.append(rule)
        for lit, tok in zip(rule.body, body_toks):
            if lit.is_aux:
                if lit.ref not in aux_names:
                    hint = (
                        f"feature '{lit.ref}' needs a comparator"
                        if schema.has(lit.ref)  # type: ignore[arg-type]
                        else f"unknown aux rule '{lit.ref}'"
                    )
                    raise ParseError(hint, tok.line, tok.column)
            else:
                _positioned_atom_check(schema, lit.ref, tok)  # type: ignore[arg-type]

    return RuleSet(schema, tuple(decision), tuple(causal), tuple(aux), undesired_label)


def _positioned_atom_check(schema: FeatureSchema, atom: Atom, tok: _Token) -> None:
    try:
        _check_atom(schema, atom)
    except ValidationError as e:
        raise ParseError(str(e), tok.line, tok.column) from None


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def serialize_ruleset(rs: RuleSet) -> str:
    """Canonical text: features, the undesired directive, then rules, one per line."""
    lines: list[str] = []
    for decl in rs.schema:
        if isinstance(decl.domain, Categorical):
            dom = "categorical {" + ", ".join(decl.domain.values) + "}"
        else:
            dom = f"numeric [{format_number(decl.domain.lower)}, {format_number(decl.domain.upper)}]"
        lines.append(f"feature {decl.name} {dom} {decl.mutability.value}.")
    lines.append(f"undesired {rs.undesired_label}.")
    for rule in (*rs.decision_rules, *rs.causal_rules, *rs.aux_rules):
        lines.append(str(rule))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Threshold collection and stratification
# ---------------------------------------------------------------------------


def _all_atoms(rs: RuleSet) -> Iterable[Atom]:
    for rule in (*rs.decision_rules, *rs.causal_rules, *rs.aux_rules):
        if isinstance(rule.head, Atom):
            yield rule.head
        for lit in rule.body:
            if not lit.is_aux:
                yield lit.ref  # type: ignore[misc]


def collect_thresholds(rs: RuleSet) -> dict[str, tuple[Threshold, ...]]:
    """Every numeric constant in any atom, keyed by feature, sorted, deduplicated."""
    per_feature: dict[str, set[Threshold]] = {}
    for atom in _all_atoms(rs):
        if isinstance(atom.rhs, str):
            continue
        t = Threshold(float(atom.rhs), _CUT_OF_COMPARATOR[atom.comparator])
        per_feature.setdefault(atom.feature, set()).add(t)
    return {
        name: tuple(sorted(ts, key=lambda t: (t.value, t.cut.value)))
        for name, ts in sorted(per_feature.items(), key=lambda kv: rs.schema.index(kv[0]))
    }


def stratify(rs: RuleSet) -> list[list[str]]:
    """Order aux names into strata so negated references point strictly down.

    Returns a list of strata, each in declaration order. Raises
    NonStratifiedError naming a cycle through negation when none exists.
    """
    heads: list[str] = list(rs.aux_names)
    if not heads:
        return []
    edges: list[tuple[str, str, bool]] = []  # (head, dependency, negated)
    for rule in rs.aux_rules:
        for lit in rule.body:
            if lit.is_aux:
                edges.append((rule.head, lit.ref, lit.negated))  # type: ignore[arg-type]
    level = {h: 0 for h in heads}
    for _ in range(len(heads) + 1):
        changed = False
        for head, dep, negated in edges:
            need = level[dep] + (1 if negated else 0)
            if level[head] < need:
                level[head] = need
                changed = True
        if not changed:
            break
    if changed:
        raise NonStratifiedError(_find_negative_cycle(heads, edges))
    strata: list[list[str]] = [[] for _ in range(max(level.values()) + 1)]
    for h in heads:
        strata[level[h]].append(h)
    return strata


def _find_negative_cycle(
    heads: list[str], edges: list[tuple[str, str, bool]]
) -> list[str]:
    adjacency: dict[str, list[str]] = {h: [] for h in heads}
    for head, dep, _ in edges:
        adjacency[head].append(dep)
    for head, dep, negated in edges:
        if not negated:
            continue
        # A cycle through this negative edge means dep can reach head.
        parents: dict[str, str | None] = {dep: None}
        queue = [dep]
        while queue:
            node = queue.pop(0)
            if node == head:
                path = [node]
                while parents[path[-1]] is not None:
                    path.append(parents[path[-1]])  # type: ignore[arg-type]
                return list(reversed(path))
            for nxt in adjacency[node]:
                if nxt not in parents:
                    parents[nxt] = node
                    queue.append(nxt)
    raise AssertionError("stratification failed but no negative cycle was found")
