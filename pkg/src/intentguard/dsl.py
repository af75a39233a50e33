"""Horn-clause task specifications: syntax tree, parser, canonical printer,
static checker, and runtime constraint evaluation.

A specification is a list of rules, one per line.  Each rule is a conjunction
of predicates implying an objective::

    RestaurantInfo(name = "R") & ReserveInfo(time < 19:00) -> Reserve
    Reserve & ReserveResult(success = true) -> Done

A predicate is either a state predicate (a state name with constraints on its
typed variables) or a reference to another rule's objective.  The reserved
objective ``Done`` marks task completion.  Constraints compare one variable
against a constant with one of the operators ``= != ~= > >= < <= in "not in"``
(unicode spellings of the same operators are accepted on input).

Evaluation is three-valued only in the sense that an unobserved variable makes
every constraint over it false, for every operator.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from datetime import date, time
from decimal import Decimal
from enum import Enum
from typing import Callable, Union

from .schema import StateSchema, TypeKind, VarType

DONE = "Done"
TODAY = "Today"


class Operator(Enum):
    """Comparison operators usable inside constraints."""

    EQ = "="
    NEQ = "!="
    APPROX = "~="
    GT = ">"
    GE = ">="
    LT = "<"
    LE = "<="
    IN = "in"
    NOT_IN = "not in"

    @property
    def symbol(self) -> str:
        return self.value


#: Unicode operator spellings accepted by the parser, mapped to canon.
UNICODE_OPERATORS = {
    "∧": "&",
    "→": "->",
    "≠": "!=",
    "≃": "~=",
    "≥": ">=",
    "≤": "<=",
    "⊆": "in",
    "⊄": "not in",
}

ORDERING_OPERATORS = frozenset({Operator.GT, Operator.GE, Operator.LT, Operator.LE})
SET_OPERATORS = frozenset({Operator.IN, Operator.NOT_IN})


class ConstKind(Enum):
    TEXT = "Text"
    NUMBER = "Number"
    BOOLEAN = "Boolean"
    DATE = "Date"
    TIME = "Time"
    ENUM = "Enum"
    TEXT_LIST = "TextList"


@dataclass(frozen=True)
class Constant:
    """A typed constant literal.

    ``value`` holds, per kind: str (TEXT), Decimal (NUMBER), bool (BOOLEAN),
    datetime.date or the symbolic string ``"Today"`` (DATE), datetime.time
    (TIME), str variant name (ENUM), tuple[str, ...] (TEXT_LIST).
    """

    kind: ConstKind
    value: object

    @staticmethod
    def text(value: str) -> "Constant":
        return Constant(ConstKind.TEXT, value)

    @staticmethod
    def number(value: Decimal | int | str) -> "Constant":
        return Constant(ConstKind.NUMBER, Decimal(str(value)))

    @staticmethod
    def boolean(value: bool) -> "Constant":
        return Constant(ConstKind.BOOLEAN, bool(value))

    @staticmethod
    def calendar(value: date) -> "Constant":
        return Constant(ConstKind.DATE, value)

    @staticmethod
    def today() -> "Constant":
        return Constant(ConstKind.DATE, TODAY)

    @staticmethod
    def clock(value: time) -> "Constant":
        return Constant(ConstKind.TIME, value)

    @staticmethod
    def enum(variant: str) -> "Constant":
        return Constant(ConstKind.ENUM, variant)

    @staticmethod
    def text_list(items: tuple[str, ...] | list[str]) -> "Constant":
        return Constant(ConstKind.TEXT_LIST, tuple(items))

    @property
    def is_today(self) -> bool:
        return self.kind is ConstKind.DATE and self.value == TODAY


@dataclass(frozen=True)
class Constraint:
    variable: str
    operator: Operator
    constant: Constant


@dataclass(frozen=True)
class StatePredicate:
    state_name: str
    constraints: tuple[Constraint, ...]

    def __post_init__(self) -> None:
        if not self.constraints:
            raise ValueError(f"state predicate {self.state_name!r} needs at least one constraint")


@dataclass(frozen=True)
class ObjectiveRef:
    objective_name: str


Predicate = Union[StatePredicate, ObjectiveRef]


@dataclass(frozen=True)
class Rule:
    predicates: tuple[Predicate, ...]
    conclusion: str
    line: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.predicates:
            raise ValueError("a rule needs at least one predicate")


@dataclass(frozen=True)
class Specification:
    rules: tuple[Rule, ...]
    source_text: str | None = field(default=None, compare=False)

    def rules_concluding(self, objective: str) -> list[tuple[int, Rule]]:
        return [(i, r) for i, r in enumerate(self.rules) if r.conclusion == objective]

    def concluded_objectives(self) -> set[str]:
        return {r.conclusion for r in self.rules}


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class SpecSyntaxError(ValueError):
    """Parse failure, with position and the token set that would have been accepted."""

    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.expected = expected
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"line {line}, column {column}: {message}{hint}")


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    column: int


_SINGLE_CHAR_TOKENS = {
    "(": "LPAREN",
    ")": "RPAREN",
    "[": "LBRACKET",
    "]": "RBRACKET",
    ",": "COMMA",
    "&": "AND",
}

_OPERATOR_TEXTS = {"!=", "~=", ">=", "<=", "=", ">", "<"}


def _tokenize(line_text: str, lineno: int) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(line_text)
    while i < n:
        ch = line_text[i]
        col = i + 1
        if ch.isspace():
            i += 1
            continue
        if ch in UNICODE_OPERATORS:
            canon = UNICODE_OPERATORS[ch]
            if canon == "&":
                tokens.append(_Token("AND", "&", col))
            elif canon == "->":
                tokens.append(_Token("ARROW", "->", col))
            elif canon == "in":
                tokens.append(_Token("OP", "in", col))
            elif canon == "not in":
                tokens.append(_Token("OP", "not in", col))
            else:
                tokens.append(_Token("OP", canon, col))
            i += 1
            continue
        if line_text.startswith("->", i):
            tokens.append(_Token("ARROW", "->", col))
            i += 2
            continue
        two = line_text[i : i + 2]
        if two in _OPERATOR_TEXTS:
            tokens.append(_Token("OP", two, col))
            i += 2
            continue
        if ch in _OPERATOR_TEXTS:
            tokens.append(_Token("OP", ch, col))
            i += 1
            continue
        if ch in _SINGLE_CHAR_TOKENS:
            tokens.append(_Token(_SINGLE_CHAR_TOKENS[ch], ch, col))
            i += 1
            continue
        if ch == '"':
            j = i + 1
            buf: list[str] = []
            while j < n:
                c = line_text[j]
                if c == "\\":
                    if j + 1 >= n:
                        raise SpecSyntaxError("unterminated escape", lineno, j + 1)
                    nxt = line_text[j + 1]
                    if nxt not in ('"', "\\"):
                        raise SpecSyntaxError(f"unsupported escape \\{nxt}", lineno, j + 1)
                    buf.append(nxt)
                    j += 2
                    continue
                if c == '"':
                    break
                buf.append(c)
                j += 1
            else:
                raise SpecSyntaxError("unterminated string literal", lineno, col, ('"',))
            if j >= n:
                raise SpecSyntaxError("unterminated string literal", lineno, col, ('"',))
            tokens.append(_Token("STRING", "".join(buf), col))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and line_text[i + 1].isdigit()):
            j = i + (1 if ch == "-" else 0)
            k = j
            while k < n and line_text[k].isdigit():
                k += 1
            # date YYYY-MM-DD
            if ch != "-" and k - j == 4 and line_text[k : k + 1] == "-":
                rest = line_text[k : k + 6]
                if len(rest) == 6 and rest[0] == "-" and rest[3] == "-" and rest[1:3].isdigit() and rest[4:6].isdigit():
                    tokens.append(_Token("DATE", line_text[i : k + 6], col))
                    i = k + 6
                    continue
            # time HH:MM
            if ch != "-" and k - j <= 2 and line_text[k : k + 1] == ":":
                rest = line_text[k + 1 : k + 3]
                if len(rest) == 2 and rest.isdigit():
                    tokens.append(_Token("TIME", line_text[i : k + 3], col))
                    i = k + 3
                    continue
            if k < n and line_text[k] == ".":
                m = k + 1
                while m < n and line_text[m].isdigit():
                    m += 1
                if m == k + 1:
                    raise SpecSyntaxError("malformed number", lineno, col, ("digit",))
                tokens.append(_Token("NUMBER", line_text[i:m], col))
                i = m
                continue
            tokens.append(_Token("NUMBER", line_text[i:k], col))
            i = k
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (line_text[j].isalnum() or line_text[j] == "_"):
                j += 1
            word = line_text[i:j]
            if word == "in":
                tokens.append(_Token("OP", "in", col))
            elif word == "not":
                # only meaningful as "not in"
                rest = line_text[j:].lstrip()
                if rest.startswith("in") and (len(rest) == 2 or not (rest[2].isalnum() or rest[2] == "_")):
                    consumed = len(line_text[j:]) - len(rest) + 2
                    tokens.append(_Token("OP", "not in", col))
                    j += consumed
                else:
                    raise SpecSyntaxError("'not' is only valid as part of 'not in'", lineno, col, ("not in",))
            else:
                tokens.append(_Token("IDENT", word, col))
            i = j
            continue
        raise SpecSyntaxError(f"unexpected character {ch!r}", lineno, col)
    tokens.append(_Token("EOL", "", n + 1))
    return tokens


class _RuleParser:
    def __init__(self, tokens: list[_Token], lineno: int):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, expected: tuple[str, ...]) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise SpecSyntaxError(
                f"unexpected {tok.kind} {tok.text!r}" if tok.kind != "EOL" else "unexpected end of line",
                self.lineno,
                tok.column,
                expected,
            )
        return self.advance()

    def parse_rule(self) -> Rule:
        predicates = [self.parse_predicate()]
        while self.peek().kind == "AND":
            self.advance()
            predicates.append(self.parse_predicate())
        self.expect("ARROW", ("'->'", "'&'"))
        conclusion = self.expect("IDENT", ("objective name",)).text
        self.expect("EOL", ("end of line",))
        return Rule(tuple(predicates), conclusion, line=self.lineno)

    def parse_predicate(self) -> Predicate:
        name = self.expect("IDENT", ("state name", "objective name")).text
        if self.peek().kind != "LPAREN":
            return ObjectiveRef(name)
        self.advance()
        constraints = [self.parse_constraint()]
        while self.peek().kind == "COMMA":
            self.advance()
            constraints.append(self.parse_constraint())
        self.expect("RPAREN", ("')'", "','"))
        return StatePredicate(name, tuple(constraints))

    def parse_constraint(self) -> Constraint:
        variable = self.expect("IDENT", ("variable name",)).text
        op_tok = self.expect("OP", tuple(sorted(o.symbol for o in Operator)))
        operator = Operator(op_tok.text)
        constant = self.parse_literal()
        return Constraint(variable, operator, constant)

    def parse_literal(self) -> Constant:
        tok = self.peek()
        if tok.kind == "STRING":
            self.advance()
            return Constant.text(tok.text)
        if tok.kind == "NUMBER":
            self.advance()
            return Constant.number(tok.text)
        if tok.kind == "DATE":
            self.advance()
            try:
                return Constant.calendar(date.fromisoformat(tok.text))
            except ValueError:
                raise SpecSyntaxError(f"invalid date {tok.text!r}", self.lineno, tok.column) from None
        if tok.kind == "TIME":
            self.advance()
            hh, mm = tok.text.split(":")
            if not (0 <= int(hh) <= 23 and 0 <= int(mm) <= 59):
                raise SpecSyntaxError(f"invalid time {tok.text!r}", self.lineno, tok.column)
            return Constant.clock(time(int(hh), int(mm)))
        if tok.kind == "LBRACKET":
            self.advance()
            items: list[str] = []
            if self.peek().kind == "STRING":
                items.append(self.advance().text)
                while self.peek().kind == "COMMA":
                    self.advance()
                    items.append(self.expect("STRING", ("string literal",)).text)
            self.expect("RBRACKET", ("']'", "string literal"))
            return Constant.text_list(tuple(items))
        if tok.kind == "IDENT":
            self.advance()
            lowered = tok.text.lower()
            if lowered == "true":
                return Constant.boolean(True)
            if lowered == "false":
                return Constant.boolean(False)
            if lowered == "today":
                return Constant.today()
            return Constant.enum(tok.text)
        raise SpecSyntaxError(
            f"unexpected {tok.kind} {tok.text!r}" if tok.kind != "EOL" else "unexpected end of line",
            self.lineno,
            tok.column,
            ("constant literal",),
        )


def _strip_comment(line_text: str) -> str:
    in_string = False
    escaped = False
    for i, ch in enumerate(line_text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "#":
            return line_text[:i]
    return line_text


def parse_specification(text: str) -> Specification:
    """Parse DSL source into a :class:`Specification`.

    One rule per line; blank lines and ``#`` comments are skipped.  Raises
    :class:`SpecSyntaxError` with line/column and the expected-token set on
    malformed input, including the empty (zero rules) case.
    """
    rules: list[Rule] = []
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, 1):
        stripped = _strip_comment(raw).strip()
        if not stripped:
            continue
        rules.append(_RuleParser(_tokenize(stripped, lineno), lineno).parse_rule())
    if not rules:
        raise SpecSyntaxError("no rules found", max(len(lines), 1), 1, ("rule",))
    return Specification(tuple(rules), source_text=text)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def render_constant(constant: Constant) -> str:
    """Canonical DSL literal for a constant."""
    kind, value = constant.kind, constant.value
    if kind is ConstKind.TEXT:
        return _quote(str(value))
    if kind is ConstKind.NUMBER:
        return format(value, "f")
    if kind is ConstKind.BOOLEAN:
        return "true" if value else "false"
    if kind is ConstKind.DATE:
        return TODAY if constant.is_today else value.isoformat()
    if kind is ConstKind.TIME:
        return value.strftime("%H:%M")
    if kind is ConstKind.ENUM:
        return str(value)
    return "[" + ", ".join(_quote(item) for item in value) + "]"


def render_predicate(predicate: Predicate) -> str:
    if isinstance(predicate, ObjectiveRef):
        return predicate.objective_name
    inner = ", ".join(
        f"{c.variable} {c.operator.symbol} {render_constant(c.constant)}" for c in predicate.constraints
    )
    return f"{predicate.state_name}({inner})"


def render_rule(rule: Rule) -> str:
    body = " & ".join(render_predicate(p) for p in rule.predicates)
    return f"{body} -> {rule.conclusion}"


def render_specification(spec: Specification) -> str:
    """Deterministic canonical rendering; parse(render(s)) equals s structurally."""
    return "\n".join(render_rule(r) for r in spec.rules) + "\n"


# ---------------------------------------------------------------------------
# Static checking
# ---------------------------------------------------------------------------


class DiagnosticCode(str, Enum):
    UNKNOWN_STATE = "UNKNOWN_STATE"
    UNKNOWN_VARIABLE = "UNKNOWN_VARIABLE"
    TYPE_MISMATCH = "TYPE_MISMATCH"
    DUPLICATE_PREDICATE = "DUPLICATE_PREDICATE"
    RESERVED_OBJECTIVE = "RESERVED_OBJECTIVE"
    UNDEFINED_OBJECTIVE = "UNDEFINED_OBJECTIVE"
    NO_DONE_RULE = "NO_DONE_RULE"
    CYCLE = "CYCLE"


@dataclass(frozen=True)
class Diagnostic:
    """One static-check finding.  ``message`` is the text handed back to the
    encoding model verbatim, so it names the offending construct precisely."""

    code: DiagnosticCode
    message: str
    line: int | None = None
    rule_index: int | None = None

    def __str__(self) -> str:
        where = f" (rule {self.rule_index + 1})" if self.rule_index is not None else ""
        return f"{self.code.value}{where}: {self.message}"


#: var type -> operators it supports
_OPERATORS_FOR_TYPE = {
    TypeKind.TEXT: frozenset({Operator.EQ, Operator.NEQ, Operator.APPROX, Operator.IN, Operator.NOT_IN}),
    TypeKind.NUMBER: frozenset({Operator.EQ, Operator.NEQ}) | ORDERING_OPERATORS,
    TypeKind.BOOLEAN: frozenset({Operator.EQ, Operator.NEQ}),
    TypeKind.DATE: frozenset({Operator.EQ, Operator.NEQ}) | ORDERING_OPERATORS,
    TypeKind.TIME: frozenset({Operator.EQ, Operator.NEQ}) | ORDERING_OPERATORS,
    TypeKind.ENUM: frozenset({Operator.EQ, Operator.NEQ, Operator.IN, Operator.NOT_IN}),
}

#: var type -> constant kind expected on the right-hand side of scalar operators
KIND_FOR_TYPE = {
    TypeKind.TEXT: ConstKind.TEXT,
    TypeKind.NUMBER: ConstKind.NUMBER,
    TypeKind.BOOLEAN: ConstKind.BOOLEAN,
    TypeKind.DATE: ConstKind.DATE,
    TypeKind.TIME: ConstKind.TIME,
    TypeKind.ENUM: ConstKind.ENUM,
}


def constraint_type_error(var_type: VarType, constraint: Constraint) -> str | None:
    """Return a human-readable incompatibility message, or None if compatible.

    At most one message per constraint: the operator/variable pairing is
    checked first, then the constant's kind against the variable's type.
    """
    op = constraint.operator
    if op not in _OPERATORS_FOR_TYPE[var_type.kind]:
        return (
            f"operator '{op.symbol}' is not applicable to variable "
            f"'{constraint.variable}' of type {var_type.describe()}"
        )
    if op in SET_OPERATORS:
        if constraint.constant.kind is not ConstKind.TEXT_LIST:
            return (
                f"operator '{op.symbol}' on variable '{constraint.variable}' "
                f"requires a list constant such as [\"a\", \"b\"]"
            )
        if var_type.kind is TypeKind.ENUM:
            unknown = [item for item in constraint.constant.value if item not in var_type.variants]
            if unknown:
                return (
                    f"list items {unknown!r} are not variants of "
                    f"'{constraint.variable}' ({var_type.describe()})"
                )
        return None
    expected = KIND_FOR_TYPE[var_type.kind]
    if constraint.constant.kind is not expected:
        return (
            f"variable '{constraint.variable}' has type {var_type.describe()} but the "
            f"constant {render_constant(constraint.constant)} is a {constraint.constant.kind.value}"
        )
    if var_type.kind is TypeKind.ENUM and constraint.constant.value not in var_type.variants:
        return (
            f"'{constraint.constant.value}' is not a variant of "
            f"'{constraint.variable}' ({var_type.describe()})"
        )
    return None


def check_specification(spec: Specification, schema: StateSchema) -> list[Diagnostic]:
    """Run every static check; an empty result means the spec is ready to verify.

    Checks, in order per rule: state and variable resolution, constraint type
    compatibility, duplicate predicates, reserved-objective misuse.  Spec-wide:
    every referenced objective must be concluded somewhere, at least one rule
    must conclude ``Done``, and objective precedence must be acyclic.
    """
    diagnostics: list[Diagnostic] = []
    states = {s.name: s for s in schema.states}
    referenced: dict[str, tuple[int, int | None]] = {}

    for idx, rule in enumerate(spec.rules):
        seen: set[Predicate] = set()
        for pred in rule.predicates:
            if pred in seen:
                diagnostics.append(
                    Diagnostic(
                        DiagnosticCode.DUPLICATE_PREDICATE,
                        f"predicate {render_predicate(pred)} appears more than once in the rule",
                        rule.line,
                        idx,
                    )
                )
                continue
            seen.add(pred)
            if isinstance(pred, ObjectiveRef):
                if pred.objective_name == DONE:
                    diagnostics.append(
                        Diagnostic(
                            DiagnosticCode.RESERVED_OBJECTIVE,
                            f"'{DONE}' is reserved for rule conclusions and cannot be used as a predicate",
                            rule.line,
                            idx,
                        )
                    )
                else:
                    referenced.setdefault(pred.objective_name, (idx, rule.line))
                continue
            state = states.get(pred.state_name)
            if state is None:
                diagnostics.append(
                    Diagnostic(
                        DiagnosticCode.UNKNOWN_STATE,
                        f"state '{pred.state_name}' is not declared; declared states: "
                        f"{', '.join(sorted(states)) or '(none)'}",
                        rule.line,
                        idx,
                    )
                )
                continue
            for constraint in pred.constraints:
                var_type = state.variables.get(constraint.variable)
                if var_type is None:
                    diagnostics.append(
                        Diagnostic(
                            DiagnosticCode.UNKNOWN_VARIABLE,
                            f"state '{pred.state_name}' has no variable '{constraint.variable}'; "
                            f"declared variables: {', '.join(sorted(state.variables))}",
                            rule.line,
                            idx,
                        )
                    )
                    continue
                problem = constraint_type_error(var_type, constraint)
                if problem is not None:
                    diagnostics.append(
                        Diagnostic(DiagnosticCode.TYPE_MISMATCH, problem, rule.line, idx)
                    )

    concluded = spec.concluded_objectives()
    for name, (idx, line) in sorted(referenced.items(), key=lambda kv: kv[1][0]):
        if name not in concluded:
            diagnostics.append(
                Diagnostic(
                    DiagnosticCode.UNDEFINED_OBJECTIVE,
                    f"objective '{name}' is used as a predicate but no rule concludes it",
                    line,
                    idx,
                )
            )

    if DONE not in concluded:
        diagnostics.append(
            Diagnostic(DiagnosticCode.NO_DONE_RULE, f"no rule concludes the reserved objective '{DONE}'")
        )

    cycle = _find_objective_cycle(spec)
    if cycle is not None:
        diagnostics.append(
            Diagnostic(
                DiagnosticCode.CYCLE,
                "objective precedence is cyclic: " + " -> ".join(cycle),
            )
        )
    return diagnostics


def _find_objective_cycle(spec: Specification) -> list[str] | None:
    edges: dict[str, set[str]] = {}
    for rule in spec.rules:
        deps = edges.setdefault(rule.conclusion, set())
        for pred in rule.predicates:
            if isinstance(pred, ObjectiveRef):
                deps.add(pred.objective_name)

    WHITE, GREY, BLACK = 0, 1, 2
    color = {name: WHITE for name in edges}
    stack: list[str] = []

    def visit(node: str) -> list[str] | None:
        color[node] = GREY
        stack.append(node)
        for dep in sorted(edges.get(node, ())):
            if color.get(dep, BLACK) == GREY:
                return stack[stack.index(dep) :] + [dep]
            if color.get(dep, BLACK) == WHITE:
                found = visit(dep)
                if found is not None:
                    return found
        stack.pop()
        color[node] = BLACK
        return None

    for name in sorted(edges):
        if color[name] == WHITE:
            found = visit(name)
            if found is not None:
                return found
    return None


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class EvalTypeError(TypeError):
    """A runtime value's type conflicts with the constraint's constant: the
    schema and the observed trace disagree."""


@dataclass(frozen=True)
class EvalContext:
    """Everything constraint evaluation may consult: the date that resolves the
    symbolic ``Today`` constant, and the similarity function behind ``~=``."""

    today: date
    similarity: Callable[[str, str], float]
    threshold: float = 0.7


def normalize_text(value: str) -> str:
    """NFC-normalize and trim; the equality form used for exact Text matches."""
    return unicodedata.normalize("NFC", value).strip()


def _resolve_date(constant: Constant, ctx: EvalContext) -> date:
    return ctx.today if constant.is_today else constant.value  # type: ignore[return-value]


def evaluate_constraint(constraint: Constraint, value: Constant | None, ctx: EvalContext) -> bool:
    """Evaluate one constraint against an observed value.

    An unobserved value (``None``) makes the constraint false for every
    operator, including ``!=`` and ``not in``.  A defined value whose kind
    conflicts with the constant raises :class:`EvalTypeError` instead of
    silently evaluating, since it signals a schema/trace mismatch rather than
    a normal failure.
    """
    if value is None:
        return False
    op = constraint.operator
    const = constraint.constant

    if op in SET_OPERATORS:
        if const.kind is not ConstKind.TEXT_LIST:
            raise EvalTypeError(f"operator '{op.symbol}' requires a list constant")
        if value.kind not in (ConstKind.TEXT, ConstKind.ENUM):
            raise EvalTypeError(
                f"operator '{op.symbol}' applies to Text or Enum values, got {value.kind.value}"
            )
        if value.kind is ConstKind.TEXT:
            member = normalize_text(str(value.value)).casefold() in {
                normalize_text(item).casefold() for item in const.value
            }
        else:
            member = value.value in const.value
        return member if op is Operator.IN else not member

    if value.kind is not const.kind:
        raise EvalTypeError(
            f"constraint on '{constraint.variable}' compares a {const.kind.value} constant "
            f"against a {value.kind.value} value"
        )

    if op is Operator.APPROX:
        if const.kind is not ConstKind.TEXT:
            raise EvalTypeError("operator '~=' applies to Text only")
        return ctx.similarity(normalize_text(str(value.value)), normalize_text(str(const.value))) >= ctx.threshold

    if const.kind is ConstKind.TEXT:
        left, right = normalize_text(str(value.value)), normalize_text(str(const.value))
    elif const.kind is ConstKind.DATE:
        left, right = _resolve_date(value, ctx), _resolve_date(const, ctx)
    else:
        left, right = value.value, const.value

    if op is Operator.EQ:
        return left == right
    if op is Operator.NEQ:
        return left != right
    if op in ORDERING_OPERATORS:
        if const.kind not in (ConstKind.NUMBER, ConstKind.DATE, ConstKind.TIME):
            raise EvalTypeError(f"operator '{op.symbol}' applies to Number, Date, or Time only")
        if op is Operator.GT:
            return left > right
        if op is Operator.GE:
            return left >= right
        if op is Operator.LT:
            return left < right
        return left <= right
    raise AssertionError(f"unhandled operator {op}")
