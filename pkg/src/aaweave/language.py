"""Grammar and parser for the adaptation-aspect DSL.

An aspect source has an optional pointcut section and an advice section::

    Pointcut:
      Shutter := /shutter*.SetState/
      light   := /*(@type=light&energyConsumption<50).*/
    Advice:
    schema identity_management(Shutter, light):
      Decision : 'beans.DecisionEntity';
      Decision.^LightManagementEvent -> (light)

Pointcut patterns use a closed dialect of three atoms: literals, ``*``
(any sequence, also spelled ``.*``) and a single-digit class (spelled
``[:digit:]`` or ``[[:digit:]]``).  Matching is case-insensitive.  Metadata
filters sit in parentheses after the component part and are a conjunction
joined by ``&``.

Advice rules are either instantiations (``name : 'type' (prop=value)``) or
arrow rules ``portExpr -> (opExpr)``.  The arrow's left-hand side decides
the rule kind: a required port creates a link, a provided port rewrites the
links already arriving there.  Operator expressions support ``if/else``,
``;`` (sequence, binds tighter), ``||`` (parallel), ``nop``, ``call`` and
``delegate(...)``.  Comments run from ``#`` to end of line.

The grammar deliberately owns no deletion or negation construct; any
negation spelling is rejected outright.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import lru_cache

from .optree import CALL, NOP, Call, Delegate, If, Leaf, Nop, OperatorTree, Par, Seq, par_of, seq_of

# Tokens the grammar is built from; reviewed by tests to prove there is no
# negation or deletion vocabulary.
SYMBOLS = (":=", "->", "||", "(", ")", "{", "}", ":", ";", ",", ".", "^", "=", "<", ">", "&", "@")
KEYWORDS = ("Pointcut", "Advice", "schema", "if", "else", "nop", "call", "delegate", "true", "false")


class AaSyntaxError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0, path: str | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.path = path

    def __str__(self) -> str:
        where = self.path or "<aa>"
        return f"{where}:{self.line}:{self.col}: {self.message}"


class UnboundVariable(AaSyntaxError):
    pass


class NegationRejected(AaSyntaxError):
    pass


# ---------------------------------------------------------------------------
# Pattern dialect

STAR = ("star",)
DIGIT = ("digit",)


def literal(text: str) -> tuple:
    return ("lit", text)


@dataclass(frozen=True, slots=True)
class Pattern:
    component_atoms: tuple
    port_atoms: tuple | None = None
    port_required: bool = False

    def matches_component(self, name: str) -> bool:
        return _atoms_regex(self.component_atoms).fullmatch(name) is not None

    def matches_port(self, name: str, direction: str) -> bool:
        if self.port_atoms is None:
            return True
        want = "required" if self.port_required else "provided"
        if direction != want:
            return False
        return _atoms_regex(self.port_atoms).fullmatch(name) is not None


@lru_cache(maxsize=4096)
def _atoms_regex(atoms: tuple) -> re.Pattern:
    parts = []
    for atom in atoms:
        if atom == STAR:
            parts.append(".*")
        elif atom == DIGIT:
            parts.append(r"\d")
        else:
            parts.append(re.escape(atom[1]))
    return re.compile("".join(parts), re.IGNORECASE)


@dataclass(frozen=True, slots=True)
class MetadataFilter:
    key: str
    op: str  # "eq", "lt" or "gt"
    value: str | int | float

    def evaluate(self, metadata: dict) -> bool:
        if self.key not in metadata:
            return False
        have = metadata[self.key]
        if self.op == "eq":
            if isinstance(have, (int, float)) and isinstance(self.value, (int, float)):
                return float(have) == float(self.value)
            return have == self.value
        if not isinstance(have, (int, float)) or isinstance(have, bool):
            return False
        if self.op == "lt":
            return have < self.value
        return have > self.value


@dataclass(frozen=True, slots=True)
class PointcutRule:
    variable: str
    pattern: Pattern
    filters: tuple[MetadataFilter, ...] = ()


def _scan_atoms(text: str, line: int, col: int, path) -> tuple:
    atoms: list[tuple] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif text.startswith("[[:digit:]]", i):
            atoms.append(DIGIT)
            i += 11
        elif text.startswith("[:digit:]", i):
            atoms.append(DIGIT)
            i += 9
        elif ch == "[":
            raise AaSyntaxError(f"unterminated or unknown character class in pattern {text!r}", line, col, path)
        elif ch == "*":
            atoms.append(STAR)
            i += 1
        elif text.startswith(".*", i):
            atoms.append(STAR)
            i += 2
        elif ch.isalnum() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            atoms.append(literal(text[i:j]))
            i = j
        elif ch == "!":
            raise NegationRejected("negation is not expressible in patterns", line, col, path)
        else:
            raise AaSyntaxError(f"unexpected character {ch!r} in pattern {text!r}", line, col, path)
    return tuple(atoms)


def _split_pattern(raw: str, line: int, col: int, path) -> tuple[str, str | None, str | None]:
    """Split raw pattern text into (component, filters, port) segments."""
    filters = None
    if "(" in raw:
        open_i = raw.index("(")
        close_i = raw.rfind(")")
        if close_i < open_i:
            raise AaSyntaxError(f"unbalanced filter parentheses in pattern {raw!r}", line, col, path)
        filters = raw[open_i + 1 : close_i]
        rest = raw[close_i + 1 :]
        comp = raw[:open_i]
    else:
        comp, rest = raw, ""
        dot = raw.find(".")
        if dot >= 0:
            comp, rest = raw[:dot], raw[dot:]
    if rest == "":
        return comp, filters, None
    if not rest.startswith("."):
        raise AaSyntaxError(f"expected '.' before port part in pattern {raw!r}", line, col, path)
    port = rest[1:]
    if port == "*":
        # A lone trailing `.*` is a component wildcard, not a port constraint.
        return comp + "*", filters, None
    return comp, filters, port


_FILTER_RE = re.compile(r"\s*@?\s*([A-Za-z_][A-Za-z0-9_]*)\s*(=|<|>|!=?)\s*([^&]*?)\s*$")


def _parse_filters(text: str, line: int, col: int, path) -> tuple[MetadataFilter, ...]:
    out = []
    for clause in text.split("&"):
        if not clause.strip():
            raise AaSyntaxError("empty metadata filter", line, col, path)
        m = _FILTER_RE.match(clause)
        if not m:
            raise AaSyntaxError(f"cannot parse metadata filter {clause.strip()!r}", line, col, path)
        key, op_text, value_text = m.groups()
        if op_text.startswith("!"):
            raise NegationRejected("negative metadata filters are not expressible", line, col, path)
        op = {"=": "eq", "<": "lt", ">": "gt"}[op_text]
        value = _parse_filter_value(value_text, line, col, path)
        if op in ("lt", "gt") and not isinstance(value, (int, float)):
            raise AaSyntaxError(f"ordering filter on {key!r} needs a numeric value", line, col, path)
        out.append(MetadataFilter(key, op, value))
    return tuple(out)


def _parse_filter_value(text: str, line: int, col: int, path):
    text = text.strip()
    if not text:
        raise AaSyntaxError("missing filter value", line, col, path)
    if text[0] in "'\"" and text[-1] == text[0] and len(text) >= 2:
        return text[1:-1]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_pattern(text: str, path: str | None = None) -> Pattern:
    """Parse a ``/.../``-delimited pattern with no filter section."""
    pattern, filters = parse_pattern_with_filters(text, path)
    if filters:
        raise AaSyntaxError("metadata filters are not allowed here", 1, 1, path)
    return pattern


def parse_pattern_with_filters(text: str, path: str | None = None, line: int = 1, col: int = 1) -> tuple[Pattern, tuple[MetadataFilter, ...]]:
    raw = text.strip()
    if not (raw.startswith("/") and raw.endswith("/") and len(raw) >= 2):
        raise AaSyntaxError(f"pattern must be delimited by slashes: {text!r}", line, col, path)
    raw = raw[1:-1].strip()
    if not raw:
        raise AaSyntaxError("empty pattern", line, col, path)
    comp_text, filter_text, port_text = _split_pattern(raw, line, col, path)
    comp_atoms = _scan_atoms(comp_text, line, col, path)
    if not comp_atoms:
        raise AaSyntaxError(f"pattern {text!r} has an empty component part", line, col, path)
    filters = _parse_filters(filter_text, line, col, path) if filter_text is not None else ()
    if port_text is None:
        return Pattern(comp_atoms), filters
    port_required = port_text.startswith("^")
    if port_required:
        port_text = port_text[1:]
    port_atoms = _scan_atoms(port_text, line, col, path)
    if not port_atoms:
        raise AaSyntaxError(f"pattern {text!r} has an empty port part", line, col, path)
    return Pattern(comp_atoms, port_atoms, port_required), filters


# ---------------------------------------------------------------------------
# Advice AST


@dataclass(frozen=True, slots=True)
class PortExpr:
    """A source-level port reference: pointcut variable or advice-local name."""

    base: str
    port: str | None = None
    required: bool = False

    def key(self) -> tuple:
        return (self.base, self.port or "", self.required)

    def __str__(self) -> str:
        if self.port is None:
            return self.base
        mark = "^" if self.required else ""
        return f"{self.base}.{mark}{self.port}"


@dataclass(frozen=True)
class Instantiate:
    local_name: str
    type_name: str
    init_props: dict = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class Link:
    source: PortExpr
    tree: OperatorTree


@dataclass(frozen=True, slots=True)
class Rewrite:
    target: PortExpr
    tree: OperatorTree


AdviceRule = Instantiate | Link | Rewrite


@dataclass(frozen=True)
class AspectOfAssembly:
    name: str
    pointcut: tuple[PointcutRule, ...]
    advice_params: tuple[str, ...]
    rules: tuple[AdviceRule, ...]
    namespace: str | None = None

    def with_namespace(self, namespace: str | None) -> "AspectOfAssembly":
        return replace(self, namespace=namespace)

    @property
    def locals(self) -> tuple[str, ...]:
        return tuple(r.local_name for r in self.rules if isinstance(r, Instantiate))

    def pointcut_rule(self, variable: str) -> PointcutRule:
        for rule in self.pointcut:
            if rule.variable == variable:
                return rule
        raise KeyError(variable)


# ---------------------------------------------------------------------------
# Tokenizer


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str  # IDENT, NUMBER, STRING, PATTERN, symbol text, or EOF
    value: str
    line: int
    col: int


def _tokenize(text: str, path: str | None) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "!":
            raise NegationRejected("negation syntax is not part of the language", line, col, path)
        if ch == "/" and tokens and tokens[-1].kind == ":=":
            end = text.find("/", i + 1)
            nl = text.find("\n", i + 1)
            if end < 0 or (0 <= nl < end):
                raise AaSyntaxError("unterminated pattern", line, col, path)
            raw = text[i : end + 1]
            tokens.append(_Token("PATTERN", raw, line, col))
            col += end + 1 - i
            i = end + 1
            continue
        if ch in "'\"":
            end = text.find(ch, i + 1)
            if end < 0:
                raise AaSyntaxError("unterminated string", line, col, path)
            tokens.append(_Token("STRING", text[i + 1 : end], line, col))
            col += end + 1 - i
            i = end + 1
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            m = re.match(r"-?\d+(\.\d+)?", text[i:])
            tokens.append(_Token("NUMBER", m.group(0), line, col))
            col += m.end()
            i += m.end()
            continue
        if ch.isalpha() or ch == "_":
            m = re.match(r"[A-Za-z_][A-Za-z0-9_]*", text[i:])
            tokens.append(_Token("IDENT", m.group(0), line, col))
            col += m.end()
            i += m.end()
            continue
        for sym in (":=", "->", "||"):
            if text.startswith(sym, i):
                tokens.append(_Token(sym, sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            if ch in "(){}:;,.^=<>&@":
                tokens.append(_Token(ch, ch, line, col))
                i += 1
                col += 1
            else:
                raise AaSyntaxError(f"unexpected character {ch!r}", line, col, path)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, tokens: list[_Token], path: str | None):
        self.tokens = tokens
        self.path = path
        self.pos = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def peek(self, ahead: int = 1) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        tok = self.cur
        self.pos += 1
        return tok

    def fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.cur
        raise AaSyntaxError(message, tok.line, tok.col, self.path)

    def expect(self, kind: str, what: str | None = None) -> _Token:
        if self.cur.kind != kind:
            self.fail(f"expected {what or kind!r}, found {self.cur.value or self.cur.kind!r}")
        return self.advance()

    def expect_ident(self, value: str | None = None) -> _Token:
        tok = self.expect("IDENT", value)
        if value is not None and tok.value != value:
            self.fail(f"expected {value!r}, found {tok.value!r}", tok)
        return tok

    def at_ident(self, value: str) -> bool:
        return self.cur.kind == "IDENT" and self.cur.value == value

    # -- grammar productions ------------------------------------------------

    def parse_aa(self) -> AspectOfAssembly:
        pointcut: list[PointcutRule] = []
        if self.at_ident("Pointcut"):
            self.advance()
            self.expect(":")
            while self.cur.kind == "IDENT" and self.cur.value != "Advice" and self.peek().kind == ":=":
                pointcut.append(self.parse_pointcut_rule())
        self.expect_ident("Advice")
        self.expect(":")
        self.expect_ident("schema")
        name = self.expect("IDENT", "schema name").value
        self.expect("(")
        params: list[str] = []
        if self.cur.kind == "IDENT":
            params.append(self.advance().value)
            while self.cur.kind == ",":
                self.advance()
                params.append(self.expect("IDENT", "parameter name").value)
        self.expect(")")
        self.expect(":")
        rules: list[tuple[AdviceRule, _Token]] = []
        while self.cur.kind != "EOF":
            rules.append(self.parse_advice_rule())
        if not rules:
            self.fail("advice needs at least one rule")
        return self._assemble(name, pointcut, params, rules)

    def parse_pointcut_rule(self) -> PointcutRule:
        var = self.expect("IDENT").value
        self.expect(":=")
        tok = self.expect("PATTERN")
        pattern, filters = parse_pattern_with_filters(tok.value, self.path, tok.line, tok.col)
        return PointcutRule(var, pattern, filters)

    def parse_advice_rule(self) -> tuple[AdviceRule, _Token]:
        start = self.cur
        if self.cur.kind != "IDENT":
            self.fail(f"expected an advice rule, found {self.cur.value or self.cur.kind!r}")
        if self.peek().kind == ":":
            local = self.advance().value
            self.advance()  # ':'
            type_name = self.expect("STRING", "quoted type name").value
            props: dict = {}
            if self.cur.kind == "(":
                self.advance()
                while True:
                    key = self.expect("IDENT", "property name").value
                    self.expect("=")
                    props[key] = self.parse_value()
                    if self.cur.kind != ",":
                        break
                    self.advance()
                self.expect(")")
            if self.cur.kind == ";":
                self.advance()
            return Instantiate(local, type_name, props), start
        lhs = self.parse_port_expr()
        self.expect("->")
        self.expect("(")
        tree = self.parse_op_expr()
        self.expect(")")
        # Rule kind is resolved once the pointcut is known; carry the raw side.
        return Link(lhs, tree), start

    def parse_value(self):
        tok = self.cur
        if tok.kind == "NUMBER":
            self.advance()
            return float(tok.value) if "." in tok.value else int(tok.value)
        if tok.kind == "STRING":
            self.advance()
            return tok.value
        if tok.kind == "IDENT":
            self.advance()
            if tok.value in ("true", "false"):
                return tok.value == "true"
            return tok.value
        self.fail("expected a property value")

    def parse_port_expr(self) -> PortExpr:
        base = self.expect("IDENT", "port expression").value
        if self.cur.kind != ".":
            return PortExpr(base)
        self.advance()
        req = False
        if self.cur.kind == "^":
            self.advance()
            req = True
        port = self.expect("IDENT", "port name").value
        return PortExpr(base, port, req)

    def parse_op_expr(self) -> OperatorTree:
        children = [self.parse_op_seq()]
        while self.cur.kind == "||":
            self.advance()
            children.append(self.parse_op_seq())
        return par_of(children)

    def parse_op_seq(self) -> OperatorTree:
        children = [self.parse_op_atom()]
        while self.cur.kind == ";":
            self.advance()
            children.append(self.parse_op_atom())
        return seq_of(children)

    def parse_op_atom(self) -> OperatorTree:
        if self.at_ident("if"):
            self.advance()
            self.expect("(")
            cond = self.parse_port_expr()
            self.expect(")")
            self.expect("{")
            then = self.parse_op_expr()
            self.expect("}")
            self.expect_ident("else")
            self.expect("{")
            orelse = self.parse_op_expr()
            self.expect("}")
            return If(cond, then, orelse)
        if self.at_ident("nop"):
            self.advance()
            return NOP
        if self.at_ident("call"):
            self.advance()
            return CALL
        if self.at_ident("delegate"):
            self.advance()
            self.expect("(")
            child = self.parse_op_expr()
            self.expect(")")
            return Delegate(child)
        if self.cur.kind == "(":
            self.advance()
            tree = self.parse_op_expr()
            self.expect(")")
            return tree
        if self.cur.kind == "IDENT":
            return Leaf(self.parse_port_expr())
        self.fail(f"expected an operator expression, found {self.cur.value or self.cur.kind!r}")

    # -- post-parse resolution ----------------------------------------------

    def _assemble(
        self,
        name: str,
        pointcut: list[PointcutRule],
        params: list[str],
        raw_rules: list[tuple[AdviceRule, _Token]],
    ) -> AspectOfAssembly:
        variables = [r.variable for r in pointcut]
        if len(set(variables)) != len(variables):
            self.fail(f"duplicate pointcut variable in aspect {name!r}")
        if set(variables) != set(params):
            missing = sorted(set(variables) ^ set(params))
            tok = raw_rules[0][1]
            raise UnboundVariable(
                f"schema parameters and pointcut variables disagree on {missing}",
                tok.line,
                tok.col,
                self.path,
            )
        locals_seen: list[str] = []
        for rule, tok in raw_rules:
            if isinstance(rule, Instantiate):
                if rule.local_name in locals_seen or rule.local_name in params:
                    raise AaSyntaxError(
                        f"instantiation name {rule.local_name!r} is not unique", tok.line, tok.col, self.path
                    )
                locals_seen.append(rule.local_name)
        by_var = {r.variable: r for r in pointcut}
        known = set(params) | set(locals_seen)

        def check_expr(expr: PortExpr, tok: _Token):
            if expr.base not in known:
                raise UnboundVariable(
                    f"{expr.base!r} is neither a pointcut variable nor an instantiated component",
                    tok.line,
                    tok.col,
                    self.path,
                )
            if expr.base in locals_seen and expr.port is None:
                self.fail(f"reference to {expr.base!r} needs an explicit port", tok)

        rules: list[AdviceRule] = []
        for rule, tok in raw_rules:
            if isinstance(rule, Instantiate):
                rules.append(rule)
                continue
            lhs, tree = rule.source, rule.tree
            check_expr(lhs, tok)
            for ref in _tree_refs(tree):
                check_expr(ref, tok)
            rules.append(self._classify(lhs, tree, by_var, locals_seen, tok))
        return AspectOfAssembly(name, tuple(pointcut), tuple(params), tuple(rules))

    def _classify(self, lhs: PortExpr, tree, by_var, locals_seen, tok) -> AdviceRule:
        if lhs.port is not None:
            return Link(lhs, tree) if lhs.required else Rewrite(lhs, tree)
        if lhs.base in locals_seen:
            self.fail(f"rule on {lhs.base!r} needs an explicit port", tok)
        pattern = by_var[lhs.base].pattern
        if pattern.port_atoms is None:
            self.fail(
                f"cannot infer the direction of {lhs.base!r}: give the pointcut a port part or write {lhs.base}.port",
                tok,
            )
        return Link(lhs, tree) if pattern.port_required else Rewrite(lhs, tree)


def _tree_refs(tree) -> list[PortExpr]:
    from .optree import iter_refs

    return [r for r in iter_refs(tree) if isinstance(r, PortExpr)]


def parse_aa(text: str, path: str | None = None) -> AspectOfAssembly:
    """Parse one aspect source into its structured form."""
    return _Parser(_tokenize(text, path), path).parse_aa()


def parse_operator_expr(text: str, path: str | None = None) -> OperatorTree:
    parser = _Parser(_tokenize(text, path), path)
    tree = parser.parse_op_expr()
    parser.expect("EOF", "end of expression")
    return tree


# ---------------------------------------------------------------------------
# Printer


def print_pattern(pattern: Pattern, filters: tuple[MetadataFilter, ...] = ()) -> str:
    def atoms_text(atoms) -> str:
        out = []
        for atom in atoms:
            if atom == STAR:
                out.append("*")
            elif atom == DIGIT:
                out.append("[:digit:]")
            else:
                out.append(atom[1])
        return "".join(out)

    text = atoms_text(pattern.component_atoms)
    if filters:
        text += "(" + "&".join(_filter_text(f) for f in filters) + ")"
    if pattern.port_atoms is not None:
        text += "." + ("^" if pattern.port_required else "") + atoms_text(pattern.port_atoms)
    return f"/{text}/"


def _filter_text(f: MetadataFilter) -> str:
    op = {"eq": "=", "lt": "<", "gt": ">"}[f.op]
    value = f.value
    if isinstance(value, str) and not re.fullmatch(r"[A-Za-z0-9_.:-]+", value):
        value = f"'{value}'"
    return f"@{f.key}{op}{value}"


def print_operator_expr(tree: OperatorTree) -> str:
    match tree:
        case Leaf(target=t):
            return str(t)
        case If(cond=c, then=a, orelse=b):
            return f"if ({c}) {{{print_operator_expr(a)}}} else {{{print_operator_expr(b)}}}"
        case Seq(children=ch):
            return " ; ".join(_seq_child(c) for c in ch)
        case Par(children=ch):
            return " || ".join(_par_child(c) for c in ch)
        case Delegate(child=c):
            return f"delegate({print_operator_expr(c)})"
        case Nop():
            return "nop"
        case Call():
            return "call"
    raise TypeError(f"not an operator tree: {tree!r}")


def _seq_child(tree) -> str:
    text = print_operator_expr(tree)
    return f"({text})" if isinstance(tree, (Par, Seq)) else text


def _par_child(tree) -> str:
    text = print_operator_expr(tree)
    return f"({text})" if isinstance(tree, Par) else text


def _value_text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return str(value)
    return f"'{value}'"


def print_aa(aa: AspectOfAssembly) -> str:
    lines: list[str] = []
    if aa.pointcut:
        lines.append("Pointcut:")
        for rule in aa.pointcut:
            lines.append(f"  {rule.variable} := {print_pattern(rule.pattern, rule.filters)}")
    lines.append("Advice:")
    lines.append(f"schema {aa.name}({', '.join(aa.advice_params)}):")
    for rule in aa.rules:
        match rule:
            case Instantiate(local_name=n, type_name=t, init_props=props):
                prop_text = ""
                if props:
                    prop_text = " (" + ", ".join(f"{k} = {_value_text(v)}" for k, v in props.items()) + ")"
                lines.append(f"  {n} : '{t}'{prop_text};")
            case Link(source=s, tree=tree):
                lines.append(f"  {s} -> ({print_operator_expr(tree)})")
            case Rewrite(target=t, tree=tree):
                lines.append(f"  {t} -> ({print_operator_expr(tree)})")
    return "\n".join(lines) + "\n"
