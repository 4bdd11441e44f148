"""The ``.psys`` text format: parser with located errors and a canonical serializer.

See ``docs/grammar.md`` for the grammar.  Parsing expands ``forall``
schemas into ground rules, checks symbol declarations and runs the
structural validation, so a successfully parsed spec is always valid.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

from .terms import (
    EMPTY,
    OMEGA,
    Condition,
    EvolutionRule,
    MembraneContent,
    MembraneNode,
    Multiset,
    ObserverTemplate,
    RuleSchema,
    expand_rule_schemas,
    validate_observer,
    validate_system,
)

KEYWORDS = frozenset({
    "system", "observer", "alphabet", "membrane", "objects", "rule", "forall", "if", "hole",
    "here", "out", "in", "lambda", "promoters", "inhibitors", "omega", "and", "or", "not",
})
MAX_NESTING = 64
MAX_INT = 10**9


class DslError(Exception):
    """Base class of every parse-time error; carries a 1-based location."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class PsysSyntaxError(DslError):
    def __init__(self, line: int, col: int, expected: str, found: str = ""):
        self.expected = expected
        self.found = found
        msg = f"expected {expected}" + (f", found {found!r}" if found else "")
        super().__init__(msg, line, col)


class UndeclaredSymbol(DslError):
    pass


class DuplicateLabel(DslError):
    pass


class ObserverShapeError(DslError):
    pass


class ValidationError(DslError):
    def __init__(self, message: str, line: int = 0, col: int = 0, violations=()):
        self.violations = list(violations)
        super().__init__(message, line, col)


@dataclass(frozen=True)
class SourceSpec:
    kind: str
    name: str
    alphabet: frozenset[str]
    root: MembraneNode | ObserverTemplate
    schemas: tuple[RuleSchema, ...] = field(default=(), compare=False)

    @property
    def system(self) -> MembraneNode:
        if not isinstance(self.root, MembraneNode):
            raise TypeError(f"{self.name} is an observer")
        return self.root

    @property
    def observer(self) -> ObserverTemplate:
        if not isinstance(self.root, ObserverTemplate):
            raise TypeError(f"{self.name} is a system")
        return self.root


# ---------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<arrow>->|→)
  | (?P<ne>!=|≠)
  | (?P<punct>[{}()\[\],:^|=∧∨¬])
  | (?P<word>\w+)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # word, string, punct, eof
    value: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PsysSyntaxError(line, pos - line_start + 1, "a token", text[pos])
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "string":
            tokens.append(Token("string", re.sub(r"\\(.)", r"\1", value[1:-1]), line, col))
        elif kind in ("arrow", "ne", "punct"):
            value = {"→": "->", "≠": "!=", "∧": "and", "∨": "or", "¬": "not"}.get(value, value)
            tokens.append(Token("word" if value in ("and", "or", "not") else "punct", value, line, col))
        elif kind == "word":
            tokens.append(Token("word", value, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# parser


@dataclass
class _Sym:
    parts: tuple[str, ...]
    line: int
    col: int


@dataclass
class _RuleAst:
    id: str
    lhs: list[tuple[_Sym, int]]
    here: list[tuple[_Sym, int]]
    out: list[tuple[_Sym, int]]
    ins: list[tuple[int, list[tuple[_Sym, int]]]]
    promoters: list[_Sym]
    inhibitors: list[_Sym]
    line: int
    col: int
    params: tuple[tuple[str, tuple[str, ...]], ...] = ()
    guard: Callable[[Mapping[str, str]], bool] | None = None


@dataclass
class _MembraneAst:
    label: int
    line: int
    col: int
    objects: list[tuple[_Sym, int]] = field(default_factory=list)
    rules: list[_RuleAst] = field(default_factory=list)
    children: list["_MembraneAst"] = field(default_factory=list)
    holes: list[tuple[int, int, int]] = field(default_factory=list)


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.depth = 0

    # -- helpers -------------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def fail(self, expected: str):
        t = self.tok
        raise PsysSyntaxError(t.line, t.col, expected, t.value if t.kind != "eof" else "end of input")

    def at(self, value: str) -> bool:
        t = self.tok
        return t.kind in ("punct", "word") and t.value == value

    def expect(self, value: str) -> Token:
        if not self.at(value):
            self.fail(repr(value))
        return self.advance()

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.advance()
            return True
        return False

    def word(self, what: str = "an identifier") -> Token:
        t = self.tok
        if t.kind != "word" or t.value in KEYWORDS:
            self.fail(what)
        return self.advance()

    def integer(self, what: str = "an integer") -> int:
        t = self.tok
        if t.kind != "word" or not re.fullmatch(r"[0-9]{1,10}", t.value) or int(t.value) > MAX_INT:
            self.fail(what)
        self.advance()
        return int(t.value)

    # -- grammar -------------------------------------------------------------
    def parse_file(self):
        t = self.tok
        if t.kind != "word" or t.value not in ("system", "observer"):
            self.fail("'system' or 'observer'")
        kind = self.advance().value
        if self.tok.kind == "string":
            name = self.advance().value
        else:
            name = self.word("a name").value
        self.expect("{")
        self.expect("alphabet")
        alphabet = self.parse_symbol_set()
        if not self.at("membrane"):
            self.fail("'membrane'")
        root = self.parse_membrane()
        self.expect("}")
        if self.tok.kind != "eof":
            self.fail("end of input")
        return kind, name, alphabet, root

    def parse_symbol_set(self) -> list[_Sym]:
        self.expect("{")
        syms = []
        while not self.at("}"):
            syms.append(self.parse_symbol())
            if not self.accept(","):
                break
        self.expect("}")
        return syms

    def parse_symbol(self) -> _Sym:
        t = self.tok
        if self.accept("omega"):
            return _Sym((OMEGA,), t.line, t.col)
        if self.accept("["):
            parts = []
            while not self.at("]"):
                parts.append(self.word("a symbol part").value)
            if not parts:
                self.fail("a symbol part")
            self.expect("]")
            return _Sym(tuple(parts), t.line, t.col)
        return _Sym((self.word("a symbol").value,), t.line, t.col)

    def starts_symbol(self) -> bool:
        t = self.tok
        if t.kind == "word":
            return t.value not in KEYWORDS or t.value == "omega"
        return t.kind == "punct" and t.value == "["

    def parse_count(self) -> int:
        if self.at(":") or self.at("^"):
            self.advance()
            n = self.integer("a multiplicity")
            if n < 1:
                self.fail("a positive multiplicity")
            return n
        return 1

    def parse_mset(self, allow_empty: bool) -> list[tuple[_Sym, int]]:
        if self.accept("lambda"):
            return []
        items = []
        while self.starts_symbol():
            sym = self.parse_symbol()
            items.append((sym, self.parse_count()))
        if not items and not allow_empty:
            self.fail("a multiset")
        return items

    def parse_membrane(self) -> _MembraneAst:
        self.depth += 1
        if self.depth > MAX_NESTING:
            self.fail(f"at most {MAX_NESTING} nested membranes")
        start = self.expect("membrane")
        label = self.integer("a membrane label")
        mem = _MembraneAst(label, start.line, start.col)
        self.expect("{")
        while not self.at("}"):
            if self.at("objects"):
                self.advance()
                self.expect("{")
                while not self.at("}"):
                    sym = self.parse_symbol()
                    mem.objects.append((sym, self.parse_count()))
                    self.accept(",")
                self.expect("}")
            elif self.at("rule"):
                mem.rules.append(self.parse_rule())
            elif self.at("forall"):
                mem.rules.append(self.parse_schema())
            elif self.at("membrane"):
                mem.children.append(self.parse_membrane())
            elif self.at("hole"):
                t = self.advance()
                mem.holes.append((self.integer("a hole label"), t.line, t.col))
            else:
                self.fail("'objects', 'rule', 'forall', 'membrane', 'hole' or '}'")
        self.expect("}")
        self.depth -= 1
        return mem

    def parse_rule(self) -> _RuleAst:
        start = self.expect("rule")
        if self.tok.kind == "string":
            rid = self.advance().value
            if not rid:
                self.fail("a nonempty rule id")
        else:
            rid = self.word("a rule id").value
        self.expect(":")
        lhs = self.parse_mset(allow_empty=False)
        self.expect("->")
        here, out, ins = [], [], []
        if not self.accept("lambda"):
            while True:
                if self.at("("):
                    self.advance()
                    ms = self.parse_mset(allow_empty=True)
                    self.expect(",")
                    if self.accept("here"):
                        here.extend(ms)
                    elif self.accept("out"):
                        out.extend(ms)
                    elif self.accept("in"):
                        ins.append((self.integer("a target label"), ms))
                    else:
                        self.fail("'here', 'out' or 'in'")
                    self.expect(")")
                elif self.starts_symbol():
                    sym = self.parse_symbol()
                    here.append((sym, self.parse_count()))
                else:
                    break
            if not (here or out or ins) and not self.at("|"):
                self.fail("a target or 'lambda'")
        promoters, inhibitors = [], []
        if self.accept("|"):
            seen = False
            while self.at("promoters") or self.at("inhibitors"):
                which = self.advance().value
                syms = self.parse_symbol_set()
                (promoters if which == "promoters" else inhibitors).extend(syms)
                seen = True
            if not seen:
                self.fail("'promoters' or 'inhibitors'")
        return _RuleAst(rid, lhs, here, out, ins, promoters, inhibitors, start.line, start.col)

    def parse_schema(self) -> _RuleAst:
        self.expect("forall")
        params: list[tuple[str, tuple[str, ...]]] = []
        while True:
            names = [self.word("a variable").value]
            while self.accept(","):
                names.append(self.word("a variable").value)
            self.expect("in")
            self.expect("{")
            values = []
            while not self.at("}"):
                values.append(self.word("a value").value)
                if not self.accept(","):
                    break
            self.expect("}")
            if not values:
                t = self.toks[self.i - 1]
                raise PsysSyntaxError(t.line, t.col, "a nonempty value set")
            for n in names:
                if any(n == p for p, _ in params):
                    t = self.toks[self.i - 1]
                    raise PsysSyntaxError(t.line, t.col, f"a fresh variable, {n!r} is bound twice")
                params.append((n, tuple(values)))
            if not self.accept(","):
                break
        guard = None
        if self.accept("if"):
            self.guard_vars = {p for p, _ in params}
            guard = self.parse_or()
        self.expect(":")
        rule = self.parse_rule()
        rule.params = tuple(params)
        rule.guard = guard
        return rule

    def parse_or(self):
        self.depth += 1
        if self.depth > MAX_NESTING:
            self.fail("a shallower guard")
        left = self.parse_and()
        while self.accept("or"):
            right = self.parse_and()
            left = (lambda a, b: lambda env: a(env) or b(env))(left, right)
        self.depth -= 1
        return left

    def parse_and(self):
        left = self.parse_not()
        while self.accept("and"):
            right = self.parse_not()
            left = (lambda a, b: lambda env: a(env) and b(env))(left, right)
        return left

    def parse_not(self):
        if self.accept("not"):
            self.depth += 1
            if self.depth > MAX_NESTING:
                self.fail("a shallower guard")
            inner = self.parse_not()
            self.depth -= 1
            return lambda env: not inner(env)
        if self.accept("("):
            inner = self.parse_or()
            self.expect(")")
            return inner
        left = self.parse_operand()
        if self.accept("="):
            op = "="
        elif self.accept("!="):
            op = "!="
        else:
            self.fail("'=' or '!='")
        right = self.parse_operand()
        if op == "=":
            return lambda env: left(env) == right(env)
        return lambda env: left(env) != right(env)

    def parse_operand(self):
        t = self.word("a variable or value")
        if t.value in self.guard_vars:
            name = t.value
            return lambda env: env[name]
        value = t.value
        return lambda env: value


# ---------------------------------------------------------------------------
# building terms


def _tmpl_mset(items: list[tuple[_Sym, int]]):
    return tuple((s.parts, n) for s, n in items)


def _ground_mset(items: list[tuple[_Sym, int]]) -> Multiset:
    acc: dict[str, int] = {}
    for s, n in items:
        name = "_".join(s.parts)
        acc[name] = acc.get(name, 0) + n
    return Multiset(acc)


def _ground_rules(ast: _RuleAst) -> tuple[EvolutionRule, ...]:
    if not ast.params:
        ins: dict[int, Multiset] = {}
        for label, ms in ast.ins:
            ins[label] = ins.get(label, EMPTY) + _ground_mset(ms)
        return (EvolutionRule(
            ast.id, _ground_mset(ast.lhs), _ground_mset(ast.here), _ground_mset(ast.out),
            tuple(ins.items()),
            Condition(frozenset("_".join(s.parts) for s in ast.promoters),
                      frozenset("_".join(s.parts) for s in ast.inhibitors)),
        ),)
    return expand_rule_schemas([_schema_of(ast)])


def _schema_of(ast: _RuleAst) -> RuleSchema:
    return RuleSchema(
        id=ast.id, parameters=ast.params, lhs=_tmpl_mset(ast.lhs), here=_tmpl_mset(ast.here),
        out=_tmpl_mset(ast.out), ins=tuple((l, _tmpl_mset(ms)) for l, ms in ast.ins),
        promoters=tuple(s.parts for s in ast.promoters), inhibitors=tuple(s.parts for s in ast.inhibitors),
        guard=ast.guard,
    )


def _build(mem: _MembraneAst, alphabet: frozenset[str], observer_skin: bool, schemas: list,
           labels: dict[int, tuple[int, int]]) -> MembraneNode:
    if mem.label in labels:
        raise DuplicateLabel(f"membrane label {mem.label} used twice", mem.line, mem.col)
    labels[mem.label] = (mem.line, mem.col)

    def check(sym: _Sym | str, line: int, col: int, omega_ok: bool = False) -> None:
        name = sym if isinstance(sym, str) else "_".join(sym.parts)
        if name == OMEGA:
            if omega_ok:
                return
            raise (ObserverShapeError if observer_skin else UndeclaredSymbol)(
                "ω may only be sent out of an observer skin", line, col)
        if name not in alphabet:
            raise UndeclaredSymbol(f"symbol {name!r} is not declared in the alphabet", line, col)

    for s, _ in mem.objects:
        check(s, s.line, s.col)
    rules: list[EvolutionRule] = []
    ids: set[str] = set()
    for ast in mem.rules:
        if ast.params:
            schemas.append(_schema_of(ast))
        ground = _ground_rules(ast)
        for rule in ground:
            for sym in rule.lhs.support() | rule.here.support() | rule.cond.promoters | rule.cond.inhibitors:
                check(sym, ast.line, ast.col)
            for _, ms in rule.ins:
                for sym in ms.support():
                    check(sym, ast.line, ast.col)
            for sym in rule.out.support():
                check(sym, ast.line, ast.col, omega_ok=observer_skin)
            if rule.id in ids:
                raise ValidationError(f"rule id {rule.id!r} used twice in membrane {mem.label}", ast.line, ast.col)
            ids.add(rule.id)
            rules.append(rule)
    children = tuple(_build(c, alphabet, False, schemas, labels) for c in mem.children)
    return MembraneNode(mem.label, MembraneContent(tuple(rules), _ground_mset(mem.objects)), children)


def _rule_location(mem: _MembraneAst, label: int, rule_id: str | None) -> tuple[int, int]:
    stack = [mem]
    while stack:
        m = stack.pop()
        if m.label == label:
            for r in m.rules:
                if rule_id is not None and (r.id == rule_id or rule_id.startswith(r.id + "[")):
                    return r.line, r.col
            return m.line, m.col
        stack.extend(m.children)
    return mem.line, mem.col


def parse_spec(text: str) -> SourceSpec:
    """Parse ``.psys`` text; raises a :class:`DslError` subclass on any problem."""
    parser = _Parser(text)
    kind, name, alpha_syms, root_ast = parser.parse_file()
    alphabet = set()
    for s in alpha_syms:
        sym = "_".join(s.parts)
        if sym == OMEGA:
            raise UndeclaredSymbol("ω is reserved and cannot be declared", s.line, s.col)
        alphabet.add(sym)
    alphabet = frozenset(alphabet)
    schemas: list[RuleSchema] = []
    labels: dict[int, tuple[int, int]] = {}

    if kind == "system":
        if root_ast.holes:
            _, line, col = root_ast.holes[0]
            raise ValidationError("only observers may declare a hole", line, col)
        for sub in _descendants(root_ast):
            if sub.holes:
                _, line, col = sub.holes[0]
                raise ValidationError("only observers may declare a hole", line, col)
        root = _build(root_ast, alphabet, False, schemas, labels)
        violations = validate_system(root, allow_omega_out=False)
        if violations:
            v = violations[0]
            line, col = _rule_location(root_ast, v.membrane, v.rule)
            raise ValidationError(str(v), line, col, violations)
        return SourceSpec(kind, name, alphabet, root, tuple(schemas))

    if root_ast.label != 1:
        raise ObserverShapeError("observer skin must be membrane 1", root_ast.line, root_ast.col)
    if root_ast.children:
        c = root_ast.children[0]
        raise ObserverShapeError("observer skin may contain only the hole", c.line, c.col)
    if len(root_ast.holes) != 1 or root_ast.holes[0][0] != 2:
        raise ObserverShapeError("observer skin must declare exactly 'hole 2'", root_ast.line, root_ast.col)
    skin = _build(root_ast, alphabet, True, schemas, labels)
    obs = ObserverTemplate(skin, 2)
    violations = validate_observer(obs)
    if violations:
        v = violations[0]
        line, col = _rule_location(root_ast, v.membrane, v.rule)
        cls = ObserverShapeError if v.kind.startswith("Observer") else ValidationError
        raise cls(str(v), line, col) if cls is ObserverShapeError else cls(str(v), line, col, violations)
    return SourceSpec(kind, name, alphabet, obs, tuple(schemas))


def _descendants(mem: _MembraneAst):
    for c in mem.children:
        yield c
        yield from _descendants(c)


def load_spec(path: str | Path) -> SourceSpec:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# serializer

_WORD_RE = re.compile(r"\w+")


def _sym(name: str) -> str:
    return "omega" if name == OMEGA else name


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _rule_id(rid: str) -> str:
    if _WORD_RE.fullmatch(rid) and rid not in KEYWORDS:
        return rid
    return _quote(rid)


def _mset_text(ms: Multiset) -> str:
    return " ".join(_sym(s) if n == 1 else f"{_sym(s)}:{n}" for s, n in ms.items)


def _rule_text(rule: EvolutionRule) -> str:
    targets = []
    if rule.here:
        targets.append(f"({_mset_text(rule.here)}, here)")
    if rule.out:
        targets.append(f"({_mset_text(rule.out)}, out)")
    for label, ms in rule.ins:
        targets.append(f"({_mset_text(ms)}, in {label})")
    text = f"rule {_rule_id(rule.id)}: {_mset_text(rule.lhs)} -> {' '.join(targets) if targets else 'lambda'}"
    cond = []
    if rule.cond.promoters:
        cond.append("promoters { " + ", ".join(sorted(map(_sym, rule.cond.promoters))) + " }")
    if rule.cond.inhibitors:
        cond.append("inhibitors { " + ", ".join(sorted(map(_sym, rule.cond.inhibitors))) + " }")
    if cond:
        text += " | " + " ".join(cond)
    return text


def _membrane_lines(node: MembraneNode, indent: int, hole: int | None = None) -> list[str]:
    pad = "  " * indent
    lines = [f"{pad}membrane {node.label} {{"]
    if node.objects:
        lines.append(f"{pad}  objects {{ " + ", ".join(
            _sym(s) if n == 1 else f"{_sym(s)}:{n}" for s, n in node.objects.items) + " }")
    for rule in node.rules:
        lines.append(f"{pad}  {_rule_text(rule)}")
    for child in sorted(node.children, key=lambda c: c.label):
        lines.extend(_membrane_lines(child, indent + 1))
    if hole is not None:
        lines.append(f"{pad}  hole {hole}")
    lines.append(f"{pad}}}")
    return lines


def serialize_spec(spec: SourceSpec) -> str:
    """Canonical text; ``parse_spec`` of the result equals ``spec``."""
    lines = [f"{spec.kind} {_quote(spec.name)} {{"]
    lines.append("  alphabet { " + ", ".join(sorted(spec.alphabet)) + " }")
    if isinstance(spec.root, ObserverTemplate):
        lines.extend(_membrane_lines(spec.root.skin, 1, hole=spec.root.hole))
    else:
        lines.extend(_membrane_lines(spec.root, 1))
    lines.append("}")
    return "\n".join(lines) + "\n"
