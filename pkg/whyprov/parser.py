"""Parsers and canonical renderers for program and fact files.

Program files hold one rule per statement, ``Head(args) :- B1(args), ..., Bn(args).``.
Inside rules bare identifiers are variables (``_`` is a fresh one per occurrence) and
constants are quoted strings or numerals. Fact files hold one fact per line; there bare
identifiers are constants. ``%`` starts a comment that runs to the end of the line.
"""
from __future__ import annotations

import bisect
import re
from typing import List, NamedTuple, Optional

from .errors import ArityMismatch, DatalogSyntaxError, IdbFactInInput, UnknownPredicate
from .models import Atom, Constant, Database, Fact, Program, Rule, Term, Variable

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<implies>:-)
  | (?P<punct>[(),.])
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>[0-9][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    col: int


def _unquote(text: str) -> str:
    body = text[1:-1]
    return re.sub(r"\\(.)", r"\1", body)


def tokenize(text: str) -> List[Token]:
    line_starts = [0] + [m.end() for m in re.finditer(r"\n", text)]

    def locate(pos: int):
        line = bisect.bisect_right(line_starts, pos)
        return line, pos - line_starts[line - 1] + 1

    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            line, col = locate(pos)
            raise DatalogSyntaxError(line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            line, col = locate(pos)
            if kind == "punct" or kind == "implies":
                kind = m.group()
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    line, col = locate(len(text))
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self._fresh = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, token: Optional[Token] = None) -> DatalogSyntaxError:
        token = token or self.current
        return DatalogSyntaxError(token.line, token.col, message)

    def expect(self, kind: str) -> Token:
        token = self.current
        if token.kind != kind:
            found = token.text or "end of input"
            raise self.error(f"expected {kind!r}, found {found!r}")
        self.pos += 1
        return token

    def accept(self, kind: str) -> bool:
        if self.current.kind == kind:
            self.pos += 1
            return True
        return False

    def term(self, in_rule: bool) -> Term:
        token = self.current
        if token.kind == "string":
            self.pos += 1
            return Constant(_unquote(token.text))
        if token.kind == "number":
            self.pos += 1
            return Constant(token.text)
        if token.kind == "ident":
            self.pos += 1
            if not in_rule:
                return Constant(token.text)
            if token.text == "_":
                self._fresh += 1
                return Variable(f"_{self._fresh}")
            return Variable(token.text)
        raise self.error(f"expected a term, found {token.text or 'end of input'!r}")

    def atom(self, in_rule: bool) -> Atom:
        name = self.expect("ident")
        self.expect("(")
        args: List[Term] = []
        if not self.accept(")"):
            args.append(self.term(in_rule))
            while self.accept(","):
                args.append(self.term(in_rule))
            self.expect(")")
        return Atom(name.text, tuple(args))

    def rule(self) -> Rule:
        head = self.atom(in_rule=True)
        if self.current.kind == ".":
            raise self.error("rules need a nonempty body")
        self.expect(":-")
        body = [self.atom(in_rule=True)]
        while self.accept(","):
            body.append(self.atom(in_rule=True))
        self.expect(".")
        return Rule(head, tuple(body))

    def program(self) -> Program:
        rules = []
        while self.current.kind != "eof":
            self._fresh = 0
            rules.append(self.rule())
        return Program(tuple(rules))


def parse_program(text: str) -> Program:
    return _Parser(text).program()


def parse_fact(text: str) -> Fact:
    parser = _Parser(text)
    atom = parser.atom(in_rule=False)
    parser.accept(".")
    if parser.current.kind != "eof":
        raise parser.error("trailing input after fact")
    return Fact(atom.predicate, tuple(t.symbol for t in atom.args))


def _check_schema(fact: Fact, schema: Program) -> None:
    expected = schema.arities.get(fact.predicate)
    if expected is None:
        raise UnknownPredicate(fact.predicate)
    if expected != fact.arity:
        raise ArityMismatch(fact.predicate, expected, fact.arity)


def parse_database(text: str, schema: Program, allow_idb: bool = False) -> Database:
    facts = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        try:
            fact = parse_fact(line)
        except DatalogSyntaxError as e:
            raise DatalogSyntaxError(lineno, e.col, e.message) from None
        _check_schema(fact, schema)
        if fact.predicate in schema.idb and not allow_idb:
            raise IdbFactInInput(fact)
        facts.add(fact)
    return Database(frozenset(facts))


def parse_goal(text: str, program: Program) -> Fact:
    fact = parse_fact(text.strip())
    _check_schema(fact, program)
    return fact


def render_fact(fact: Fact) -> str:
    return str(fact)


def render_program(p: Program) -> str:
    return "".join(f"{rule}\n" for rule in p.rules)


def render_database(db: Database) -> str:
    return "".join(f"{fact}\n" for fact in db)
