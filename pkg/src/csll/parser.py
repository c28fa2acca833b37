"""Concrete syntax for programs and types.

Grammar sketch (`--` starts a line comment):

    program  ::= (def | main)*
    def      ::= 'def' NAME '(' params ')' '=' process
    main     ::= 'main' '(' params ')' '=' process
    params   ::= [NAME ':' type (',' NAME ':' type)*]
    process  ::= 'close' NAME | 'wait' NAME ';' process | 'fail' NAME
               | 'send' NAME '(' NAME ')' '{' process '}' ';' process
               | 'recv' NAME '(' NAME ')' ';' process
               | NAME '.' ('in1'|'in2') ';' process
               | 'case' NAME '{' 'in1' ':' process ';' 'in2' ':' process '}'
               | 'server' NAME '(' NAME ')' '{' process '}' 'idle' '{' process '}'
               | 'client' NAME '(' NAME ')' '{' process '}' ';' process
               | 'done' NAME
               | 'new' NAME ':' type '{' process '|' process '}'
               | NAME '(' [NAME (',' NAME)*] ')'
    type     ::= additive; additive ::= mult (('+'|'&') additive)?
    mult     ::= prefix (('*'|'par') mult)?; prefix ::= ('srv'|'cli') prefix | atom
    atom     ::= '1' | '0' | 'bot' | 'top' | '(' type ')'

Binary type operators are right-associative; different operators at the same
precedence level must be parenthesized.  Binders are resolved to channels
with fresh unique ids during parsing; unbound channel references are
rejected here, linearity is the typechecker's job.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import types as ty
from .process import (
    Call, Case, ChannelName, Close, Cons, Cut, Definition, Fail, Fork, Join,
    Nil, Process, Program, Select, Server, SourceSpan, Wait, fresh,
)

KEYWORDS = {
    "def", "main", "close", "wait", "fail", "send", "recv", "case", "server",
    "idle", "client", "done", "new", "in1", "in2", "srv", "cli", "par",
    "bot", "top",
}

_SYMBOLS = {
    "(": "LPAREN", ")": "RPAREN", "{": "LBRACE", "}": "RBRACE",
    ":": "COLON", ";": "SEMI", ",": "COMMA", "|": "PIPE", ".": "DOT",
    "=": "EQUALS", "+": "PLUS", "&": "AMP", "*": "STAR",
}


class CsllError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


class ParseError(CsllError):
    pass


class ScopeError(CsllError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan


def tokenize(text: str, filename: str = "<input>") -> list[Token]:
    toks: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        span = SourceSpan(filename, line, col)
        if ch in _SYMBOLS:
            toks.append(Token(_SYMBOLS[ch], ch, span))
            i += 1
            col += 1
            continue
        if ch == "1" or ch == "0":
            # type constants; identifiers may not start with a digit
            toks.append(Token("ONE" if ch == "1" else "ZERO", ch, span))
            i += 1
            col += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            span = SourceSpan(filename, line, col, len(word))
            kind = "KEYWORD" if word in KEYWORDS else "IDENT"
            toks.append(Token(kind, word, span))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", span)
    toks.append(Token("EOF", "", SourceSpan(filename, line, col)))
    return toks


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        # call sites to validate once every signature is known
        self.calls: list[tuple[str, int, SourceSpan]] = []

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind.lower()
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of input'!r}", tok.span)
        return self.next()

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "KEYWORD" and tok.text == word

    def expect_keyword(self, word: str) -> Token:
        tok = self.peek()
        if not self.at_keyword(word):
            raise ParseError(f"expected {word!r}, found {tok.text or 'end of input'!r}", tok.span)
        return self.next()

    def ident(self, what: str = "name") -> Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise ParseError(f"expected {what}, found {tok.text or 'end of input'!r}", tok.span)
        return self.next()

    # types ------------------------------------------------------------

    def type_expr(self) -> ty.SessionType:
        return self._additive()

    def _additive(self) -> ty.SessionType:
        first = self._multiplicative()
        tok = self.peek()
        if tok.kind not in ("PLUS", "AMP"):
            return first
        op = tok.kind
        parts = [first]
        while self.peek().kind == op:
            self.next()
            parts.append(self._multiplicative())
        bad = self.peek()
        if bad.kind in ("PLUS", "AMP"):
            raise ParseError("mixing '+' and '&' needs parentheses", bad.span)
        ctor = ty.Plus if op == "PLUS" else ty.With
        out = parts[-1]
        for part in reversed(parts[:-1]):
            out = ctor(part, out)
        return out

    def _multiplicative(self) -> ty.SessionType:
        first = self._prefix()
        tok = self.peek()
        is_par = tok.kind == "KEYWORD" and tok.text == "par"
        if tok.kind != "STAR" and not is_par:
            return first
        op = "STAR" if tok.kind == "STAR" else "par"
        parts = [first]
        while (self.peek().kind == "STAR" and op == "STAR") or (
            op == "par" and self.at_keyword("par")
        ):
            self.next()
            parts.append(self._prefix())
        bad = self.peek()
        if bad.kind == "STAR" or (bad.kind == "KEYWORD" and bad.text == "par"):
            raise ParseError("mixing '*' and 'par' needs parentheses", bad.span)
        ctor = ty.Tensor if op == "STAR" else ty.Par
        out = parts[-1]
        for part in reversed(parts[:-1]):
            out = ctor(part, out)
        return out

    def _prefix(self) -> ty.SessionType:
        if self.at_keyword("srv"):
            self.next()
            return ty.Server(self._prefix())
        if self.at_keyword("cli"):
            self.next()
            return ty.Client(self._prefix())
        return self._atom()

    def _atom(self) -> ty.SessionType:
        tok = self.peek()
        if tok.kind == "ONE":
            self.next()
            return ty.ONE
        if tok.kind == "ZERO":
            self.next()
            return ty.ZERO
        if self.at_keyword("bot"):
            self.next()
            return ty.BOT
        if self.at_keyword("top"):
            self.next()
            return ty.TOP
        if tok.kind == "LPAREN":
            self.next()
            inner = self.type_expr()
            self.expect("RPAREN")
            return inner
        raise ParseError(f"expected a type, found {tok.text or 'end of input'!r}", tok.span)

    # processes ----------------------------------------------------------

    def chan_ref(self, env: dict[str, ChannelName]) -> ChannelName:
        tok = self.ident("channel name")
        if tok.text not in env:
            raise ScopeError(f"unbound channel {tok.text!r}", tok.span)
        return env[tok.text]

    def process(self, env: dict[str, ChannelName]) -> Process:
        tok = self.peek()
        span = tok.span
        if tok.kind == "KEYWORD":
            word = tok.text
            if word == "close":
                self.next()
                return Close(self.chan_ref(env), span=span)
            if word == "fail":
                self.next()
                return Fail(self.chan_ref(env), span=span)
            if word == "done":
                self.next()
                return Nil(self.chan_ref(env), span=span)
            if word == "wait":
                self.next()
                x = self.chan_ref(env)
                self.expect("SEMI")
                return Wait(x, self.process(env), span=span)
            if word == "send":
                self.next()
                x = self.chan_ref(env)
                self.expect("LPAREN")
                ytok = self.ident("channel name")
                self.expect("RPAREN")
                y = fresh(ytok.text)
                self.expect("LBRACE")
                payload = self.process({**env, ytok.text: y})
                self.expect("RBRACE")
                self.expect("SEMI")
                return Fork(x, y, payload, self.process(env), span=span)
            if word == "recv":
                self.next()
                x = self.chan_ref(env)
                self.expect("LPAREN")
                ytok = self.ident("channel name")
                self.expect("RPAREN")
                self.expect("SEMI")
                y = fresh(ytok.text)
                return Join(x, y, self.process({**env, ytok.text: y}), span=span)
            if word == "case":
                self.next()
                x = self.chan_ref(env)
                self.expect("LBRACE")
                self.expect_keyword("in1")
                self.expect("COLON")
                left = self.process(env)
                self.expect("SEMI")
                self.expect_keyword("in2")
                self.expect("COLON")
                right = self.process(env)
                self.expect("RBRACE")
                return Case(x, left, right, span=span)
            if word == "server":
                self.next()
                x = self.chan_ref(env)
                self.expect("LPAREN")
                ytok = self.ident("channel name")
                self.expect("RPAREN")
                y = fresh(ytok.text)
                self.expect("LBRACE")
                accept = self.process({**env, ytok.text: y})
                self.expect("RBRACE")
                self.expect_keyword("idle")
                self.expect("LBRACE")
                idle = self.process(env)
                self.expect("RBRACE")
                return Server(x, y, accept, idle, span=span)
            if word == "client":
                self.next()
                x = self.chan_ref(env)
                self.expect("LPAREN")
                ytok = self.ident("channel name")
                self.expect("RPAREN")
                y = fresh(ytok.text)
                self.expect("LBRACE")
                client = self.process({**env, ytok.text: y})
                self.expect("RBRACE")
                self.expect("SEMI")
                return Cons(x, y, client, self.process(env), span=span)
            if word == "new":
                self.next()
                xtok = self.ident("channel name")
                self.expect("COLON")
                anno = self.type_expr()
                x = fresh(xtok.text)
                env2 = {**env, xtok.text: x}
                self.expect("LBRACE")
                left = self.process(env2)
                self.expect("PIPE")
                right = self.process(env2)
                self.expect("RBRACE")
                return Cut(x, anno, left, right, span=span)
            raise ParseError(f"unexpected keyword {word!r}", span)
        if tok.kind == "IDENT":
            if self.peek(1).kind == "DOT":
                x = self.chan_ref(env)
                self.expect("DOT")
                tag_tok = self.peek()
                if not (self.at_keyword("in1") or self.at_keyword("in2")):
                    raise ParseError("expected 'in1' or 'in2' after '.'", tag_tok.span)
                self.next()
                tag = 1 if tag_tok.text == "in1" else 2
                self.expect("SEMI")
                return Select(x, tag, self.process(env), span=span)
            if self.peek(1).kind == "LPAREN":
                name = self.next().text
                self.expect("LPAREN")
                args: list[ChannelName] = []
                if self.peek().kind != "RPAREN":
                    args.append(self.chan_ref(env))
                    while self.peek().kind == "COMMA":
                        self.next()
                        args.append(self.chan_ref(env))
                self.expect("RPAREN")
                self.calls.append((name, len(args), span))
                return Call(name, tuple(args), span=span)
            raise ParseError(f"unexpected name {tok.text!r} (missing call arguments or '.'?)", span)
        raise ParseError(f"expected a process, found {tok.text or 'end of input'!r}", span)

    # programs -----------------------------------------------------------

    def params(self) -> tuple[tuple[ChannelName, ty.SessionType], ...]:
        self.expect("LPAREN")
        out: list[tuple[ChannelName, ty.SessionType]] = []
        seen: set[str] = set()
        if self.peek().kind != "RPAREN":
            while True:
                tok = self.ident("parameter name")
                if tok.text in seen:
                    raise ScopeError(f"duplicate parameter {tok.text!r}", tok.span)
                seen.add(tok.text)
                self.expect("COLON")
                out.append((fresh(tok.text), self.type_expr()))
                if self.peek().kind != "COMMA":
                    break
                self.next()
        self.expect("RPAREN")
        return tuple(out)

    def program(self) -> Program:
        defs: dict[str, Definition] = {}
        main: Definition | None = None
        while self.peek().kind != "EOF":
            if self.at_keyword("def"):
                self.next()
                name_tok = self.ident("definition name")
                if name_tok.text in defs:
                    raise ScopeError(f"duplicate definition {name_tok.text!r}", name_tok.span)
                params = self.params()
                self.expect("EQUALS")
                env = {c.name: c for c, _ in params}
                body = self.process(env)
                defs[name_tok.text] = Definition(name_tok.text, params, body)
            elif self.at_keyword("main"):
                tok = self.next()
                if main is not None:
                    raise ScopeError("duplicate main", tok.span)
                params = self.params()
                self.expect("EQUALS")
                env = {c.name: c for c, _ in params}
                main = Definition("main", params, self.process(env))
            else:
                tok = self.peek()
                raise ParseError(f"expected 'def' or 'main', found {tok.text or 'end of input'!r}", tok.span)
        for name, nargs, span in self.calls:
            if name not in defs:
                raise ScopeError(f"call to undefined process {name!r}", span)
            arity = len(defs[name].params)
            if nargs != arity:
                raise ScopeError(f"{name} takes {arity} argument(s), got {nargs}", span)
        return Program(defs, main)


def parse_program(text: str, filename: str = "<input>") -> Program:
    return _Parser(tokenize(text, filename)).program()


def parse_type(text: str, filename: str = "<type>") -> ty.SessionType:
    p = _Parser(tokenize(text, filename))
    t = p.type_expr()
    tok = p.peek()
    if tok.kind != "EOF":
        raise ParseError(f"trailing input after type: {tok.text!r}", tok.span)
    return t
