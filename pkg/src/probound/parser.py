"""Parser and printer for the `.prob` DSL.

The grammar is indentation-insensitive with explicit `end` keywords.
Annotations `@inputs`, `@pre`, `@post`, `@fail` precede the function; spec
expressions may mention local variables, so the body is parsed (and local
types inferred) before annotation expressions are resolved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from . import prog
from .terms import (
    Abs, Add, ArrayAlloc, ArrayLen, BoundedForall, Cmp, Div, Fst, Implies,
    Ite, Lit, Log, Max, Min, Mul, Neg, Not, PairLit, Select, Snd, Sort, Store,
    Sub, Term, TRUE, Var, conj, disj, sort_of,
)


class ParseError(Exception):
    def __init__(self, filename: str, line: int, col: int, message: str):
        super().__init__(f"{filename}:{line}:{col}: {message}")
        self.filename, self.line, self.col, self.message = filename, line, col, message


@dataclass(frozen=True)
class Token:
    kind: str  # NUM DEC IDENT OP KW EOF
    text: str
    line: int
    col: int


KEYWORDS = {
    "fun", "end", "if", "then", "else", "while", "do", "return",
    "not", "and", "or", "forall", "in", "true", "false",
}

_TOKEN_RE = re.compile(
    r"""(?P<ws>[ \t\r\n]+)
      | (?P<comment>\#[^\n]*)
      | (?P<dec>\d+\.\d+(?:[eE][-+]?\d+)?|\d+[eE][-+]?\d+)
      | (?P<num>\d+)
      | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op><-|->|<=|>=|!=|[~=<>+\-*/()\[\]{},:.@^])
    """,
    re.VERBOSE,
)


def tokenize(src: str, filename: str = "<string>") -> list[Token]:
    out = []
    line, col, pos = 1, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ParseError(filename, line, col, f"unexpected character {src[pos]!r}")
        text = m.group(0)
        kind = m.lastgroup
        if kind == "ident":
            out.append(Token("KW" if text in KEYWORDS else "IDENT", text, line, col))
        elif kind == "num":
            out.append(Token("NUM", text, line, col))
        elif kind == "dec":
            out.append(Token("DEC", text, line, col))
        elif kind == "op":
            out.append(Token("OP", text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    out.append(Token("EOF", "", line, col))
    return out


BUILTIN_FUNCS = {"len", "log", "abs", "min", "max", "fst", "snd", "array", "ite", "store"}
DIST_NAMES = {"bern", "unif", "lap", "exp"}


class _Parser:
    def __init__(self, tokens: list[Token], filename: str, env: dict[str, Sort]):
        self.toks = tokens
        self.i = 0
        self.filename = filename
        self.env = env  # name -> Sort, updated as locals are discovered
        self.bound: list[str] = []

    # --- token plumbing

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.i += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        if not self.at(kind, text):
            got = self.peek()
            want = text or kind
            self.fail(f"expected {want!r}, found {got.text!r}", got)
        return self.next()

    def fail(self, msg: str, tok: Token | None = None):
        t = tok or self.peek()
        raise ParseError(self.filename, t.line, t.col, msg)

    # --- expressions

    def expr(self) -> Term:
        return self.implies()

    def implies(self) -> Term:
        left = self.or_()
        if self.at("OP", "->"):
            self.next()
            return Implies(left, self.implies())
        return left

    def or_(self) -> Term:
        parts = [self.and_()]
        while self.at("KW", "or"):
            self.next()
            parts.append(self.and_())
        return disj(parts) if len(parts) > 1 else parts[0]

    def and_(self) -> Term:
        parts = [self.not_()]
        while self.at("KW", "and"):
            self.next()
            parts.append(self.not_())
        return conj(parts) if len(parts) > 1 else parts[0]

    def not_(self) -> Term:
        if self.at("KW", "not"):
            self.next()
            return Not(self.not_())
        return self.cmp()

    def cmp(self) -> Term:
        left = self.add()
        if self.peek().kind == "OP" and self.peek().text in ("=", "!=", "<", "<=", ">", ">="):
            op = self.next().text
            return Cmp(op, left, self.add())
        return left

    def add(self) -> Term:
        left = self.mul()
        while self.peek().kind == "OP" and self.peek().text in ("+", "-"):
            op = self.next().text
            right = self.mul()
            left = Add((left, right)) if op == "+" else Sub(left, right)
        return left

    def mul(self) -> Term:
        left = self.unary()
        while self.peek().kind == "OP" and self.peek().text in ("*", "/"):
            op = self.next().text
            right = self.unary()
            left = Mul((left, right)) if op == "*" else Div(left, right)
        return left

    def unary(self) -> Term:
        if self.at("OP", "-"):
            self.next()
            return Neg(self.unary())
        return self.postfix()

    def postfix(self) -> Term:
        t = self.atom()
        while self.at("OP", "["):
            tok = self.next()
            idx = self.expr()
            self.expect("OP", "]")
            if sort_of(t) != Sort.ARRAY:
                self.fail("indexing a non-array expression", tok)
            t = Select(t, idx)
        return t

    def atom(self) -> Term:
        t = self.peek()
        if t.kind == "NUM":
            self.next()
            return Lit(int(t.text))
        if t.kind == "DEC":
            self.next()
            return Lit(Fraction(t.text))
        if t.kind == "KW" and t.text in ("true", "false"):
            self.next()
            return Lit(t.text == "true")
        if t.kind == "KW" and t.text == "forall":
            return self.forall()
        if t.kind == "OP" and t.text == "(":
            self.next()
            inner = self.expr()
            if self.at("OP", ","):
                self.next()
                snd = self.expr()
                self.expect("OP", ")")
                return PairLit(inner, snd)
            self.expect("OP", ")")
            return inner
        if t.kind == "IDENT":
            if t.text in BUILTIN_FUNCS and self.peek(1).kind == "OP" and self.peek(1).text == "(":
                return self.builtin()
            self.next()
            return self.lookup(t)
        self.fail(f"expected an expression, found {t.text!r}", t)

    def lookup(self, tok: Token) -> Term:
        name = tok.text
        if name in self.bound:
            return Var(name, Sort.INT)
        if name not in self.env:
            self.fail(f"unknown variable {name!r}", tok)
        return Var(name, self.env[name])

    def builtin(self) -> Term:
        tok = self.next()
        self.expect("OP", "(")
        name = tok.text
        if name == "len":
            arr = self.expect("IDENT")
            self.expect("OP", ")")
            if self.env.get(arr.text) != Sort.ARRAY and arr.text not in self.bound:
                if arr.text not in self.env:
                    self.fail(f"unknown variable {arr.text!r}", arr)
                self.fail(f"len() of non-array {arr.text!r}", arr)
            return ArrayLen(arr.text)
        args = [self.expr()]
        while self.at("OP", ","):
            self.next()
            args.append(self.expr())
        self.expect("OP", ")")
        arity = {"log": 1, "abs": 1, "fst": 1, "snd": 1, "array": 1,
                 "min": 2, "max": 2, "ite": 3, "store": 3}[name]
        if len(args) != arity:
            self.fail(f"{name}() takes {arity} argument(s), got {len(args)}", tok)
        ctor = {"log": Log, "abs": Abs, "fst": Fst, "snd": Snd, "array": ArrayAlloc,
                "min": Min, "max": Max, "ite": Ite, "store": Store}[name]
        return ctor(*args)

    def forall(self) -> Term:
        self.expect("KW", "forall")
        v = self.expect("IDENT").text
        self.expect("KW", "in")
        self.expect("OP", "[")
        lo = self.expr()
        self.expect("OP", ",")
        hi = self.expr()
        self.expect("OP", ")")
        self.expect("OP", ".")
        self.bound.append(v)
        try:
            body = self.implies()
        finally:
            self.bound.pop()
        return BoundedForall(v, lo, hi, body)

    # --- statements

    def dist(self) -> prog.DistExpr:
        tok = self.expect("IDENT")
        kind = tok.text
        if kind not in DIST_NAMES:
            self.fail(f"unknown distribution {kind!r}", tok)
        self.expect("OP", "(")
        if kind == "unif":
            support = self.support_set()
            self.expect("OP", ")")
            return prog.DistExpr("unif", support=support)
        args = [self.expr()]
        while self.at("OP", ","):
            self.next()
            args.append(self.expr())
        self.expect("OP", ")")
        want = 1 if kind == "bern" else 2
        if len(args) != want:
            self.fail(f"{kind}() takes {want} argument(s)", tok)
        return prog.DistExpr(kind, args=tuple(args))

    def support_set(self) -> tuple:
        self.expect("OP", "{")
        vals = [int(self.expect("NUM").text)]
        while self.at("OP", ","):
            self.next()
            vals.append(int(self.expect("NUM").text))
        self.expect("OP", "}")
        if self.at("OP", "^"):
            self.next()
            two = self.expect("NUM")
            if two.text != "2":
                self.fail("only ^2 supported for product supports", two)
            return tuple((a, b) for a in vals for b in vals)
        return tuple(vals)

    def block(self, inputs: set[str], locals_out: list) -> prog.Block:
        blocks = []
        while True:
            t = self.peek()
            if t.kind == "KW" and t.text in ("end", "else") or t.kind == "EOF":
                break
            if t.kind == "KW" and t.text == "return":
                break
            blocks.append(self.stmt(inputs, locals_out))
        return blocks[0] if len(blocks) == 1 else prog.Seq(tuple(blocks))

    def stmt(self, inputs: set[str], locals_out: list) -> prog.Block:
        t = self.peek()
        if t.kind == "KW" and t.text == "if":
            self.next()
            cond = self.expr()
            self.require_bool(cond, t)
            self.expect("KW", "then")
            then = self.block(inputs, locals_out)
            els = prog.Seq(())
            if self.at("KW", "else"):
                self.next()
                els = self.block(inputs, locals_out)
            self.expect("KW", "end")
            return prog.If(cond, then, els)
        if t.kind == "KW" and t.text == "while":
            self.next()
            cond = self.expr()
            self.require_bool(cond, t)
            self.expect("KW", "do")
            body = self.block(inputs, locals_out)
            self.expect("KW", "end")
            return prog.While(cond, body)
        if t.kind != "IDENT":
            self.fail(f"expected a statement, found {t.text!r}", t)
        name_tok = self.next()
        index = None
        if self.at("OP", "["):
            self.next()
            index = self.expr()
            self.expect("OP", "]")
        op = self.peek()
        if not (op.kind == "OP" and op.text in ("<-", "~")):
            self.fail(f"expected '<-' or '~' after {name_tok.text!r}", op)
        self.next()
        name = name_tok.text
        if name in inputs:
            self.fail(f"input variable {name!r} cannot be assigned", name_tok)
        if index is not None:
            if self.env.get(name) != Sort.ARRAY:
                self.fail(f"{name!r} is not an array", name_tok)
        target = prog.Target(name, index)

        if op.text == "~":
            d = self.dist()
            self.check_dist(d, op)
            vsort = d.value_sort
            self.declare(name, index, vsort, locals_out, name_tok)
            return prog.Basic(prog.Sample(target, d))
        rhs = self.expr()
        self.declare(name, index, sort_of(rhs), locals_out, name_tok)
        if index is not None and sort_of(rhs) != Sort.INT:
            self.fail("array elements are integers", name_tok)
        return prog.Basic(prog.Assign(target, rhs))

    def declare(self, name: str, index, vsort: Sort, locals_out: list, tok: Token):
        if index is not None:
            if vsort != Sort.INT:
                self.fail("array elements are integers", tok)
            return
        surface = {Sort.INT: "int", Sort.REAL: "real", Sort.BOOL: "bool",
                   Sort.ARRAY: "intarray", Sort.PAIR: "pair"}[vsort]
        if name in self.env:
            if self.env[name] != vsort:
                self.fail(
                    f"{name!r} was {self.env[name].value}, reassigned as {surface}", tok
                )
            return
        self.env[name] = vsort
        locals_out.append((name, surface))

    def require_bool(self, cond: Term, tok: Token):
        if sort_of(cond) != Sort.BOOL:
            self.fail("condition must be boolean", tok)

    def check_dist(self, d: prog.DistExpr, tok: Token):
        if d.kind == "bern":
            if sort_of(d.args[0]) not in (Sort.INT, Sort.REAL):
                self.fail("bern() parameter must be numeric", tok)
        elif d.kind in ("lap", "exp"):
            if sort_of(d.args[0]) != Sort.INT:
                self.fail(f"{d.kind}() location must be an integer expression", tok)
            if sort_of(d.args[1]) not in (Sort.INT, Sort.REAL):
                self.fail(f"{d.kind}() scale must be numeric", tok)


def parse_program(source: str, filename: str = "<string>") -> prog.Program:
    """Parse a .prob file: annotations, then `fun name(args) ... end`."""
    toks = tokenize(source, filename)
    env: dict[str, Sort] = {}
    p = _Parser(toks, filename, env)

    inputs: list[tuple[str, str]] = []
    ann_spans: dict[str, int] = {}
    while p.at("OP", "@"):
        p.next()
        key = p.expect("IDENT").text
        if key == "inputs":
            while True:
                name = p.expect("IDENT").text
                p.expect("OP", ":")
                ty_tok = p.expect("IDENT")
                if ty_tok.text not in prog.SURFACE_SORTS:
                    p.fail(f"unknown type {ty_tok.text!r}", ty_tok)
                inputs.append((name, ty_tok.text))
                env[name] = prog.SURFACE_SORTS[ty_tok.text]
                if p.at("OP", ","):
                    p.next()
                else:
                    break
        elif key in ("pre", "post", "fail"):
            p.expect("OP", ":")
            ann_spans[key] = p.i
            # skip ahead to the next annotation or the function
            depth = 0
            while not (p.at("EOF") or (depth == 0 and (p.at("OP", "@") or p.at("KW", "fun")))):
                if p.at("OP", "(") or p.at("OP", "["):
                    depth += 1
                elif p.at("OP", ")") or p.at("OP", "]"):
                    depth -= 1
                p.next()
        else:
            p.fail(f"unknown annotation @{key}")

    fun_tok = p.expect("KW", "fun")
    name = p.expect("IDENT").text
    p.expect("OP", "(")
    argnames = []
    if not p.at("OP", ")"):
        argnames.append(p.expect("IDENT").text)
        while p.at("OP", ","):
            p.next()
            argnames.append(p.expect("IDENT").text)
    p.expect("OP", ")")
    if argnames != [n for n, _ in inputs]:
        p.fail(
            f"function arguments {argnames} do not match @inputs "
            f"{[n for n, _ in inputs]}", fun_tok,
        )

    locals_out: list[tuple[str, str]] = []
    body = p.block(set(n for n, _ in inputs), locals_out)
    returns = None
    if p.at("KW", "return"):
        p.next()
        returns = p.expect("IDENT").text
        if returns not in env:
            p.fail(f"unknown variable {returns!r} in return")
    p.expect("KW", "end")
    p.expect("EOF")

    # annotation expressions see the full environment
    def parse_ann(key: str, default: Term) -> Term:
        if key not in ann_spans:
            return default
        q = _Parser(toks, filename, env)
        q.i = ann_spans[key]
        e = q.expr()
        return e

    pre = parse_ann("pre", TRUE)
    post = parse_ann("post", TRUE)
    beta = parse_ann("fail", Lit(0))
    for key, e in (("pre", pre), ("post", post)):
        for v in _term_base_vars(e):
            if v not in env:
                raise ParseError(filename, 1, 1, f"@{key} mentions unknown variable {v!r}")
    input_names = {n for n, _ in inputs}
    for v in _term_base_vars(beta):
        if v not in input_names:
            raise ParseError(
                filename, 1, 1,
                f"@fail must be over input variables; {v!r} is not an input",
            )

    program = prog.Program(
        name=name, inputs=tuple(inputs), locals=tuple(locals_out),
        body=body, spec=prog.AccuracySpec(pre, post, beta), returns=returns,
    )
    return program


def _term_base_vars(t: Term) -> frozenset[str]:
    from .terms import base_vars

    return base_vars(t)


def parse_formula(text: str, env: dict[str, Sort], filename: str = "<formula>") -> Term:
    """Parse a standalone expression against a fixed variable environment."""
    toks = tokenize(text, filename)
    p = _Parser(toks, filename, dict(env))
    e = p.expr()
    p.expect("EOF")
    return e


# ---------------------------------------------------------------------------
# printing


def program_text(p: prog.Program) -> str:
    from .terms import to_text

    lines = []
    if p.inputs:
        lines.append("@inputs " + ", ".join(f"{n}: {ty}" for n, ty in p.inputs))
    lines.append(f"@pre: {to_text(p.spec.pre)}")
    lines.append(f"@post: {to_text(p.spec.post)}")
    lines.append(f"@fail: {to_text(p.spec.beta)}")
    lines.append(f"fun {p.name}({', '.join(p.input_names)})")
    _block_lines(p.body, lines, 1)
    if p.returns:
        lines.append(f"  return {p.returns}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def _block_lines(b: prog.Block, lines: list, depth: int):
    from .terms import to_text

    ind = "  " * depth
    match b:
        case prog.Basic(st):
            lines.append(ind + str(st))
        case prog.Seq(blocks):
            for x in blocks:
                _block_lines(x, lines, depth)
        case prog.If(cond, then, els):
            lines.append(f"{ind}if {to_text(cond)} then")
            _block_lines(then, lines, depth + 1)
            if not (isinstance(els, prog.Seq) and not els.blocks):
                lines.append(f"{ind}else")
                _block_lines(els, lines, depth + 1)
            lines.append(f"{ind}end")
        case prog.While(cond, body):
            lines.append(f"{ind}while {to_text(cond)} do")
            _block_lines(body, lines, depth + 1)
            lines.append(f"{ind}end")
