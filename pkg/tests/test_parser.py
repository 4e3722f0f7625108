import pathlib
import re

import pytest

from probound import prog
from probound.cfa import compile_cfa
from probound.parser import ParseError, parse_program, program_text, tokenize
from probound.terms import Mul, Var, base_vars

from conftest import CORPUS, corpus_source

ALL_PROGRAMS = sorted(p.stem for p in CORPUS.glob("*.prob"))


def test_ex1_shape():
    p = parse_program(corpus_source("ex1"), "ex1.prob")
    assert p.name == "ex1"
    assert p.input_names == ("p",)
    stmts = list(prog.block_stmts(p.body))
    assert sum(isinstance(s, prog.Sample) for s in stmts) == 3
    ifs = [b for b in _blocks(p.body) if isinstance(b, prog.If)]
    assert len(ifs) == 1
    assert p.spec.beta == Var("p", p.var("p").sort)


def _blocks(b):
    yield b
    match b:
        case prog.Seq(blocks):
            for x in blocks:
                yield from _blocks(x)
        case prog.If(_, t, e):
            yield from _blocks(t)
            yield from _blocks(e)
        case prog.While(_, body):
            yield from _blocks(body)


def test_empty_program_compiles_to_point_automaton():
    p = parse_program("@fail: 0\nfun skip()\nend\n")
    auto = compile_cfa(p)
    assert auto.entry == auto.exit


def test_ex2_beta_is_product():
    p = parse_program(corpus_source("ex2"), "ex2.prob")
    assert isinstance(p.spec.beta, Mul)
    assert base_vars(p.spec.beta) == {"p", "n"}


def test_syntax_error_position():
    with pytest.raises(ParseError, match=r"bad.prob:2:4"):
        parse_program("@fail: 0\nfun(\n", "bad.prob")


def test_unknown_variable():
    with pytest.raises(ParseError, match="unknown variable 'z'"):
        parse_program("@fail: 0\nfun f()\n  x <- z + 1\nend\n")


def test_type_error_on_reassignment():
    src = "@fail: 0\nfun f()\n  x <- 1\n  x <- true\nend\n"
    with pytest.raises(ParseError, match="was int"):
        parse_program(src)


def test_beta_must_be_over_inputs():
    src = "@inputs p: prob\n@fail: p * x\nfun f(p)\n  x <- 1\nend\n"
    with pytest.raises(ParseError, match="not an input"):
        parse_program(src)


def test_inputs_are_never_assigned():
    src = "@inputs p: prob\n@fail: p\nfun f(p)\n  p <- 0.5\nend\n"
    with pytest.raises(ParseError, match="cannot be assigned"):
        parse_program(src)


def test_condition_must_be_boolean():
    src = "@fail: 0\nfun f()\n  x <- 1\n  if x + 1 then\n    y <- 2\n  end\nend\n"
    with pytest.raises(ParseError, match="must be boolean"):
        parse_program(src)


@pytest.mark.parametrize("name", ALL_PROGRAMS)
def test_pretty_print_round_trips_up_to_whitespace(name):
    src = corpus_source(name)
    p = parse_program(src, f"{name}.prob")
    printed = program_text(p)
    orig_tokens = [(t.kind, t.text) for t in tokenize(src)]
    new_tokens = [(t.kind, t.text) for t in tokenize(printed)]
    assert new_tokens == orig_tokens
    # and the reparse is structurally identical
    assert parse_program(printed, f"{name}.prob") == p
