"""Plain-text model definitions.

One declaration per line; ``#`` starts a comment::

    maxdeg 4
    gen dx 1
    gen e5 1 d=e1*e2
    bundle A d=0                   # fiber generator, d A = F
    flux h3=0 Fhat=2*dx*dy         # declares the dual fiber (default name Ahat)
    module E rank=2 B=0 roots=x,-x
    module E2 rank=2 B=b conn=[[c,0],[0,-c]]
    path E2 A=[[u,0],[0,-u]]       # gauge direction for the odd case

Expressions use ``+``, ``-``, ``*`` (wedge), ``^`` (integer power) and
parentheses.  Literals are integers, ``p/q``, decimals and imaginary
literals such as ``2i`` or ``1/2i``; write complex numbers as ``(1+2i)``.
The name ``i`` is reserved for the imaginary unit.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .coeffs import ExactScalar
from .forms import Form, InvalidFluxError, ModelAlgebra, ModelDefinitionError
from .gerbe import FormMatrix, GaugePathData, GerbeModuleSurrogate, SurrogateError
from .tduality import InvalidInputError, TDualPair


class ModelFileError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:/\d+)?i?)|(?P<name>[A-Za-z_][A-Za-z0-9_']*)"
                    r"|(?P<op>[-+*^()\[\],]))")


def _tokenize(text: str, line: int, col0: int) -> list[tuple[str, str, int]]:
    out, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise ModelFileError(f"unexpected character {text[pos + stripped]!r}", line,
                                 col0 + pos + stripped + 1)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), col0 + start + 1))
        pos = m.end()
    return out


def _number(tok: str):
    imag = tok.endswith("i")
    body = tok[:-1] if imag else tok
    value = Fraction(body)
    if imag:
        return ExactScalar({(0, 1): value})
    return value


class _ExprParser:
    def __init__(self, model: ModelAlgebra, tokens, line: int):
        self.model, self.tokens, self.line, self.pos = model, tokens, line, 0

    def error(self, msg: str):
        col = self.tokens[self.pos][2] if self.pos < len(self.tokens) else (
            self.tokens[-1][2] + len(self.tokens[-1][1]) if self.tokens else 1)
        raise ModelFileError(msg, self.line, col)

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, value=None):
        tok = self.peek()
        if tok is None or (value is not None and tok[1] != value):
            self.error(f"expected {value!r}" if value else "unexpected end of expression")
        self.pos += 1
        return tok

    def expr(self) -> Form:
        out = self.term()
        while self.peek() and self.peek()[1] in "+-":
            op = self.take()[1]
            t = self.term()
            out = out + t if op == "+" else out - t
        return out

    def term(self) -> Form:
        out = self.unary()
        while self.peek() and self.peek()[1] == "*":
            self.take()
            out = out * self.unary()
        return out

    def unary(self) -> Form:
        if self.peek() and self.peek()[1] == "-":
            self.take()
            return -self.unary()
        base = self.atom()
        if self.peek() and self.peek()[1] == "^":
            self.take()
            kind, tok, _ = self.take()
            if kind != "num" or not tok.isdigit():
                self.pos -= 1
                self.error("exponent must be a non-negative integer")
            out = self.model.one()
            for _ in range(int(tok)):
                out = out * base
            return out
        return base

    def atom(self) -> Form:
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of expression")
        kind, text, _ = tok
        if kind == "num":
            self.take()
            return self.model.scalar(_number(text))
        if kind == "name":
            self.take()
            if text == "i":
                return self.model.scalar(ExactScalar.i())
            if text not in self.model:
                self.pos -= 1
                self.error(f"unknown generator {text!r}")
            return self.model[text]
        if text == "(":
            self.take()
            out = self.expr()
            self.take(")")
            return out
        self.error(f"unexpected {text!r}")

    def done(self):
        if self.pos != len(self.tokens):
            self.error(f"unexpected {self.tokens[self.pos][1]!r}")


def parse_expr(model: ModelAlgebra, text: str, line: int = 0, column: int = 1) -> Form:
    """Parse one form expression over ``model``."""
    toks = _tokenize(text, line, column - 1)
    if not toks:
        raise ModelFileError("empty expression", line, column)
    p = _ExprParser(model, toks, line)
    out = p.expr()
    p.done()
    return out


def _split_list(text: str, line: int, column: int) -> list[tuple[str, int]]:
    """Split on commas at bracket/paren depth zero, keeping column offsets."""
    parts, depth, start = [], 0, 0
    for k, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append((text[start:k], column + start))
            start = k + 1
    parts.append((text[start:], column + start))
    return parts


def parse_matrix(model: ModelAlgebra, text: str, line: int, column: int) -> FormMatrix:
    t = text.strip()
    if not (t.startswith("[[") and t.endswith("]]")):
        raise ModelFileError("matrix must look like [[a,b],[c,d]]", line, column)
    rows = []
    for row_text, col in _split_list(t[1:-1], line, column + 1):
        r = row_text.strip()
        lead = len(row_text) - len(row_text.lstrip())
        if not (r.startswith("[") and r.endswith("]")):
            raise ModelFileError("matrix row must be bracketed", line, col + lead)
        rows.append([parse_expr(model, e, line, c)
                     for e, c in _split_list(r[1:-1], line, col + lead + 1)])
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ModelFileError("matrix must be square", line, column)
    return FormMatrix(rows)


@dataclass
class ModelFile:
    algebra: ModelAlgebra
    fibers: list[str] = field(default_factory=list)
    h3: Form | None = None
    modules: dict[str, GerbeModuleSurrogate] = field(default_factory=dict)
    paths: dict[str, GaugePathData] = field(default_factory=dict)

    def pair(self) -> TDualPair:
        if len(self.fibers) != 2:
            raise ModelFileError("model needs a bundle and a flux declaration")
        return TDualPair.build(self.algebra, self.fibers[0], self.fibers[1], self.h3)

    def module_pair(self, names: tuple[str, str] | None = None):
        if names is None:
            if len(self.modules) < 2:
                raise ModelFileError("model needs two module declarations")
            names = tuple(list(self.modules)[:2])
        try:
            return self.modules[names[0]], self.modules[names[1]]
        except KeyError as exc:
            raise ModelFileError(f"unknown module {exc.args[0]!r}") from None

    def path(self, name: str | None = None) -> GaugePathData:
        if not self.paths:
            raise ModelFileError("model has no path declaration")
        if name is None:
            return next(iter(self.paths.values()))
        if name not in self.paths:
            raise ModelFileError(f"unknown path {name!r}")
        return self.paths[name]


_KEYVAL = re.compile(r"(\w+)=")


def _keyvals(rest: str, line: int, col0: int) -> dict[str, tuple[str, int]]:
    """``key=value`` pairs; values run until the next ``key=`` outside brackets."""
    out: dict[str, tuple[str, int]] = {}
    starts = []
    depth = 0
    k = 0
    while k < len(rest):
        ch = rest[k]
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif depth == 0 and (k == 0 or rest[k - 1].isspace()):
            m = _KEYVAL.match(rest, k)
            if m:
                starts.append((m.group(1), k, m.end()))
                k = m.end()
                continue
        k += 1
    if rest.strip() and (not starts or rest[:starts[0][1]].strip()):
        lead = len(rest) - len(rest.lstrip())
        raise ModelFileError("expected key=value", line, col0 + lead + 1)
    for idx, (key, s, vstart) in enumerate(starts):
        end = starts[idx + 1][1] if idx + 1 < len(starts) else len(rest)
        if key in out:
            raise ModelFileError(f"duplicate key {key!r}", line, col0 + s + 1)
        out[key] = (rest[vstart:end].strip(), col0 + vstart + 1)
    return out


def _require(kv: dict, key: str, line: int, column: int) -> tuple[str, int]:
    if key not in kv or not kv[key][0]:
        raise ModelFileError(f"missing {key}=", line, column)
    return kv[key]


def parse_model(text: str) -> ModelFile:
    """Parse a model file; errors carry line and column."""
    mf: ModelFile | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        lead = len(line) - len(line.lstrip())
        words = line.split(None, 1)
        head = words[0]
        rest = words[1] if len(words) > 1 else ""
        rest_col = line.index(rest, lead + len(head)) if rest else len(line)
        try:
            if head == "maxdeg":
                if mf is not None:
                    raise ModelFileError("maxdeg must appear once, before other declarations",
                                         lineno, lead + 1)
                if not rest.strip().isdigit():
                    raise ModelFileError("maxdeg needs a non-negative integer", lineno,
                                         rest_col + 1)
                mf = ModelFile(ModelAlgebra(int(rest)))
                continue
            if mf is None:
                raise ModelFileError("maxdeg must come first", lineno, lead + 1)
            alg = mf.algebra
            if head == "gen":
                parts = rest.split(None, 2)
                if len(parts) < 2 or not parts[1].isdigit():
                    raise ModelFileError("gen needs a name and a degree", lineno, rest_col + 1)
                name, deg = parts[0], int(parts[1])
                if name == "i":
                    raise ModelFileError("'i' is reserved", lineno, rest_col + 1)
                dform = None
                if len(parts) == 3:
                    tail_col = line.index(parts[2], rest_col)
                    kv = _keyvals(parts[2], lineno, tail_col)
                    if set(kv) - {"d"}:
                        raise ModelFileError("gen only accepts d=", lineno, tail_col + 1)
                    if "d" in kv:
                        dform = parse_expr(alg, kv["d"][0], lineno, kv["d"][1])
                alg.generator(name, deg, d=dform)
            elif head == "bundle":
                parts = rest.split(None, 1)
                if not parts:
                    raise ModelFileError("bundle needs a name", lineno, rest_col + 1)
                if mf.fibers:
                    raise ModelFileError("only one bundle per model", lineno, lead + 1)
                name = parts[0]
                dform = None
                if len(parts) == 2:
                    tail_col = line.index(parts[1], rest_col + len(name))
                    kv = _keyvals(parts[1], lineno, tail_col)
                    if "d" in kv:
                        dform = parse_expr(alg, kv["d"][0], lineno, kv["d"][1])
                alg.generator(name, 1, d=dform, fiber=True)
                mf.fibers.append(name)
            elif head == "flux":
                if len(mf.fibers) != 1:
                    raise ModelFileError("flux must follow exactly one bundle", lineno,
                                         lead + 1)
                kv = _keyvals(rest, lineno, rest_col)
                h3_text, h3_col = _require(kv, "h3", lineno, rest_col + 1)
                h3 = parse_expr(alg, h3_text, lineno, h3_col)
                fhat_text, fhat_col = _require(kv, "Fhat", lineno, rest_col + 1)
                Fhat = parse_expr(alg, fhat_text, lineno, fhat_col)
                dual = kv.get("dual", (mf.fibers[0] + "hat", 0))[0]
                alg.generator(dual, 1, d=Fhat, fiber=True)
                mf.fibers.append(dual)
                mf.h3 = h3
                mf.pair()  # validate the flux here so errors carry this line
            elif head == "module":
                parts = rest.split(None, 1)
                if len(parts) != 2:
                    raise ModelFileError("module needs a name and key=value fields", lineno,
                                         rest_col + 1)
                name = parts[0]
                tail_col = line.index(parts[1], rest_col + len(name))
                kv = _keyvals(parts[1], lineno, tail_col)
                rank_text, rank_col = _require(kv, "rank", lineno, tail_col + 1)
                if not rank_text.isdigit() or int(rank_text) < 1:
                    raise ModelFileError("rank must be a positive integer", lineno, rank_col)
                rank = int(rank_text)
                b_text, b_col = _require(kv, "B", lineno, tail_col + 1)
                B = parse_expr(alg, b_text, lineno, b_col)
                if ("roots" in kv) == ("conn" in kv):
                    raise ModelFileError("module needs exactly one of roots= or conn=",
                                         lineno, tail_col + 1)
                if "roots" in kv:
                    text_, col = kv["roots"]
                    roots = [parse_expr(alg, e, lineno, c)
                             for e, c in _split_list(text_, lineno, col)]
                    mod = GerbeModuleSurrogate(rank, B, roots=roots, name=name)
                else:
                    text_, col = kv["conn"]
                    mod = GerbeModuleSurrogate(rank, B, conn=parse_matrix(alg, text_, lineno,
                                                                          col), name=name)
                if name in mf.modules:
                    raise ModelFileError(f"module {name!r} declared twice", lineno,
                                         rest_col + 1)
                mf.modules[name] = mod
            elif head == "path":
                parts = rest.split(None, 1)
                if len(parts) != 2:
                    raise ModelFileError("path needs a module name and A=", lineno,
                                         rest_col + 1)
                name = parts[0]
                if name not in mf.modules:
                    raise ModelFileError(f"unknown module {name!r}", lineno, rest_col + 1)
                tail_col = line.index(parts[1], rest_col + len(name))
                kv = _keyvals(parts[1], lineno, tail_col)
                text_, col = _require(kv, "A", lineno, tail_col + 1)
                mf.paths[name] = GaugePathData(mf.modules[name],
                                               parse_matrix(alg, text_, lineno, col))
            else:
                raise ModelFileError(f"unknown declaration {head!r}", lineno, lead + 1)
        except ModelFileError:
            raise
        except (ModelDefinitionError, InvalidFluxError, SurrogateError, InvalidInputError,
                ValueError) as exc:
            raise ModelFileError(str(exc), lineno, lead + 1) from exc
    if mf is None:
        raise ModelFileError("empty model file (missing maxdeg)")
    return mf


def load_model(path: str) -> ModelFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_model(text)
