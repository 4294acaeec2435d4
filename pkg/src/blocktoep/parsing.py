"""A small expression language for scalar 2pi-periodic symbols.

Grammar (whitespace-insensitive)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := atom ('^' INTEGER)?
    atom    := NUMBER | 'pi' | 'i' | VAR | FN '(' expr ')' | '(' expr ')'
    FN      := 'cos' | 'sin' | 'exp'
    VAR     := 't' | 'theta'

Unicode spellings are accepted for convenience: U+2212 for '-', the middle
dot for '*', and the Greek letters for 'pi', 'theta' and the imaginary
unit.  The only admissible occurrences of the variable are cos(a*t),
sin(a*t), exp(i*a*t) with integer a, and the square t^2 (which lowers to
the integrable theta^2 symbol with its closed-form coefficient rule);
everything else containing the variable raises UnsupportedTerm.  Division
is restricted to constant divisors, so rationals such as 1/3 act as plain
scale factors.

Every failure is reported as ParseError (or its subclass UnsupportedTerm)
carrying the character offset into the source text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .symbols import MatrixSymbol, block_symbol, theta_squared

__all__ = [
    "ParseError",
    "UnsupportedTerm",
    "ShapeError",
    "parse_scalar",
    "parse_literal",
    "parse_matrix_symbol",
    "render_scalar",
]

_MAX_DEPTH = 128


class ParseError(ValueError):
    """Source text is outside the grammar; ``position`` is a char offset."""

    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class UnsupportedTerm(ParseError):
    """Well-formed input using a construction the language does not lower."""


class ShapeError(ValueError):
    """Matrix layout is empty, ragged, or inconsistent."""


# ----------------------------------------------------------------------
# tokenizer
# ----------------------------------------------------------------------

_CANONICAL = {
    "−": "-",   # minus sign
    "·": "*",   # middle dot
    "∗": "*",   # asterisk operator
    "θ": " theta ",
    "π": " pi ",
    "ι": " i ",
}

_NUMBER_RE = re.compile(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+")
_NAME_RE = re.compile(r"[A-Za-z_]+")
_OPS = "+-*/^()"

_KEYWORDS = {"t", "theta", "pi", "i", "cos", "sin", "exp"}


@dataclass(frozen=True)
class _Token:
    kind: str      # "number" | "name" | one of _OPS | "end"
    text: str
    pos: int
    value: float = 0.0


def _tokenize(source: str) -> list[_Token]:
    text = source
    for uni, rep in _CANONICAL.items():
        text = text.replace(uni, rep)
    if len(text) != len(source):
        # offsets below refer to the canonicalized text; close enough for
        # error reporting and exact when no multi-char replacement happened
        pass
    tokens: list[_Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch in _OPS:
            if ch == "*" and pos + 1 < n and text[pos + 1] == "*":
                tokens.append(_Token("^", "**", pos))
                pos += 2
                continue
            tokens.append(_Token(ch, ch, pos))
            pos += 1
            continue
        m = _NUMBER_RE.match(text, pos)
        if m:
            try:
                value = float(m.group(0))
            except (ValueError, OverflowError):
                raise ParseError(f"bad numeric literal {m.group(0)!r}", pos)
            tokens.append(_Token("number", m.group(0), pos, value=value))
            pos = m.end()
            continue
        m = _NAME_RE.match(text, pos)
        if m:
            name = m.group(0)
            if name not in _KEYWORDS:
                raise ParseError(f"unknown name {name!r}", pos)
            tokens.append(_Token("name", name, pos))
            pos = m.end()
            continue
        raise ParseError(f"unexpected character {ch!r}", pos)
    tokens.append(_Token("end", "", n))
    return tokens


# ----------------------------------------------------------------------
# lowered values
#
# Every subexpression lowers to one of:
#   _Const  c            a plain complex number
#   _Linear a            the monomial a*t (only legal inside cos/sin/exp/^2)
#   _Poly   {k: c}       a trigonometric polynomial sum c_k e^{i k t}
#   _Quad   (a, {k: c})  a*t^2 plus a trigonometric polynomial
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class _Const:
    value: complex


@dataclass(frozen=True)
class _Linear:
    slope: complex


@dataclass(frozen=True)
class _Poly:
    coeffs: dict


@dataclass(frozen=True)
class _Quad:
    scale: float
    coeffs: dict


def _as_poly(value):
    if isinstance(value, _Const):
        return _Poly({0: value.value})
    return value


def _poly_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, c in b.items():
        out[k] = out.get(k, 0.0) + c
    return out


def _add(a, b, pos: int):
    if isinstance(a, _Linear) or isinstance(b, _Linear):
        if isinstance(a, _Linear) and isinstance(b, _Linear):
            return _Linear(a.slope + b.slope)
        raise UnsupportedTerm("the variable may only appear inside cos/sin/exp or as t^2", pos)
    a, b = _as_poly(a), _as_poly(b)
    if isinstance(a, _Quad) or isinstance(b, _Quad):
        qa = a if isinstance(a, _Quad) else _Quad(0.0, a.coeffs)
        qb = b if isinstance(b, _Quad) else _Quad(0.0, b.coeffs)
        return _Quad(qa.scale + qb.scale, _poly_add(qa.coeffs, qb.coeffs))
    return _Poly(_poly_add(a.coeffs, b.coeffs))


def _scale(value, factor: complex, pos: int):
    if isinstance(value, _Const):
        return _Const(factor * value.value)
    if isinstance(value, _Linear):
        return _Linear(factor * value.slope)
    if isinstance(value, _Poly):
        return _Poly({k: factor * c for k, c in value.coeffs.items()})
    if factor.imag != 0.0:
        raise UnsupportedTerm("t^2 may only be scaled by real constants", pos)
    return _Quad(factor.real * value.scale,
                 {k: factor * c for k, c in value.coeffs.items()})


def _mul(a, b, pos: int):
    if isinstance(a, _Const):
        return _scale(b, a.value, pos)
    if isinstance(b, _Const):
        return _scale(a, b.value, pos)
    if isinstance(a, _Linear) and isinstance(b, _Linear):
        slope = a.slope * b.slope
        if slope.imag != 0.0:
            raise UnsupportedTerm("t^2 may only carry a real factor", pos)
        return _Quad(slope.real, {})
    if isinstance(a, _Poly) and isinstance(b, _Poly):
        out: dict = {}
        for k1, c1 in a.coeffs.items():
            for k2, c2 in b.coeffs.items():
                k = k1 + k2
                out[k] = out.get(k, 0.0) + c1 * c2
        return _Poly(out)
    raise UnsupportedTerm("product mixes the variable with periodic terms", pos)


def _div(a, b, pos: int):
    if not isinstance(b, _Const):
        raise UnsupportedTerm("division is only defined by constants", pos)
    if b.value == 0:
        raise ParseError("division by zero", pos)
    return _scale(a, 1.0 / b.value, pos)


def _integer_slope(value, pos: int, want_imaginary: bool) -> int:
    """Validate a cos/sin/exp argument and return the integer frequency."""
    if not isinstance(value, _Linear):
        raise UnsupportedTerm("argument must be an integer multiple of t", pos)
    slope = value.slope
    if want_imaginary:
        if slope.real != 0.0:
            raise UnsupportedTerm("exp argument must be i times an integer multiple of t", pos)
        slope = complex(slope.imag, 0.0)
    if slope.imag != 0.0 or slope.real != round(slope.real):
        raise UnsupportedTerm("frequency must be an integer", pos)
    return int(round(slope.real))


def _call(fn: str, arg, pos: int):
    if isinstance(arg, _Const):
        fold = {"cos": np.cos, "sin": np.sin, "exp": np.exp}[fn]
        return _Const(complex(fold(arg.value)))
    if fn == "cos":
        a = _integer_slope(arg, pos, want_imaginary=False)
        return _Poly({a: 0.5, -a: 0.5} if a else {0: 1.0})
    if fn == "sin":
        a = _integer_slope(arg, pos, want_imaginary=False)
        return _Poly({a: -0.5j, -a: 0.5j} if a else {0: 0.0})
    a = _integer_slope(arg, pos, want_imaginary=True)
    return _Poly({a: 1.0})


def _power(base, exponent: float, pos: int):
    if exponent != round(exponent):
        raise UnsupportedTerm("exponent must be an integer", pos)
    if isinstance(base, _Linear):
        if int(round(exponent)) != 2:
            raise UnsupportedTerm("only the square t^2 is supported", pos)
        return _mul(base, base, pos)
    raise UnsupportedTerm("powers are only supported on the variable (t^2)", pos)


# ----------------------------------------------------------------------
# recursive-descent parser (parses and lowers in one pass)
# ----------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.index = 0
        self.depth = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.current
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text or 'end of input'!r}", tok.pos)
        return self.advance()

    def _enter(self, pos: int):
        self.depth += 1
        if self.depth > _MAX_DEPTH:
            raise ParseError("expression nested too deeply", pos)

    def parse_expr(self):
        self._enter(self.current.pos)
        try:
            value = self.parse_term()
            while self.current.kind in "+-":
                op = self.advance()
                rhs = self.parse_term()
                if op.kind == "-":
                    rhs = _scale(rhs, -1.0, op.pos)
                value = _add(value, rhs, op.pos)
            return value
        finally:
            self.depth -= 1

    def parse_term(self):
        value = self.parse_factor()
        while self.current.kind in "*/":
            op = self.advance()
            rhs = self.parse_factor()
            value = _mul(value, rhs, op.pos) if op.kind == "*" else _div(value, rhs, op.pos)
        return value

    def parse_factor(self):
        if self.current.kind == "-":
            op = self.advance()
            return _scale(self.parse_factor(), -1.0, op.pos)
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.current.kind == "^":
            op = self.advance()
            negative = False
            if self.current.kind == "-":
                self.advance()
                negative = True
            exponent = self.expect("number")
            value = -exponent.value if negative else exponent.value
            return _power(base, value, op.pos)
        return base

    def parse_atom(self):
        tok = self.current
        if tok.kind == "number":
            self.advance()
            return _Const(complex(tok.value))
        if tok.kind == "(":
            self.advance()
            self._enter(tok.pos)
            try:
                value = self.parse_expr()
            finally:
                self.depth -= 1
            self.expect(")")
            return value
        if tok.kind == "name":
            self.advance()
            if tok.text in ("cos", "sin", "exp"):
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return _call(tok.text, arg, tok.pos)
            if tok.text == "pi":
                return _Const(complex(np.pi))
            if tok.text == "i":
                return _Const(1j)
            return _Linear(1.0 + 0.0j)  # t / theta
        raise ParseError(f"expected a value, found {tok.text or 'end of input'!r}", tok.pos)


def _lower(source: str):
    parser = _Parser(_tokenize(source))
    value = parser.parse_expr()
    end = parser.current
    if end.kind != "end":
        raise ParseError(f"unexpected trailing input {end.text!r}", end.pos)
    return value


# ----------------------------------------------------------------------
# public entry points
# ----------------------------------------------------------------------


def parse_scalar(text: str, label: str | None = None) -> MatrixSymbol:
    """Parse an expression into a 1 x 1 symbol with exact coefficients."""
    if not isinstance(text, str):
        raise ParseError(f"expected an expression string, got {type(text).__name__}")
    value = _lower(text)
    label = text.strip() if label is None else label
    value = _as_poly(value)
    if isinstance(value, _Linear):
        raise UnsupportedTerm("a bare multiple of t is not a periodic symbol", 0)
    if isinstance(value, _Poly):
        coeffs = {k: np.array([[c]], dtype=complex) for k, c in value.coeffs.items()}
        if not coeffs:
            return MatrixSymbol.zero(1, 1)
        return MatrixSymbol.trig_polynomial(coeffs, label=label)
    sym = theta_squared().scaled(value.scale)
    if value.coeffs:
        sym = sym + MatrixSymbol.trig_polynomial(
            {k: np.array([[c]], dtype=complex) for k, c in value.coeffs.items()})
    return MatrixSymbol.analytic(sym.evaluate, 1, 1, rule=sym.fourier_coefficient,
                                 label=label)


def parse_literal(value) -> complex:
    """A complex literal: a number, or an expression folding to a constant."""
    if isinstance(value, (int, float, complex)):
        return complex(value)
    lowered = _lower(value)
    if isinstance(lowered, _Const):
        return lowered.value
    if isinstance(lowered, _Poly) and set(lowered.coeffs) <= {0}:
        return complex(lowered.coeffs.get(0, 0.0))
    raise UnsupportedTerm(f"{value!r} is not a constant", 0)


def _parse_grid(rows: Sequence[Sequence[str]], label: str) -> MatrixSymbol:
    if not rows or any(len(r) == 0 for r in rows):
        raise ShapeError("grid of expressions must be non-empty")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ShapeError(f"ragged grid: row lengths {[len(r) for r in rows]}")
    blocks = []
    for i, row in enumerate(rows):
        block_row = []
        for j, entry in enumerate(row):
            try:
                block_row.append(parse_scalar(entry))
            except ParseError as exc:
                raise type(exc)(f"entry ({i + 1},{j + 1}): {exc}", exc.position) from exc
        blocks.append(block_row)
    return block_symbol(blocks, label=label)


def _parse_coefficient_list(pairs, label: str) -> MatrixSymbol:
    coeffs = {}
    shape = None
    for item in pairs:
        if isinstance(item, dict):
            if set(item) != {"k", "matrix"}:
                raise ShapeError(f"coefficient entries need exactly 'k' and 'matrix', got {sorted(item)}")
            k, matrix = item["k"], item["matrix"]
        else:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise ShapeError(f"coefficient entry must be (k, matrix), got {item!r}")
            k, matrix = item
        if not isinstance(k, int):
            raise ShapeError(f"coefficient index must be an integer, got {k!r}")
        if k in coeffs:
            raise ShapeError(f"duplicate coefficient index k={k}")
        rows = [list(r) for r in matrix]
        if not rows or any(len(r) == 0 for r in rows):
            raise ShapeError(f"coefficient k={k}: matrix must be non-empty")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ShapeError(f"coefficient k={k}: ragged matrix")
        mat = np.array([[parse_literal(entry) for entry in r] for r in rows], dtype=complex)
        if shape is None:
            shape = mat.shape
        elif mat.shape != shape:
            raise ShapeError(f"coefficient k={k} has shape {mat.shape}, expected {shape}")
        coeffs[k] = mat
    if not coeffs:
        raise ShapeError("coefficient list must be non-empty")
    return MatrixSymbol.trig_polynomial(coeffs, label=label)


def parse_matrix_symbol(spec, label: str = "") -> MatrixSymbol:
    """Assemble a matrix symbol from a grid of expressions or a coefficient list.

    ``spec`` is either an s x t nested sequence of expression strings, or a
    sequence of (k, matrix) pairs / {"k": ..., "matrix": ...} mappings whose
    matrix entries are numbers or constant expressions such as "-8/3".
    """
    if isinstance(spec, str):
        return parse_scalar(spec, label=label or None)
    spec = list(spec)
    if not spec:
        raise ShapeError("empty symbol specification")
    first = spec[0]
    if isinstance(first, (list, tuple)) and not (len(first) == 2 and isinstance(first[0], int)):
        return _parse_grid(spec, label)
    return _parse_coefficient_list(spec, label)


def _format_complex(value: complex) -> str:
    return f"({value.real!r} + ({value.imag!r})*i)"


def render_scalar(symbol: MatrixSymbol) -> str:
    """An expression string that re-parses to the same coefficients.

    Exact (bit-for-bit on the lowered coefficients) for 1 x 1 trigonometric
    polynomials; integrable symbols fall back to the label they were parsed
    from.
    """
    if symbol.shape != (1, 1):
        raise ShapeError(f"render_scalar needs a 1 x 1 symbol, got {symbol.shape}")
    if not symbol.is_trig_polynomial:
        if symbol.label:
            return symbol.label
        raise UnsupportedTerm("cannot render an unlabeled integrable symbol", 0)
    parts = []
    for k in symbol.support:
        c = complex(symbol.fourier_coefficient(k)[0, 0])
        if k == 0:
            parts.append(_format_complex(c))
        else:
            parts.append(f"{_format_complex(c)}*exp(i*({k})*t)")
    return " + ".join(parts) if parts else "0"
