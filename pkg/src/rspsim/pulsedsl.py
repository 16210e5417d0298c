"""Line-based pulse programs and their compilation to 4x4 unitaries.

A program lists one pulse per line in the order the pulses are applied::

    # singlet preparation
    X A pi/2
    Ybar A pi
    J AB pi

``Xbar t a`` is shorthand for ``X t -a``. Angles are literal arithmetic over
``pi`` (``pi/2``, ``-3*pi/4``, ``0.785``) with ``+ - * /`` and parentheses.

Rotation conventions: ``X(t) = exp(-i t sx/2)`` (likewise Y, Z) on the named
spin and ``J(t) = exp(-i t sz(x)sz / 4)``, so ``J AB pi`` is free evolution
for ``1/(2J)`` seconds.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .qmath import IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, apply_to_spin

J_COUPLING_HZ = 214.95
MAX_ANGLE = 4 * math.pi

AXIS_TOKENS = {"X", "Y", "Z", "Xbar", "Ybar", "Zbar", "J"}
TARGETS = {"A", "B", "AB"}


class PulseSyntaxError(ValueError):
    """Base class for pulse-program errors; carries the source position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class LexError(PulseSyntaxError):
    pass


class UnitError(PulseSyntaxError):
    pass


class TargetError(PulseSyntaxError):
    pass


@dataclass(frozen=True)
class Pulse:
    """An rf rotation on one spin, or a J-coupling evolution of the pair.

    For J pulses ``spin`` is ``"AB"`` and ``axis`` is ``"J"``.
    """

    kind: str  # "rf" or "j"
    spin: str
    axis: str
    angle: float
    duration: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.angle) or abs(self.angle) > MAX_ANGLE:
            raise UnitError(f"angle {self.angle!r} outside [-4pi, 4pi]")
        if self.duration < 0:
            raise ValueError("pulse duration must be non-negative")
        if self.kind == "rf":
            if self.spin not in ("A", "B"):
                raise TargetError(f"rf pulse needs a single spin target, got {self.spin!r}")
            if self.axis not in ("X", "Y", "Z"):
                raise ValueError(f"unknown rf axis {self.axis!r}")
        elif self.kind == "j":
            if self.spin != "AB" or self.axis != "J":
                raise TargetError("J-coupling pulses address the AB pair")
        else:
            raise ValueError(f"unknown pulse kind {self.kind!r}")

    @classmethod
    def rf(cls, axis: str, spin: str, angle: float, rf_duration_per_radian: float = 0.0) -> "Pulse":
        return cls("rf", spin, axis, angle, abs(angle) * rf_duration_per_radian)

    @classmethod
    def j(cls, angle: float, j_coupling: float = J_COUPLING_HZ) -> "Pulse":
        return cls("j", "AB", "J", angle, abs(angle) / (2 * math.pi * j_coupling))


@dataclass(frozen=True)
class PulseSequence:
    pulses: tuple[Pulse, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))

    @property
    def total_duration(self) -> float:
        return sum(p.duration for p in self.pulses)

    def __len__(self) -> int:
        return len(self.pulses)

    def __iter__(self):
        return iter(self.pulses)

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        """Concatenate in time: ``self`` runs first."""
        name = " + ".join(n for n in (self.name, other.name) if n)
        return PulseSequence(self.pulses + other.pulses, name)


# --- angle expressions -----------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(?P<pi>pi|π)|(?P<op>[-+*/()]))")


def _tokenize_angle(text: str, line: int | None, col0: int) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise LexError(f"unexpected character {text[pos]!r} in angle", line, col0 + pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), col0 + m.start(kind)))
        pos = m.end()
    return tokens


class _AngleParser:
    # expr := term (('+'|'-') term)* ; term := unary (('*'|'/') unary)*
    # unary := ('+'|'-') unary | atom ; atom := num | pi | '(' expr ')'

    def __init__(self, tokens, line, end_col):
        self.tokens = tokens
        self.i = 0
        self.line = line
        self.end_col = end_col

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _next(self):
        tok = self._peek()
        if tok is None:
            raise LexError("unexpected end of angle expression", self.line, self.end_col)
        self.i += 1
        return tok

    def parse(self) -> float:
        if not self.tokens:
            raise LexError("missing angle", self.line, self.end_col)
        value = self._expr()
        tok = self._peek()
        if tok is not None:
            raise LexError(f"unexpected token {tok[1]!r}", self.line, tok[2])
        return value

    def _expr(self) -> float:
        value = self._term()
        while (tok := self._peek()) is not None and tok[1] in "+-":
            self.i += 1
            rhs = self._term()
            value = value + rhs if tok[1] == "+" else value - rhs
        return value

    def _term(self) -> float:
        value = self._unary()
        while (tok := self._peek()) is not None and tok[1] in "*/":
            self.i += 1
            rhs = self._unary()
            if tok[1] == "*":
                value = value * rhs
            else:
                if rhs == 0:
                    raise UnitError("division by zero in angle", self.line, tok[2])
                value = value / rhs
        return value

    def _unary(self) -> float:
        tok = self._peek()
        if tok is not None and tok[0] == "op" and tok[1] in "+-":
            self.i += 1
            value = self._unary()
            return -value if tok[1] == "-" else value
        return self._atom()

    def _atom(self) -> float:
        kind, text, col = self._next()
        if kind == "num":
            return float(text)
        if kind == "pi":
            return math.pi
        if text == "(":
            value = self._expr()
            close = self._next()
            if close[1] != ")":
                raise LexError(f"expected ')', got {close[1]!r}", self.line, close[2])
            return value
        raise LexError(f"unexpected token {text!r}", self.line, col)


def parse_angle(text: str, line: int | None = None, column: int = 1) -> float:
    """Evaluate a pi-expression such as ``-3*pi/4``."""
    tokens = _tokenize_angle(text, line, column)
    return _AngleParser(tokens, line, column + len(text)).parse()


# --- programs ----------------------------------------------------------------

def _parse_pulse(text: str, line: int, col0: int, j_coupling: float, rf_duration_per_radian: float) -> Pulse:
    m = re.match(r"\s*(\S+)", text)
    axis_tok = m.group(1)
    axis_col = col0 + m.start(1)
    rest = text[m.end():]
    m2 = re.match(r"\s*(\S+)", rest)
    if axis_tok not in AXIS_TOKENS:
        raise LexError(f"unknown pulse axis {axis_tok!r}", line, axis_col)
    if m2 is None:
        raise LexError("missing pulse target", line, col0 + len(text))
    target = m2.group(1)
    target_col = col0 + m.end() + m2.start(1)
    if target not in TARGETS:
        raise LexError(f"unknown target {target!r}", line, target_col)
    angle_text = rest[m2.end():]
    angle_col = col0 + m.end() + m2.end()
    angle = parse_angle(angle_text, line, angle_col)
    if not math.isfinite(angle) or abs(angle) > MAX_ANGLE:
        raise UnitError(f"angle {angle!r} outside [-4pi, 4pi]; angles are radians", line, angle_col)
    if axis_tok == "J":
        if target != "AB":
            raise TargetError(f"J coupling needs target AB, got {target!r}", line, target_col)
        return Pulse.j(angle, j_coupling)
    if target == "AB":
        raise TargetError(f"rf pulse {axis_tok} needs a single spin, got 'AB'", line, target_col)
    axis = axis_tok[0]
    if axis_tok.endswith("bar"):
        angle = -angle
    return Pulse.rf(axis, target, angle, rf_duration_per_radian)


def parse_sequence(
    text: str,
    name: str = "",
    *,
    notation: str = "time-order",
    j_coupling: float = J_COUPLING_HZ,
    rf_duration_per_radian: float = 0.0,
) -> PulseSequence:
    """Parse a pulse program.

    With ``notation="paper-order"`` the pulses are separated by ``·`` (or
    newlines) and listed last-applied first; the result is always stored in
    time order.
    """
    pulses = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if notation == "paper-order":
            pieces = []
            offset = 0
            for chunk in body.split("·"):
                pieces.append((chunk, offset + 1))
                offset += len(chunk) + 1
        elif notation == "time-order":
            pieces = [(body, 1)]
        else:
            raise ValueError(f"unknown notation {notation!r}")
        for chunk, col in pieces:
            if chunk.strip():
                pulses.append(_parse_pulse(chunk, lineno, col, j_coupling, rf_duration_per_radian))
    if notation == "paper-order":
        pulses.reverse()
    return PulseSequence(tuple(pulses), name)


def format_angle(angle: float) -> str:
    """Render an angle, as a rational multiple of pi when that is exact."""
    if angle == 0:
        return "0"
    frac = Fraction(angle / math.pi).limit_denominator(720)
    if abs(float(frac) * math.pi - angle) <= 1e-12:
        num, den = frac.numerator, frac.denominator
        sign = "-" if num < 0 else ""
        num = abs(num)
        text = sign + ("pi" if num == 1 else f"{num}*pi") + ("" if den == 1 else f"/{den}")
        if parse_angle(text) == angle:
            return text
    return repr(float(angle))


def _format_pulse(p: Pulse, bars: bool) -> str:
    angle = p.angle
    axis = p.axis
    if bars and p.kind == "rf" and angle < 0:
        axis, angle = axis + "bar", -angle
    return f"{axis} {p.spin} {format_angle(angle)}"


def format_sequence(seq: PulseSequence, notation: str = "time-order") -> str:
    """Render a sequence; ``paper-order`` lists pulses right to left with bars."""
    if not seq.pulses:
        return ""
    if notation == "time-order":
        return "\n".join(_format_pulse(p, bars=False) for p in seq.pulses) + "\n"
    if notation == "paper-order":
        return " · ".join(_format_pulse(p, bars=True) for p in reversed(seq.pulses))
    raise ValueError(f"unknown notation {notation!r}")


# --- compilation -------------------------------------------------------


_AXES = {"X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}


def rotation(axis: str, angle: float) -> np.ndarray:
    """exp(-i angle sigma_axis / 2) in closed form."""
    return math.cos(angle / 2) * IDENTITY - 1j * math.sin(angle / 2) * _AXES[axis]


def pulse_unitary(p: Pulse, *, j_sign: int = 1) -> np.ndarray:
    """4x4 propagator of a single pulse.

    ``j_sign=-1`` flips the J-coupling convention; it exists only as a
    negative control for the identity checks.
    """
    if p.kind == "rf":
        return apply_to_spin(rotation(p.axis, p.angle), p.spin)
    ph = np.exp(-1j * j_sign * p.angle / 4)
    return np.diag([ph, ph.conjugate(), ph.conjugate(), ph])


@dataclass(frozen=True)
class CompiledSequence:
    unitary: np.ndarray = field(repr=False)
    duration: float


def compile_sequence(seq: PulseSequence | Iterable[Pulse], *, j_sign: int = 1) -> CompiledSequence:
    """Time-ordered product of the pulse propagators (later pulses on the left)."""
    pulses = seq.pulses if isinstance(seq, PulseSequence) else tuple(seq)
    u = np.eye(4, dtype=complex)
    for p in pulses:
        u = pulse_unitary(p, j_sign=j_sign) @ u
    u.setflags(write=False)
    return CompiledSequence(u, sum(p.duration for p in pulses))


compile = compile_sequence  # noqa: A001 - public alias matching the DSL vocabulary
