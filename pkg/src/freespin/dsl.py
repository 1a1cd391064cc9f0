"""
Line-oriented text format for pulse schedules (``.qsp``).

Grammar, one statement per line, ``#`` starts a comment::

    cells INT [grid ROWSxCOLS]          # once, before any event
    bias on CELL:SIGN CELL:SIGN DIR [TIME]
    bias off CELL CELL DIR
    rot AXIS ANGLE @ CELL[.DOT] [TIME]
    pol ANGLE @ CELL CELL [TIME]
    wait TIME
    measure CELL -> NAME [TIME]

DIR is LR or TB, AXIS x/y/z, DOT A-D, SIGN + or -. ANGLE is ``[k]pi[/d]`` or
decimal radians; TIME is a decimal with one of the suffixes fs, ps, ns, us.
A trailing TIME overrides the device default duration for that event (for
``bias on`` it is the window length).
"""
from __future__ import annotations

import math
import re
from decimal import Decimal
from fractions import Fraction

from .hilbert import Direction, DotSite, Grid
from .schedule import (
    BiasOff,
    BiasOn,
    Measure,
    Polarization,
    Rotation,
    Schedule,
    ScheduleSemanticError,
    ScheduleSyntaxError,
    SourceSpan,
    Wait,
    validate,
)

_TOKEN = re.compile(r"\S+")
_INT = re.compile(r"^\d+$")
_PI_ANGLE = re.compile(r"^(-)?(\d*)pi(?:/(\d+))?$")
_DECIMAL = re.compile(r"^[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?$")
_TIME = re.compile(r"^((?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)(fs|ps|ns|us)$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_GRID = re.compile(r"^(\d+)x(\d+)$")

_TIME_EXP = {"fs": -15, "ps": -12, "ns": -9, "us": -6}
ANGLE_SNAP_TOL = 1e-12
MAX_PI_DENOMINATOR = 12


def pi_multiple(k: int, d: int = 1) -> float:
    """The float that the token for k*pi/d parses to."""
    f = Fraction(k, d)
    return f.numerator * math.pi / f.denominator


def format_angle(angle: float) -> str:
    if angle == 0:
        return "0"
    for d in range(1, MAX_PI_DENOMINATOR + 1):
        k = round(angle * d / math.pi)
        if k != 0 and math.gcd(k, d) == 1 and abs(angle - pi_multiple(k, d)) <= ANGLE_SNAP_TOL:
            sign = "-" if k < 0 else ""
            num = "" if abs(k) == 1 else str(abs(k))
            den = "" if d == 1 else f"/{d}"
            return f"{sign}{num}pi{den}"
    return repr(float(angle))


def format_time(seconds: float) -> str:
    exact = Decimal(repr(float(seconds)))
    for unit in ("us", "ns", "ps"):
        if abs(exact) >= Decimal(10) ** _TIME_EXP[unit]:
            break
    else:
        unit = "fs"
    scaled = exact.scaleb(-_TIME_EXP[unit]).normalize()
    text = format(scaled, "f")
    return f"{text}{unit}"


def serialize(schedule: Schedule) -> str:
    lines = [f"cells {schedule.n_cells}"]
    if schedule.grid != Grid.line(schedule.n_cells):
        lines[0] += f" grid {schedule.grid.rows}x{schedule.grid.cols}"
    for ev in schedule.events:
        if isinstance(ev, BiasOn):
            line = f"bias on {ev.lo}:+ {ev.hi}:- {ev.direction.value}"
        elif isinstance(ev, BiasOff):
            line = f"bias off {ev.lo} {ev.hi} {ev.direction.value}"
        elif isinstance(ev, Rotation):
            target = f"{ev.cell}" if ev.dot is None else f"{ev.cell}.{ev.dot.name}"
            line = f"rot {ev.axis} {format_angle(ev.angle)} @ {target}"
        elif isinstance(ev, Polarization):
            line = f"pol {format_angle(ev.angle)} @ {ev.lo} {ev.hi}"
        elif isinstance(ev, Wait):
            line = f"wait {format_time(ev.duration)}"
        elif isinstance(ev, Measure):
            line = f"measure {ev.cell} -> {ev.name}"
        else:  # pragma: no cover
            raise TypeError(f"unknown event {ev!r}")
        duration = getattr(ev, "duration", None)
        if duration is not None and not isinstance(ev, Wait):
            line += f" {format_time(duration)}"
        lines.append(line)
    return "\n".join(lines) + "\n"


class _Line:
    """Token cursor over one source line."""

    def __init__(self, lineno: int, text: str):
        self.lineno = lineno
        self.tokens = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(text)]
        self.pos = 0
        self.end_col = len(text.rstrip()) + 1

    def span(self, index: int | None = None) -> SourceSpan:
        index = self.pos if index is None else index
        if index < len(self.tokens):
            return SourceSpan(self.lineno, self.tokens[index][1])
        return SourceSpan(self.lineno, self.end_col)

    def peek(self) -> str | None:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def next(self, what: str) -> tuple[str, SourceSpan]:
        if self.pos >= len(self.tokens):
            raise ScheduleSyntaxError("UnexpectedEnd", f"expected {what}", self.span())
        tok, col = self.tokens[self.pos]
        self.pos += 1
        return tok, SourceSpan(self.lineno, col)

    def expect(self, literal: str) -> SourceSpan:
        tok, span = self.next(repr(literal))
        if tok != literal:
            raise ScheduleSyntaxError("UnexpectedToken", f"expected {literal!r}, got {tok!r}", span)
        return span

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def finish(self) -> None:
        if not self.done():
            tok, span = self.next("end of line")
            raise ScheduleSyntaxError("TrailingToken", f"unexpected {tok!r}", span)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.n_cells: int | None = None
        self.grid: Grid | None = None
        self.events: list = []

    def cell(self, tok: str, span: SourceSpan) -> int:
        if not _INT.match(tok):
            raise ScheduleSyntaxError("BadCell", f"expected a cell index, got {tok!r}", span)
        cell = int(tok)
        if cell >= self.n_cells:
            raise ScheduleSemanticError("UnknownCell", f"cell {cell} not declared (cells {self.n_cells})", span)
        return cell

    def angle(self, line: _Line) -> float:
        tok, span = line.next("an angle")
        m = _PI_ANGLE.match(tok)
        if m:
            sign, k, d = m.groups()
            k = int(k) if k else 1
            d = int(d) if d else 1
            if d == 0:
                raise ScheduleSemanticError("MalformedAngle", f"zero denominator in {tok!r}", span)
            return pi_multiple(-k if sign else k, d)
        if _DECIMAL.match(tok):
            return float(tok)
        raise ScheduleSemanticError("MalformedAngle", f"cannot read angle {tok!r}", span)

    @staticmethod
    def time(tok: str, span: SourceSpan) -> float:
        m = _TIME.match(tok)
        if not m:
            raise ScheduleSyntaxError("MalformedTime", f"expected TIME with fs/ps/ns/us suffix, got {tok!r}", span)
        number, unit = m.groups()
        return float(Decimal(number).scaleb(_TIME_EXP[unit]))

    def optional_time(self, line: _Line) -> float | None:
        if line.done():
            return None
        tok, span = line.next("a duration")
        return self.time(tok, span)

    def direction(self, line: _Line) -> Direction:
        tok, span = line.next("LR or TB")
        if tok not in ("LR", "TB"):
            raise ScheduleSyntaxError("BadDirection", f"expected LR or TB, got {tok!r}", span)
        return Direction(tok)

    def parse(self) -> Schedule:
        for lineno, raw in enumerate(self.text.split("\n"), 1):
            line = _Line(lineno, raw.split("#", 1)[0])
            if line.done():
                continue
            keyword, span = line.next("a statement")
            if keyword == "cells":
                self.cells_decl(line, span)
                continue
            if self.n_cells is None:
                raise ScheduleSemanticError("MissingCellsDecl", "schedule must start with 'cells N'", span)
            handler = getattr(self, f"stmt_{keyword}", None)
            if handler is None:
                raise ScheduleSyntaxError("UnknownStatement", f"unknown statement {keyword!r}", span)
            self.events.append(handler(line, span))
            line.finish()
        if self.n_cells is None:
            raise ScheduleSemanticError("MissingCellsDecl", "schedule must start with 'cells N'", SourceSpan(1, 1))
        schedule = Schedule(self.n_cells, tuple(self.events), self.grid)
        validate(schedule)
        return schedule

    def cells_decl(self, line: _Line, span: SourceSpan) -> None:
        if self.n_cells is not None:
            raise ScheduleSemanticError("DuplicateCellsDecl", "'cells' declared twice", span)
        tok, tspan = line.next("a cell count")
        if not _INT.match(tok) or int(tok) < 1:
            raise ScheduleSemanticError("BadCellCount", f"cell count must be a positive integer, got {tok!r}", tspan)
        n = int(tok)
        grid = Grid.line(n)
        if not line.done():
            line.expect("grid")
            gtok, gspan = line.next("ROWSxCOLS")
            m = _GRID.match(gtok)
            if not m:
                raise ScheduleSyntaxError("BadGrid", f"expected ROWSxCOLS, got {gtok!r}", gspan)
            grid = Grid(int(m.group(1)), int(m.group(2)))
            if grid.n_cells != n:
                raise ScheduleSemanticError("GridMismatch", f"{gtok} grid does not hold {n} cells", gspan)
        line.finish()
        self.n_cells, self.grid = n, grid

    def stmt_bias(self, line: _Line, span: SourceSpan):
        mode, mspan = line.next("'on' or 'off'")
        if mode == "on":
            ends = []
            for _ in range(2):
                tok, tspan = line.next("CELL:SIGN")
                cell_tok, sep, sign = tok.partition(":")
                if not sep or sign not in ("+", "-"):
                    raise ScheduleSyntaxError("BadBiasTarget", f"expected CELL:SIGN, got {tok!r}", tspan)
                ends.append((self.cell(cell_tok, tspan), sign, tspan))
            direction = self.direction(line)
            duration = self.optional_time(line)
            (a, sa, spa), (b, sb, spb) = sorted(ends, key=lambda e: e[0])
            if sa != "+":
                raise ScheduleSemanticError("BiasSign", f"left/top cell {a} must take the + bias", spa)
            if sb != "-":
                raise ScheduleSemanticError("BiasSign", f"right/bottom cell {b} must take the - bias", spb)
            return BiasOn(a, b, direction, duration, span=span)
        if mode == "off":
            a = self.cell(*line.next("a cell"))
            b = self.cell(*line.next("a cell"))
            direction = self.direction(line)
            a, b = sorted((a, b))
            return BiasOff(a, b, direction, span=span)
        raise ScheduleSyntaxError("UnexpectedToken", f"expected 'on' or 'off', got {mode!r}", mspan)

    def stmt_rot(self, line: _Line, span: SourceSpan):
        axis, aspan = line.next("an axis")
        if axis not in ("x", "y", "z"):
            raise ScheduleSyntaxError("BadAxis", f"expected x, y or z, got {axis!r}", aspan)
        angle = self.angle(line)
        line.expect("@")
        tok, tspan = line.next("CELL[.DOT]")
        cell_tok, sep, dot_tok = tok.partition(".")
        cell = self.cell(cell_tok, tspan)
        dot = None
        if sep:
            if dot_tok not in ("A", "B", "C", "D"):
                raise ScheduleSemanticError("UnknownDot", f"unknown ancilla dot {dot_tok!r}", tspan)
            dot = DotSite[dot_tok]
        return Rotation(cell, axis, angle, dot, self.optional_time(line), span=span)

    def stmt_pol(self, line: _Line, span: SourceSpan):
        angle = self.angle(line)
        line.expect("@")
        a = self.cell(*line.next("a cell"))
        b = self.cell(*line.next("a cell"))
        a, b = sorted((a, b))
        return Polarization(a, b, angle, self.optional_time(line), span=span)

    def stmt_wait(self, line: _Line, span: SourceSpan):
        return Wait(self.time(*line.next("a duration")), span=span)

    def stmt_measure(self, line: _Line, span: SourceSpan):
        cell = self.cell(*line.next("a cell"))
        line.expect("->")
        name, nspan = line.next("a result name")
        if not _NAME.match(name):
            raise ScheduleSyntaxError("BadName", f"invalid result name {name!r}", nspan)
        return Measure(cell, name, self.optional_time(line), span=span)


def parse_angle(token: str) -> float:
    """Read one ANGLE token (``3pi/2``, ``-pi``, ``0.25``)."""
    return _Parser("").angle(_Line(1, token.strip()))


def parse(text: str) -> Schedule:
    """Parse ``.qsp`` text into a validated :class:`Schedule`."""
    return _Parser(text).parse()
