"""
Pulse schedules: the event types, structural validation and the timeline.

A schedule is an ordered tuple of events. Bias windows are opened by
:class:`BiasOn` and closed by a matching :class:`BiasOff`; site-conditional
rotations and polarization pulses are only legal inside the window covering
their cell(s).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, Union

from .config import DeviceConfig
from .hilbert import Direction, DotSite, Grid, QcaPair

DEFAULT_DEVICE = DeviceConfig()


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


def _span_field():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BiasOn:
    lo: int
    hi: int
    direction: Direction
    duration: float | None = None  # window length; None = device default
    span: SourceSpan | None = _span_field()

    @property
    def cells(self) -> tuple[int, ...]:
        return (self.lo, self.hi)


@dataclass(frozen=True)
class BiasOff:
    lo: int
    hi: int
    direction: Direction
    span: SourceSpan | None = _span_field()

    @property
    def cells(self) -> tuple[int, ...]:
        return (self.lo, self.hi)


@dataclass(frozen=True)
class Rotation:
    cell: int
    axis: str
    angle: float
    dot: DotSite | None = None
    duration: float | None = None
    span: SourceSpan | None = _span_field()

    @property
    def cells(self) -> tuple[int, ...]:
        return (self.cell,)


@dataclass(frozen=True)
class Polarization:
    lo: int
    hi: int
    angle: float
    duration: float | None = None
    span: SourceSpan | None = _span_field()

    @property
    def cells(self) -> tuple[int, ...]:
        return (self.lo, self.hi)


@dataclass(frozen=True)
class Wait:
    duration: float
    span: SourceSpan | None = _span_field()

    @property
    def cells(self) -> tuple[int, ...]:
        return ()


@dataclass(frozen=True)
class Measure:
    cell: int
    name: str
    duration: float | None = None
    span: SourceSpan | None = _span_field()

    @property
    def cells(self) -> tuple[int, ...]:
        return (self.cell,)


PulseEvent = Union[BiasOn, BiasOff, Rotation, Polarization, Wait, Measure]


@dataclass(frozen=True)
class Schedule:
    n_cells: int
    events: tuple[PulseEvent, ...] = ()
    grid: Grid | None = None
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.grid is None:
            object.__setattr__(self, "grid", Grid.line(self.n_cells))
        object.__setattr__(self, "events", tuple(self.events))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[PulseEvent]:
        return iter(self.events)

    def timeline(self, config: DeviceConfig = DEFAULT_DEVICE) -> list["TimedEvent"]:
        return timeline(self, config)

    def has_measurements(self) -> bool:
        return any(isinstance(e, Measure) for e in self.events)


class ScheduleError(Exception):
    """Structural problem in a schedule; ``code`` names the rule that failed."""

    def __init__(self, code: str, message: str, span: SourceSpan | None = None):
        where = f"{span}: " if span else ""
        super().__init__(f"{where}{code}: {message}")
        self.code = code
        self.message = message
        self.span = span


class ScheduleSemanticError(ScheduleError):
    pass


class ScheduleSyntaxError(ScheduleError):
    pass


def validate(schedule: Schedule) -> None:
    """Check cell ranges, adjacency and the window-nesting invariant.

    Raises :class:`ScheduleSemanticError` pointing at the offending event.
    """
    grid = schedule.grid
    if grid.n_cells != schedule.n_cells:
        raise ScheduleSemanticError("GridMismatch", f"grid {grid.rows}x{grid.cols} != {schedule.n_cells} cells")
    open_windows: dict[int, BiasOn] = {}

    def fail(code, msg, ev):
        raise ScheduleSemanticError(code, msg, ev.span)

    for ev in schedule.events:
        for c in ev.cells:
            if not 0 <= c < schedule.n_cells:
                fail("UnknownCell", f"cell {c} not declared (cells {schedule.n_cells})", ev)

        if isinstance(ev, BiasOn):
            if ev.lo >= ev.hi:
                fail("BadPairOrder", f"bias pair must be written left/top first: {ev.lo} {ev.hi}", ev)
            try:
                QcaPair.between(grid, ev.lo, ev.hi, ev.direction)
            except ValueError as exc:
                fail("NotAdjacent", str(exc), ev)
            for c in ev.cells:
                if c in open_windows:
                    fail("OverlappingWindows", f"cell {c} already inside an open bias window", ev)
            open_windows[ev.lo] = open_windows[ev.hi] = ev

        elif isinstance(ev, BiasOff):
            opened = open_windows.get(ev.lo)
            if (
                opened is None
                or (opened.lo, opened.hi, opened.direction) != (ev.lo, ev.hi, ev.direction)
            ):
                fail("UnmatchedBiasOff", f"no open {ev.direction.value} window on cells {ev.lo} {ev.hi}", ev)
            del open_windows[ev.lo], open_windows[ev.hi]

        elif isinstance(ev, Rotation):
            if ev.axis not in ("x", "y", "z"):
                fail("BadAxis", f"unknown rotation axis {ev.axis!r}", ev)
            if ev.dot is not None:
                if ev.dot is DotSite.Q:
                    fail("QubitDotCondition", "rotations may only be conditioned on ancilla dots", ev)
                window = open_windows.get(ev.cell)
                if window is None:
                    fail("RotationOutsideWindow", f"conditional rotation on cell {ev.cell} outside a bias window", ev)
                pair = QcaPair(window.lo, window.hi, window.direction)
                if ev.dot not in pair.lowered(ev.cell):
                    fail("DotNotLowered", f"dot {ev.dot.name} of cell {ev.cell} is not lowered by the open window", ev)

        elif isinstance(ev, Polarization):
            window = open_windows.get(ev.lo)
            if window is None or (window.lo, window.hi) != (ev.lo, ev.hi):
                fail("PolarizationOutsideWindow", f"no open window on cells {ev.lo} {ev.hi}", ev)

        elif isinstance(ev, Measure):
            if ev.cell in open_windows:
                fail("ActiveWindow", f"cannot measure cell {ev.cell} inside a bias window", ev)

        elif isinstance(ev, Wait):
            if ev.duration < 0:
                fail("NegativeDuration", "wait duration must be non-negative", ev)

    if open_windows:
        ev = next(iter(open_windows.values()))
        fail("UnclosedWindow", f"bias window on cells {ev.lo} {ev.hi} never closed", ev)


@dataclass(frozen=True)
class TimedEvent:
    """An event placed on the time axis.

    ``noise_time`` is the idle time charged to each of ``noise_cells`` for
    decoherence: the full window length for a closed bias window (charged at
    BiasOff), zero for pulses nested inside a window.
    """

    event: PulseEvent
    start: float
    duration: float
    noise_time: float
    noise_cells: tuple[int, ...]
    in_window: bool


def timeline(schedule: Schedule, config: DeviceConfig = DEFAULT_DEVICE) -> list[TimedEvent]:
    out: list[TimedEvent] = []
    t = 0.0
    # lo cell -> [window start, window length, cursor for nested pulses]
    windows: dict[int, list[float]] = {}
    owner: dict[int, int] = {}
    all_cells = tuple(range(schedule.n_cells))

    for ev in schedule.events:
        if isinstance(ev, BiasOn):
            length = config.bias_window if ev.duration is None else ev.duration
            windows[ev.lo] = [t, length, t]
            owner[ev.lo] = owner[ev.hi] = ev.lo
            out.append(TimedEvent(ev, t, length, 0.0, (), False))
            continue
        if isinstance(ev, BiasOff):
            start, length, cursor = windows.pop(ev.lo)
            del owner[ev.lo], owner[ev.hi]
            end = max(start + length, cursor, t)
            out.append(TimedEvent(ev, end, 0.0, end - start, ev.cells, False))
            if not windows:
                t = end
            continue

        if isinstance(ev, Rotation):
            dur = config.rotation_duration if ev.duration is None else ev.duration
        elif isinstance(ev, Polarization):
            dur = config.polarization_duration if ev.duration is None else ev.duration
        elif isinstance(ev, Measure):
            dur = config.bias_window if ev.duration is None else ev.duration
        else:
            dur = ev.duration

        key = owner.get(ev.cells[0]) if ev.cells else None
        if key is not None:
            # pulses nested in a window are covered by the window's own noise time
            w = windows[key]
            w[2] = max(w[2], t)
            out.append(TimedEvent(ev, w[2], dur, 0.0, ev.cells, True))
            w[2] += dur
        else:
            cells = all_cells if isinstance(ev, Wait) else ev.cells
            out.append(TimedEvent(ev, t, dur, dur, cells, False))
            t += dur
    return out


def total_duration(schedule: Schedule, config: DeviceConfig = DEFAULT_DEVICE) -> float:
    tl = timeline(schedule, config)
    return max((te.start + te.duration for te in tl), default=0.0)
