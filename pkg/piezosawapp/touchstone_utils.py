"""
Touchstone v1 two-port reader and writer

Accepted grammar (anything else is rejected with a line-numbered error):

    file        := { comment | blank } option-line { data-line | comment | blank }
    comment     := '!' text                         (also allowed after data)
    option-line := '#' { unit | 'S' | format | 'R' number }, any order, once
    unit        := HZ | KHZ | MHZ | GHZ             (default GHZ)
    format      := RI | MA | DB                     (default MA)
    data-line   := f S11 S21 S12 S22, each S as a pair of numbers (9 numbers)

Frequencies must be finite, >= 0 and strictly increasing. Comments of the form
`! key=value` with keys distance_d_m, temperature_k, bias_v and label restore
sweep metadata; every comment is kept verbatim.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .models import FrequencySweep, GridError, ModelValidationError, SweepMeta

logger = logging.getLogger(__name__)

FREQUENCY_UNITS: Dict[str, float] = {'hz': 1.0, 'khz': 1e3, 'mhz': 1e6, 'ghz': 1e9}
DATA_FORMATS = ('ri', 'ma', 'db')
TWO_PORT_VALUES = 9
NUMBER_FORMAT = '.12e'

META_KEYS = {
    'distance_d_m': 'distance_d',
    'temperature_k': 'temperature',
    'bias_v': 'bias',
    'label': 'label',
}


class TouchstoneParseError(ModelValidationError):
    """Input outside the supported Touchstone subset"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ''
        super().__init__(f"{prefix}{message}")


@dataclass(frozen=True, eq=False)
class TouchstoneRecord:
    """
    Parsed two-port file

    Attributes:
        frequency_unit: Declared unit ('hz', 'khz', 'mhz' or 'ghz')
        parameter: Always 's'
        data_format: 'ri', 'ma' or 'db'
        reference_impedance: R value of the option line in Ohm
        frequencies: Frequencies in Hz
        s: Complex samples, shape (n, 2, 2), s[:, 1, 0] is S21
        comments: Comment texts without the leading '!'
    """
    frequency_unit: str
    parameter: str
    data_format: str
    reference_impedance: float
    frequencies: np.ndarray
    s: np.ndarray
    comments: Tuple[str, ...] = ()
    comment_lines: Tuple[int, ...] = field(default=(), repr=False)

    @property
    def s21(self) -> np.ndarray:
        return self.s[:, 1, 0]


@dataclass
class _ParserState:
    """Variables that change while walking the file"""
    option_line_number: Optional[int] = None
    frequency_unit: str = 'ghz'
    parameter: str = 's'
    data_format: str = 'ma'
    resistance: float = 50.0
    comments: List[str] = field(default_factory=list)
    comment_lines: List[int] = field(default_factory=list)
    frequencies: List[float] = field(default_factory=list)
    rows: List[List[complex]] = field(default_factory=list)


def _decode(data: Union[bytes, str]) -> str:
    if isinstance(data, str):
        return data
    try:
        return bytes(data).decode('utf-8')
    except UnicodeDecodeError as e:
        line_number = bytes(data)[:e.start].count(b'\n') + 1
        raise TouchstoneParseError(f"invalid UTF-8 ({e.reason})", line_number) from None


def _parse_option_line(state: _ParserState, tokens: List[str], line_number: int) -> None:
    if state.option_line_number is not None:
        raise TouchstoneParseError(
            f"second option line (the first is on line {state.option_line_number})", line_number
        )
    state.option_line_number = line_number
    seen = set()
    position = 0
    while position < len(tokens):
        token = tokens[position].lower()
        if token in FREQUENCY_UNITS:
            kind, state.frequency_unit = 'unit', token
        elif token in DATA_FORMATS:
            kind, state.data_format = 'format', token
        elif token == 's':
            kind = 'parameter'
        elif token in ('y', 'z', 'h', 'g'):
            raise TouchstoneParseError(f"only S parameters are supported, got '{tokens[position]}'", line_number)
        elif token == 'r':
            kind = 'resistance'
            position += 1
            if position == len(tokens):
                raise TouchstoneParseError("option 'R' needs a reference impedance", line_number)
            try:
                state.resistance = float(tokens[position])
            except ValueError:
                raise TouchstoneParseError(f"invalid reference impedance '{tokens[position]}'", line_number) from None
            if not (math.isfinite(state.resistance) and state.resistance > 0):
                raise TouchstoneParseError(f"reference impedance must be > 0, got {tokens[position]}", line_number)
        else:
            raise TouchstoneParseError(f"unknown option '{tokens[position]}'", line_number)
        if kind in seen:
            raise TouchstoneParseError(f"option line declares the {kind} twice", line_number)
        seen.add(kind)
        position += 1


def _to_complex(first: float, second: float, data_format: str) -> complex:
    if data_format == 'ri':
        return complex(first, second)
    magnitude = first if data_format == 'ma' else 10.0 ** (first / 20.0)
    angle = math.radians(second)
    return complex(magnitude * math.cos(angle), magnitude * math.sin(angle))


def _parse_data_line(state: _ParserState, tokens: List[str], line_number: int) -> None:
    if state.option_line_number is None:
        raise TouchstoneParseError("data before the option line ('# HZ S RI R 50')", line_number)
    if len(tokens) != TWO_PORT_VALUES:
        raise TouchstoneParseError(
            f"expected {TWO_PORT_VALUES} values for a 2-port row, got {len(tokens)} "
            f"(wrong port count or a wrapped row)", line_number
        )
    try:
        values = [float(token) for token in tokens]
    except ValueError as e:
        raise TouchstoneParseError(f"not a number: {e}", line_number) from None
    if not all(math.isfinite(value) for value in values):
        raise TouchstoneParseError("values must be finite", line_number)

    frequency = values[0] * FREQUENCY_UNITS[state.frequency_unit]
    if not math.isfinite(frequency) or frequency < 0:
        raise TouchstoneParseError(f"frequency must be finite and >= 0, got {tokens[0]}", line_number)
    if state.frequencies and frequency <= state.frequencies[-1]:
        raise TouchstoneParseError(
            f"frequencies must be strictly increasing ({tokens[0]} after {state.frequencies[-1]:.12e} Hz)",
            line_number,
        )
    try:
        samples = [_to_complex(values[k], values[k + 1], state.data_format) for k in range(1, TWO_PORT_VALUES, 2)]
    except OverflowError:
        samples = [complex(math.inf)]
    if not all(math.isfinite(abs(sample)) for sample in samples):
        raise TouchstoneParseError("value overflows after format conversion", line_number)

    state.frequencies.append(frequency)
    state.rows.append(samples)


def read_touchstone(data: Union[bytes, str]) -> TouchstoneRecord:
    """
    Parse a two-port Touchstone v1 document

    Args:
        data: File content as bytes (UTF-8) or text

    Returns:
        TouchstoneRecord with all four S-parameters

    Raises:
        TouchstoneParseError: On any input outside the supported subset
    """
    text = _decode(data)
    state = _ParserState()
    for line_number, raw_line in enumerate(text.split('\n'), start=1):
        content, bang, comment = raw_line.rstrip('\r').partition('!')
        if bang:
            state.comments.append(comment.strip())
            state.comment_lines.append(line_number)
        tokens = content.split()
        if not tokens:
            continue
        if tokens[0].startswith('#'):
            option_tokens = ([tokens[0][1:]] if len(tokens[0]) > 1 else []) + tokens[1:]
            _parse_option_line(state, option_tokens, line_number)
        else:
            _parse_data_line(state, tokens, line_number)

    if state.option_line_number is None:
        raise TouchstoneParseError("missing option line ('# HZ S RI R 50')")

    # file order is S11 S21 S12 S22
    flat = np.array(state.rows, dtype=complex).reshape(-1, 4)
    s = np.empty((flat.shape[0], 2, 2), dtype=complex)
    s[:, 0, 0], s[:, 1, 0], s[:, 0, 1], s[:, 1, 1] = flat[:, 0], flat[:, 1], flat[:, 2], flat[:, 3]
    return TouchstoneRecord(
        frequency_unit=state.frequency_unit,
        parameter=state.parameter,
        data_format=state.data_format,
        reference_impedance=state.resistance,
        frequencies=np.array(state.frequencies, dtype=float),
        s=s,
        comments=tuple(state.comments),
        comment_lines=tuple(state.comment_lines),
    )


def _meta_from_comments(record: TouchstoneRecord) -> SweepMeta:
    values = {}
    for text, line_number in zip(record.comments, record.comment_lines):
        key, equals, value = text.partition('=')
        key = key.strip()
        if not equals or key not in META_KEYS:
            continue
        if key == 'label':
            values['label'] = value.strip()
            continue
        try:
            values[META_KEYS[key]] = float(value)
        except ValueError:
            raise TouchstoneParseError(f"metadata {key} is not a number: '{value.strip()}'", line_number) from None
    return SweepMeta(comments=record.comments, **values)


def parse_touchstone(data: Union[bytes, str]) -> FrequencySweep:
    """
    S21 of a two-port Touchstone document as a FrequencySweep

    Raises:
        TouchstoneParseError: On malformed input, fewer than two rows or a non-uniform grid
    """
    record = read_touchstone(data)
    meta = _meta_from_comments(record)
    if record.frequencies.size < 2:
        raise TouchstoneParseError(f"a sweep needs at least 2 data rows, got {record.frequencies.size}")
    try:
        sweep = FrequencySweep.from_frequencies(record.frequencies, record.s21, meta)
    except GridError as e:
        raise TouchstoneParseError(str(e)) from None
    logger.debug(f"Parsed {sweep.n_points} points, {sweep.f_start:.6e} Hz step {sweep.f_step:.6e} Hz")
    return sweep


def _meta_comment_lines(meta: SweepMeta) -> List[str]:
    lines = []
    for key, attribute in META_KEYS.items():
        value = getattr(meta, attribute)
        if value is None or value == '':
            continue
        if key == 'label':
            lines.append(f"! label={' '.join(str(value).split())}")
        else:
            lines.append(f"! {key}={format(float(value), NUMBER_FORMAT)}")
    for comment in meta.comments:
        key = comment.partition('=')[0].strip()
        if '=' in comment and key in META_KEYS:
            continue
        lines.append(f"! {' '.join(comment.split())}")
    return lines


def write_touchstone(sweep: FrequencySweep) -> bytes:
    """
    Serialize a sweep as `# HZ S RI R 50` with S11 = S22 = 0 and S12 = S21

    The output is deterministic: identical sweeps give identical bytes.
    """
    lines = _meta_comment_lines(sweep.meta)
    lines.append('# HZ S RI R 50')
    zero = format(0.0, NUMBER_FORMAT)
    for frequency, value in zip(sweep.frequencies, sweep.points):
        re, im = format(value.real, NUMBER_FORMAT), format(value.imag, NUMBER_FORMAT)
        lines.append(' '.join((format(frequency, NUMBER_FORMAT), zero, zero, re, im, re, im, zero, zero)))
    return ('\n'.join(lines) + '\n').encode('utf-8')
