# src/control.py
"""
Bias-line control frames for the 16×16 prototype.

Pin map: connector k (0-7) carries code rows 2k and 2k+1; pin p (1-32)
drives row 2k + (p-1)//16, column (p-1) % 16. Pins 33 and 34 are reserved
and always low. Each bias line sets the two diodes of one element in
antisymmetric fashion.

Wire format: the 256 payload bits packed MSB first into 32 octets,
connector 0 first. Text format: one line per connector, "C<k>: " followed by
4 hex octets.
"""

import re
from pathlib import Path
from typing import Tuple

import numpy as np

from src.codebook import CodeMatrix
from src.unit_cell import DiodeState
from utils.exceptions import DimensionMismatchError, MalformedFrameError
from utils.load_n_save import RisDataHandler, Location
from utils.logger import setup_logger

logger = setup_logger()

CONNECTORS = 8
PINS_PER_CONNECTOR = 34
PAYLOAD_PINS = 32
RESERVED_PINS = (33, 34)
FRAME_SHAPE = (16, 16)
PAYLOAD_BITS = CONNECTORS * PAYLOAD_PINS
FRAME_OCTETS = PAYLOAD_BITS // 8
OCTETS_PER_LINE = PAYLOAD_PINS // 8

_LINE_PREFIX = re.compile(r"C(\d+): ")


class ControlFrame:
    """
    Pin states of the eight 34-pin connectors, shape (8, 34), values 0/1.
    """

    __slots__ = ['pins']

    def __init__(self, pins: np.ndarray):
        pins = np.array(pins, dtype=np.uint8, copy=True)
        if pins.shape != (CONNECTORS, PINS_PER_CONNECTOR):
            raise MalformedFrameError(
                f"control frame must have shape {CONNECTORS}x{PINS_PER_CONNECTOR}, got {pins.shape}",
                field="frame"
            )
        if np.any(pins > 1):
            raise MalformedFrameError("control frame pins must be 0 or 1", field="frame")
        for connector in range(CONNECTORS):
            for pin in RESERVED_PINS:
                if pins[connector, pin - 1]:
                    raise MalformedFrameError(
                        f"reserved pin {pin} set high on connector {connector}",
                        field="frame", value=(connector, pin)
                    )
        pins.setflags(write=False)
        self.pins = pins

    @property
    def payload(self) -> np.ndarray:
        """(8, 32) payload pins."""
        return self.pins[:, :PAYLOAD_PINS]

    def pin(self, connector: int, pin: int) -> int:
        """State of a 1-based pin on a 0-based connector."""
        return int(self.pins[connector, pin - 1])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ControlFrame) and np.array_equal(self.pins, other.pins)

    def __hash__(self) -> int:
        return hash(self.pins.tobytes())

    def __repr__(self) -> str:
        return f"ControlFrame(high={int(self.payload.sum())}/{PAYLOAD_BITS})"


def compile_frame(code: CodeMatrix) -> ControlFrame:
    """
    Map a 16×16 code matrix onto the connector pins.

    Raises:
        DimensionMismatchError: If the code is not 16×16
    """
    if code.shape != FRAME_SHAPE:
        raise DimensionMismatchError("control frames carry a 16x16 code matrix",
                                     expected=FRAME_SHAPE, actual=code.shape)
    pins = np.zeros((CONNECTORS, PINS_PER_CONNECTOR), dtype=np.uint8)
    pins[:, :PAYLOAD_PINS] = code.values.reshape(CONNECTORS, PAYLOAD_PINS)
    return ControlFrame(pins)


def decompile_frame(frame: ControlFrame) -> CodeMatrix:
    """Exact inverse of compile_frame."""
    return CodeMatrix(frame.payload.reshape(FRAME_SHAPE))


def diode_states(code_bit: int) -> Tuple[DiodeState, DiodeState]:
    """
    (diode #1, diode #2) for one bias line.

    Example:
        > diode_states(0)
        (<DiodeState.OFF: 0>, <DiodeState.ON: 1>)
    """
    if code_bit not in (0, 1):
        raise MalformedFrameError(f"bias bit must be 0 or 1, got {code_bit}", field="code_bit", value=code_bit)
    return (DiodeState.ON, DiodeState.OFF) if code_bit else (DiodeState.OFF, DiodeState.ON)


def diode_state_map(code: CodeMatrix) -> np.ndarray:
    """
    Diode states of every element, shape (rows, cols, 2), DiodeState values as ints.

    Diode #1 follows the bit, diode #2 its complement.
    """
    bits = code.values.astype(np.uint8)
    return np.stack([bits, 1 - bits], axis=-1)


def payload_hamming_distance(a: ControlFrame, b: ControlFrame) -> int:
    return int(np.count_nonzero(a.payload != b.payload))


def to_bytes(frame: ControlFrame) -> bytes:
    """32 octets, MSB first, connector 0 first."""
    return np.packbits(frame.payload.ravel(), bitorder='big').tobytes()


def from_bytes(data: bytes) -> ControlFrame:
    """
    Raises:
        MalformedFrameError: If data is not exactly 32 octets
    """
    if len(data) != FRAME_OCTETS:
        raise MalformedFrameError(f"binary frame must be {FRAME_OCTETS} octets, got {len(data)}", field="frame")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder='big')
    pins = np.zeros((CONNECTORS, PINS_PER_CONNECTOR), dtype=np.uint8)
    pins[:, :PAYLOAD_PINS] = bits.reshape(CONNECTORS, PAYLOAD_PINS)
    return ControlFrame(pins)


def format_frame(frame: ControlFrame) -> str:
    """
    Example:
        > print(format_frame(compile_frame(CodeMatrix.zeros(16, 16))).splitlines()[0])
        C0: 00 00 00 00
    """
    octets = to_bytes(frame)
    lines = []
    for connector in range(CONNECTORS):
        chunk = octets[connector * OCTETS_PER_LINE:(connector + 1) * OCTETS_PER_LINE]
        lines.append(f"C{connector}: " + " ".join(f"{octet:02x}" for octet in chunk))
    return "\n".join(lines) + "\n"


def parse_frame(text: str, source: str = "<frame>") -> ControlFrame:
    """
    Parse the text format written by format_frame.

    Blank lines and '#' comment lines are skipped; connectors must appear in
    order C0..C7.

    Raises:
        MalformedFrameError: With the 1-based line and column of the first problem
    """
    octets = bytearray()
    expected = 0
    last_line = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        last_line = line_no
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith('#'):
            continue
        if expected >= CONNECTORS:
            raise MalformedFrameError(f"{source}: more than {CONNECTORS} connector lines", line=line_no, column=1)

        match = _LINE_PREFIX.match(line)
        if not match:
            raise MalformedFrameError(f"{source}: expected 'C{expected}: '", line=line_no, column=1)
        if int(match.group(1)) != expected:
            raise MalformedFrameError(f"{source}: expected connector C{expected}, got C{match.group(1)}",
                                      line=line_no, column=2)

        column = match.end() + 1
        fields = line[match.end():].split(' ')
        if len(fields) != OCTETS_PER_LINE:
            raise MalformedFrameError(f"{source}: expected {OCTETS_PER_LINE} hex octets, got {len(fields)}",
                                      line=line_no, column=column)
        for field in fields:
            if len(field) != 2 or any(ch not in '0123456789abcdefABCDEF' for ch in field):
                raise MalformedFrameError(f"{source}: invalid hex octet {field!r}", line=line_no, column=column)
            octets.append(int(field, 16))
            column += len(field) + 1
        expected += 1

    if expected != CONNECTORS:
        raise MalformedFrameError(f"{source}: expected {CONNECTORS} connector lines, got {expected}",
                                  line=max(last_line, 1))
    return from_bytes(bytes(octets))


def save_frame(frame: ControlFrame, directory: Location) -> Tuple[Path, Path]:
    """Write frame.txt and frame.bin."""
    text_path = RisDataHandler.save_text(format_frame(frame), directory, "frame.txt")
    binary_path = RisDataHandler.save_binary(to_bytes(frame), directory, "frame.bin")
    logger.debug(f"Frame written: {text_path}, {binary_path}")
    return text_path, binary_path


def load_frame(path: Path) -> ControlFrame:
    """Read a text frame (frame.txt) from disk."""
    return parse_frame(RisDataHandler.load_text(path.parent, path.name), source=path.name)
