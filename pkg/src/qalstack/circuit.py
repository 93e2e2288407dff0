"""Gate-level circuit IR shared by the codecs, the simulator and the transpiler.

A circuit is a flat list of fixed-shape instructions over at most 16 qubits
and 16 classical bits.  Every instruction carries the same four operand
fields; which of them are meaningful depends on the opcode:

  q0     every opcode (target qubit; control for two-qubit gates)
  q1     two-qubit opcodes only (CNOT/CZ/SWAP target)
  cbit   MEASURE only
  param  rotation opcodes only (angle in radians, float32 precision)

Unused fields must be zero.  Validation enforces that here so the binary
codec can be canonical: re-encoding any accepted instruction stream
reproduces it byte for byte.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from enum import IntEnum

MAX_QUBITS = 16
MAX_CBITS = 16


class InvalidCircuit(ValueError):
    """A circuit or instruction violates a structural invariant."""


class QubitOutOfRange(InvalidCircuit):
    """A qubit/cbit operand or count is outside the declared range.

    ``offset`` is the byte offset of the offending field when the error
    comes from the binary decoder, else None.
    """

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class Opcode(IntEnum):
    NOP = 0x00
    H = 0x01
    X = 0x02
    Y = 0x03
    Z = 0x04
    S = 0x05
    SDG = 0x06
    T = 0x07
    TDG = 0x08
    RX = 0x10
    RY = 0x11
    RZ = 0x12
    CNOT = 0x20
    CZ = 0x21
    SWAP = 0x22
    MEASURE = 0x30
    RESET = 0x31
    BARRIER = 0x3F

    @property
    def is_two_qubit(self) -> bool:
        return self in _TWO_QUBIT

    @property
    def is_rotation(self) -> bool:
        return self in _ROTATIONS

    @property
    def is_unitary(self) -> bool:
        """True for gates apply_gate accepts (excludes NOP/BARRIER/MEASURE/RESET)."""
        return self in _UNITARY


_TWO_QUBIT = frozenset({Opcode.CNOT, Opcode.CZ, Opcode.SWAP})
_ROTATIONS = frozenset({Opcode.RX, Opcode.RY, Opcode.RZ})
_UNITARY = frozenset(
    {
        Opcode.H,
        Opcode.X,
        Opcode.Y,
        Opcode.Z,
        Opcode.S,
        Opcode.SDG,
        Opcode.T,
        Opcode.TDG,
        Opcode.RX,
        Opcode.RY,
        Opcode.RZ,
        Opcode.CNOT,
        Opcode.CZ,
        Opcode.SWAP,
    }
)

_F32 = struct.Struct("<f")


def f32(value: float) -> float:
    """Round a float to float32 precision (the precision angles are stored at)."""
    return _F32.unpack(_F32.pack(value))[0]


@dataclass(frozen=True)
class Instruction:
    opcode: Opcode
    q0: int = 0
    q1: int = 0
    cbit: int = 0
    param: float = 0.0

    def __post_init__(self):
        # Angles live at f32 precision everywhere; normalizing here makes
        # binary and text round-trips exact by construction.
        object.__setattr__(self, "opcode", Opcode(self.opcode))
        object.__setattr__(self, "param", f32(self.param))

    def validate(self, num_qubits: int, num_cbits: int) -> None:
        op = self.opcode
        if not 0 <= self.q0 < num_qubits:
            raise QubitOutOfRange(f"q0={self.q0} out of range for {num_qubits} qubits")
        if op.is_two_qubit:
            if not 0 <= self.q1 < num_qubits:
                raise QubitOutOfRange(f"q1={self.q1} out of range for {num_qubits} qubits")
            if self.q1 == self.q0:
                raise QubitOutOfRange(f"{op.name} q1 must differ from q0 (both {self.q0})")
        elif self.q1 != 0:
            raise InvalidCircuit(f"{op.name} does not use q1, it must be 0 (got {self.q1})")
        if op is Opcode.MEASURE:
            if not 0 <= self.cbit < num_cbits:
                raise QubitOutOfRange(f"cbit={self.cbit} out of range for {num_cbits} cbits")
        elif self.cbit != 0:
            raise InvalidCircuit(f"{op.name} does not use cbit, it must be 0 (got {self.cbit})")
        if op.is_rotation:
            if not math.isfinite(self.param):
                raise InvalidCircuit(f"{op.name} angle must be finite (got {self.param!r})")
        elif self.param != 0.0 or math.copysign(1.0, self.param) < 0:
            # -0.0 compares equal to 0.0 but has a different bit pattern.
            raise InvalidCircuit(f"{op.name} does not use param, it must be 0 (got {self.param!r})")


@dataclass
class Circuit:
    """A builder-friendly instruction list.  Methods return self for chaining."""

    num_qubits: int
    num_cbits: int = 0
    instructions: list[Instruction] = field(default_factory=list)

    def validate(self) -> None:
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise QubitOutOfRange(f"num_qubits={self.num_qubits} outside 1..{MAX_QUBITS}")
        if not 0 <= self.num_cbits <= MAX_CBITS:
            raise QubitOutOfRange(f"num_cbits={self.num_cbits} outside 0..{MAX_CBITS}")
        for ins in self.instructions:
            ins.validate(self.num_qubits, self.num_cbits)

    def add(self, opcode: Opcode, q0: int = 0, q1: int = 0, cbit: int = 0, param: float = 0.0) -> "Circuit":
        self.instructions.append(Instruction(opcode, q0, q1, cbit, param))
        return self

    def nop(self, q: int) -> "Circuit":
        return self.add(Opcode.NOP, q)

    def h(self, q: int) -> "Circuit":
        return self.add(Opcode.H, q)

    def x(self, q: int) -> "Circuit":
        return self.add(Opcode.X, q)

    def y(self, q: int) -> "Circuit":
        return self.add(Opcode.Y, q)

    def z(self, q: int) -> "Circuit":
        return self.add(Opcode.Z, q)

    def s(self, q: int) -> "Circuit":
        return self.add(Opcode.S, q)

    def sdg(self, q: int) -> "Circuit":
        return self.add(Opcode.SDG, q)

    def t(self, q: int) -> "Circuit":
        return self.add(Opcode.T, q)

    def tdg(self, q: int) -> "Circuit":
        return self.add(Opcode.TDG, q)

    def rx(self, theta: float, q: int) -> "Circuit":
        return self.add(Opcode.RX, q, param=theta)

    def ry(self, theta: float, q: int) -> "Circuit":
        return self.add(Opcode.RY, q, param=theta)

    def rz(self, theta: float, q: int) -> "Circuit":
        return self.add(Opcode.RZ, q, param=theta)

    def cx(self, control: int, target: int) -> "Circuit":
        return self.add(Opcode.CNOT, control, target)

    def cz(self, a: int, b: int) -> "Circuit":
        return self.add(Opcode.CZ, a, b)

    def swap(self, a: int, b: int) -> "Circuit":
        return self.add(Opcode.SWAP, a, b)

    def measure(self, q: int, cbit: int) -> "Circuit":
        return self.add(Opcode.MEASURE, q, cbit=cbit)

    def reset(self, q: int) -> "Circuit":
        return self.add(Opcode.RESET, q)

    def barrier(self, q: int) -> "Circuit":
        return self.add(Opcode.BARRIER, q)


def bell_pair() -> Circuit:
    """H q0; CNOT q0,q1; measure both.  The stock smoke-test circuit."""
    return Circuit(2, 2).h(0).cx(0, 1).measure(0, 0).measure(1, 1)
