"""Binary circuit codec (.qalb).

Layout, all little endian:

  header, 16 bytes:
    u32 magic            0x51414C42
    u16 version          1
    u16 num_qubits       1..16
    u16 num_cbits        0..16
    u16 reserved         0
    u32 num_instructions

  instruction, 8 bytes each:
    u8  opcode
    u8  q0
    u8  q1
    u8  cbit
    f32 param

The format is canonical: unused operand fields must be zero (positive zero
for param, checked at the bit level), the reserved header field must be
zero, and the payload must contain exactly the declared instruction count.
Anything the decoder accepts therefore re-encodes to the identical bytes.
"""
from __future__ import annotations

import math
import struct

from .circuit import (
    MAX_CBITS,
    MAX_QUBITS,
    Circuit,
    Instruction,
    InvalidCircuit,
    Opcode,
    QubitOutOfRange,
)

MAGIC = 0x51414C42
VERSION = 1
HEADER_SIZE = 16
INSTRUCTION_SIZE = 8

_HEADER = struct.Struct("<IHHHHI")
_INSTR = struct.Struct("<BBBBf")
_INSTR_RAW = struct.Struct("<BBBB4s")

# Header field offsets, used in decode diagnostics.
_OFF_MAGIC = 0
_OFF_VERSION = 4
_OFF_NUM_QUBITS = 6
_OFF_NUM_CBITS = 8
_OFF_RESERVED = 10

_VALID_OPCODES = frozenset(int(op) for op in Opcode)


class DecodeError(ValueError):
    """Base class for binary decode failures.  ``offset`` points at the fault."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class BadMagic(DecodeError):
    pass


class UnsupportedVersion(DecodeError):
    pass


class TruncatedPayload(DecodeError):
    pass


class TrailingData(DecodeError):
    pass


class BadOpcode(DecodeError):
    pass


class NonCanonicalField(DecodeError):
    """An unused field is nonzero, reserved is set, or a param is not finite."""


def encode_binary(circuit: Circuit) -> bytes:
    """Serialize a circuit.  Raises InvalidCircuit if it fails validation."""
    circuit.validate()
    out = bytearray(
        _HEADER.pack(
            MAGIC,
            VERSION,
            circuit.num_qubits,
            circuit.num_cbits,
            0,
            len(circuit.instructions),
        )
    )
    for ins in circuit.instructions:
        out += _INSTR.pack(int(ins.opcode), ins.q0, ins.q1, ins.cbit, ins.param)
    return bytes(out)


def decode_binary(data: bytes) -> Circuit:
    """Parse a .qalb payload, rejecting anything that would not re-encode
    byte-identically."""
    if len(data) < HEADER_SIZE:
        raise TruncatedPayload(
            f"payload is {len(data)} bytes, header needs {HEADER_SIZE}", offset=len(data)
        )
    magic, version, num_qubits, num_cbits, reserved, num_instructions = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"magic 0x{magic:08X}, expected 0x{MAGIC:08X}", offset=_OFF_MAGIC)
    if version != VERSION:
        raise UnsupportedVersion(f"version {version}, expected {VERSION}", offset=_OFF_VERSION)
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise QubitOutOfRange(
            f"num_qubits={num_qubits} outside 1..{MAX_QUBITS}", offset=_OFF_NUM_QUBITS
        )
    if num_cbits > MAX_CBITS:
        raise QubitOutOfRange(
            f"num_cbits={num_cbits} outside 0..{MAX_CBITS}", offset=_OFF_NUM_CBITS
        )
    if reserved != 0:
        raise NonCanonicalField(f"reserved field is {reserved}, must be 0", offset=_OFF_RESERVED)
    expected = HEADER_SIZE + INSTRUCTION_SIZE * num_instructions
    if len(data) < expected:
        raise TruncatedPayload(
            f"header declares {num_instructions} instructions ({expected} bytes), "
            f"payload has {len(data)}",
            offset=len(data),
        )
    if len(data) > expected:
        raise TrailingData(
            f"{len(data) - expected} bytes after the declared instruction stream",
            offset=expected,
        )

    instructions: list[Instruction] = []
    for i in range(num_instructions):
        off = HEADER_SIZE + INSTRUCTION_SIZE * i
        opcode_raw, q0, q1, cbit, param_raw = _INSTR_RAW.unpack_from(data, off)
        if opcode_raw not in _VALID_OPCODES:
            raise BadOpcode(f"opcode 0x{opcode_raw:02X} at offset {off}", offset=off)
        op = Opcode(opcode_raw)
        if q0 >= num_qubits:
            raise QubitOutOfRange(
                f"q0={q0} out of range for {num_qubits} qubits", offset=off + 1
            )
        if op.is_two_qubit:
            if q1 >= num_qubits:
                raise QubitOutOfRange(
                    f"q1={q1} out of range for {num_qubits} qubits", offset=off + 2
                )
            if q1 == q0:
                raise QubitOutOfRange(
                    f"{op.name} q1 must differ from q0 (both {q0})", offset=off + 2
                )
        elif q1 != 0:
            raise NonCanonicalField(
                f"{op.name} does not use q1, field is {q1}", offset=off + 2
            )
        if op is Opcode.MEASURE:
            if cbit >= num_cbits:
                raise QubitOutOfRange(
                    f"cbit={cbit} out of range for {num_cbits} cbits", offset=off + 3
                )
        elif cbit != 0:
            raise NonCanonicalField(
                f"{op.name} does not use cbit, field is {cbit}", offset=off + 3
            )
        if op.is_rotation:
            param = struct.unpack("<f", param_raw)[0]
            if not math.isfinite(param):
                raise NonCanonicalField(
                    f"{op.name} angle is not finite", offset=off + 4
                )
        else:
            if param_raw != b"\x00\x00\x00\x00":
                raise NonCanonicalField(
                    f"{op.name} does not use param, field bytes are {param_raw.hex()}",
                    offset=off + 4,
                )
            param = 0.0
        instructions.append(Instruction(op, q0, q1, cbit, param))

    return Circuit(num_qubits, num_cbits, instructions)
