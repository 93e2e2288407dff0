import pathlib
import random

import pytest

from qalstack.circuit import MAX_CBITS, MAX_QUBITS, Circuit, Instruction, Opcode

GOLDEN = pathlib.Path(__file__).parent / "golden"

_UNITARY_OPS = [
    Opcode.H, Opcode.X, Opcode.Y, Opcode.Z, Opcode.S, Opcode.SDG, Opcode.T,
    Opcode.TDG, Opcode.RX, Opcode.RY, Opcode.RZ, Opcode.CNOT, Opcode.CZ,
    Opcode.SWAP,
]
_ALL_OPS = _UNITARY_OPS + [Opcode.NOP, Opcode.BARRIER, Opcode.MEASURE, Opcode.RESET]


def random_instruction(rng: random.Random, num_qubits: int, num_cbits: int,
                       unitary_only: bool = False) -> Instruction:
    ops = _UNITARY_OPS if unitary_only else _ALL_OPS
    while True:
        op = rng.choice(ops)
        if op is Opcode.MEASURE and num_cbits == 0:
            continue
        if op.is_two_qubit and num_qubits < 2:
            continue
        break
    q0 = rng.randrange(num_qubits)
    q1 = 0
    cbit = 0
    param = 0.0
    if op.is_two_qubit:
        q1 = rng.choice([q for q in range(num_qubits) if q != q0])
    if op is Opcode.MEASURE:
        cbit = rng.randrange(num_cbits)
    if op.is_rotation:
        param = rng.uniform(-2.0 * 3.141592653589793, 2.0 * 3.141592653589793)
    return Instruction(op, q0, q1, cbit, param)


def random_circuit(rng: random.Random, num_qubits: int, num_gates: int,
                   num_cbits: int | None = None, unitary_only: bool = False) -> Circuit:
    if num_cbits is None:
        num_cbits = 0 if unitary_only else rng.randint(0, min(num_qubits, MAX_CBITS))
    assert 1 <= num_qubits <= MAX_QUBITS
    instructions = [
        random_instruction(rng, num_qubits, num_cbits, unitary_only)
        for _ in range(num_gates)
    ]
    return Circuit(num_qubits, num_cbits, instructions)


@pytest.fixture
def golden() -> pathlib.Path:
    return GOLDEN
