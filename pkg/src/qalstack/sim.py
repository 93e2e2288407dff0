"""Statevector execution engine.

State layout is little endian: bit k of an amplitude index carries qubit k,
so the two-qubit basis order is |q1 q0> = 00, 01, 10, 11 and
CNOT(control=q0, target=q1) swaps amplitudes 1 and 3.

Gate conventions: RX(t) = exp(-i t X / 2), likewise RY/RZ.  H, S, T and the
two-qubit gates are the usual matrices.

Sampling contract: run_circuit(c, shots, seed) draws from exactly one
numpy.random.Generator seeded with PCG64(seed).  The state is prepared per
shot; the unitary prefix up to the first MEASURE/RESET is computed once and
copied, which consumes no randomness and is therefore bit-identical to
re-running the whole circuit each shot.  Each MEASURE or RESET draws one
uniform u = rng.random() and takes outcome 1 iff u < P(outcome 1); RESET
then flips the qubit back to |0> if it collapsed to |1>.  Identical
(circuit, shots, seed) gives identical histograms on any platform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import MAX_QUBITS, Circuit, Instruction, Opcode, QubitOutOfRange

_SQRT1_2 = 1.0 / math.sqrt(2.0)

_FIXED_1Q = {
    Opcode.H: np.array([[_SQRT1_2, _SQRT1_2], [_SQRT1_2, -_SQRT1_2]], dtype=complex),
    Opcode.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Opcode.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    Opcode.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    Opcode.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    Opcode.SDG: np.array([[1, 0], [0, -1j]], dtype=complex),
    Opcode.T: np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex),
    Opcode.TDG: np.array([[1, 0], [0, np.exp(-1j * math.pi / 4)]], dtype=complex),
}

# Two-qubit matrices in the pair basis p = bit(q0) | bit(q1) << 1, where q0
# is the first operand (the control for CNOT/CZ) and q1 the second.
_CNOT = np.zeros((4, 4), dtype=complex)
_CNOT[0, 0] = _CNOT[2, 2] = _CNOT[3, 1] = _CNOT[1, 3] = 1
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.zeros((4, 4), dtype=complex)
_SWAP[0, 0] = _SWAP[3, 3] = _SWAP[2, 1] = _SWAP[1, 2] = 1
_FIXED_2Q = {Opcode.CNOT: _CNOT, Opcode.CZ: _CZ, Opcode.SWAP: _SWAP}


class QubitCountOutOfRange(ValueError):
    pass


class NonUnitaryOpcode(ValueError):
    pass


class NonUnitaryCircuit(ValueError):
    pass


def gate_matrix(ins: Instruction) -> np.ndarray:
    """The 2x2 or 4x4 matrix for a unitary instruction (pair basis above)."""
    op = ins.opcode
    if op in _FIXED_1Q:
        return _FIXED_1Q[op]
    if op in _FIXED_2Q:
        return _FIXED_2Q[op]
    half = ins.param / 2.0
    c, s = math.cos(half), math.sin(half)
    if op is Opcode.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if op is Opcode.RY:
        return np.array([[c, -s], [s, c]], dtype=complex)
    if op is Opcode.RZ:
        return np.array([[np.exp(-1j * half), 0], [0, np.exp(1j * half)]], dtype=complex)
    raise NonUnitaryOpcode(f"{op.name} has no gate matrix")


def new_state(num_qubits: int) -> np.ndarray:
    """|0...0> over num_qubits qubits."""
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise QubitCountOutOfRange(f"num_qubits={num_qubits} outside 1..{MAX_QUBITS}")
    state = np.zeros(1 << num_qubits, dtype=complex)
    state[0] = 1.0
    return state


def _num_qubits_of(state: np.ndarray) -> int:
    n = int(state.shape[0]).bit_length() - 1
    if state.ndim != 1 or state.shape[0] != 1 << n:
        raise ValueError("state length must be a power of two")
    return n


def apply_gate(state: np.ndarray, ins: Instruction) -> np.ndarray:
    """Return the state with one unitary instruction applied (input unchanged)."""
    op = ins.opcode
    if not op.is_unitary:
        raise NonUnitaryOpcode(f"apply_gate cannot apply {op.name}")
    n = _num_qubits_of(state)
    if ins.q0 >= n or (op.is_two_qubit and ins.q1 >= n):
        raise QubitOutOfRange(f"{op.name} operand out of range for {n} qubits")
    if not op.is_two_qubit:
        return _apply_1q(state, gate_matrix(ins), ins.q0)
    return _apply_2q(state, gate_matrix(ins), ins.q0, ins.q1)


def _apply_1q(state: np.ndarray, m: np.ndarray, q: int) -> np.ndarray:
    # Axis split (high bits, bit q, low bits); the middle axis is qubit q.
    v = state.reshape(-1, 2, 1 << q)
    return np.einsum("ij,ajb->aib", m, v).reshape(state.shape[0])


def _apply_2q(state: np.ndarray, m: np.ndarray, qa: int, qb: int) -> np.ndarray:
    idx = np.arange(state.shape[0])
    pair = ((idx >> qa) & 1) | (((idx >> qb) & 1) << 1)
    base = idx & ~((1 << qa) | (1 << qb))
    out = np.zeros_like(state)
    for k in range(4):
        src = base | ((k & 1) << qa) | (((k >> 1) & 1) << qb)
        out += m[pair, k] * state[src]
    return out


def _prob_one(state: np.ndarray, q: int) -> float:
    v = state.reshape(-1, 2, 1 << q)
    return float(np.sum(np.abs(v[:, 1, :]) ** 2))


def _collapse(state: np.ndarray, q: int, outcome: int) -> np.ndarray:
    # In place: callers own the buffer they pass here.
    v = state.reshape(-1, 2, 1 << q)
    v[:, 1 - outcome, :] = 0.0
    norm = math.sqrt(float(np.sum(np.abs(state) ** 2)))
    state /= norm
    return state


def _sample(state: np.ndarray, q: int, rng: np.random.Generator) -> tuple[int, np.ndarray]:
    p1 = _prob_one(state, q)
    outcome = 1 if rng.random() < p1 else 0
    return outcome, _collapse(state, q, outcome)


@dataclass
class Histogram:
    """Measurement counts keyed by classical-bit outcome (bit k = cbit k)."""

    num_cbits: int
    counts: dict[int, int] = field(default_factory=dict)

    @property
    def shots(self) -> int:
        return sum(self.counts.values())

    def validate(self) -> None:
        if not 0 <= self.num_cbits <= MAX_QUBITS:
            raise ValueError(f"num_cbits={self.num_cbits} out of range")
        limit = 1 << self.num_cbits
        for key, count in self.counts.items():
            if not 0 <= key < limit:
                raise ValueError(f"outcome {key} out of range for {self.num_cbits} cbits")
            if count < 0:
                raise ValueError(f"negative count for outcome {key}")


def run_circuit(circuit: Circuit, shots: int, seed: int) -> Histogram:
    """Execute with per-shot state preparation and Born-rule measurement."""
    circuit.validate()
    if shots < 1:
        raise ValueError(f"shots must be positive (got {shots})")
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))

    # The prefix before the first MEASURE/RESET is deterministic, so compute
    # it once and copy per shot; the RNG stream is untouched by gates.
    split = len(circuit.instructions)
    for i, ins in enumerate(circuit.instructions):
        if ins.opcode in (Opcode.MEASURE, Opcode.RESET):
            split = i
            break
    prefix_state = new_state(circuit.num_qubits)
    for ins in circuit.instructions[:split]:
        if ins.opcode in (Opcode.NOP, Opcode.BARRIER):
            continue
        prefix_state = apply_gate(prefix_state, ins)
    suffix = circuit.instructions[split:]

    counts: dict[int, int] = {}
    for _ in range(shots):
        state = prefix_state.copy()
        cbits = 0
        for ins in suffix:
            op = ins.opcode
            if op in (Opcode.NOP, Opcode.BARRIER):
                continue
            if op is Opcode.MEASURE:
                outcome, state = _sample(state, ins.q0, rng)
                cbits = (cbits & ~(1 << ins.cbit)) | (outcome << ins.cbit)
            elif op is Opcode.RESET:
                outcome, state = _sample(state, ins.q0, rng)
                if outcome:
                    state = _apply_1q(state, _FIXED_1Q[Opcode.X], ins.q0)
            else:
                state = apply_gate(state, ins)
        counts[cbits] = counts.get(cbits, 0) + 1

    return Histogram(circuit.num_cbits, counts)


def statevector_of(circuit: Circuit) -> np.ndarray:
    """Final state of a purely unitary circuit (MEASURE/RESET rejected)."""
    circuit.validate()
    for ins in circuit.instructions:
        if ins.opcode in (Opcode.MEASURE, Opcode.RESET):
            raise NonUnitaryCircuit(f"{ins.opcode.name} is not allowed in statevector_of")
    state = new_state(circuit.num_qubits)
    for ins in circuit.instructions:
        if ins.opcode in (Opcode.NOP, Opcode.BARRIER):
            continue
        state = apply_gate(state, ins)
    return state
