"""Independent reference implementations the tests verify the package
against.  Nothing here imports from qalstack except the circuit IR types,
so the numerics, embeddings and sampling below cannot share a bug with the
code under test: rotations come from scipy's matrix exponential, gate
embeddings from explicit Kronecker products and index arithmetic, and the
reference sampler re-applies the whole circuit shot by shot with no
prefix reuse.

Conventions under test (stated, not imported): amplitude index bit k is
qubit k; RX(t) = exp(-i t X / 2) and likewise RY/RZ; each MEASURE or RESET
consumes exactly one rng.random() and yields 1 iff it is < P(1).
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

from qalstack.circuit import Circuit, Instruction, Opcode

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)

FIXED_1Q = {
    Opcode.H: np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0),
    Opcode.X: _X,
    Opcode.Y: _Y,
    Opcode.Z: _Z,
    Opcode.S: np.diag([1, 1j]).astype(complex),
    Opcode.SDG: np.diag([1, -1j]).astype(complex),
    Opcode.T: np.diag([1, np.exp(1j * math.pi / 4)]),
    Opcode.TDG: np.diag([1, np.exp(-1j * math.pi / 4)]),
}

# Pair basis p = bit(first operand) | bit(second operand) << 1.
CNOT_PAIR = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)
CZ_PAIR = np.diag([1, 1, 1, -1]).astype(complex)
SWAP_PAIR = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)
FIXED_2Q = {Opcode.CNOT: CNOT_PAIR, Opcode.CZ: CZ_PAIR, Opcode.SWAP: SWAP_PAIR}


def rotation_matrix(opcode: Opcode, theta: float) -> np.ndarray:
    axis = {Opcode.RX: _X, Opcode.RY: _Y, Opcode.RZ: _Z}[opcode]
    return expm(-0.5j * theta * axis)


def gate_matrix(ins: Instruction) -> np.ndarray:
    if ins.opcode in FIXED_1Q:
        return FIXED_1Q[ins.opcode]
    if ins.opcode in FIXED_2Q:
        return FIXED_2Q[ins.opcode]
    return rotation_matrix(ins.opcode, ins.param)


def embed_1q(m: np.ndarray, q: int, n: int) -> np.ndarray:
    """Qubit q is index bit q, so it is the low factor of the Kronecker
    product relative to everything above it."""
    return np.kron(np.kron(np.eye(1 << (n - q - 1)), m), np.eye(1 << q))


def embed_2q(m: np.ndarray, qa: int, qb: int, n: int) -> np.ndarray:
    """Dense embedding built by explicit index arithmetic over the pair
    basis p = bit(qa) | bit(qb) << 1."""
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        pa = (col >> qa) & 1
        pb = (col >> qb) & 1
        p = pa | (pb << 1)
        base = col & ~((1 << qa) | (1 << qb))
        for p_out in range(4):
            amp = m[p_out, p]
            if amp != 0:
                row = base | ((p_out & 1) << qa) | (((p_out >> 1) & 1) << qb)
                out[row, col] += amp
    return out


def unitary_of_circuit(circuit: Circuit) -> np.ndarray:
    n = circuit.num_qubits
    u = np.eye(1 << n, dtype=complex)
    for ins in circuit.instructions:
        op = ins.opcode
        if op in (Opcode.NOP, Opcode.BARRIER):
            continue
        if op in (Opcode.MEASURE, Opcode.RESET):
            raise ValueError(f"{op.name} has no unitary")
        if op.is_two_qubit:
            u = embed_2q(gate_matrix(ins), ins.q0, ins.q1, n) @ u
        else:
            u = embed_1q(gate_matrix(ins), ins.q0, n) @ u
    return u


def statevector(circuit: Circuit) -> np.ndarray:
    e0 = np.zeros(1 << circuit.num_qubits, dtype=complex)
    e0[0] = 1.0
    return unitary_of_circuit(circuit) @ e0


def run_reference(circuit: Circuit, shots: int, seed: int) -> dict[int, int]:
    """Shot-by-shot sampler with no prefix reuse: the whole circuit is
    applied from scratch every shot using the oracle matrices."""
    n = circuit.num_qubits
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    counts: dict[int, int] = {}
    for _ in range(shots):
        state = np.zeros(1 << n, dtype=complex)
        state[0] = 1.0
        cbits = 0
        for ins in circuit.instructions:
            op = ins.opcode
            if op in (Opcode.NOP, Opcode.BARRIER):
                continue
            if op in (Opcode.MEASURE, Opcode.RESET):
                q = ins.q0
                mask = 1 << q
                p1 = float(sum(abs(state[i]) ** 2 for i in range(1 << n) if i & mask))
                outcome = 1 if rng.random() < p1 else 0
                for i in range(1 << n):
                    if ((i >> q) & 1) != outcome:
                        state[i] = 0.0
                state = state / math.sqrt(float(np.sum(np.abs(state) ** 2)))
                if op is Opcode.MEASURE:
                    cbits = (cbits & ~(1 << ins.cbit)) | (outcome << ins.cbit)
                elif outcome:
                    state = embed_1q(_X, q, n) @ state
            elif op.is_two_qubit:
                state = embed_2q(gate_matrix(ins), ins.q0, ins.q1, n) @ state
            else:
                state = embed_1q(gate_matrix(ins), ins.q0, n) @ state
        counts[cbits] = counts.get(cbits, 0) + 1
    return counts


def splitmix64_reference(device_seed: int, job_id: int) -> int:
    """The published splitmix64 finalizer, written with explicit modular
    arithmetic."""
    m = 2**64
    z = (device_seed ^ ((job_id * 0x9E3779B97F4A7C15) % m)) % m
    z = (z ^ (z // 2**30)) * 0xBF58476D1CE4E5B9 % m
    z = (z ^ (z // 2**27)) * 0x94D049BB133111EB % m
    return z ^ (z // 2**31)


def permute_statevector(state: np.ndarray, layout) -> np.ndarray:
    """Move logical amplitudes to their physical homes: logical bit l of
    the input index becomes bit layout[l] of the output index."""
    n = len(layout)
    assert state.shape[0] == 1 << n
    out = np.zeros_like(state)
    for idx in range(1 << n):
        dest = 0
        for l in range(n):
            if (idx >> l) & 1:
                dest |= 1 << layout[l]
        out[dest] = state[idx]
    return out


def phase_overlap(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>| for unit vectors: 1 means equal up to global phase."""
    return abs(np.vdot(a, b))
