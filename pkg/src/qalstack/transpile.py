"""On-device transpiler: decompose to the native set, route to the coupling
map, memoize results.

Native set: RX, RZ, CNOT (plus MEASURE/RESET/BARRIER pass-through).
Decomposition rules, written in instruction-stream order:

  X       -> RX(pi)
  Y       -> RX(pi), RZ(pi)
  Z       -> RZ(pi)
  S/SDG   -> RZ(+-pi/2)
  T/TDG   -> RZ(+-pi/4)
  H       -> RZ(pi/2), RX(pi/2), RZ(pi/2)
  RY(t)   -> RZ(-pi/2), RX(t), RZ(pi/2)
  CZ a,b  -> H(b) expansion, CNOT(a,b), H(b) expansion
  SWAP a,b-> CNOT(a,b), CNOT(b,a), CNOT(a,b)
  NOP     -> erased (identity)

Every rule preserves the circuit unitary up to global phase; angles live at
float32 precision.

Routing is greedy: logical qubits start at the identity layout; when a CNOT
spans non-adjacent physical qubits, SWAPs (each expanded to three CNOTs)
walk the control along the lexicographically smallest shortest path until
it neighbours the target.  Measurements and single-qubit gates follow the
current layout.  The routed circuit is sized to the touched physical
extent (never below the input size) and comes with layout_out, the final
logical-to-physical permutation over that range.
"""
from __future__ import annotations

import hashlib
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass

from .binfmt import encode_binary
from .circuit import Circuit, Instruction, Opcode

NATIVE_GATES = frozenset({Opcode.RX, Opcode.RZ, Opcode.CNOT})
PASS_THROUGH = frozenset({Opcode.MEASURE, Opcode.RESET, Opcode.BARRIER})


class DisconnectedCoupling(ValueError):
    pass


class UnsupportedOpcode(ValueError):
    pass


class CouplingMap:
    """Undirected connectivity graph over physical qubits 0..num_qubits-1."""

    def __init__(self, num_qubits: int, edges):
        if num_qubits < 1:
            raise ValueError("coupling map needs at least one qubit")
        canonical = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop on qubit {a}")
            if not (0 <= a < num_qubits and 0 <= b < num_qubits):
                raise ValueError(f"edge ({a},{b}) outside 0..{num_qubits - 1}")
            canonical.add((min(a, b), max(a, b)))
        self.num_qubits = num_qubits
        self.edges = frozenset(canonical)
        self._adj: dict[int, list[int]] = {q: [] for q in range(num_qubits)}
        for a, b in canonical:
            self._adj[a].append(b)
            self._adj[b].append(a)
        for q in self._adj:
            self._adj[q].sort()

    @classmethod
    def line(cls, num_qubits: int) -> "CouplingMap":
        return cls(num_qubits, [(i, i + 1) for i in range(num_qubits - 1)])

    @classmethod
    def ring(cls, num_qubits: int) -> "CouplingMap":
        edges = [(i, i + 1) for i in range(num_qubits - 1)]
        if num_qubits > 2:
            edges.append((0, num_qubits - 1))
        return cls(num_qubits, edges)

    @classmethod
    def full(cls, num_qubits: int) -> "CouplingMap":
        return cls(
            num_qubits,
            [(i, j) for i in range(num_qubits) for j in range(i + 1, num_qubits)],
        )

    def neighbors(self, q: int) -> list[int]:
        return self._adj[q]

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def is_connected(self) -> bool:
        seen = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for v in frontier:
                for u in self._adj[v]:
                    if u not in seen:
                        seen.add(u)
                        nxt.append(u)
            frontier = nxt
        return len(seen) == self.num_qubits

    def shortest_path(self, src: int, dst: int) -> list[int]:
        """Lexicographically smallest among the shortest src->dst paths."""
        dist = {dst: 0}
        frontier = [dst]
        while frontier:
            nxt = []
            for v in frontier:
                for u in self._adj[v]:
                    if u not in dist:
                        dist[u] = dist[v] + 1
                        nxt.append(u)
            frontier = nxt
        if src not in dist:
            raise DisconnectedCoupling(f"no path from {src} to {dst}")
        path = [src]
        cur = src
        while cur != dst:
            cur = min(u for u in self._adj[cur] if dist.get(u, -1) == dist[cur] - 1)
            path.append(cur)
        return path

    def canonical_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.edges))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CouplingMap)
            and self.num_qubits == other.num_qubits
            and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.num_qubits, self.edges))

    def __repr__(self) -> str:
        return f"CouplingMap({self.num_qubits}, {sorted(self.edges)})"


_HALF_PI = math.pi / 2
_QUARTER_PI = math.pi / 4


def _h_expansion(q: int) -> list[Instruction]:
    return [
        Instruction(Opcode.RZ, q, param=_HALF_PI),
        Instruction(Opcode.RX, q, param=_HALF_PI),
        Instruction(Opcode.RZ, q, param=_HALF_PI),
    ]


def decompose(circuit: Circuit) -> Circuit:
    """Rewrite to the native set; the unitary is preserved up to global phase."""
    circuit.validate()
    out: list[Instruction] = []
    for ins in circuit.instructions:
        op = ins.opcode
        if op in NATIVE_GATES or op in PASS_THROUGH:
            out.append(ins)
        elif op is Opcode.NOP:
            continue
        elif op is Opcode.X:
            out.append(Instruction(Opcode.RX, ins.q0, param=math.pi))
        elif op is Opcode.Y:
            out.append(Instruction(Opcode.RX, ins.q0, param=math.pi))
            out.append(Instruction(Opcode.RZ, ins.q0, param=math.pi))
        elif op is Opcode.Z:
            out.append(Instruction(Opcode.RZ, ins.q0, param=math.pi))
        elif op is Opcode.S:
            out.append(Instruction(Opcode.RZ, ins.q0, param=_HALF_PI))
        elif op is Opcode.SDG:
            out.append(Instruction(Opcode.RZ, ins.q0, param=-_HALF_PI))
        elif op is Opcode.T:
            out.append(Instruction(Opcode.RZ, ins.q0, param=_QUARTER_PI))
        elif op is Opcode.TDG:
            out.append(Instruction(Opcode.RZ, ins.q0, param=-_QUARTER_PI))
        elif op is Opcode.H:
            out.extend(_h_expansion(ins.q0))
        elif op is Opcode.RY:
            out.append(Instruction(Opcode.RZ, ins.q0, param=-_HALF_PI))
            out.append(Instruction(Opcode.RX, ins.q0, param=ins.param))
            out.append(Instruction(Opcode.RZ, ins.q0, param=_HALF_PI))
        elif op is Opcode.CZ:
            out.extend(_h_expansion(ins.q1))
            out.append(Instruction(Opcode.CNOT, ins.q0, ins.q1))
            out.extend(_h_expansion(ins.q1))
        elif op is Opcode.SWAP:
            out.append(Instruction(Opcode.CNOT, ins.q0, ins.q1))
            out.append(Instruction(Opcode.CNOT, ins.q1, ins.q0))
            out.append(Instruction(Opcode.CNOT, ins.q0, ins.q1))
        else:
            raise UnsupportedOpcode(f"no decomposition for {op.name}")
    return Circuit(circuit.num_qubits, circuit.num_cbits, out)


def _swap_as_cnots(a: int, b: int) -> list[Instruction]:
    return [
        Instruction(Opcode.CNOT, a, b),
        Instruction(Opcode.CNOT, b, a),
        Instruction(Opcode.CNOT, a, b),
    ]


def route(circuit: Circuit, coupling: CouplingMap) -> tuple[Circuit, tuple[int, ...]]:
    """Map a native circuit onto the coupling graph.

    Returns (routed circuit over physical qubits, layout_out) where
    layout_out[logical] is the physical qubit holding that logical qubit
    after execution.
    """
    circuit.validate()
    if circuit.num_qubits > coupling.num_qubits:
        raise ValueError(
            f"circuit has {circuit.num_qubits} qubits, coupling map only "
            f"{coupling.num_qubits}"
        )
    if not coupling.is_connected():
        raise DisconnectedCoupling("coupling map is not connected")
    for ins in circuit.instructions:
        if ins.opcode not in NATIVE_GATES and ins.opcode not in PASS_THROUGH:
            raise UnsupportedOpcode(f"route expects a native circuit, found {ins.opcode.name}")

    l2p = list(range(coupling.num_qubits))
    p2l = list(range(coupling.num_qubits))
    out: list[Instruction] = []
    touched = circuit.num_qubits - 1

    def do_swap(pa: int, pb: int) -> None:
        nonlocal touched
        out.extend(_swap_as_cnots(pa, pb))
        la, lb = p2l[pa], p2l[pb]
        p2l[pa], p2l[pb] = lb, la
        l2p[la], l2p[lb] = pb, pa
        touched = max(touched, pa, pb)

    for ins in circuit.instructions:
        if ins.opcode is Opcode.CNOT:
            pc, pt = l2p[ins.q0], l2p[ins.q1]
            if not coupling.has_edge(pc, pt):
                path = coupling.shortest_path(pc, pt)
                for step in range(len(path) - 2):
                    do_swap(path[step], path[step + 1])
                pc = l2p[ins.q0]
            out.append(Instruction(Opcode.CNOT, pc, pt))
            touched = max(touched, pc, pt)
        else:
            pq = l2p[ins.q0]
            out.append(Instruction(ins.opcode, pq, 0, ins.cbit, ins.param))
            touched = max(touched, pq)

    size = touched + 1
    routed = Circuit(size, circuit.num_cbits, out)
    routed.validate()
    return routed, tuple(l2p[:size])


@dataclass
class TranspiledCircuit:
    circuit: Circuit
    layout_out: tuple[int, ...]


class TranspileCache:
    """Content-keyed LRU with observable hit/miss/eviction counters."""

    def __init__(self, capacity: int = 1024):
        if capacity < 1:
            raise ValueError("cache capacity must be positive")
        self.capacity = capacity
        self.hits = 0
        self.misses = 0
        self.evictions = 0
        self._entries: OrderedDict[bytes, TranspiledCircuit] = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: bytes) -> TranspiledCircuit | None:
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                self.misses += 1
                return None
            self._entries.move_to_end(key)
            self.hits += 1
            return entry

    def put(self, key: bytes, value: TranspiledCircuit) -> None:
        with self._lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                self._entries[key] = value
                return
            if len(self._entries) >= self.capacity:
                self._entries.popitem(last=False)
                self.evictions += 1
            self._entries[key] = value


def cache_key(circuit: Circuit, coupling: CouplingMap) -> bytes:
    """Content hash over the encoded circuit, the coupling edges and the
    native gate set."""
    h = hashlib.sha256()
    h.update(encode_binary(circuit))
    h.update(repr((coupling.num_qubits, coupling.canonical_edges())).encode())
    h.update(repr(sorted(int(op) for op in NATIVE_GATES)).encode())
    return h.digest()


def transpile(
    circuit: Circuit, coupling: CouplingMap, cache: TranspileCache | None = None
) -> TranspiledCircuit:
    """decompose + route, memoized.  Cached results are shared: treat the
    returned TranspiledCircuit as read-only."""
    if cache is not None:
        key = cache_key(circuit, coupling)
        hit = cache.get(key)
        if hit is not None:
            return hit
    routed, layout = route(decompose(circuit), coupling)
    result = TranspiledCircuit(routed, layout)
    if cache is not None:
        cache.put(key, result)
    return result
