"""Virtual quantum accelerator (QPX): register file, descriptor rings, DMA
and interrupt semantics, plus the execution engine behind them.

Register map (32-bit little-endian registers, byte offsets):

  0x00 MAGIC       RO  0x51504558
  0x04 VERSION     RO  1
  0x08 CAPS        RO  bits 0-7 num_qubits, bit 8 fidelity, bit 9 latency
  0x0C CTRL        RW  bit 0 ENABLE, bit 1 RESET (self-clearing), bit 2 MODE
                       (0 = fidelity, 1 = latency)
  0x10 STATUS      RO  bit 0 READY (enabled), bit 1 BUSY (job in flight),
                       bit 2 ERROR (ERR_CODE != 0)
  0x14 DOORBELL    RW  submission ring tail index (< SQ_LEN)
  0x18 SQ_BASE_LO  RW  submission ring base, low half
  0x1C SQ_BASE_HI  RW  submission ring base, high half
  0x20 SQ_LEN      RW  submission ring length in descriptors
  0x24 CQ_BASE_LO  RW  completion ring base, low half
  0x28 CQ_BASE_HI  RW  completion ring base, high half
  0x2C CQ_LEN      RW  completion ring length in records
  0x30 CQ_HEAD     RW  host consumer index; advancing it releases stalls
  0x34 IRQ_MASK    RW  bit 0 enables completion notifications
  0x38 IRQ_STATUS  RO, write-1-to-clear; bit 0 set on completion append
  0x3C ERR_CODE    RO  sticky last error, cleared by CTRL.RESET

Reads of unmapped offsets return 0xFFFFFFFF; writes to read-only or
unmapped offsets are ignored.  CTRL.RESET clears the rings, doorbell,
internal indices, IRQ state, ERR_CODE, the transpile cache and the model
clock, then latches the remaining CTRL bits of the same write.

Rings live in host memory.  A SubmissionDescriptor is 32 bytes:
{u64 job_id, u64 payload_addr, u32 payload_len, u32 shots, u32 flags,
u32 reserved}, flags bit 0 forces latency timing for the job, bit 1
bypasses on-device transpilation; reserved is written as zero and ignored
on read.  A CompletionRecord is 32 bytes: {u64 job_id, u32 status,
u32 result_len, u64 result_addr, u64 exec_time_ns}; status != 0 implies
result_len == 0.  The device consumes descriptors in order from its head
to the doorbell tail and appends one record per job; when the completion
ring is full it stalls until CQ_HEAD advances.  Job ids must be >= 1: the
host finds new records by scanning for nonzero job_id and zeroes each slot
it consumes.

Result payloads are {u32 num_cbits, u32 num_entries} followed by
num_entries of {u64 outcome_key, u64 count} with keys strictly ascending.

Error codes: 0 OK, 1 BAD_MAGIC, 2 UNSUPPORTED_VERSION,
3 QUBIT_OUT_OF_RANGE, 4 BAD_OPCODE (also the bucket for any other
malformed payload: truncation, trailing bytes, non-canonical fields,
shots == 0), 5 DMA_FAULT, 6 BAD_DOORBELL, 7 CANCELLED (set by the host
layer, never by the device).

Fidelity seeds: each job runs with job_seed(device_seed, job_id), a
splitmix64-style mix, so results are reproducible from the device seed and
the job id alone.  In latency mode the engine skips simulation, returns
the all-zero histogram {0: shots}, reports the model's execution term as
exec_time_ns and advances the model clock by the full per-job latency;
fidelity jobs report the same execution term but leave the clock alone.

The device is one logical event loop: a reentrant lock serializes every
entry point, and the interrupt sink runs inside it, so sinks must be fast,
must not block, and may only touch the device reentrantly from the same
thread.
"""
from __future__ import annotations

import struct
import threading
from dataclasses import dataclass

from .binfmt import (
    BadMagic,
    BadOpcode,
    DecodeError,
    UnsupportedVersion,
    decode_binary,
)
from .circuit import InvalidCircuit, QubitOutOfRange
from .sim import Histogram, run_circuit
from .timing import (
    TimingModel,
    completion_term,
    execution_term,
    gate_counts_of,
    transfer_term,
)
from .transpile import CouplingMap, TranspileCache, transpile

DEVICE_MAGIC = 0x51504558
DEVICE_VERSION = 1

REG_MAGIC = 0x00
REG_VERSION = 0x04
REG_CAPS = 0x08
REG_CTRL = 0x0C
REG_STATUS = 0x10
REG_DOORBELL = 0x14
REG_SQ_BASE_LO = 0x18
REG_SQ_BASE_HI = 0x1C
REG_SQ_LEN = 0x20
REG_CQ_BASE_LO = 0x24
REG_CQ_BASE_HI = 0x28
REG_CQ_LEN = 0x2C
REG_CQ_HEAD = 0x30
REG_IRQ_MASK = 0x34
REG_IRQ_STATUS = 0x38
REG_ERR_CODE = 0x3C

CTRL_ENABLE = 1 << 0
CTRL_RESET = 1 << 1
CTRL_MODE = 1 << 2

STATUS_READY = 1 << 0
STATUS_BUSY = 1 << 1
STATUS_ERROR = 1 << 2

CAPS_FIDELITY = 1 << 8
CAPS_LATENCY = 1 << 9

IRQ_DONE = 1 << 0

FLAG_LATENCY_OVERRIDE = 1 << 0
FLAG_TRANSPILE_BYPASS = 1 << 1

ERR_OK = 0
ERR_BAD_MAGIC = 1
ERR_UNSUPPORTED_VERSION = 2
ERR_QUBIT_OUT_OF_RANGE = 3
ERR_BAD_OPCODE = 4
ERR_DMA_FAULT = 5
ERR_BAD_DOORBELL = 6
ERR_CANCELLED = 7

MMIO_UNMAPPED = 0xFFFFFFFF

DESCRIPTOR_SIZE = 32
RECORD_SIZE = 32
_DESCRIPTOR = struct.Struct("<QQIIII")
_RECORD = struct.Struct("<QIIQQ")
_RESULT_HEADER = struct.Struct("<II")
_RESULT_ENTRY = struct.Struct("<QQ")

_MASK64 = (1 << 64) - 1


class OutOfBounds(ValueError):
    """Host memory access outside the allocated array."""


class DmaFault(RuntimeError):
    """Device-side DMA touched memory out of bounds."""


class HostMemoryExhausted(RuntimeError):
    pass


class HostMemory:
    """Flat byte-addressed host RAM with a bump allocator (no free)."""

    def __init__(self, capacity: int = 16 * 1024 * 1024):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._data = bytearray(capacity)
        self._next = 0
        self._lock = threading.Lock()

    def alloc(self, size: int, align: int = 8) -> int:
        if size < 0:
            raise ValueError("size must be non-negative")
        with self._lock:
            addr = (self._next + align - 1) // align * align
            if addr + size > self.capacity:
                raise HostMemoryExhausted(
                    f"cannot allocate {size} bytes, {self.capacity - self._next} left"
                )
            self._next = addr + size
            return addr

    def _check(self, addr: int, length: int) -> None:
        if addr < 0 or length < 0 or addr + length > self.capacity:
            raise OutOfBounds(
                f"access [{addr}, {addr + length}) outside capacity {self.capacity}"
            )

    def read(self, addr: int, length: int) -> bytes:
        self._check(addr, length)
        return bytes(self._data[addr : addr + length])

    def write(self, addr: int, data: bytes) -> None:
        self._check(addr, len(data))
        self._data[addr : addr + len(data)] = data


@dataclass(frozen=True)
class SubmissionDescriptor:
    job_id: int
    payload_addr: int
    payload_len: int
    shots: int
    flags: int = 0
    reserved: int = 0

    def pack(self) -> bytes:
        return _DESCRIPTOR.pack(
            self.job_id, self.payload_addr, self.payload_len, self.shots, self.flags, self.reserved
        )

    @classmethod
    def unpack(cls, data: bytes) -> "SubmissionDescriptor":
        return cls(*_DESCRIPTOR.unpack(data))


@dataclass(frozen=True)
class CompletionRecord:
    job_id: int
    status: int
    result_len: int
    result_addr: int
    exec_time_ns: int

    def pack(self) -> bytes:
        return _RECORD.pack(
            self.job_id, self.status, self.result_len, self.result_addr, self.exec_time_ns
        )

    @classmethod
    def unpack(cls, data: bytes) -> "CompletionRecord":
        return cls(*_RECORD.unpack(data))


class ResultFormatError(ValueError):
    pass


def encode_result(histogram: Histogram) -> bytes:
    """Serialize a histogram with keys in ascending order (deterministic)."""
    histogram.validate()
    out = bytearray(_RESULT_HEADER.pack(histogram.num_cbits, len(histogram.counts)))
    for key in sorted(histogram.counts):
        out += _RESULT_ENTRY.pack(key, histogram.counts[key])
    return bytes(out)


def decode_result(data: bytes) -> Histogram:
    if len(data) < _RESULT_HEADER.size:
        raise ResultFormatError(f"result is {len(data)} bytes, header needs 8")
    num_cbits, num_entries = _RESULT_HEADER.unpack_from(data)
    expected = _RESULT_HEADER.size + num_entries * _RESULT_ENTRY.size
    if len(data) != expected:
        raise ResultFormatError(f"result is {len(data)} bytes, expected {expected}")
    counts: dict[int, int] = {}
    last_key = -1
    for i in range(num_entries):
        key, count = _RESULT_ENTRY.unpack_from(data, _RESULT_HEADER.size + i * _RESULT_ENTRY.size)
        if key <= last_key:
            raise ResultFormatError("result keys must be strictly ascending")
        counts[key] = count
        last_key = key
    histogram = Histogram(num_cbits, counts)
    histogram.validate()
    return histogram


def job_seed(device_seed: int, job_id: int) -> int:
    """Per-job RNG seed: splitmix64 finalizer over the device seed xor the
    golden-ratio-weighted job id."""
    z = (device_seed ^ (job_id * 0x9E3779B97F4A7C15)) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


class QpxDevice:
    def __init__(
        self,
        memory: HostMemory,
        num_qubits: int = 16,
        coupling: CouplingMap | None = None,
        timing: TimingModel | None = None,
        seed: int = 0,
        cache_capacity: int = 1024,
        supports_fidelity: bool = True,
        supports_latency: bool = True,
    ):
        if not 1 <= num_qubits <= 16:
            raise ValueError(f"num_qubits={num_qubits} outside 1..16")
        coupling = coupling if coupling is not None else CouplingMap.line(num_qubits)
        if coupling.num_qubits != num_qubits:
            raise ValueError("coupling map size must match num_qubits")
        if not coupling.is_connected():
            raise ValueError("coupling map must be connected")
        self.memory = memory
        self.num_qubits = num_qubits
        self.coupling = coupling
        self.timing = timing if timing is not None else TimingModel()
        self.seed = seed & _MASK64
        self.supports_fidelity = supports_fidelity
        self.supports_latency = supports_latency
        self._cache_capacity = cache_capacity
        self.cache = TranspileCache(cache_capacity)
        self._lock = threading.RLock()
        self._sink = None
        self._pumping = False
        self._pump_again = False
        self._busy = False
        self._clock_ns = 0
        self._zero_dynamic_state()

    def _zero_dynamic_state(self) -> None:
        self._ctrl = 0
        self._doorbell = 0
        self._sq_base_lo = 0
        self._sq_base_hi = 0
        self._sq_len = 0
        self._cq_base_lo = 0
        self._cq_base_hi = 0
        self._cq_len = 0
        self._cq_head = 0
        self._irq_mask = 0
        self._irq_status = 0
        self._err_code = ERR_OK
        self._sq_head = 0
        self._cq_tail = 0

    # ---- MMIO ----

    def mmio_read(self, offset: int) -> int:
        with self._lock:
            if offset == REG_MAGIC:
                return DEVICE_MAGIC
            if offset == REG_VERSION:
                return DEVICE_VERSION
            if offset == REG_CAPS:
                caps = self.num_qubits & 0xFF
                if self.supports_fidelity:
                    caps |= CAPS_FIDELITY
                if self.supports_latency:
                    caps |= CAPS_LATENCY
                return caps
            if offset == REG_CTRL:
                return self._ctrl
            if offset == REG_STATUS:
                status = 0
                if self._ctrl & CTRL_ENABLE:
                    status |= STATUS_READY
                if self._busy:
                    status |= STATUS_BUSY
                if self._err_code != ERR_OK:
                    status |= STATUS_ERROR
                return status
            if offset == REG_DOORBELL:
                return self._doorbell
            if offset == REG_SQ_BASE_LO:
                return self._sq_base_lo
            if offset == REG_SQ_BASE_HI:
                return self._sq_base_hi
            if offset == REG_SQ_LEN:
                return self._sq_len
            if offset == REG_CQ_BASE_LO:
                return self._cq_base_lo
            if offset == REG_CQ_BASE_HI:
                return self._cq_base_hi
            if offset == REG_CQ_LEN:
                return self._cq_len
            if offset == REG_CQ_HEAD:
                return self._cq_head
            if offset == REG_IRQ_MASK:
                return self._irq_mask
            if offset == REG_IRQ_STATUS:
                return self._irq_status
            if offset == REG_ERR_CODE:
                return self._err_code
            return MMIO_UNMAPPED

    def mmio_write(self, offset: int, value: int) -> None:
        value &= 0xFFFFFFFF
        with self._lock:
            if offset == REG_CTRL:
                if value & CTRL_RESET:
                    self._reset()
                self._ctrl = value & (CTRL_ENABLE | CTRL_MODE)
                self._pump()
            elif offset == REG_DOORBELL:
                if value >= self._sq_len:
                    self._err_code = ERR_BAD_DOORBELL
                else:
                    self._doorbell = value
                    self._pump()
            elif offset == REG_SQ_BASE_LO:
                self._sq_base_lo = value
            elif offset == REG_SQ_BASE_HI:
                self._sq_base_hi = value
            elif offset == REG_SQ_LEN:
                self._sq_len = value
            elif offset == REG_CQ_BASE_LO:
                self._cq_base_lo = value
            elif offset == REG_CQ_BASE_HI:
                self._cq_base_hi = value
            elif offset == REG_CQ_LEN:
                self._cq_len = value
            elif offset == REG_CQ_HEAD:
                self._cq_head = value
                self._pump()
            elif offset == REG_IRQ_MASK:
                was_enabled = bool(self._irq_mask & IRQ_DONE)
                self._irq_mask = value
                if not was_enabled and (value & IRQ_DONE) and (self._irq_status & IRQ_DONE):
                    self._fire_sink()  # pending notification delivered on unmask
            elif offset == REG_IRQ_STATUS:
                self._irq_status &= ~value  # write-1-to-clear
            # MAGIC/VERSION/CAPS/STATUS/ERR_CODE and unmapped offsets: ignored.

    def _reset(self) -> None:
        self._zero_dynamic_state()
        self._busy = False
        self._clock_ns = 0
        self.cache = TranspileCache(self._cache_capacity)

    # ---- DMA ----

    def dma_read(self, addr: int, length: int) -> bytes:
        with self._lock:
            try:
                return self.memory.read(addr, length)
            except OutOfBounds as exc:
                self._err_code = ERR_DMA_FAULT
                raise DmaFault(str(exc)) from exc

    def dma_write(self, addr: int, data: bytes) -> None:
        with self._lock:
            try:
                self.memory.write(addr, data)
            except OutOfBounds as exc:
                self._err_code = ERR_DMA_FAULT
                raise DmaFault(str(exc)) from exc

    # ---- interrupts ----

    def register_interrupt_sink(self, sink) -> None:
        with self._lock:
            self._sink = sink

    def _fire_sink(self) -> None:
        if self._sink is not None:
            self._sink()

    # ---- model clock ----

    def model_time_ns(self) -> int:
        with self._lock:
            return self._clock_ns

    def advance_clock(self, ns: int) -> int:
        if ns < 0:
            raise ValueError("clock can only move forward")
        with self._lock:
            self._clock_ns += ns
            return self._clock_ns

    # ---- engine ----

    def _sq_base(self) -> int:
        return self._sq_base_lo | (self._sq_base_hi << 32)

    def _cq_base(self) -> int:
        return self._cq_base_lo | (self._cq_base_hi << 32)

    def _cq_full(self) -> bool:
        if self._cq_len == 0:
            return True
        return (self._cq_tail + 1) % self._cq_len == self._cq_head

    def _pump(self) -> None:
        # Reentrancy guard: sink callbacks may write CQ_HEAD and re-trigger.
        if self._pumping:
            self._pump_again = True
            return
        self._pumping = True
        try:
            while True:
                self._pump_again = False
                self._drain()
                if not self._pump_again:
                    break
        finally:
            self._pumping = False

    def _drain(self) -> None:
        while (self._ctrl & CTRL_ENABLE) and self._sq_len and self._sq_head != self._doorbell:
            if self._cq_full():
                return  # backpressure: wait for CQ_HEAD to advance
            try:
                raw = self.dma_read(
                    self._sq_base() + self._sq_head * DESCRIPTOR_SIZE, DESCRIPTOR_SIZE
                )
            except DmaFault:
                return  # ring misconfigured; wedged until reset
            descriptor = SubmissionDescriptor.unpack(raw)
            self._busy = True
            try:
                record = self._execute(descriptor)
                self._sq_head = (self._sq_head + 1) % self._sq_len
                self._append_completion(record)
            finally:
                self._busy = False

    def _execute(self, descriptor: SubmissionDescriptor) -> CompletionRecord:
        def failure(status: int) -> CompletionRecord:
            return CompletionRecord(descriptor.job_id, status, 0, 0, 0)

        try:
            payload = self.dma_read(descriptor.payload_addr, descriptor.payload_len)
        except DmaFault:
            return failure(ERR_DMA_FAULT)

        try:
            circuit = decode_binary(payload)
        except BadMagic:
            return failure(ERR_BAD_MAGIC)
        except UnsupportedVersion:
            return failure(ERR_UNSUPPORTED_VERSION)
        except QubitOutOfRange:
            return failure(ERR_QUBIT_OUT_OF_RANGE)
        except BadOpcode:
            return failure(ERR_BAD_OPCODE)
        except (DecodeError, InvalidCircuit):
            return failure(ERR_BAD_OPCODE)  # generic malformed-payload bucket

        if circuit.num_qubits > self.num_qubits:
            return failure(ERR_QUBIT_OUT_OF_RANGE)
        if descriptor.shots == 0:
            return failure(ERR_BAD_OPCODE)

        latency_mode = bool(self._ctrl & CTRL_MODE) or bool(
            descriptor.flags & FLAG_LATENCY_OVERRIDE
        )
        exec_ns = execution_term(self.timing, gate_counts_of(circuit), descriptor.shots)

        if latency_mode:
            histogram = Histogram(circuit.num_cbits, {0: descriptor.shots})
        else:
            if descriptor.flags & FLAG_TRANSPILE_BYPASS:
                target = circuit
            else:
                target = transpile(circuit, self.coupling, self.cache).circuit
            histogram = run_circuit(
                target, descriptor.shots, job_seed(self.seed, descriptor.job_id)
            )

        result = encode_result(histogram)
        try:
            result_addr = self.memory.alloc(len(result))
            self.dma_write(result_addr, result)
        except (HostMemoryExhausted, DmaFault):
            self._err_code = ERR_DMA_FAULT
            return failure(ERR_DMA_FAULT)

        if latency_mode:
            self._clock_ns += (
                transfer_term(self.timing, descriptor.payload_len)
                + exec_ns
                + completion_term(self.timing, len(result))
            )
        return CompletionRecord(
            descriptor.job_id, ERR_OK, len(result), result_addr, exec_ns
        )

    def _append_completion(self, record: CompletionRecord) -> None:
        try:
            self.dma_write(self._cq_base() + self._cq_tail * RECORD_SIZE, record.pack())
        except DmaFault:
            return  # completion ring misconfigured; wedged until reset
        self._cq_tail = (self._cq_tail + 1) % self._cq_len
        was = self._irq_status
        self._irq_status |= IRQ_DONE
        if not (was & IRQ_DONE) and (self._irq_mask & IRQ_DONE):
            self._fire_sink()
