"""Host-side runtime: open a device, submit circuit payloads, await results.

Job lifecycle: CREATED -> QUEUED -> DISPATCHED -> RUNNING -> DONE | FAILED,
with QUEUED -> CANCELLED the only other legal move.  Every handle assigns
job ids from its own counter starting at 1, so ids from different handles
live in disjoint namespaces and must never be compared.

Scheduling: priorities run 0 (highest) through 7; the dispatcher always
picks the lowest (priority, submission order) pair, so equal priorities
are FIFO.  The queue holds at most queue_high_water jobs; submit raises
QueueSaturated beyond that.  submit validates the 16-byte payload header
(magic, version, qubit and classical-bit counts, length consistency) and
raises BadHeader without consuming a job id; anything deeper is the
device's call and surfaces as a FAILED job carrying its status code.

The handle owns one scheduler thread.  Each dispatch stages the payload
into host memory, writes a submission descriptor, and rings the doorbell;
completions arrive through the device interrupt sink, which drains the
completion ring (zeroing consumed slots and advancing CQ_HEAD) and moves
jobs to their terminal state.  In latency mode every dispatch first
advances the model clock by t_dispatch_ns, the fixed scheduler overhead
constant, before the dispatch timestamp is taken.

Model timestamps (submit, dispatch, done) are read from the device clock
and drive latency profiling; wall-clock counterparts are kept for
diagnostics only and never appear in serialized reports.
"""
from __future__ import annotations

import heapq
import struct
import threading
import time
from dataclasses import dataclass
from enum import Enum

from .binfmt import HEADER_SIZE, INSTRUCTION_SIZE, MAGIC, VERSION
from .circuit import MAX_CBITS, MAX_QUBITS
from .qpx import (
    CAPS_FIDELITY,
    CAPS_LATENCY,
    CTRL_ENABLE,
    CTRL_MODE,
    DESCRIPTOR_SIZE,
    ERR_CANCELLED,
    ERR_DMA_FAULT,
    IRQ_DONE,
    RECORD_SIZE,
    REG_CAPS,
    REG_CQ_BASE_HI,
    REG_CQ_BASE_LO,
    REG_CQ_HEAD,
    REG_CQ_LEN,
    REG_CTRL,
    REG_DOORBELL,
    REG_IRQ_MASK,
    REG_IRQ_STATUS,
    REG_MAGIC,
    REG_SQ_BASE_HI,
    REG_SQ_BASE_LO,
    REG_SQ_LEN,
    REG_VERSION,
    CompletionRecord,
    HostMemory,
    HostMemoryExhausted,
    QpxDevice,
    SubmissionDescriptor,
    decode_result,
)
from .sim import Histogram
from .timing import TimingModel
from .transpile import CouplingMap, NATIVE_GATES

ERROR_NAMES = {
    0: "OK",
    1: "BAD_MAGIC",
    2: "UNSUPPORTED_VERSION",
    3: "QUBIT_OUT_OF_RANGE",
    4: "BAD_OPCODE",
    5: "DMA_FAULT",
    6: "BAD_DOORBELL",
    7: "CANCELLED",
}


class JobState(Enum):
    CREATED = "created"
    QUEUED = "queued"
    DISPATCHED = "dispatched"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"
    CANCELLED = "cancelled"


TERMINAL_STATES = frozenset({JobState.DONE, JobState.FAILED, JobState.CANCELLED})

ALLOWED_TRANSITIONS = {
    JobState.CREATED: frozenset({JobState.QUEUED}),
    JobState.QUEUED: frozenset({JobState.DISPATCHED, JobState.CANCELLED}),
    JobState.DISPATCHED: frozenset({JobState.RUNNING, JobState.FAILED}),
    JobState.RUNNING: frozenset({JobState.DONE, JobState.FAILED}),
    JobState.DONE: frozenset(),
    JobState.FAILED: frozenset(),
    JobState.CANCELLED: frozenset(),
}


class QalError(Exception):
    """Base class for host runtime errors."""


class ConfigInvalid(QalError):
    pass


class BadHeader(QalError):
    pass


class QueueSaturated(QalError):
    pass


class UnknownJob(QalError):
    pass


class NotFinished(QalError):
    pass


class TooLateToCancel(QalError):
    pass


class TimedOut(QalError):
    pass


class JobFailed(QalError):
    def __init__(self, job_id: int, code: int):
        self.job_id = job_id
        self.code = code
        name = ERROR_NAMES.get(code, "UNKNOWN")
        super().__init__(f"job {job_id} failed: {name} (code {code})")


_COUPLING_PRESETS = {
    "line": CouplingMap.line,
    "ring": CouplingMap.ring,
    "full": CouplingMap.full,
}


@dataclass(frozen=True)
class DeviceConfig:
    """Everything needed to open a device.  coupling accepts a preset name
    ("line", "ring", "full"), an edge list, or a CouplingMap."""

    num_qubits: int = 16
    coupling: object = "line"
    mode: str = "fidelity"
    timing: TimingModel | None = None
    seed: int = 0
    sq_len: int = 64
    cq_len: int = 64
    queue_high_water: int = 4096
    host_mem_bytes: int = 16 * 1024 * 1024
    t_dispatch_ns: int = 250
    cache_capacity: int = 1024

    def resolved_timing(self) -> TimingModel:
        return self.timing if self.timing is not None else TimingModel()

    def resolved_coupling(self) -> CouplingMap:
        if isinstance(self.coupling, CouplingMap):
            return self.coupling
        if isinstance(self.coupling, str):
            preset = _COUPLING_PRESETS.get(self.coupling)
            if preset is None:
                raise ConfigInvalid(f"unknown coupling preset {self.coupling!r}")
            return preset(self.num_qubits)
        try:
            return CouplingMap(self.num_qubits, self.coupling)
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"bad coupling edges: {exc}") from exc

    def validate(self) -> None:
        if not isinstance(self.num_qubits, int) or not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ConfigInvalid(f"num_qubits={self.num_qubits!r} outside 1..{MAX_QUBITS}")
        if self.mode not in ("fidelity", "latency"):
            raise ConfigInvalid(f"mode={self.mode!r} is not 'fidelity' or 'latency'")
        if self.timing is not None and not isinstance(self.timing, TimingModel):
            raise ConfigInvalid("timing must be a TimingModel")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigInvalid("seed must be a non-negative integer")
        for name in ("sq_len", "cq_len"):
            value = getattr(self, name)
            # capacity of a ring with an open slot is len - 1, so 2 is the floor
            if not isinstance(value, int) or not 2 <= value <= 65536:
                raise ConfigInvalid(f"{name}={value!r} outside 2..65536")
        if not isinstance(self.queue_high_water, int) or self.queue_high_water < 1:
            raise ConfigInvalid("queue_high_water must be >= 1")
        if not isinstance(self.host_mem_bytes, int) or self.host_mem_bytes < 4096:
            raise ConfigInvalid("host_mem_bytes must be >= 4096")
        if not isinstance(self.t_dispatch_ns, int) or self.t_dispatch_ns < 0:
            raise ConfigInvalid("t_dispatch_ns must be a non-negative integer")
        if not isinstance(self.cache_capacity, int) or self.cache_capacity < 1:
            raise ConfigInvalid("cache_capacity must be >= 1")
        coupling = self.resolved_coupling()
        if coupling.num_qubits != self.num_qubits:
            raise ConfigInvalid(
                f"coupling covers {coupling.num_qubits} qubits, device has {self.num_qubits}"
            )
        if not coupling.is_connected():
            raise ConfigInvalid("coupling map must be connected")


@dataclass(frozen=True)
class DeviceInfo:
    num_qubits: int
    version: int
    modes: tuple
    native_gates: tuple
    coupling_edges: tuple
    sq_len: int
    cq_len: int
    queue_high_water: int

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "version": self.version,
            "modes": list(self.modes),
            "native_gates": list(self.native_gates),
            "coupling_edges": [list(edge) for edge in self.coupling_edges],
            "sq_len": self.sq_len,
            "cq_len": self.cq_len,
            "queue_high_water": self.queue_high_water,
        }


@dataclass(frozen=True)
class JobView:
    """Read-only snapshot of one job's bookkeeping."""

    job_id: int
    state: JobState
    priority: int
    shots: int
    payload_len: int
    flags: int
    error_code: int | None
    exec_time_ns: int | None
    result_len: int | None
    submit_wall_ns: int
    dispatch_wall_ns: int | None
    done_wall_ns: int | None
    submit_model_ns: int
    dispatch_model_ns: int | None
    done_model_ns: int | None
    history: tuple


class _Job:
    __slots__ = (
        "job_id", "payload", "shots", "priority", "flags", "state", "history",
        "error_code", "histogram", "exec_time_ns", "result_len",
        "submit_wall_ns", "dispatch_wall_ns", "done_wall_ns",
        "submit_model_ns", "dispatch_model_ns", "done_model_ns",
    )

    def __init__(self, job_id, payload, shots, priority, flags, submit_wall, submit_model):
        self.job_id = job_id
        self.payload = payload
        self.shots = shots
        self.priority = priority
        self.flags = flags
        self.state = JobState.CREATED
        self.history = [JobState.CREATED]
        self.error_code = None
        self.histogram = None
        self.exec_time_ns = None
        self.result_len = None
        self.submit_wall_ns = submit_wall
        self.dispatch_wall_ns = None
        self.done_wall_ns = None
        self.submit_model_ns = submit_model
        self.dispatch_model_ns = None
        self.done_model_ns = None


def _validate_header(payload: bytes) -> None:
    if not isinstance(payload, (bytes, bytearray)):
        raise BadHeader("payload must be bytes")
    if len(payload) < HEADER_SIZE:
        raise BadHeader(f"payload is {len(payload)} bytes, header needs {HEADER_SIZE}")
    magic, version, num_qubits, num_cbits, _reserved, num_instructions = struct.unpack_from(
        "<IHHHHI", payload
    )
    if magic != MAGIC:
        raise BadHeader(f"bad magic 0x{magic:08X}")
    if version != VERSION:
        raise BadHeader(f"unsupported version {version}")
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise BadHeader(f"num_qubits={num_qubits} outside 1..{MAX_QUBITS}")
    if num_cbits > MAX_CBITS:
        raise BadHeader(f"num_cbits={num_cbits} exceeds {MAX_CBITS}")
    expected = HEADER_SIZE + num_instructions * INSTRUCTION_SIZE
    if len(payload) != expected:
        raise BadHeader(f"payload is {len(payload)} bytes, header implies {expected}")


class DeviceHandle:
    """One opened device: rings wired up, interrupts unmasked, scheduler
    thread running.  Use as a context manager or call close()."""

    def __init__(self, config: DeviceConfig):
        config.validate()
        self.config = config
        self.timing = config.resolved_timing()
        self.mode = config.mode
        self.memory = HostMemory(config.host_mem_bytes)
        self.device = QpxDevice(
            self.memory,
            num_qubits=config.num_qubits,
            coupling=config.resolved_coupling(),
            timing=self.timing,
            seed=config.seed,
            cache_capacity=config.cache_capacity,
        )
        self._sq_len = config.sq_len
        self._cq_len = config.cq_len
        self._sq_base = self.memory.alloc(config.sq_len * DESCRIPTOR_SIZE)
        self._cq_base = self.memory.alloc(config.cq_len * RECORD_SIZE)
        device = self.device
        device.mmio_write(REG_SQ_BASE_LO, self._sq_base & 0xFFFFFFFF)
        device.mmio_write(REG_SQ_BASE_HI, self._sq_base >> 32)
        device.mmio_write(REG_SQ_LEN, config.sq_len)
        device.mmio_write(REG_CQ_BASE_LO, self._cq_base & 0xFFFFFFFF)
        device.mmio_write(REG_CQ_BASE_HI, self._cq_base >> 32)
        device.mmio_write(REG_CQ_LEN, config.cq_len)
        device.register_interrupt_sink(self._on_irq)
        device.mmio_write(REG_IRQ_MASK, IRQ_DONE)
        ctrl = CTRL_ENABLE | (CTRL_MODE if config.mode == "latency" else 0)
        device.mmio_write(REG_CTRL, ctrl)

        self._cond = threading.Condition()
        self._jobs: dict[int, _Job] = {}
        self._heap: list[tuple[int, int, int]] = []
        self._next_id = 1
        self._queued = 0
        self._in_flight = 0
        self._submitted = 0
        self._dispatched = 0
        self._completed = 0
        self._failed = 0
        self._cancelled = 0
        self._paused = False
        self._closing = False
        self._closed = False
        self._sq_tail = 0
        self._cq_head_mirror = 0
        self._irq_active = False
        self._scheduler = threading.Thread(
            target=self._scheduler_loop, name="qal-scheduler", daemon=True
        )
        self._scheduler.start()

    # ---- submission API ----

    def submit(
        self,
        payload: bytes,
        shots: int = 1000,
        priority: int = 3,
        *,
        force_latency: bool = False,
        transpile_bypass: bool = False,
    ) -> int:
        _validate_header(payload)
        if not isinstance(shots, int) or shots < 1:
            raise ValueError(f"shots={shots!r} must be a positive integer")
        if not isinstance(priority, int) or not 0 <= priority <= 7:
            raise ValueError(f"priority={priority!r} outside 0..7")
        flags = 0
        if force_latency:
            flags |= 1 << 0
        if transpile_bypass:
            flags |= 1 << 1
        submit_wall = time.monotonic_ns()
        submit_model = self.device.model_time_ns()
        with self._cond:
            self._check_open_locked()
            if self._queued >= self.config.queue_high_water:
                raise QueueSaturated(
                    f"queue already holds {self._queued} jobs (high water "
                    f"{self.config.queue_high_water})"
                )
            job_id = self._next_id
            self._next_id += 1
            job = _Job(job_id, bytes(payload), shots, priority, flags, submit_wall, submit_model)
            self._jobs[job_id] = job
            self._transition_locked(job, JobState.QUEUED)
            heapq.heappush(self._heap, (priority, job_id, job_id))
            self._queued += 1
            self._submitted += 1
            self._cond.notify_all()
        return job_id

    def cancel(self, job_id: int) -> None:
        with self._cond:
            job = self._job_locked(job_id)
            if job.state is not JobState.QUEUED:
                raise TooLateToCancel(
                    f"job {job_id} is {job.state.value}, only queued jobs can be cancelled"
                )
            job.error_code = ERR_CANCELLED
            self._transition_locked(job, JobState.CANCELLED)
            self._queued -= 1
            self._cancelled += 1
            self._cond.notify_all()

    def wait(self, job_id: int, timeout_s: float | None = None) -> JobState:
        with self._cond:
            job = self._job_locked(job_id)
            finished = self._cond.wait_for(
                lambda: job.state in TERMINAL_STATES, timeout=timeout_s
            )
            if not finished:
                raise TimedOut(f"job {job_id} still {job.state.value} after {timeout_s}s")
            return job.state

    def state(self, job_id: int) -> JobState:
        with self._cond:
            return self._job_locked(job_id).state

    def results(self, job_id: int) -> Histogram:
        with self._cond:
            job = self._job_locked(job_id)
            if job.state is JobState.DONE:
                return job.histogram
            if job.state in (JobState.FAILED, JobState.CANCELLED):
                raise JobFailed(job_id, job.error_code)
            raise NotFinished(f"job {job_id} is {job.state.value}")

    def free(self, job_id: int) -> None:
        with self._cond:
            job = self._job_locked(job_id)
            if job.state not in TERMINAL_STATES:
                raise NotFinished(f"job {job_id} is {job.state.value}, cannot free")
            del self._jobs[job_id]

    def inspect(self, job_id: int) -> JobView:
        with self._cond:
            job = self._job_locked(job_id)
            return JobView(
                job_id=job.job_id,
                state=job.state,
                priority=job.priority,
                shots=job.shots,
                payload_len=len(job.payload),
                flags=job.flags,
                error_code=job.error_code,
                exec_time_ns=job.exec_time_ns,
                result_len=job.result_len,
                submit_wall_ns=job.submit_wall_ns,
                dispatch_wall_ns=job.dispatch_wall_ns,
                done_wall_ns=job.done_wall_ns,
                submit_model_ns=job.submit_model_ns,
                dispatch_model_ns=job.dispatch_model_ns,
                done_model_ns=job.done_model_ns,
                history=tuple(job.history),
            )

    def history(self, job_id: int) -> tuple:
        with self._cond:
            return tuple(self._job_locked(job_id).history)

    # ---- device introspection ----

    def query(self) -> DeviceInfo:
        device = self.device
        if device.mmio_read(REG_MAGIC) != 0x51504558:
            raise QalError("device identification failed")
        caps = device.mmio_read(REG_CAPS)
        modes = []
        if caps & CAPS_FIDELITY:
            modes.append("fidelity")
        if caps & CAPS_LATENCY:
            modes.append("latency")
        return DeviceInfo(
            num_qubits=caps & 0xFF,
            version=device.mmio_read(REG_VERSION),
            modes=tuple(modes),
            native_gates=tuple(sorted(gate.name for gate in NATIVE_GATES)),
            coupling_edges=device.coupling.canonical_edges(),
            sq_len=device.mmio_read(REG_SQ_LEN),
            cq_len=device.mmio_read(REG_CQ_LEN),
            queue_high_water=self.config.queue_high_water,
        )

    def stats(self) -> dict:
        with self._cond:
            snapshot = {
                "submitted": self._submitted,
                "queued": self._queued,
                "dispatched": self._dispatched,
                "in_flight": self._in_flight,
                "completed": self._completed,
                "failed": self._failed,
                "cancelled": self._cancelled,
            }
        cache = self.device.cache
        snapshot["transpile_cache"] = {
            "hits": cache.hits,
            "misses": cache.misses,
            "evictions": cache.evictions,
            "entries": len(cache),
        }
        snapshot["model_time_ns"] = self.device.model_time_ns()
        return snapshot

    def pause_dispatch(self) -> None:
        with self._cond:
            self._paused = True

    def resume_dispatch(self) -> None:
        with self._cond:
            self._paused = False
            self._cond.notify_all()

    def close(self) -> None:
        with self._cond:
            if self._closed:
                return
            self._closing = True
            self._cond.notify_all()
        self._scheduler.join()
        self.device.mmio_write(REG_CTRL, 0)
        self._closed = True

    def __enter__(self) -> "DeviceHandle":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    # ---- internals ----

    def _check_open_locked(self) -> None:
        if self._closing or self._closed:
            raise QalError("device handle is closed")

    def _job_locked(self, job_id: int) -> _Job:
        job = self._jobs.get(job_id)
        if job is None:
            raise UnknownJob(f"no job {job_id}")
        return job

    def _transition_locked(self, job: _Job, to: JobState) -> None:
        if to not in ALLOWED_TRANSITIONS[job.state]:
            raise QalError(f"illegal transition {job.state.value} -> {to.value}")
        job.state = to
        job.history.append(to)

    def _pick_locked(self):
        if self._paused or self._in_flight >= self._sq_len - 1:
            return None
        while self._heap:
            _priority, _seq, job_id = self._heap[0]
            job = self._jobs.get(job_id)
            if job is None or job.state is not JobState.QUEUED:
                heapq.heappop(self._heap)  # cancelled or freed; drop lazily
                continue
            heapq.heappop(self._heap)
            return job
        return None

    def _scheduler_loop(self) -> None:
        while True:
            with self._cond:
                job = None
                while job is None:
                    if self._closing:
                        return
                    job = self._pick_locked()
                    if job is None:
                        self._cond.wait()
                self._transition_locked(job, JobState.DISPATCHED)
                self._queued -= 1
                self._dispatched += 1
                self._in_flight += 1
            # Dispatch overhead is charged to the model clock before the
            # dispatch stamp so queue_wait includes it.
            if self.mode == "latency" and self.config.t_dispatch_ns:
                self.device.advance_clock(self.config.t_dispatch_ns)
            dispatch_wall = time.monotonic_ns()
            dispatch_model = self.device.model_time_ns()
            doorbell = self._stage(job)
            with self._cond:
                job.dispatch_wall_ns = dispatch_wall
                job.dispatch_model_ns = dispatch_model
                if doorbell is None:
                    job.error_code = ERR_DMA_FAULT
                    job.done_wall_ns = time.monotonic_ns()
                    job.done_model_ns = dispatch_model
                    self._transition_locked(job, JobState.FAILED)
                    self._failed += 1
                    self._in_flight -= 1
                    self._cond.notify_all()
                    continue
                self._transition_locked(job, JobState.RUNNING)
            # The doorbell write runs the engine synchronously; completions
            # land via _on_irq before this call returns.
            self.device.mmio_write(REG_DOORBELL, doorbell)

    def _stage(self, job: _Job):
        """Copy the payload into host memory and write the descriptor.
        Returns the new doorbell value, or None if staging failed."""
        try:
            payload_addr = self.memory.alloc(len(job.payload))
        except HostMemoryExhausted:
            return None
        self.memory.write(payload_addr, job.payload)
        descriptor = SubmissionDescriptor(
            job_id=job.job_id,
            payload_addr=payload_addr,
            payload_len=len(job.payload),
            shots=job.shots,
            flags=job.flags,
        )
        slot = self._sq_tail
        self.memory.write(self._sq_base + slot * DESCRIPTOR_SIZE, descriptor.pack())
        self._sq_tail = (slot + 1) % self._sq_len
        return self._sq_tail

    def _on_irq(self) -> None:
        # Runs inside the device lock.  Ack first, then drain; repeat until
        # a full scan finds nothing so no completion is left unacked.
        if self._irq_active:
            return
        self._irq_active = True
        try:
            while True:
                self.device.mmio_write(REG_IRQ_STATUS, IRQ_DONE)
                if not self._drain_cq():
                    break
        finally:
            self._irq_active = False

    def _drain_cq(self) -> int:
        records = []
        head = self._cq_head_mirror
        while True:
            addr = self._cq_base + head * RECORD_SIZE
            record = CompletionRecord.unpack(self.memory.read(addr, RECORD_SIZE))
            if record.job_id == 0:
                break
            records.append(record)
            self.memory.write(addr, bytes(RECORD_SIZE))  # zero the consumed slot
            head = (head + 1) % self._cq_len
        if not records:
            return 0
        self._cq_head_mirror = head
        self.device.mmio_write(REG_CQ_HEAD, head)
        for record in records:
            self._apply_completion(record)
        return len(records)

    def _apply_completion(self, record: CompletionRecord) -> None:
        done_wall = time.monotonic_ns()
        done_model = self.device.model_time_ns()
        with self._cond:
            job = self._jobs.get(record.job_id)
            if job is None:
                return
            job.done_wall_ns = done_wall
            job.done_model_ns = done_model
            job.exec_time_ns = record.exec_time_ns
            if record.status == 0:
                data = self.memory.read(record.result_addr, record.result_len)
                job.histogram = decode_result(data)
                job.result_len = record.result_len
                self._transition_locked(job, JobState.DONE)
                self._completed += 1
            else:
                job.error_code = record.status
                self._transition_locked(job, JobState.FAILED)
                self._failed += 1
            self._in_flight -= 1
            self._cond.notify_all()


def device_open(config: DeviceConfig | None = None) -> DeviceHandle:
    """Open a virtual device and return a live handle."""
    return DeviceHandle(config if config is not None else DeviceConfig())
