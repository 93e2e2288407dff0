"""Deterministic latency model.

A job's modeled time decomposes into three device phases:

  transfer   = t_mmio_write + t_dma_setup + payload_len * t_dma_per_byte
  execution  = shots * (t_shot_overhead + n1q * t_gate_1q + n2q * t_gate_2q
                        + nmeas * t_measure + nreset * t_reset)
  completion = t_dma_setup + result_len * t_dma_per_byte + t_irq_delivery

predict_job_latency is their sum: one doorbell write, descriptor/payload
DMA in, per-shot execution, result DMA out, one interrupt.  All parameters
are non-negative integer nanoseconds.  The shipped defaults below are
placeholders for exercising the model, not measurements of any hardware.

Gate counts come from the instruction stream as written (pre-decomposition):
n1q counts the single-qubit unitaries, n2q counts CNOT/CZ/SWAP, NOP and
BARRIER cost nothing.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields

from .circuit import Circuit, Opcode

PARAM_NAMES = (
    "t_mmio_write",
    "t_mmio_read",
    "t_dma_setup",
    "t_dma_per_byte",
    "t_irq_delivery",
    "t_gate_1q",
    "t_gate_2q",
    "t_measure",
    "t_reset",
    "t_shot_overhead",
)


@dataclass(frozen=True)
class TimingModel:
    t_mmio_write: int = 100
    t_mmio_read: int = 50
    t_dma_setup: int = 500
    t_dma_per_byte: int = 1
    t_irq_delivery: int = 200
    t_gate_1q: int = 20
    t_gate_2q: int = 40
    t_measure: int = 300
    t_reset: int = 0
    t_shot_overhead: int = 0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"{f.name} must be an integer (got {value!r})")
            if value < 0:
                raise ValueError(f"{f.name} must be non-negative (got {value})")

    @classmethod
    def from_dict(cls, values: dict) -> "TimingModel":
        unknown = sorted(set(values) - set(PARAM_NAMES))
        if unknown:
            raise ValueError(f"unknown timing parameter(s): {', '.join(unknown)}")
        missing = sorted(set(PARAM_NAMES) - set(values))
        if missing:
            raise ValueError(f"missing timing parameter(s): {', '.join(missing)}")
        return cls(**{name: values[name] for name in PARAM_NAMES})

    def to_dict(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in PARAM_NAMES}


def load_timing_config(path: str) -> TimingModel:
    """Read a timing model from JSON ({"t_mmio_write": 100, ...}) or from
    flat key/value lines ("t_mmio_write = 100", '#' comments)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_timing_config(text)


def parse_timing_config(text: str) -> TimingModel:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ValueError("timing config JSON must be an object")
        values = {}
        for key, value in raw.items():
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"timing parameter {key} must be an integer (got {value!r})")
            values[key] = value
        return TimingModel.from_dict(values)

    values = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {line_no}: expected 'name = value'")
        key = key.strip()
        value = value.strip()
        try:
            values[key] = int(value)
        except ValueError:
            raise ValueError(f"line {line_no}: {key} must be an integer (got {value!r})") from None
    return TimingModel.from_dict(values)


@dataclass(frozen=True)
class GateCounts:
    n1q: int = 0
    n2q: int = 0
    nmeas: int = 0
    nreset: int = 0


_ONE_QUBIT_GATES = frozenset(
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
    }
)
_TWO_QUBIT_GATES = frozenset({Opcode.CNOT, Opcode.CZ, Opcode.SWAP})


def gate_counts_of(circuit: Circuit) -> GateCounts:
    n1q = n2q = nmeas = nreset = 0
    for ins in circuit.instructions:
        op = ins.opcode
        if op in _ONE_QUBIT_GATES:
            n1q += 1
        elif op in _TWO_QUBIT_GATES:
            n2q += 1
        elif op is Opcode.MEASURE:
            nmeas += 1
        elif op is Opcode.RESET:
            nreset += 1
    return GateCounts(n1q, n2q, nmeas, nreset)


def transfer_term(model: TimingModel, payload_len: int) -> int:
    return model.t_mmio_write + model.t_dma_setup + payload_len * model.t_dma_per_byte


def execution_term(model: TimingModel, counts: GateCounts, shots: int) -> int:
    per_shot = (
        model.t_shot_overhead
        + counts.n1q * model.t_gate_1q
        + counts.n2q * model.t_gate_2q
        + counts.nmeas * model.t_measure
        + counts.nreset * model.t_reset
    )
    return shots * per_shot

def completion_term(model: TimingModel, result_len: int) -> int:
    return model.t_dma_setup + result_len * model.t_dma_per_byte + model.t_irq_delivery


def predict_job_latency(
    model: TimingModel,
    payload_len: int,
    result_len: int,
    counts: GateCounts,
    shots: int,
) -> int:
    """Modeled nanoseconds for one job, doorbell to interrupt."""
    return (
        transfer_term(model, payload_len)
        + execution_term(model, counts, shots)
        + completion_term(model, result_len)
    )
