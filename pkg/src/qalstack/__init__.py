"""Software-only quantum accelerator stack: circuit IR with binary and
text codecs, a statevector engine, a register-level virtual device with
rings and interrupts, a host runtime with priority scheduling, an
on-device transpiler, and a deterministic latency model.
"""
from .asm import AsmError, AsmSemanticError, AsmSyntaxError, emit_text, format_angle, parse_text
from .binfmt import (
    BadMagic,
    BadOpcode,
    DecodeError,
    NonCanonicalField,
    TrailingData,
    TruncatedPayload,
    UnsupportedVersion,
    decode_binary,
    encode_binary,
)
from .circuit import (
    MAX_CBITS,
    MAX_QUBITS,
    Circuit,
    Instruction,
    InvalidCircuit,
    Opcode,
    QubitOutOfRange,
    bell_pair,
    f32,
)
from .commands import (
    CancelCommand,
    CancelReply,
    CheckCommand,
    CheckReply,
    FreeCommand,
    FreeReply,
    GetResultsCommand,
    QueryCommand,
    QueryReply,
    ResultsReply,
    SubmitCommand,
    SubmitReply,
    WaitCommand,
    WaitReply,
    execute,
)
from .profile import JobSpec, LatencyRecord, LatencyReport, ProfileError, profile_run
from .qal import (
    BadHeader,
    ConfigInvalid,
    DeviceConfig,
    DeviceHandle,
    DeviceInfo,
    JobFailed,
    JobState,
    JobView,
    NotFinished,
    QalError,
    QueueSaturated,
    TimedOut,
    TooLateToCancel,
    UnknownJob,
    device_open,
)
from .qpx import (
    CompletionRecord,
    DmaFault,
    HostMemory,
    QpxDevice,
    SubmissionDescriptor,
    decode_result,
    encode_result,
    job_seed,
)
from .sim import Histogram, run_circuit, statevector_of
from .timing import (
    GateCounts,
    TimingModel,
    completion_term,
    execution_term,
    gate_counts_of,
    load_timing_config,
    parse_timing_config,
    predict_job_latency,
    transfer_term,
)
from .transpile import (
    CouplingMap,
    TranspileCache,
    TranspiledCircuit,
    decompose,
    route,
    transpile,
)

__version__ = "0.1.0"

__all__ = [
    "AsmError", "AsmSemanticError", "AsmSyntaxError", "BadHeader", "BadMagic",
    "BadOpcode", "CancelCommand", "CancelReply", "CheckCommand", "CheckReply",
    "Circuit", "CompletionRecord", "ConfigInvalid", "CouplingMap", "DecodeError",
    "DeviceConfig", "DeviceHandle", "DeviceInfo", "DmaFault", "FreeCommand",
    "FreeReply", "GateCounts", "GetResultsCommand", "Histogram", "Instruction",
    "InvalidCircuit", "JobFailed", "JobSpec", "JobState", "JobView",
    "LatencyRecord", "LatencyReport", "MAX_CBITS", "MAX_QUBITS",
    "NonCanonicalField", "NotFinished", "Opcode", "ProfileError", "QalError",
    "QpxDevice", "QueryCommand", "QueryReply", "QueueSaturated", "QubitOutOfRange",
    "ResultsReply", "SubmissionDescriptor", "SubmitCommand", "SubmitReply",
    "TimedOut", "TimingModel", "TooLateToCancel", "TrailingData",
    "TranspileCache", "TranspiledCircuit", "TruncatedPayload", "UnknownJob",
    "UnsupportedVersion", "WaitCommand", "WaitReply", "HostMemory",
    "bell_pair", "completion_term", "decode_binary", "decode_result",
    "decompose", "device_open", "emit_text", "encode_binary", "encode_result",
    "execute", "execution_term", "f32", "format_angle", "gate_counts_of",
    "job_seed", "load_timing_config", "parse_text", "parse_timing_config",
    "predict_job_latency", "profile_run", "route", "run_circuit",
    "statevector_of", "transfer_term", "transpile",
]
