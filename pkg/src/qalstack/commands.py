"""Typed request/response commands over an open device handle.

Every interaction with a device is expressible as one of the frozen
command records below; execute() dispatches a command against a handle
and returns the matching reply record.  This keeps host tooling (the CLI,
tests, scripted drivers) on a single narrow waist instead of scattering
ad-hoc method calls.
"""
from __future__ import annotations

from dataclasses import dataclass

from .qal import DeviceHandle, DeviceInfo, JobState
from .sim import Histogram


@dataclass(frozen=True)
class SubmitCommand:
    payload: bytes
    shots: int = 1000
    priority: int = 3
    force_latency: bool = False
    transpile_bypass: bool = False


@dataclass(frozen=True)
class SubmitReply:
    job_id: int


@dataclass(frozen=True)
class CheckCommand:
    job_id: int


@dataclass(frozen=True)
class CheckReply:
    state: JobState


@dataclass(frozen=True)
class WaitCommand:
    job_id: int
    timeout_s: float | None = None


@dataclass(frozen=True)
class WaitReply:
    state: JobState


@dataclass(frozen=True)
class GetResultsCommand:
    job_id: int


@dataclass(frozen=True)
class ResultsReply:
    histogram: Histogram


@dataclass(frozen=True)
class CancelCommand:
    job_id: int


@dataclass(frozen=True)
class CancelReply:
    job_id: int


@dataclass(frozen=True)
class FreeCommand:
    job_id: int


@dataclass(frozen=True)
class FreeReply:
    job_id: int


@dataclass(frozen=True)
class QueryCommand:
    pass


@dataclass(frozen=True)
class QueryReply:
    device_info: DeviceInfo


def execute(handle: DeviceHandle, command):
    """Run one command against the handle and return its reply record."""
    if isinstance(command, SubmitCommand):
        job_id = handle.submit(
            command.payload,
            shots=command.shots,
            priority=command.priority,
            force_latency=command.force_latency,
            transpile_bypass=command.transpile_bypass,
        )
        return SubmitReply(job_id)
    if isinstance(command, CheckCommand):
        return CheckReply(handle.state(command.job_id))
    if isinstance(command, WaitCommand):
        return WaitReply(handle.wait(command.job_id, command.timeout_s))
    if isinstance(command, GetResultsCommand):
        return ResultsReply(handle.results(command.job_id))
    if isinstance(command, CancelCommand):
        handle.cancel(command.job_id)
        return CancelReply(command.job_id)
    if isinstance(command, FreeCommand):
        handle.free(command.job_id)
        return FreeReply(command.job_id)
    if isinstance(command, QueryCommand):
        return QueryReply(handle.query())
    raise TypeError(f"not a command: {command!r}")
