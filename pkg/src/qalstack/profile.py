"""Latency profiling: run a workload in latency mode and build a report.

profile_run pauses dispatch, submits the whole workload so every job
carries the same model-clock submission stamp, then resumes and waits.
Because the device executes serially, job i's queue wait is the dispatch
overhead plus the full latencies of everything dispatched before it.

Per job the report records, in model nanoseconds:

  queue_wait_ns  dispatch stamp minus submission stamp (includes the
                 fixed t_dispatch_ns scheduler overhead)
  transfer_ns    doorbell write plus payload DMA
  exec_ns        shot loop as reported by the device completion record
  completion_ns  result DMA plus interrupt delivery
  end_to_end_ns  sum of the four, cross-checked against the clock stamps

Aggregates give min/p50/p90/p99/max/mean per column with nearest-rank
percentiles.  Reports serialize to JSON and CSV deterministically: model
quantities only, never wall-clock timestamps.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

from .qal import DeviceHandle, JobState, QalError
from .timing import completion_term, transfer_term

_COLUMNS = ("queue_wait_ns", "transfer_ns", "exec_ns", "completion_ns", "end_to_end_ns")


class ProfileError(QalError):
    pass


@dataclass(frozen=True)
class JobSpec:
    payload: bytes
    shots: int = 1000
    priority: int = 3


@dataclass(frozen=True)
class LatencyRecord:
    job_id: int
    queue_wait_ns: int
    transfer_ns: int
    exec_ns: int
    completion_ns: int
    end_to_end_ns: int


@dataclass(frozen=True)
class LatencyReport:
    header: dict
    records: tuple
    aggregates: dict

    def to_dict(self) -> dict:
        return {
            "header": self.header,
            "records": [record.__dict__ for record in self.records],
            "aggregates": self.aggregates,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(("job_id",) + _COLUMNS)
        for record in self.records:
            writer.writerow(
                (
                    record.job_id,
                    record.queue_wait_ns,
                    record.transfer_ns,
                    record.exec_ns,
                    record.completion_ns,
                    record.end_to_end_ns,
                )
            )
        return out.getvalue()


def _percentile(sorted_values, q):
    """Nearest-rank percentile over an ascending list."""
    rank = math.ceil(q * len(sorted_values) / 100)
    return sorted_values[min(len(sorted_values) - 1, max(0, rank - 1))]


def _aggregate(records) -> dict:
    aggregates = {}
    for column in _COLUMNS:
        values = sorted(getattr(record, column) for record in records)
        aggregates[column] = {
            "min": values[0],
            "p50": _percentile(values, 50),
            "p90": _percentile(values, 90),
            "p99": _percentile(values, 99),
            "max": values[-1],
            "mean": sum(values) / len(values),
        }
    return aggregates


def profile_run(handle: DeviceHandle, specs, timeout_s: float | None = None) -> LatencyReport:
    """Submit the workload, wait for it, and assemble the latency report."""
    if handle.mode != "latency":
        raise ProfileError(f"profiling needs a latency-mode device, handle is {handle.mode}")
    specs = list(specs)
    handle.pause_dispatch()
    try:
        job_ids = [
            handle.submit(spec.payload, shots=spec.shots, priority=spec.priority)
            for spec in specs
        ]
    finally:
        handle.resume_dispatch()
    for job_id in job_ids:
        state = handle.wait(job_id, timeout_s)
        if state is not JobState.DONE:
            view = handle.inspect(job_id)
            raise ProfileError(
                f"job {job_id} ended {state.value} (code {view.error_code}); "
                "profiling needs an all-green workload"
            )

    records = []
    for job_id in job_ids:
        view = handle.inspect(job_id)
        queue_wait = view.dispatch_model_ns - view.submit_model_ns
        transfer = transfer_term(handle.timing, view.payload_len)
        completion = completion_term(handle.timing, view.result_len)
        end_to_end = queue_wait + transfer + view.exec_time_ns + completion
        if end_to_end != view.done_model_ns - view.submit_model_ns:
            raise ProfileError(
                f"job {job_id}: phase sum {end_to_end} disagrees with clock span "
                f"{view.done_model_ns - view.submit_model_ns}"
            )
        records.append(
            LatencyRecord(
                job_id=job_id,
                queue_wait_ns=queue_wait,
                transfer_ns=transfer,
                exec_ns=view.exec_time_ns,
                completion_ns=completion,
                end_to_end_ns=end_to_end,
            )
        )

    header = {
        "mode": "latency",
        "timing": handle.timing.to_dict(),
        "scheduler_constants": {"t_dispatch_ns": handle.config.t_dispatch_ns},
        "job_count": len(records),
    }
    aggregates = _aggregate(records) if records else {}
    return LatencyReport(header=header, records=tuple(records), aggregates=aggregates)
