"""qalctl: command-line front end for the whole stack.

Subcommands: compile (text to binary), disasm (binary to text), submit,
status, results, cancel, device-info, bench.  The device lives inside the
invoking process, so a job can never outlive one invocation; submit
therefore runs the job to completion and records the outcome in a session
journal (default ./.qalctl-session.json), which is what status, results
and cancel consult.  cancel consequently always reports that it is too
late; the command exists so scripted drivers get an honest answer instead
of a missing feature.

Exit codes: 0 success, 1 runtime failure (bad input file, device error,
failed job), 2 usage error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .asm import AsmError, emit_text, parse_text
from .binfmt import DecodeError, decode_binary, encode_binary
from .profile import JobSpec, profile_run
from .qal import DeviceConfig, JobState, QalError, device_open
from .sim import Histogram
from .timing import TimingModel, load_timing_config

_BINARY_PREFIX = b"BLAQ"  # little-endian container magic as raw bytes

_CONFIG_KEYS = {
    "qubits", "coupling", "mode", "seed", "timing", "sq_len", "cq_len",
    "queue_high_water", "t_dispatch_ns", "host_mem_bytes", "cache_capacity",
}


_GLOBAL_DEFAULTS = {
    "config": None,
    "seed": None,
    "mode": None,
    "fmt": "text",
    "session": ".qalctl-session.json",
}


def _build_parser() -> argparse.ArgumentParser:
    # Global flags live on a parent parser with SUPPRESS defaults so they
    # are accepted both before and after the subcommand; missing attributes
    # are backfilled from _GLOBAL_DEFAULTS after parsing.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", metavar="PATH", default=argparse.SUPPRESS, help="device config JSON"
    )
    common.add_argument(
        "--seed", type=int, default=argparse.SUPPRESS, help="override the device seed"
    )
    common.add_argument(
        "--mode", choices=["fidelity", "latency"], default=argparse.SUPPRESS,
        help="override the device mode",
    )
    common.add_argument(
        "--format", dest="fmt", choices=["text", "json", "csv"], default=argparse.SUPPRESS,
        help="output format (default text)",
    )
    common.add_argument(
        "--session", metavar="PATH", default=argparse.SUPPRESS,
        help="session journal path (default ./.qalctl-session.json)",
    )

    parser = argparse.ArgumentParser(
        prog="qalctl",
        description="drive the virtual quantum accelerator stack",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_command(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common])

    compile_p = add_command("compile", "assemble circuit text into binary")
    compile_p.add_argument("input", help="circuit text file")
    compile_p.add_argument("-o", "--output", help="output path (default: input with .qalb)")

    disasm_p = add_command("disasm", "render circuit binary as canonical text")
    disasm_p.add_argument("input", help="circuit binary file")
    disasm_p.add_argument("-o", "--output", help="output path (default: stdout)")

    submit_p = add_command("submit", "run a circuit and record the outcome")
    submit_p.add_argument("circuit", help="circuit file, text or binary")
    submit_p.add_argument("--shots", type=int, default=1000)
    submit_p.add_argument("--priority", type=int, choices=range(8), default=3)
    submit_p.add_argument(
        "--no-wait", action="store_true",
        help="skip printing results; the outcome still lands in the journal",
    )

    status_p = add_command("status", "report a journaled job's state")
    status_p.add_argument("job_id", type=int)

    results_p = add_command("results", "print a journaled job's histogram")
    results_p.add_argument("job_id", type=int)

    cancel_p = add_command("cancel", "attempt to cancel a journaled job")
    cancel_p.add_argument("job_id", type=int)

    add_command("device-info", "print device capabilities")

    bench_p = add_command("bench", "latency-profile a circuit (forces latency mode)")
    bench_p.add_argument("circuit", help="circuit file, text or binary")
    bench_p.add_argument("--count", type=int, default=100, help="jobs to run (default 100)")
    bench_p.add_argument("--shots", type=int, default=100, help="shots per job (default 100)")
    bench_p.add_argument("--out", help="write the report here instead of stdout")
    return parser


# ---- config and file plumbing ----


def _load_config_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    unknown = sorted(set(data) - _CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    return data


def _device_config(args) -> DeviceConfig:
    raw = _load_config_file(args.config) if args.config else {}
    timing = None
    if "timing" in raw:
        spec = raw["timing"]
        if isinstance(spec, dict):
            timing = TimingModel.from_dict(spec)
        else:
            # relative timing paths resolve against the config file's directory
            if not os.path.isabs(spec):
                spec = os.path.join(os.path.dirname(os.path.abspath(args.config)), spec)
            timing = load_timing_config(spec)
    coupling = raw.get("coupling", "line")
    if isinstance(coupling, list):
        coupling = [tuple(edge) for edge in coupling]
    kwargs = {
        "num_qubits": raw.get("qubits", 16),
        "coupling": coupling,
        "mode": raw.get("mode", "fidelity"),
        "timing": timing,
        "seed": raw.get("seed", 0),
    }
    for key in ("sq_len", "cq_len", "queue_high_water", "t_dispatch_ns",
                "host_mem_bytes", "cache_capacity"):
        if key in raw:
            kwargs[key] = raw[key]
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.mode is not None:
        kwargs["mode"] = args.mode
    return DeviceConfig(**kwargs)


def _load_payload(path: str) -> bytes:
    """Read a circuit file as canonical binary, assembling text if needed."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data.startswith(_BINARY_PREFIX):
        decode_binary(data)  # reject malformed files before they reach a device
        return data
    return encode_binary(parse_text(data.decode("utf-8")))


def _load_journal(path: str) -> dict:
    if not os.path.exists(path):
        return {"next_id": 1, "jobs": {}}
    with open(path, encoding="utf-8") as fh:
        journal = json.load(fh)
    if not isinstance(journal, dict) or "jobs" not in journal:
        raise ValueError(f"{path} is not a session journal")
    return journal


def _store_journal(path: str, journal: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(journal, fh, indent=2)
        fh.write("\n")


def _journal_job(journal: dict, job_id: int) -> dict:
    job = journal["jobs"].get(str(job_id))
    if job is None:
        raise ValueError(f"no job {job_id} in the session journal")
    return job


# ---- rendering ----


def _bits(key: int, num_cbits: int) -> str:
    return format(key, f"0{max(num_cbits, 1)}b")


def _histogram_dict(histogram: Histogram) -> dict:
    return {
        "num_cbits": histogram.num_cbits,
        "shots": histogram.shots,
        "counts": {str(key): histogram.counts[key] for key in sorted(histogram.counts)},
    }


def _print_histogram(histogram: Histogram, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(_histogram_dict(histogram), indent=2))
    elif fmt == "csv":
        print("outcome,count")
        for key in sorted(histogram.counts):
            print(f"{_bits(key, histogram.num_cbits)},{histogram.counts[key]}")
    else:
        print(f"shots: {histogram.shots}")
        for key in sorted(histogram.counts):
            print(f"{_bits(key, histogram.num_cbits)} {histogram.counts[key]}")


# ---- subcommands ----


def _cmd_compile(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        circuit = parse_text(fh.read())
    data = encode_binary(circuit)
    output = args.output
    if output is None:
        stem, ext = os.path.splitext(args.input)
        output = (stem if ext == ".qalt" else args.input) + ".qalb"
    if output == "-":
        sys.stdout.buffer.write(data)
    else:
        with open(output, "wb") as fh:
            fh.write(data)
        print(f"wrote {len(data)} bytes to {output}")
    return 0


def _cmd_disasm(args) -> int:
    with open(args.input, "rb") as fh:
        circuit = decode_binary(fh.read())
    text = emit_text(circuit)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_submit(args) -> int:
    payload = _load_payload(args.circuit)
    config = _device_config(args)
    with device_open(config) as handle:
        job_id = handle.submit(payload, shots=args.shots, priority=args.priority)
        handle.wait(job_id, timeout_s=60.0)
        view = handle.inspect(job_id)
        histogram = handle.results(job_id) if view.state is JobState.DONE else None

    journal = _load_journal(args.session)
    journal_id = journal.get("next_id", 1)
    journal["next_id"] = journal_id + 1
    journal["jobs"][str(journal_id)] = {
        "circuit": args.circuit,
        "shots": args.shots,
        "state": view.state.value,
        "error_code": view.error_code,
        "exec_time_ns": view.exec_time_ns,
        "histogram": _histogram_dict(histogram) if histogram is not None else None,
    }
    _store_journal(args.session, journal)

    if view.state is not JobState.DONE:
        print(f"job {journal_id}: {view.state.value} (code {view.error_code})", file=sys.stderr)
        return 1
    if args.fmt == "json":
        print(json.dumps({
            "job_id": journal_id,
            "state": view.state.value,
            "exec_time_ns": view.exec_time_ns,
            "histogram": _histogram_dict(histogram),
        }, indent=2))
    else:
        print(f"job {journal_id}: {view.state.value}")
        if not args.no_wait:
            _print_histogram(histogram, args.fmt)
    return 0


def _cmd_status(args) -> int:
    job = _journal_job(_load_journal(args.session), args.job_id)
    if args.fmt == "json":
        print(json.dumps({"job_id": args.job_id, "state": job["state"]}))
    else:
        print(f"job {args.job_id}: {job['state']}")
    return 0


def _cmd_results(args) -> int:
    job = _journal_job(_load_journal(args.session), args.job_id)
    if job["state"] != JobState.DONE.value:
        print(
            f"job {args.job_id}: {job['state']} (code {job.get('error_code')})",
            file=sys.stderr,
        )
        return 1
    stored = job["histogram"]
    histogram = Histogram(
        stored["num_cbits"], {int(key): count for key, count in stored["counts"].items()}
    )
    _print_histogram(histogram, args.fmt)
    return 0


def _cmd_cancel(args) -> int:
    job = _journal_job(_load_journal(args.session), args.job_id)
    print(
        f"job {args.job_id} already {job['state']}: jobs finish within the invocation "
        "that submitted them",
        file=sys.stderr,
    )
    return 1


def _cmd_device_info(args) -> int:
    config = _device_config(args)
    with device_open(config) as handle:
        info = handle.query()
    if args.fmt == "json":
        print(json.dumps(info.to_dict(), indent=2))
    elif args.fmt == "csv":
        print("field,value")
        for key, value in info.to_dict().items():
            print(f"{key},{json.dumps(value) if isinstance(value, list) else value}")
    else:
        print(f"qubits: {info.num_qubits}")
        print(f"version: {info.version}")
        print(f"modes: {', '.join(info.modes)}")
        print(f"native gates: {', '.join(info.native_gates)}")
        print(f"coupling: {', '.join(f'{a}-{b}' for a, b in info.coupling_edges)}")
        print(f"sq_len: {info.sq_len}")
        print(f"cq_len: {info.cq_len}")
        print(f"queue high water: {info.queue_high_water}")
    return 0


def _cmd_bench(args) -> int:
    if args.count < 1:
        raise ValueError("--count must be >= 1")
    payload = _load_payload(args.circuit)
    config = dataclasses.replace(_device_config(args), mode="latency")
    specs = [JobSpec(payload, shots=args.shots)] * args.count
    with device_open(config) as handle:
        report = profile_run(handle, specs, timeout_s=60.0)

    if args.fmt == "csv":
        rendered = report.to_csv()
    elif args.fmt == "json" or args.out:
        rendered = report.to_json()
    else:
        lines = [f"jobs: {report.header['job_count']}"]
        lines.append(
            f"{'column':<16} {'min':>10} {'p50':>10} {'p90':>10} {'p99':>10} "
            f"{'max':>10} {'mean':>12}"
        )
        for column, row in report.aggregates.items():
            lines.append(
                f"{column:<16} {row['min']:>10} {row['p50']:>10} {row['p90']:>10} "
                f"{row['p99']:>10} {row['max']:>10} {row['mean']:>12.1f}"
            )
        rendered = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(rendered)
    else:
        sys.stdout.write(rendered)
    return 0


_COMMANDS = {
    "compile": _cmd_compile,
    "disasm": _cmd_disasm,
    "submit": _cmd_submit,
    "status": _cmd_status,
    "results": _cmd_results,
    "cancel": _cmd_cancel,
    "device-info": _cmd_device_info,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    for name, default in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return _COMMANDS[args.command](args)
    except (QalError, DecodeError, AsmError, OSError, ValueError) as exc:
        print(f"qalctl: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
