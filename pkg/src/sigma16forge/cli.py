"""Command line front end for the toolchain.

One multiplexed binary with subcommands:

    asm      assemble a source file to an object module (and listing)
    emulate  run an object module on the instruction-level emulator
    m1       run an object module on the gate-level processor
    verify   run both and require identical observable behavior
    netlist  export a circuit as netlist text
    stats    print a circuit's component census and logic depth
    vcd      simulate a circuit and export a value change dump
    serve    host the interactive session service

Exit codes: 0 on success, 1 when the operation itself fails (assembly
diagnostics, budget exhaustion, divergence, malformed input content),
2 for usage errors (bad flags, unreadable files, unknown circuit
names).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .asm import ObjectFormatError, ObjectModule, assemble
from .control import ControlError, control_circuit, parse_control
from .emulator import render_trace, run_object
from .m1 import build_m1
from .netlist import (
    NetlistError,
    combinational_depth,
    export_netlist,
    export_vcd,
    simulate,
    stats,
)
from .testbench import run_driver
from .traffic import build_traffic_v1, build_traffic_v2
from .verify import co_verify

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

BUILTIN_CIRCUITS = {
    "m1": lambda: build_m1().nl,
    "m1x": lambda: build_m1(loadxi=True).nl,
    "traffic-v1": build_traffic_v1,
    "traffic-v2": build_traffic_v2,
}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_FAIL):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_USAGE)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise CliError(f"cannot write {path}: {exc.strerror}", EXIT_USAGE)


def _load_object(path: str) -> ObjectModule:
    text = _read(path)
    try:
        return ObjectModule.from_text(text)
    except ObjectFormatError as exc:
        raise CliError(f"{path}: {exc}")


def _circuit(name_or_path: str):
    if name_or_path in BUILTIN_CIRCUITS:
        return BUILTIN_CIRCUITS[name_or_path]()
    if Path(name_or_path).exists():
        return control_circuit(parse_control(_read(name_or_path)))
    names = ", ".join(sorted(BUILTIN_CIRCUITS))
    raise CliError(
        f"unknown circuit {name_or_path!r}: expected one of {names} or a"
        " control algorithm file", EXIT_USAGE)


def _span(text: str) -> tuple[int, int]:
    try:
        start, count = text.split(":", 1)
        return int(start, 0), int(count, 0)
    except ValueError:
        raise CliError(f"bad memory span {text!r}: expected START:COUNT",
                       EXIT_USAGE)


def _dump(mem, start: int, count: int) -> str:
    return "".join(f"{start + i:04x}  {mem[start + i]:04x}\n"
                   for i in range(count))


def cmd_asm(args) -> int:
    source = _read(args.source)
    result = assemble(source, name=Path(args.source).stem)
    for diag in result.errors:
        print(f"{args.source}:{diag.line}: {diag.message}", file=sys.stderr)
    if not result.ok:
        return EXIT_FAIL
    _write(args.output, result.object.to_text())
    if args.listing:
        _write(args.listing, result.listing)
    return EXIT_OK


def cmd_emulate(args) -> int:
    obj = _load_object(args.object)
    machine, events = run_object(obj, max_steps=args.max_steps)
    for e in events:
        if e.kind == "warn":
            print(f"warning: {e.note}", file=sys.stderr)
    if args.trace:
        sys.stdout.write(render_trace(events))
    executed = sum(e.kind == "exec" for e in events)
    if args.dump:
        start, count = _span(args.dump)
        sys.stdout.write(_dump(machine.mem, start, count))
    if not machine.halted:
        print(f"did not halt within {args.max_steps} steps",
              file=sys.stderr)
        return EXIT_FAIL
    print(f"halted at pc={machine.pc:04x} after {executed} instructions")
    return EXIT_OK


def cmd_m1(args) -> int:
    obj = _load_object(args.object)
    proc = build_m1(loadxi=args.machine == "m1x")
    run = run_driver(obj.dense_words(), proc=proc,
                     max_cycles=args.max_cycles,
                     keep_text=args.driver_output is not None)
    if args.driver_output:
        _write(args.driver_output, run.text)
    if args.driver_output != "-":
        for line in run.messages:
            print(line)
    if args.dump:
        start, count = _span(args.dump)
        sys.stdout.write(_dump(run.memory, start, count))
    if not run.halted:
        print(f"cycle budget exhausted after {run.cycles} cycles",
              file=sys.stderr)
        return EXIT_FAIL
    print(f"halted after {run.cycles} cycles")
    return EXIT_OK


def cmd_verify(args) -> int:
    obj = _load_object(args.object)
    result = co_verify(obj, max_steps=args.max)
    print(result.report())
    return EXIT_OK if result.ok else EXIT_FAIL


def cmd_netlist(args) -> int:
    _write(args.output, export_netlist(_circuit(args.circuit)))
    return EXIT_OK


def cmd_stats(args) -> int:
    nl = _circuit(args.circuit)
    census = stats(nl)
    lines = [
        f"components = {census['components']}",
        f"dff_count = {census['dff_count']}",
        f"gate_count = {census['gate_count']}",
        f"comb_depth = {combinational_depth(nl)}",
    ]
    for kind in sorted(census["kinds"]):
        lines.append(f"{kind} = {census['kinds'][kind]}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_vcd(args) -> int:
    nl = _circuit(args.circuit)
    inputs = {name: [1] if name == "reset" else []
              for name, _ in nl.inputs}
    streams = simulate(nl, inputs, args.cycles)
    _write(args.output, export_vcd(streams, args.cycles))
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve

    serve(host=args.host, port=args.port, static_dir=args.static)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigma16forge",
        description="Assembler, emulator, and gate-level processor tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("asm", help="assemble source to an object module")
    p.add_argument("source")
    p.add_argument("-o", "--output", default="-",
                   help="object file ('-' for stdout)")
    p.add_argument("--listing", metavar="FILE",
                   help="also write an address/word listing")
    p.set_defaults(func=cmd_asm)

    p = sub.add_parser("emulate", help="run on the instruction emulator")
    p.add_argument("object")
    p.add_argument("--max-steps", type=int, default=200_000)
    p.add_argument("--trace", action="store_true",
                   help="print one line per executed instruction")
    p.add_argument("--dump", metavar="START:COUNT",
                   help="print a memory range after the run")
    p.set_defaults(func=cmd_emulate)

    p = sub.add_parser("m1", help="run on the gate-level processor")
    p.add_argument("object")
    p.add_argument("--max-cycles", type=int, default=100_000)
    p.add_argument("--machine", choices=("m1", "m1x"), default="m1",
                   help="base machine or the loadxi extension")
    p.add_argument("--driver-output", metavar="FILE",
                   help="write the cycle-by-cycle driver text")
    p.add_argument("--dump", metavar="START:COUNT",
                   help="print a memory range after the run")
    p.set_defaults(func=cmd_m1)

    p = sub.add_parser("verify",
                       help="check emulator and processor agree")
    p.add_argument("object")
    p.add_argument("--max", type=int, default=200_000,
                   help="emulator instruction budget")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("netlist", help="export a circuit as text")
    p.add_argument("circuit",
                   help="builtin name or control algorithm file")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_netlist)

    p = sub.add_parser("stats", help="print a circuit's census")
    p.add_argument("circuit")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("vcd", help="export a value change dump")
    p.add_argument("circuit")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--cycles", type=int, default=50)
    p.set_defaults(func=cmd_vcd)

    p = sub.add_parser("serve", help="host the session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", metavar="DIR",
                   help="directory of web UI assets to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (NetlistError, ControlError, ObjectFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
