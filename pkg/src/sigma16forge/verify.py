"""Cross-level equivalence harness.

Runs the same object module on the instruction-level emulator and on
the gate-level processor, then requires identical observable
behavior: the sequence of executed instructions with their effective
addresses, the final register contents, the final pc, and the whole
of memory. A program exercising mul or div is refused up front: the
base processor retires those without a multiply or divide datapath,
so divergence is expected and documented rather than reported as a
defect.
"""

from __future__ import annotations

from dataclasses import dataclass

from .asm import MEMORY_WORDS, ObjectModule
from .emulator import run_object
from .m1 import M1, build_m1
from .testbench import run_driver

REFUSED_OPS = ("mul", "div")


@dataclass
class VerifyResult:
    ok: bool
    refused: str | None = None
    divergence: str | None = None
    instructions: int = 0
    cycles: int = 0

    def report(self) -> str:
        if self.refused:
            return f"refused: {self.refused}"
        if self.divergence:
            return f"divergence: {self.divergence}"
        return (f"equivalent: {self.instructions} instructions, "
                f"{self.cycles} circuit cycles")


def _emulator_key(event):
    i = event.instr
    return (event.addr, i.mnemonic, i.d, i.sa, i.sb, i.disp,
            event.ea, event.taken)


def co_verify(obj: ObjectModule, proc: M1 | None = None,
              max_steps: int = 200_000,
              max_cycles: int | None = None) -> VerifyResult:
    machine, events = run_object(obj, max_steps=max_steps)
    execs = [e for e in events if e.kind == "exec"]

    used = {e.instr.mnemonic for e in execs}
    blocked = sorted(used.intersection(REFUSED_OPS))
    if blocked:
        return VerifyResult(False, refused=(
            f"program executes {', '.join(blocked)}; the circuit retires"
            " these as no-ops (no multiply/divide datapath), so"
            " equivalence cannot hold"))
    if not machine.halted:
        return VerifyResult(False, divergence=(
            f"emulator did not halt within {max_steps} steps"))

    if proc is None:
        proc = build_m1(loadxi="loadxi" in used)
    image = obj.dense_words()
    budget = max_cycles or (len(execs) * 8 + len(image) + 64)
    run = run_driver(image, proc=proc, max_cycles=budget)
    if not run.halted:
        return VerifyResult(False, divergence=(
            f"circuit did not reach the trap state within {budget} cycles"))

    want = [_emulator_key(e) for e in execs]
    got = [r.key() for r in run.events]
    for i, (w, g) in enumerate(zip(want, got)):
        if w != g:
            return VerifyResult(False, divergence=(
                f"instruction {i}: emulator {w} vs circuit {g}"))
    if len(want) != len(got):
        return VerifyResult(False, divergence=(
            f"emulator retired {len(want)} instructions,"
            f" circuit retired {len(got)}"))

    for n in range(16):
        e, c = machine.reg(n), run.register(n)
        if e != c:
            return VerifyResult(False, divergence=(
                f"register R{n}: emulator {e:04x} vs circuit {c:04x}"))
    if machine.pc != run.pc:
        return VerifyResult(False, divergence=(
            f"pc: emulator {machine.pc:04x} vs circuit {run.pc:04x}"))

    mem = run.memory
    assert len(mem) == MEMORY_WORDS == len(machine.mem)
    if machine.mem != mem:
        addr = next(i for i in range(MEMORY_WORDS)
                    if machine.mem[i] != mem[i])
        return VerifyResult(False, divergence=(
            f"memory[{addr:04x}]: emulator {machine.mem[addr]:04x}"
            f" vs circuit {mem[addr]:04x}"))

    return VerifyResult(True, instructions=len(want), cycles=run.cycles)
