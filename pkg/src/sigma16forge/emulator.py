"""Instruction-level reference emulator.

Executes object modules one instruction at a time and reports what
happened as a stream of events. R0 always reads zero; writes to it
are dropped. A trap halts the machine. Unrecognised words advance pc
by one without any other effect, which mirrors how the processor's
dispatcher falls through to the next fetch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .asm import MEMORY_WORDS, ObjectModule
from .isa import (
    Instruction,
    WORD_MASK,
    decode,
    from_signed,
    instruction_length,
    to_signed,
)


@dataclass(frozen=True)
class Event:
    kind: str                    # exec | jump | trap | halt | warn
    addr: int                    # pc of the instruction responsible
    instr: Instruction | None = None
    ea: int | None = None
    taken: bool | None = None
    target: int | None = None
    writes: tuple[tuple[str, int], ...] = ()
    note: str = ""


def trace_line(event: Event) -> str:
    parts = [event.kind.upper(), f"{event.addr:04x}"]
    if event.kind == "exec":
        parts.append(event.instr.text())
        if event.ea is not None:
            parts.append(f"ea={event.ea:04x}")
        if event.taken is not None:
            parts.append("taken" if event.taken else "not-taken")
        for loc, value in event.writes:
            parts.append(f"{loc}={value:04x}")
    elif event.kind == "jump":
        parts.append(f"to={event.target:04x}")
    elif event.kind == "warn":
        parts.append(event.note)
    return "\t".join(parts)


def render_trace(events: list[Event]) -> str:
    return "\n".join(trace_line(e) for e in events) + ("\n" if events else "")


@dataclass
class Machine:
    mem: list[int] = field(default_factory=lambda: [0] * MEMORY_WORDS)
    regs: list[int] = field(default_factory=lambda: [0] * 16)
    pc: int = 0
    halted: bool = False
    instructions: int = 0

    def reg(self, n: int) -> int:
        return 0 if n == 0 else self.regs[n]

    def set_reg(self, n: int, value: int) -> None:
        if n != 0:
            self.regs[n] = value & WORD_MASK


def boot(obj: ObjectModule, pc: int = 0) -> tuple[Machine, list[str]]:
    machine = Machine()
    warnings = obj.load_into(machine.mem)
    machine.pc = pc
    return machine, warnings


def step(m: Machine) -> list[Event]:
    """Executes one instruction; returns the events it produced."""
    if m.halted:
        return []
    pc0 = m.pc
    w0 = m.mem[pc0]
    two = instruction_length(w0) == 2
    w1 = m.mem[(pc0 + 1) % len(m.mem)] if two else 0
    instr = decode(w0, w1)
    m.instructions += 1
    if instr is None:
        m.pc = (pc0 + 1) % len(m.mem)
        return [Event("warn", pc0,
                      note=f"unrecognised word ${w0:04x} treated as no-op")]
    m.pc = (pc0 + instr.length) % len(m.mem)
    name = instr.mnemonic
    writes: list[tuple[str, int]] = []
    events: list[Event] = []

    def write_reg(n, value):
        m.set_reg(n, value)
        writes.append((f"R{n}", m.reg(n)))

    if not instr.is_rx:
        a, b = m.reg(instr.sa), m.reg(instr.sb)
        if name == "add":
            write_reg(instr.d, a + b)
        elif name == "sub":
            write_reg(instr.d, a - b)
        elif name == "mul":
            write_reg(instr.d, a * b)
        elif name == "div":
            if b == 0:
                events.append(Event("warn", pc0, note="division by zero"))
            else:
                sa, sb = to_signed(a), to_signed(b)
                q = abs(sa) // abs(sb)
                if (sa < 0) != (sb < 0):
                    q = -q
                write_reg(instr.d, from_signed(q))
        elif name == "cmplt":
            write_reg(instr.d, int(to_signed(a) < to_signed(b)))
        elif name == "cmpeq":
            write_reg(instr.d, int(a == b))
        elif name == "cmpgt":
            write_reg(instr.d, int(to_signed(a) > to_signed(b)))
        elif name == "trap":
            m.halted = True
        events.insert(0, Event("exec", pc0, instr, writes=tuple(writes)))
        if name == "trap":
            events.append(Event("trap", pc0))
            events.append(Event("halt", pc0))
        return events

    ea = (instr.disp + m.reg(instr.sa)) % len(m.mem)
    taken = None
    if name == "lea":
        write_reg(instr.d, ea)
    elif name == "load":
        write_reg(instr.d, m.mem[ea])
    elif name == "store":
        m.mem[ea] = m.reg(instr.d)
        writes.append((f"mem[{ea:04x}]", m.mem[ea]))
    elif name == "jump":
        m.pc = ea
    elif name == "jumpf":
        taken = m.reg(instr.d) == 0
        if taken:
            m.pc = ea
    elif name == "jumpt":
        taken = m.reg(instr.d) != 0
        if taken:
            m.pc = ea
    elif name == "jal":
        write_reg(instr.d, (pc0 + 2) % len(m.mem))
        m.pc = ea
    elif name == "loadxi":
        write_reg(instr.d, m.mem[ea])
        write_reg(instr.sa, m.reg(instr.sa) + 1)
    events.append(Event("exec", pc0, instr, ea=ea, taken=taken,
                        writes=tuple(writes)))
    if name == "jump" or name == "jal" or taken:
        events.append(Event("jump", pc0, target=m.pc))
    return events


def run(m: Machine, max_steps: int = 200_000) -> list[Event]:
    """Steps until the machine halts or the budget runs out."""
    events: list[Event] = []
    for _ in range(max_steps):
        if m.halted:
            break
        events.extend(step(m))
    else:
        if not m.halted:
            events.append(Event("warn", m.pc,
                                note=f"stopped after {max_steps} steps"))
    return events


def run_object(obj: ObjectModule, max_steps: int = 200_000,
               pokes: dict[int, int] | None = None) -> tuple[Machine, list[Event]]:
    """Boots an object module and runs it to completion."""
    machine, warnings = boot(obj)
    events = [Event("warn", 0, note=w) for w in warnings]
    if pokes:
        for addr, value in pokes.items():
            machine.mem[addr % len(machine.mem)] = value & WORD_MASK
    events.extend(run(machine, max_steps))
    return machine, events
