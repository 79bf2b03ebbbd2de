"""Cycle-by-cycle simulation driver for the processor circuit.

Renders each clock cycle as a readable text block (inputs, control
state, control signals, datapath, memory port), watches the control
state to detect instruction retirement, and appends event messages
with the executed instruction, its operands, its effective address
and the jump outcome. The layout is fixed and frozen by golden-file
tests; parse_cycle_block recovers every displayed tap value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import re
from typing import Mapping

from .isa import word_fields
from .m1 import M1, TERMINAL_STATES, build_m1, m1_inputs
from .netlist import NetlistError

STAR_RULE = "*" * 72

WORD_TAPS = ("ir", "pc", "ad", "a", "b", "r", "x", "y", "p", "ma", "md",
             "m_addr", "m_data", "m_out", "dma_a", "dma_d")

DATAPATH_ROWS = (
    (("ir", 16), ("pc", 16), ("ad", 16), ("a", 16), ("b", 16), ("r", 16)),
    (("x", 16), ("y", 16), ("p", 16), ("ma", 16), ("md", 16), ("cnd", 1)),
)

# States that fetch the displacement word of a two-word instruction.
RX_FIRST_STATES = frozenset({
    "st_lea0", "st_load0", "st_store0", "st_jump0",
    "st_jumpf0", "st_jumpt0", "st_jal0", "st_loadxi0",
})

# Where the effective address is visible during each retiring state.
TERMINAL_EA_SOURCE = {
    "st_lea1": "r", "st_load2": "ad", "st_store2": "ad",
    "st_jump1": "r", "st_jumpf1": "r", "st_jumpt1": "r", "st_jal1": "r",
    "st_loadxi3": "ad",
}


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    values: Mapping[str, int]


@dataclass
class DriverScript:
    state_names: list[str]
    signal_names: list[str]

    def validate(self, available) -> list[str]:
        missing = [n for n in self.state_names + self.signal_names
                   if n not in available]
        for name in ("cnd", "m_sto"):
            if name not in available:
                missing.append(name)
        for name in WORD_TAPS[:-2]:
            if any(f"{name}[{i}]" not in available for i in range(16)):
                missing.append(name)
        return missing

    @classmethod
    def for_processor(cls, proc: M1) -> "DriverScript":
        return cls(proc.state_names, proc.signal_names)


def _columns(cells, first_width, rest_width, per_row=4):
    rows = []
    for i in range(0, len(cells), per_row):
        chunk = cells[i:i + per_row]
        parts = []
        for j, (name, value) in enumerate(chunk):
            width = first_width if j == 0 else rest_width
            parts.append(f"{name:>{width}} = {value}")
        rows.append("".join(parts))
    return rows


def format_cycle(rec: CycleRecord, script: DriverScript) -> str:
    v = rec.values
    for name in script.state_names + script.signal_names:
        if name not in v:
            raise NetlistError(f"cycle record is missing tap {name!r}")
    lines = [
        f"Clock cycle {rec.cycle}",
        "Computer system inputs",
        f"         reset={v['reset']} dma={v['dma']}"
        f" dma_a={v['dma_a']:04x} dma_d={v['dma_d']:04x}",
        f"ctl_start = {v['ctl_start']}",
        "",
        "Control state",
    ]
    lines += _columns([(n, v[n]) for n in script.state_names], 15, 13)
    lines += ["", "Control signals"]
    sig = [f"{n:<10} = {v[n]}" for n in script.signal_names]
    lines += ["   " + " ".join(sig[i:i + 4]) for i in range(0, len(sig), 4)]
    lines += ["", "Datapath"]
    for row in DATAPATH_ROWS:
        parts = []
        for j, (name, width) in enumerate(row):
            text = f"{v[name]:04x}" if width == 16 else str(v[name])
            parts.append(f"{name:>{6 if j == 0 else 4}} = {text}")
        lines.append("".join(parts))
    lines += [
        "",
        "Memory",
        f"   ctl_sto = {v['ctl_sto']}      m_sto = {v['m_sto']}",
        f"     m_addr = {v['m_addr']:04x}  m_real_addr = {v['m_addr']:x}"
        f"  m_data = {v['m_data']:04x}  m_out = {v['m_out']:04x}",
    ]
    return "\n".join(lines)


_PAIR_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([0-9a-f]+)")


def parse_cycle_block(text: str) -> CycleRecord:
    """Inverse of format_cycle for every tap the block displays."""
    match = re.search(r"Clock cycle (\d+)", text)
    if not match:
        raise ValueError("not a cycle block")
    values = {}
    for name, token in _PAIR_RE.findall(text):
        if name in ("m_real_addr", "Clock"):
            continue
        base = 16 if name in WORD_TAPS else 10
        values[name] = int(token, base)
    return CycleRecord(int(match.group(1)), values)


def record_from_outputs(proc: M1, outs, cycle: int, *, reset=0, start=1,
                        dma=0, dma_store=0, dma_a=0, dma_d=0) -> CycleRecord:
    values = {"reset": reset, "ctl_start": start, "dma": dma,
              "dma_store": dma_store, "dma_a": dma_a, "dma_d": dma_d}
    for name in proc.state_names + proc.signal_names:
        values[name] = proc._out(outs, name)
    for name in ("cnd", "m_sto"):
        values[name] = proc._out(outs, name)
    for name in WORD_TAPS[:-2]:
        word = 0
        for i in range(16):
            word = word << 1 | proc._out(outs, f"{name}[{15 - i}]")
        values[name] = word
    return CycleRecord(cycle, values)


@dataclass(frozen=True)
class Retired:
    cycle: int
    addr: int
    mnemonic: str
    d: int
    sa: int
    sb: int
    disp: int | None
    ea: int | None
    taken: bool | None

    def key(self):
        return (self.addr, self.mnemonic, self.d, self.sa, self.sb,
                self.disp, self.ea, self.taken)


def driver_operands(mnemonic, d, sa, sb, disp):
    if disp is None:
        return f"R{d},R{sa},R{sb}"
    place = f"{disp:04x}[R{sa}]"
    return place if mnemonic == "jump" else f"R{d},{place}"


class Watcher:
    """Latches per-instruction facts and emits retirement messages."""

    def __init__(self, state_names):
        self.state_names = list(state_names)
        self.disp = None
        self.halted = False
        self.events: list[Retired] = []

    def hot_state(self, rec: CycleRecord) -> str:
        hot = [n for n in self.state_names if rec.values[n]]
        if len(hot) != 1:
            raise AssertionError(f"control not one-hot: {hot}")
        return hot[0]

    def observe(self, rec: CycleRecord) -> list[str]:
        state = self.hot_state(rec)
        if state in RX_FIRST_STATES:
            self.disp = rec.values["m_out"]
        if state not in TERMINAL_STATES:
            return []
        if state == "st_trap0":
            if self.halted:
                return []
            self.halted = True

        v = rec.values
        mnemonic = TERMINAL_STATES[state]
        _, d, sa, sb = word_fields(v["ir"])
        is_rx = mnemonic not in ("add", "sub", "mul", "cmplt", "cmpeq",
                                 "cmpgt", "trap")
        ea = v[TERMINAL_EA_SOURCE[state]] if state in TERMINAL_EA_SOURCE \
            else None
        disp = self.disp if is_rx else None
        taken = None
        if state in ("st_jumpf1", "st_jumpt1"):
            taken = bool(v["ctl_pc_ld"])
        jumped_to = ea if (state in ("st_jump1", "st_jal1") or taken) else None
        addr = (v["pc"] - (2 if is_rx else 1)) & 0xFFFF
        self.events.append(Retired(rec.cycle, addr, mnemonic, d, sa,
                                   0 if is_rx else sb, disp, ea, taken))

        lines = [""]
        if is_rx:
            lines.append(f"Fetched displacement = {disp:04x}")
        if state == "st_jumpf1":
            lines.append("jumpf instruction jumped" if taken
                         else "jumpf instruction did not jump")
        elif state == "st_jumpt1":
            lines.append("jumpt instruction jumped" if taken
                         else "jumpt instruction did not jump")
        lines.append(STAR_RULE)
        executed = (f"Executed instruction:  {mnemonic:<6} "
                    f"{driver_operands(mnemonic, d, sa, sb, disp)}")
        if is_rx:
            executed += f"   effective address = {ea:04x}"
        lines.append(executed)
        if jumped_to is not None:
            lines.append(f"jumped to {jumped_to:04x} in cycle {rec.cycle}")
        lines.append(f"Processor state:    pc = {v['pc']:04x}"
                     f"  ir = {v['ir']:04x}  ad = {v['ad']:04x}")
        lines.append(STAR_RULE)
        return lines


@dataclass
class DriverRun:
    proc: M1
    sim: object
    script: DriverScript
    events: list[Retired]
    messages: list[str]
    cycles: int
    halted: bool
    text: str = field(repr=False, default="")

    def register(self, n: int) -> int:
        return self.proc.read_register(self.sim, n)

    def registers(self) -> list[int]:
        return [self.register(n) for n in range(16)]

    @property
    def pc(self) -> int:
        return self.proc.read_pc(self.sim)

    @property
    def memory(self) -> list[int]:
        return self.sim.memory


def run_driver(words, proc: M1 | None = None, max_cycles: int = 100_000,
               keep_text: bool = False, script: DriverScript | None = None,
               compiled: bool = True) -> DriverRun:
    """Loads a word image over dma, runs to the trap state or budget.

    The driver text (one block per clock cycle, with event messages
    inline) is assembled only when keep_text is set; events and final
    state are always available.
    """
    proc = proc or build_m1()
    script = script or DriverScript.for_processor(proc)
    sim = proc.simulator(compiled=compiled)
    watcher = Watcher(script.state_names)
    blocks: list[str] = []
    cycle = 0

    def drive(**kw):
        nonlocal cycle
        outs = sim.step(m1_inputs(**kw))
        rec = record_from_outputs(proc, outs, cycle, **kw)
        if keep_text:
            blocks.append(format_cycle(rec, script))
        cycle += 1
        return rec

    drive(reset=1, start=0)
    for addr, w in enumerate(words):
        drive(start=0, dma=1, dma_store=1, dma_a=addr, dma_d=w)
    messages: list[str] = []
    halted = False
    while cycle < max_cycles:
        rec = drive()
        new = watcher.observe(rec)
        if new:
            messages.extend(new)
            if keep_text:
                blocks[-1] += "\n" + "\n".join(new)
        if watcher.halted:
            halted = True
            break
    text = ("\n\n".join(blocks) + "\n") if keep_text else ""
    return DriverRun(proc, sim, script, watcher.events, messages,
                     cycle, halted, text)
