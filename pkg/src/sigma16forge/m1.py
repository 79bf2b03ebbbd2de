"""Circuit-level Sigma16 processor.

One memory port, one ALU, a register file with two read ports, and a
control unit with one flip flop per state. Every instruction takes a
small number of clock cycles: two for fetch plus dispatch, then one
cycle per remaining step (three more for a load, one for an add, and
so on).

External interface, all synchronous:

    inputs   reset, ctl_start, dma, dma_store, dma_a[16], dma_d[16]
    outputs  one bit per control state and per control signal, the
             datapath words ir pc ad a b r x y p ma md, the memory
             port view m_sto m_addr m_data m_out, and cnd

Memory is written over the dma inputs while the processor is held
still (ctl_start low keeps the control in its initial state and
forces every control signal off). Raising ctl_start with dma low
starts execution at pc = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuits import (
    DeferredRegFile,
    alu_m1,
    any_of,
    bind_regw,
    bits_to_int,
    int_to_bits,
    mux1,
    mux1w,
    word_input,
    word_output,
)
from .control import (
    Assertion,
    ControlAlgorithm,
    ControlSynthesis,
    Dispatch,
    Goto,
    State,
)
from .netlist import Netlist, Simulator

WORD = 16

M1_SIGNALS = [
    "ctl_alu_a", "ctl_alu_b", "ctl_alu_c", "ctl_alu_d",
    "ctl_rf_ld", "ctl_rf_pc", "ctl_rf_alu", "ctl_rf_sd",
    "ctl_ir_ld", "ctl_pc_ld", "ctl_ad_ld", "ctl_ad_alu",
    "ctl_ma_pc", "ctl_x_pc", "ctl_y_ad", "ctl_sto",
]

DATAPATH_WORDS = ["ir", "pc", "ad", "a", "b", "r", "x", "y", "p", "ma", "md"]

# Control states whose completion retires an instruction.
TERMINAL_STATES = {
    "st_add": "add", "st_sub": "sub", "st_mul0": "mul",
    "st_cmplt": "cmplt", "st_cmpeq": "cmpeq", "st_cmpgt": "cmpgt",
    "st_trap0": "trap", "st_lea1": "lea", "st_load2": "load",
    "st_store2": "store", "st_jump1": "jump", "st_jumpf1": "jumpf",
    "st_jumpt1": "jumpt", "st_jal1": "jal", "st_loadxi3": "loadxi",
}


def _alu(bits: str) -> list[Assertion]:
    return [Assertion(f"ctl_alu_{name}")
            for name, bit in zip("abcd", bits) if bit == "1"]


def m1_control_algorithm(loadxi: bool = False) -> ControlAlgorithm:
    """The control algorithm: 25 states, or 29 with the loadxi patch."""
    A = Assertion
    fetch = [A("ctl_ma_pc"), A("ctl_ir_ld"), A("ctl_x_pc"),
             *_alu("1100"), A("ctl_pc_ld")]

    def rx_first(follow):
        return State(follow[:-1] + "0",
                     [A("ctl_ma_pc"), A("ctl_ad_ld"), A("ctl_x_pc"),
                      *_alu("1100"), A("ctl_pc_ld")],
                     Goto(follow))

    rx_cases = {0x0: "st_lea0", 0x1: "st_load0", 0x2: "st_store0",
                0x3: "st_jump0", 0x4: "st_jumpf0", 0x5: "st_jumpt0",
                0x6: "st_jal0"}
    if loadxi:
        rx_cases[0x7] = "st_loadxi0"
    dispatch = Dispatch("ir_op", {
        0x0: "st_add", 0x1: "st_sub", 0x2: "st_mul0",
        0x4: "st_cmplt", 0x5: "st_cmpeq", 0x6: "st_cmpgt",
        0xD: "st_trap0",
        0xF: Dispatch("ir_sb", rx_cases, "st_instr_fet"),
    }, "st_instr_fet")

    ea_step = [A("ctl_y_ad"), A("ctl_ad_ld"), A("ctl_ad_alu")]
    states = [
        State("st_instr_fet", fetch, Goto("st_dispatch")),
        State("st_dispatch", [], dispatch),
        State("st_add", [A("ctl_rf_ld"), A("ctl_rf_alu")],
              Goto("st_instr_fet")),
        State("st_sub", [A("ctl_rf_ld"), A("ctl_rf_alu"), *_alu("0100")],
              Goto("st_instr_fet")),
        State("st_mul0", [], Goto("st_instr_fet")),
        State("st_cmplt", [A("ctl_rf_ld"), A("ctl_rf_alu"), *_alu("0001")],
              Goto("st_instr_fet")),
        State("st_cmpeq", [A("ctl_rf_ld"), A("ctl_rf_alu"), *_alu("0010")],
              Goto("st_instr_fet")),
        State("st_cmpgt", [A("ctl_rf_ld"), A("ctl_rf_alu"), *_alu("0011")],
              Goto("st_instr_fet")),
        State("st_trap0", [], Goto("st_trap0")),
        rx_first("st_lea1"),
        State("st_lea1", [A("ctl_rf_ld"), A("ctl_rf_alu"), A("ctl_y_ad")],
              Goto("st_instr_fet")),
        rx_first("st_load1"),
        State("st_load1", list(ea_step), Goto("st_load2")),
        State("st_load2", [A("ctl_rf_ld")], Goto("st_instr_fet")),
        rx_first("st_store1"),
        State("st_store1", list(ea_step), Goto("st_store2")),
        State("st_store2", [A("ctl_rf_sd"), A("ctl_sto")],
              Goto("st_instr_fet")),
        rx_first("st_jump1"),
        State("st_jump1", [A("ctl_y_ad"), A("ctl_pc_ld")],
              Goto("st_instr_fet")),
        rx_first("st_jumpf1"),
        State("st_jumpf1",
              [A("ctl_rf_sd"), A("ctl_y_ad"),
               A("ctl_pc_ld", condition="cnd", when=False)],
              Goto("st_instr_fet")),
        rx_first("st_jumpt1"),
        State("st_jumpt1",
              [A("ctl_rf_sd"), A("ctl_y_ad"),
               A("ctl_pc_ld", condition="cnd", when=True)],
              Goto("st_instr_fet")),
        rx_first("st_jal1"),
        State("st_jal1",
              [A("ctl_rf_ld"), A("ctl_rf_pc"), A("ctl_y_ad"),
               A("ctl_pc_ld")],
              Goto("st_instr_fet")),
    ]
    signals = list(M1_SIGNALS)
    if loadxi:
        signals.append("ctl_rf_dsa")
        states += [
            rx_first("st_loadxi1"),
            State("st_loadxi1", list(ea_step), Goto("st_loadxi2")),
            State("st_loadxi2", [A("ctl_rf_ld")], Goto("st_loadxi3")),
            State("st_loadxi3",
                  [A("ctl_rf_ld"), A("ctl_rf_alu"), *_alu("1100"),
                   A("ctl_rf_dsa")],
                  Goto("st_instr_fet")),
        ]
    return ControlAlgorithm(
        name="m1x" if loadxi else "m1",
        states=states,
        signals=signals,
        selectors={"ir_op": 4, "ir_sb": 4},
        conditions=["cnd"],
        initial="st_instr_fet",
    )


@dataclass
class M1:
    nl: Netlist
    algorithm: ControlAlgorithm
    loadxi: bool
    reg_refs: list = field(repr=False, default_factory=list)
    pc_refs: list = field(repr=False, default_factory=list)
    ir_refs: list = field(repr=False, default_factory=list)
    adr_refs: list = field(repr=False, default_factory=list)

    @property
    def state_names(self) -> list[str]:
        return [s.name for s in self.algorithm.states]

    @property
    def signal_names(self) -> list[str]:
        return list(self.algorithm.signals)

    def simulator(self, compiled: bool = True) -> Simulator:
        return Simulator(self.nl, compiled=compiled)

    def read_word(self, sim: Simulator, refs) -> int:
        return bits_to_int([sim.peek_dff(r) for r in refs])

    def read_register(self, sim: Simulator, n: int) -> int:
        if n == 0:
            return 0
        return self.read_word(sim, self.reg_refs[n])

    def read_pc(self, sim: Simulator) -> int:
        return self.read_word(sim, self.pc_refs)

    def read_ir(self, sim: Simulator) -> int:
        return self.read_word(sim, self.ir_refs)

    def read_adr(self, sim: Simulator) -> int:
        return self.read_word(sim, self.adr_refs)

    def state_of(self, outs) -> str:
        sim_names = [n for n in self.state_names]
        hot = [n for n in sim_names if self._out(outs, n)]
        if len(hot) != 1:
            raise AssertionError(f"control not one-hot: {hot}")
        return hot[0]

    def _out(self, outs, name):
        return outs[self._out_index[name]]

    def __post_init__(self):
        self._out_index = {name: i
                           for i, (name, _) in enumerate(self.nl.outputs)}


def m1_inputs(reset: int = 0, start: int = 1, dma: int = 0,
              dma_store: int = 0, dma_a: int = 0, dma_d: int = 0) -> dict:
    """One cycle's worth of input values, keyed by input bit name."""
    row = {"reset": reset, "ctl_start": start,
           "dma": dma, "dma_store": dma_store}
    for label, value in (("dma_a", dma_a), ("dma_d", dma_d)):
        for i, bit in enumerate(int_to_bits(value, WORD)):
            row[f"{label}[{WORD - 1 - i}]"] = bit
    return row


def build_m1(loadxi: bool = False,
             algorithm: ControlAlgorithm | None = None) -> M1:
    """Builds the processor netlist.

    A custom control algorithm may be supplied (fault injection,
    variants); it must use the stock signal and selector rosters, and
    the loadxi destination mux is wired exactly when the algorithm
    carries ctl_rf_dsa.
    """
    alg = algorithm or m1_control_algorithm(loadxi)
    loadxi = "ctl_rf_dsa" in alg.signals
    nl = Netlist()

    reset = nl.add_input("reset")
    ctl_start = nl.add_input("ctl_start")
    dma = nl.add_input("dma")
    dma_store = nl.add_input("dma_store")
    dma_a = word_input(nl, "dma_a", WORD)
    dma_d = word_input(nl, "dma_d", WORD)

    run = nl.and2(nl.inv(reset), ctl_start)
    hold = nl.or2(reset, nl.inv(ctl_start))

    ir = [nl.dff() for _ in range(WORD)]
    pc = [nl.dff() for _ in range(WORD)]
    adr = [nl.dff() for _ in range(WORD)]
    ir_op, ir_d, ir_sa, ir_sb = (ir[0:4], ir[4:8], ir[8:12], ir[12:16])

    synth = ControlSynthesis(nl, alg, hold)

    # Read ports must exist before the write-back value they feed.
    rf_sd = nl.and2(synth.signal("ctl_rf_sd"), run)
    rf = DeferredRegFile(nl, ir_sa, mux1w(nl, rf_sd, ir_sb, ir_d), WORD)
    a, b = rf.a, rf.b

    # Branch condition: the register routed to the b port is nonzero.
    cnd = any_of(nl, b)
    synth.finish(selectors={"ir_op": ir_op, "ir_sb": ir_sb},
                 conditions={"cnd": cnd})

    # The processor only acts while running; dma cycles and the reset
    # hold must not clock any architectural register.
    sig = {"ctl_rf_sd": rf_sd}
    for name in alg.signals:
        if name not in sig:
            sig[name] = nl.and2(synth.signal(name), run)

    ma = mux1w(nl, sig["ctl_ma_pc"], adr, pc)
    md = b
    m_addr = mux1w(nl, dma, ma, dma_a)
    m_data = mux1w(nl, dma, md, dma_d)
    m_sto = mux1(nl, dma, sig["ctl_sto"], dma_store)
    memdat = nl.mem_port(m_sto, m_addr, m_data)

    x = mux1w(nl, sig["ctl_x_pc"], a, pc)
    y = mux1w(nl, sig["ctl_y_ad"], b, adr)
    func = (sig["ctl_alu_a"], sig["ctl_alu_b"],
            sig["ctl_alu_c"], sig["ctl_alu_d"])
    _, r = alu_m1(nl, func, x, y)

    p = mux1w(nl, sig["ctl_rf_pc"],
              mux1w(nl, sig["ctl_rf_alu"], memdat, r), pc)
    q = mux1w(nl, sig["ctl_ad_alu"], memdat, r)

    dest = ir_d
    if loadxi:
        dest = mux1w(nl, sig["ctl_rf_dsa"], ir_d, ir_sa)
    rf.bind(sig["ctl_rf_ld"], dest, p)
    bind_regw(nl, ir, sig["ctl_ir_ld"], memdat)
    bind_regw(nl, pc, sig["ctl_pc_ld"], r)
    bind_regw(nl, adr, sig["ctl_ad_ld"], q)

    for state in alg.states:
        nl.add_output(state.name, synth.state[state.name])
    for name in alg.signals:
        nl.add_output(name, sig[name])
    for label, word in (("ir", ir), ("pc", pc), ("ad", adr), ("a", a),
                        ("b", b), ("r", r), ("x", x), ("y", y), ("p", p),
                        ("ma", ma), ("md", md)):
        word_output(nl, label, word)
    nl.add_output("cnd", cnd)
    nl.add_output("m_sto", m_sto)
    word_output(nl, "m_addr", m_addr)
    word_output(nl, "m_data", m_data)
    word_output(nl, "m_out", memdat)

    return M1(nl, alg, loadxi,
              reg_refs=rf.registers, pc_refs=pc, ir_refs=ir, adr_refs=adr)
