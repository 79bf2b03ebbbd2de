"""Synchronous gate-level netlists.

A circuit is a directed graph of components built explicitly through the
Netlist builder. All flip flops share one implicit clock. A signal is the
sequence of bit values appearing on a node at cycles 0, 1, 2, ...; a flip
flop outputs 0 at cycle 0 and thereafter delays its input by one cycle.

Combinational logic must be loop-free: check_synchronous rejects any
directed cycle that does not pass through a flip flop. Simulation computes
one topological order of the combinational components and reuses it every
cycle, either interpreted or compiled to a Python function (the default;
both produce identical streams).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

INPUT = "input"
ZERO = "zero"
ONE = "one"
INV = "inv"
AND2 = "and2"
AND3 = "and3"
OR2 = "or2"
OR3 = "or3"
XOR2 = "xor2"
DFF = "dff"
MEM = "mem"

GATE_KINDS = (INV, AND2, AND3, OR2, OR3, XOR2)

_ARITY = {INV: 1, AND2: 2, OR2: 2, XOR2: 2, AND3: 3, OR3: 3, DFF: 1}


class NetlistError(ValueError):
    pass


@dataclass(frozen=True)
class NodeRef:
    """Handle to one output bit of a component, valid only for its netlist."""

    netlist: "Netlist" = field(repr=False)
    comp: int
    bit: int = 0

    def __repr__(self):
        return f"NodeRef({self.comp}:{self.bit})"


@dataclass
class Component:
    kind: str
    operands: tuple = ()
    name: Optional[str] = None   # input components only
    width: int = 1               # mem ports have a multi-bit output


@dataclass
class SynchronyReport:
    ok: bool
    cycle: list  # NodeRefs forming one combinational loop, empty when ok

    def describe(self):
        if self.ok:
            return "synchronous"
        names = " -> ".join(
            f"{r.netlist.components[r.comp].kind}#{r.comp}" for r in self.cycle
        )
        return f"combinational loop: {names}"


class Netlist:
    """Builder for a synchronous circuit.

    Components are created through the add_input/constant/gate/dff/mem_port
    methods, each returning a NodeRef. Flip flops may be created with their
    input deferred (d=None) and bound later with set_dff_source, which is
    how feedback is expressed.
    """

    def __init__(self):
        self.components: list[Component] = []
        self.inputs: list[tuple[str, int]] = []       # (name, comp id)
        self.outputs: list[tuple[str, NodeRef]] = []
        self._input_names: set[str] = set()
        self._output_names: set[str] = set()
        self._mem_id: Optional[int] = None
        self._version = 0  # bumped on every mutation; invalidates analyses
        self._analysis = None

    # -- construction -------------------------------------------------

    def _add(self, comp):
        self._version += 1
        self.components.append(comp)
        return NodeRef(self, len(self.components) - 1)

    def _check_ref(self, ref):
        if not isinstance(ref, NodeRef) or ref.netlist is not self:
            raise NetlistError("operand is not a node of this netlist")
        return ref

    def add_input(self, name: str) -> NodeRef:
        if name in self._input_names:
            raise NetlistError(f"duplicate input name {name!r}")
        self._input_names.add(name)
        ref = self._add(Component(INPUT, name=name))
        self.inputs.append((name, ref.comp))
        return ref

    def constant(self, bit: int) -> NodeRef:
        if bit not in (0, 1):
            raise NetlistError("constant must be 0 or 1")
        return self._add(Component(ONE if bit else ZERO))

    def gate(self, kind: str, operands: Sequence[NodeRef]) -> NodeRef:
        if kind not in GATE_KINDS:
            raise NetlistError(f"unknown gate kind {kind!r}")
        if len(operands) != _ARITY[kind]:
            raise NetlistError(f"{kind} takes {_ARITY[kind]} operands")
        ops = tuple(self._check_ref(r) for r in operands)
        return self._add(Component(kind, ops))

    def inv(self, a):
        return self.gate(INV, (a,))

    def and2(self, a, b):
        return self.gate(AND2, (a, b))

    def and3(self, a, b, c):
        return self.gate(AND3, (a, b, c))

    def or2(self, a, b):
        return self.gate(OR2, (a, b))

    def or3(self, a, b, c):
        return self.gate(OR3, (a, b, c))

    def xor2(self, a, b):
        return self.gate(XOR2, (a, b))

    def dff(self, d: Optional[NodeRef] = None) -> NodeRef:
        """One-cycle delay element; outputs 0 at cycle 0.

        The input may be left unbound and supplied later through
        set_dff_source, so feedback paths can be closed after the fact.
        """
        ops = () if d is None else (self._check_ref(d),)
        return self._add(Component(DFF, ops))

    def set_dff_source(self, q: NodeRef, d: NodeRef):
        self._check_ref(q)
        comp = self.components[q.comp]
        if comp.kind != DFF:
            raise NetlistError("set_dff_source target is not a dff")
        if comp.operands:
            raise NetlistError("dff input already bound")
        comp.operands = (self._check_ref(d),)
        self._version += 1

    def mem_port(self, sto: NodeRef, addr: Sequence[NodeRef],
                 data: Sequence[NodeRef]) -> list[NodeRef]:
        """Single synchronous-write, combinational-read memory port.

        addr and data are MSB-first and equally wide; the memory holds
        2**width words. Reads see the word at the current address within
        the same cycle; when sto is 1 the data word is committed at the
        clock tick and visible from the next cycle on. At most one port
        per netlist. Returns the MSB-first read-data bits.
        """
        if self._mem_id is not None:
            raise NetlistError("netlist already has a memory port")
        if len(addr) != len(data) or not addr:
            raise NetlistError("mem_port needs equally sized addr and data words")
        width = len(addr)
        if width > 20:
            raise NetlistError("mem_port width over 20 bits is unsupported")
        ops = (self._check_ref(sto),)
        ops += tuple(self._check_ref(r) for r in addr)
        ops += tuple(self._check_ref(r) for r in data)
        ref = self._add(Component(MEM, ops, width=width))
        self._mem_id = ref.comp
        return [NodeRef(self, ref.comp, width - 1 - i) for i in range(width)]

    def add_output(self, name: str, ref: NodeRef):
        if name in self._output_names:
            raise NetlistError(f"duplicate output name {name!r}")
        self._output_names.add(name)
        self.outputs.append((name, self._check_ref(ref)))
        self._version += 1

    # -- derived views ------------------------------------------------

    def mem_width(self):
        if self._mem_id is None:
            return None
        return self.components[self._mem_id].width


# -- analysis ----------------------------------------------------------


def _comb_operands(comp):
    """Operands that feed a component combinationally (same cycle)."""
    if comp.kind in GATE_KINDS:
        return comp.operands
    if comp.kind == MEM:
        # Read data depends on the address; store enable and write data
        # only matter at the clock tick, like a dff input.
        return comp.operands[1 : 1 + comp.width]
    return ()  # input, const, dff: cycle-start sources


class _Analysis:
    def __init__(self, nl):
        self.version = nl._version
        self.dff_ids = [i for i, c in enumerate(nl.components) if c.kind == DFF]
        for i in self.dff_ids:
            if not nl.components[i].operands:
                raise NetlistError(f"dff#{i} input was never bound")
        self.report = _find_combinational_loop(nl)
        self.topo = None if not self.report.ok else _topo_order(nl)


def _find_combinational_loop(nl):
    comps = nl.components
    WHITE, GREY, BLACK = 0, 1, 2
    color = [WHITE] * len(comps)
    for root in range(len(comps)):
        if color[root] != WHITE:
            continue
        # Iterative DFS along combinational operand edges.
        stack = [(root, iter(_comb_operands(comps[root])))]
        color[root] = GREY
        path = [root]
        while stack:
            node, it = stack[-1]
            advanced = False
            for ref in it:
                succ = ref.comp
                if color[succ] == GREY:
                    start = path.index(succ)
                    cycle = [NodeRef(nl, c) for c in path[start:]]
                    return SynchronyReport(False, cycle)
                if color[succ] == WHITE:
                    color[succ] = GREY
                    path.append(succ)
                    stack.append((succ, iter(_comb_operands(comps[succ]))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                path.pop()
                stack.pop()
    return SynchronyReport(True, [])


def _topo_order(nl):
    """Combinational components ordered so operands come first.

    Inputs, constants and flip flop outputs are fixed at cycle start, so
    only edges between combinational nodes constrain the order. Ties are
    broken by ascending id, making the order deterministic.
    """
    import heapq

    comps = nl.components
    comb = GATE_KINDS + (MEM,)
    indeg = [0] * len(comps)
    consumers = [[] for _ in comps]
    for i, c in enumerate(comps):
        for ref in _comb_operands(c):
            if comps[ref.comp].kind in comb:
                indeg[i] += 1
                consumers[ref.comp].append(i)
    ready = [i for i, c in enumerate(comps) if c.kind in comb and indeg[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in consumers[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, j)
    return order


def _analysis(nl) -> _Analysis:
    if nl._analysis is None or nl._analysis.version != nl._version:
        nl._analysis = _Analysis(nl)
    return nl._analysis


def check_synchronous(nl: Netlist) -> SynchronyReport:
    """Sound and complete test for combinational feedback.

    Returns ok=True iff no directed cycle of gates (or the memory read
    path) exists; otherwise the report carries the first loop found when
    scanning components in ascending id order.
    """
    for i, c in enumerate(nl.components):
        if c.kind == DFF and not c.operands:
            raise NetlistError(f"dff#{i} input was never bound")
    return _find_combinational_loop(nl)


def stats(nl: Netlist) -> dict:
    """Component census: per-kind counts plus dff and gate totals."""
    kinds: dict[str, int] = {}
    for c in nl.components:
        kinds[c.kind] = kinds.get(c.kind, 0) + 1
    return {
        "components": len(nl.components),
        "kinds": kinds,
        "dff_count": kinds.get(DFF, 0),
        "gate_count": sum(kinds.get(k, 0) for k in GATE_KINDS),
    }


def combinational_depth(nl: Netlist) -> int:
    """Length in gates of the longest combinational path."""
    an = _analysis(nl)
    if not an.report.ok:
        raise NetlistError(an.report.describe())
    depth = [0] * len(nl.components)
    for i in an.topo:
        ops = _comb_operands(nl.components[i])
        depth[i] = 1 + max((depth[r.comp] for r in ops), default=0)
    return max(depth, default=0)


# -- streams -----------------------------------------------------------


@dataclass
class BitStream:
    """Finite list of bits padded with a default beyond its end."""

    values: Sequence[int]
    default: int = 0

    def at(self, t: int) -> int:
        if t < len(self.values):
            return self.values[t]
        return self.default


def _stream(obj) -> BitStream:
    if isinstance(obj, BitStream):
        return obj
    return BitStream(list(obj))


# -- simulation --------------------------------------------------------


def _compile_cycle(nl, an):
    """Build one Python function computing a full clock cycle.

    The function takes the current input bits, dff states, and memory,
    returns (next dff states, output values) and applies the memory
    write, if any, before returning.
    """
    comps = nl.components

    def expr(ref):
        c = comps[ref.comp]
        if c.kind == ZERO:
            return "0"
        if c.kind == ONE:
            return "1"
        if c.kind == MEM:
            if ref.bit == 0:
                return f"(m{ref.comp}&1)"
            return f"((m{ref.comp}>>{ref.bit})&1)"
        return f"v{ref.comp}"

    lines = ["def _cycle(_in, _dff, _mem):"]
    for k, (_, cid) in enumerate(nl.inputs):
        lines.append(f" v{cid} = _in[{k}]")
    for j, cid in enumerate(an.dff_ids):
        lines.append(f" v{cid} = _dff[{j}]")
    mem_write = None
    for i in an.topo:
        c = comps[i]
        if c.kind == INV:
            lines.append(f" v{i} = {expr(c.operands[0])}^1")
        elif c.kind in (AND2, AND3):
            lines.append(f" v{i} = " + "&".join(expr(o) for o in c.operands))
        elif c.kind in (OR2, OR3):
            lines.append(f" v{i} = " + "|".join(expr(o) for o in c.operands))
        elif c.kind == XOR2:
            a, b = c.operands
            lines.append(f" v{i} = {expr(a)}^{expr(b)}")
        elif c.kind == MEM:
            w = c.width
            addr = c.operands[1 : 1 + w]
            data = c.operands[1 + w :]
            addr_expr = "|".join(
                f"({expr(r)}<<{w - 1 - k})" if w - 1 - k else expr(r)
                for k, r in enumerate(addr)
            )
            lines.append(f" a{i} = {addr_expr}")
            lines.append(f" m{i} = _mem[a{i}]")
            data_expr = "|".join(
                f"({expr(r)}<<{w - 1 - k})" if w - 1 - k else expr(r)
                for k, r in enumerate(data)
            )
            mem_write = (i, expr(c.operands[0]), data_expr)
    if mem_write is not None:
        i, sto, data = mem_write
        lines.append(f" if {sto}: _mem[a{i}] = {data}")
    next_dff = ",".join(expr(comps[i].operands[0]) for i in an.dff_ids)
    outs = ",".join(expr(ref) for _, ref in nl.outputs)
    lines.append(f" return ({next_dff}{',' if an.dff_ids else ''}), "
                 f"({outs}{',' if nl.outputs else ''})")
    ns: dict = {}
    exec(compile("\n".join(lines), "<netlist>", "exec"), ns)
    return ns["_cycle"]


def _interpret_cycle(nl, an):
    comps = nl.components
    steps = []
    for i in an.topo:
        c = comps[i]
        steps.append((i, c.kind, c.operands, c.width))

    def fetch(vals, ref):
        v = vals[ref.comp]
        if ref.bit or comps[ref.comp].kind == MEM:
            return (v >> ref.bit) & 1
        return v

    base = [0] * len(comps)
    for i, c in enumerate(comps):
        if c.kind == ONE:
            base[i] = 1

    def cycle(_in, _dff, _mem, _vals=base):
        vals = _vals
        for k, (_, cid) in enumerate(nl.inputs):
            vals[cid] = _in[k]
        for j, cid in enumerate(an.dff_ids):
            vals[cid] = _dff[j]
        write = None
        for i, kind, ops, width in steps:
            if kind == INV:
                vals[i] = fetch(vals, ops[0]) ^ 1
            elif kind == AND2:
                vals[i] = fetch(vals, ops[0]) & fetch(vals, ops[1])
            elif kind == AND3:
                vals[i] = fetch(vals, ops[0]) & fetch(vals, ops[1]) & fetch(vals, ops[2])
            elif kind == OR2:
                vals[i] = fetch(vals, ops[0]) | fetch(vals, ops[1])
            elif kind == OR3:
                vals[i] = fetch(vals, ops[0]) | fetch(vals, ops[1]) | fetch(vals, ops[2])
            elif kind == XOR2:
                vals[i] = fetch(vals, ops[0]) ^ fetch(vals, ops[1])
            else:  # MEM
                addr = 0
                for r in ops[1 : 1 + width]:
                    addr = (addr << 1) | fetch(vals, r)
                vals[i] = _mem[addr]
                write = (i, addr, ops[0], ops[1 + width :])
        if write is not None:
            i, addr, sto, data = write
            if fetch(vals, sto):
                word = 0
                for r in data:
                    word = (word << 1) | fetch(vals, r)
                _mem[addr] = word
        nxt = tuple(fetch(vals, comps[i].operands[0]) for i in an.dff_ids)
        outs = tuple(fetch(vals, ref) for _, ref in nl.outputs)
        return nxt, outs

    return cycle


class Simulator:
    """Incremental cycle-by-cycle execution of one netlist.

    Holds the flip flop states and memory contents between steps so a
    caller can single-step, inspect or patch state, and continue. The
    compiled engine is the default; compiled=False selects the plain
    interpreter (identical results, mostly useful for cross-checking).
    """

    def __init__(self, netlist: Netlist, compiled: bool = True):
        self.netlist = netlist
        an = _analysis(netlist)
        if not an.report.ok:
            raise NetlistError(an.report.describe())
        self._an = an
        self._cycle_fn = (_compile_cycle if compiled else _interpret_cycle)(netlist, an)
        self._input_names = [name for name, _ in netlist.inputs]
        self._dff_index = {cid: j for j, cid in enumerate(an.dff_ids)}
        self.output_names = [name for name, _ in netlist.outputs]
        self._out_index = {n: k for k, n in enumerate(self.output_names)}
        self.dff_values = [0] * len(an.dff_ids)
        w = netlist.mem_width()
        self.memory = [0] * (1 << w) if w is not None else None
        self.cycle = 0

    def step(self, inputs: Mapping[str, int]) -> tuple:
        """Advance one clock cycle; returns output values in declared order."""
        row = []
        for name in self._input_names:
            if name not in inputs:
                raise NetlistError(f"missing input stream {name!r}")
            row.append(1 if inputs[name] else 0)
        for name in inputs:
            if name not in self.netlist._input_names:
                raise NetlistError(f"unknown input {name!r}")
        nxt, outs = self._cycle_fn(row, self.dff_values, self.memory)
        self.dff_values = list(nxt)
        self.cycle += 1
        return outs

    def output(self, outs: tuple, name: str) -> int:
        return outs[self._out_index[name]]

    def peek_dff(self, ref: NodeRef) -> int:
        return self.dff_values[self._dff_index[ref.comp]]

    def poke_dff(self, ref: NodeRef, value: int):
        self.dff_values[self._dff_index[ref.comp]] = 1 if value else 0

    def state(self) -> tuple:
        return tuple(self.dff_values)

    def set_state(self, state: Iterable[int]):
        state = list(state)
        if len(state) != len(self.dff_values):
            raise NetlistError("state width mismatch")
        self.dff_values = [1 if b else 0 for b in state]


def simulate(nl: Netlist, inputs: Mapping[str, object], ncycles: int,
             compiled: bool = True) -> dict[str, list[int]]:
    """Run ncycles from power-on; returns every declared output's stream.

    Input streams may be BitStream values or plain bit lists, which are
    padded with 0 beyond their end. The result is a pure function of the
    netlist and inputs: same arguments, same streams.
    """
    sim = Simulator(nl, compiled=compiled)
    streams = {}
    for name in sim._input_names:
        if name not in inputs:
            raise NetlistError(f"missing input stream {name!r}")
        streams[name] = _stream(inputs[name])
    for name in inputs:
        if name not in nl._input_names:
            raise NetlistError(f"unknown input {name!r}")
    result: dict[str, list[int]] = {name: [] for name in sim.output_names}
    names = sim.output_names
    row = {}
    for t in range(ncycles):
        for name, s in streams.items():
            row[name] = s.at(t)
        outs = sim.step(row)
        for k, name in enumerate(names):
            result[name].append(outs[k])
    return result


# -- serialization -----------------------------------------------------

NETLIST_HEADER = "sigma16forge-netlist v1"


def _ref_token(ref):
    return f"{ref.comp}:{ref.bit}" if ref.bit else str(ref.comp)


def export_netlist(nl: Netlist) -> str:
    """Text form: one comp record per line in id order, then io tables."""
    lines = [NETLIST_HEADER]
    for i, c in enumerate(nl.components):
        parts = [f"comp {i} {c.kind}"]
        parts += [_ref_token(r) for r in c.operands]
        lines.append(" ".join(parts))
    for name, cid in nl.inputs:
        lines.append(f"in {name} {cid}")
    for name, ref in nl.outputs:
        lines.append(f"out {name} {_ref_token(ref)}")
    return "\n".join(lines) + "\n"


def import_netlist(text: str) -> Netlist:
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or lines[0].strip() != NETLIST_HEADER:
        raise NetlistError("bad netlist header")
    nl = Netlist()
    pending: list[tuple[Component, list[str]]] = []

    def parse_ref(tok):
        comp, _, bit = tok.partition(":")
        return NodeRef(nl, int(comp), int(bit) if bit else 0)

    mem_seen = False
    for line in lines[1:]:
        parts = line.split()
        if parts[0] == "comp":
            cid, kind = int(parts[1]), parts[2]
            if cid != len(nl.components):
                raise NetlistError(f"component ids must be dense, got {cid}")
            ops = tuple(parse_ref(t) for t in parts[3:])
            if kind == MEM:
                if mem_seen:
                    raise NetlistError("more than one memory port")
                mem_seen = True
                if len(ops) % 2 == 0:
                    raise NetlistError("bad mem operand count")
                width = (len(ops) - 1) // 2
                nl.components.append(Component(MEM, ops, width=width))
                nl._mem_id = cid
            elif kind == INPUT:
                nl.components.append(Component(INPUT))
            elif kind in (ZERO, ONE):
                nl.components.append(Component(kind))
            elif kind in GATE_KINDS + (DFF,):
                if len(ops) != _ARITY[kind]:
                    raise NetlistError(f"{kind} arity mismatch")
                nl.components.append(Component(kind, ops))
            else:
                raise NetlistError(f"unknown component kind {kind!r}")
        elif parts[0] == "in":
            name, cid = parts[1], int(parts[2])
            if nl.components[cid].kind != INPUT:
                raise NetlistError(f"in record {name} does not name an input")
            nl.components[cid].name = name
            nl.inputs.append((name, cid))
            nl._input_names.add(name)
        elif parts[0] == "out":
            nl.add_output(parts[1], parse_ref(parts[2]))
        else:
            raise NetlistError(f"unknown record {parts[0]!r}")
    for i, c in enumerate(nl.components):
        for r in c.operands:
            if not (0 <= r.comp < len(nl.components)):
                raise NetlistError(f"comp {i} references missing node {r.comp}")
    nl._version += 1
    return nl


# -- waveform export ---------------------------------------------------


def export_vcd(streams: Mapping[str, Sequence[int]], ncycles: int,
               signals: Optional[Sequence[str]] = None,
               module: str = "top") -> str:
    """Render simulation streams as a value change dump.

    One timestep per clock cycle, scalar wires only. signals selects and
    orders the dumped streams; by default every stream is dumped.
    """
    names = list(signals) if signals is not None else list(streams)
    for n in names:
        if n not in streams:
            raise NetlistError(f"unknown signal {n!r}")

    def ident(k):
        # Printable VCD identifier characters, base 94 starting at '!'.
        chars = []
        k += 1
        while k:
            k, rem = divmod(k - 1, 94)
            chars.append(chr(33 + rem))
        return "".join(chars)

    out = [
        "$timescale 1 ns $end",
        f"$scope module {module} $end",
    ]
    ids = {}
    for k, n in enumerate(names):
        ids[n] = ident(k)
        out.append(f"$var wire 1 {ids[n]} {n} $end")
    out.append("$upscope $end")
    out.append("$enddefinitions $end")
    last = {}
    for t in range(ncycles):
        changes = []
        for n in names:
            v = streams[n][t] if t < len(streams[n]) else 0
            if last.get(n) != v:
                changes.append(f"{v}{ids[n]}")
                last[n] = v
        if t == 0:
            out.append("$dumpvars")
            out.extend(changes)
            out.append("$end")
        elif changes:
            out.append(f"#{t}")
            out.extend(changes)
    out.append(f"#{ncycles}")
    return "\n".join(out) + "\n"
