"""Control algorithms and their synthesis to one-hot state machines.

A control algorithm is a list of named states. Each state asserts some
control signals, optionally gated on a 1-bit condition, and names its
successor: unconditionally, by a two-way branch on a condition, or by
dispatching on the value of a selector word (with nested dispatch for
expanding opcodes and a default target for unmatched values).

Synthesis spends one flip flop per state. While the reset input is 1,
the initial state's flip flop loads 1 and all others load 0 at the next
tick, so exactly one state bit is set from the first post-reset cycle
onward. Each signal output is the OR over the states asserting it, each
contribution ANDed with its condition gate where present.

The textual form (see parse_control/format_control) is:

    control NAME
    signals s1, s2, ...
    selectors op:4, sub:4
    conditions c1, ...
    init STATE

    state STATE:
      assert s1, s2
      assert s3 when !c1
      next OTHER
      # or: next if c1 then A else B
      # or: next dispatch op { 0 -> A, 1 -> B, default -> A }

Dispatch cases may nest another dispatch in place of a target name.
'#' starts a comment; values are decimal or 0x-prefixed hex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .circuits import any_of, decode, mux1
from .netlist import Netlist, NetlistError


class ControlError(ValueError):
    pass


@dataclass
class Assertion:
    signal: str
    condition: Optional[str] = None
    when: bool = True  # assert when the condition has this value


@dataclass
class Goto:
    target: str


@dataclass
class Dispatch:
    selector: str
    cases: dict  # value -> str | Dispatch
    default: str


@dataclass
class Branch:
    condition: str
    then: str
    otherwise: str


NextRule = Union[Goto, Dispatch, Branch]


@dataclass
class State:
    name: str
    assertions: list = field(default_factory=list)
    next: Optional[NextRule] = None


@dataclass
class ControlAlgorithm:
    name: str
    states: list
    signals: list
    selectors: dict = field(default_factory=dict)   # name -> bit width
    conditions: list = field(default_factory=list)
    initial: Optional[str] = None

    def __post_init__(self):
        if self.initial is None and self.states:
            self.initial = self.states[0].name

    def state_names(self):
        return [s.name for s in self.states]


def validate(alg: ControlAlgorithm) -> list:
    """Structural diagnostics; empty list means synthesizable."""
    diags = []
    names = alg.state_names()
    seen = set()
    for n in names:
        if n in seen:
            diags.append(f"duplicate state name {n}")
        seen.add(n)
    if alg.initial not in seen:
        diags.append(f"initial state {alg.initial} is not defined")

    def check_target(state, t):
        if t not in seen:
            diags.append(f"state {state}: next target {t} is not defined")

    def check_rule(state, rule):
        if isinstance(rule, Goto):
            check_target(state, rule.target)
        elif isinstance(rule, Branch):
            if rule.condition not in alg.conditions:
                diags.append(f"state {state}: unknown condition {rule.condition}")
            check_target(state, rule.then)
            check_target(state, rule.otherwise)
        elif isinstance(rule, Dispatch):
            if rule.selector not in alg.selectors:
                diags.append(f"state {state}: unknown selector {rule.selector}")
            else:
                width = alg.selectors[rule.selector]
                for v in rule.cases:
                    if not (0 <= v < (1 << width)):
                        diags.append(
                            f"state {state}: dispatch value {v} exceeds "
                            f"{rule.selector}:{width}")
            check_target(state, rule.default)
            for v, sub in rule.cases.items():
                if isinstance(sub, Dispatch):
                    check_rule(state, sub)
                else:
                    check_target(state, sub)
        else:
            diags.append(f"state {state}: missing next rule")

    for s in alg.states:
        check_rule(s.name, s.next)
        for a in s.assertions:
            if a.signal not in alg.signals:
                diags.append(f"state {s.name}: unknown signal {a.signal}")
            if a.condition is not None and a.condition not in alg.conditions:
                diags.append(f"state {s.name}: unknown condition {a.condition}")
    return diags


class ControlSynthesis:
    """Two-phase circuit generation for one control algorithm.

    Constructing the object creates the state flip flops immediately, so
    their outputs (and any signal asserted without condition gates) can
    feed datapath logic that in turn produces the selector words and
    condition bits. finish() then closes the loop: it builds the gated
    signals and the next-state network and binds every state flip flop.
    """

    def __init__(self, nl: Netlist, alg: ControlAlgorithm, reset):
        diags = validate(alg)
        if diags:
            raise ControlError("; ".join(diags))
        self.nl = nl
        self.alg = alg
        self.reset = reset
        self.state = {s.name: nl.dff() for s in alg.states}
        self._signals = {}
        self._gated = {a.signal for s in alg.states for a in s.assertions
                       if a.condition is not None}
        self._finished = False

    @property
    def state_word(self):
        return [self.state[n] for n in self.alg.state_names()]

    def signal(self, name):
        if name not in self.alg.signals:
            raise ControlError(f"unknown signal {name}")
        if name in self._signals:
            return self._signals[name]
        if name in self._gated and not self._finished:
            raise ControlError(f"signal {name} is condition-gated; "
                               "available after finish()")
        nl = self.nl
        terms = []
        for s in self.alg.states:
            for a in s.assertions:
                if a.signal != name:
                    continue
                bit = self.state[s.name]
                if a.condition is not None:
                    c = self._conditions[a.condition]
                    bit = nl.and2(bit, c if a.when else nl.inv(c))
                terms.append(bit)
        out = any_of(nl, terms) if terms else nl.constant(0)
        self._signals[name] = out
        return out

    def finish(self, selectors=None, conditions=None):
        """Bind next-state logic using the given selector words and
        condition bits; afterwards every signal is available."""
        if self._finished:
            raise ControlError("finish() called twice")
        nl, alg = self.nl, self.alg
        selectors = selectors or {}
        conditions = conditions or {}
        for name, width in alg.selectors.items():
            if name not in selectors or len(selectors[name]) != width:
                raise ControlError(f"selector {name}:{width} not supplied")
        for name in alg.conditions:
            if name not in conditions:
                raise ControlError(f"condition {name} not supplied")
        self._conditions = conditions
        decoded = {name: decode(nl, selectors[name])
                   for name in alg.selectors}

        incoming = {n: [] for n in alg.state_names()}

        def route(src_term, rule):
            if isinstance(rule, Goto):
                incoming[rule.target].append(src_term)
            elif isinstance(rule, Branch):
                c = conditions[rule.condition]
                incoming[rule.then].append(nl.and2(src_term, c))
                incoming[rule.otherwise].append(nl.and2(src_term, nl.inv(c)))
            else:
                dec = decoded[rule.selector]
                matched = []
                for v, sub in sorted(rule.cases.items()):
                    matched.append(dec[v])
                    term = nl.and2(src_term, dec[v])
                    if isinstance(sub, Dispatch):
                        route(term, sub)
                    else:
                        incoming[sub].append(term)
                unmatched = nl.inv(any_of(nl, matched)) if matched \
                    else nl.constant(1)
                incoming[rule.default].append(nl.and2(src_term, unmatched))

        for s in alg.states:
            route(self.state[s.name], s.next)

        zero, one = nl.constant(0), nl.constant(1)
        for name in alg.state_names():
            normal = any_of(nl, incoming[name]) if incoming[name] else zero
            forced = one if name == alg.initial else zero
            nl.set_dff_source(self.state[name],
                              mux1(nl, self.reset, normal, forced))
        self._finished = True
        for name in alg.signals:
            self.signal(name)
        return self

    def signals(self):
        if not self._finished:
            raise ControlError("signals() before finish()")
        return {name: self.signal(name) for name in self.alg.signals}


def synthesize(nl, alg, reset, selectors=None, conditions=None):
    """One-shot synthesis for algorithms without construction cycles."""
    return ControlSynthesis(nl, alg, reset).finish(selectors, conditions)


def state_name_of(alg: ControlAlgorithm, bits) -> str:
    """Decode a one-hot state word sampled from simulation."""
    names = alg.state_names()
    if len(bits) != len(names):
        raise ControlError("state word width mismatch")
    hot = [i for i, b in enumerate(bits) if b]
    if len(hot) != 1:
        raise ControlError(f"state word is not one-hot: {bits}")
    return names[hot[0]]


# -- textual form --------------------------------------------------------


def format_control(alg: ControlAlgorithm) -> str:
    out = [f"control {alg.name}"]
    if alg.signals:
        out.append("signals " + ", ".join(alg.signals))
    if alg.selectors:
        out.append("selectors " +
                    ", ".join(f"{n}:{w}" for n, w in alg.selectors.items()))
    if alg.conditions:
        out.append("conditions " + ", ".join(alg.conditions))
    out.append(f"init {alg.initial}")

    def fmt_rule(rule):
        if isinstance(rule, Goto):
            return rule.target
        if isinstance(rule, Branch):
            return f"if {rule.condition} then {rule.then} else {rule.otherwise}"
        cases = ", ".join(
            f"{v} -> {fmt_rule(sub) if isinstance(sub, Dispatch) else sub}"
            for v, sub in sorted(rule.cases.items()))
        sep = ", " if cases else ""
        return (f"dispatch {rule.selector} {{ {cases}{sep}"
                f"default -> {rule.default} }}")

    for s in alg.states:
        out.append("")
        out.append(f"state {s.name}:")
        plain = [a.signal for a in s.assertions if a.condition is None]
        if plain:
            out.append("  assert " + ", ".join(plain))
        for a in s.assertions:
            if a.condition is not None:
                c = a.condition if a.when else "!" + a.condition
                out.append(f"  assert {a.signal} when {c}")
        out.append(f"  next {fmt_rule(s.next)}")
    return "\n".join(out) + "\n"


def _strip_comment(line):
    i = line.find("#")
    return line if i < 0 else line[:i]


def _parse_int(tok):
    return int(tok, 16) if tok.startswith("0x") else int(tok)


def _parse_rule(text, where):
    text = text.strip()
    if text.startswith("if "):
        try:
            _, rest = text.split("if ", 1)
            cond, rest = rest.split(" then ", 1)
            then, otherwise = rest.split(" else ", 1)
        except ValueError:
            raise ControlError(f"{where}: malformed branch: {text!r}")
        return Branch(cond.strip(), then.strip(), otherwise.strip())
    if text.startswith("dispatch "):
        head, _, body = text.partition("{")
        selector = head.split()[1]
        if not body.rstrip().endswith("}"):
            raise ControlError(f"{where}: dispatch missing closing brace")
        body = body.rstrip()[:-1]
        cases, default = {}, None
        for part in _split_cases(body):
            if not part.strip():
                continue
            key, _, target = part.partition("->")
            key, target = key.strip(), target.strip()
            if key == "default":
                default = target
            elif target.startswith("dispatch"):
                cases[_parse_int(key)] = _parse_rule(target, where)
            else:
                cases[_parse_int(key)] = target
        if default is None:
            raise ControlError(f"{where}: dispatch needs a default case")
        return Dispatch(selector, cases, default)
    if not text or " " in text:
        raise ControlError(f"{where}: malformed next rule: {text!r}")
    return Goto(text)


def _split_cases(body):
    """Split on commas not nested inside braces."""
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_control(text: str) -> ControlAlgorithm:
    name = "control"
    signals, conditions = [], []
    selectors = {}
    initial = None
    states = []
    cur = None
    pending_next = None

    def close_state():
        nonlocal cur, pending_next
        if cur is not None:
            if pending_next is None:
                raise ControlError(f"state {cur.name}: missing next rule")
            cur.next = _parse_rule(pending_next, f"state {cur.name}")
            states.append(cur)
        cur, pending_next = None, None

    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = _strip_comment(lines[i]).rstrip()
        i += 1
        s = line.strip()
        if not s:
            continue
        if s.startswith("control "):
            name = s.split(None, 1)[1]
        elif s.startswith("signals "):
            signals += [t.strip() for t in s[len("signals "):].split(",")]
        elif s.startswith("selectors "):
            for t in s[len("selectors "):].split(","):
                n, _, w = t.strip().partition(":")
                selectors[n.strip()] = int(w)
        elif s.startswith("conditions "):
            conditions += [t.strip() for t in s[len("conditions "):].split(",")]
        elif s.startswith("init "):
            initial = s.split(None, 1)[1]
        elif s.startswith("state "):
            close_state()
            n = s[len("state "):].rstrip(":").strip()
            cur = State(n, [], None)
        elif s.startswith("assert "):
            if cur is None:
                raise ControlError("assert outside a state block")
            body = s[len("assert "):]
            if " when " in body:
                sigs, cond = body.rsplit(" when ", 1)
                cond = cond.strip()
                when = not cond.startswith("!")
                cond = cond.lstrip("!").strip()
                for t in sigs.split(","):
                    cur.assertions.append(Assertion(t.strip(), cond, when))
            else:
                for t in body.split(","):
                    cur.assertions.append(Assertion(t.strip()))
        elif s.startswith("next "):
            if cur is None:
                raise ControlError("next outside a state block")
            pending_next = s[len("next "):]
            # A dispatch body may continue over following lines.
            while pending_next.count("{") > pending_next.count("}"):
                if i >= len(lines):
                    raise ControlError(f"state {cur.name}: unterminated dispatch")
                pending_next += " " + _strip_comment(lines[i]).strip()
                i += 1
        else:
            raise ControlError(f"unrecognized line: {line!r}")
    close_state()
    alg = ControlAlgorithm(name, states, signals, selectors, conditions,
                           initial)
    diags = validate(alg)
    if diags:
        raise ControlError("; ".join(diags))
    return alg


def control_circuit(alg: ControlAlgorithm) -> Netlist:
    """Standalone circuit: reset plus one input per condition bit and
    selector word; outputs every signal and state bit."""
    from .circuits import word_input

    nl = Netlist()
    reset = nl.add_input("reset")
    selectors = {name: word_input(nl, name, width)
                 for name, width in alg.selectors.items()}
    conditions = {name: nl.add_input(name) for name in alg.conditions}
    synth = synthesize(nl, alg, reset, selectors, conditions)
    for name, ref in synth.signals().items():
        nl.add_output(name, ref)
    for name in alg.state_names():
        nl.add_output(name, synth.state[name])
    return nl
