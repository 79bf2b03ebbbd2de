"""Traffic light controllers built on the control synthesizer.

Version 1 cycles green, green, green, amber, red, red, red, red, amber
forever after a reset pulse. Version 2 adds a pedestrian request button:
a press is latched, served at the next green-to-amber boundary, and the
walk light then burns through the red phase. A counter tallies button
presses (one per rising edge, even while a walk is pending or active).
"""

from __future__ import annotations

from .circuits import any_of, bitslice, constant_word, delayw, mux1w, ripple_add, word_output
from .control import Assertion, ControlAlgorithm, Goto, State, synthesize
from .netlist import Netlist

COUNT_WIDTH = 8

_PHASES = ["g0", "g1", "g2", "a0", "r0", "r1", "r2", "r3", "a1"]
_LIGHT = {"g": "green", "a": "amber", "r": "red"}


def light_cycle_algorithm() -> ControlAlgorithm:
    states = []
    for i, name in enumerate(_PHASES):
        nxt = _PHASES[(i + 1) % len(_PHASES)]
        states.append(State(name, [Assertion(_LIGHT[name[0]])], Goto(nxt)))
    return ControlAlgorithm("traffic", states, ["green", "amber", "red"])


def build_traffic_v1() -> Netlist:
    """Inputs: reset. Outputs: green, amber, red."""
    nl = Netlist()
    reset = nl.add_input("reset")
    synth = synthesize(nl, light_cycle_algorithm(), reset)
    for name in ("green", "amber", "red"):
        nl.add_output(name, synth.signal(name))
    return nl


def build_traffic_v2() -> Netlist:
    """Inputs: reset, request. Outputs: lights, walk, dont_walk, count.

    The walk light is asserted only during the red phase of a cycle whose
    green-to-amber boundary saw a pending request, so walk and green can
    never overlap. count is an 8-bit tally of request edges.
    """
    nl = Netlist()
    reset = nl.add_input("reset")
    request = nl.add_input("request")
    synth = synthesize(nl, light_cycle_algorithm(), reset)
    for name in ("green", "amber", "red"):
        nl.add_output(name, synth.signal(name))

    prev = nl.dff(request)
    edge = nl.and2(request, nl.inv(prev))

    run = nl.inv(reset)
    pending = nl.dff()
    grant = nl.and2(synth.state["g2"], nl.or2(pending, edge))
    nl.set_dff_source(
        pending,
        nl.and3(run, nl.or2(edge, pending), nl.inv(grant)))

    granted = nl.dff()
    leaving = synth.state["r3"]
    nl.set_dff_source(
        granted,
        nl.and2(run, nl.or2(grant, nl.and2(granted, nl.inv(leaving)))))

    walk = nl.and2(granted, synth.signal("red"))
    nl.add_output("walk", walk)
    nl.add_output("dont_walk", nl.inv(walk))

    count = [nl.dff() for _ in range(COUNT_WIDTH)]
    zero_word = constant_word(nl, 0, COUNT_WIDTH)
    _, bumped = ripple_add(nl, edge, bitslice(count, zero_word))
    held = mux1w(nl, reset, bumped, zero_word)
    for q, v in zip(count, held):
        nl.set_dff_source(q, v)
    word_output(nl, "count", count)
    return nl
