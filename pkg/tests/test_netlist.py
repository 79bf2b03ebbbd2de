import random

import pytest

from sigma16forge import netlist as nl_mod
from sigma16forge.netlist import (
    BitStream,
    Netlist,
    NetlistError,
    Simulator,
    check_synchronous,
    combinational_depth,
    export_netlist,
    export_vcd,
    import_netlist,
    simulate,
    stats,
)


def test_dff_powers_on_to_zero_and_delays():
    nl = Netlist()
    x = nl.add_input("x")
    q = nl.dff(x)
    nl.add_output("q", q)
    out = simulate(nl, {"x": [1, 0, 1, 1]}, 5)
    # Cycle 0 must be 0; afterwards q(t+1) = x(t).
    assert out["q"] == [0, 1, 0, 1, 1]


def test_toggle_loop_through_dff():
    nl = Netlist()
    q = nl.dff()
    nl.set_dff_source(q, nl.inv(q))
    nl.add_output("q", q)
    out = simulate(nl, {}, 6)
    assert out["q"] == [0, 1, 0, 1, 0, 1]


def test_combinational_self_loop_rejected():
    nl = Netlist()
    x = nl.add_input("x")
    # x = inv x: close the loop by rewriting the operand of a fresh gate.
    g = nl.inv(x)
    nl.components[g.comp].operands = (g,)
    report = check_synchronous(nl)
    assert not report.ok
    assert [r.comp for r in report.cycle] == [g.comp]
    with pytest.raises(NetlistError):
        Simulator(nl)


def test_two_gate_loop_reported_in_id_order():
    nl = Netlist()
    a = nl.inv(nl.constant(0))
    b = nl.inv(a)
    nl.components[a.comp].operands = (b,)
    report = check_synchronous(nl)
    assert not report.ok
    assert {r.comp for r in report.cycle} == {a.comp, b.comp}
    assert report.cycle[0].comp == min(a.comp, b.comp)


def test_loop_detection_matches_iterative_elimination():
    # Oracle: repeatedly remove combinational nodes whose operands are all
    # resolved; a residue means a loop exists. Random graphs, fixed seed.
    rng = random.Random(1234)
    for trial in range(200):
        nl = Netlist()
        nodes = [nl.add_input("i0"), nl.constant(1)]
        for _ in range(rng.randrange(2, 25)):
            k = rng.choice(["inv", "and2", "or2", "xor2", "dff"])
            if k == "inv":
                nodes.append(nl.inv(rng.choice(nodes)))
            elif k == "dff":
                nodes.append(nl.dff(rng.choice(nodes)))
            else:
                nodes.append(nl.gate(k, (rng.choice(nodes), rng.choice(nodes))))
        # Sometimes rewire one gate backwards to manufacture a cycle.
        if trial % 3 == 0:
            gates = [i for i, c in enumerate(nl.components)
                     if c.kind in nl_mod.GATE_KINDS]
            if len(gates) >= 2:
                tgt = rng.choice(gates)
                src = rng.choice([g for g in gates if g >= tgt])
                ops = list(nl.components[tgt].operands)
                ops[rng.randrange(len(ops))] = nl_mod.NodeRef(nl, src)
                nl.components[tgt].operands = tuple(ops)
        resolved = {i for i, c in enumerate(nl.components)
                    if c.kind not in nl_mod.GATE_KINDS}
        changed = True
        while changed:
            changed = False
            for i, c in enumerate(nl.components):
                if i in resolved or c.kind not in nl_mod.GATE_KINDS:
                    continue
                if all(r.comp in resolved for r in c.operands):
                    resolved.add(i)
                    changed = True
        has_loop = len(resolved) < len(nl.components)
        assert check_synchronous(nl).ok == (not has_loop)


def test_unbound_dff_is_an_error():
    nl = Netlist()
    nl.dff()
    with pytest.raises(NetlistError):
        check_synchronous(nl)


def test_input_padding_and_explicit_default():
    nl = Netlist()
    x = nl.add_input("x")
    nl.add_output("x", x)
    assert simulate(nl, {"x": [1]}, 4)["x"] == [1, 0, 0, 0]
    assert simulate(nl, {"x": BitStream([0], default=1)}, 4)["x"] == [0, 1, 1, 1]


def test_missing_and_unknown_input_streams():
    nl = Netlist()
    nl.add_input("x")
    with pytest.raises(NetlistError):
        simulate(nl, {}, 1)
    with pytest.raises(NetlistError):
        simulate(nl, {"x": [0], "typo": [0]}, 1)


def test_foreign_ref_rejected():
    a, b = Netlist(), Netlist()
    x = a.add_input("x")
    with pytest.raises(NetlistError):
        b.inv(x)


def test_duplicate_names_rejected():
    nl = Netlist()
    nl.add_input("x")
    with pytest.raises(NetlistError):
        nl.add_input("x")
    c = nl.constant(0)
    nl.add_output("y", c)
    with pytest.raises(NetlistError):
        nl.add_output("y", c)


def test_stats_counts():
    nl = Netlist()
    x, y = nl.add_input("x"), nl.add_input("y")
    g = nl.or2(nl.and2(x, y), nl.inv(x))
    nl.add_output("g", g)
    s = stats(nl)
    assert s["kinds"] == {"input": 2, "and2": 1, "inv": 1, "or2": 1}
    assert s["gate_count"] == 3
    assert s["dff_count"] == 0
    assert s["components"] == 5


def test_combinational_depth_counts_gates():
    nl = Netlist()
    x = nl.add_input("x")
    nl.add_output("y", nl.inv(nl.inv(nl.inv(x))))
    assert combinational_depth(nl) == 3


def test_memory_read_during_write_sees_old_word():
    nl = Netlist()
    sto = nl.add_input("sto")
    a = [nl.add_input("a1"), nl.add_input("a0")]
    d = [nl.add_input("d1"), nl.add_input("d0")]
    out = nl.mem_port(sto, a, d)
    nl.add_output("o1", out[0])
    nl.add_output("o0", out[1])
    got = simulate(
        nl,
        {
            # Cycle 0: write 11 to address 2 while reading address 2.
            # Cycle 1: read address 2 back. Cycle 2: read address 0.
            "sto": [1, 0, 0],
            "a1": [1, 1, 0],
            "a0": [0, 0, 0],
            "d1": [1, 0, 0],
            "d0": [1, 0, 0],
        },
        3,
    )
    assert got["o1"] == [0, 1, 0]
    assert got["o0"] == [0, 1, 0]


def test_single_memory_port_enforced():
    nl = Netlist()
    sto = nl.constant(0)
    a = [nl.constant(0)]
    nl.mem_port(sto, a, a)
    with pytest.raises(NetlistError):
        nl.mem_port(sto, a, a)


def _random_circuit(rng, with_mem=False):
    nl = Netlist()
    ins = [nl.add_input(f"i{k}") for k in range(rng.randrange(1, 4))]
    pool = list(ins) + [nl.constant(rng.randrange(2))]
    deferred = []
    for _ in range(rng.randrange(5, 40)):
        k = rng.random()
        if k < 0.15:
            q = nl.dff()
            deferred.append(q)
            pool.append(q)
        elif k < 0.3:
            pool.append(nl.inv(rng.choice(pool)))
        elif k < 0.5:
            pool.append(nl.xor2(rng.choice(pool), rng.choice(pool)))
        elif k < 0.75:
            pool.append(nl.and2(rng.choice(pool), rng.choice(pool)))
        elif k < 0.9:
            pool.append(nl.or2(rng.choice(pool), rng.choice(pool)))
        else:
            pool.append(nl.and3(rng.choice(pool), rng.choice(pool),
                                rng.choice(pool)))
    if with_mem:
        taps = nl.mem_port(rng.choice(pool),
                           [rng.choice(pool) for _ in range(3)],
                           [rng.choice(pool) for _ in range(3)])
        pool.extend(taps)
    for q in deferred:
        nl.set_dff_source(q, rng.choice(pool))
    for k in range(rng.randrange(1, 5)):
        nl.add_output(f"o{k}", rng.choice(pool))
    return nl, ins


def test_compiled_and_interpreted_engines_agree():
    rng = random.Random(7)
    for trial in range(60):
        nl, ins = _random_circuit(rng, with_mem=(trial % 4 == 0))
        n = rng.randrange(3, 30)
        streams = {x.netlist.components[x.comp].name or f"i{k}":
                   [rng.randrange(2) for _ in range(n)]
                   for k, x in enumerate(ins)}
        streams = {f"i{k}": [rng.randrange(2) for _ in range(n)]
                   for k in range(len(ins))}
        a = simulate(nl, streams, n, compiled=True)
        b = simulate(nl, streams, n, compiled=False)
        assert a == b


def test_simulation_is_deterministic_and_prefix_monotonic():
    rng = random.Random(99)
    for trial in range(30):
        nl, ins = _random_circuit(rng)
        streams = {f"i{k}": [rng.randrange(2) for _ in range(40)]
                   for k in range(len(ins))}
        long = simulate(nl, streams, 40)
        again = simulate(nl, streams, 40)
        assert long == again
        short = simulate(nl, streams, 17)
        for name in long:
            assert long[name][:17] == short[name]


def test_export_import_round_trip():
    rng = random.Random(5)
    for trial in range(20):
        nl, _ = _random_circuit(rng, with_mem=(trial % 5 == 0))
        text = export_netlist(nl)
        back = import_netlist(text)
        assert stats(back) == stats(nl)
        assert export_netlist(back) == text
        assert text.startswith("sigma16forge-netlist v1\n")
        assert text.endswith("\n")


def test_import_rejects_garbage():
    with pytest.raises(NetlistError):
        import_netlist("nonsense\n")
    with pytest.raises(NetlistError):
        import_netlist("sigma16forge-netlist v1\ncomp 0 frob\n")


def _check_vcd(text):
    """Minimal structural validator for the dump we emit."""
    lines = text.splitlines()
    assert lines[0] == "$timescale 1 ns $end"
    ids = {}
    i = 1
    assert lines[i].startswith("$scope module")
    i += 1
    while lines[i].startswith("$var"):
        parts = lines[i].split()
        assert parts[1] == "wire" and parts[2] == "1"
        ids[parts[4]] = parts[3]
        i += 1
    assert lines[i] == "$upscope $end"
    assert lines[i + 1] == "$enddefinitions $end"
    assert lines[i + 2] == "$dumpvars"
    seen_time = -1
    for line in lines[i + 2:]:
        if line.startswith("#"):
            t = int(line[1:])
            assert t > seen_time
            seen_time = t
        elif line not in ("$dumpvars", "$end"):
            assert line[0] in "01" and line[1:] in ids.values()
    return ids


def test_vcd_export_structure():
    nl = Netlist()
    x = nl.add_input("x")
    q = nl.dff(x)
    nl.add_output("q", q)
    nl.add_output("nx", nl.inv(x))
    out = simulate(nl, {"x": [0, 1, 1, 0]}, 4)
    text = export_vcd(out, 4)
    ids = _check_vcd(text)
    assert set(ids) == {"q", "nx"}
    with pytest.raises(NetlistError):
        export_vcd(out, 4, signals=["missing"])


def test_state_poke_and_peek():
    nl = Netlist()
    q = nl.dff()
    nl.set_dff_source(q, q)
    nl.add_output("q", q)
    sim = Simulator(nl)
    assert sim.peek_dff(q) == 0
    sim.poke_dff(q, 1)
    outs = sim.step({})
    assert sim.output(outs, "q") == 1
