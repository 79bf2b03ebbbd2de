"""Reusable circuit blocks over the netlist builder.

Words are plain Python lists of NodeRefs, most significant bit first.
Adder-style blocks take their operands as a bit slice: a list of
(x_i, y_i) pairs, again MSB first, so the two words travel together.
"""

from __future__ import annotations

from .netlist import Netlist, NetlistError, BitStream

# -- word plumbing -----------------------------------------------------


def int_to_bits(value, width):
    """MSB-first bit list of value taken modulo 2**width."""
    value &= (1 << width) - 1
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def bits_to_int(bits):
    v = 0
    for b in bits:
        v = (v << 1) | (1 if b else 0)
    return v


def word_input(nl, name, width):
    """Declare width input bits named name[width-1] .. name[0]."""
    return [nl.add_input(f"{name}[{width - 1 - i}]") for i in range(width)]


def word_output(nl, name, word):
    for i, ref in enumerate(word):
        nl.add_output(f"{name}[{len(word) - 1 - i}]", ref)


def constant_word(nl, value, width):
    zero, one = nl.constant(0), nl.constant(1)
    return [one if b else zero for b in int_to_bits(value, width)]


def word_streams(name, width, values, default=0):
    """Per-bit input streams that drive a word input with integer values."""
    out = {}
    for s in range(width):
        out[f"{name}[{s}]"] = BitStream(
            [(v >> s) & 1 for v in values], (default >> s) & 1)
    return out


def word_value(result, name, width, t):
    """Read back an integer from per-bit output streams at cycle t."""
    v = 0
    for s in range(width):
        v |= result[f"{name}[{s}]"][t] << s
    return v


def _same_width(*words):
    w = len(words[0])
    for x in words[1:]:
        if len(x) != w:
            raise NetlistError("word width mismatch")
    return w


# -- gates on words ----------------------------------------------------


def mux1(nl, c, x, y):
    """Two-way multiplexer: x when c=0, y when c=1."""
    return nl.or2(nl.and2(nl.inv(c), x), nl.and2(c, y))


def mux1w(nl, c, xs, ys):
    _same_width(xs, ys)
    return [mux1(nl, c, x, y) for x, y in zip(xs, ys)]


def any_of(nl, xs):
    """OR tree over one or more bits."""
    xs = list(xs)
    if not xs:
        raise NetlistError("any_of needs at least one bit")
    while len(xs) > 1:
        nxt, i = [], 0
        while i < len(xs):
            if len(xs) - i >= 3:
                nxt.append(nl.or3(xs[i], xs[i + 1], xs[i + 2]))
                i += 3
            elif len(xs) - i == 2:
                nxt.append(nl.or2(xs[i], xs[i + 1]))
                i += 2
            else:
                nxt.append(xs[i])
                i += 1
        xs = nxt
    return xs[0]


def all_of(nl, xs):
    """AND tree over one or more bits."""
    xs = list(xs)
    if not xs:
        raise NetlistError("all_of needs at least one bit")
    while len(xs) > 1:
        nxt, i = [], 0
        while i < len(xs):
            if len(xs) - i >= 3:
                nxt.append(nl.and3(xs[i], xs[i + 1], xs[i + 2]))
                i += 3
            elif len(xs) - i == 2:
                nxt.append(nl.and2(xs[i], xs[i + 1]))
                i += 2
            else:
                nxt.append(xs[i])
                i += 1
        xs = nxt
    return xs[0]


def decode(nl, addr):
    """One-hot decoder: output position i (MSB first) is 1 iff addr = i."""
    k = len(addr)
    if k < 1:
        raise NetlistError("decode needs a nonempty address")
    invs = [nl.inv(a) for a in addr]
    outs = []
    for v in range(1 << k):
        lits = [addr[i] if (v >> (k - 1 - i)) & 1 else invs[i]
                for i in range(k)]
        outs.append(all_of(nl, lits))
    return outs


# -- registers ---------------------------------------------------------


def reg1(nl, ld, x):
    """One-bit register: holds its value, loads x on cycles where ld=1."""
    s = nl.dff()
    nl.set_dff_source(s, mux1(nl, ld, s, x))
    return s


def regw(nl, ld, xs):
    return [reg1(nl, ld, x) for x in xs]


def bind_regw(nl, qs, ld, xs):
    """Close deferred dffs qs as a load-enabled register over xs."""
    _same_width(qs, xs)
    for q, x in zip(qs, xs):
        nl.set_dff_source(q, mux1(nl, ld, q, x))
    return qs


def delayw(nl, xs):
    """Plain one-cycle delay of a word (no load enable)."""
    return [nl.dff(x) for x in xs]


# -- scans and adders --------------------------------------------------


def mscanr(f, carry, items):
    """Scan from the right: f(item, carry) -> (carry', out).

    Returns (final carry, outputs) with outputs aligned to items, so an
    MSB-first bit slice comes back MSB-first while the carry threads from
    the least significant position upward.
    """
    outs = [None] * len(items)
    for i in range(len(items) - 1, -1, -1):
        carry, outs[i] = f(items[i], carry)
    return carry, outs


def bitslice(xs, ys):
    _same_width(xs, ys)
    return list(zip(xs, ys))


def full_add(nl, xy, c):
    """One full adder: returns (carry out, sum bit)."""
    x, y = xy
    p = nl.xor2(x, y)
    return nl.or2(nl.and2(x, y), nl.and2(p, c)), nl.xor2(p, c)


def ripple_add(nl, cin, xy):
    """Carry-ripple adder over a bit slice; linear depth."""
    return mscanr(lambda pair, c: full_add(nl, pair, c), cin, xy)


# Depth bound documented for prefix_add: at most 2*ceil(log2 n) + 4 gate
# levels (generate/propagate setup, log-depth carry merge, final sums).
PREFIX_ADD_DEPTH_FACTOR = 2
PREFIX_ADD_DEPTH_BIAS = 4


def prefix_add(nl, cin, xy):
    """Parallel-prefix (Kogge-Stone) adder; logarithmic depth.

    Same contract as ripple_add: (carry out, sum word).
    """
    n = len(xy)
    lsb_first = list(reversed(xy))
    p = [nl.xor2(x, y) for x, y in lsb_first]
    g = [nl.and2(x, y) for x, y in lsb_first]
    G, P = list(g), list(p)
    d = 1
    while d < n:
        nG, nP = list(G), list(P)
        for i in range(d, n):
            nG[i] = nl.or2(G[i], nl.and2(P[i], G[i - d]))
            nP[i] = nl.and2(P[i], P[i - d])
        G, P = nG, nP
        d *= 2
    carries = [cin]
    for i in range(1, n):
        carries.append(nl.or2(G[i - 1], nl.and2(P[i - 1], cin)))
    sums = [nl.xor2(p[i], carries[i]) for i in range(n)]
    cout = nl.or2(G[n - 1], nl.and2(P[n - 1], cin))
    return cout, list(reversed(sums))


# -- ALUs ----------------------------------------------------------------


def alu_exercise(nl, op, xy):
    """Four-function two's complement ALU over one shared adder.

    op = (p, q) selects: 00 x+y, 01 x-y, 10 y+1, 11 -y. Returns
    (ofl, result) where ofl flags signed overflow of the selected
    operation.
    """
    p, q = op
    zero = nl.constant(0)
    xin, yin = [], []
    for x, y in xy:
        ny = nl.inv(y)
        xin.append(mux1(nl, p, x, mux1(nl, q, y, zero)))
        yin.append(mux1(nl, q, mux1(nl, p, y, zero), ny))
    cin = nl.or2(p, q)
    cout, s = ripple_add(nl, cin, bitslice(xin, yin))
    carry_msb = nl.xor2(s[0], nl.xor2(xin[0], yin[0]))
    ofl = nl.xor2(cout, carry_msb)
    return ofl, s


def alu_m1(nl, func, x, y):
    """Processor ALU: add, subtract, increment, negate, and signed
    comparisons returning 0 or 1.

    func = (a, b, c, d): 0000 x+y, 0100 x-y, 1100 x+1, 1000 -y,
    0001 x<y, 0010 x=y, 0011 x>y. Returns (cnd, result) with
    cnd = 1 iff the result word is nonzero.
    """
    a, b, c, d = func
    n = _same_width(x, y)
    cmp_ = nl.and3(nl.inv(a), nl.inv(b), nl.or2(c, d))
    yinv = nl.or2(nl.xor2(a, b), cmp_)
    yzero = nl.and2(a, b)
    xzero = nl.and2(a, nl.inv(b))
    cin = nl.or3(a, b, cmp_)
    keep_x, keep_y = nl.inv(xzero), nl.inv(yzero)
    xin = [nl.and2(xb, keep_x) for xb in x]
    yin = [nl.and2(nl.xor2(yb, yinv), keep_y) for yb in y]
    cout, s = ripple_add(nl, cin, bitslice(xin, yin))
    diffs = [nl.xor2(xb, yb) for xb, yb in zip(x, y)]
    eq = nl.inv(any_of(nl, diffs))
    # Signed x<y from the subtraction: differing signs decide directly,
    # equal signs cannot overflow so the difference sign decides.
    lt = nl.or2(nl.and2(x[0], nl.inv(y[0])),
                nl.and2(nl.inv(diffs[0]), s[0]))
    gt = nl.and2(nl.inv(lt), nl.inv(eq))
    flag = nl.or3(nl.and3(lt, nl.inv(c), d),
                  nl.and3(eq, c, nl.inv(d)),
                  nl.and3(gt, c, d))
    keep_s = nl.inv(cmp_)
    r = [nl.and2(sb, keep_s) for sb in s[:-1]]
    r.append(mux1(nl, cmp_, s[-1], flag))
    cnd = any_of(nl, r)
    return cnd, r


# -- register file -----------------------------------------------------


class RegFileParts:
    """Read ports plus the underlying register words for inspection."""

    def __init__(self, a, b, registers):
        self.a = a
        self.b = b
        self.registers = registers


def _mux_word_tree(nl, addr, words):
    if len(words) == 1:
        return words[0]
    half = len(words) // 2
    lo = _mux_word_tree(nl, addr[1:], words[:half])
    hi = _mux_word_tree(nl, addr[1:], words[half:])
    return mux1w(nl, addr[0], lo, hi)


def build_regfile(nl, ld, dest, src_a, src_b, p):
    """2**k registers of len(p) bits with two combinational read ports.

    Writes land at the clock tick (reads in the write cycle see the old
    word). Register 0 always reads as zero; stores to it are retained in
    its flip flops but never observable.
    """
    k = _same_width(dest, src_a, src_b)
    n = len(p)
    dec = decode(nl, dest)
    registers = [regw(nl, nl.and2(ld, dec[i]), p) for i in range(1 << k)]
    zero = nl.constant(0)
    readable = [[zero] * n] + registers[1:]
    a = _mux_word_tree(nl, src_a, readable)
    b = _mux_word_tree(nl, src_b, readable)
    return RegFileParts(a, b, registers)


def regfile(nl, ld, dest, src_a, src_b, p):
    parts = build_regfile(nl, ld, dest, src_a, src_b, p)
    return parts.a, parts.b


class DeferredRegFile:
    """Register file built in two phases.

    A processor derives the word it writes back from the read ports,
    so the storage and read side must exist before the write side can
    be wired. Reads behave like build_regfile: register 0 is zero,
    reads in a write cycle see the old word.
    """

    def __init__(self, nl, src_a, src_b, width):
        k = _same_width(src_a, src_b)
        self.nl = nl
        self.registers = [[nl.dff() for _ in range(width)]
                          for _ in range(1 << k)]
        zero = nl.constant(0)
        readable = [[zero] * width] + self.registers[1:]
        self.a = _mux_word_tree(nl, src_a, readable)
        self.b = _mux_word_tree(nl, src_b, readable)
        self._bound = False

    def bind(self, ld, dest, p):
        if self._bound:
            raise NetlistError("register file already bound")
        self._bound = True
        dec = decode(self.nl, dest)
        for i, regs in enumerate(self.registers):
            bind_regw(self.nl, regs, self.nl.and2(ld, dec[i]), p)


# -- multipliers -------------------------------------------------------


def seq_multiplier(nl, start, x, y):
    """Shift-and-add multiplier with early exit.

    Pulse start for one cycle with the operands valid; busy rises the
    next cycle and stays 1 while work remains, dropping as soon as the
    unprocessed multiplier bits are all zero. When busy is 0 the product
    output holds x*y from the last started run (zero products finish
    without busy ever rising). At most n busy cycles for n-bit operands.
    """
    n = _same_width(x, y)
    zero = nl.constant(0)
    zlong = [zero] * (2 * n)
    acc = [nl.dff() for _ in range(2 * n)]
    mcand = [nl.dff() for _ in range(2 * n)]
    mr = [nl.dff() for _ in range(n)]
    busy = nl.dff()
    lsb = mr[-1]
    go = nl.and3(start, any_of(nl, x), any_of(nl, y))
    _, total = ripple_add(nl, zero, bitslice(acc, mcand))
    acc_run = mux1w(nl, lsb, acc, total)
    acc_next = mux1w(nl, start, mux1w(nl, busy, acc, acc_run), zlong)
    mcand_shift = mcand[1:] + [zero]
    mcand_next = mux1w(nl, start, mux1w(nl, busy, mcand, mcand_shift),
                       [zero] * n + x)
    mr_shift = [zero] + mr[:-1]
    mr_next = mux1w(nl, start, mux1w(nl, busy, mr, mr_shift), y)
    more = any_of(nl, mr[:-1]) if n > 1 else zero
    busy_next = mux1(nl, start, nl.and2(busy, more), go)
    for q, v in zip(acc + mcand + mr + [busy],
                    acc_next + mcand_next + mr_next + [busy_next]):
        nl.set_dff_source(q, v)
    return busy, acc


def pipelined_vecmul(nl, x, y):
    """k-stage pipelined multiplier: one product per cycle, latency k.

    Operands presented at cycle t yield their 2k-bit product on the
    output at cycle t+k; a new pair may enter every cycle.
    """
    k = _same_width(x, y)
    zero = nl.constant(0)
    zlong = [zero] * (2 * k)
    xs = [zero] * k + x
    ys = list(y)
    ps = list(zlong)
    for _ in range(k):
        addend = mux1w(nl, ys[-1], zlong, xs)
        _, ps = ripple_add(nl, zero, bitslice(ps, addend))
        xs = xs[1:] + [zero]
        ys = [zero] + ys[:-1]
        xs, ys, ps = delayw(nl, xs), delayw(nl, ys), delayw(nl, ps)
    return ps
