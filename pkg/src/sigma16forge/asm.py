"""Two-pass assembler and the object module container.

Source syntax, one statement per line:

    label                ; a label may stand alone
    loop   load R1,x[R0] ; or prefix a statement
           add R2,R2,R1
           jump loop[R0]
    x      data 42
           data $ffff,-3,x

A label starts in column one. Statements are indented. Comments run
from `;` to end of line. Operand fields may contain spaces after
commas. `data` takes a comma-separated list of values; `org` moves
the location counter and starts a new object block. Values are
decimal (optionally negative), $hex, or a label.

Object modules serialise to a line-oriented text format:

    sigma16forge-obj v1
    name main
    symbol loop 0002
    block 0000 f101 0005 0211 f043 0000
    block 0010 002a

Block records hold at most eight words; longer runs continue in the
next record at the advanced address.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .isa import (
    Instruction,
    RRR_OPCODES,
    RX_NO_DEST,
    RX_OPCODES,
    WORD_MASK,
    from_signed,
)

OBJ_HEADER = "sigma16forge-obj v1"

LABEL_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
REGISTER_RE = re.compile(r"[Rr](\d{1,2})\Z")
RX_OPERAND_RE = re.compile(r"(.+)\[([Rr]\d{1,2})\]\Z")

MEMORY_WORDS = 0x10000


class ObjectFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


@dataclass
class ObjectModule:
    name: str = "main"
    blocks: list[tuple[int, list[int]]] = field(default_factory=list)
    symbols: dict[str, int] = field(default_factory=dict)

    def word_count(self) -> int:
        return sum(len(ws) for _, ws in self.blocks)

    def words_at(self) -> dict[int, int]:
        """Address -> word map of everything the module defines."""
        out = {}
        for start, ws in self.blocks:
            for i, w in enumerate(ws):
                out[start + i] = w
        return out

    def load_into(self, mem: list[int]) -> list[str]:
        """Fills `mem` in place; returns overlap warnings."""
        warnings = []
        seen = set()
        for start, ws in self.blocks:
            for i, w in enumerate(ws):
                addr = start + i
                if addr >= len(mem):
                    warnings.append(f"address {addr:04x} outside memory")
                    continue
                if addr in seen:
                    warnings.append(f"address {addr:04x} written twice")
                seen.add(addr)
                mem[addr] = w
        return warnings

    def memory_image(self, size: int = MEMORY_WORDS) -> list[int]:
        mem = [0] * size
        self.load_into(mem)
        return mem

    def dense_words(self) -> list[int]:
        """Words from address 0 through the last defined address.

        Gaps between blocks are zero filled; the result is the shortest
        prefix of memory that contains every defined word.
        """
        top = max((start + len(ws) for start, ws in self.blocks), default=0)
        return self.memory_image(size=top)

    def to_text(self) -> str:
        lines = [OBJ_HEADER, f"name {self.name}"]
        for sym, addr in sorted(self.symbols.items(), key=lambda kv: (kv[1], kv[0])):
            lines.append(f"symbol {sym} {addr:04x}")
        for start, ws in self.blocks:
            for off in range(0, len(ws), 8):
                chunk = ws[off:off + 8]
                body = " ".join(f"{w:04x}" for w in chunk)
                lines.append(f"block {start + off:04x} {body}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ObjectModule":
        lines = [ln.rstrip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln.strip()]
        if not lines or lines[0].strip() != OBJ_HEADER:
            raise ObjectFormatError(f"missing header '{OBJ_HEADER}'")
        mod = cls(blocks=[])

        def hexword(tok, what):
            try:
                v = int(tok, 16)
            except ValueError:
                raise ObjectFormatError(f"bad {what} {tok!r}") from None
            if not 0 <= v <= WORD_MASK:
                raise ObjectFormatError(f"{what} {tok!r} out of range")
            return v

        for ln in lines[1:]:
            parts = ln.split()
            kind = parts[0]
            if kind == "name" and len(parts) == 2:
                mod.name = parts[1]
            elif kind == "symbol" and len(parts) == 3:
                if not LABEL_RE.match(parts[1]):
                    raise ObjectFormatError(f"bad symbol name {parts[1]!r}")
                mod.symbols[parts[1]] = hexword(parts[2], "symbol address")
            elif kind == "block" and len(parts) >= 3:
                start = hexword(parts[1], "block address")
                ws = [hexword(t, "word") for t in parts[2:]]
                if mod.blocks and mod.blocks[-1][0] + len(mod.blocks[-1][1]) == start:
                    mod.blocks[-1][1].extend(ws)
                else:
                    mod.blocks.append((start, ws))
            else:
                raise ObjectFormatError(f"unrecognised record {ln!r}")
        return mod


@dataclass
class AsmResult:
    object: ObjectModule | None
    errors: list[Diagnostic]
    listing: str
    symbols: dict[str, int]

    @property
    def ok(self) -> bool:
        return not self.errors


@dataclass
class _Stmt:
    line_no: int
    source: str
    label: str | None
    mnemonic: str | None
    operands: str
    addr: int = 0


def _split_statement(raw: str, line_no: int, errors) -> _Stmt | None:
    text = raw.split(";", 1)[0].rstrip()
    if not text.strip():
        return _Stmt(line_no, raw, None, None, "")
    label = None
    body = text
    if not text[0].isspace():
        head, _, rest = text.partition(" ")
        if not LABEL_RE.match(head):
            errors.append(Diagnostic(line_no, f"bad label {head!r}"))
            return None
        label = head
        body = rest
    body = body.strip()
    if not body:
        return _Stmt(line_no, raw, label, None, "")
    mnemonic, _, operands = body.partition(" ")
    return _Stmt(line_no, raw, label, mnemonic.lower(),
                 "".join(operands.split()))


def _statement_size(stmt: _Stmt, errors) -> int:
    m = stmt.mnemonic
    if m is None or m == "org":
        return 0
    if m == "data":
        return max(1, stmt.operands.count(",") + 1)
    if m in RX_OPCODES:
        return 2
    if m in RRR_OPCODES:
        return 1
    errors.append(Diagnostic(stmt.line_no, f"unknown mnemonic {m!r}"))
    return 0


class _Encoder:
    def __init__(self, symbols, errors):
        self.symbols = symbols
        self.errors = errors

    def value(self, token: str, stmt: _Stmt) -> int:
        token = token.strip()
        v = None
        if token.startswith("$"):
            try:
                v = int(token[1:], 16)
            except ValueError:
                pass
        elif token.lstrip("-").isdigit():
            v = int(token)
        elif LABEL_RE.match(token):
            v = self.symbols.get(token)
            if v is None:
                self.errors.append(Diagnostic(
                    stmt.line_no, f"undefined symbol {token!r}"))
                return 0
        if v is None:
            self.errors.append(Diagnostic(
                stmt.line_no, f"bad value {token!r}"))
            return 0
        if not -0x8000 <= v <= WORD_MASK:
            self.errors.append(Diagnostic(
                stmt.line_no, f"value {token} does not fit in one word"))
            return 0
        return from_signed(v)

    def register(self, token: str, stmt: _Stmt) -> int:
        m = REGISTER_RE.match(token.strip())
        if m and int(m.group(1)) <= 15:
            return int(m.group(1))
        self.errors.append(Diagnostic(stmt.line_no, f"bad register {token!r}"))
        return 0

    def encode(self, stmt: _Stmt) -> list[int]:
        m = stmt.mnemonic
        if m == "data":
            return [self.value(t, stmt) for t in stmt.operands.split(",")]
        before = len(self.errors)
        if m in RRR_OPCODES:
            parts = stmt.operands.split(",")
            if len(parts) != 3:
                self.errors.append(Diagnostic(
                    stmt.line_no, f"{m} needs three registers"))
                return [0]
            d, sa, sb = (self.register(p, stmt) for p in parts)
            if len(self.errors) > before:
                return [0]
            return Instruction(m, d, sa, sb).words()
        parts = stmt.operands.split(",")
        want = 1 if m in RX_NO_DEST else 2
        if len(parts) != want:
            self.errors.append(Diagnostic(
                stmt.line_no,
                f"{m} needs {'an address' if want == 1 else 'a register and an address'}"))
            return [0, 0]
        d = 0 if m in RX_NO_DEST else self.register(parts[0], stmt)
        ea = RX_OPERAND_RE.match(parts[-1])
        if not ea:
            self.errors.append(Diagnostic(
                stmt.line_no, f"bad address operand {parts[-1]!r}"))
            return [0, 0]
        disp = self.value(ea.group(1), stmt)
        sa = self.register(ea.group(2), stmt)
        if len(self.errors) > before:
            return [0, 0]
        return Instruction(m, d, sa, disp=disp).words()


def assemble(source: str, name: str = "main") -> AsmResult:
    errors: list[Diagnostic] = []
    stmts: list[_Stmt] = []
    for i, raw in enumerate(source.splitlines(), start=1):
        stmt = _split_statement(raw, i, errors)
        if stmt is not None:
            stmts.append(stmt)

    symbols: dict[str, int] = {}
    counter = 0
    encoder = _Encoder(symbols, errors)
    for stmt in stmts:
        stmt.addr = counter
        if stmt.label is not None:
            if stmt.label in symbols:
                errors.append(Diagnostic(
                    stmt.line_no, f"duplicate label {stmt.label!r}"))
            else:
                symbols[stmt.label] = counter
        if stmt.mnemonic == "org":
            counter = encoder.value(stmt.operands, stmt)
            stmt.addr = counter
            if stmt.label is not None:
                symbols[stmt.label] = counter
        else:
            counter += _statement_size(stmt, errors)
        if counter > MEMORY_WORDS:
            errors.append(Diagnostic(stmt.line_no, "program overflows memory"))
            break

    blocks: list[tuple[int, list[int]]] = []
    listing_rows: list[str] = []

    def emit(addr, words):
        if blocks and blocks[-1][0] + len(blocks[-1][1]) == addr:
            blocks[-1][1].extend(words)
        else:
            blocks.append((addr, list(words)))

    known = set(RRR_OPCODES) | set(RX_OPCODES) | {"data"}
    for stmt in stmts:
        src = stmt.source.rstrip()
        if stmt.mnemonic not in known:
            if stmt.mnemonic is None and stmt.label is None:
                listing_rows.append(f"{'':14}  {src}".rstrip())
            else:
                listing_rows.append(f"{stmt.addr:04x} {'':9}  {src}")
            continue
        words = encoder.encode(stmt)
        emit(stmt.addr, words)
        shown = " ".join(f"{w:04x}" for w in words[:2])
        listing_rows.append(f"{stmt.addr:04x} {shown:9}  {src}")
        for off, w in enumerate(words[2:], start=2):
            listing_rows.append(f"{stmt.addr + off:04x} {w:04x}{'':5}")

    listing = "\n".join(listing_rows) + ("\n" if listing_rows else "")
    if errors:
        return AsmResult(None, sorted(errors, key=lambda d: d.line),
                         listing, symbols)
    module = ObjectModule(name=name, blocks=blocks, symbols=dict(symbols))
    return AsmResult(module, [], listing, symbols)
