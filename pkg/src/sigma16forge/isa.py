"""Sigma16 instruction encodings.

A program is a sequence of 16-bit words. Instructions come in two
formats. RRR instructions occupy one word and name three registers
(destination d, operands sa and sb). RX instructions occupy two words;
the second word is a displacement that is added to the index register
sa to form an effective address.

Word 0 holds four nibbles, most significant first: op, d, sa, sb.
RRR instructions carry their opcode in op. RX instructions all share
op = 0xf and carry their opcode in sb.
"""

from __future__ import annotations

from dataclasses import dataclass

WORD_MASK = 0xFFFF

RRR_OPCODES = {
    "add": 0x0,
    "sub": 0x1,
    "mul": 0x2,
    "div": 0x3,
    "cmplt": 0x4,
    "cmpeq": 0x5,
    "cmpgt": 0x6,
    "trap": 0xD,
}

RX_ESCAPE = 0xF

RX_OPCODES = {
    "lea": 0x0,
    "load": 0x1,
    "store": 0x2,
    "jump": 0x3,
    "jumpf": 0x4,
    "jumpt": 0x5,
    "jal": 0x6,
    "loadxi": 0x7,
}

RRR_BY_CODE = {code: name for name, code in RRR_OPCODES.items()}
RX_BY_CODE = {code: name for name, code in RX_OPCODES.items()}

MNEMONICS = frozenset(RRR_OPCODES) | frozenset(RX_OPCODES)

# RX instructions whose d field is not written as an operand.
RX_NO_DEST = frozenset({"jump"})


def to_signed(word: int) -> int:
    """Reads a 16-bit word as a two's complement integer."""
    word &= WORD_MASK
    return word - 0x10000 if word & 0x8000 else word


def from_signed(value: int) -> int:
    return value & WORD_MASK


def word_fields(word: int) -> tuple[int, int, int, int]:
    """Splits a word into its op, d, sa, sb nibbles."""
    return (word >> 12) & 0xF, (word >> 8) & 0xF, (word >> 4) & 0xF, word & 0xF


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Instruction:
    mnemonic: str
    d: int = 0
    sa: int = 0
    sb: int = 0
    disp: int | None = None

    def __post_init__(self):
        if self.mnemonic not in MNEMONICS:
            raise EncodingError(f"unknown mnemonic {self.mnemonic}")
        for field in ("d", "sa", "sb"):
            v = getattr(self, field)
            if not 0 <= v <= 15:
                raise EncodingError(f"{field}={v} out of register range")
        if self.is_rx:
            if self.disp is None:
                raise EncodingError(f"{self.mnemonic} needs a displacement")
            if not 0 <= self.disp <= WORD_MASK:
                raise EncodingError(f"displacement {self.disp} out of range")
            if self.sb:
                raise EncodingError("sb is the opcode field of an RX word")
        elif self.disp is not None:
            raise EncodingError(f"{self.mnemonic} takes no displacement")

    @property
    def is_rx(self) -> bool:
        return self.mnemonic in RX_OPCODES

    @property
    def length(self) -> int:
        return 2 if self.is_rx else 1

    def words(self) -> list[int]:
        if self.is_rx:
            op, sb = RX_ESCAPE, RX_OPCODES[self.mnemonic]
            first = op << 12 | self.d << 8 | self.sa << 4 | sb
            return [first, self.disp]
        op = RRR_OPCODES[self.mnemonic]
        return [op << 12 | self.d << 8 | self.sa << 4 | self.sb]

    def operand_text(self) -> str:
        if not self.is_rx:
            return f"R{self.d},R{self.sa},R{self.sb}"
        ea_part = f"${self.disp:04x}[R{self.sa}]"
        if self.mnemonic in RX_NO_DEST:
            return ea_part
        return f"R{self.d},{ea_part}"

    def text(self) -> str:
        return f"{self.mnemonic} {self.operand_text()}"


def instruction_length(word: int) -> int:
    """How many words the instruction starting with `word` occupies.

    Unrecognised words count as one, matching the hardware dispatch
    which falls through to the next fetch without reading a second
    word.
    """
    op, _, _, sb = word_fields(word)
    if op == RX_ESCAPE and sb in RX_BY_CODE:
        return 2
    return 1


def decode(word0: int, word1: int = 0) -> Instruction | None:
    """Decodes one instruction, or None if word0 is not recognised."""
    op, d, sa, sb = word_fields(word0 & WORD_MASK)
    if op == RX_ESCAPE:
        name = RX_BY_CODE.get(sb)
        if name is None:
            return None
        return Instruction(name, d, sa, 0, word1 & WORD_MASK)
    name = RRR_BY_CODE.get(op)
    if name is None:
        return None
    return Instruction(name, d, sa, sb)


def disassemble(words: list[int], origin: int = 0) -> list[str]:
    """Renders a word image as one line per instruction or data word.

    Each line shows the address, the raw word(s) and the decoded text.
    Unrecognised words become `data` lines so the output reassembles
    to the same image.
    """
    lines = []
    addr = 0
    while addr < len(words):
        w0 = words[addr]
        n = instruction_length(w0)
        truncated = addr + n > len(words)
        if truncated:
            n = 1
        instr = None if truncated else decode(w0, words[addr + 1] if n == 2 else 0)
        raw = " ".join(f"{w:04x}" for w in words[addr:addr + n]).ljust(9)
        if instr is None:
            body = f"data ${w0:04x}"
        else:
            body = instr.text()
        lines.append(f"{origin + addr:04x}  {raw}  {body}")
        addr += n
    return lines
