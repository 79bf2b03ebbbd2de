"""Gate-level design toolkit built around the Sigma16 instruction set.

The package layers up from a synchronous netlist kernel (netlist) through
reusable circuit blocks (circuits) and a control-algorithm synthesizer
(control) to the Sigma16 toolchain: instruction encodings (isa), a two-pass
assembler (asm), a reference emulator (emulator), the microcoded M1
processor circuit (m1), its simulation driver (testbench), and a
co-verification harness (verify). The cli module exposes everything as
subcommands, including an HTTP session service.
"""

__version__ = "0.1.0"
