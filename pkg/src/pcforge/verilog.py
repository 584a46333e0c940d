"""Structural Verilog export.  Write-only: nothing here parses Verilog."""

from __future__ import annotations

import re

from .circuit import ARITY, GateFn, Netlist

_PRIMITIVE = {
    GateFn.BUF: "buf",
    GateFn.NOT: "not",
    GateFn.AND: "and",
    GateFn.OR: "or",
    GateFn.XOR: "xor",
    GateFn.NAND: "nand",
    GateFn.NOR: "nor",
    GateFn.XNOR: "xnor",
}


def _identifier(name: str) -> str:
    ident = re.sub(r"\W", "_", name)
    if not ident or ident[0].isdigit():
        ident = "m_" + ident
    return ident


def to_verilog(netlist: Netlist, module_name: str | None = None) -> str:
    """Render as a flat gate-primitive module, one instantiation per line.

    Inputs and outputs are exposed as the buses ``in_bits`` and
    ``out_bits``; internal nets are named by signal address.
    """
    name = _identifier(module_name or netlist.name)
    n = netlist.input_count

    def ref(addr: int) -> str:
        return f"in_bits[{addr}]" if addr < n else f"w{addr}"

    ports = []
    if n:
        ports.append(f"    input  wire [{n - 1}:0] in_bits")
    ports.append(f"    output wire [{netlist.output_count - 1}:0] out_bits")

    lines = [f"module {name} ("]
    lines.append(",\n".join(ports))
    lines.append(");")
    if netlist.gates:
        decls = ", ".join(f"w{n + i}" for i in range(len(netlist.gates)))
        lines.append(f"    wire {decls};")
    for i, gate in enumerate(netlist.gates):
        addr = n + i
        if gate.fn == GateFn.CONST0:
            lines.append(f"    assign w{addr} = 1'b0;")
        elif gate.fn == GateFn.CONST1:
            lines.append(f"    assign w{addr} = 1'b1;")
        elif ARITY[gate.fn] == 1:
            lines.append(f"    {_PRIMITIVE[gate.fn]} g{i} (w{addr}, {ref(gate.a)});")
        else:
            lines.append(
                f"    {_PRIMITIVE[gate.fn]} g{i} (w{addr}, {ref(gate.a)}, {ref(gate.b)});"
            )
    for k, out in enumerate(netlist.outputs):
        lines.append(f"    assign out_bits[{k}] = {ref(out)};")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"
