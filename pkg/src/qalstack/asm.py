"""Text circuit codec (.qalt).

Grammar, one item per line, ``#`` starts a comment, blank lines ignored:

  .qubits N              required, before any instruction
  .cbits N               optional (default 0), before any instruction
  <mnemonic> q<i>
  <mnemonic>(<angle>) q<i>
  <mnemonic> q<i>, q<j>
  measure q<i> -> c<k>

Mnemonics are lowercase: nop h x y z s sdg t tdg rx ry rz cx cz swap
measure reset barrier.  Angles are radians; the emitter renders them as the
shortest decimal that parses back to the identical float32 (seven or eight
significant digits for typical angles, nine when float32 needs them).

Every diagnostic carries a 1-based line and column.
"""
from __future__ import annotations

import re

from .circuit import MAX_CBITS, MAX_QUBITS, Circuit, Instruction, Opcode, f32

_F32_MAX = 3.4028234663852886e38  # largest finite float32

_MNEMONIC_TO_OPCODE = {
    "nop": Opcode.NOP,
    "h": Opcode.H,
    "x": Opcode.X,
    "y": Opcode.Y,
    "z": Opcode.Z,
    "s": Opcode.S,
    "sdg": Opcode.SDG,
    "t": Opcode.T,
    "tdg": Opcode.TDG,
    "rx": Opcode.RX,
    "ry": Opcode.RY,
    "rz": Opcode.RZ,
    "cx": Opcode.CNOT,
    "cz": Opcode.CZ,
    "swap": Opcode.SWAP,
    "measure": Opcode.MEASURE,
    "reset": Opcode.RESET,
    "barrier": Opcode.BARRIER,
}
_OPCODE_TO_MNEMONIC = {op: name for name, op in _MNEMONIC_TO_OPCODE.items()}


class AsmError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class AsmSyntaxError(AsmError):
    pass


class AsmSemanticError(AsmError):
    pass


def format_angle(value: float) -> str:
    """Shortest decimal with the fewest significant digits that round-trips
    through float32 back to ``value``."""
    target = f32(value)
    for digits in range(1, 10):
        text = "%.*g" % (digits, target)
        # A rounded-up candidate near the float32 maximum can exceed the
        # float32 range; such a candidate cannot be the answer, skip it.
        parsed = float(text)
        if abs(parsed) <= _F32_MAX and f32(parsed) == target:
            return text
    return repr(target)  # unreachable: nine digits always round-trip float32


class _Scanner:
    """Cursor over one source line with 1-based column reporting."""

    def __init__(self, line_no: int, text: str):
        self.line_no = line_no
        self.text = text
        self.pos = 0

    @property
    def col(self) -> int:
        return self.pos + 1

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def match(self, pattern: str) -> re.Match | None:
        m = re.compile(pattern).match(self.text, self.pos)
        if m:
            self.pos = m.end()
        return m

    def expect(self, pattern: str, what: str) -> re.Match:
        m = self.match(pattern)
        if not m:
            raise AsmSyntaxError(f"expected {what}", self.line_no, self.col)
        return m


_INT = r"\d+"
_FLOAT = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"


def parse_text(source: str) -> Circuit:
    num_qubits: int | None = None
    num_cbits = 0
    cbits_seen = False
    instructions: list[Instruction] = []

    for line_no, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        sc = _Scanner(line_no, line)
        sc.skip_ws()
        if sc.at_end():
            continue

        if sc.text[sc.pos] == ".":
            col = sc.col
            m = sc.expect(r"\.[a-z]+", "a directive")
            name = m.group(0)
            if name not in (".qubits", ".cbits"):
                raise AsmSyntaxError(f"unknown directive {name}", line_no, col)
            if instructions:
                raise AsmSemanticError(f"{name} must precede instructions", line_no, col)
            sc.skip_ws()
            vcol = sc.col
            value = int(sc.expect(_INT, "an integer").group(0))
            sc.skip_ws()
            if not sc.at_end():
                raise AsmSyntaxError("unexpected trailing input", line_no, sc.col)
            if name == ".qubits":
                if num_qubits is not None:
                    raise AsmSemanticError("duplicate .qubits directive", line_no, col)
                if not 1 <= value <= MAX_QUBITS:
                    raise AsmSemanticError(
                        f".qubits {value} outside 1..{MAX_QUBITS}", line_no, vcol
                    )
                num_qubits = value
            else:
                if cbits_seen:
                    raise AsmSemanticError("duplicate .cbits directive", line_no, col)
                if value > MAX_CBITS:
                    raise AsmSemanticError(
                        f".cbits {value} outside 0..{MAX_CBITS}", line_no, vcol
                    )
                num_cbits = value
                cbits_seen = True
            continue

        mcol = sc.col
        mnemonic = sc.expect(r"[a-z]+", "a mnemonic").group(0)
        opcode = _MNEMONIC_TO_OPCODE.get(mnemonic)
        if opcode is None:
            raise AsmSyntaxError(f"unknown mnemonic {mnemonic!r}", line_no, mcol)
        if num_qubits is None:
            raise AsmSemanticError(".qubits directive must come first", line_no, mcol)

        param = 0.0
        if opcode.is_rotation:
            sc.expect(r"\(", "'(' with the rotation angle")
            sc.skip_ws()
            param = float(sc.expect(_FLOAT, "an angle").group(0))
            sc.skip_ws()
            sc.expect(r"\)", "')'")
        elif not sc.at_end() and sc.text[sc.pos] == "(":
            raise AsmSyntaxError(f"{mnemonic} takes no angle", line_no, sc.col)

        sc.skip_ws()
        q0col = sc.col
        q0 = int(sc.expect(r"q(\d+)", "a qubit operand like q0").group(1))
        if q0 >= num_qubits:
            raise AsmSemanticError(
                f"q{q0} out of range for {num_qubits} qubits", line_no, q0col
            )

        q1 = 0
        cbit = 0
        if opcode.is_two_qubit:
            sc.skip_ws()
            sc.expect(r",", "','")
            sc.skip_ws()
            q1col = sc.col
            q1 = int(sc.expect(r"q(\d+)", "a second qubit operand").group(1))
            if q1 >= num_qubits:
                raise AsmSemanticError(
                    f"q{q1} out of range for {num_qubits} qubits", line_no, q1col
                )
            if q1 == q0:
                raise AsmSemanticError(
                    f"{mnemonic} operands must differ (both q{q0})", line_no, q1col
                )
        elif opcode is Opcode.MEASURE:
            sc.skip_ws()
            sc.expect(r"->", "'->'")
            sc.skip_ws()
            ccol = sc.col
            cbit = int(sc.expect(r"c(\d+)", "a classical bit operand like c0").group(1))
            if cbit >= num_cbits:
                raise AsmSemanticError(
                    f"c{cbit} out of range for {num_cbits} cbits", line_no, ccol
                )

        sc.skip_ws()
        if not sc.at_end():
            raise AsmSyntaxError("unexpected trailing input", line_no, sc.col)
        instructions.append(Instruction(opcode, q0, q1, cbit, param))

    if num_qubits is None:
        raise AsmSemanticError("missing .qubits directive", 1, 1)

    circuit = Circuit(num_qubits, num_cbits, instructions)
    circuit.validate()
    return circuit


def emit_text(circuit: Circuit) -> str:
    """Canonical rendering: parse_text(emit_text(c)) equals c."""
    circuit.validate()
    lines = [f".qubits {circuit.num_qubits}", f".cbits {circuit.num_cbits}"]
    for ins in circuit.instructions:
        name = _OPCODE_TO_MNEMONIC[ins.opcode]
        if ins.opcode.is_rotation:
            lines.append(f"{name}({format_angle(ins.param)}) q{ins.q0}")
        elif ins.opcode.is_two_qubit:
            lines.append(f"{name} q{ins.q0}, q{ins.q1}")
        elif ins.opcode is Opcode.MEASURE:
            lines.append(f"measure q{ins.q0} -> c{ins.cbit}")
        else:
            lines.append(f"{name} q{ins.q0}")
    return "\n".join(lines) + "\n"
