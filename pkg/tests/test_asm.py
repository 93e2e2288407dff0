import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qalstack.asm import (
    AsmError,
    AsmSemanticError,
    AsmSyntaxError,
    emit_text,
    format_angle,
    parse_text,
)
from qalstack.circuit import Circuit, Instruction, Opcode, bell_pair, f32

from conftest import random_circuit

BELL_TEXT = (
    ".qubits 2\n"
    ".cbits 2\n"
    "h q0\n"
    "cx q0, q1\n"
    "measure q0 -> c0\n"
    "measure q1 -> c1\n"
)


def test_bell_emission_is_pinned(golden):
    assert emit_text(bell_pair()) == BELL_TEXT
    assert emit_text(bell_pair()) == (golden / "bell.qalt").read_text()


def test_empty_circuit_emission():
    assert emit_text(Circuit(1)) == ".qubits 1\n.cbits 0\n"


def test_parse_bell_text():
    assert parse_text(BELL_TEXT) == bell_pair()


def test_comments_blank_lines_and_whitespace():
    source = (
        "# leading comment\n"
        "\n"
        "  .qubits   2   # two qubits\n"
        "\t.cbits 1\n"
        "  h   q0  # apply\n"
        "cx q0 ,  q1\n"
        "\n"
        "measure q1->c0\n"
    )
    assert parse_text(source) == (
        Circuit(2, 1).h(0).cx(0, 1).measure(1, 0)
    )


def test_cbits_directive_is_optional():
    circuit = parse_text(".qubits 1\nh q0\n")
    assert circuit.num_cbits == 0


def test_rotation_angle_forms():
    circuit = parse_text(
        ".qubits 1\nrx(0.5) q0\nry(-0.25) q0\nrz(1e-3) q0\nrx(.5) q0\nrz(2) q0\n"
    )
    params = [ins.param for ins in circuit.instructions]
    assert params == [f32(0.5), f32(-0.25), f32(1e-3), f32(0.5), f32(2.0)]


def test_all_mnemonics_round_trip():
    source = (
        ".qubits 3\n.cbits 2\n"
        "nop q0\nh q0\nx q1\ny q2\nz q0\ns q1\nsdg q2\nt q0\ntdg q1\n"
        "rx(0.5) q0\nry(1.5) q1\nrz(-2.5) q2\n"
        "cx q0, q1\ncz q1, q2\nswap q0, q2\n"
        "measure q0 -> c0\nreset q1\nbarrier q2\n"
    )
    circuit = parse_text(source)
    ops = [ins.opcode for ins in circuit.instructions]
    assert ops == [
        Opcode.NOP, Opcode.H, Opcode.X, Opcode.Y, Opcode.Z, Opcode.S,
        Opcode.SDG, Opcode.T, Opcode.TDG, Opcode.RX, Opcode.RY, Opcode.RZ,
        Opcode.CNOT, Opcode.CZ, Opcode.SWAP, Opcode.MEASURE, Opcode.RESET,
        Opcode.BARRIER,
    ]
    assert parse_text(emit_text(circuit)) == circuit


def test_emit_parse_round_trip_random_circuits():
    rng = random.Random(0xA53)
    for _ in range(200):
        circuit = random_circuit(rng, rng.randint(1, 16), rng.randint(0, 30))
        assert parse_text(emit_text(circuit)) == circuit


def test_emit_is_canonical_fixed_point():
    source = "  .qubits 2  \n.cbits 1\n  h q0 # c\ncx q0,q1\nmeasure q1 ->c0\n"
    once = emit_text(parse_text(source))
    assert emit_text(parse_text(once)) == once


def _diag(err: pytest.ExceptionInfo) -> tuple[int, int, str]:
    return err.value.line, err.value.col, str(err.value)


def test_missing_qubits_directive():
    with pytest.raises(AsmSemanticError) as err:
        parse_text("# nothing\n")
    assert (err.value.line, err.value.col) == (1, 1)
    assert str(err.value).startswith("1:1: ")


def test_instruction_before_qubits_directive():
    with pytest.raises(AsmSemanticError) as err:
        parse_text("h q0\n.qubits 1\n")
    assert (err.value.line, err.value.col) == (1, 1)


def test_unknown_directive():
    with pytest.raises(AsmSyntaxError) as err:
        parse_text(".qubits 1\n  .registers 4\n")
    assert (err.value.line, err.value.col) == (2, 3)


def test_directive_after_instructions():
    with pytest.raises(AsmSemanticError) as err:
        parse_text(".qubits 2\nh q0\n.cbits 1\n")
    assert (err.value.line, err.value.col) == (3, 1)


def test_duplicate_directives():
    with pytest.raises(AsmSemanticError) as err:
        parse_text(".qubits 1\n.qubits 2\n")
    assert (err.value.line, err.value.col) == (2, 1)
    with pytest.raises(AsmSemanticError) as err:
        parse_text(".qubits 1\n.cbits 1\n.cbits 2\n")
    assert (err.value.line, err.value.col) == (3, 1)


def test_directive_value_out_of_range():
    for source, line, col in (
        (".qubits 0\n", 1, 9),
        (".qubits 17\n", 1, 9),
        (".qubits 1\n.cbits 17\n", 2, 8),
    ):
        with pytest.raises(AsmSemanticError) as err:
            parse_text(source)
        assert (err.value.line, err.value.col) == (line, col)


def test_unknown_mnemonic():
    with pytest.raises(AsmSyntaxError) as err:
        parse_text(".qubits 1\n  cnot q0\n")
    assert (err.value.line, err.value.col) == (2, 3)
    assert "cnot" in str(err.value)


def test_rotation_requires_angle():
    with pytest.raises(AsmSyntaxError) as err:
        parse_text(".qubits 1\nrx q0\n")
    assert (err.value.line, err.value.col) == (2, 3)


def test_non_rotation_rejects_angle():
    with pytest.raises(AsmSyntaxError) as err:
        parse_text(".qubits 1\nh(0.5) q0\n")
    assert (err.value.line, err.value.col) == (2, 2)


def test_qubit_operand_out_of_range():
    with pytest.raises(AsmSemanticError) as err:
        parse_text(".qubits 2\nh q2\n")
    assert (err.value.line, err.value.col) == (2, 3)


def test_two_qubit_operands_must_differ():
    with pytest.raises(AsmSemanticError) as err:
        parse_text(".qubits 2\ncx q1, q1\n")
    assert (err.value.line, err.value.col) == (2, 8)


def test_measure_requires_arrow_and_cbit():
    with pytest.raises(AsmSyntaxError):
        parse_text(".qubits 1\n.cbits 1\nmeasure q0 c0\n")
    with pytest.raises(AsmSemanticError) as err:
        parse_text(".qubits 1\n.cbits 1\nmeasure q0 -> c1\n")
    assert (err.value.line, err.value.col) == (3, 15)


def test_trailing_input_rejected():
    with pytest.raises(AsmSyntaxError) as err:
        parse_text(".qubits 1\nh q0 q0\n")
    assert (err.value.line, err.value.col) == (2, 6)
    with pytest.raises(AsmSyntaxError) as err:
        parse_text(".qubits 1 1\n")
    assert (err.value.line, err.value.col) == (1, 11)


def test_asm_error_hierarchy():
    assert issubclass(AsmSyntaxError, AsmError)
    assert issubclass(AsmSemanticError, AsmError)
    assert issubclass(AsmError, ValueError)


def test_format_angle_pins():
    assert format_angle(math.pi / 4) == "0.7853982"
    assert format_angle(math.pi) == "3.1415927"
    assert format_angle(0.5) == "0.5"
    assert format_angle(-0.25) == "-0.25"
    assert format_angle(0.0) == "0"
    assert format_angle(2.0) == "2"


@settings(max_examples=300, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False, width=32))
def test_format_angle_round_trips_float32(value):
    assert f32(float(format_angle(value))) == f32(value)


@settings(max_examples=300, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False, width=32))
def test_format_angle_uses_fewest_digits(value):
    text = format_angle(value)
    target = f32(value)
    for digits in range(1, 10):
        candidate = "%.*g" % (digits, target)
        parsed = float(candidate)
        if abs(parsed) <= 3.4028234663852886e38 and f32(parsed) == target:
            assert text == candidate
            break


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False, width=32))
def test_rotation_text_round_trip(value):
    circuit = Circuit(1).add(Opcode.RZ, 0, param=value)
    assert parse_text(emit_text(circuit)) == circuit
