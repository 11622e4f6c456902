"""Lexing, parsing, label extraction, and elaboration."""

import pytest

from qflow import corpus
from qflow.errors import (
    LabelOnNonInput,
    MultipleDrivers,
    RecursiveInstantiation,
    UnknownSignal,
    UnsupportedConstruct,
    VerilogSyntaxError,
    WidthMismatch,
)
from qflow.frontend import SourceUnit, elaborate, extract_labels, parse
from qflow.frontend import ast_nodes as A
from qflow.frontend.lexer import tokenize


def parse_text(src, top=None):
    return parse(SourceUnit([("<test>", src)], top))


def full(src, top, labels_override=()):
    ast = parse_text(src, top)
    labels = extract_labels(ast, top, labels_override)
    return elaborate(ast, top, labels)


# -- lexer -----------------------------------------------------------------

def test_sized_literals():
    toks, _ = tokenize("<t>", "8'hFF 4'b1010 12'o777 5'd9")
    vals = [t.value for t in toks if t.kind == "num"]
    assert vals == [(255, 8), (10, 4), (511, 12), (9, 5)]


def test_bare_binary_literal_width_is_digit_count():
    toks, _ = tokenize("<t>", "0b1 0b0011")
    vals = [t.value for t in toks if t.kind == "num"]
    assert vals == [(1, 1), (3, 4)]


def test_unsized_decimal_width_is_bit_length():
    toks, _ = tokenize("<t>", "7")
    assert toks[0].value == (7, None)


def test_x_z_literals_rejected():
    with pytest.raises(UnsupportedConstruct):
        tokenize("<t>", "4'bxx01")
    with pytest.raises(UnsupportedConstruct):
        tokenize("<t>", "4'bz1z1")


def test_high_comment_lines_recorded():
    _, lines = tokenize("<t>", "wire a; // qflow: high\nwire b;\n")
    assert lines == {1}


def test_wildcard_sensitivity_is_not_an_attribute():
    toks, _ = tokenize("<t>", "always @(*) x")
    kinds = [t.kind for t in toks]
    assert "attr" not in kinds
    assert "(" in kinds and "*" in kinds


# -- parser ----------------------------------------------------------------

EXAMPLE = corpus.read("example.v")


def test_example_module_shape():
    ast = parse_text(EXAMPLE, "example")
    assert list(ast.modules) == ["example"]
    mod = ast.modules["example"]
    assert mod.port_order == ["i", "low", "o"]
    assert mod.ports["i"].high
    assert not mod.ports["low"].high
    wires = [it for it in mod.items if isinstance(it, A.NetDecl)]
    assert [w.name for w in wires] == ["k", "s", "t", "u"]
    blocks = [it for it in mod.items if isinstance(it, A.Always)]
    assert len(blocks) == 1
    assert blocks[0].sens == ("comb",)
    # six blocking assignments in the procedural block
    assert len(blocks[0].body.stmts) == 6
    assert all(s.blocking for s in blocks[0].body.stmts)


def test_non_ansi_ports():
    src = """module m(a, b, y);
input a, b;
output y;
assign y = a & b;
endmodule
"""
    mod = parse_text(src).modules["m"]
    assert mod.port_order == ["a", "b", "y"]
    assert mod.ports["a"].direction == "input"
    assert mod.ports["y"].direction == "output"


def test_attribute_high_mark():
    src = """module m((* qflow_high *) input s, output y);
assign y = s;
endmodule
"""
    assert parse_text(src).modules["m"].ports["s"].high


def test_syntax_error_has_position():
    with pytest.raises(VerilogSyntaxError) as e:
        parse_text("module m(input a output y); endmodule")
    assert e.value.line == 1


def test_rejected_constructs():
    for snippet in (
        "module m(inout a); endmodule",
        "module m(input a); initial begin end endmodule",
        "module m(input clk); always @(negedge clk) begin end endmodule",
    ):
        with pytest.raises(UnsupportedConstruct):
            parse_text(snippet)


def test_unknown_top_module():
    with pytest.raises(UnknownSignal):
        parse_text("module m(); endmodule", top="nope")


# -- labels ----------------------------------------------------------------

def test_labels_from_ports_and_overrides():
    ast = parse_text(EXAMPLE, "example")
    labels = extract_labels(ast, "example")
    assert labels == {"i": "high", "low": "low"}
    labels = extract_labels(ast, "example", [("low", "high")])
    assert labels["low"] == "high"


def test_label_override_on_unknown_net():
    ast = parse_text(EXAMPLE, "example")
    with pytest.raises(UnknownSignal):
        extract_labels(ast, "example", [("nope", "high")])


def test_label_on_non_input_rejected():
    ast = parse_text(EXAMPLE, "example")
    with pytest.raises(LabelOnNonInput):
        extract_labels(ast, "example", [("o", "high")])


def test_comment_label_marks_input():
    src = """module m(
input [1:0] s, // qflow: high
input c,
output y);
assign y = s[0] & c;
endmodule
"""
    ast = parse_text(src)
    assert extract_labels(ast, "m") == {"s": "high", "c": "low"}


# -- elaboration -----------------------------------------------------------

def test_example_elaboration():
    d = full(EXAMPLE, "example")
    assert d.nets["i"].width == 2
    assert d.nets["o"].width == 2
    assert d.nets["o"].kind == "output"
    assert d.labels == {"i": "high", "low": "low"}
    assert [(n, b) for n, b, _s in d.high_bits()] == [("i", 0), ("i", 1)]
    assert not any(a.sequential for a in d.assigns)


def test_generate_unroll_t2100():
    src = corpus.read("aes_t2100.v")
    d = full(src, "TSC")
    seq = [a for a in d.assigns if a.sequential]
    # 64 generate slices, five nonblocking assignments each
    assert len(seq) == 320
    assert all(a.clock == "clk" for a in seq)
    assert d.nets["tmp0"].kind == "reg"
    assert d.nets["load"].kind == "output"


def test_parameters_and_overrides():
    src = """module inner #(parameter W = 2) (input [W-1:0] a, output [W-1:0] y);
assign y = ~a;
endmodule
module top(input [3:0] a, output [3:0] y);
inner #(.W(4)) u (.a(a), .y(y));
endmodule
"""
    d = full(src, "top")
    assert d.nets["u.a"].width == 4


def test_hierarchy_flat_names():
    cfg_files = [corpus.read("aes_t2300_top.v"), corpus.read("aes_t2300.v")]
    ast = parse(SourceUnit([("a.v", cfg_files[0]), ("b.v", cfg_files[1])], "top"))
    labels = extract_labels(ast, "top")
    d = elaborate(ast, "top", labels)
    assert "Trojan.tmp0" in d.nets
    assert d.nets["Trojan.tmp0"].width == 128
    assert labels == {"rst": "low", "clk": "low", "key": "high", "state": "low"}


def test_port_width_mismatch():
    src = """module inner(input [3:0] a, output y);
assign y = a[0];
endmodule
module top(input [1:0] a, output y);
inner u (.a(a), .y(y));
endmodule
"""
    with pytest.raises(WidthMismatch):
        full(src, "top")


def test_recursive_instantiation():
    src = """module m(input a, output y);
m u (.a(a), .y(y));
endmodule
"""
    with pytest.raises(RecursiveInstantiation):
        full(src, "m")


def test_multiple_drivers_rejected():
    src = """module m(input a, input b, output y);
assign y = a;
assign y = b;
endmodule
"""
    with pytest.raises(MultipleDrivers):
        full(src, "m")


def test_if_else_lowered_to_ternary():
    src = """module m(input s, input a, input b, output reg y);
always @(*) begin
if (s) y = a;
else y = b;
end
endmodule
"""
    d = full(src, "m")
    assigns = [a for a in d.assigns if a.target == "y"]
    assert len(assigns) == 1
    assert isinstance(assigns[0].expr, A.Ternary)


def test_case_statement_lowering():
    src = """module m(input [1:0] s, input a, input b, input c, output reg y);
always @(*) begin
case (s)
2'd0: y = a;
2'd1, 2'd2: y = b;
default: y = c;
endcase
end
endmodule
"""
    d = full(src, "m")
    assert any(a.target == "y" for a in d.assigns)


def test_blocking_assignment_forward_substitution():
    # t reads the new value of k within the same block
    src = """module m(input a, input b, output reg y);
reg k;
always @(*) begin
k = a & b;
y = k ^ a;
end
endmodule
"""
    d = full(src, "m")
    y = next(a for a in d.assigns if a.target == "y")
    names = set()

    def walk(e):
        if isinstance(e, A.Select) and isinstance(e.base, str):
            names.add(e.base)
        for f in getattr(e, "__dataclass_fields__", {}):
            v = getattr(e, f)
            if isinstance(v, tuple):
                for x in v:
                    if hasattr(x, "__dataclass_fields__"):
                        walk(x)
            elif hasattr(v, "__dataclass_fields__"):
                walk(v)

    walk(y.expr)
    assert "k" not in names  # substituted, not referenced
