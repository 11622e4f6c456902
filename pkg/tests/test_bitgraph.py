"""Bit-blasting, bind trees, and the dependency graph."""

import itertools

import pytest

from qflow import corpus
from qflow.bitgraph import (
    BitRef,
    bit_blast,
    compute_dependencies,
    dump_forest,
    eval_node,
)
from qflow.errors import CombinationalLoop
from qflow.frontend import SourceUnit, elaborate, extract_labels, parse


def design_of(src, top):
    ast = parse(SourceUnit([("<t>", src)], top))
    return elaborate(ast, top, extract_labels(ast, top))


def forest_of(src, top, **kw):
    return bit_blast(design_of(src, top), **kw)


def tree_fn(tree):
    """Python callable over the tree's leaf assignment dict."""
    def fn(values):
        return eval_node(tree.node, values)
    return fn


def exhaustive_equal(src, top, py_fn, in_nets):
    """Compare every output bit of the forest against a reference function.

    ``py_fn(values_by_net) -> {net: int}`` computes expected output words.
    """
    design = design_of(src, top)
    forest = bit_blast(design)
    widths = {n: design.nets[n].width for n in in_nets}
    for combo in itertools.product(*[range(1 << widths[n]) for n in in_nets]):
        words = dict(zip(in_nets, combo))
        values = {}
        for tree in forest:
            for leaf in tree.leaves():
                if leaf.net in words:
                    values[leaf] = (words[leaf.net] >> leaf.bit) & 1
        expect = py_fn(words)
        for tree in forest:
            got = eval_node(tree.node, values)
            want = (expect[tree.root.net] >> tree.root.bit) & 1
            assert got == want, (tree.root, words)


EXAMPLE = corpus.read("example.v")


def test_example_forest_roots():
    forest = forest_of(EXAMPLE, "example")
    roots = sorted(str(t.root) for t in forest)
    assert roots == ["o[0]", "o[1]"]


def test_example_forest_semantics():
    def ref(w):
        i, low = w["i"], w["low"]
        k = (i >> 1) & low
        t = 1 - low
        s = (i & 1) & k
        u = (i & 1) & ((i >> 1) & 1)
        o0 = s ^ t
        o1 = u | 1
        return {"o": o0 | (o1 << 1)}
    exhaustive_equal(EXAMPLE, "example", ref, ["i", "low"])


def test_identity_wire_is_leaf():
    forest = forest_of(
        "module m(input h, output y);\nassign y = h;\nendmodule\n", "m")
    assert len(forest) == 1
    assert forest[0].node.op == "leaf"
    assert forest[0].node.ref == BitRef("h", 0, "input-low")


def test_operator_semantics_exhaustive():
    src = """module m(input [2:0] a, input [2:0] b, output [2:0] add,
output [2:0] sub, output eq, output lt, output ge, output red,
output [2:0] mux, output [2:0] sh);
assign add = a + b;
assign sub = a - b;
assign eq = a == b;
assign lt = a < b;
assign ge = a >= b;
assign red = ^a | &b | ~|a;
assign mux = a[0] ? a : b;
assign sh = a << b[0];
endmodule
"""
    def ref(w):
        a, b = w["a"], w["b"]
        return {
            "add": (a + b) & 7,
            "sub": (a - b) & 7,
            "eq": int(a == b),
            "lt": int(a < b),
            "ge": int(a >= b),
            "red": ((a ^ (a >> 1) ^ (a >> 2)) & 1) | int(b == 7) | int(a == 0),
            "mux": a if a & 1 else b,
            "sh": (a << (b & 1)) & 7,
        }
    exhaustive_equal(src, "m", ref, ["a", "b"])


def test_concat_repl_partselect():
    src = """module m(input [3:0] a, output [3:0] y, output [3:0] z);
assign y = {a[1:0], a[3:2]};
assign z = {2{a[1:0]}};
endmodule
"""
    def ref(w):
        a = w["a"]
        lo, hi = a & 3, (a >> 2) & 3
        return {"y": (lo << 2) | hi, "z": (a & 3) | ((a & 3) << 2)}
    exhaustive_equal(src, "m", ref, ["a"])


def test_wide_compare_becomes_macro():
    src = """module m(input [5:0] a, input [5:0] b, output y);
assign y = a == b;
endmodule
"""
    forest = forest_of(src, "m")
    assert forest[0].node.op == "EQM"
    forest = forest_of(src, "m", expand_limit=8)
    assert forest[0].node.op != "EQM"


def test_macro_eval_matches_arith():
    src = """module m(input [4:0] a, input [4:0] b, output [4:0] s, output lt);
assign s = a - b;
assign lt = a < b;
endmodule
"""
    def ref(w):
        a, b = w["a"], w["b"]
        return {"s": (a - b) & 31, "lt": int(a < b)}
    exhaustive_equal(src, "m", ref, ["a", "b"])


def test_combinational_loop_detected():
    src = """module m(input b, output y);
wire a;
assign a = a ^ b;
assign y = a;
endmodule
"""
    with pytest.raises(CombinationalLoop):
        forest_of(src, "m")


def test_sequential_self_loop_allowed():
    src = """module m(input clk, input d, output reg q);
always @(posedge clk) begin
q <= q ^ d;
end
endmodule
"""
    forest = forest_of(src, "m")
    regs = [t for t in forest if t.root.role == "register"]
    assert len(regs) == 1
    deps = compute_dependencies(forest)
    assert deps.cycles  # self-loop across the sequential cut


def test_t2100_register_chain_dependencies():
    d = design_of(corpus.read("aes_t2100.v"), "TSC")
    forest = bit_blast(d)
    regs = [t for t in forest if t.root.role == "register"]
    assert len(regs) == 320
    deps = compute_dependencies(forest)
    # load[i] depends on tmp3[i], which depends on tmp2[i], and so on
    edges = {(str(a), str(b)) for a, b in deps.edges}
    assert ("load[0]", "tmp3[0]") in edges
    assert ("tmp3[0]", "tmp2[0]") in edges
    assert not deps.cycles


def test_dump_forest_stable():
    forest = forest_of(EXAMPLE, "example")
    text = dump_forest(forest)
    assert text == dump_forest(forest_of(EXAMPLE, "example"))
    assert "o[0]" in text and "o[1]" in text
