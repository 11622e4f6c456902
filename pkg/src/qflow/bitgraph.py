"""Bit-blasting of the flat netlist into per-bit expression trees.

Every top-level output bit and every register bit becomes the root of one
tree whose leaves are primary input bits, register bits, or constants.
Internal wires are inlined.  Wide adders/subtractors and comparisons stay
as width-tagged macro nodes above the expansion limit so the engine can
apply closed-form vulnerability expressions to them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CombinationalLoop, UnassignedNet, UnsupportedConstruct
from .frontend import ast_nodes as A
from .frontend.elaborate import ElaboratedDesign, const_eval

DEFAULT_EXPAND_LIMIT = 4
_SHIFT_AMOUNT_LIMIT = 16

_MACRO_OPS = ("EQM", "LTM", "ADDM", "SUBM")


@dataclass(frozen=True)
class BitRef:
    net: str
    bit: int
    role: str  # input-high | input-low | register | top-output
    secret_id: int | None = None

    def __str__(self):
        return f"{self.net}[{self.bit}]"


@dataclass(frozen=True)
class Node:
    op: str  # const0 const1 leaf AND OR XOR NOT MUX EQM LTM ADDM SUBM
    children: tuple = ()
    ref: BitRef | None = None
    meta: tuple | None = None  # macros: (width, out_bit)

    def is_macro(self):
        return self.op in _MACRO_OPS


CONST0 = Node("const0")
CONST1 = Node("const1")


@dataclass
class BindTree:
    root: BitRef
    node: Node

    def leaves(self):
        out = []
        stack = [self.node]
        while stack:
            n = stack.pop()
            if n.op == "leaf":
                out.append(n.ref)
            else:
                stack.extend(n.children)
        return out


@dataclass
class DependencyGraph:
    vertices: set = field(default_factory=set)
    edges: set = field(default_factory=set)  # (root, register root it reads)
    cycles: list = field(default_factory=list)  # SCCs of size>1 and self-loops


def _and(a, b):
    return Node("AND", (a, b))


def _or(a, b):
    return Node("OR", (a, b))


def _xor(a, b):
    return Node("XOR", (a, b))


def _not(a):
    return Node("NOT", (a,))


def _mux(sel, a, b):
    """sel ? a : b"""
    return Node("MUX", (sel, a, b))


class _Blaster:
    def __init__(self, design: ElaboratedDesign, expand_limit=DEFAULT_EXPAND_LIMIT):
        self.design = design
        self.expand_limit = expand_limit
        self.driver = {}
        self.seq_bits = set()
        for a in design.assigns:
            for b in range(a.lsb, a.msb + 1):
                self.driver[(a.target, b)] = a
                if a.sequential:
                    self.seq_bits.add((a.target, b))
        self.secret_id = {(n, b): sid for n, b, sid in design.high_bits()}
        self._net_memo = {}
        self._expr_memo = {}
        self._in_progress = []

    # -- widths ------------------------------------------------------------
    def width(self, expr):
        if isinstance(expr, A.Num):
            return expr.width if expr.width else max(expr.value.bit_length(), 1)
        if isinstance(expr, A.Ident):
            if expr.name not in self.design.nets:
                raise UnassignedNet(expr.name)
            return self.design.nets[expr.name].width
        if isinstance(expr, A.Select):
            return 1
        if isinstance(expr, A.PartSelect):
            return const_eval(expr.msb, {}) - const_eval(expr.lsb, {}) + 1
        if isinstance(expr, A.Unary):
            if expr.op in ("~", "-", "+"):
                return self.width(expr.operand)
            return 1
        if isinstance(expr, A.Binary):
            if expr.op in ("&", "|", "^", "~^", "+", "-"):
                return max(self.width(expr.left), self.width(expr.right))
            if expr.op in ("<<", ">>"):
                return self.width(expr.left)
            return 1
        if isinstance(expr, A.Ternary):
            return max(self.width(expr.then), self.width(expr.other))
        if isinstance(expr, A.Concat):
            return sum(self.width(p) for p in expr.parts)
        if isinstance(expr, A.Repl):
            return const_eval(expr.count, {}) * self.width(expr.value)
        raise UnsupportedConstruct(type(expr).__name__)

    # -- nets --------------------------------------------------------------
    def leaf(self, net, bit):
        kind = self.design.nets[net].kind
        if (net, bit) in self.seq_bits:
            return Node("leaf", ref=BitRef(net, bit, "register"))
        if kind == "input":
            label = self.design.labels.get(net, "low")
            if label == "high":
                return Node("leaf", ref=BitRef(net, bit, "input-high",
                                               self.secret_id[(net, bit)]))
            return Node("leaf", ref=BitRef(net, bit, "input-low"))
        return None  # combinational: must be inlined

    def net_bit(self, net, bit):
        if net not in self.design.nets:
            raise UnassignedNet(net)
        if bit >= self.design.nets[net].width:
            return CONST0
        key = (net, bit)
        if key in self._net_memo:
            return self._net_memo[key]
        leaf = self.leaf(net, bit)
        if leaf is not None:
            self._net_memo[key] = leaf
            return leaf
        drv = self.driver.get(key)
        if drv is None:
            raise UnassignedNet(net, bit)
        if key in self._in_progress:
            cycle = self._in_progress[self._in_progress.index(key):]
            raise CombinationalLoop([f"{n}[{b}]" for n, b in cycle])
        self._in_progress.append(key)
        try:
            bits = self.blast(drv.expr)
            pos = bit - drv.lsb
            node = bits[pos] if pos < len(bits) else CONST0
        finally:
            self._in_progress.pop()
        self._net_memo[key] = node
        return node

    # -- expressions -------------------------------------------------------
    def blast(self, expr):
        key = id(expr)
        hit = self._expr_memo.get(key)
        if hit is not None and hit[0] is expr:
            return hit[1]
        bits = self._blast(expr)
        self._expr_memo[key] = (expr, bits)
        return bits

    def _extend(self, bits, w):
        if len(bits) >= w:
            return bits[:w]
        return bits + [CONST0] * (w - len(bits))

    def _reduce(self, bits, op):
        acc = bits[0]
        for b in bits[1:]:
            acc = Node(op, (acc, b))
        return acc

    def _bool(self, expr):
        bits = self.blast(expr)
        return self._reduce(bits, "OR") if len(bits) > 1 else bits[0]

    def _shift_dynamic(self, bits, amt_bits, left):
        if len(amt_bits) > _SHIFT_AMOUNT_LIMIT:
            raise UnsupportedConstruct("shift amount wider than 16 bits")
        cur = list(bits)
        for j, sbit in enumerate(amt_bits):
            step = 1 << j
            if left:
                shifted = [cur[i - step] if i - step >= 0 else CONST0
                           for i in range(len(cur))]
            else:
                shifted = [cur[i + step] if i + step < len(cur) else CONST0
                           for i in range(len(cur))]
            cur = [_mux(sbit, s, c) for s, c in zip(shifted, cur)]
        return cur

    def _eq(self, abits, bbits):
        terms = [_not(_xor(x, y)) for x, y in zip(abits, bbits)]
        return self._reduce(terms, "AND")

    def _lt(self, abits, bbits):
        # LSB to MSB; the last processed (MSB) dominates
        lt = CONST0
        for x, y in zip(abits, bbits):
            eq = _not(_xor(x, y))
            lt = _or(_and(_not(x), y), _and(eq, lt))
        return lt

    def _add(self, abits, bbits, subtract):
        out = []
        carry = CONST1 if subtract else CONST0
        for x, y in zip(abits, bbits):
            if subtract:
                y = _not(y)
            s = _xor(_xor(x, y), carry)
            carry = _or(_and(x, y), _and(carry, _xor(x, y)))
            out.append(s)
        return out

    def _macro_cmp(self, op, abits, bbits, w):
        return Node(op, tuple(abits + bbits), meta=(w, None))

    def _blast(self, expr):
        if isinstance(expr, A.Num):
            w = self.width(expr)
            return [CONST1 if (expr.value >> i) & 1 else CONST0 for i in range(w)]
        if isinstance(expr, A.Ident):
            w = self.design.nets[expr.name].width if expr.name in self.design.nets else 0
            if w == 0:
                raise UnassignedNet(expr.name)
            return [self.net_bit(expr.name, i) for i in range(w)]
        if isinstance(expr, A.Select):
            base_bits = (self.blast(A.Ident(expr.base)) if isinstance(expr.base, str)
                         else self.blast(expr.base))
            try:
                idx = const_eval(expr.index, {})
            except ValueError:
                amt = self.blast(expr.index)
                return [self._shift_dynamic(base_bits, amt, left=False)[0]]
            return [base_bits[idx] if 0 <= idx < len(base_bits) else CONST0]
        if isinstance(expr, A.PartSelect):
            base_bits = (self.blast(A.Ident(expr.base)) if isinstance(expr.base, str)
                         else self.blast(expr.base))
            msb = const_eval(expr.msb, {})
            lsb = const_eval(expr.lsb, {})
            return [base_bits[i] if i < len(base_bits) else CONST0
                    for i in range(lsb, msb + 1)]
        if isinstance(expr, A.Unary):
            op = expr.op
            if op == "~":
                return [_not(b) for b in self.blast(expr.operand)]
            if op == "+":
                return self.blast(expr.operand)
            if op == "-":
                bits = self.blast(expr.operand)
                zeros = [CONST0] * len(bits)
                if len(bits) > self.expand_limit:
                    w = len(bits)
                    return [Node("SUBM", tuple(zeros + bits), meta=(w, k))
                            for k in range(w)]
                return self._add(zeros, bits, subtract=True)
            if op == "!":
                return [_not(self._bool(expr.operand))]
            bits = self.blast(expr.operand)
            base = {"&": "AND", "|": "OR", "^": "XOR",
                    "~&": "AND", "~|": "OR", "~^": "XOR"}[op]
            node = self._reduce(bits, base)
            if op.startswith("~"):
                node = _not(node)
            return [node]
        if isinstance(expr, A.Binary):
            op = expr.op
            if op in ("&", "|", "^", "~^"):
                w = self.width(expr)
                ab = self._extend(self.blast(expr.left), w)
                bb = self._extend(self.blast(expr.right), w)
                if op == "~^":
                    return [_not(_xor(x, y)) for x, y in zip(ab, bb)]
                name = {"&": "AND", "|": "OR", "^": "XOR"}[op]
                return [Node(name, (x, y)) for x, y in zip(ab, bb)]
            if op in ("&&", "||"):
                x = self._bool(expr.left)
                y = self._bool(expr.right)
                return [Node("AND" if op == "&&" else "OR", (x, y))]
            if op in ("==", "!="):
                w = max(self.width(expr.left), self.width(expr.right))
                ab = self._extend(self.blast(expr.left), w)
                bb = self._extend(self.blast(expr.right), w)
                node = (self._eq(ab, bb) if w <= self.expand_limit
                        else self._macro_cmp("EQM", ab, bb, w))
                return [node if op == "==" else _not(node)]
            if op in ("<", "<=", ">", ">="):
                w = max(self.width(expr.left), self.width(expr.right))
                ab = self._extend(self.blast(expr.left), w)
                bb = self._extend(self.blast(expr.right), w)
                if op in (">", "<="):
                    ab, bb = bb, ab  # a>b == b<a ; a<=b == !(b<a) == !(a'<b')
                if w <= self.expand_limit:
                    node = self._lt(ab, bb)
                else:
                    node = self._macro_cmp("LTM", ab, bb, w)
                return [node if op in ("<", ">") else _not(node)]
            if op in ("<<", ">>"):
                bits = self.blast(expr.left)
                try:
                    amt = const_eval(expr.right, {})
                except ValueError:
                    return self._shift_dynamic(bits, self.blast(expr.right),
                                               left=op == "<<")
                if op == "<<":
                    return [bits[i - amt] if i - amt >= 0 else CONST0
                            for i in range(len(bits))]
                return [bits[i + amt] if i + amt < len(bits) else CONST0
                        for i in range(len(bits))]
            if op in ("+", "-"):
                w = self.width(expr)
                ab = self._extend(self.blast(expr.left), w)
                bb = self._extend(self.blast(expr.right), w)
                if w > self.expand_limit:
                    mop = "ADDM" if op == "+" else "SUBM"
                    return [Node(mop, tuple(ab + bb), meta=(w, k)) for k in range(w)]
                return self._add(ab, bb, subtract=op == "-")
            raise UnsupportedConstruct(f"operator {op}")
        if isinstance(expr, A.Ternary):
            sel = self._bool(expr.cond)
            w = self.width(expr)
            tb = self._extend(self.blast(expr.then), w)
            ob = self._extend(self.blast(expr.other), w)
            return [_mux(sel, t, o) for t, o in zip(tb, ob)]
        if isinstance(expr, A.Concat):
            bits = []
            for part in reversed(expr.parts):  # written MSB-first
                bits.extend(self.blast(part))
            return bits
        if isinstance(expr, A.Repl):
            count = const_eval(expr.count, {})
            vbits = self.blast(expr.value)
            return vbits * count
        raise UnsupportedConstruct(type(expr).__name__)


def bit_blast(design: ElaboratedDesign, expand_limit=DEFAULT_EXPAND_LIMIT):
    """One BindTree per top-output bit and per register bit, stable order."""
    blaster = _Blaster(design, expand_limit)
    roots = []
    for (net, bit) in sorted(blaster.seq_bits):
        roots.append((BitRef(net, bit, "register"), blaster.driver[(net, bit)]))
    for name, fn in sorted(design.nets.items()):
        if fn.kind != "output":
            continue
        for bit in range(fn.width):
            if (name, bit) in blaster.seq_bits:
                continue  # already a register root
            drv = blaster.driver.get((name, bit))
            if drv is None:
                raise UnassignedNet(name, bit)
            roots.append((BitRef(name, bit, "top-output"), drv))
    forest = []
    for ref, drv in roots:
        bits = blaster.blast(drv.expr)
        pos = ref.bit - drv.lsb
        node = bits[pos] if pos < len(bits) else CONST0
        forest.append(BindTree(ref, node))
    return forest


def compute_dependencies(forest) -> DependencyGraph:
    """Root-to-root read edges; sequential cycles flagged for the fixpoint."""
    graph = DependencyGraph()
    by_key = {(t.root.net, t.root.bit): t.root for t in forest}
    adj = {}
    for tree in forest:
        graph.vertices.add(tree.root)
        adj.setdefault(tree.root, set())
        for leaf in tree.leaves():
            if leaf.role == "register":
                target = by_key.get((leaf.net, leaf.bit), leaf)
                graph.edges.add((tree.root, target))
                adj[tree.root].add(target)
                graph.vertices.add(target)
                adj.setdefault(target, set())
    for scc in _sccs(adj):
        if len(scc) > 1 or any(v in adj.get(v, ()) for v in scc):
            graph.cycles.append(set(scc))
    return graph


def _sccs(adj):
    """Tarjan, iterative."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    counter = [0]
    out = []

    for start in adj:
        if start in index:
            continue
        work = [(start, iter(sorted(adj[start], key=str)))]
        index[start] = low[start] = counter[0]
        counter[0] += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(adj[w], key=str))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
            if low[v] == index[v]:
                scc = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.append(w)
                    if w == v:
                        break
                out.append(scc)
    return out


def eval_node(node: Node, values) -> int:
    """Evaluate a tree given leaf values keyed by BitRef."""
    if node.op == "const0":
        return 0
    if node.op == "const1":
        return 1
    if node.op == "leaf":
        return values[node.ref]
    kids = node.children
    if node.op == "AND":
        return eval_node(kids[0], values) & eval_node(kids[1], values)
    if node.op == "OR":
        return eval_node(kids[0], values) | eval_node(kids[1], values)
    if node.op == "XOR":
        return eval_node(kids[0], values) ^ eval_node(kids[1], values)
    if node.op == "NOT":
        return 1 - eval_node(kids[0], values)
    if node.op == "MUX":
        sel = eval_node(kids[0], values)
        return eval_node(kids[1] if sel else kids[2], values)
    if node.is_macro():
        w, out_bit = node.meta
        a = sum(eval_node(kids[i], values) << i for i in range(w))
        b = sum(eval_node(kids[w + i], values) << i for i in range(w))
        if node.op == "EQM":
            return int(a == b)
        if node.op == "LTM":
            return int(a < b)
        total = (a - b) if node.op == "SUBM" else (a + b)
        return (total >> out_bit) & 1
    raise ValueError(f"unknown node op {node.op}")


def dump_forest(forest) -> str:
    """One stable S-expression per root, for golden tests."""
    def render(node):
        if node.op in ("const0", "const1"):
            return node.op[-1]
        if node.op == "leaf":
            return str(node.ref)
        if node.is_macro():
            w, out_bit = node.meta
            tag = node.op if out_bit is None else f"{node.op}:{out_bit}"
            return f"({tag}/{w} " + " ".join(render(c) for c in node.children) + ")"
        return f"({node.op} " + " ".join(render(c) for c in node.children) + ")"

    lines = [f"{tree.root} = {render(tree.node)}"
             for tree in sorted(forest, key=lambda t: (t.root.net, t.root.bit))]
    return "\n".join(lines) + "\n"
