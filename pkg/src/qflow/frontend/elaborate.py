"""Elaboration: parameters, generate unrolling, flattening, procedural lowering.

The result is a flat netlist where every assignment targets a bit range of
a single net and every right-hand side refers only to flat net names and
constants.  Procedural blocks are lowered here: blocking assignments are
substituted forward, nonblocking assignments read pre-cycle values, and
if/case control flow becomes ternary expressions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import (
    MultipleDrivers,
    NonConstantGenerateBound,
    QFlowError,
    RecursiveInstantiation,
    UnknownSignal,
    UnsupportedConstruct,
    WidthMismatch,
)
from . import ast_nodes as A

_GENERATE_UNROLL_LIMIT = 1 << 16


@dataclass
class FlatNet:
    name: str
    width: int
    kind: str  # input | output | wire | reg


@dataclass
class FlatAssign:
    target: str
    msb: int
    lsb: int
    expr: A.Expr
    sequential: bool = False
    clock: str | None = None


@dataclass
class ElaboratedDesign:
    top: str
    nets: dict = field(default_factory=dict)  # name -> FlatNet
    assigns: list = field(default_factory=list)
    labels: dict = field(default_factory=dict)  # input net name -> 'high'|'low'

    def high_bits(self):
        """Secret bit identities in declaration order: [(net, bit, secret_id)]."""
        out = []
        sid = 0
        for name, net in self.nets.items():
            if net.kind == "input" and self.labels.get(name) == "high":
                for b in range(net.width):
                    out.append((name, b, sid))
                    sid += 1
        return out


# --------------------------------------------------------------------------
# Constant evaluation over parameter / genvar environments

def const_eval(expr, env):
    if isinstance(expr, A.Num):
        return expr.value
    if isinstance(expr, A.Ident):
        if expr.name in env:
            return env[expr.name]
        raise ValueError(f"not a constant: {expr.name}")
    if isinstance(expr, A.Unary):
        v = const_eval(expr.operand, env)
        return {"-": -v, "+": v, "~": ~v, "!": int(v == 0)}[expr.op]
    if isinstance(expr, A.Binary):
        a = const_eval(expr.left, env)
        b = const_eval(expr.right, env)
        ops = {
            "+": a + b, "-": a - b, "&": a & b, "|": a | b, "^": a ^ b,
            "<<": a << b, ">>": a >> b,
            "==": int(a == b), "!=": int(a != b),
            "<": int(a < b), "<=": int(a <= b),
            ">": int(a > b), ">=": int(a >= b),
            "&&": int(bool(a) and bool(b)), "||": int(bool(a) or bool(b)),
        }
        return ops[expr.op]
    if isinstance(expr, A.Ternary):
        return const_eval(expr.then if const_eval(expr.cond, env) else expr.other, env)
    raise ValueError(f"not a constant expression: {expr!r}")


class _Elaborator:
    def __init__(self, ast):
        self.ast = ast
        self.nets = {}
        self.assigns = []

    # -- helpers -----------------------------------------------------------
    def _range_width(self, msb, lsb, env, where):
        if msb is None:
            return 1, 0
        try:
            m = const_eval(msb, env)
            l = const_eval(lsb, env)
        except ValueError as e:
            raise NonConstantGenerateBound(where) from e
        if l != 0:
            raise UnsupportedConstruct(f"non-zero range base [{m}:{l}]", where)
        return m - l + 1, l

    def resolve(self, expr, env, prefix):
        """Substitute parameters/genvars with constants, prefix net names."""
        if isinstance(expr, A.Num):
            return expr
        if isinstance(expr, A.Ident):
            if expr.name in env:
                return A.Num(env[expr.name])
            return A.Ident(prefix + expr.name)
        if isinstance(expr, A.Select):
            base = expr.base
            if isinstance(base, str):
                if base in env:  # parameter indexed as value: unsupported
                    raise UnsupportedConstruct(f"bit-select of parameter {base}")
                base = prefix + base
            else:
                base = self.resolve(base, env, prefix)
            idx = self.resolve(expr.index, env, prefix)
            return A.Select(base, idx)
        if isinstance(expr, A.PartSelect):
            base = expr.base
            base = prefix + base if isinstance(base, str) else self.resolve(base, env, prefix)
            return A.PartSelect(base, self.resolve(expr.msb, env, prefix),
                                self.resolve(expr.lsb, env, prefix))
        if isinstance(expr, A.Unary):
            return A.Unary(expr.op, self.resolve(expr.operand, env, prefix))
        if isinstance(expr, A.Binary):
            return A.Binary(expr.op, self.resolve(expr.left, env, prefix),
                            self.resolve(expr.right, env, prefix))
        if isinstance(expr, A.Ternary):
            return A.Ternary(self.resolve(expr.cond, env, prefix),
                             self.resolve(expr.then, env, prefix),
                             self.resolve(expr.other, env, prefix))
        if isinstance(expr, A.Concat):
            return A.Concat(tuple(self.resolve(p, env, prefix) for p in expr.parts))
        if isinstance(expr, A.Repl):
            return A.Repl(self.resolve(expr.count, env, prefix),
                          self.resolve(expr.value, env, prefix))
        raise UnsupportedConstruct(f"expression {type(expr).__name__}")

    def net_width(self, name):
        if name not in self.nets:
            raise UnknownSignal(name)
        return self.nets[name].width

    def target_bits(self, target):
        """Resolved lvalue -> (net, msb, lsb)."""
        if isinstance(target, A.Ident):
            w = self.net_width(target.name)
            return target.name, w - 1, 0
        if isinstance(target, A.Select):
            if not isinstance(target.base, str):
                raise UnsupportedConstruct("assignment to expression")
            b = const_eval(target.index, {})
            return target.base, b, b
        if isinstance(target, A.PartSelect):
            if not isinstance(target.base, str):
                raise UnsupportedConstruct("assignment to expression")
            return target.base, const_eval(target.msb, {}), const_eval(target.lsb, {})
        raise UnsupportedConstruct(f"assignment target {type(target).__name__}")

    # -- instantiation -----------------------------------------------------
    def instantiate(self, mod, prefix, param_overrides, stack):
        env = {}
        for name, p in mod.params.items():
            if name in param_overrides:
                env[name] = param_overrides[name]
            else:
                try:
                    env[name] = const_eval(p.value, env)
                except ValueError as e:
                    raise NonConstantGenerateBound(f"parameter {name}") from e

        # declare ports, then internal nets
        for pname in mod.port_order:
            if pname not in mod.ports:
                raise UnknownSignal(f"port {pname} of module {mod.name} has no direction")
            p = mod.ports[pname]
            w, _ = self._range_width(p.msb, p.lsb, env, f"{mod.name}.{pname}")
            kind = p.direction if prefix == "" else "wire"
            self.nets[prefix + pname] = FlatNet(prefix + pname, w, kind)
        deferred = []
        self._declare_items(mod.items, env, prefix, mod, deferred)
        for item, ienv in deferred:
            self._elab_item(item, ienv, prefix, stack, mod)

    def _declare_items(self, items, env, prefix, mod, deferred):
        """First pass: declare nets so widths are known before lowering."""
        for item in items:
            if isinstance(item, A.NetDecl):
                flat = prefix + item.name
                w, _ = self._range_width(item.msb, item.lsb, env, flat)
                if flat in self.nets:
                    # port re-declared as reg: keep the port kind
                    if self.nets[flat].width != w:
                        raise WidthMismatch(flat, "redeclaration width differs")
                else:
                    self.nets[flat] = FlatNet(flat, w, item.kind)
                if item.init is not None:
                    deferred.append((A.ContAssign(A.Ident(item.name), item.init), dict(env)))
            elif isinstance(item, A.GenerateFor):
                for ienv in self._generate_envs(item, env):
                    self._declare_items(item.items, ienv, prefix, mod, deferred)
            else:
                deferred.append((item, dict(env)))

    def _generate_envs(self, gen, env):
        try:
            val = const_eval(gen.init, env)
        except ValueError as e:
            raise NonConstantGenerateBound(f"genvar {gen.genvar}") from e
        envs = []
        for _ in range(_GENERATE_UNROLL_LIMIT):
            ienv = dict(env)
            ienv[gen.genvar] = val
            try:
                if not const_eval(gen.cond, ienv):
                    return envs
                envs.append(ienv)
                val = const_eval(gen.step, ienv)
            except ValueError as e:
                raise NonConstantGenerateBound(f"genvar {gen.genvar}") from e
        raise NonConstantGenerateBound(f"genvar {gen.genvar}: unroll limit exceeded")

    def _elab_item(self, item, env, prefix, stack, mod):
        if isinstance(item, A.ContAssign):
            target = self.resolve(item.target, env, prefix)
            rhs = self.resolve(item.rhs, env, prefix)
            net, msb, lsb = self.target_bits(target)
            self.assigns.append(FlatAssign(net, msb, lsb, rhs))
        elif isinstance(item, A.Always):
            self._lower_always(item, env, prefix)
        elif isinstance(item, A.Instance):
            self._elab_instance(item, env, prefix, stack)
        else:
            raise UnsupportedConstruct(type(item).__name__)

    def _elab_instance(self, inst, env, prefix, stack):
        if inst.module not in self.ast.modules:
            raise UnknownSignal(f"module {inst.module}")
        if inst.module in stack:
            raise RecursiveInstantiation(stack + [inst.module])
        child = self.ast.modules[inst.module]
        cprefix = prefix + inst.name + "."

        overrides = {}
        pnames = list(child.params)
        for i, (name, expr) in enumerate(inst.param_overrides):
            pname = name if name is not None else (pnames[i] if i < len(pnames) else None)
            if pname is None or pname not in child.params:
                raise UnknownSignal(f"parameter {pname} of {inst.module}")
            overrides[pname] = const_eval(self.resolve(expr, env, prefix), {})

        conns = {}
        for i, (pname, expr) in enumerate(inst.connections):
            if pname is None:
                if i >= len(child.port_order):
                    raise WidthMismatch(f"{prefix}{inst.name}", "too many port connections")
                pname = child.port_order[i]
            if pname not in child.ports:
                raise UnknownSignal(f"port {pname} of {inst.module}")
            conns[pname] = expr

        self.instantiate(child, cprefix, overrides, stack + [inst.module])

        for pname, expr in conns.items():
            if expr is None:
                continue
            port = child.ports[pname]
            resolved = self.resolve(expr, env, prefix)
            flat_port = cprefix + pname
            pw = self.nets[flat_port].width
            if port.direction == "input":
                if isinstance(resolved, A.Ident) and resolved.name in self.nets:
                    aw = self.nets[resolved.name].width
                    if aw != pw:
                        raise WidthMismatch(f"{prefix}{inst.name}.{pname}",
                                            f"port width {pw} vs {aw}")
                self.assigns.append(FlatAssign(flat_port, pw - 1, 0, resolved))
            else:
                net, msb, lsb = self.target_bits(resolved)
                if msb - lsb + 1 != pw:
                    raise WidthMismatch(f"{prefix}{inst.name}.{pname}",
                                        f"port width {pw} vs {msb - lsb + 1}")
                self.assigns.append(FlatAssign(net, msb, lsb, A.Ident(flat_port)))

    # -- procedural lowering ----------------------------------------------
    def _lower_always(self, always, env, prefix):
        sequential = always.sens[0] == "posedge"
        clock = prefix + always.sens[1] if sequential else None
        benv: dict = {}  # net -> list of per-bit exprs (blocking view)
        nenv: dict = {}  # net -> list of per-bit exprs (nonblocking targets)
        self._exec(always.body, env, prefix, benv, nenv)
        if sequential:
            # blocking targets inside a clocked block infer registers too
            for net, bits in list(benv.items()):
                dst = nenv.setdefault(net, [None] * len(bits))
                for i, e in enumerate(bits):
                    if e is not None and dst[i] is None:
                        dst[i] = e
            emit, seq = nenv, True
        else:
            for net, bits in nenv.items():
                dst = benv.setdefault(net, [None] * len(bits))
                for i, e in enumerate(bits):
                    if e is not None:
                        dst[i] = e
            emit, seq = benv, False
        for net, bits in emit.items():
            for i, e in enumerate(bits):
                if e is not None:
                    self.assigns.append(FlatAssign(net, i, i, e, sequential=seq, clock=clock))

    def _subst(self, expr, benv):
        """Replace reads of blocking-assigned nets by their current expression."""
        if isinstance(expr, A.Ident):
            if expr.name in benv:
                return self._rebuild(expr.name, benv)
            return expr
        if isinstance(expr, A.Select):
            if isinstance(expr.base, str) and expr.base in benv:
                bits = benv[expr.base]
                try:
                    idx = const_eval(expr.index, {})
                except ValueError:
                    return A.Select(self._rebuild(expr.base, benv), self._subst(expr.index, benv))
                if 0 <= idx < len(bits) and bits[idx] is not None:
                    return bits[idx]
                return A.Select(expr.base, A.Num(idx))
            base = expr.base if isinstance(expr.base, str) else self._subst(expr.base, benv)
            return A.Select(base, self._subst(expr.index, benv))
        if isinstance(expr, A.PartSelect):
            if isinstance(expr.base, str) and expr.base in benv:
                return A.PartSelect(self._rebuild(expr.base, benv), expr.msb, expr.lsb)
            base = expr.base if isinstance(expr.base, str) else self._subst(expr.base, benv)
            return A.PartSelect(base, expr.msb, expr.lsb)
        if isinstance(expr, A.Unary):
            return A.Unary(expr.op, self._subst(expr.operand, benv))
        if isinstance(expr, A.Binary):
            return A.Binary(expr.op, self._subst(expr.left, benv), self._subst(expr.right, benv))
        if isinstance(expr, A.Ternary):
            return A.Ternary(self._subst(expr.cond, benv), self._subst(expr.then, benv),
                             self._subst(expr.other, benv))
        if isinstance(expr, A.Concat):
            return A.Concat(tuple(self._subst(p, benv) for p in expr.parts))
        if isinstance(expr, A.Repl):
            return A.Repl(expr.count, self._subst(expr.value, benv))
        return expr

    def _rebuild(self, net, benv):
        """Current value of a net as an expression (MSB-first concat)."""
        bits = benv[net]
        parts = []
        for i in range(len(bits) - 1, -1, -1):
            parts.append(bits[i] if bits[i] is not None else A.Select(net, A.Num(i)))
        if len(parts) == 1:
            return parts[0]
        return A.Concat(tuple(parts))

    def _exec(self, stmt, env, prefix, benv, nenv):
        if isinstance(stmt, A.Block):
            for s in stmt.stmts:
                self._exec(s, env, prefix, benv, nenv)
        elif isinstance(stmt, A.ProcAssign):
            target = self.resolve(stmt.target, env, prefix)
            rhs = self._subst(self.resolve(stmt.rhs, env, prefix), benv)
            net, msb, lsb = self.target_bits(target)
            if net not in self.nets:
                raise UnknownSignal(net)
            width = msb - lsb + 1
            dest = benv if stmt.blocking else nenv
            bits = dest.setdefault(net, [None] * self.nets[net].width)
            for k in range(width):
                bits[lsb + k] = rhs if width == 1 else A.Select(rhs, A.Num(k))
        elif isinstance(stmt, A.If):
            cond = self._subst(self.resolve(stmt.cond, env, prefix), benv)
            b1 = {n: list(v) for n, v in benv.items()}
            n1 = {n: list(v) for n, v in nenv.items()}
            self._exec(stmt.then, env, prefix, b1, n1)
            b2 = {n: list(v) for n, v in benv.items()}
            n2 = {n: list(v) for n, v in nenv.items()}
            if stmt.other is not None:
                self._exec(stmt.other, env, prefix, b2, n2)
            self._merge(cond, benv, b1, b2)
            self._merge(cond, nenv, n1, n2)
        elif isinstance(stmt, A.Case):
            self._exec(self._desugar_case(stmt), env, prefix, benv, nenv)
        else:
            raise UnsupportedConstruct(type(stmt).__name__)

    @staticmethod
    def _desugar_case(case):
        default = None
        arms = []
        for labels, body in case.items:
            if labels is None:
                default = body
            else:
                arms.append((labels, body))
        node = default if default is not None else A.Block([])
        for labels, body in reversed(arms):
            cond = None
            for lab in labels:
                eq = A.Binary("==", case.subject, lab)
                cond = eq if cond is None else A.Binary("||", cond, eq)
            node = A.If(cond, body, node)
        return node

    def _merge(self, cond, dest, e1, e2):
        for net in set(e1) | set(e2):
            v1 = e1.get(net)
            v2 = e2.get(net)
            width = len(v1 if v1 is not None else v2)
            out = dest.setdefault(net, [None] * width)
            pre = list(out)
            for i in range(width):
                a = v1[i] if v1 is not None else None
                b = v2[i] if v2 is not None else None
                if a is b:
                    out[i] = a
                    continue
                # untouched side keeps the pre-branch value (or the stored one)
                fallback = pre[i] if pre[i] is not None else A.Select(net, A.Num(i))
                a = a if a is not None else fallback
                b = b if b is not None else fallback
                out[i] = a if a is b else A.Ternary(cond, a, b)


def elaborate(ast: A.Ast, top: str, labels=None) -> ElaboratedDesign:
    """Flatten the design rooted at ``top`` into bit-range assignments."""
    if top not in ast.modules:
        raise UnknownSignal(f"module {top}")
    elab = _Elaborator(ast)
    elab.instantiate(ast.modules[top], "", {}, [top])

    seen = {}
    for a in elab.assigns:
        if a.target not in elab.nets:
            raise UnknownSignal(a.target)
        w = elab.nets[a.target].width
        if not (0 <= a.lsb <= a.msb < w):
            raise WidthMismatch(a.target, f"range [{a.msb}:{a.lsb}] outside width {w}")
        for b in range(a.lsb, a.msb + 1):
            if (a.target, b) in seen:
                raise MultipleDrivers(a.target, b)
            seen[(a.target, b)] = a

    design = ElaboratedDesign(top=top, nets=elab.nets, assigns=elab.assigns)
    if labels is None:
        mod = ast.modules[top]
        labels = {n: ("high" if p.high else "low")
                  for n, p in mod.ports.items() if p.direction == "input"}
    design.labels = dict(labels)
    return design
