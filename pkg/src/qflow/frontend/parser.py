"""Recursive-descent parser for the supported Verilog subset."""

from __future__ import annotations

from ..errors import UnknownSignal, UnsupportedConstruct, VerilogSyntaxError
from . import ast_nodes as A
from .lexer import tokenize

_QFLOW_ATTR = "qflow_high"

_REJECTED_ITEMS = {
    "casex": "casex statement",
    "casez": "casez statement",
    "initial": "initial block",
    "function": "function declaration",
    "task": "task declaration",
    "integer": "integer variable",
    "inout": "inout port",
    "negedge": "negedge-triggered logic",
}


class _Parser:
    def __init__(self, path, text):
        self.path = path
        self.tokens, self.high_lines = tokenize(path, text)
        self.pos = 0

    # -- token plumbing ----------------------------------------------------
    def peek(self, ahead=0):
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, kind, text=None):
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind, text=None):
        tok = self.next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            self.err(f"expected {want!r}, found {tok.text!r}", tok)
        return tok

    def err(self, msg, tok=None):
        tok = tok or self.peek()
        raise VerilogSyntaxError(self.path, tok.line, tok.col, msg)

    def reject(self, tok):
        raise UnsupportedConstruct(
            _REJECTED_ITEMS.get(tok.text, tok.text), f"{self.path}:{tok.line}")

    # -- top level ---------------------------------------------------------
    def parse_modules(self):
        modules = []
        while not self.at("eof"):
            if self.at("kw", "module"):
                modules.append(self.module())
            else:
                self.err("expected 'module'")
        return modules

    def module(self):
        self.expect("kw", "module")
        name = self.expect("id").text
        mod = A.ModuleDecl(name=name, port_order=[])
        if self.at("#"):
            self.next()
            self.expect("(")
            while not self.at(")"):
                self.expect("kw", "parameter")
                pname = self.expect("id").text
                self.expect("=")
                mod.params[pname] = A.ParamDecl(pname, self.expression())
                if self.at(","):
                    self.next()
            self.expect(")")
        if self.at("("):
            self.next()
            self.port_list(mod)
            self.expect(")")
        self.expect(";")
        while not self.at("kw", "endmodule"):
            self.module_item(mod)
        self.expect("kw", "endmodule")
        return mod

    def _port_marks(self):
        """Consume any (* qflow_high *) attribute / literal High prefix."""
        high = False
        while True:
            if self.at("attr"):
                if _QFLOW_ATTR in self.peek().text:
                    high = True
                self.next()
            elif self.at("id", "High"):
                self.next()
                high = True
            else:
                return high

    def port_list(self, mod):
        if self.at(")"):
            return
        first = self.peek()
        ansi = first.kind == "attr" or first.text in ("input", "output", "inout", "High")
        if not ansi:
            while True:
                mod.port_order.append(self.expect("id").text)
                if not self.at(","):
                    return
                self.next()
        direction = None
        msb = lsb = None
        high = False
        while True:
            marked = self._port_marks()
            if self.at("kw") and self.peek().text in ("input", "output", "inout"):
                tok = self.next()
                if tok.text == "inout":
                    self.reject(tok)
                direction = tok.text
                high = marked
                if self.at("kw") and self.peek().text in ("wire", "reg"):
                    self.next()
                msb = lsb = None
                if self.at("["):
                    msb, lsb = self.range_spec()
            elif direction is None:
                self.err("expected port direction")
            else:
                high = high or marked
            nt = self.expect("id")
            decl_high = high or (nt.line in self.high_lines)
            mod.port_order.append(nt.text)
            mod.ports[nt.text] = A.PortDecl(direction, msb, lsb, nt.text,
                                            high=decl_high and direction == "input",
                                            line=nt.line)
            if not self.at(","):
                return
            self.next()

    def range_spec(self):
        self.expect("[")
        msb = self.expression()
        self.expect(":")
        lsb = self.expression()
        self.expect("]")
        return msb, lsb

    # -- module items ------------------------------------------------------
    def module_item(self, mod, in_generate=False):
        high = self._port_marks()
        tok = self.peek()
        if tok.kind == "kw":
            kw = tok.text
            if kw in ("input", "output"):
                self.direction_decl(mod, high)
            elif kw == "inout":
                self.reject(tok)
            elif kw in ("wire", "reg"):
                self.net_decl(mod)
            elif kw in ("parameter", "localparam"):
                self.param_decl(mod, local=kw == "localparam")
            elif kw == "assign":
                self.next()
                target = self.expression()
                self.expect("=")
                rhs = self.expression()
                self.expect(";")
                mod.items.append(A.ContAssign(target, rhs, line=tok.line))
            elif kw == "always":
                mod.items.append(self.always_block())
            elif kw == "genvar":
                self.next()
                while True:
                    self.expect("id")
                    if not self.at(","):
                        break
                    self.next()
                self.expect(";")
            elif kw == "generate":
                self.next()
                while not self.at("kw", "endgenerate"):
                    self.module_item(mod, in_generate=True)
                self.expect("kw", "endgenerate")
            elif kw == "for":
                mod.items.append(self.generate_for())
            elif kw in _REJECTED_ITEMS:
                self.reject(tok)
            else:
                self.err(f"unexpected keyword {kw!r}")
        elif tok.kind == "id":
            mod.items.append(self.instance())
        else:
            self.err(f"unexpected token {tok.text!r}")

    def direction_decl(self, mod, high=False):
        tok = self.next()
        direction = tok.text
        if self.at("kw") and self.peek().text in ("wire", "reg"):
            self.next()
        msb = lsb = None
        if self.at("["):
            msb, lsb = self.range_spec()
        while True:
            nt = self.expect("id")
            decl_high = (high or nt.line in self.high_lines) and direction == "input"
            if nt.text not in mod.port_order:
                mod.port_order.append(nt.text)
            mod.ports[nt.text] = A.PortDecl(direction, msb, lsb, nt.text,
                                            high=decl_high, line=nt.line)
            if not self.at(","):
                break
            self.next()
        self.expect(";")

    def net_decl(self, mod):
        tok = self.next()
        kind = tok.text
        msb = lsb = None
        if self.at("["):
            msb, lsb = self.range_spec()
        while True:
            nt = self.expect("id")
            init = None
            if self.at("="):
                self.next()
                init = self.expression()
            mod.items.append(A.NetDecl(kind, msb, lsb, nt.text, init, line=nt.line))
            if not self.at(","):
                break
            self.next()
        self.expect(";")

    def param_decl(self, mod, local):
        self.next()
        if self.at("["):
            self.range_spec()
        while True:
            name = self.expect("id").text
            self.expect("=")
            mod.params[name] = A.ParamDecl(name, self.expression(), local=local)
            if not self.at(","):
                break
            self.next()
        self.expect(";")

    def always_block(self):
        tok = self.expect("kw", "always")
        self.expect("@")
        paren = self.at("(")
        if paren:
            self.next()
        if self.at("*"):
            self.next()
            sens = ("comb",)
        elif self.at("kw", "posedge"):
            self.next()
            sens = ("posedge", self.expect("id").text)
            if self.at("id", "or") or self.at("kw", "or"):
                raise UnsupportedConstruct(
                    "multiple events in sensitivity list", f"{self.path}:{tok.line}")
        elif self.at("kw", "negedge"):
            self.reject(tok)
        else:
            # plain sensitivity list: treat as combinational
            while not self.at(")"):
                self.next()
            sens = ("comb",)
        if paren:
            self.expect(")")
        return A.Always(sens, self.statement(), line=tok.line)

    def generate_for(self):
        tok = self.expect("kw", "for")
        self.expect("(")
        genvar = self.expect("id").text
        self.expect("=")
        init = self.expression()
        self.expect(";")
        cond = self.expression()
        self.expect(";")
        step_var = self.expect("id").text
        if step_var != genvar:
            self.err(f"generate step must update {genvar!r}")
        self.expect("=")
        step = self.expression()
        self.expect(")")
        gen = A.GenerateFor(genvar, init, cond, step, [], line=tok.line)
        sub = A.ModuleDecl(name="<generate>", port_order=[])
        if self.at("kw", "begin"):
            self.next()
            if self.at(":"):
                self.next()
                self.expect("id")
            while not self.at("kw", "end"):
                self.module_item(sub, in_generate=True)
            self.expect("kw", "end")
        else:
            self.module_item(sub, in_generate=True)
        gen.items = sub.items
        return gen

    def instance(self):
        mtok = self.expect("id")
        overrides = []
        if self.at("#"):
            self.next()
            self.expect("(")
            overrides = self.connection_list()
            self.expect(")")
        name = self.expect("id").text
        self.expect("(")
        conns = self.connection_list()
        self.expect(")")
        self.expect(";")
        return A.Instance(mtok.text, name, overrides, conns, line=mtok.line)

    def connection_list(self):
        conns = []
        if self.at(")"):
            return conns
        while True:
            if self.at("."):
                self.next()
                pname = self.expect("id").text
                self.expect("(")
                expr = None if self.at(")") else self.expression()
                self.expect(")")
                conns.append((pname, expr))
            else:
                conns.append((None, self.expression()))
            if not self.at(","):
                return conns
            self.next()

    # -- statements --------------------------------------------------------
    def statement(self):
        tok = self.peek()
        if tok.kind == "kw":
            if tok.text == "begin":
                self.next()
                if self.at(":"):
                    self.next()
                    self.expect("id")
                stmts = []
                while not self.at("kw", "end"):
                    stmts.append(self.statement())
                self.expect("kw", "end")
                return A.Block(stmts)
            if tok.text == "if":
                self.next()
                self.expect("(")
                cond = self.expression()
                self.expect(")")
                then = self.statement()
                other = None
                if self.at("kw", "else"):
                    self.next()
                    other = self.statement()
                return A.If(cond, then, other)
            if tok.text == "case":
                return self.case_stmt()
            if tok.text in _REJECTED_ITEMS:
                self.reject(tok)
            self.err(f"unexpected keyword {tok.text!r} in statement")
        target = self.lvalue()
        if self.at("="):
            self.next()
            blocking = True
        elif self.at("<="):
            self.next()
            blocking = False
        else:
            self.err("expected '=' or '<='")
        rhs = self.expression()
        self.expect(";")
        return A.ProcAssign(target, rhs, blocking, line=tok.line)

    def case_stmt(self):
        self.expect("kw", "case")
        self.expect("(")
        subject = self.expression()
        self.expect(")")
        items = []
        while not self.at("kw", "endcase"):
            if self.at("kw", "default"):
                self.next()
                if self.at(":"):
                    self.next()
                items.append((None, self.statement()))
            else:
                labels = [self.expression()]
                while self.at(","):
                    self.next()
                    labels.append(self.expression())
                self.expect(":")
                items.append((tuple(labels), self.statement()))
        self.expect("kw", "endcase")
        return A.Case(subject, items)

    def lvalue(self):
        name = self.expect("id").text
        if self.at("["):
            self.next()
            first = self.expression()
            if self.at(":"):
                self.next()
                lsb = self.expression()
                self.expect("]")
                return A.PartSelect(name, first, lsb)
            self.expect("]")
            return A.Select(name, first)
        return A.Ident(name)

    # -- expressions -------------------------------------------------------
    _BIN_LEVELS = [
        ("||",), ("&&",), ("|",), ("^", "~^", "^~"), ("&",),
        ("==", "!="), ("<", "<=", ">", ">="), ("<<", ">>"), ("+", "-"),
    ]

    def expression(self):
        return self.ternary()

    def ternary(self):
        cond = self.binary(0)
        if self.at("?"):
            self.next()
            then = self.expression()
            self.expect(":")
            other = self.ternary()
            return A.Ternary(cond, then, other)
        return cond

    def binary(self, level):
        if level >= len(self._BIN_LEVELS):
            return self.unary()
        ops = self._BIN_LEVELS[level]
        left = self.binary(level + 1)
        while self.peek().kind in ops:
            op = self.next().text
            if op == "^~":
                op = "~^"
            right = self.binary(level + 1)
            left = A.Binary(op, left, right)
        return left

    _UNARY = ("~", "!", "-", "+", "&", "|", "^", "~&", "~|", "~^")

    def unary(self):
        tok = self.peek()
        if tok.kind in self._UNARY:
            self.next()
            return A.Unary(tok.text, self.unary())
        return self.primary()

    def primary(self):
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            value, width = tok.value
            return A.Num(value, width)
        if tok.kind == "id":
            return self.lvalue()
        if tok.kind == "(":
            self.next()
            e = self.expression()
            self.expect(")")
            return e
        if tok.kind == "{":
            self.next()
            first = self.expression()
            if self.at("{"):
                self.next()
                parts = [self.expression()]
                while self.at(","):
                    self.next()
                    parts.append(self.expression())
                self.expect("}")
                self.expect("}")
                return A.Repl(first, A.Concat(tuple(parts)) if len(parts) > 1 else parts[0])
            parts = [first]
            while self.at(","):
                self.next()
                parts.append(self.expression())
            self.expect("}")
            return A.Concat(tuple(parts))
        self.err(f"unexpected token {tok.text!r} in expression")


def parse(source: A.SourceUnit) -> A.Ast:
    """Parse every file of a source unit into a single AST."""
    modules = {}
    for path, text in source.files:
        for mod in _Parser(path, text).parse_modules():
            modules[mod.name] = mod
    if source.top_module and source.top_module not in modules:
        raise UnknownSignal(
            f"top module {source.top_module!r} (have: {', '.join(sorted(modules))})")
    return A.Ast(modules)
