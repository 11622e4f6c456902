"""Tokenizer for the supported Verilog subset.

Comments are stripped here, except that ``// qflow: high`` trailing
comments are recorded by line number so the parser can attach security
labels to the declaration on that line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import UnsupportedConstruct, VerilogSyntaxError

KEYWORDS = {
    "module", "endmodule", "input", "output", "inout", "wire", "reg",
    "assign", "always", "begin", "end", "if", "else", "case", "casex",
    "casez", "endcase", "default", "generate", "endgenerate", "genvar",
    "for", "parameter", "localparam", "posedge", "negedge", "integer",
    "initial", "function", "task",
}

_SIZED_NUM = re.compile(r"(\d+)?'([bodhBODH])([0-9a-fA-FxXzZ_?]+)")
_BIN_NUM = re.compile(r"0b([01_]+)")
_DEC_NUM = re.compile(r"\d+")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*")
_HIGH_COMMENT = re.compile(r"qflow\s*:\s*high", re.IGNORECASE)

# longest-first punctuation / operators
_PUNCT = [
    "<<<", ">>>", "===", "!==",
    "<=", ">=", "==", "!=", "&&", "||", "<<", ">>", "~&", "~|", "~^", "^~",
    "(", ")", "[", "]", "{", "}", ";", ":", ",", ".", "?", "#", "@", "=",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">",
]


@dataclass(frozen=True)
class Token:
    kind: str  # 'id' | 'kw' | 'num' | 'attr' | punctuation text | 'eof'
    text: str
    value: object  # (value, width) for nums, attribute body for attrs
    line: int
    col: int


def _base_bits(base: str) -> int:
    return {"b": 1, "o": 3, "d": 0, "h": 4}[base.lower()]


def tokenize(path: str, text: str):
    """Return (tokens, high_comment_lines)."""
    tokens = []
    high_lines = set()
    i, line, linestart = 0, 1, 0
    n = len(text)

    def err(msg, l, c):
        raise VerilogSyntaxError(path, l, c, msg)

    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
            linestart = i
            continue
        if c in " \t\r":
            i += 1
            continue
        col = i - linestart + 1
        if text.startswith("//", i):
            j = text.find("\n", i)
            j = n if j < 0 else j
            if _HIGH_COMMENT.search(text[i:j]):
                high_lines.add(line)
            i = j
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i)
            if j < 0:
                err("unterminated block comment", line, col)
            line += text.count("\n", i, j)
            i = j + 2
            continue
        # '(*)' is a wildcard sensitivity list, not an attribute
        if text.startswith("(*", i) and not text.startswith("(*)", i):
            j = text.find("*)", i)
            if j < 0:
                err("unterminated attribute", line, col)
            body = text[i + 2:j].strip()
            tokens.append(Token("attr", body, body, line, col))
            line += text.count("\n", i, j)
            i = j + 2
            continue
        m = _SIZED_NUM.match(text, i)
        if m:
            size, base, digits = m.groups()
            digits = digits.replace("_", "")
            if re.search(r"[xXzZ?]", digits):
                raise UnsupportedConstruct(
                    "x/z value in literal (two-valued logic only)", f"{path}:{line}")
            value = int(digits, {"b": 2, "o": 8, "d": 10, "h": 16}[base.lower()])
            if size is not None:
                width = int(size)
            elif base.lower() == "d":
                width = None
            else:
                width = len(digits) * _base_bits(base)
            if width:
                value &= (1 << width) - 1
            tokens.append(Token("num", m.group(0), (value, width), line, col))
            i = m.end()
            continue
        m = _BIN_NUM.match(text, i)
        if m:
            digits = m.group(1).replace("_", "")
            tokens.append(
                Token("num", m.group(0), (int(digits, 2), len(digits)), line, col))
            i = m.end()
            continue
        m = _DEC_NUM.match(text, i)
        if m:
            tokens.append(Token("num", m.group(0), (int(m.group(0)), None), line, col))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group(0)
            kind = "kw" if word in KEYWORDS else "id"
            tokens.append(Token(kind, word, word, line, col))
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(Token(p, p, p, line, col))
                i += len(p)
                break
        else:
            err(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", None, line, 1))
    return tokens, high_lines
