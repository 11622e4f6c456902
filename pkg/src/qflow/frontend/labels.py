"""Security label extraction for top-level input ports."""

from __future__ import annotations

from ..errors import LabelOnNonInput, UnknownSignal
from . import ast_nodes as A


def extract_labels(ast: A.Ast, top: str, overrides=()) -> dict:
    """Labels for every input port of ``top``: in-source marks, then overrides.

    ``overrides`` is a sequence of (net, label) with label 'high' or 'low';
    an override always wins over an in-source annotation.
    """
    if top not in ast.modules:
        raise UnknownSignal(f"module {top}")
    mod = ast.modules[top]
    labels = {}
    for name, port in mod.ports.items():
        if port.direction == "input":
            labels[name] = "high" if port.high else "low"
    for name, label in overrides:
        label = label.lower()
        if label not in ("high", "low"):
            raise ValueError(f"label must be high or low, got {label!r}")
        if name not in mod.ports:
            raise UnknownSignal(name)
        if mod.ports[name].direction != "input":
            raise LabelOnNonInput(name)
        labels[name] = label
    return labels
