"""QModel execution: probabilities, posterior Bayes vulnerability, leakage.

Per channel, the joint distribution over (output, observable inputs,
secret-carrying inputs) is built under the independence assumption; the
channel's posterior Bayes vulnerability (PBV) with observable low inputs
is the sum over observable configurations of the best single guess.
Leakage cascades by summing incoming per-secret-bit leakage over channel
inputs and scaling by the channel PBV.  Registers pass probabilities and
leakage through unchanged; sequential cycles are resolved by an
elementwise-max fixpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .bitgraph import BitRef
from .channelizer import Channel, ChannelGraph
from .errors import ArityMismatch, NonConvergentFixpoint

PROB_TOL = 1e-12
LEAK_TOL = 1e-9
MAX_FIXPOINT_ITERS = 100


def source_leakage(p1: float) -> float:
    """Min-entropy of a bit: the leakage it injects at its source."""
    m = max(p1, 1.0 - p1)
    if m >= 1.0:
        return 0.0
    return -math.log2(m)


@dataclass
class JointTable:
    # (output value(s), low assignment, high assignment) -> probability mass
    entries: dict

    def total(self):
        return sum(self.entries.values())


@dataclass
class ProbAnnotatedGraph:
    graph: ChannelGraph
    chan_prob: dict = field(default_factory=dict)  # cid -> p1
    chan_pbv: dict = field(default_factory=dict)  # cid -> V1
    chan_leak: dict = field(default_factory=dict)  # cid -> {sid: bits}
    chan_tainted: dict = field(default_factory=dict)  # cid -> bool
    reg_prob: dict = field(default_factory=dict)  # register BitRef -> p1
    reg_leak: dict = field(default_factory=dict)  # register BitRef -> {sid: bits}
    secrets: list = field(default_factory=list)  # (sid, net, bit, p_source)


# --------------------------------------------------------------------------
# Per-channel computations

def _effective_probs(channel: Channel, probs, tainted):
    if len(probs) != len(channel.inputs):
        raise ArityMismatch(
            f"channel {channel.cid} takes {len(channel.inputs)} probabilities")
    if channel.uniform_high_override:
        return [0.5 if t else p for p, t in zip(probs, tainted)]
    return list(probs)


def _default_taint(channel: Channel):
    return [ci.kind == "high" for ci in channel.inputs]


def joint_distribution(channel: Channel, probs, tainted=None) -> JointTable:
    """J(o, l, h) for a table channel under input independence."""
    if channel.table is None:
        raise ArityMismatch("joint tables are materialized for table channels only")
    tainted = list(tainted) if tainted is not None else _default_taint(channel)
    probs = _effective_probs(channel, probs, tainted)
    k = len(channel.inputs)
    entries = {}
    for assignment in range(1 << k):
        mass = 1.0
        l_part = []
        h_part = []
        for i in range(k):
            bit = (assignment >> i) & 1
            mass *= probs[i] if bit else 1.0 - probs[i]
            (h_part if tainted[i] else l_part).append(bit)
        if mass == 0.0:
            continue
        o = channel.table[assignment]
        key = (o, tuple(l_part), tuple(h_part))
        entries[key] = entries.get(key, 0.0) + mass
    return JointTable(entries)


def channel_pbv(channel: Channel, probs, tainted=None) -> float:
    """V1 with observable lows: sum over (o, l) of the best h guess."""
    tainted = list(tainted) if tainted is not None else _default_taint(channel)
    if not any(tainted):
        return 1.0
    if channel.macro is not None:
        return _macro_pbv(channel, probs, tainted)
    joint = joint_distribution(channel, probs, tainted)
    best = {}
    for (o, l_part, _h), mass in joint.entries.items():
        key = (o, l_part)
        if mass > best.get(key, 0.0):
            best[key] = mass
    return sum(best.values())


def channel_output_probability(channel: Channel, probs) -> float:
    """P(output = 1) under input independence; macros use closed forms."""
    if channel.table is not None:
        if len(probs) != len(channel.inputs):
            raise ArityMismatch(
                f"channel {channel.cid} takes {len(channel.inputs)} probabilities")
        k = len(channel.inputs)
        total = 0.0
        for assignment in range(1 << k):
            if not channel.table[assignment]:
                continue
            mass = 1.0
            for i in range(k):
                bit = (assignment >> i) & 1
                mass *= probs[i] if bit else 1.0 - probs[i]
            total += mass
        return total
    return _macro_prob(channel, probs)


def _operand_probs(macro, probs, override_tainted=None, tainted=None):
    def bit_prob(src):
        if src[0] == "const":
            return float(src[1])
        p = probs[src[1]]
        if override_tainted is not None and tainted[src[1]]:
            p = 0.5
        return p
    a = [bit_prob(s) for s in macro.a_bits]
    b = [bit_prob(s) for s in macro.b_bits]
    return a, b


def _macro_prob(channel: Channel, probs) -> float:
    m = channel.macro
    pa, pb = _operand_probs(m, probs)
    if m.op == "EQM":
        p = 1.0
        for x, y in zip(pa, pb):
            p *= x * y + (1.0 - x) * (1.0 - y)
        return p
    if m.op == "LTM":
        # MSB first: P(a<b) = sum_i P(equal above i) * P(a_i=0, b_i=1)
        p = 0.0
        eq_above = 1.0
        for i in range(m.width - 1, -1, -1):
            p += eq_above * (1.0 - pa[i]) * pb[i]
            eq_above *= pa[i] * pb[i] + (1.0 - pa[i]) * (1.0 - pb[i])
        return p
    # ADDM / SUBM: marginal of one sum bit via carry recursion
    if m.op == "SUBM":
        pb = [1.0 - y for y in pb]
        pc = 1.0
    else:
        pc = 0.0
    for k in range(m.out_bit + 1):
        pxor = pa[k] * (1.0 - pb[k]) + (1.0 - pa[k]) * pb[k]
        psum = pxor * (1.0 - pc) + (1.0 - pxor) * pc
        pc = pa[k] * pb[k] + pxor * pc
    return psum


def _side_tainted(bits, tainted):
    return any(src[0] == "in" and tainted[src[1]] for src in bits)


def _macro_pbv(channel: Channel, probs, tainted) -> float:
    """Closed forms under uniformly distributed secret operands.

    ADD/SUB channels expose the whole sum vector, which is a bijection of
    the secret operand for every fixed observable value, hence PBV 1.
    """
    m = channel.macro
    w = m.width
    a_t = _side_tainted(m.a_bits, tainted)
    b_t = _side_tainted(m.b_bits, tainted)
    if not (a_t or b_t):
        return 1.0
    if m.op in ("ADDM", "SUBM"):
        return 1.0
    if m.op == "EQM":
        return 2.0 ** (1 - w)
    # LTM, a < b: one outcome class is empty at the observable boundary
    pa, pb = _operand_probs(m, probs)
    if a_t and not b_t:
        p_empty = 1.0
        for y in pb:
            p_empty *= 1.0 - y  # b == 0: the a<b class vanishes
        return 2.0 ** (1 - w) - 2.0 ** (-w) * p_empty
    if b_t and not a_t:
        p_empty = 1.0
        for x in pa:
            p_empty *= x  # a == all-ones: the a<b class vanishes
        return 2.0 ** (1 - w) - 2.0 ** (-w) * p_empty
    return 2.0 ** (1 - w)


# --------------------------------------------------------------------------
# Design-level propagation

class _Propagator:
    def __init__(self, graph: ChannelGraph, design, input_probs):
        self.graph = graph
        self.design = design
        self.secrets = [(sid, net, bit, input_probs.get((net, bit), 0.5))
                        for net, bit, sid in design.high_bits()]
        self.input_probs = input_probs
        self.registers = sorted(
            {r for r in graph.root_channel if r.role == "register"},
            key=lambda r: (r.net, r.bit))
        self.reg_tainted = self._taint_fixpoint()

    def _leaf_prob(self, ref: BitRef, reg_prob):
        if ref.role == "register":
            return reg_prob.get(ref, 0.5)
        return self.input_probs.get((ref.net, ref.bit), 0.5)

    def _input_prob(self, ci, chan_prob, reg_prob):
        if ci.kind == "derived":
            return chan_prob[ci.ref]
        return self._leaf_prob(ci.ref, reg_prob)

    def _input_tainted(self, ci, chan_tainted):
        if ci.kind == "high":
            return True
        if ci.kind == "derived":
            return chan_tainted[ci.ref]
        if ci.kind == "register":
            return self.reg_tainted.get(self._reg_key(ci.ref), False)
        return False

    @staticmethod
    def _reg_key(ref):
        return (ref.net, ref.bit)

    def _taint_fixpoint(self):
        tainted = {(r.net, r.bit): False for r in self.registers}
        self.reg_tainted = tainted
        for _ in range(len(self.registers) + 1):
            chan_tainted = {}
            changed = False
            for ch in self.graph.channels:
                chan_tainted[ch.cid] = any(
                    self._input_tainted(ci, chan_tainted) for ci in ch.inputs)
            for reg in self.registers:
                t = chan_tainted[self.graph.root_channel[reg]]
                if t and not tainted[(reg.net, reg.bit)]:
                    tainted[(reg.net, reg.bit)] = True
                    changed = True
            if not changed:
                break
        self.chan_tainted = chan_tainted
        return tainted

    def probabilities(self):
        reg_prob = {r: 0.5 for r in self.registers}
        chan_prob = {}
        for _ in range(MAX_FIXPOINT_ITERS):
            chan_prob = {}
            for ch in self.graph.channels:
                probs = [self._input_prob(ci, chan_prob, reg_prob)
                         for ci in ch.inputs]
                chan_prob[ch.cid] = channel_output_probability(ch, probs)
            delta = 0.0
            for reg in self.registers:
                new = chan_prob[self.graph.root_channel[reg]]
                delta = max(delta, abs(new - reg_prob[reg]))
                reg_prob[reg] = new
            if delta < PROB_TOL:
                break
        return chan_prob, reg_prob

    def vulnerabilities(self, chan_prob, reg_prob):
        chan_pbv = {}
        for ch in self.graph.channels:
            probs = [self._input_prob(ci, chan_prob, reg_prob) for ci in ch.inputs]
            tainted = [self._input_tainted(ci, self.chan_tainted) for ci in ch.inputs]
            chan_pbv[ch.cid] = channel_pbv(ch, probs, tainted)
        return chan_pbv

    def leakage(self, chan_pbv, deps=None):
        minent = {sid: source_leakage(p) for sid, _n, _b, p in self.secrets}
        source = {}
        for sid, net, bit, p in self.secrets:
            source[(net, bit)] = {sid: minent[sid]} if minent[sid] > 0.0 else {}

        reg_leak = {r: {} for r in self.registers}
        chan_leak = {}
        converged = False
        for _ in range(MAX_FIXPOINT_ITERS):
            chan_leak = {}
            for ch in self.graph.channels:
                incoming = {}
                for ci in ch.inputs:
                    if ci.kind == "high":
                        vec = source.get((ci.ref.net, ci.ref.bit), {})
                    elif ci.kind == "register":
                        vec = reg_leak.get(BitRef(ci.ref.net, ci.ref.bit, "register"), {})
                    elif ci.kind == "derived":
                        vec = chan_leak[ci.ref]
                    else:
                        vec = {}
                    for sid, val in vec.items():
                        incoming[sid] = incoming.get(sid, 0.0) + val
                pbv = chan_pbv[ch.cid]
                chan_leak[ch.cid] = {sid: v * pbv for sid, v in incoming.items()}
            delta = 0.0
            for reg in self.registers:
                est = chan_leak[self.graph.root_channel[reg]]
                cur = reg_leak[reg]
                for sid, val in est.items():
                    val = min(val, minent[sid])  # bounded: guarantees convergence
                    if val > cur.get(sid, 0.0):
                        delta = max(delta, val - cur.get(sid, 0.0))
                        cur[sid] = val
            if delta < LEAK_TOL:
                converged = True
                break
        if not converged:
            cyclic = sorted({r for scc in (deps.cycles if deps else [])
                             for r in scc}, key=str) or self.registers
            raise NonConvergentFixpoint(cyclic)
        return chan_leak, reg_leak, minent


def propagate(graph: ChannelGraph, design, input_probs=None, deps=None) -> ProbAnnotatedGraph:
    """Full annotation pass: probabilities, PBVs, leakage vectors."""
    input_probs = input_probs or {}
    prop = _Propagator(graph, design, input_probs)
    chan_prob, reg_prob = prop.probabilities()
    chan_pbv = prop.vulnerabilities(chan_prob, reg_prob)
    chan_leak, reg_leak, _ = prop.leakage(chan_pbv, deps)
    return ProbAnnotatedGraph(
        graph=graph, chan_prob=chan_prob, chan_pbv=chan_pbv,
        chan_leak=chan_leak, chan_tainted=prop.chan_tainted,
        reg_prob=reg_prob, reg_leak=reg_leak, secrets=prop.secrets)


def output_contributions(annotated: ProbAnnotatedGraph, design):
    """Per top-output bit: its leakage vector. [(net, bit, {sid: bits})]"""
    graph = annotated.graph
    out = []
    seq = {(r.net, r.bit) for r in annotated.reg_prob}
    for name, fn in sorted(design.nets.items()):
        if fn.kind != "output":
            continue
        for bit in range(fn.width):
            if (name, bit) in seq:
                vec = annotated.reg_leak.get(BitRef(name, bit, "register"), {})
            else:
                cid = graph.root_channel.get(BitRef(name, bit, "top-output"))
                vec = annotated.chan_leak.get(cid, {}) if cid is not None else {}
            out.append((name, bit, vec))
    return out


def accumulate_totals(annotated: ProbAnnotatedGraph, design, cap=True) -> dict:
    """Design totals per secret bit id, optionally capped at source min-entropy."""
    totals = {sid: 0.0 for sid, _n, _b, _p in annotated.secrets}
    for _net, _bit, vec in output_contributions(annotated, design):
        for sid, val in vec.items():
            totals[sid] = totals.get(sid, 0.0) + val
    if cap:
        minent = {sid: source_leakage(p) for sid, _n, _b, p in annotated.secrets}
        totals = {sid: min(v, minent.get(sid, v)) for sid, v in totals.items()}
    return totals
