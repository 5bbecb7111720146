"""Pushdown automata, reactive Turing machines, and the GNF compiler.

The compiler annotates PDA states with the set of names currently on the
stack and marks the deepest stack occurrence of each name, so that a
configuration can decide termination from its state alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

from .syntax import GnfSpec, SpecError, parse_action

BLANK = "_"

# A stack symbol is (name, marked); marked symbols render as "X!".


def sym_str(sym):
    name, marked = sym
    return name + "!" if marked else name


def parse_sym(text):
    if text.endswith("!"):
        return (text[:-1], True)
    return (text, False)


def state_str(state):
    return "{%s}" % ",".join(sorted(state))


def stack_str(stack):
    return " ".join(sym_str(s) for s in stack) if stack else "eps"


class PdaTransition(NamedTuple):
    src: frozenset
    top: tuple
    label: str
    push: tuple
    dst: frozenset


@dataclass
class Pda:
    """Pushdown automaton as a 7-tuple; write s -a[d/delta]-> t for
    (s, d, a, delta, t)."""

    states: list
    inputs: list
    stack_symbols: list
    transitions: list
    initial: frozenset
    initial_sym: tuple
    accepting: set

    def __post_init__(self):
        self._index = {}
        for tr in self.transitions:
            self._index.setdefault((tr.src, tr.top), []).append(tr)

    def moves(self, state, top):
        return self._index.get((state, top), [])


class PdaConfig(NamedTuple):
    state: frozenset
    stack: tuple

    @property
    def key(self):
        return "(%s, %s)" % (state_str(self.state), stack_str(self.stack))


def initial_config(pda):
    return PdaConfig(pda.initial, (pda.initial_sym,))


# -- the suffset / delta / merge construction --------------------------------

def suffset(xi, i):
    """Names in the suffix of xi that starts after position i (1-based)."""
    if i < 0 or i > len(xi):
        raise IndexError("suffset index %d out of range for |xi| = %d" % (i, len(xi)))
    return frozenset(xi[i:])


def push_string(d_set, top, xi):
    """The stack string pushed when `top` is rewritten by tail `xi` in state
    `d_set`: position k is marked iff its name is absent from the remaining
    context and the suffix after k."""
    name, marked = top
    base = (frozenset(d_set) - {name}) if marked else frozenset(d_set)
    out = []
    for k in range(1, len(xi) + 1):
        x_k = xi[k - 1]
        out.append((x_k, x_k not in base | suffset(xi, k)))
    return tuple(out)


def next_state(d_set, top, xi):
    """State annotation after the rewrite: drop a marked top's name, then add
    every name of the tail."""
    name, marked = top
    base = (frozenset(d_set) - {name}) if marked else frozenset(d_set)
    return base | suffset(xi, 0)


def stack_of(xi):
    """Stack encoding of a name sequence: the deepest occurrence of each name
    is the marked one."""
    return tuple((x, x not in suffset(xi, k)) for k, x in enumerate(xi, start=1))


def _sorted_states(states):
    return sorted(states, key=lambda d: (len(d), sorted(d)))


def _reachable_tops(gnf, root):
    # Saturate the (head name, tail name-set) abstraction of reachable
    # configurations.  Pushes are exact; pops over-approximate the tail set,
    # which can only add states, never lose reachable ones.
    items = {(root, frozenset())}
    queue = [(root, frozenset())]
    states = {frozenset({root})}
    while queue:
        head, tail = queue.pop()
        for _, eta in gnf.summands[head]:
            if eta:
                nxt = (eta[0], frozenset(eta[1:]) | tail)
                if nxt not in items:
                    items.add(nxt)
                    queue.append(nxt)
                states.add(frozenset({nxt[0]}) | nxt[1])
            elif not tail:
                states.add(frozenset())
            else:
                for y in tail:
                    for rest in (tail - {y}, tail):
                        nxt = (y, rest)
                        if nxt not in items:
                            items.add(nxt)
                            queue.append(nxt)
                        states.add(frozenset({y}) | rest)
    pairs = set()
    for head, tail in items:
        pairs.add((frozenset({head}) | tail, (head, head not in tail)))
    return pairs, states


def compile_pda(gnf, root, reachable_only=True):
    """Compile a GNF specification into a PDA that simulates the process
    rooted at `root`.  By default only (state, top-symbol) pairs reachable
    from the initial configuration contribute transitions."""
    if root not in gnf.names:
        raise SpecError("undefined root name %s" % root)
    order = list(gnf.names)
    inputs = [a.key for a in gnf.actions()]
    stack_symbols = [(n, False) for n in order] + [(n, True) for n in order]

    if reachable_only:
        pairs, states = _reachable_tops(gnf, root)
        pairs = sorted(pairs, key=lambda p: (sorted(p[0]), p[1][0], p[1][1]))
    else:
        subsets = []
        for mask in range(1 << len(order)):
            subsets.append(frozenset(n for i, n in enumerate(order) if mask >> i & 1))
        states = set(subsets)
        pairs = [(d, (n, m)) for d in _sorted_states(subsets)
                 for n in order for m in (False, True)]

    transitions = []
    for d_set, top in pairs:
        for action, eta in gnf.summands[top[0]]:
            dst = next_state(d_set, top, eta)
            transitions.append(PdaTransition(d_set, top, action.key,
                                             push_string(d_set, top, eta), dst))
            states.add(dst)

    state_list = _sorted_states(states)
    accepting = {d for d in state_list if all(gnf.may_terminate[n] for n in d)}
    return Pda(states=state_list, inputs=inputs, stack_symbols=stack_symbols,
               transitions=transitions, initial=frozenset({root}),
               initial_sym=(root, True), accepting=accepting)


def pda_step(pda, cfg):
    """One-step moves of a configuration: rewrite the top stack symbol; an
    empty stack admits no moves."""
    if not cfg.stack:
        return []
    top, rest = cfg.stack[0], cfg.stack[1:]
    return [(tr.label, PdaConfig(tr.dst, tr.push + rest)) for tr in pda.moves(cfg.state, top)]


def pda_terminates(pda, cfg):
    return cfg.state in pda.accepting


# -- reactive Turing machines -------------------------------------------------

class RtmTransition(NamedTuple):
    src: str
    read: str
    label: str
    write: str
    move: str
    dst: str


@dataclass
class Rtm:
    """Reactive Turing machine; write s -a[d/e]M-> t for (s, d, a, e, M, t)."""

    states: list
    transitions: list
    initial: str
    final: set
    data_symbols: list

    def __post_init__(self):
        for tr in self.transitions:
            if tr.move not in ("L", "R"):
                raise SpecError("move must be 'L' or 'R'")
        self._index = {}
        for tr in self.transitions:
            self._index.setdefault((tr.src, tr.read), []).append(tr)

    @property
    def tape_alphabet(self):
        return list(self.data_symbols) + [BLANK]

    def moves(self, state, read):
        return self._index.get((state, read), [])


class RtmConfig(NamedTuple):
    state: str
    left: tuple
    head: str
    right: tuple

    @property
    def key(self):
        cells = list(self.left) + ["^" + self.head] + list(self.right)
        return "(%s, %s)" % (self.state, " ".join(cells))


def trim_tape(left, head, right):
    """Drop unmarked blanks at both tape ends; the marked cell always stays."""
    left = list(left)
    right = list(right)
    while left and left[0] == BLANK:
        left.pop(0)
    while right and right[-1] == BLANK:
        right.pop()
    return tuple(left), head, tuple(right)


def initial_rtm_config(rtm):
    return RtmConfig(rtm.initial, (), BLANK, ())


def rtm_step(rtm, cfg):
    """Enabled machine moves with head movement and blank extension at the
    tape ends; resulting tapes are canonically trimmed."""
    out = []
    for tr in rtm.moves(cfg.state, cfg.head):
        if tr.move == "L":
            if cfg.left:
                left, head, right = cfg.left[:-1], cfg.left[-1], (tr.write,) + cfg.right
            else:
                left, head, right = (), BLANK, (tr.write,) + cfg.right
        else:
            if cfg.right:
                left, head, right = cfg.left + (tr.write,), cfg.right[0], cfg.right[1:]
            else:
                left, head, right = cfg.left + (tr.write,), BLANK, ()
        out.append((tr.label, RtmConfig(tr.dst, *trim_tape(left, head, right))))
    return out


def rtm_terminates(rtm, cfg):
    return cfg.state in rtm.final


# -- steppers for the explorer ------------------------------------------------

class PdaStepper:
    def __init__(self, pda, config=None):
        self.pda = pda
        self.config = config if config is not None else initial_config(pda)

    def initial(self):
        return self.config

    def key(self, state):
        return state.key

    def step(self, state):
        return pda_step(self.pda, state)

    def terminates(self, state):
        return pda_terminates(self.pda, state)


class RtmStepper:
    def __init__(self, rtm, config=None):
        self.rtm = rtm
        self.config = config if config is not None else initial_rtm_config(rtm)

    def initial(self):
        return self.config

    def key(self, state):
        return state.key

    def step(self, state):
        return rtm_step(self.rtm, state)

    def terminates(self, state):
        return rtm_terminates(self.rtm, state)


# -- serialization -------------------------------------------------------------

def pda_to_json(pda):
    doc = {
        "states": [state_str(d) for d in _sorted_states(pda.states)],
        "inputs": list(pda.inputs),
        "stackSymbols": [sym_str(s) for s in pda.stack_symbols],
        "transitions": [
            {"from": state_str(tr.src), "top": sym_str(tr.top), "label": tr.label,
             "push": [sym_str(s) for s in tr.push], "to": state_str(tr.dst)}
            for tr in pda.transitions
        ],
        "initial": state_str(pda.initial),
        "initialStack": sym_str(pda.initial_sym),
        "accepting": [state_str(d) for d in _sorted_states(pda.accepting)],
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def _parse_state(text):
    inner = text.strip()[1:-1]
    return frozenset(n for n in inner.split(",") if n)


def pda_from_json(data):
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    doc = json.loads(data)
    transitions = [PdaTransition(_parse_state(t["from"]), parse_sym(t["top"]), t["label"],
                                 tuple(parse_sym(s) for s in t["push"]), _parse_state(t["to"]))
                   for t in doc["transitions"]]
    return Pda(states=[_parse_state(s) for s in doc["states"]],
               inputs=list(doc["inputs"]),
               stack_symbols=[parse_sym(s) for s in doc["stackSymbols"]],
               transitions=transitions,
               initial=_parse_state(doc["initial"]),
               initial_sym=parse_sym(doc["initialStack"]),
               accepting={_parse_state(s) for s in doc["accepting"]})


def rtm_to_json(rtm):
    doc = {
        "states": list(rtm.states),
        "transitions": [
            {"from": tr.src, "read": tr.read, "label": tr.label,
             "write": tr.write, "move": tr.move, "to": tr.dst}
            for tr in rtm.transitions
        ],
        "initial": rtm.initial,
        "final": sorted(rtm.final),
        "tapeAlphabet": rtm.tape_alphabet,
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def rtm_from_json(data):
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    doc = json.loads(data)
    transitions = [RtmTransition(t["from"], t["read"], t["label"], t["write"],
                                 t["move"], t["to"])
                   for t in doc["transitions"]]
    data_symbols = [s for s in doc["tapeAlphabet"] if s != BLANK]
    return Rtm(states=list(doc["states"]), transitions=transitions,
               initial=doc["initial"], final=set(doc["final"]),
               data_symbols=data_symbols)


# parse_action is re-exported for label round-trips in relation files.
__all__ = [
    "BLANK", "Pda", "PdaConfig", "PdaTransition", "Rtm", "RtmConfig", "RtmTransition",
    "compile_pda", "initial_config", "initial_rtm_config", "next_state", "parse_action",
    "pda_from_json", "pda_step", "pda_terminates", "pda_to_json", "push_string",
    "rtm_from_json", "rtm_step", "rtm_terminates", "rtm_to_json", "stack_of",
    "state_str", "stack_str", "suffset", "sym_str", "trim_tape",
    "PdaStepper", "RtmStepper",
]
