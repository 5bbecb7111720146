"""Bounded state-space generation, storage, and export.

States are canonical keys (normalized rendered terms, machine
configurations).  Exploration is breadth-first with per-state transition
ordering pinned by (label, target key), so the result is a pure function of
its inputs.  States at the depth limit, and states left unexpanded when the
state cap binds, are frontier states: they carry no outgoing transitions and
equivalence checks that would need their successors report horizon-limited
verdicts instead of guessing.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

from . import automata as _automata
from .semantics import REVISED, SosEngine
from .syntax import RecursiveSpec, Term, normalize


@dataclass
class ExploreLimits:
    max_depth: int
    max_states: int = 100_000

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError("max_depth must be nonnegative")
        if self.max_states < 1:
            raise ValueError("max_states must be positive")


@dataclass
class StateRec:
    id: int
    label: str
    terminating: bool
    frontier: bool
    depth: int


class Lts:
    """Finite (possibly truncated) labelled transition system."""

    def __init__(self, states, transitions, initial, truncated=False):
        self.states = list(states)
        self.transitions = list(transitions)
        self.initial = initial
        self.truncated = truncated
        self._out = None
        self._by_label = None

    def __eq__(self, other):
        return (isinstance(other, Lts)
                and self.initial == other.initial
                and self.states == other.states
                and self.transitions == other.transitions)

    def __repr__(self):
        return "Lts(%d states, %d transitions)" % (len(self.states), len(self.transitions))

    @property
    def out(self):
        """Outgoing transitions per state id, in generation order."""
        if self._out is None:
            self._out = [[] for _ in self.states]
            for src, label, dst in self.transitions:
                self._out[src].append((label, dst))
        return self._out

    def state_by_label(self, label):
        if self._by_label is None:
            self._by_label = {s.label: s.id for s in self.states}
        return self._by_label[label]

    @property
    def has_frontier(self):
        return any(s.frontier for s in self.states)


class Stepper:
    """Adapter interface used by the generic explorer."""

    def initial(self):
        raise NotImplementedError

    def key(self, state):
        raise NotImplementedError

    def step(self, state):
        raise NotImplementedError

    def terminates(self, state):
        raise NotImplementedError


class TermStepper(Stepper):
    def __init__(self, root, spec, mode):
        self.engine = SosEngine(spec, mode)
        self.root = normalize(root)

    def initial(self):
        return self.root

    def key(self, state):
        return state.key

    def step(self, state):
        return [(t.label.key, t.target) for t in self.engine.step(state)]

    def terminates(self, state):
        return self.engine.terminates(state)


def explore_states(stepper, limits):
    """Deterministic BFS closure up to `limits`.

    A state is expanded only if its depth is below max_depth and expanding it
    cannot push the state count past max_states; otherwise it stays frontier.
    """
    init = stepper.initial()
    states = [StateRec(0, stepper.key(init), bool(stepper.terminates(init)), True, 0)]
    ids = {states[0].label: 0}
    objs = [init]
    transitions = []
    truncated = False
    queue = deque([0])
    while queue:
        sid = queue.popleft()
        rec = states[sid]
        if rec.depth >= limits.max_depth or truncated:
            continue
        succs = sorted(((label, obj, stepper.key(obj)) for label, obj in stepper.step(objs[sid])),
                       key=lambda x: (x[0], x[2]))
        fresh = {key for _, _, key in succs if key not in ids}
        if len(states) + len(fresh) > limits.max_states:
            truncated = True
            continue
        rec.frontier = False
        for label, obj, key in succs:
            dst = ids.get(key)
            if dst is None:
                dst = len(states)
                ids[key] = dst
                objs.append(obj)
                states.append(StateRec(dst, key, bool(stepper.terminates(obj)), True,
                                       rec.depth + 1))
                queue.append(dst)
            transitions.append((sid, label, dst))
    return Lts(states, transitions, 0, truncated=truncated)


def explore(source, context=None, mode=REVISED, limits=None):
    """Bounded LTS of a process term, PDA configuration, or RTM configuration."""
    if limits is None:
        raise ValueError("explore requires ExploreLimits")
    if isinstance(source, Term):
        if context is not None and not isinstance(context, RecursiveSpec):
            raise TypeError("context for a term must be a RecursiveSpec")
        stepper = TermStepper(source, context, mode)
    elif isinstance(source, _automata.PdaConfig):
        stepper = _automata.PdaStepper(context, source)
    elif isinstance(source, _automata.RtmConfig):
        stepper = _automata.RtmStepper(context, source)
    else:
        raise TypeError("cannot explore %r" % type(source).__name__)
    return explore_states(stepper, limits)


def branching_degree(lts, state_id):
    """Outgoing-transition count of a non-frontier state."""
    rec = lts.states[state_id]
    if rec.frontier:
        raise ValueError("state %d is a frontier state; its degree is unknown" % state_id)
    return len(lts.out[state_id])


def export(lts, fmt):
    """Serialize to canonical JSON or Graphviz DOT bytes."""
    if fmt == "json":
        doc = {
            "initial": lts.initial,
            "states": [
                {"id": s.id, "label": s.label, "terminating": s.terminating,
                 "frontier": s.frontier, "depth": s.depth}
                for s in lts.states
            ],
            "transitions": [
                {"src": src, "label": label, "dst": dst}
                for src, label, dst in lts.transitions
            ],
        }
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    if fmt == "dot":
        return _to_dot(lts).encode("utf-8")
    raise ValueError("unknown export format: %r" % fmt)


def _quote(s):
    return '"%s"' % s.replace("\\", "\\\\").replace('"', '\\"')


def _to_dot(lts):
    lines = ["digraph lts {", "  rankdir=LR;", '  __init [shape=point, label=""];']
    for s in lts.states:
        attrs = ["label=%s" % _quote(s.label)]
        attrs.append("shape=%s" % ("doublecircle" if s.terminating else "circle"))
        if s.frontier:
            attrs.append("style=dashed")
        lines.append("  n%d [%s];" % (s.id, ", ".join(attrs)))
    lines.append("  __init -> n%d;" % lts.initial)
    for src, label, dst in lts.transitions:
        lines.append("  n%d -> n%d [label=%s];" % (src, dst, _quote(label)))
    lines.append("}")
    return "\n".join(lines) + "\n"


def import_lts(data):
    """Inverse of export(..., "json")."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    doc = json.loads(data)
    states = [StateRec(s["id"], s["label"], s["terminating"], s["frontier"], s["depth"])
              for s in doc["states"]]
    transitions = [(t["src"], t["label"], t["dst"]) for t in doc["transitions"]]
    return Lts(states, transitions, doc["initial"])
