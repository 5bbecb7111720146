"""Structural operational semantics: termination and one-step transitions.

Two interpretations of sequential composition share one syntax tree.  In
standard mode a terminating first component lets the second component's
transitions show through; in revised mode that rule carries the negative
premise "the first component has no transition".
"""

from __future__ import annotations

from typing import NamedTuple

from .syntax import (
    ALT, DEADLOCK, NAME, NEST, PAR, PREFIX, SEQ, SKIP, STAR, TAU,
    EMPTY_SPEC, SpecError, Term, check_guardedness, normalize, par, prefix, seq,
)

STANDARD = "standard"
REVISED = "revised"
MODES = (STANDARD, REVISED)


class UnguardedSpecError(SpecError):
    def __init__(self, offending):
        self.offending = list(offending)
        super().__init__("unguarded: %s" % ", ".join(self.offending))


class Transition(NamedTuple):
    label: object   # Action
    target: Term


def _is_blocked(action, channels):
    # Enforced-communication filter: solo c?d / c!d moves on a declared
    # channel never escape a parallel composition.
    return action.kind == "comm" and action.channel in channels


class SosEngine:
    """Transition derivation for one (spec, mode) pair, with caching.

    Rejects specs that fail the guardedness check unless `check_guarded` is
    disabled (internal generators only); a dynamic unfolding guard still
    catches genuinely circular derivations.
    """

    def __init__(self, spec=None, mode=REVISED, normalize_targets=True, check_guarded=True):
        if mode not in MODES:
            raise SpecError("unknown semantics mode: %r" % mode)
        self.spec = spec if spec is not None else EMPTY_SPEC
        self.mode = mode
        self.normalize_targets = normalize_targets
        if check_guarded and len(self.spec):
            report = check_guardedness(self.spec)
            if not report.guarded:
                raise UnguardedSpecError(report.offending)
        self._down_names = self._solve_name_termination()
        self._step_cache = {}
        self._can_step_cache = {}
        self._active = set()

    # -- termination (the down predicate) -----------------------------------

    def _solve_name_termination(self):
        # Least fixed point over the equations: a name terminates only if a
        # finite derivation says so, which Kleene iteration from all-false
        # computes even for mutually recursive right-hand sides.
        down = {n: False for n in self.spec.equations}
        changed = True
        while changed:
            changed = False
            for n, rhs in self.spec.equations.items():
                if not down[n] and self._down(rhs, down):
                    down[n] = True
                    changed = True
        return down

    def _down(self, t, names):
        k = t.kind
        if k == SKIP or k == STAR:
            return True
        if k == DEADLOCK or k == PREFIX:
            return False
        if k == ALT:
            return self._down(t.left, names) or self._down(t.right, names)
        if k == SEQ or k == PAR:
            return self._down(t.left, names) and self._down(t.right, names)
        if k == NEST:
            return self._down(t.right, names)
        if k == NAME:
            return names[t.name]
        raise AssertionError(k)

    def terminates(self, t):
        return self._down(t, self._down_names)

    # -- one-step transitions ------------------------------------------------

    def step(self, t):
        """The duplicate-free set of derivable transitions, sorted by
        (label, target key)."""
        cached = self._step_cache.get(t.key)
        if cached is not None:
            return cached
        out = {}
        self._derive(t, out)
        result = tuple(Transition(a, u) for (_, _), (a, u) in
                       sorted(out.items(), key=lambda kv: kv[0]))
        self._step_cache[t.key] = result
        return result

    def _add(self, out, action, target):
        if self.normalize_targets:
            target = normalize(target)
        out[(action.key, target.key)] = (action, target)

    def _derive(self, t, out):
        k = t.kind
        if k == DEADLOCK or k == SKIP:
            return
        if k == PREFIX:
            self._add(out, t.action, t.left)
            return
        if k == ALT:
            self._derive(t.left, out)
            self._derive(t.right, out)
            return
        if k == SEQ:
            for a, u in self.step(t.left):
                self._add(out, a, seq(u, t.right))
            if self.terminates(t.left):
                if self.mode == STANDARD or not self.can_step(t.left):
                    for a, u in self.step(t.right):
                        self._add(out, a, u)
            return
        if k == STAR:
            for a, u in self.step(t.left):
                self._add(out, a, seq(u, t))
            return
        if k == NEST:
            for a, u in self.step(t.left):
                self._add(out, a, seq(u, seq(t, t.left)))
            for a, u in self.step(t.right):
                self._add(out, a, u)
            return
        if k == PAR:
            left_steps = self.step(t.left)
            right_steps = self.step(t.right)
            for a, u in left_steps:
                if not _is_blocked(a, t.channels):
                    self._add(out, a, par(t.channels, u, t.right))
            for a, u in right_steps:
                if not _is_blocked(a, t.channels):
                    self._add(out, a, par(t.channels, t.left, u))
            for a, u in left_steps:
                if a.kind != "comm" or a.channel not in t.channels:
                    continue
                other = "!" if a.polarity == "?" else "?"
                for b, v in right_steps:
                    if (b.kind == "comm" and b.channel == a.channel
                            and b.polarity == other and b.datum == a.datum):
                        self._add(out, TAU, par(t.channels, u, v))
            return
        if k == NAME:
            if t.name in self._active:
                raise UnguardedSpecError([t.name])
            self._active.add(t.name)
            try:
                self._derive(self.spec.rhs(t.name), out)
            finally:
                self._active.discard(t.name)
            return
        raise AssertionError(k)

    def can_step(self, t):
        """Whether any transition is derivable; equals step(t) != ()."""
        cached = self._can_step_cache.get(t.key)
        if cached is not None:
            return cached
        result = self._can_step(t)
        self._can_step_cache[t.key] = result
        return result

    def _can_step(self, t):
        k = t.kind
        if k == DEADLOCK or k == SKIP:
            return False
        if k == PREFIX:
            return True
        if k == ALT or k == NEST:
            return self.can_step(t.left) or self.can_step(t.right)
        if k == STAR:
            return self.can_step(t.left)
        if k == SEQ:
            # In revised mode the second disjunct only matters when the left
            # component cannot step, so one formula serves both modes.
            return self.can_step(t.left) or (
                self.terminates(t.left) and self.can_step(t.right))
        if k == PAR:
            return bool(self.step(t))
        if k == NAME:
            if t.name in self._active:
                raise UnguardedSpecError([t.name])
            self._active.add(t.name)
            try:
                return self._can_step(self.spec.rhs(t.name))
            finally:
                self._active.discard(t.name)
        raise AssertionError(k)


def terminates(term, spec=None):
    return SosEngine(spec).terminates(term)


def step(term, spec=None, mode=REVISED):
    return SosEngine(spec, mode).step(term)


def can_step(term, spec=None, mode=REVISED):
    return SosEngine(spec, mode).can_step(term)
