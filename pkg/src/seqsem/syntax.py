"""Process terms: abstract syntax, concrete syntax, well-formedness.

Concrete grammar (ASCII):

    spec    := (IDENT "=" term NEWLINE)+        # optional single bare term line = root
    term    := alt
    alt     := seq ("+" seq)*
    seq     := factor (";" factor)*
    factor  := action "." factor | atom ("*")? ("#" factor)?
    atom    := "0" | "1" | IDENT | "(" term ")"
             | "[" term "||" term "]" "{" IDENT ("," IDENT)* "}"
    action  := "tau" | IDENT | IDENT "?" IDENT | IDENT "!" IDENT

Names are [A-Za-z][A-Za-z0-9_]*.  "tau" is reserved for the internal
action.  Prefix binds a single following factor, ";" binds tighter
than "+", "*" and "#" apply to atoms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class SpecError(ValueError):
    """Base class for specification problems."""


class ParseError(SpecError):
    def __init__(self, message, line, col):
        super().__init__("%s (line %d, column %d)" % (message, line, col))
        self.line = line
        self.col = col


class UndefinedNameError(SpecError):
    pass


class DuplicateEquationError(SpecError):
    pass


class NotInGnfError(SpecError):
    pass


# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------

SEND = "!"
RECEIVE = "?"

_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class Action:
    """An action label: the internal action, a plain action, or a
    data-carrying communication action on a channel."""

    __slots__ = ("kind", "name", "channel", "polarity", "datum", "key")

    def __init__(self, kind, name=None, channel=None, polarity=None, datum=None):
        self.kind = kind
        self.name = name
        self.channel = channel
        self.polarity = polarity
        self.datum = datum
        if kind == "tau":
            self.key = "tau"
        elif kind == "plain":
            self.key = name
        else:
            self.key = "%s%s%s" % (channel, polarity, datum)

    @property
    def is_tau(self):
        return self.kind == "tau"

    def __eq__(self, other):
        return isinstance(other, Action) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return "Action(%r)" % self.key


TAU = Action("tau")


def act(name):
    if name == "tau":
        return TAU
    if not _IDENT_RE.match(name):
        raise SpecError("invalid action name: %r" % name)
    return Action("plain", name=name)


def comm(channel, polarity, datum):
    if polarity not in (SEND, RECEIVE):
        raise SpecError("polarity must be '!' or '?'")
    return Action("comm", channel=channel, polarity=polarity, datum=datum)


def send(channel, datum):
    return comm(channel, SEND, datum)


def receive(channel, datum):
    return comm(channel, RECEIVE, datum)


def parse_action(text):
    """Parse an action label from its rendered form ("tau", "a", "c?d", "c!d")."""
    if text == "tau":
        return TAU
    for pol in (RECEIVE, SEND):
        if pol in text:
            channel, datum = text.split(pol, 1)
            return comm(channel, pol, datum)
    return act(text)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

# Term kinds.
DEADLOCK = "0"
SKIP = "1"
PREFIX = "prefix"
ALT = "alt"
SEQ = "seq"
PAR = "par"
NAME = "name"
STAR = "star"
NEST = "nest"

_ATOMS = (NAME, DEADLOCK, SKIP, PAR)


class Term:
    """Immutable process term.  `key` is the canonical rendering and doubles
    as the identity used for hashing and state canonicalisation."""

    __slots__ = ("kind", "action", "left", "right", "channels", "name", "key")

    def __init__(self, kind, action=None, left=None, right=None, channels=None, name=None):
        self.kind = kind
        self.action = action
        self.left = left
        self.right = right
        self.channels = channels
        self.name = name
        self.key = _render(self)

    def __eq__(self, other):
        return isinstance(other, Term) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return "Term(%r)" % self.key

    def __str__(self):
        return self.key


def _wrap(child, bare):
    return child.key if bare else "(" + child.key + ")"


def _render(t):
    k = t.kind
    if k == DEADLOCK:
        return "0"
    if k == SKIP:
        return "1"
    if k == NAME:
        return t.name
    if k == PREFIX:
        return t.action.key + "." + _wrap(t.left, t.left.kind in (PREFIX, STAR, NEST) + _ATOMS)
    if k == ALT:
        return "%s + %s" % (_wrap(t.left, True), _wrap(t.right, t.right.kind != ALT))
    if k == SEQ:
        left = _wrap(t.left, t.left.kind not in (ALT, NEST))
        right = _wrap(t.right, t.right.kind not in (ALT, NEST, SEQ))
        return "%s ; %s" % (left, right)
    if k == STAR:
        return _wrap(t.left, t.left.kind in _ATOMS) + "*"
    if k == NEST:
        left = _wrap(t.left, t.left.kind in _ATOMS or t.left.kind == STAR)
        right = _wrap(t.right, t.right.kind in (PREFIX, STAR, NEST) + _ATOMS)
        return "%s # %s" % (left, right)
    if k == PAR:
        return "[%s || %s]{%s}" % (t.left.key, t.right.key, ",".join(sorted(t.channels)))
    raise AssertionError(k)


ZERO = Term(DEADLOCK)
ONE = Term(SKIP)


def prefix(action, body):
    return Term(PREFIX, action=action, left=body)


def alt(left, right):
    return Term(ALT, left=left, right=right)


def seq(left, right):
    return Term(SEQ, left=left, right=right)


def par(channels, left, right):
    return Term(PAR, channels=frozenset(channels), left=left, right=right)


def name_ref(name):
    if not _IDENT_RE.match(name) or name == "tau":
        raise SpecError("invalid name: %r" % name)
    return Term(NAME, name=name)


def star(body):
    return Term(STAR, left=body)


def nest(left, right):
    return Term(NEST, left=left, right=right)


def alt_of(terms):
    """Left-associated sum of `terms`; the empty sum denotes 0."""
    terms = list(terms)
    if not terms:
        return ZERO
    out = terms[0]
    for t in terms[1:]:
        out = alt(out, t)
    return out


def seq_of(terms):
    """Left-associated sequential composition; the empty sequence denotes 1."""
    terms = list(terms)
    if not terms:
        return ONE
    out = terms[0]
    for t in terms[1:]:
        out = seq(out, t)
    return out


def power(body, n):
    """The n-fold sequential power: body^0 = 1, body^(n+1) = body ; body^n."""
    out = ONE
    for _ in range(n):
        out = normalize(seq(body, out))
    return out


def normalize(t):
    """Rewrite 1;P -> P and P;1 -> P, recursively."""
    k = t.kind
    if k in (DEADLOCK, SKIP, NAME):
        return t
    if k == PREFIX:
        body = normalize(t.left)
        return t if body is t.left else prefix(t.action, body)
    if k == SEQ:
        left = normalize(t.left)
        right = normalize(t.right)
        if left.kind == SKIP:
            return right
        if right.kind == SKIP:
            return left
        if left is t.left and right is t.right:
            return t
        return seq(left, right)
    left = normalize(t.left)
    right = normalize(t.right) if t.right is not None else None
    if left is t.left and right is t.right:
        return t
    if k == ALT:
        return alt(left, right)
    if k == STAR:
        return star(left)
    if k == NEST:
        return nest(left, right)
    if k == PAR:
        return par(t.channels, left, right)
    raise AssertionError(k)


def names_in(t):
    """All names occurring in a term."""
    out = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if u.kind == NAME:
            out.add(u.name)
        if u.left is not None:
            stack.append(u.left)
        if u.right is not None:
            stack.append(u.right)
    return out


# ---------------------------------------------------------------------------
# Recursive specifications
# ---------------------------------------------------------------------------

class RecursiveSpec:
    """A finite set of defining equations name -> term.

    At most one equation per name; every name used anywhere must be defined.
    """

    def __init__(self, equations=None):
        self.equations = dict(equations or {})
        for name, rhs in self.equations.items():
            undefined = names_in(rhs) - self.equations.keys()
            if undefined:
                raise UndefinedNameError(
                    "undefined name %s in equation for %s" % (sorted(undefined)[0], name))
        self._guard_report = None

    @property
    def names(self):
        return list(self.equations)

    def rhs(self, name):
        try:
            return self.equations[name]
        except KeyError:
            raise UndefinedNameError("undefined name %s" % name) from None

    def __contains__(self, name):
        return name in self.equations

    def __len__(self):
        return len(self.equations)

    def __eq__(self, other):
        return isinstance(other, RecursiveSpec) and self.equations == other.equations

    def __repr__(self):
        return "RecursiveSpec(%r)" % list(self.equations)


EMPTY_SPEC = RecursiveSpec()


@dataclass
class GuardednessReport:
    guarded: bool
    offending: list


def _guards_tail(t):
    # True when the head of `t` is a non-tau prefix reached through seq-left
    # positions, so that a.P ; Q is read as a.(P ; Q).
    if t.kind == PREFIX:
        return not t.action.is_tau or _guards_tail(t.left)
    if t.kind == SEQ:
        return _guards_tail(t.left)
    return False


def check_guardedness(spec):
    """Report whether every name occurrence sits under a non-tau action
    prefix (tau prefixes do not count as guards)."""
    offending = set()

    def walk(t, guarded):
        if t.kind == NAME:
            if not guarded:
                offending.add(t.name)
        elif t.kind == PREFIX:
            walk(t.left, guarded or not t.action.is_tau)
        elif t.kind == SEQ:
            walk(t.left, guarded)
            walk(t.right, guarded or _guards_tail(t.left))
        else:
            if t.left is not None:
                walk(t.left, guarded)
            if t.right is not None:
                walk(t.right, guarded)

    for rhs in spec.equations.values():
        walk(rhs, False)
    return GuardednessReport(guarded=not offending, offending=sorted(offending))


# ---------------------------------------------------------------------------
# Greibach-normal-form view
# ---------------------------------------------------------------------------

@dataclass
class GnfSpec:
    """Structured view of a specification in which every equation is a sum
    of action-prefixed name sequences, optionally plus a 1-summand."""

    names: tuple
    summands: dict          # name -> tuple of (Action, tuple of names)
    may_terminate: dict     # name -> bool

    def actions(self):
        out = set()
        for summs in self.summands.values():
            for action, _ in summs:
                out.add(action)
        return sorted(out)


def _name_chain(t, where):
    # Flatten a term into a sequence of names; 1 is the empty sequence.
    if t.kind == SKIP:
        return []
    if t.kind == NAME:
        return [t.name]
    if t.kind == SEQ:
        return _name_chain(t.left, where) + _name_chain(t.right, where)
    raise NotInGnfError("equation for %s: tail is not a name sequence" % where)


def _gnf_summand(t, where):
    # A summand is an action prefix followed by a name sequence, in either
    # association: a.(X ; Y) or (a.X) ; Y.
    if t.kind == PREFIX:
        return t.action, _name_chain(t.left, where)
    if t.kind == SEQ:
        action, tail = _gnf_summand(t.left, where)
        return action, tail + _name_chain(t.right, where)
    raise NotInGnfError("equation for %s: summand %s is not action-prefixed" % (where, t.key))


def to_gnf_view(spec, root):
    """Structured GNF view of `spec`; performs no normal-form conversion."""
    if root not in spec:
        raise UndefinedNameError("undefined root name %s" % root)
    summands = {}
    may_terminate = {}
    for name, rhs in spec.equations.items():
        parts = []
        stack = [rhs]
        while stack:
            t = stack.pop()
            if t.kind == ALT:
                stack.append(t.right)
                stack.append(t.left)
            else:
                parts.append(t)
        summs = []
        terminate = False
        for part in parts:
            if part.kind == SKIP:
                terminate = True
            elif part.kind == DEADLOCK:
                continue
            else:
                action, tail = _gnf_summand(part, name)
                summs.append((action, tuple(tail)))
        summands[name] = tuple(summs)
        may_terminate[name] = terminate
    return GnfSpec(names=tuple(spec.equations), summands=summands, may_terminate=may_terminate)


def gnf_to_spec(gnf):
    """Round-trip a GNF view back into a recursive specification."""
    equations = {}
    for name in gnf.names:
        parts = [prefix(action, seq_of([name_ref(n) for n in tail]))
                 for action, tail in gnf.summands[name]]
        if gnf.may_terminate[name]:
            parts.append(ONE)
        equations[name] = alt_of(parts)
    return RecursiveSpec(equations)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<parallel>\|\|)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<digit>[01])
  | (?P<sym>[=+;.*\#()\[\]{},?!])
""", re.VERBOSE)


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError("unexpected character %r" % text[pos], line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind == "newline":
            tokens.append(_Token("newline", tok, line, col))
            line += 1
            col = 1
        else:
            if kind != "ws":
                tokens.append(_Token(kind if kind != "sym" and kind != "parallel" else tok,
                                     tok, line, col))
            col += len(tok)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self, ahead=0):
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok.kind != kind:
            raise ParseError("expected %r, found %r" % (kind, tok.text or "end of input"),
                             tok.line, tok.col)
        return tok

    def skip_newlines(self):
        while self.peek().kind == "newline":
            self.next()

    # term := alt
    def term(self):
        t = self.seq()
        while self.peek().kind == "+":
            self.next()
            t = alt(t, self.seq())
        return t

    def seq(self):
        t = self.factor()
        while self.peek().kind == ";":
            self.next()
            t = seq(t, self.factor())
        return t

    def factor(self):
        tok = self.peek()
        if tok.kind == "ident" and self.peek(1).kind in (".", "?", "!"):
            return self.action_prefix()
        t = self.atom()
        if self.peek().kind == "*":
            self.next()
            t = star(t)
        if self.peek().kind == "#":
            self.next()
            t = nest(t, self.factor())
        return t

    def action_prefix(self):
        tok = self.expect("ident")
        if self.peek().kind in ("?", "!"):
            pol = self.next().kind
            datum = self.expect("ident").text
            action = comm(tok.text, pol, datum)
        else:
            action = act(tok.text)
        self.expect(".")
        return prefix(action, self.factor())

    def atom(self):
        tok = self.next()
        if tok.kind == "digit":
            return ZERO if tok.text == "0" else ONE
        if tok.kind == "ident":
            if tok.text == "tau":
                raise ParseError("'tau' is not a process; write 'tau.P'", tok.line, tok.col)
            return name_ref(tok.text)
        if tok.kind == "(":
            t = self.term()
            self.expect(")")
            return t
        if tok.kind == "[":
            left = self.term()
            self.expect("||")
            right = self.term()
            self.expect("]")
            self.expect("{")
            channels = [self.expect("ident").text]
            while self.peek().kind == ",":
                self.next()
                channels.append(self.expect("ident").text)
            self.expect("}")
            return par(channels, left, right)
        raise ParseError("unexpected %r" % (tok.text or "end of input"), tok.line, tok.col)


def parse_term(text):
    """Parse a single closed term."""
    p = _Parser(text)
    p.skip_newlines()
    t = p.term()
    p.skip_newlines()
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError("trailing input %r" % tok.text, tok.line, tok.col)
    return t


def parse_spec(text):
    """Parse a specification: equations `NAME = term`, one per line, with an
    optional single bare-term line naming the root.  Returns (spec, root)."""
    p = _Parser(text)
    equations = {}
    order = []
    root_term = None
    p.skip_newlines()
    while p.peek().kind != "eof":
        if p.peek().kind == "ident" and p.peek(1).kind == "=":
            tok = p.expect("ident")
            p.expect("=")
            rhs = p.term()
            if tok.text in equations:
                raise DuplicateEquationError(
                    "duplicate defining equation for %s (line %d)" % (tok.text, tok.line))
            equations[tok.text] = rhs
            order.append(tok.text)
        else:
            if root_term is not None:
                tok = p.peek()
                raise ParseError("only one bare root term is allowed", tok.line, tok.col)
            root_term = p.term()
        tok = p.peek()
        if tok.kind == "newline":
            p.skip_newlines()
        elif tok.kind != "eof":
            raise ParseError("expected end of line, found %r" % tok.text, tok.line, tok.col)
    spec = RecursiveSpec(equations)
    if root_term is None:
        if not order:
            raise ParseError("empty specification", 1, 1)
        root_term = name_ref(order[0])
    undefined = names_in(root_term) - equations.keys()
    if undefined:
        raise UndefinedNameError("undefined name %s" % sorted(undefined)[0])
    return spec, root_term


def render_term(term):
    """Canonical concrete syntax; parse_spec/parse_term invert it."""
    return term.key
