"""Post-selection rules over joint outcomes and the all-but-one check.

Rules are binary accept/reject functions on the product of the parties'
outcome alphabets. They can be given as explicit tables or as predicate
expressions::

    expr   := or ; or := and { "||" and } ; and := not { "&&" not }
    not    := [ "!" ] atom
    atom   := "(" expr ")" | comparison | "true" | "false"
            | "forall" PARTY_VAR ":" expr
    comparison := term ("==" | "!=") term
    term   := OUTCOME_REF | SYMBOL_LITERAL | "count" "(" OUTCOME_REF ")"

``a1``, ``a2``, ... refer to the outcome of a party (1-based); a name bound
by ``forall`` ranges over all parties. Symbol literals are numerals, quoted
strings, or bare names that are not bound party variables.
"""

from __future__ import annotations

import itertools
import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

Outcome = tuple[str, ...]

DEFAULT_WITNESS_CAP = 16


class SelectionError(ValueError):
    """Invalid outcome space, support, or rule."""


class RuleSyntaxError(SelectionError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        pointer = f"\n  {text}\n  {' ' * position}^" if text else ""
        super().__init__(f"{message} at position {position}{pointer}")


@dataclass(frozen=True)
class OutcomeSpace:
    alphabets: tuple[tuple[str, ...], ...]
    targets: tuple[tuple[str, ...], ...] | None = None

    def __init__(self, alphabets: Sequence[Sequence], targets: Sequence[Sequence] | None = None):
        alph = tuple(tuple(str(s) for s in a) for a in alphabets)
        if not alph:
            raise SelectionError("an outcome space needs at least one party")
        for i, a in enumerate(alph, 1):
            if not a:
                raise SelectionError(f"party {i} has an empty outcome alphabet")
            if len(set(a)) != len(a):
                raise SelectionError(f"party {i} has repeated outcome symbols")
        tgt = None
        if targets is not None:
            tgt = tuple(tuple(str(s) for s in t) for t in targets)
            if len(tgt) != len(alph):
                raise SelectionError("one target alphabet per party is required")
            for i, (t, a) in enumerate(zip(tgt, alph), 1):
                if not set(t) <= set(a):
                    raise SelectionError(f"target alphabet of party {i} is not a subset of its outcomes")
        object.__setattr__(self, "alphabets", alph)
        object.__setattr__(self, "targets", tgt)

    @property
    def parties(self) -> int:
        return len(self.alphabets)

    def product(self) -> Iterable[Outcome]:
        return itertools.product(*self.alphabets)

    @property
    def size(self) -> int:
        n = 1
        for a in self.alphabets:
            n *= len(a)
        return n

    def contains(self, u: Sequence) -> bool:
        return len(u) == self.parties and all(s in a for s, a in zip(u, self.alphabets))

    def sort_key(self, u: Outcome) -> tuple[int, ...]:
        return tuple(a.index(s) for s, a in zip(u, self.alphabets))

    def to_dict(self) -> dict:
        d = {"outcomes": [list(a) for a in self.alphabets]}
        if self.targets is not None:
            d["targets"] = [list(t) for t in self.targets]
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> "OutcomeSpace":
        if "outcomes" not in data:
            raise SelectionError("outcome space JSON needs an 'outcomes' list")
        return cls(data["outcomes"], data.get("targets"))


@dataclass(frozen=True)
class Support:
    """Joint outcomes the preparation can produce, in space order."""

    elements: tuple[Outcome, ...]

    def __init__(self, elements: Iterable[Sequence], space: OutcomeSpace | None = None):
        elems = {tuple(str(s) for s in u) for u in elements}
        if not elems:
            raise SelectionError("support must be nonempty")
        if space is not None:
            for u in elems:
                if not space.contains(u):
                    raise SelectionError(f"support element {u} is outside the outcome space")
            ordered = tuple(sorted(elems, key=space.sort_key))
        else:
            ordered = tuple(sorted(elems))
        object.__setattr__(self, "elements", ordered)
        object.__setattr__(self, "_members", frozenset(ordered))

    def __iter__(self):
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, u) -> bool:
        return tuple(u) in self._members

    @classmethod
    def full(cls, space: OutcomeSpace) -> "Support":
        return cls(space.product(), space)


def conservation_support(parties: int, total: int, max_per_party: int | None = None) -> Support:
    """All ``parties``-tuples of particle counts in 0..max_per_party summing
    to ``total``; counts are rendered as decimal symbols."""
    if parties < 1 or total < 0:
        raise SelectionError("need parties >= 1 and total >= 0")
    cap = total if max_per_party is None else max_per_party
    if cap < 0:
        raise SelectionError("max_per_party must be nonnegative")
    tuples = [
        tuple(str(c) for c in t)
        for t in itertools.product(range(cap + 1), repeat=parties)
        if sum(t) == total
    ]
    if not tuples:
        raise SelectionError(f"no {parties}-tuple of counts <= {cap} sums to {total}")
    space = OutcomeSpace([[str(c) for c in range(cap + 1)]] * parties)
    return Support(tuples, space)


# --- expression parsing -------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<op>\|\||&&|==|!=|!|\(|\)|:)
  | (?P<num>\d+)
  | (?P<str>"[^"]*"|'[^']*')
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)
_KEYWORDS = {"true", "false", "forall", "count"}
_OUTCOME_REF = re.compile(r"a(\d+)\Z")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise RuleSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", pos))
    return tokens


# terms: ("ref", party_index_or_var, pos) | ("lit", symbol, pos) | ("count", ref, pos)
# Compiled nodes are closures env -> value, where env maps party vars to
# 0-based indices and carries the outcome tuple under key None.


class _Parser:
    def __init__(self, text: str, space: OutcomeSpace):
        self.text = text
        self.space = space
        self.tokens = _tokenize(text)
        self.i = 0
        self.bound: list[str] = []

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None, kind=None):
        tok = self.tokens[self.i]
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = repr(value) if value is not None else kind
            got = repr(tok[1]) if tok[0] != "end" else "end of input"
            raise RuleSyntaxError(f"expected {want}, found {got}", tok[2], self.text)
        self.i += 1
        return tok

    def error(self, message, pos):
        return SelectionError(f"{message} at position {pos}")

    def parse(self) -> Callable:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise RuleSyntaxError(f"unexpected {tok[1]!r}", tok[2], self.text)
        return node

    def expr(self):
        parts = [self.conj()]
        while self.peek()[1] == "||":
            self.take("||")
            parts.append(self.conj())
        if len(parts) == 1:
            return parts[0]
        return lambda env: any(p(env) for p in parts)

    def conj(self):
        parts = [self.neg()]
        while self.peek()[1] == "&&":
            self.take("&&")
            parts.append(self.neg())
        if len(parts) == 1:
            return parts[0]
        return lambda env: all(p(env) for p in parts)

    def neg(self):
        if self.peek()[1] == "!":
            self.take("!")
            inner = self.atom()
            return lambda env: not inner(env)
        return self.atom()

    def atom(self):
        kind, value, pos = self.peek()
        if value == "(":
            self.take("(")
            node = self.expr()
            self.take(")")
            return node
        if kind == "name" and value in ("true", "false"):
            self.take()
            const = value == "true"
            return lambda env: const
        if kind == "name" and value == "forall":
            self.take()
            _, var, vpos = self.take(kind="name")
            if var in _KEYWORDS or _OUTCOME_REF.match(var):
                raise RuleSyntaxError(f"{var!r} cannot be a party variable", vpos, self.text)
            self.take(":")
            self.bound.append(var)
            body = self.expr()
            self.bound.pop()
            n = self.space.parties

            def forall(env, var=var, body=body):
                return all(body({**env, var: p}) for p in range(n))

            return forall
        return self.comparison()

    def comparison(self):
        left = self.term()
        kind, op, pos = self.peek()
        if op not in ("==", "!="):
            raise RuleSyntaxError("expected '==' or '!='", pos, self.text)
        self.take()
        right = self.term()
        lhs, rhs = self.typed(left, right)
        if op == "==":
            return lambda env: lhs(env) == rhs(env)
        return lambda env: lhs(env) != rhs(env)

    def term(self):
        kind, value, pos = self.peek()
        if kind == "name" and value == "count":
            self.take()
            self.take("(")
            ref = self.ref()
            self.take(")")
            return ("count", ref, pos)
        if kind == "name" and (value in self.bound or _OUTCOME_REF.match(value)):
            return ("ref", self.ref(), pos)
        if kind == "num":
            self.take()
            return ("lit", value, pos)
        if kind == "str":
            self.take()
            return ("lit", value[1:-1], pos)
        if kind == "name" and value not in _KEYWORDS:
            self.take()
            return ("lit", value, pos)
        shown = repr(value) if kind != "end" else "end of input"
        raise RuleSyntaxError(f"expected a term, found {shown}", pos, self.text)

    def ref(self):
        kind, value, pos = self.take(kind="name")
        if value in self.bound:
            return (value, pos)
        m = _OUTCOME_REF.match(value)
        if not m:
            raise RuleSyntaxError(f"{value!r} is not an outcome reference", pos, self.text)
        idx = int(m.group(1))
        if not 1 <= idx <= self.space.parties:
            raise self.error(f"unknown party {value!r} (parties are a1..a{self.space.parties})", pos)
        return (idx - 1, pos)

    def _alphabets_of(self, ref):
        party = ref[0]
        if isinstance(party, int):
            return [self.space.alphabets[party]]
        return list(self.space.alphabets)

    def _getter(self, ref):
        party = ref[0]
        if isinstance(party, int):
            return lambda env: env[None][party]
        return lambda env: env[None][env[party]]

    def _count_getter(self, ref, pos):
        get = self._getter(ref)

        def count(env):
            sym = get(env)
            if not sym.isdigit():
                raise SelectionError(f"count() at position {pos} applied to non-numeric outcome {sym!r}")
            return int(sym)

        return count

    def _check_literal(self, lit, ref):
        sym, pos = lit[1], lit[2]
        if not any(sym in a for a in self._alphabets_of(ref)):
            raise self.error(f"unknown outcome symbol {sym!r}", pos)

    def typed(self, left, right):
        kinds = (left[0], right[0])
        if kinds == ("lit", "lit"):
            a, b = left[1], right[1]
            return (lambda env: a), (lambda env: b)
        if "count" in kinds and "ref" in kinds:
            pos = right[2] if right[0] == "ref" else left[2]
            raise self.error("type mismatch: comparing an outcome symbol with a count", pos)
        out = []
        for term, other in ((left, right), (right, left)):
            kind = term[0]
            if kind == "ref":
                if other[0] == "lit":
                    self._check_literal(other, term[1])
                out.append(self._getter(term[1]))
            elif kind == "count":
                out.append(self._count_getter(term[1], term[2]))
            else:
                if other[0] == "count":
                    if not term[1].isdigit():
                        raise self.error(f"type mismatch: count compared with symbol {term[1]!r}", term[2])
                    val = int(term[1])
                else:
                    val = term[1]
                out.append(lambda env, val=val: val)
        return out[0], out[1]


@dataclass(frozen=True, eq=False)
class SelectionRule:
    """Binary post-selection variable K over a finite outcome space."""

    space: OutcomeSpace
    table: Mapping[Outcome, bool]
    source: str
    kind: str  # "table" | "expression"

    def __call__(self, u: Sequence) -> bool:
        try:
            return self.table[tuple(u)]
        except KeyError:
            raise SelectionError(f"{tuple(u)} is outside the rule's outcome space") from None

    def accepted(self) -> list[Outcome]:
        return [u for u in self.space.product() if self.table[u]]

    def complement(self) -> "SelectionRule":
        return SelectionRule(self.space, {u: not k for u, k in self.table.items()},
                             f"!({self.source})", self.kind)

    def to_dict(self) -> dict:
        if self.kind == "expression":
            return {"space": self.space.to_dict(), "rule": self.source}
        rows = [{"a": list(u), "k": int(self.table[u])} for u in self.space.product()]
        return {"space": self.space.to_dict(), "rule": {"table": rows}}

    @classmethod
    def from_table(cls, space: OutcomeSpace, table) -> "SelectionRule":
        """Build a rule from a mapping ``outcome -> 0/1`` or a list of
        ``{"a": [...], "k": 0|1}`` rows. The table must be total."""
        if isinstance(table, Mapping):
            items = [(tuple(str(s) for s in u), k) for u, k in table.items()]
        else:
            items = []
            for i, row in enumerate(table):
                try:
                    items.append((tuple(str(s) for s in row["a"]), row["k"]))
                except (KeyError, TypeError):
                    raise SelectionError(f"table row {i}: expected {{'a': [...], 'k': 0|1}}") from None
        full = {}
        for u, k in items:
            if not space.contains(u):
                raise SelectionError(f"table entry {u} is outside the outcome space")
            if k not in (0, 1, True, False):
                raise SelectionError(f"table entry {u}: K must be 0 or 1, got {k!r}")
            full[u] = bool(k)
        missing = [u for u in space.product() if u not in full]
        if missing:
            raise SelectionError(f"rule table is not total; first missing outcome {missing[0]}")
        return cls(space, full, "table", "table")

    @classmethod
    def from_function(cls, space: OutcomeSpace, fn: Callable[[Outcome], bool], source: str = "function"):
        return cls(space, {u: bool(fn(u)) for u in space.product()}, source, "table")

    @classmethod
    def constant(cls, space: OutcomeSpace, value: bool = True) -> "SelectionRule":
        return parse_rule("true" if value else "false", space)


def parse_rule(text: str, space: OutcomeSpace) -> SelectionRule:
    """Parse a predicate expression and tabulate it over ``space``.

    >>> space = OutcomeSpace([["0", "1"], ["0", "1"]])
    >>> rule = parse_rule("a1 == a2", space)
    >>> rule(("0", "0")), rule(("0", "1"))
    (True, False)
    """
    node = _Parser(text, space).parse()
    table = {u: bool(node({None: u})) for u in space.product()}
    return SelectionRule(space, table, text, "expression")


# --- all-but-one ---------------------------------------------------------


@dataclass(frozen=True)
class AllButOneVerdict:
    holds: bool
    violations: tuple[tuple[int, Outcome, Outcome], ...]
    total_violations: int

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "total_violations": self.total_violations,
            "violations": [{"party": k, "u": list(u), "v": list(v)} for k, u, v in self.violations],
        }


def check_all_but_one(
    rule: SelectionRule,
    space: OutcomeSpace | None = None,
    support: Support | Iterable[Sequence] | None = None,
    max_witnesses: int = DEFAULT_WITNESS_CAP,
) -> AllButOneVerdict:
    """Decide whether K is determined by the other parties' outcomes, for
    every party, on the given support.

    Every pair of support elements that differ only at party ``k`` must be
    accepted or rejected together. Witness pairs are reported in party
    order, then outcome order, up to ``max_witnesses``; the count of all
    violating pairs is always exact.
    """
    space = space or rule.space
    if space.alphabets != rule.space.alphabets:
        raise SelectionError("rule and outcome space disagree")
    if support is None:
        support = Support.full(space)
    elif not isinstance(support, Support):
        support = Support(support, space)
    for u in support:
        if not space.contains(u):
            raise SelectionError(f"support element {u} is outside the outcome space")

    elements = sorted(support, key=space.sort_key)
    violations = []
    total = 0
    for k in range(space.parties):
        groups: dict[Outcome, list[Outcome]] = defaultdict(list)
        for u in elements:
            groups[u[:k] + u[k + 1:]].append(u)
        for members in groups.values():
            for u, v in itertools.combinations(members, 2):
                if rule(u) != rule(v):
                    total += 1
                    if len(violations) < max_witnesses:
                        violations.append((k + 1, u, v))
    return AllButOneVerdict(total == 0, tuple(violations), total)


def load_rule_file(data: Mapping):
    """Read ``{"space": ..., "support": ..., "rule": ...}``.

    Returns ``(space, support_or_None, rule)``. ``support`` may be
    ``"full"``, ``"conservation:N=3,total=3[,max=M]"`` or an explicit list
    of joint outcomes.
    """
    if "space" not in data or "rule" not in data:
        raise SelectionError("rule file needs 'space' and 'rule'")
    space = OutcomeSpace.from_dict(data["space"])
    raw = data["rule"]
    if isinstance(raw, str):
        rule = parse_rule(raw, space)
    elif isinstance(raw, Mapping) and "table" in raw:
        rule = SelectionRule.from_table(space, raw["table"])
    else:
        raise SelectionError("'rule' must be an expression string or {'table': [...]}")
    support = None
    if data.get("support") is not None:
        support = parse_support(data["support"], space)
    return space, support, rule


_CONSERVATION = re.compile(r"conservation:\s*N\s*=\s*(\d+)\s*,\s*total\s*=\s*(\d+)(?:\s*,\s*max\s*=\s*(\d+))?\s*\Z")


def parse_support(spec, space: OutcomeSpace) -> Support:
    if isinstance(spec, str):
        if spec == "full":
            return Support.full(space)
        m = _CONSERVATION.match(spec)
        if not m:
            raise SelectionError(f"unrecognised support spec {spec!r}")
        n, total = int(m.group(1)), int(m.group(2))
        cap = int(m.group(3)) if m.group(3) else None
        if n != space.parties:
            raise SelectionError(f"support is for {n} parties but the space has {space.parties}")
        return Support(conservation_support(n, total, cap), space)
    return Support(spec, space)
