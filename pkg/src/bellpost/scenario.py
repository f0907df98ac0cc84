"""Bell-experiment causal graphs and the mechanised all-but-one safety proof.

For ``N`` parties the graph has a hidden variable ``lambda``, settings
``x1..xN``, outcomes ``a1..aN`` and, optionally, the post-selection node
``K`` fed by every outcome. When post-selection is all-but-one, the arrow
``ak -> K`` may be erased for any chosen ``k``; each independence needed
for the conditional locality and free-choice factorisations is then
checked by d-separation on the graph with the matching arrow erased.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .causal_graph import (
    RULE1,
    RULE2,
    RULE3,
    BlockingVerdict,
    CausalGraph,
    GraphError,
    d_separated,
)

HIDDEN = "lambda"
SELECT = "K"


def setting(i: int) -> str:
    return f"x{i}"


def outcome(i: int) -> str:
    return f"a{i}"


def _check_parties(n) -> None:
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise GraphError(f"a Bell scenario needs at least 2 parties, got {n!r}")


@dataclass(frozen=True)
class BellGraphSpec:
    parties: int
    include_selection: bool = True
    erased_arrow: int | None = None

    def __post_init__(self):
        _check_parties(self.parties)
        if self.erased_arrow is not None:
            if not self.include_selection:
                raise GraphError("erasing an arrow into K requires the selection node")
            if not 1 <= self.erased_arrow <= self.parties:
                raise GraphError(f"erased_arrow must lie in 1..{self.parties}")


def build_bell_graph(spec: BellGraphSpec) -> CausalGraph:
    n = spec.parties
    nodes = [HIDDEN] + [setting(i) for i in range(1, n + 1)] + [outcome(i) for i in range(1, n + 1)]
    roles = {HIDDEN: "hidden"}
    edges = []
    for i in range(1, n + 1):
        roles[setting(i)] = "setting"
        roles[outcome(i)] = "outcome"
        edges.append((HIDDEN, outcome(i)))
        edges.append((setting(i), outcome(i)))
    if spec.include_selection:
        nodes.append(SELECT)
        roles[SELECT] = "selection"
        edges.extend((outcome(i), SELECT) for i in range(1, n + 1) if i != spec.erased_arrow)
    return CausalGraph(nodes, edges, roles)


def bell_graph(parties: int, selection: bool = True, erased_arrow: int | None = None) -> CausalGraph:
    """Shorthand for ``build_bell_graph(BellGraphSpec(...))``."""
    return build_bell_graph(BellGraphSpec(parties, selection, erased_arrow))


def validate_bell_graph(graph: CausalGraph) -> None:
    """Reject graphs in which the selection node depends on a setting.

    The safety argument only covers outcome-dependent selection.
    """
    for node in graph.nodes:
        if graph.role(node) != "selection":
            continue
        bad = sorted(p for p in graph.parents(node) if graph.role(p) == "setting")
        if bad:
            raise GraphError(f"selection node {node!r} has setting parents {bad}")


def _fmt(nodes) -> str:
    return ",".join(sorted(nodes, key=_node_order))


def _node_order(node: str):
    rank = {HIDDEN: 0, SELECT: 3}
    if node in rank:
        return (rank[node], 0)
    if node[:1] == "a" and node[1:].isdigit():
        return (1, int(node[1:]))
    if node[:1] == "x" and node[1:].isdigit():
        return (2, int(node[1:]))
    return (4, node)


@dataclass(frozen=True)
class IndependenceClaim:
    left: frozenset[str]
    right: frozenset[str]
    given: frozenset[str]
    erased_arrow: int | None
    label: str
    kind: str  # "locality" or "free-choice"

    def __post_init__(self):
        if self.left & self.right or self.left & self.given or self.right & self.given:
            raise GraphError("claim sets must be pairwise disjoint")

    def __str__(self) -> str:
        erased = f"  [no a{self.erased_arrow}->K]" if self.erased_arrow else ""
        return f"{_fmt(self.left)} _||_ {_fmt(self.right)} | {_fmt(self.given)}{erased}"

    def to_dict(self) -> dict:
        return {
            "left": sorted(self.left, key=_node_order),
            "right": sorted(self.right, key=_node_order),
            "given": sorted(self.given, key=_node_order),
            "erased_arrow": self.erased_arrow,
            "label": self.label,
            "kind": self.kind,
        }


def locality_claims(n: int) -> list[IndependenceClaim]:
    """Claims reducing P(a_k | a_{k+1}..a_N, x_1..x_N, lambda, K) to
    P(a_k | x_k, lambda, K), for k = 1..N.

    Outcomes are stripped first (a_{k+1}, then a_{k+2}, ...), then settings
    in increasing index order skipping x_k. Each claim lives on the graph
    with ``a_k -> K`` erased.
    """
    _check_parties(n)
    claims = []
    settings = [setting(i) for i in range(1, n + 1)]
    for k in range(1, n + 1):
        me = outcome(k)
        for l in range(k + 1, n + 1):
            rest = {outcome(j) for j in range(l + 1, n + 1)}
            claims.append(IndependenceClaim(
                frozenset({me}), frozenset({outcome(l)}),
                frozenset(rest | set(settings) | {HIDDEN, SELECT}),
                k, f"locality k={k}: drop outcome a{l}", "locality",
            ))
        for m in range(1, n + 1):
            if m == k:
                continue
            remaining = {setting(j) for j in range(m + 1, n + 1)} | {setting(k)}
            claims.append(IndependenceClaim(
                frozenset({me}), frozenset({setting(m)}),
                frozenset(remaining | {HIDDEN, SELECT}),
                k, f"locality k={k}: drop setting x{m}", "locality",
            ))
    return claims


def free_choice_claims(n: int) -> list[IndependenceClaim]:
    """Claims reducing P(lambda | x_1..x_N, K) to P(lambda | K)."""
    _check_parties(n)
    return [
        IndependenceClaim(
            frozenset({HIDDEN}), frozenset({setting(k)}),
            frozenset({setting(j) for j in range(k + 1, n + 1)} | {SELECT}),
            k, f"free choice: drop setting x{k}", "free-choice",
        )
        for k in range(1, n + 1)
    ]


def chain_rule_factors(n: int) -> list[tuple[str, frozenset[str]]]:
    """Factors (target, conditioning set) of the chain-rule expansions of
    P(a_1..a_N | x_1..x_N, lambda, K) and P(lambda | x_1..x_N, K)."""
    _check_parties(n)
    settings = {setting(i) for i in range(1, n + 1)}
    factors = [
        (outcome(k), frozenset({outcome(j) for j in range(k + 1, n + 1)} | settings | {HIDDEN, SELECT}))
        for k in range(1, n + 1)
    ]
    factors.append((HIDDEN, frozenset(settings | {SELECT})))
    return factors


def apply_claims(factors, claims) -> list[tuple[str, frozenset[str]]]:
    """Drop conditioning variables from ``factors`` as licensed by ``claims``.

    A claim ``t _||_ r | g`` applies to the factor ``(t, g | r)`` and
    rewrites it to ``(t, g)``. Claims must apply in order, each to a factor
    in exactly the state the previous claims left it in.
    """
    current = {t: set(ctx) for t, ctx in factors}
    for c in claims:
        (target,) = c.left
        if target not in current:
            raise ValueError(f"claim {c} targets no factor")
        if current[target] != set(c.given | c.right):
            raise ValueError(
                f"claim {c} expects context {_fmt(c.given | c.right)}, "
                f"factor has {_fmt(current[target])}"
            )
        current[target] -= set(c.right)
    return [(t, frozenset(current[t])) for t, _ in factors]


@dataclass(frozen=True)
class ClaimResult:
    claim: IndependenceClaim
    verdicts: tuple[BlockingVerdict, ...]
    separated: bool
    structure_ok: bool
    verified: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "claim": self.claim.to_dict(),
            "text": str(self.claim),
            "separated": self.separated,
            "structure_ok": self.structure_ok,
            "verified": self.verified,
            "note": self.note,
            "paths": [v.to_dict() for v in self.verdicts],
        }


@dataclass(frozen=True)
class ProofReport:
    parties: int
    claims: tuple[ClaimResult, ...]
    overall: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "overall", all(c.verified for c in self.claims))

    def to_dict(self) -> dict:
        return {
            "parties": self.parties,
            "overall": self.overall,
            "claims": [c.to_dict() for c in self.claims],
        }

    def to_text(self) -> str:
        lines = [f"All-but-one safety proof, N={self.parties}"]
        for i, res in enumerate(self.claims, 1):
            lines.append(f"[{i}] {res.claim}    ({res.claim.label})")
            lines.extend(verdict_lines(res.verdicts))
            status = "PASS" if res.verified else "FAIL"
            lines.append(f"    => {status}" + (f" ({res.note})" if res.note else ""))
        lines.append("OVERALL: " + ("PASS" if self.overall else "FAIL"))
        return "\n".join(lines)


def verdict_lines(verdicts) -> list[str]:
    out = []
    for v in verdicts:
        if v.blocked:
            tag = "; ".join(f"blocked by {n} ({r})" for n, r in v.blockers)
        else:
            opened = [n for n, r in v.witnesses if r == RULE3]
            tag = "OPEN" + (f" ({', '.join(opened)} unblocked by {RULE3})" if opened else "")
        out.append(f"    {v.path}    {tag}")
    return out


def verify_claim(graph: CausalGraph, claim: IndependenceClaim) -> tuple[bool, tuple[BlockingVerdict, ...]]:
    validate_bell_graph(graph)
    sep = d_separated(graph, claim.left, claim.right, claim.given)
    return sep.separated, sep.verdicts


def _expected_structure(n: int, claim: IndependenceClaim, verdicts) -> tuple[bool, str]:
    if claim.kind == "locality":
        if len(verdicts) != n - 1:
            return False, f"expected {n - 1} paths, found {len(verdicts)}"
        if not all((HIDDEN, RULE2) in v.witnesses for v in verdicts):
            return False, "some path is not blocked by lambda via Rule2"
        return True, f"{n - 1} path(s), all blocked by lambda (Rule2)"
    collider = outcome(claim.erased_arrow)
    if len(verdicts) != 1:
        return False, f"expected 1 path, found {len(verdicts)}"
    if (collider, RULE1) not in verdicts[0].witnesses:
        return False, f"path not blocked by collider {collider} via Rule1"
    return True, f"1 path, blocked by collider {collider} (Rule1)"


def verify_theorem(n: int) -> ProofReport:
    """Check every locality and free-choice claim on its erased graph,
    including the expected path counts and blocking rules."""
    _check_parties(n)
    results = []
    for claim in locality_claims(n) + free_choice_claims(n):
        graph = bell_graph(n, erased_arrow=claim.erased_arrow)
        separated, verdicts = verify_claim(graph, claim)
        structure_ok, note = _expected_structure(n, claim, verdicts)
        results.append(ClaimResult(claim, verdicts, separated, structure_ok, separated and structure_ok, note))
    return ProofReport(n, tuple(results))


@dataclass(frozen=True)
class ErasureReport:
    parties: int
    entries: tuple[ClaimResult, ...]
    holds: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "holds", all(e.verified for e in self.entries))

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> dict:
        return {
            "parties": self.parties,
            "holds": self.holds,
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_text(self) -> str:
        lines = [f"Erasure necessity on the full graph, N={self.parties}"]
        for i, e in enumerate(self.entries, 1):
            lines.append(f"[{i}] {e.claim}  evaluated with every arrow into K kept")
            lines.extend(verdict_lines(e.verdicts))
            lines.append("    => " + ("flips (not separated)" if e.verified else "DOES NOT FLIP"))
        lines.append("NECESSITY: " + ("PASS" if self.holds else "FAIL"))
        return "\n".join(lines)


def verify_erasure_necessity(n: int) -> ErasureReport:
    """Re-run each free-choice claim on the un-erased graph; every claim
    must fail there, and the collider a_k must be opened by Rule 3."""
    _check_parties(n)
    full = bell_graph(n)
    entries = []
    for claim in free_choice_claims(n):
        separated, verdicts = verify_claim(full, claim)
        collider = outcome(claim.erased_arrow)
        opened = any(
            not v.blocked and (collider, RULE3) in v.witnesses for v in verdicts
        )
        flipped = not separated and opened
        note = f"{collider} opened via {RULE3}" if opened else "no path opened at the collider"
        entries.append(ClaimResult(claim, verdicts, separated, opened, flipped, note))
    return ErasureReport(n, tuple(entries))
