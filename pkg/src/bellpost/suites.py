"""Seeded random generators and the property suites built on them.

Random models use rational weights with denominators at most 16, outcome
and setting alphabets of size at most 3, and at most 3 parties.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .causal_graph import CausalGraph, d_separated_by_reachability, paths_separate_many, reachable
from .inequality import chsh, evaluate, local_bound
from .scenario import bell_graph
from .scm import (
    FiniteModel,
    conservation_bell_model,
    joint_distribution,
    model_support,
    particle_count_model,
    postselect,
)
from .selection import OutcomeSpace, SelectionRule, Support, check_all_but_one

DEFAULT_SEED = 20221014
MAX_DENOMINATOR = 16


def random_dag(rng: random.Random, n: int, p: float = 0.35) -> CausalGraph:
    nodes = [f"v{i}" for i in range(n)]
    order = nodes[:]
    rng.shuffle(order)
    edges = [
        (order[i], order[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    ]
    return CausalGraph(nodes, edges)


def random_distribution(rng: random.Random, symbols, max_support: int | None = None) -> dict:
    """Rational distribution over a random subset of ``symbols``."""
    symbols = list(symbols)
    d = rng.randint(1, MAX_DENOMINATOR)
    k = rng.randint(1, min(len(symbols), d, max_support or len(symbols)))
    chosen = rng.sample(symbols, k)
    cuts = sorted(rng.sample(range(1, d), k - 1)) if k > 1 else []
    parts = [b - a for a, b in zip([0] + cuts, cuts + [d])]
    return {s: Fraction(c, d) for s, c in zip(chosen, parts)}


def random_local_model(
    rng: random.Random,
    parties: int | None = None,
    settings: int | None = None,
    outcomes: int | None = None,
    hidden: int | None = None,
) -> FiniteModel:
    n = parties or rng.choice([2, 2, 2, 3])
    n_set = settings or (2 if n == 2 and rng.random() < 0.75 else rng.randint(1, 3 if n == 2 else 2))
    n_out = outcomes or rng.randint(2, 3)
    n_lam = hidden or rng.randint(1, 4)
    set_alph = [str(s) for s in range(n_set)]
    out_alph = [str(o) for o in range(n_out)]
    lambdas = [f"l{j}" for j in range(n_lam)]
    weights = random_distribution(rng, lambdas)
    weights = [weights.get(l, Fraction(0)) for l in lambdas]
    local = []
    for _ in range(n):
        kern = {}
        for lam in lambdas:
            # point masses are common so that supports carry structure
            for x in set_alph:
                kern[(x, lam)] = random_distribution(rng, out_alph, 1 if rng.random() < 0.6 else None)
        local.append(kern)
    return FiniteModel([set_alph] * n, OutcomeSpace([out_alph] * n), lambdas, weights, local=local)


def random_block_model(rng: random.Random, parties: int | None = None) -> FiniteModel:
    """Local model whose support splits into separate one-flip components.

    Each party's three outcomes are cut into two blocks. Every hidden value
    carries a block label shared by all parties and confines each party's
    kernel to that block, so supports of different labels differ in every
    coordinate and rules may treat them differently.
    """
    n = parties or rng.choice([2, 2, 3])
    set_alph = ["0", "1"] if n == 2 or rng.random() < 0.5 else ["0"]
    out_alph = ["0", "1", "2"]
    cuts = []
    for _ in range(n):
        order = out_alph[:]
        rng.shuffle(order)
        cuts.append((order[:1], order[1:]))
    lambdas = [f"l{j}" for j in range(rng.randint(2, 4))]
    labels = [j % 2 for j in range(len(lambdas))]
    rng.shuffle(labels)
    weights = random_distribution(rng, lambdas)
    weights = [weights.get(l, Fraction(0)) for l in lambdas]
    local = []
    for i in range(n):
        kern = {}
        for lam, b in zip(lambdas, labels):
            for x in set_alph:
                kern[(x, lam)] = random_distribution(rng, cuts[i][b])
        local.append(kern)
    return FiniteModel([set_alph] * n, OutcomeSpace([out_alph] * n), lambdas, weights, local=local)


def one_flip_components(support: Support) -> list[list[tuple]]:
    """Connected components of the support under 'differ in exactly one coordinate'."""
    elems = list(support)
    parent = {u: u for u in elems}

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    n = len(elems[0]) if elems else 0
    for k in range(n):
        buckets: dict = {}
        for u in elems:
            buckets.setdefault(u[:k] + u[k + 1:], []).append(u)
        for group in buckets.values():
            for v in group[1:]:
                parent[find(v)] = find(group[0])
    comps: dict = {}
    for u in elems:
        comps.setdefault(find(u), []).append(u)
    return list(comps.values())


def random_all_but_one_rule(rng: random.Random, space: OutcomeSpace, support: Support) -> SelectionRule:
    """A rule constant on each one-flip component of ``support`` (hence
    all-but-one there), random off the support. It accepts some component,
    and rejects one too whenever there are several."""
    comps = one_flip_components(support)
    values = [rng.random() < 0.5 for _ in comps]
    if not any(values):
        values[rng.randrange(len(values))] = True
    elif all(values) and len(values) > 1:
        values[rng.randrange(len(values))] = False
    table = {u: rng.random() < 0.5 for u in space.product()}
    for comp, val in zip(comps, values):
        for u in comp:
            table[u] = val
    return SelectionRule(space, table, "random all-but-one", "table")


def random_rule(rng: random.Random, space: OutcomeSpace) -> SelectionRule:
    table = {u: rng.random() < 0.5 for u in space.product()}
    if not any(table.values()):
        table[next(iter(table))] = True
    return SelectionRule(space, table, "random", "table")


# --- suites -------------------------------------------------------------


@dataclass
class DsepFuzzResult:
    graphs: int = 0
    queries: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def dsep_fuzz(seed: int = DEFAULT_SEED, graphs: int = 1000, max_nodes: int = 10) -> DsepFuzzResult:
    """Compare both d-separation procedures on every (x, y, Z) triple with
    singleton x < y and Z any subset of the remaining nodes.

    The path side uses the bulk evaluator, which applies the same blocking
    rules as the per-path verdicts to all conditioning sets of a pair. One
    reachability traversal from x given Z answers every y, so traversals
    are shared across pairs.
    """
    rng = random.Random(seed)
    out = DsepFuzzResult()
    for _ in range(graphs):
        n = rng.randint(2, max_nodes)
        g = random_dag(rng, n, rng.choice([0.2, 0.3, 0.4]))
        out.graphs += 1
        reach: dict = {}
        for x, y in itertools.combinations(g.nodes, 2):
            rest = [v for v in g.nodes if v not in (x, y)]
            zs = [z for r in range(len(rest) + 1) for z in itertools.combinations(rest, r)]
            by_paths = paths_separate_many(g, x, y, zs)
            for z, a in zip(zs, by_paths):
                out.queries += 1
                key = (x, z)
                if key not in reach:
                    reach[key] = reachable(g, x, z)
                b = y not in reach[key]
                if a != b:
                    out.mismatches.append((g, x, y, z, a, b))
    return out


@dataclass
class SafetyCase:
    model: FiniteModel
    rule: SelectionRule
    all_but_one: bool
    safe: bool
    locality_residual: Fraction
    free_choice_residual: Fraction
    chsh_postselected: Fraction | None
    chsh_bound: Fraction | None
    nontrivial: bool


def _chsh_applicable(model: FiniteModel) -> bool:
    return (
        model.parties == 2
        and all(s == ("0", "1") for s in model.settings)
        and all({"0", "1"} <= set(a) for a in model.outcomes.alphabets)
    )


def safety_case(model: FiniteModel, rule: SelectionRule) -> SafetyCase:
    support = model_support(model)
    verdict = check_all_but_one(rule, model.outcomes, support)
    post, report = postselect(model, rule)
    value = bound = None
    if _chsh_applicable(model):
        f = chsh().extended(model.outcomes.alphabets)
        value = evaluate(f, post) if len(post.table) == 4 else None
        bound = local_bound(f).value
    nontrivial = len({rule(u) for u in support}) > 1
    return SafetyCase(model, rule, verdict.holds, report.safe, report.locality_residual,
                      report.free_choice_residual, value, bound, nontrivial)


def safety_suite(seed: int = DEFAULT_SEED, count: int = 100) -> list[SafetyCase]:
    """Random local models paired with rules that pass all-but-one on the
    model support. Conservation models and block-structured models are
    mixed in so that a good share of rules actually reject something that
    occurs."""
    rng = random.Random(seed)
    models = [particle_count_model(2, 2), particle_count_model(3, 3), conservation_bell_model()]
    cases = []
    while len(cases) < count:
        if models:
            model = models.pop()
        elif rng.random() < 0.5:
            model = random_block_model(rng)
        else:
            model = random_local_model(rng)
        support = model_support(model)
        rule = random_all_but_one_rule(rng, model.outcomes, support)
        try:
            cases.append(safety_case(model, rule))
        except ValueError:
            continue  # accepts nothing that occurs; draw again
    return cases


@dataclass
class SoundnessResult:
    models: int = 0
    certified: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def soundness_suite(seed: int = DEFAULT_SEED, count: int = 100) -> SoundnessResult:
    """Every independence certified by d-separation on the Bell graph must
    hold exactly in the model's joint distribution.

    Rules passing all-but-one are additionally checked against each graph
    with one arrow into K erased.
    """
    rng = random.Random(seed)
    out = SoundnessResult()
    while out.models < count:
        if rng.random() < 0.3:
            model = random_block_model(rng)
        else:
            model = random_local_model(rng, parties=rng.choice([2, 2, 2, 3]), hidden=rng.randint(1, 3))
        support = model_support(model)
        if rng.random() < 0.5:
            rule = random_all_but_one_rule(rng, model.outcomes, support)
        else:
            rule = random_rule(rng, model.outcomes)
        table = joint_distribution(model, rule)
        n = model.parties
        graphs = [bell_graph(n)]
        if check_all_but_one(rule, model.outcomes, support).holds:
            graphs += [bell_graph(n, erased_arrow=k) for k in range(1, n + 1)]
        out.models += 1
        for g in graphs:
            for u, v in itertools.combinations(g.nodes, 2):
                rest = [w for w in g.nodes if w not in (u, v)]
                for r in range(len(rest) + 1):
                    for z in itertools.combinations(rest, r):
                        if d_separated_by_reachability(g, u, v, z):
                            out.certified += 1
                            if not table.independent({u}, {v}, z):
                                out.failures.append((model, rule, g, u, v, z))
    return out
