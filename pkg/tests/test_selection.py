import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from bellpost.selection import (
    OutcomeSpace,
    RuleSyntaxError,
    SelectionError,
    SelectionRule,
    Support,
    check_all_but_one,
    conservation_support,
    load_rule_file,
    parse_rule,
    parse_support,
)

BITS = OutcomeSpace([["0", "1"], ["0", "1"]])


def counts(n, top):
    return OutcomeSpace([[str(c) for c in range(top + 1)]] * n)


def test_parity_rule_table():
    rule = parse_rule("a1 == a2", BITS)
    assert rule.table == {("0", "0"): True, ("1", "1"): True, ("0", "1"): False, ("1", "0"): False}


def test_constant_rule():
    rule = parse_rule("true", BITS)
    assert all(rule.table.values())
    assert not any(SelectionRule.constant(BITS, False).table.values())


def test_single_particle_rule():
    rule = parse_rule("forall p: count(p) == 1", counts(3, 3))
    assert rule.accepted() == [("1", "1", "1")]


def test_operators_and_precedence():
    space = counts(2, 2)
    rule = parse_rule("!(a1 == 0) && a2 == 2 || a1 == a2 && a1 == 0", space)
    for u in space.product():
        a, b = u
        assert rule(u) == ((a != "0" and b == "2") or (a == b and a == "0"))


def test_quoted_and_bare_symbols():
    space = OutcomeSpace([["0", "1", "bot"]] * 2)
    assert parse_rule("a1 != bot", space).table == parse_rule('a1 != "bot"', space).table


@pytest.mark.parametrize("text, fragment", [
    ("a1 ==", "expected a term"),
    ("a1 = a2", "unexpected character"),
    ("(a1 == a2", "expected ')'"),
    ("a3 == 0", "unknown party"),
    ("a1 == 7", "unknown outcome symbol"),
    ("count(a1) == a2", "type mismatch"),
    ("count(a1) == x", "type mismatch"),
    ("a1 == a2 a1", "position"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(SelectionError) as err:
        parse_rule(text, counts(2, 2))
    assert fragment in str(err.value)


def test_syntax_error_reports_position():
    with pytest.raises(RuleSyntaxError) as err:
        parse_rule("a1 == 1 && ", BITS)
    assert err.value.position == 11


def test_count_of_opaque_symbol_fails_at_tabulation():
    space = OutcomeSpace([["0", "bot"]] * 2)
    with pytest.raises(SelectionError):
        parse_rule("count(a1) == 0", space)


def test_table_rules():
    rows = [{"a": list(u), "k": int(u[0] == u[1])} for u in BITS.product()]
    rule = SelectionRule.from_table(BITS, rows)
    assert rule.table == parse_rule("a1 == a2", BITS).table
    with pytest.raises(SelectionError):
        SelectionRule.from_table(BITS, rows[:-1])
    with pytest.raises(SelectionError):
        SelectionRule.from_table(BITS, rows[:-1] + [{"a": ["1", "1"], "k": 2}])


def test_expression_agrees_with_direct_evaluation_exhaustively():
    space = counts(3, 2)
    rule = parse_rule("forall p: count(p) == 1 || a1 == 2 && !(a3 == 0)", space)
    for u in space.product():
        direct = all(int(s) == 1 for s in u) or (u[0] == "2" and u[2] != "0")
        assert rule(u) == direct


def test_conservation_supports():
    assert list(conservation_support(2, 2, 2)) == [("0", "2"), ("1", "1"), ("2", "0")]
    assert len(conservation_support(3, 3, 3)) == 10
    assert list(conservation_support(2, 0)) == [("0", "0")]
    with pytest.raises(SelectionError):
        conservation_support(3, 7, 2)


def test_empty_support_is_an_error():
    with pytest.raises(SelectionError):
        Support([], BITS)


def test_two_party_conservation_holds():
    rule = parse_rule("forall p: count(p) == 1", counts(2, 2))
    assert check_all_but_one(rule, support=conservation_support(2, 2, 2)).holds


def test_three_party_conservation_holds_but_full_space_fails():
    rule = parse_rule("forall p: count(p) == 1", counts(3, 3))
    assert check_all_but_one(rule, support=conservation_support(3, 3, 3)).holds
    assert not check_all_but_one(rule).holds


@pytest.mark.parametrize("n,total,targets", [
    (2, 3, (1, 2)), (3, 4, (2, 0, 2)), (4, 4, (1, 1, 1, 1)), (3, 2, (0, 0, 2)),
])
def test_conservation_theorem_for_other_targets(n, total, targets):
    space = counts(n, total)
    expr = " && ".join(f"count(a{i}) == {c}" for i, c in enumerate(targets, 1))
    assert check_all_but_one(parse_rule(expr, space), support=conservation_support(n, total)).holds


def test_parity_witness():
    verdict = check_all_but_one(parse_rule("a1 == a2", BITS))
    assert not verdict.holds
    assert (2, ("0", "0"), ("0", "1")) in verdict.violations
    assert verdict.total_violations == 4
    assert verdict.violations[0] == (1, ("0", "0"), ("1", "0"))


def test_witness_cap_and_exact_total():
    space = counts(3, 2)
    rule = parse_rule("a1 == a2 && a2 == a3", space)
    capped = check_all_but_one(rule, max_witnesses=2)
    full = check_all_but_one(rule, max_witnesses=10_000)
    assert len(capped.violations) == 2
    assert capped.total_violations == full.total_violations == len(full.violations)
    assert capped.violations == full.violations[:2]


def _random_rule(rng, space):
    return SelectionRule.from_function(space, lambda u: rng.random() < 0.5)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9))
def test_witness_validity(seed):
    rng = random.Random(seed)
    space = OutcomeSpace([[str(s) for s in range(rng.randint(1, 3))] for _ in range(rng.randint(1, 3))])
    rule = _random_rule(rng, space)
    elems = list(space.product())
    support = Support(rng.sample(elems, rng.randint(1, len(elems))), space)
    verdict = check_all_but_one(rule, space, support, max_witnesses=10_000)
    assert verdict.holds == (not verdict.violations)
    for k, u, v in verdict.violations:
        assert u in support and v in support
        diff = [i for i in range(space.parties) if u[i] != v[i]]
        assert diff == [k - 1]
        assert rule(u) != rule(v)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9))
def test_support_monotonicity(seed):
    rng = random.Random(seed)
    space = counts(rng.randint(2, 3), 2)
    rule = _random_rule(rng, space)
    elems = list(space.product())
    big = rng.sample(elems, rng.randint(1, len(elems)))
    if check_all_but_one(rule, space, big).holds:
        for _ in range(5):
            small = rng.sample(big, rng.randint(1, len(big)))
            assert check_all_but_one(rule, space, small).holds


def test_order_independent_of_support_listing():
    space = counts(2, 2)
    rule = parse_rule("a1 == 0", space)
    elems = list(space.product())
    a = check_all_but_one(rule, space, elems)
    b = check_all_but_one(rule, space, list(reversed(elems)))
    assert a == b


def test_rule_file_and_support_specs():
    space, support, rule = load_rule_file({
        "space": {"outcomes": [["0", "1", "2", "3"]] * 3},
        "support": "conservation:N=3,total=3",
        "rule": "forall p: count(p) == 1",
    })
    assert len(support) == 10 and check_all_but_one(rule, space, support).holds
    assert len(parse_support("full", space)) == 64
    assert len(parse_support([["0", "0", "3"], ["1", "1", "1"]], space)) == 2
    with pytest.raises(SelectionError):
        parse_support("conservation:N=2,total=3", space)
    with pytest.raises(SelectionError):
        parse_support("half", space)
    with pytest.raises(SelectionError):
        load_rule_file({"rule": "true"})


def test_rule_serialisation_round_trip():
    for rule in (parse_rule("a1 != a2", BITS), SelectionRule.from_function(BITS, lambda u: u[0] == "1")):
        _, _, back = load_rule_file(rule.to_dict())
        assert back.table == rule.table
