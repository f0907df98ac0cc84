import itertools
import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bellpost.inequality import (
    BellFunctional,
    DeterministicStrategy,
    ResourceError,
    ShapeError,
    chsh,
    evaluate,
    local_bound,
    normalization_functional,
    strategy_count,
    violation_report,
    zero_functional,
)
from bellpost.scm import (
    CONSERVATION_RULE,
    Behavior,
    conservation_bell_model,
    gisin_model,
    no_rejection_rule,
    particle_count_model,
    pr_box_behavior,
)
from bellpost.selection import SelectionError, SelectionRule, parse_rule

F = Fraction
BITS = ("0", "1")


def uniform(settings, outcomes):
    n = 1
    for o in outcomes:
        n *= len(o)
    return Behavior(settings, outcomes, {
        x: {a: F(1, n) for a in itertools.product(*outcomes)} for x in itertools.product(*settings)
    })


def random_functional(rng, settings, outcomes):
    coeffs = {
        (a, x): F(rng.randint(-4, 4), rng.randint(1, 3))
        for x in itertools.product(*settings)
        for a in itertools.product(*outcomes)
        if rng.random() < 0.7
    }
    return BellFunctional(settings, outcomes, coeffs)


def random_behavior(rng, settings, outcomes):
    table = {}
    for x in itertools.product(*settings):
        weights = [rng.randint(0, 5) for _ in itertools.product(*outcomes)]
        if not any(weights):
            weights[0] = 1
        total = sum(weights)
        table[x] = {a: F(w, total) for a, w in zip(itertools.product(*outcomes), weights)}
    return Behavior(settings, outcomes, table)


def test_chsh_values():
    assert evaluate(chsh(), pr_box_behavior()) == 4
    assert evaluate(chsh(), uniform((BITS, BITS), (BITS, BITS))) == 0
    zeros = DeterministicStrategy((BITS, BITS), (("0", "0"), ("0", "0")))
    assert evaluate(chsh(), zeros.behavior((BITS, BITS))) == 2


def test_chsh_local_bound():
    lb = local_bound(chsh())
    assert lb.value == 2 and lb.strategies_checked == 16
    assert lb.strategy.responses == (("0", "0"), ("0", "0"))
    assert evaluate(chsh(), lb.strategy.behavior((BITS, BITS))) == 2


def test_zero_and_normalization():
    shape = ((BITS, BITS), (BITS, BITS))
    assert local_bound(zero_functional(*shape)).value == 0
    assert evaluate(zero_functional(*shape), pr_box_behavior()) == 0
    assert local_bound(normalization_functional(*shape)).value == 4
    three = (("0", "1", "2"),) * 3
    assert local_bound(normalization_functional(three, ((BITS,) * 3))).value == 27


def test_resource_cap():
    big = normalization_functional((("0", "1", "2"),) * 3, (("0", "1", "2"),) * 3)
    assert strategy_count(big) == 3 ** 9
    with pytest.raises(ResourceError) as err:
        local_bound(big, cap=1000)
    assert err.value.size == 3 ** 9


def test_shape_errors():
    with pytest.raises(ShapeError):
        evaluate(chsh(), uniform((("0",), BITS), (BITS, BITS)))
    with pytest.raises(ShapeError):
        BellFunctional((BITS,), (BITS,), {(("2",), ("0",)): 1})
    with pytest.raises(ShapeError):
        chsh() + normalization_functional((BITS,), (BITS,))


def test_zero_extension_on_larger_alphabets():
    ext = chsh().extended([("0", "1", "bot")] * 2)
    assert local_bound(ext).value == 2
    assert ext.coefficient(("bot", "0"), ("0", "0")) == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_linearity(seed):
    rng = random.Random(seed)
    shape = ((BITS, ("0", "1", "2")), (("0", "1", "2"), BITS))
    f1, f2 = random_functional(rng, *shape), random_functional(rng, *shape)
    p = random_behavior(rng, *shape)
    assert evaluate(f1 + f2, p) == evaluate(f1, p) + evaluate(f2, p)
    assert evaluate(f1.scaled(3), p) == 3 * evaluate(f1, p)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_tightness_and_convexity(seed):
    rng = random.Random(seed)
    shape = ((BITS, BITS), (("0", "1", "2"), BITS))
    f = random_functional(rng, *shape)
    lb = local_bound(f)
    assert evaluate(f, lb.strategy.behavior(shape[1])) == lb.value
    strategies = [
        DeterministicStrategy(shape[0], combo)
        for combo in itertools.product(*[list(itertools.product(o, repeat=len(s))) for s, o in zip(*shape)])
    ]
    s1, s2 = rng.sample(strategies, 2)
    t = F(rng.randint(0, 8), 8)
    b1, b2 = s1.behavior(shape[1]), s2.behavior(shape[1])
    mix = Behavior(shape[0], shape[1], {
        x: {a: t * b1(a, x) + (1 - t) * b2(a, x) for a in b1.table[x]} for x in b1.table
    })
    assert evaluate(f, mix) <= lb.value
    assert all(evaluate(f, s.behavior(shape[1])) <= lb.value for s in strategies)


def test_ties_pick_lexicographically_smallest():
    rng = random.Random(2)
    for _ in range(20):
        f = random_functional(rng, (BITS, BITS), (BITS, BITS))
        lb = local_bound(f)
        first = None
        for combo in itertools.product(*[list(itertools.product(BITS, repeat=2))] * 2):
            s = DeterministicStrategy((BITS, BITS), combo)
            if evaluate(f, s.behavior((BITS, BITS))) == lb.value:
                first = combo
                break
        assert lb.strategy.responses == first


def test_functional_json_round_trip():
    f = chsh()
    back = BellFunctional.from_dict(json.loads(json.dumps(f.to_dict())))
    assert back.coefficients == f.coefficients and back.encoding == {"0": 1, "1": -1}
    with pytest.raises(ShapeError):
        BellFunctional.from_dict({"shape": {"settings": [["0"]]}})


def test_violation_report_gisin():
    m = gisin_model()
    rep = violation_report(chsh(), m, no_rejection_rule(m.outcomes))
    assert rep.value_full <= 2 and rep.value_postselected == 4 and rep.local_bound == 2
    assert rep.violated and not rep.all_but_one.holds and not rep.safety.safe


def test_violation_report_conservation():
    m = conservation_bell_model()
    rep = violation_report(chsh(), m, parse_rule(CONSERVATION_RULE, m.outcomes))
    assert rep.value_postselected <= 2 and rep.all_but_one.holds and rep.safety.safe
    assert not rep.violated


def test_constant_rule_changes_nothing():
    m = particle_count_model(2, 2)
    rep = violation_report(chsh().extended(m.outcomes.alphabets), m, SelectionRule.constant(m.outcomes))
    assert rep.value_postselected == rep.value_full


def test_constant_rule_on_targeted_model_is_refused():
    m = gisin_model()
    with pytest.raises(SelectionError):
        violation_report(chsh(), m, SelectionRule.constant(m.outcomes))
