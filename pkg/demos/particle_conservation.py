"""
Discarding rounds safely when particles are conserved
=====================================================

Two particles go to two parties. Only rounds with one particle per party
are kept. Since the total is fixed, either party can tell from its own count
whether the round survives, so the rule is all-but-one on the support.
"""

from bellpost.inequality import chsh, violation_report
from bellpost.scm import CONSERVATION_RULE, conservation_bell_model, model_support
from bellpost.selection import OutcomeSpace, check_all_but_one, conservation_support, parse_rule

# counting alone, for growing numbers of parties
for n in range(2, 6):
    space = OutcomeSpace([[str(c) for c in range(n + 1)]] * n)
    rule = parse_rule("forall p: count(p) == 1", space)
    on_support = check_all_but_one(rule, space, conservation_support(n, n))
    everywhere = check_all_but_one(rule, space)
    print(f"N={n}: conserved support {on_support.holds}, full product space {everywhere.holds} "
          f"({everywhere.total_violations} violating pairs)")

# a Bell test where a single particle is measured and reported as a bit
model = conservation_bell_model()
rule = parse_rule(CONSERVATION_RULE, model.outcomes)
print("\nsupport:", [",".join(u) for u in model_support(model)])
report = violation_report(chsh(), model, rule)
print(f"CHSH after selection: {report.value_postselected} <= {report.local_bound}")
print("safe:", report.safety.safe, " all-but-one:", report.all_but_one.holds)
