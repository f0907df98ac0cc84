"""
A local model that fakes a PR box after post-selection
======================================================

The hidden variable carries a guess (xh, yh) of the settings and a random
bit r. A party whose setting disagrees with the guess reports bot. Keeping
only rounds without bot leaves exactly the rounds where both guesses were
right, and there the outcomes obey a xor b = x y.
"""

from bellpost.inequality import chsh, violation_report
from bellpost.scm import behavior, gisin_model, no_rejection_rule, postselect

model = gisin_model()
rule = no_rejection_rule(model.outcomes)
print("selection rule:", rule.source)

full = behavior(model)
post, safety = postselect(model, rule)
print("\nacceptance per setting:", {",".join(x): str(p) for x, p in safety.acceptance.items()})

print("\npost-selected statistics P(a, b | x, y, K = 1)")
for x, row in post.table.items():
    kept = {"".join(a): str(p) for a, p in row.items() if p}
    print(f"  x,y = {','.join(x)}: {kept}")

report = violation_report(chsh(), model, rule)
print(f"\nCHSH: I(P) = {report.value_full}, I(P_K) = {report.value_postselected}, local bound {report.local_bound}")

# the rule reads every outcome, so it is not all-but-one
print("all-but-one holds:", report.all_but_one.holds, f"({report.all_but_one.total_violations} violating pairs)")
print("free-choice residual:", safety.free_choice_residual)
print("locality residual:", safety.locality_residual)
