"""
Mechanised proof that all-but-one selection is safe
===================================================

For every party k the chain of conditional independencies is checked on the
Bell graph with the single arrow a_k -> K removed. Removing that arrow is
legitimate when K can be computed without a_k.
"""

from bellpost.scenario import bell_graph, verify_erasure_necessity, verify_theorem

g = bell_graph(3, erased_arrow=2)
print("edges into K with a2 -> K erased:", sorted(u for u, v in g.edges if v == "K"))

# three parties, every path and the rule that blocks it
print(verify_theorem(3).to_text())

# the same free-choice claims fail when every arrow into K is kept
print()
print(verify_erasure_necessity(3).to_text())

# larger scenarios only report the verdict
for n in range(2, 9):
    report = verify_theorem(n)
    print(f"N={n}: {len(report.claims):3d} claims, overall {'PASS' if report.overall else 'FAIL'}, "
          f"necessity {'PASS' if verify_erasure_necessity(n).holds else 'FAIL'}")
