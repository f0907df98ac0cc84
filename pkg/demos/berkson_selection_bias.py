"""
Collider conditioning creates dependence
========================================

Beauty and talent are independent fair bits. Someone becomes a celebrity
when at least one of them is present. Among celebrities the two traits are
anticorrelated, although nothing links them causally.
"""

from bellpost import CausalGraph, d_separated
from bellpost.scm import berkson_demo

# the graph B -> C <- T
g = CausalGraph(["B", "T", "C"], [("B", "C"), ("T", "C")])
print("B, T separated given nothing:", bool(d_separated(g, "B", "T")))
print("B, T separated given C:      ", bool(d_separated(g, "B", "T", {"C"})))

# the blocking diagnosis behind each verdict
for given in [set(), {"C"}]:
    for verdict in d_separated(g, "B", "T", given).verdicts:
        print(f"  given {sorted(given)}: {verdict.path}  witnesses={verdict.witnesses}")

# exact numbers
_, summary = berkson_demo()
print("\nP(B, T | C = 1)")
for (b, t), p in summary.conditioned.items():
    print(f"  B={b} T={t}  {p}")
print("covariance given C = 1:", summary.covariance_conditioned)
print("mutual information (bits):", round(summary.mutual_information_conditioned, 6))
