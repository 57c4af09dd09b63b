"""
Ranking distributions over agent scores
=======================================

A region is matched to a candidate not by its raw similarity score but
by the full probability distribution over rank orderings that its
scores induce. This script builds those distributions for a toy score
vector and shows the properties the matcher relies on.
"""

import numpy as np

from rim.matching import permutation_probability, permutation_table, ranking_distribution

# Three agents with positive scores. The probability of an ordering is
# the chain of "pick the next item proportionally to its score among
# the remaining ones".
scores = np.array([0.5, 0.3, 0.2])

print("scores:", scores.tolist())
print()

table = permutation_table(3)
dist = ranking_distribution(scores)
for perm, p in zip(table, dist.probs):
    chain = " > ".join(str(i) for i in perm)
    print(f"  P({chain}) = {p:.6f}")
print(f"  total       = {dist.probs.sum():.12f}")
print()

# Two of these values can be checked by hand:
#   P(0 > 1 > 2) = 0.5/1.0 * 0.3/0.5 = 0.30
#   P(2 > 1 > 0) = 0.2/1.0 * 0.3/0.8 = 0.075
assert abs(permutation_probability(scores, (0, 1, 2)) - 0.3) < 1e-12
assert abs(permutation_probability(scores, (2, 1, 0)) - 0.075) < 1e-12

# The distribution only sees score ratios; rescaling changes nothing.
scaled = ranking_distribution(1000.0 * scores)
print("max |P - P_scaled| =", float(np.abs(dist.probs - scaled.probs).max()))

# Marginal of "agent i ranked first" collapses back to the score share.
for i in range(3):
    marginal = dist.probs[table[:, 0] == i].sum()
    print(f"P(rank 1 = {i}) = {marginal:.4f}   score share = {scores[i] / scores.sum():.4f}")
