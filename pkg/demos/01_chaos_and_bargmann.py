"""
Chaos elements and the Bargmann-Segal norm engine
=================================================

Build a few chaos elements, look at their norms, and compare Monte Carlo
estimates of the projected complex-Gaussian integral with the exact values.
"""
from __future__ import annotations

import math

import numpy as np

from wnreg import bargmann as bg
from wnreg import chaos as ch

# Hermite polynomials with variance parameter 1: H_3(x) = x^3 - 3x
print("H_3(2) =", ch.hermite(3, 1.0, 2.0))

# a random element with chaos of order up to 3 in 2 coordinates
F = ch.random_chaos(np.random.default_rng(0), dim=2, max_order=3)
print("L2 norm^2:", round(ch.l2_norm_sq(F), 6))

# the weighted norm grows with s when K has spectrum above 1
K = ch.DiagonalOperator.uniform(math.sqrt(2.0))
for s in (-1.0, 0.0, 1.0):
    print(f"  s = {s:+.0f}: weighted norm^2 = {ch.gks_norm_sq(F, K, s):.6f}")

# Wick products multiply S-transforms
G = ch.first_chaos([1.0, -0.5])
phi = np.array([0.3 + 0.1j, -0.2j])
lhs = ch.s_transform(ch.wick_product(F, G), phi)
print("S(F<>G) - S(F) S(G) =", abs(lhs - ch.s_transform(F, phi) * ch.s_transform(G, phi)))

# the engine works on any U-functional; here the S-transform of F
U = bg.chaos_u_functional(F)
est = bg.mc_projected_norm(U, K, 1.0, 2, 200_000, bg.ComplexGaussianSampler(2, seed=1))
print(f"Monte Carlo {est.mean:.4f} +- {est.stderr:.4f}, exact {est.exact:.4f}")

# Wick exponential: the weighted norm at s = 1, K = sqrt(2) Id equals e^2
E = ch.wick_exponential([1.0], 30)
print("exact:", bg.exact_projected_norm(E, K, 1.0, 1), " e^2:", math.e ** 2)

# a norm curve over ranks, and the membership heuristic
E3 = ch.wick_exponential([1.0, 0.5, 0.25], 12)
curve = bg.norm_curve(E3, K, 1.0, [1, 2, 3, 4, 5, 6], None)
for point in curve:
    print(f"  rank {point.rank}: {point.exact:.6f}")
print(bg.classify_membership(curve))
