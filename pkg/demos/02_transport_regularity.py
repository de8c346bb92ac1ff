"""
Regularity of the stochastic transport solution
===============================================

The ratio kappa = int sigma^2 / int nu decides whether the solution is a
square-integrable variable, a Donsker delta, or a genuine distribution.
We tabulate the verdicts, evaluate the closed-form norms, and check one of
them against the Monte Carlo engine on the working Hermite basis.
"""
from __future__ import annotations

import math

from wnreg import bargmann as bg
from wnreg import transport as tr

for sigma_sq in (0.5, 1.0, 2.0):
    coeffs = tr.SteCoefficients.constant(1.0, sigma_sq)
    v = tr.classify_regularity(coeffs, 1.0)
    print(f"sigma^2 = {sigma_sq}: kappa = {v.kappa:g}, {v.regularity}, finite for s < {v.s_threshold:g}")

# a viscosity that blows up at time zero still gives a square-integrable solution
singular = tr.SteCoefficients(tr.PowerLawProfile(1.0, -0.5), tr.ConstantProfile(1.0))
print("singular viscosity:", tr.classify_regularity(singular, 1.0))

# norms in the scale of K = sqrt(2) Id: finite below the threshold, infinite at it
donsker = tr.SteCoefficients.constant(1.0, 1.0)
for s in (-2.0, -1.0, -0.1, 0.0):
    try:
        print(f"  s = {s:+.1f}: {tr.ste_norm(donsker, 1.0, 0.0, s):.6f}")
    except tr.DivergentNorm as err:
        print(f"  s = {s:+.1f}: diverges ({err})")

# the same number as a Donsker delta norm with |f|^2 = 1
print("Donsker delta at s = -1:", tr.donsker_norm(1.0, 0.0, -1.0), (2 / math.sqrt(3)) / (2 * math.pi))

# Monte Carlo on the U-functional projected to 600 basis functions
U = tr.ste_u_functional(donsker, 1.0, 0.0, max_rank=600)
est = bg.mc_projected_norm(U, tr.STE_OPERATOR, -1.0, 600, 20_000, bg.ComplexGaussianSampler(600, seed=2))
print(f"Monte Carlo {est.mean:.5f} +- {est.stderr:.5f}, rank-600 exact {est.exact:.5f}")

# at s = 0 the projected norms keep growing with the rank
ranks = [25, 50, 100, 200, 400]
U = tr.ste_u_functional(donsker, 1.0, 0.0, max_rank=ranks[-1])
curve = bg.norm_curve(U, tr.STE_OPERATOR, 0.0, ranks, None)
print([round(p.exact, 4) for p in curve])
print(bg.classify_membership(curve))
