"""
Feynman-Kac bounds for the stochastic heat equation
===================================================

Second moments of the Skorokhod and Stratonovich solutions are averages of
exponentials of the noise energy between two independent Brownian paths.
"""
from __future__ import annotations

import math

import numpy as np

from wnreg import heat as ht

# with constant covariances everything is deterministic
ones = ht.NoiseCovariance(ht.ConstantTemporal(1.0), ht.ConstantSpatial(1.0))
b = ht.fk_bounds(ones, ht.ConstantInitial(1.0), 1.0, 0.0, 0.5, 100, 8)
print("skorokhod", b["skorokhod"].mean, "vs", math.exp(1.0))
print("stratonovich", b["stratonovich"].mean, "vs", math.exp(2.0))

# fractional-type temporal covariance and a Gaussian spatial one
cov = ht.NoiseCovariance(ht.PowerTemporal(1.0, 0.5), ht.GaussianSpatial(1.0, 1.0))
u0 = ht.GaussianBumpInitial(1.0, 0.0, 1.0)
for lam in (0.0, 0.25, 0.5, 1.0):
    b = ht.fk_bounds(cov, u0, 1.0, 0.0, lam, 4000, 32, seed=3)
    sk, st = b["skorokhod"], b["stratonovich"]
    print(f"lambda = {lam:4}: skorokhod {sk.mean:.4f} +- {sk.stderr:.4f}, "
          f"stratonovich {st.mean:.4f} +- {st.stderr:.4f}")

# the pathwise energy is the limit of mollified, time-averaged products
X, Y = ht.sample_bm_pair(1, 1.0, 64, 0.0, np.random.default_rng(5))
target = ht.cross_energy(cov, X, Y, 1.0)
for j in (2, 4, 6, 8):
    val = ht.regularized_inner_product(cov, X, Y, 1.0, 2.0 ** -j, 2.0 ** -j)
    print(f"  eps = delta = 2^-{j}: {val:.6f} (energy {target:.6f})")
