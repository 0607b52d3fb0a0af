"""
Local time and self-intersection energy
=======================================

Phi is the integral of the squared local time, which reduces to a sum of
unit-cube overlap volumes over ordered site pairs.  A cell list keeps it
linear in the number of sites.
"""
import time

import numpy as np

from manifold_mc import ModelParams, apply_drift, local_time_histogram, sample_prior
from manifold_mc import brute_force_energy, energy_by_quadrature, self_intersection_energy

# two sites half a unit apart: 2 diagonal + 2 * 0.5 overlap
print("Phi({0, 0.5}) =", self_intersection_energy(np.array([0.0, 0.5])).total)

# the pair formula against a direct integral of the local time
pts = np.random.default_rng(0).normal(size=(12, 2))
print("pair sum:", self_intersection_energy(pts).total, " quadrature:", energy_by_quadrature(pts, 1e-3))

params = ModelParams.create(8, 2, D=1)
_, u = sample_prior(params, seed=3)
hist = local_time_histogram(u)
print("busiest unit cells:", sorted(hist.items(), key=lambda kv: -kv[1])[:3])

# stretching with a linear drift spreads the sites and lowers Phi
for a in (0.0, 0.5, 2.0):
    e = self_intersection_energy(apply_drift(u, a))
    print(f"a={a}: Phi={e.total:.1f} (diagonal {e.diagonal:.0f})")

big = np.random.default_rng(1).normal(scale=8.0, size=(3000, 1))
t = time.perf_counter()
fast = self_intersection_energy(big).total
t_fast = time.perf_counter() - t
t = time.perf_counter()
slow = brute_force_energy(big)
print(f"cell list {t_fast * 1e3:.1f} ms vs brute force {(time.perf_counter() - t) * 1e3:.1f} ms, "
      f"difference {abs(fast - slow):.1e}")
