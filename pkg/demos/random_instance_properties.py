"""Structural identities on a stream of seeded random instances.

Draws reproducible habitats (grid size, kernel family and width,
heterogeneous coefficients, dispersal rate) and checks, instance by
instance, the identities the threshold theory rests on:

  * the reproduction number sits on the same side of 1 as the growth rate,
  * the growth rate scales as d * growth(1, gap/d),
  * it never increases with the dispersal rate.

The same suite runs as the ``verify`` scenario of the config runner.
"""

import numpy as np

from nonlocal_sis import basic_reproduction_number, infection_growth_rate
from nonlocal_sis.experiments import random_instance, run_verify_suite

rng = np.random.default_rng(12345)
print(" n  kernel               d_I      growth       r0   consistent")
for _ in range(10):
    inst = random_instance(rng)
    K = inst.dispersal
    d = inst.params.d_I
    mu = infection_growth_rate(K, d, inst.gap).value
    r0 = basic_reproduction_number(K, d, inst.beta, inst.gamma).value
    consistent = abs(mu) <= 1e-8 or np.sign(r0 - 1.0) == np.sign(mu)
    print(f"{inst.grid.n:3d}  {inst.kernel.family:<18s} {d:7.3f}  "
          f"{mu:+9.4f}  {r0:7.4f}   {consistent}")

print("\nscaling identity growth(d, m) = d * growth(1, m/d):")
inst = random_instance(np.random.default_rng(7))
K, d, m = inst.dispersal, inst.params.d_I, inst.gap
direct = infection_growth_rate(K, d, m).value
scaled = d * infection_growth_rate(K, 1.0, m / d).value
print(f"  direct {direct:.15f}")
print(f"  scaled {scaled:.15f}")

print("\nfull seeded property suite (40 instances):")
outcome = run_verify_suite(seed=7, instances=40)
for name, count in outcome["by_check"].items():
    print(f"  {name:<26s} {count}/{outcome['instances']}")
print("failures:", outcome["failed"])
