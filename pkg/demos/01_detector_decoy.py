"""Bounding photon-number probabilities from threshold-detector no-click rates."""
import math

import numpy as np

from ddqkd import PhotonDist, convergence_sweep, prop1_bounds, pvac_ideal, truncated_solve

# a small hand-made distribution first
x = PhotonDist([0.5, 0.3, 0.2])
f = lambda c: pvac_ideal(x, 1 - c)  # no-click rate as a function of c = 1 - eta
b = prop1_bounds(f(0), f(0.1), f(0.3), 0.1, 0.3)
print("x1 in [%.5f, %.5f]  x2 in [%.5f, %.5f]" % (b.x1_lo, b.x1_hi, b.x2_lo, b.x2_hi))

# a Poisson source; the intervals shrink linearly with delta
mu = 0.8
poisson = PhotonDist.poisson(mu, 30)
print("\nPoisson mu=%.1f: p1=%.6f p2=%.6f" % (mu, poisson[1], poisson[2]))
for delta, bd in zip([1e-1, 1e-2, 1e-3, 1e-4], convergence_sweep(poisson, [1e-1, 1e-2, 1e-3, 1e-4])):
    print("delta=%-6g x1 in [%.6f, %.6f]  x2 in [%.6f, %.6f]"
          % (delta, bd.x1_lo, bd.x1_hi, bd.x2_lo, bd.x2_hi))

# with many settings and a short support, a least-squares solve is exact
etas = np.linspace(0, 1, 11)
samples = {eta: pvac_ideal(x, eta) for eta in etas}
print("\nleast squares:", np.round(truncated_solve(samples, 2).probs, 12))
