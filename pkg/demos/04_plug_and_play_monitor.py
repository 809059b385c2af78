"""Monitoring an untrusted source with a phase-tunable interferometer."""
import math

import numpy as np

from ddqkd import PhotonDist
from ddqkd.plugplay import PhaseSetting, estimate_input_stats, output_stats, pvac_phase

# the source is untrusted; here a three-point distribution stands in for it
incoming = PhotonDist([0.45, 0.35, 0.2])

phases = [PhaseSetting.for_survival(c).phi for c in (0.0, 0.25, 0.5, 0.75, 1.0)]
samples = {phi: pvac_phase(incoming, phi) for phi in phases}
for phi, p in samples.items():
    print("phi=%.4f  monitor no-click=%.6f" % (phi, p))

recovered = estimate_input_stats(samples, "truncated", K=2)
print("recovered input:", np.round(recovered.probs, 10))

# statistics of what actually leaves for the channel at a few phases
for phi in (math.pi / 3, math.pi / 2, math.pi):
    print("phi=%.3f  emitted:" % phi, np.round(output_stats(recovered, phi).probs, 6))

# three settings are enough for interval bounds on p1, p2
delta = 1e-4
few = [PhaseSetting.for_survival(c).phi for c in (0.0, delta, math.sqrt(delta))]
b = estimate_input_stats({phi: pvac_phase(incoming, phi) for phi in few}, "prop1")
print("p1 in [%.6f, %.6f]  p2 in [%.6f, %.6f]" % (b.x1_lo, b.x1_hi, b.x2_lo, b.x2_hi))
