"""What the detectors see from the pair source, and where the errors come from."""
import numpy as np

from ddqkd import ChannelParams, PdcSource, simulate, wstate_loss_qber
from ddqkd.channel import OUTCOMES

ch = ChannelParams(db_a=10.0, db_b=3.0, e=0.03, epsilon=1e-6)
sim = simulate(PdcSource(0.1), ch)

print("joint outcomes (rows Alice, columns Bob, labels relabeled to agree):")
print("      " + "".join("%12s" % o for o in OUTCOMES))
for name, row in zip(OUTCOMES, sim.outcome.probs):
    print("%5s " % name + "".join("%12.3e" % v for v in row))

print("\none photon at each side: p11=%.4e  q11=%.4f" % (sim.p11, sim.q11))
print("misalignment alone would give %.4f" % (2 * ch.e * (1 - ch.e)))

# the excess comes from multi-pair emissions that lost photons on the way;
# a two-pair emission with one photon lost is already far above the BB84 threshold
print("two pairs, one photon lost: QBER = %.4f" % wstate_loss_qber())

for lam in (1e-4, 1e-3, 1e-2, 1e-1):
    s = simulate(PdcSource(lam), ch)
    print("lambda=%-6g q11=%.5f" % (lam, s.q11))
