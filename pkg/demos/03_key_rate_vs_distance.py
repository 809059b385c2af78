"""Optimized key rate against total loss for the six rate bounds."""
from ddqkd.channel import ChannelParams
from ddqkd.keyrate import Protocol, Scenario, distance_sweep, max_distance

base = ChannelParams(0.0, 3.0, e=0.03, epsilon=1e-6)
scenarios = list(Scenario)
rows = distance_sweep(3.0, range(0, 61, 10), base, Protocol.BB84, scenarios, threads=4)

print("%6s" % "db_tot" + "".join("%14s" % sc.value for sc in scenarios))
for i in range(0, len(rows), len(scenarios)):
    chunk = rows[i:i + len(scenarios)]
    print("%6g" % chunk[0].db_tot + "".join("%14.3e" % max(r.rate, 0) for r in chunk))

# how much distance does counting the vacuum contribution buy?
grid = [float(d) for d in range(0, 81)]
with_g0 = max_distance(3.0, grid, base, Protocol.BB84, Scenario.DOUBLE)
without = max_distance(3.0, grid, base, Protocol.BB84, Scenario.DOUBLE, include_vacuum=False)
print("\nlast positive db_tot: %g with vacuum gain, %g without" % (with_g0, without))

# the 6-state measurement has no squash model, so that bound is skipped there
six = distance_sweep(3.0, [20.0], base, Protocol.SIX_STATE, [Scenario.SINGLE, Scenario.PNR])
for r in six:
    print("6-state %-7s at db_tot=%g: %.3e" % (r.scenario.value, r.db_tot, r.rate))
