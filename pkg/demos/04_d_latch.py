"""A D latch follows D while enabled and holds once E drops.  Writes a timing diagram.

Run: python3 demos/04_d_latch.py [out.svg]
"""

import sys

from crnc.cases import demo_case
from crnc.kinetics import SimConfig, simulate
from crnc.signals import schedule_to_signal
from crnc.timing import write_timing_svg

case = demo_case("dlatch")
latch = case.target
sig = schedule_to_signal(case.schedule, latch.input_wires)
trace = simulate(latch.crn, latch.x0, sig, SimConfig.for_tau(case.tau, case.schedule.horizon))
for t in range(0, int(case.schedule.horizon) + 1, 2):
    i = min(range(len(trace.times)), key=lambda j: abs(trace.times[j] - t))
    print(f"t={t:4.1f}  Q={trace['Q'][i]:.3f}  Q_bar={trace['Q_bar'][i]:.3f}")

out = sys.argv[1] if len(sys.argv) > 1 else "d_latch.svg"
write_timing_svg(out, trace, title="D latch")
print("wrote", out)
