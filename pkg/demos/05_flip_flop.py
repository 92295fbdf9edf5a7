"""A master-slave flip-flop: Q may change only shortly after a falling clock edge.

Run: python3 demos/05_flip_flop.py
"""

from crnc.cases import check_flip_flop, demo_case
from crnc.kinetics import SimConfig, measure, simulate
from crnc.model import Context
from crnc.signals import schedule_to_signal

case = demo_case("dff")
ff = case.target
sig = schedule_to_signal(case.schedule, ff.input_wires)
trace = simulate(ff.crn, ff.x0, sig, SimConfig.for_tau(case.tau, case.schedule.horizon))
out = measure(trace, Context(sig, ("Q", "Q_bar")))
check = check_flip_flop(out, case.schedule, case.tau, case.delta.eps)
for a, b, level, dist in check.gaps:
    print(f"  [{a:5.2f}, {b:5.2f}] Q={level}  distance {dist:.4f}")
print("PASS" if check.passed else "FAIL", f"worst {check.worst_distance:.4f} (eps {check.eps})")
