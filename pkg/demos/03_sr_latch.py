"""Set, hold, reset and hold an SR latch built from two cross-coupled NANDs.

Run: python3 demos/03_sr_latch.py
"""

from crnc.cases import demo_case
from crnc.verification import robust_sweep

case = demo_case("sr")
for iv in case.intervals:
    print(f"  {iv.tag:>8} [{iv.t1:5.2f}, {iv.t2:5.2f}] expects {dict(iv.expected)}")

for noise in ("sinusoidal", "random"):
    report = robust_sweep(case.target, case.schedule, case.intervals, case.delta, trials=10, seed=3, noise=noise)
    print(noise, report.summary())
