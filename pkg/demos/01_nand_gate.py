"""A single NAND gate under sinusoidal rate noise and noisy inputs.

Run: python3 demos/01_nand_gate.py
"""

from crnc.cases import demo_case
from crnc.verification import robust_sweep

case = demo_case("nand")
gate = case.target
print(f"{gate.kind}: {len(gate.crn.reactions)} reactions, tau={case.tau}, delta={case.delta}")
for rx in gate.crn.reactions:
    print("  ", rx)

report = robust_sweep(gate, case.schedule, case.intervals, case.delta, trials=20, seed=1)
print(report.summary())
