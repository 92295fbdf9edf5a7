"""Compile a four-gate XOR netlist and check its truth table under noise.

Run: python3 demos/02_xor_circuit.py
"""

from crnc.cases import demo_case
from crnc.circuits import XOR_SOURCE, all_vectors, eval_boolean, parse_netlist
from crnc.verification import robust_sweep

nl = parse_netlist(XOR_SOURCE)
for w in all_vectors(len(nl.inputs)):
    print(w, "->", eval_boolean(nl, w))

case = demo_case("xor")
circ = case.target
print(f"depth {circ.depth}, gate delay {circ.gate_tau:g}, {len(circ.crn.reactions)} reactions")
report = robust_sweep(circ, case.schedule, case.intervals, case.delta, trials=10, seed=2)
print(report.summary())
