"""Evaluate the two comparison bounds over the 81-point parameter grid.

The phase-1 bound clears 3/5 everywhere.  The restoration bound meets its
time budget on only part of the grid; the failing points are listed with
the inequality that breaks.

Run: python3 demos/06_lemma_grid.py
"""

from crnc.verification import LemmaPreconditionError, admissible_grid, lemma3_closed_form, lemma4_convergence_time

ok = 0
for lp in admissible_grid():
    x = float(lemma3_closed_form(lp, lp.tau / 2))
    try:
        T = lemma4_convergence_time(lp)
        verdict = "ok" if T <= lp.tau / 2 else f"T={T:.3f} > tau/2"
    except LemmaPreconditionError as exc:
        T, verdict = None, f"fails {exc.inequality}"
    ok += verdict == "ok"
    print(f"d1={lp.delta1:<5} d={lp.d:<6} p={lp.p:<4} ktau={lp.ktau:<4g} x(tau/2)={x:.4f}  {verdict}")
print(f"{ok}/81 points meet the restoration time budget")
