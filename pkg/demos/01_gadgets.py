"""Building blocks of a ground-state circuit, one at a time.

Each qubit is an electron hopping down a column of rows; a gate is a hopping
term between consecutive rows, and the ground state of the summed terms is a
history state of the computation.  Run with ``python demos/01_gadgets.py``.
"""
import numpy as np

from gsqc import analysis as an
from gsqc import circuit as cc
from gsqc import hamiltonians as hm

# A Hadamard chain: the ground state spreads evenly over the rows and
# each row holds the state after that many gates.
g = cc.build_chain([hm.HADAMARD, hm.HADAMARD, hm.HADAMARD], "0")
sol = an.solve_circuit(g)
st = sol.state.normalized(warn=False)
rows = st.digits()[:, 0] // 2
print("Hadamard chain, E0 = %.2e" % sol.e0)
for r in range(g.columns[0].rows):
    print(f"  row {r}: weight {st.probabilities[rows == r].sum():.4f}")

# A boost term multiplies the final-row amplitude by lambda, so the
# electron is found there with probability lambda^2 / (1 + lambda^2).
for lam in (2.0, 10.0, 100.0):
    g = cc.build_chain([], "0", cc.BuildOptions(lam=lam, hard_boundary=True), close="boost")
    p = an.final_row_stats(g, an.solve_circuit(g).state).p_all_final
    print(f"boost lambda={lam:>5}: p_final {p:.6f}  (expected {lam**2 / (1 + lam**2):.6f})")

# CNOT between two columns; the control in |+> makes a Bell pair on the final rows.
g = cc.build_cnot_pair("+", "0")
sol = an.solve_circuit(g)
digits = sol.state.digits()
mask = np.all(digits // 2 == 1, axis=1)
amps = {}
for d, a in zip(digits[mask], sol.state.amplitudes[mask]):
    amps[f"{d[0] % 2}{d[1] % 2}"] = amps.get(f"{d[0] % 2}{d[1] % 2}", 0) + a
norm = np.sqrt(sum(abs(a) ** 2 for a in amps.values()))
print("CNOT on |+>|0>, final-row amplitudes:", {k: round(float(abs(v) / norm), 4) for k, v in sorted(amps.items())})

# The filter box enforces one clause: conditioned on every electron reaching
# its final row, only assignments with exactly one bit set survive.
g = cc.build_filter_box(cc.BuildOptions(lam=8, hard_boundary=True))
sol = an.solve_circuit(g, polish=True)
dist = an.conditional_assignments(g, sol.state)
print("filter box conditional distribution:",
      {b: round(p, 6) for b, p in dist.probabilities.items() if p > 1e-9})
print(f"  probability of the conditioning event: {dist.p_condition:.4f}")
