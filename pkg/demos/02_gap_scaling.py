"""How the spectral gap and the success probability scale with lambda.

Larger boosts push electrons onto the final rows but close the gap above the
ground state.  A single boosted qubit has a gap falling as lambda^-2; every
teleportation box in series steepens the power law.
"""
import numpy as np

from gsqc import analysis as an
from gsqc import circuit as cc


def boosted_qubit(lam):
    b = cc.CircuitBuilder(cc.BuildOptions(lam=lam, hard_boundary=True))
    q = b.add_column("data:x0", cc.PLUS, role="data")
    b.data_map[0] = [q]
    b.boost(q)
    return b.build()


def teleport(chain):
    return lambda lam: cc.build_teleport_box(cc.BuildOptions(lam=lam, hard_boundary=True), source_input="+",
                                             chain=chain)


lams = np.geomspace(2, 20, 6)
for name, make in [("boosted qubit", boosted_qubit), ("teleport box", teleport(1)),
                   ("two teleport boxes", teleport(2))]:
    sweep = an.lambda_sweep(make, lams, degeneracy_tol=1e-13)
    print(f"{name:>20}: gap ~ lambda^-p with {sweep.gap_fit}  ({sweep.n_columns} columns)")

# Final-row probability against the (1 - C/lambda^2)^Q form, with C fitted.
lams = np.sqrt([20, 40, 80, 160, 320, 640, 1280])
sweep = an.lambda_sweep(teleport(1), lams, degeneracy_tol=1e-14, fit=False)
c_eff, rel = an.fit_c_eff(lams, sweep.p_all_final, sweep.n_columns)
print(f"\nteleport box: fitted C_eff = {c_eff:.3f} (bound 8)")
print("lambda^2   p_all_final   (1-C_eff/l^2)^Q   (1-8/l^2)^Q")
for lam, p in zip(lams, sweep.p_all_final):
    print(f"{lam**2:8.0f}   {p:.6f}      {(1 - c_eff / lam**2) ** sweep.n_columns:.6f}"
          f"        {(1 - 8 / lam**2) ** sweep.n_columns:.6f}")
