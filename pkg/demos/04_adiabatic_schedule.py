"""Gap along the three-stage adiabatic schedule for one filter box.

Stage 1 starts with every electron pinned to its first row.  Stage 2 opens
the first hop (1/lambda' from 0 to 1) with lambda = 1.  Stage 3 raises lambda
towards sqrt(D N).  The minimum gap sets the run time, T ~ 1/gap^2.
"""
from gsqc import analysis as an
from gsqc import circuit as cc

g = cc.build_filter_box(cc.BuildOptions(prep_rows=True))
trace = an.schedule_trace(g, D=10.0, grid=(6, 8))
print(f"first-row occupation at the start: {trace.rows[0].p_first:.6f}")
print("stage    s        E0          gap")
for r in trace.rows:
    gap = "unresolved" if r.gap is None else f"{r.gap:.4e}"
    print(f"{r.stage:<6} {r.s:7.4f}  {r.e0: .2e}  {gap}")
gap, stage, s = trace.min_gap
print(f"\nstage-3 gap non-increasing: {trace.monotone}")
print(f"minimum gap {gap:.4e} in stage {stage} at s = {s:.4f}; T ~ {trace.runtime_scale:.3g}")
