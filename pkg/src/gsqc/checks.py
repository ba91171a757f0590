"""Invariant checks on small built-in fixtures, run by ``gsqc verify``.

Each check returns ``(ok, detail)``; identifiers name the module and the
invariant so a failure points at what broke.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from . import analysis as an
from . import circuit as cc
from . import hamiltonians as hm
from . import hilbert as hb
from . import instances as inst
from .eigensolver import dense_eigenpairs, lowest_eigenpairs


def _row_norms(graph, state):
    digits = state.digits()
    p = state.normalized(warn=False).probabilities
    return np.array([p[digits[:, 0] // 2 == r].sum() for r in range(graph.columns[0].rows)])


def check_basis_roundtrip(rng):
    space = hb.BasisSpace([hb.QubitColumn(0, 3), hb.QubitColumn(1, 2), hb.QubitColumn(2, 4)])
    idx = rng.integers(0, space.dim, 50)
    ok = np.array_equal(space.encode(space.decode(idx)), idx)
    return ok, ""


def check_hermitian_psd(rng):
    worst = 0.0
    for g in (cc.build_cnot_pair("+", "0"), cc.build_teleport_box(), cc.build_pentagon(("+", "+", "0"))):
        H = g.hamiltonian()
        if not hb.is_hermitian(H):
            return False, "non-Hermitian assembly"
        worst = min(worst, float(np.linalg.eigvalsh(H.toarray())[0]))
    return worst >= -1e-9, f"min eigenvalue {worst:.3e}"


def check_history_state(rng):
    gates = [hm.I2, hm.HADAMARD, hm.I2, hm.HADAMARD, hm.I2]
    g = cc.build_chain(gates, "0")
    sol = an.solve_circuit(g, sector=False)
    norms = _row_norms(g, sol.state)
    ok = sol.e0 <= 1e-9 and np.ptp(norms) <= 1e-10
    return ok, f"E0 {sol.e0:.2e}, row-norm spread {np.ptp(norms):.2e}"


def check_boost_law(rng):
    lam = 10.0
    g = cc.build_chain([], "0", cc.BuildOptions(lam=lam), close="boost")
    sol = an.solve_circuit(g, sector=False)
    p = an.final_row_stats(g, sol.state).p_all_final
    return abs(p - lam**2 / (1 + lam**2)) <= 1e-8, f"p_final {p:.12f}"


def check_cnot_block(rng):
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    worst = 1.0
    for c in "01":
        for t in "01":
            g = cc.build_cnot_pair(c, t)
            sol = an.solve_circuit(g, sector=False)
            out = conditional_row_state(g, sol.state, [1, 1])
            want = cnot @ np.kron(cc.input_state(c), cc.input_state(t))
            worst = min(worst, abs(np.vdot(want, out)) ** 2)
    return worst >= 1 - 1e-9, f"min fidelity {worst:.12f}"


def check_pentagon(rng):
    bad = []
    for bits in range(8):
        lab = [str((bits >> (2 - n)) & 1) for n in range(3)]
        g = cc.build_pentagon(lab)
        sol = an.solve_circuit(g, sector=False)
        out = np.abs(conditional_row_state(g, sol.state, [c.rows - 1 for c in g.columns])) ** 2
        j, k, t = (int(x) for x in lab)
        want = (j << 2) | (k << 1) | (t ^ (j & k))
        if abs(out[want] - 1) > 1e-9:
            bad.append("".join(lab))
    return not bad, f"wrong rows {bad}" if bad else ""


def check_filter_box(rng):
    g = cc.build_filter_box(cc.BuildOptions(lam=8, hard_boundary=True))
    sol = an.solve_circuit(g, polish=True)
    dist = an.conditional_assignments(g, sol.state)
    return dist.support() == {"001", "010", "100"}, str(dist.to_dict())


def check_layouts(rng):
    msgs = []
    g = cc.build_sat_circuit(inst.ExactCoverInstance(4, ((0, 1, 2), (1, 2, 3))))
    r = cc.validate_layout(g)
    msgs += r.violations
    t = cc.build_sat_circuit(inst.ExactCoverInstance(3, ((0, 1, 2),)), cc.BuildOptions(teleport=True))
    rt = cc.validate_layout(t)
    msgs += rt.violations
    if t.n_columns != 25:
        msgs.append(f"teleported clause has {t.n_columns} columns")
    return not msgs, "; ".join(msgs)


def check_json_roundtrip(rng):
    g = cc.build_filter_box()
    g2 = cc.CircuitGraph.from_json(g.to_json())
    H1, H2 = g.hamiltonian(), g2.hamiltonian()
    return abs(H1 - H2).max() == 0, ""


def check_oracle_ratio(rng):
    for n in (3, 6, 12):
        prof = inst.ratio_profile(inst.generate(n, 1, int(rng.integers(1 << 30))))
        if prof.ratios[0] != Fraction(8, 3):
            return False, f"N={n}: ratio {prof.ratios[0]}"
    return True, ""


def check_solver(rng):
    worst = 0.0
    for _ in range(3):
        n = int(rng.integers(50, 200))
        A = sp.random(n, n, density=0.05, random_state=int(rng.integers(1 << 30)))
        H = (A @ A.T).tocsr()
        w = dense_eigenpairs(H, 3)[0]
        r = lowest_eigenpairs(H, k=3)
        worst = max(worst, float(np.max(np.abs(r.energies - w))))
    return worst <= 1e-8, f"max deviation {worst:.2e}"


def conditional_row_state(graph, state, rows) -> np.ndarray:
    """Normalized bit amplitudes given each column at the listed row (first column = MSB)."""
    digits = state.digits()
    mask = np.all(digits // 2 == np.asarray(rows)[None, :], axis=1)
    idx = np.zeros(mask.sum(), dtype=np.int64)
    for q in range(graph.n_columns):
        idx = (idx << 1) | (digits[mask, q] % 2)
    out = np.zeros(2**graph.n_columns, dtype=complex)
    np.add.at(out, idx, state.amplitudes[mask])
    n = np.linalg.norm(out)
    return out / n if n else out


CHECKS = [
    ("hilbert.encode_decode_roundtrip", check_basis_roundtrip),
    ("hamiltonians.hermitian_psd", check_hermitian_psd),
    ("hamiltonians.history_state_equal_rows", check_history_state),
    ("hamiltonians.boost_law", check_boost_law),
    ("hamiltonians.cnot_block", check_cnot_block),
    ("circuit.pentagon_truth_table", check_pentagon),
    ("circuit.filter_box_support", check_filter_box),
    ("circuit.layout_valid", check_layouts),
    ("circuit.json_roundtrip", check_json_roundtrip),
    ("instances.single_clause_ratio", check_oracle_ratio),
    ("eigensolver.dense_agreement", check_solver),
]


def run_all(seed: int = 0):
    rng = np.random.default_rng(seed)
    for ident, fn in CHECKS:
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failed invariant
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        yield ident, bool(ok), detail
