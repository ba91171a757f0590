import numpy as np

from gsqc import circuit as cc
from gsqc import hamiltonians as hm
from gsqc.analysis import CircuitState


def dense_ground(graph, boundary=None, sector=True):
    """Ground state by full dense diagonalization (oracle for small circuits).

    Returns (energies, CircuitState in the standard frame).
    """
    boundary = boundary or graph.options.boundary
    if sector:
        basis = graph.reachable_basis(boundary=boundary)
    else:
        real = hm.realize(graph.space, graph.terms, boundary)
        from gsqc.hilbert import Subspace
        basis = Subspace(graph.space, graph.space.states[real.keep_mask(graph.space, graph.space.states)])
    H = graph.hamiltonian(basis=basis, boundary=boundary).toarray()
    w, v = np.linalg.eigh(H)
    states, amps = basis.states, v[:, 0]
    if boundary == "hard":
        real = hm.realize(graph.space, graph.terms, boundary)
        states, amps = hm.frame_to_standard(graph.space, real, states, amps)
    return w, CircuitState(graph.space, states, amps)


def rows_state(state, rows, cols=None):
    """Normalized amplitudes over the bits of ``cols`` given every column at ``rows``.

    ``rows`` lists one row per column; the first listed column is the most significant bit.
    """
    digits = state.digits()
    mask = np.all(digits // 2 == np.asarray(rows)[None, :], axis=1)
    cols = range(digits.shape[1]) if cols is None else cols
    idx = np.zeros(mask.sum(), dtype=np.int64)
    for q in cols:
        idx = (idx << 1) | (digits[mask, q] % 2)
    out = np.zeros(2 ** len(list(cols)), dtype=complex)
    np.add.at(out, idx, state.amplitudes[mask])
    n = np.linalg.norm(out)
    return out / n if n else out


def boosted_qubit(lam, hard_boundary=False, prep_rows=False):
    """One data column prepared in |+> and closed by a boost of ``lam``."""
    b = cc.CircuitBuilder(cc.BuildOptions(lam=lam, hard_boundary=hard_boundary, prep_rows=prep_rows))
    q = b.add_column("data:x0", cc.PLUS, role="data")
    b.data_map[0] = [q]
    b.boost(q)
    return b.build()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
