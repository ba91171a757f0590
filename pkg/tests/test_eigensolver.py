import numpy as np
import pytest
import scipy.sparse as sp

from gsqc import circuit as cc
from gsqc import eigensolver as es
from gsqc import hamiltonians as hm
from gsqc import hilbert as hb
from gsqc.errors import ConvergenceError, ValidationError


def random_psd(n, seed, density=0.01, rank_deficit=3):
    """Sparse PSD matrix B^T B with a few exact zero modes."""
    rng = np.random.default_rng(seed)
    B = sp.random(n - rank_deficit, n, density=density, random_state=rng, format="csr")
    B = B + sp.eye(n - rank_deficit, n, format="csr")
    return (B.T @ B).tocsr()


def chain_hamiltonian(length):
    g = cc.build_chain([hm.I2] * (length - 1), "0", cc.BuildOptions(hard_boundary=True))
    return g.hamiltonian(g.reachable_basis())


def test_diag_example():
    res = es.lowest_eigenpairs(sp.diags([0.0, 2.0]).tocsr(), k=2)
    assert np.allclose(res.energies, [0, 2], atol=1e-14)
    assert res.gap == pytest.approx(2) and res.multiplicity == 1


def test_boost_null_vector():
    H = hm.h_boost(hb.make_basis([hb.QubitColumn(0, 2)]), 0, 1, 2.0).toarray()
    bit0 = H[np.ix_([0, 2], [0, 2])]
    res = es.lowest_eigenpairs(bit0, k=2)
    assert abs(res.ground_energy) <= 1e-14
    assert np.allclose(np.abs(res.ground_vector), np.array([1, 2]) / np.sqrt(5), atol=1e-14)


@pytest.mark.parametrize("method", ["shift-invert", "lanczos"])
def test_random_psd_matches_dense(method):
    H = random_psd(500, seed=1)
    res = es.lowest_eigenpairs(H, k=6, method=method, tol=1e-9)
    w, v = es.dense_eigenpairs(H, 6)
    assert np.allclose(res.energies, w, atol=1e-8)
    assert res.multiplicity == 3
    assert np.max(es.principal_angles(res.vectors, v)) <= 1e-6
    assert np.all(res.residuals <= 1e-9)
    gram = res.vectors.conj().T @ res.vectors
    assert np.allclose(gram, np.eye(6), atol=1e-8)


def test_gap_of_examples():
    assert es.gap_of(sp.diags([0.0, 0.0, 1.0]).tocsr()) == (0.0, 1.0, 2)
    H = chain_hamiltonian(3)
    e0, gap, mult = es.gap_of(H)
    w = np.linalg.eigvalsh(H.toarray())
    assert mult == 1 and abs(e0) <= 1e-10
    assert gap == pytest.approx(w[1] - w[0], abs=1e-10)


def test_gap_of_decoupled_columns():
    A, B = chain_hamiltonian(2), chain_hamiltonian(3)
    H = (sp.kron(A, sp.eye(B.shape[0])) + sp.kron(sp.eye(A.shape[0]), B)).tocsr()
    gaps = [es.gap_of(X)[1] for X in (A, B)]
    assert es.gap_of(H)[1] == pytest.approx(min(gaps), abs=1e-10)


def test_gap_of_caps_k_when_all_degenerate():
    e0, gap, mult = es.gap_of(sp.csr_matrix((20, 20)), k_max=8)
    assert gap is None and mult == 8 and e0 == 0


def test_deterministic_for_fixed_seed():
    H = random_psd(800, seed=4)
    a = es.lowest_eigenpairs(H, k=4, seed=7)
    b = es.lowest_eigenpairs(H, k=4, seed=7)
    assert np.array_equal(a.energies, b.energies) and np.array_equal(a.vectors, b.vectors)
    c = es.lowest_eigenpairs(H, k=4, seed=8)
    assert np.allclose(a.energies, c.energies, atol=1e-9)


def test_complex_hermitian():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((60, 60)) + 1j * rng.standard_normal((60, 60))
    H = sp.csr_matrix(X.conj().T @ X)
    res = es.lowest_eigenpairs(H, k=3)
    assert np.allclose(res.energies, np.linalg.eigvalsh(H.toarray())[:3], atol=1e-8)


def test_errors():
    with pytest.raises(ValidationError):
        es.lowest_eigenpairs(sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 1.0]])), k=2)
    with pytest.raises(ValidationError):
        es.lowest_eigenpairs(sp.eye(3).tocsr(), k=4)
    with pytest.raises(ConvergenceError):
        es.lowest_eigenpairs(random_psd(1500, seed=3), k=4, method="lanczos", ncv=9, max_restarts=1, tol=1e-12)


def test_eigenvector_dump_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    v = rng.standard_normal((17, 3)) + 1j * rng.standard_normal((17, 3))
    path = tmp_path / "v.bin"
    es.write_eigenvectors(path, v)
    raw = path.read_bytes()
    assert raw[:8] == es.DUMP_MAGIC and len(raw) == 24 + 17 * 3 * 16
    assert np.array_equal(es.read_eigenvectors(path), v)
    es.write_eigenvectors(path, v[:, 0].real)
    assert np.array_equal(es.read_eigenvectors(path)[:, 0], v[:, 0].real)
    path.write_bytes(b"nonsense" * 4)
    with pytest.raises(ValidationError):
        es.read_eigenvectors(path)
