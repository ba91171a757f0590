"""Lowest eigenpairs of sparse Hermitian operators.

The core is a symmetric Krylov-Schur (thick-restart Lanczos) iteration with
full reorthogonalization.  It runs on one of two operators:

* ``"lanczos"``: ``-H`` through matvecs only;
* ``"shift-invert"``: ``(H + sigma)^-1`` through a sparse LU factorization.

Circuit Hamiltonians have spectral widths of order the boundary energy E while
the gaps above the null state shrink like a high power of 1/lambda, so
shift-invert is the default whenever the factorization fits (``lu_max_dim``).

Degenerate eigenvalues are resolved by explicit deflation: converged vectors
are locked and each further run starts from a random vector orthogonal to
them, followed by a verification run in the remaining complement.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, ValidationError

DEGENERACY_TOL = 1e-8
DEFAULT_TOL = 1e-9
LU_MAX_DIM = 400_000
SI_SHIFT = 1e-11
DUMP_MAGIC = b"GSQCEV01"


@dataclass
class GroundStateResult:
    energies: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    multiplicity: int
    gap: float | None
    method: str = ""
    iterations: int = 0
    notes: list = field(default_factory=list)

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    @property
    def ground_vector(self) -> np.ndarray:
        return self.vectors[:, 0]


# ---------------------------------------------------------------- helpers


def check_hermitian(H, tol: float = 1e-12, rng=None):
    if sp.issparse(H):
        diff = (H - H.conj().T).tocsr()
        err = float(np.max(np.abs(diff.data))) if diff.nnz else 0.0
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        n = H.shape[0]
        x, y = rng.standard_normal(n), rng.standard_normal(n)
        err = abs(np.vdot(x, H @ y) - np.conj(np.vdot(y, H @ x))) / max(1.0, np.linalg.norm(x) * np.linalg.norm(y))
    if err > tol:
        raise ValidationError(f"operator is not Hermitian (max |H - H^dag| = {err:.3e})")


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    if v[k] == 0:
        return v
    return v * (abs(v[k]) / v[k])


def _orthogonalize(w, Q):
    if Q is None or Q.shape[1] == 0:
        return w
    for _ in range(2):
        w = w - Q @ (Q.conj().T @ w)
    return w


def _random_start(n, dtype, rng, Q):
    v = rng.standard_normal(n)
    if np.iscomplexobj(np.zeros(1, dtype)):
        v = v + 1j * rng.standard_normal(n)
    v = _orthogonalize(v.astype(dtype), Q)
    return v / np.linalg.norm(v)


def _krylov_schur(apply, n, nev, ncv, converged, rng, Q, dtype, max_restarts):
    """Largest ``nev`` eigenpairs of the Hermitian operator ``apply`` on the
    complement of ``Q``.  ``converged(v)`` judges a unit Ritz vector.
    Returns (theta, vectors, n_converged, n_applies)."""
    avail = n - (0 if Q is None else Q.shape[1])
    if avail <= 0:
        return np.zeros(0), np.zeros((n, 0), dtype), 0, 0
    ncv = int(min(max(ncv, 2 * nev + 1), avail))
    nev = min(nev, ncv)
    V = np.zeros((n, ncv + 1), dtype=dtype)
    T = np.zeros((ncv, ncv), dtype=dtype)
    V[:, 0] = _random_start(n, dtype, rng, Q)
    start = 0
    applies = 0
    beta = 0.0
    stalled = 0
    for restart in range(max_restarts):
        m = ncv
        for j in range(start, ncv):
            w = apply(V[:, j])
            applies += 1
            # classical Gram-Schmidt, two passes, against locked and Krylov vectors together
            h = np.zeros(j + 1, dtype=dtype)
            for _ in range(2):
                if Q is not None and Q.shape[1]:
                    w = w - Q @ (Q.conj().T @ w)
                hp = V[:, : j + 1].conj().T @ w
                w = w - V[:, : j + 1] @ hp
                h = h + hp
            T[: j + 1, j] = h
            T[j, : j + 1] = h.conj()
            beta = float(np.linalg.norm(w))
            if beta <= 1e-13 * max(1.0, float(np.max(np.abs(h)))):
                if j + 1 >= avail:
                    m = j + 1
                    beta = 0.0
                    break
                # invariant subspace found: continue with a fresh orthogonal direction
                w = _random_start(n, dtype, rng, np.hstack([Q, V[:, : j + 1]]) if Q is not None else V[:, : j + 1])
                beta = 0.0
                V[:, j + 1] = w
                continue
            V[:, j + 1] = w / beta
        Tm = (T[:m, :m] + T[:m, :m].conj().T) / 2
        theta, Y = np.linalg.eigh(Tm)
        order = np.argsort(theta)[::-1]
        theta, Y = theta[order], Y[:, order]
        # explicit residual test (the Krylov estimate is unreliable under a
        # spectral transformation with a dynamic range near 1/eps)
        n_conv = 0
        while n_conv < min(nev, m) and converged(V[:, :m] @ Y[:, n_conv]):
            n_conv += 1
        # hand partial convergence back for locking: deflating large Ritz values
        # keeps their rounding noise out of the rest of the spectrum
        stalled = stalled + 1 if n_conv else 0
        if n_conv >= min(nev, m) or m < ncv or stalled >= 2 or restart == max_restarts - 1:
            return theta[:nev], V[:, :m] @ Y[:, :nev], n_conv, applies
        keep = min(max(nev + (m - nev) // 2, nev + 1), m - 1)
        V[:, :keep] = V[:, :m] @ Y[:, :keep]
        V[:, keep] = V[:, m]
        V[:, keep + 1:] = 0
        T[:] = 0
        T[:keep, :keep] = np.diag(theta[:keep])
        start = keep
    return np.zeros(0), np.zeros((n, 0), dtype), 0, applies


class _Operator:
    """Spectral transformation wrapper mapping Ritz values back to energies."""

    def __init__(self, H, method, sigma):
        self.H = H
        self.method = method
        self.sigma = sigma
        if method == "shift-invert":
            A = sp.csc_matrix(H) + sigma * sp.identity(H.shape[0], format="csc", dtype=H.dtype)
            self._lu = spla.splu(A)
            self.apply = self._lu.solve
        elif method == "lanczos":
            self.apply = lambda x: -(H @ x)
        else:
            raise ValidationError(f"unknown eigensolver method {method!r}")


def _norm_bound(H) -> float:
    """Cheap upper bound on the spectral norm (max absolute row sum)."""
    if sp.issparse(H):
        return float(abs(H).sum(axis=1).max())
    return float(np.abs(np.asarray(H)).sum(axis=1).max())


def _resolve_method(H, method, lu_max_dim):
    if method != "auto":
        return method
    return "shift-invert" if sp.issparse(H) and H.shape[0] <= lu_max_dim else "lanczos"


# ---------------------------------------------------------------- public API


def lowest_eigenpairs(H, k: int = 2, tol: float = DEFAULT_TOL, seed: int = 0, method: str = "auto",
                      sigma: float | None = None, degeneracy_tol: float = DEGENERACY_TOL,
                      ncv: int = 24, max_restarts: int = 4000, lu_max_dim: int = LU_MAX_DIM,
                      check: bool = True, polish: bool = False) -> GroundStateResult:
    """The ``k`` algebraically smallest eigenpairs of a Hermitian operator.

    ``tol`` bounds the returned residual norms ``||H v - E v||`` (units of eps).
    With shift-invert the default shift ``sigma = 1e-11`` assumes H is
    positive semidefinite; pass ``sigma`` explicitly otherwise.  ``polish``
    runs extra inverse-iteration sweeps after convergence, which matters when
    eigenvector accuracy (not just the residual) has to beat a tiny gap.
    """
    n = H.shape[0]
    if k < 1:
        raise ValidationError("k must be at least 1")
    if n < k:
        raise ValidationError(f"dimension {n} smaller than requested count {k}")
    if check:
        check_hermitian(H)
    if sp.issparse(H):
        H = sp.csr_matrix(H)
    method = _resolve_method(H, method, lu_max_dim)
    dtype = np.complex128 if np.iscomplexobj(H.dtype.type(0)) else np.float64
    rng = np.random.default_rng(seed)
    if n <= 3:
        w, v = np.linalg.eigh(H.toarray() if sp.issparse(H) else np.asarray(H))
        vecs = np.column_stack([_fix_phase(v[:, i]) for i in range(k)])
        res = np.linalg.norm((H @ vecs) - vecs * w[:k], axis=0)
        return _finish(w[:k], vecs, res, degeneracy_tol, "dense", 0)
    sigma = SI_SHIFT if sigma is None else float(sigma)
    op = _Operator(H, method, sigma)
    # Under shift-invert the Krylov residual floors near eps * ||H|| * (dynamic
    # range); lock at a looser level and let the inverse-iteration sweeps below
    # tighten to ``tol``.
    lock_tol = 0.5 * tol
    if method == "shift-invert":
        lock_tol = max(lock_tol, 1e-8 * _norm_bound(H))

    def converged(v):
        v = v / np.linalg.norm(v)
        hv = H @ v
        return np.linalg.norm(hv - np.vdot(v, hv) * v) <= lock_tol

    locked_vecs = np.zeros((n, 0), dtype=dtype)
    locked_vals: list[float] = []
    total = 0

    def run(nev):
        nonlocal total
        theta, Y, n_conv, applies = _krylov_schur(op.apply, n, nev, ncv, converged, rng, locked_vecs, dtype,
                                                  max_restarts)
        total += applies
        out = []
        for i in range(min(n_conv, Y.shape[1])):
            v = Y[:, i] / np.linalg.norm(Y[:, i])
            v = _orthogonalize(v, locked_vecs)
            v = v / np.linalg.norm(v)
            out.append(v)
        return out

    def lock(vs):
        nonlocal locked_vecs
        for v in vs:
            v = _orthogonalize(v, locked_vecs)
            v = v / np.linalg.norm(v)
            hv = H @ v
            locked_vals.append(float(np.real(np.vdot(v, hv))))
            locked_vecs = np.column_stack([locked_vecs, v])

    while len(locked_vals) < k:
        found = run(k - len(locked_vals))
        if not found:
            raise ConvergenceError(
                f"no eigenpair converged after {max_restarts} restarts ({method})", residuals=None
            )
        lock(found[: k - len(locked_vals)])
    # verification against missed degenerate copies
    while locked_vecs.shape[1] < n:
        extra = run(1)
        if not extra:
            break
        v = extra[0]
        e = float(np.real(np.vdot(v, H @ v)))
        if e >= max(locked_vals) - max(degeneracy_tol, 10 * tol):
            break
        lock([v])
        worst = int(np.argmax(locked_vals))
        locked_vals.pop(worst)
        locked_vecs = np.delete(locked_vecs, worst, axis=1)

    # Rayleigh-Ritz on the locked space separates near-degenerate pairs cleanly;
    # with a factorization at hand a few block inverse-iteration sweeps polish residuals
    # (``polish`` keeps sweeping until the residuals stop improving)
    block = locked_vecs
    best = None
    for sweep in range(16 if polish else 10):
        Q, _ = np.linalg.qr(block)
        Hq = Q.conj().T @ (H @ Q)
        w, Y = np.linalg.eigh((Hq + Hq.conj().T) / 2)
        cand = Q @ Y
        cres = np.linalg.norm(H @ cand - cand * w, axis=0)
        if best is not None and np.max(cres) > 0.5 * np.max(best[2]):
            if np.max(cres) < np.max(best[2]):
                best = (w, cand, cres)
            break
        best = (w, cand, cres)
        if method != "shift-invert" or (not polish and np.all(cres <= 0.1 * tol)):
            break
        block = np.column_stack([op.apply(cand[:, i]) for i in range(cand.shape[1])])
    w, vecs, res = best
    vecs = np.column_stack([_fix_phase(vecs[:, i]) for i in range(vecs.shape[1])])
    bad = res > tol
    if np.any(bad):
        raise ConvergenceError(
            f"residuals {res[bad]} exceed tolerance {tol} ({method})", residuals=res
        )
    result = _finish(w, vecs, res, degeneracy_tol, method, total)
    return result


def _finish(w, vecs, res, degeneracy_tol, method, iterations):
    w = np.asarray(w, dtype=float)
    mult = int(np.sum(w <= w[0] + degeneracy_tol))
    gap = float(w[mult] - w[0]) if mult < len(w) else None
    return GroundStateResult(w, vecs, np.asarray(res), mult, gap, method, iterations)


def gap_of(H, seed: int = 0, k_max: int = 16, degeneracy_tol: float = DEGENERACY_TOL, **kw):
    """(E0, gap, multiplicity); ``k`` grows until an eigenvalue clears the degeneracy window.

    The gap is ``None`` when ``k_max`` eigenvalues are all degenerate.
    """
    k = 2
    n = H.shape[0]
    while True:
        k = min(k, n)
        res = lowest_eigenpairs(H, k=k, seed=seed, degeneracy_tol=degeneracy_tol, **kw)
        if res.gap is not None or k >= min(k_max, n):
            return res.ground_energy, res.gap, res.multiplicity
        k = min(2 * k, k_max)


def dense_eigenpairs(H, k: int | None = None):
    """Oracle: full dense diagonalization (ascending)."""
    A = H.toarray() if sp.issparse(H) else np.asarray(H)
    w, v = sla.eigh(A)
    if k is not None:
        w, v = w[:k], v[:, :k]
    return w, v


def principal_angles(A, B) -> np.ndarray:
    return sla.subspace_angles(A, B)


# ---------------------------------------------------------------- binary dump


def write_eigenvectors(path, vectors):
    """Header: 8-byte magic, uint64 dim, uint64 count (little endian); then
    ``count`` vectors of ``dim`` complex numbers as interleaved re/im float64."""
    vectors = np.asarray(vectors)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    dim, count = vectors.shape
    data = np.empty((count, dim, 2), dtype="<f8")
    data[..., 0] = vectors.T.real
    data[..., 1] = vectors.T.imag if np.iscomplexobj(vectors) else 0.0
    with open(Path(path), "wb") as fh:
        fh.write(DUMP_MAGIC)
        fh.write(struct.pack("<QQ", dim, count))
        fh.write(data.tobytes())


def read_eigenvectors(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:8] != DUMP_MAGIC:
        raise ValidationError(f"{path}: not an eigenvector dump")
    dim, count = struct.unpack("<QQ", raw[8:24])
    data = np.frombuffer(raw[24:], dtype="<f8").reshape(count, dim, 2)
    return (data[..., 0] + 1j * data[..., 1]).T
