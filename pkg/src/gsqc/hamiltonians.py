"""Circuit Hamiltonian terms and their assembly.

All gate terms carry the energy unit ``eps`` (1 by default, so energies are
reported in units of eps).  Each term is positive semidefinite, and the total
circuit Hamiltonian is their plain sum.

Term kinds
----------
``single``      eps [n_{j-1} + n_j - (C^dag_j U C_{j-1} + h.c.)]
``boost``       eps [n_{j-1} + n_j / lam^2 - (C^dag_j C_{j-1} + h.c.) / lam]
``project``     the boost restricted to one bit state ``gamma``
``cnot``        four-piece controlled-NOT coupling between two columns
``boundary``    E (I + a.sigma) on row 0 of one column
``prep_boost``  eps [s^2 n_0 + n_1 - s (C^dag_0 C_1 + h.c.)] with s = 1/lam'
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import hilbert
from .errors import ConfigurationError, ValidationError
from .hilbert import BasisSpace, Subspace, local_index, local_number, local_transfer

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Y = np.array([[0.0, -1j], [1j, 0.0]])
Z = np.diag([1.0, -1.0])
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
PAULI = (X, Y, Z)

KINDS = ("single", "boost", "project", "cnot", "boundary", "prep_boost")
UNITARY_TOL = 1e-10
NORM_TOL = 1e-12
MIN_BOUNDARY_RATIO = 10.0


def ry(theta: float) -> np.ndarray:
    """``exp(-i theta Y / 2)``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class EnergyScale:
    epsilon: float = 1.0
    boundary_E: float = 100.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.boundary_E / self.epsilon < MIN_BOUNDARY_RATIO:
            raise ValidationError(
                f"boundary E must be at least {MIN_BOUNDARY_RATIO} eps, got E/eps = "
                f"{self.boundary_E / self.epsilon}"
            )


@dataclass(frozen=True)
class HamiltonianTerm:
    """One Hamiltonian term.  ``rows`` holds the upper row of each coupled interval.

    ``lam`` is the amplification factor of boost/project terms and ``1/s`` of a
    prep boost.  Terms with ``shared_lambda`` follow the circuit-wide lambda
    when a graph is retuned; others keep a per-term override.
    """

    kind: str
    qubits: tuple[int, ...]
    rows: tuple[int, ...]
    u: np.ndarray | None = field(default=None, compare=False)
    lam: float | None = None
    gamma: tuple | None = None
    a: tuple[float, float, float] | None = None
    energy: float | None = None
    pin_orphan: bool = False
    shared_lambda: bool = True
    label: str = ""

    # -- coordinates

    def intervals(self) -> list[tuple[int, int]]:
        """(column, upper row) of each row interval this term couples."""
        if self.kind == "boundary":
            return []
        return list(zip(self.qubits, self.rows))

    def local(self, space: BasisSpace, eps: float = 1.0):
        """``(cols, local matrix)`` over the product of the touched columns."""
        self.validate(space)
        rows_of = [space.columns[q].rows for q in self.qubits]
        k = self.kind
        if k == "single":
            m = local_single(rows_of[0], self.rows[0], self.u, eps)
        elif k == "boost":
            m = local_boost(rows_of[0], self.rows[0], self.lam, eps)
        elif k == "project":
            m = local_project(rows_of[0], self.rows[0], self.gamma_vector(), self.lam, eps, self.pin_orphan)
        elif k == "cnot":
            m = local_cnot(rows_of[0], rows_of[1], self.rows[0], self.rows[1], eps)
        elif k == "boundary":
            m = local_boundary(rows_of[0], self.a, self.energy)
        else:
            m = local_prep_boost(rows_of[0], 1.0 / self.lam, eps)
        return list(self.qubits), m

    def gamma_vector(self) -> np.ndarray:
        return np.asarray(self.gamma, dtype=complex)

    def validate(self, space: BasisSpace):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown term kind {self.kind!r}")
        n_q = 2 if self.kind == "cnot" else 1
        if len(self.qubits) != n_q or len(self.rows) != n_q:
            raise ConfigurationError(f"{self.kind} term needs {n_q} qubit(s) and row(s)")
        for q, r in zip(self.qubits, self.rows):
            if not 0 <= q < space.n_columns:
                raise ConfigurationError(f"{self.kind} term references missing column {q}")
            col = space.columns[q]
            if self.kind == "boundary":
                if r != 0:
                    raise ConfigurationError("boundary terms act on row 0")
            elif not 1 <= r < col.rows:
                raise ConfigurationError(
                    f"{self.kind} term row {r} invalid for column {q} with {col.rows} rows"
                )
        if self.kind == "cnot" and self.qubits[0] == self.qubits[1]:
            raise ConfigurationError("cnot control and target must differ")
        if self.kind == "prep_boost" and self.rows[0] != 1:
            raise ConfigurationError("prep_boost couples the first two rows")

    # -- serialization

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "qubits": list(self.qubits), "rows": list(self.rows)}
        if self.u is not None:
            d["u"] = _encode_matrix(self.u)
        for name in ("lam", "energy"):
            if getattr(self, name) is not None:
                d[name] = float(getattr(self, name))
        if self.gamma is not None:
            d["gamma"] = [[float(np.real(g)), float(np.imag(g))] for g in self.gamma]
        if self.a is not None:
            d["a"] = [float(x) for x in self.a]
        if self.pin_orphan:
            d["pin_orphan"] = True
        if not self.shared_lambda:
            d["shared_lambda"] = False
        if self.label:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HamiltonianTerm":
        return cls(
            kind=d["kind"],
            qubits=tuple(d["qubits"]),
            rows=tuple(d["rows"]),
            u=_decode_matrix(d["u"]) if "u" in d else None,
            lam=d.get("lam"),
            gamma=tuple(complex(re, im) for re, im in d["gamma"]) if "gamma" in d else None,
            a=tuple(d["a"]) if "a" in d else None,
            energy=d.get("energy"),
            pin_orphan=d.get("pin_orphan", False),
            shared_lambda=d.get("shared_lambda", True),
            label=d.get("label", ""),
        )


def _encode_matrix(u) -> list:
    u = np.asarray(u, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in u]


def _decode_matrix(rows) -> np.ndarray:
    m = np.array([[complex(re, im) for re, im in row] for row in rows])
    return m.real.copy() if not np.any(m.imag) else m


def terms_to_json(terms: Sequence[HamiltonianTerm]) -> list[dict]:
    return [t.to_dict() for t in terms]


def terms_from_json(data: Sequence[dict]) -> list[HamiltonianTerm]:
    return [HamiltonianTerm.from_dict(d) for d in data]


# ---------------------------------------------------------------- validation


def check_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    u = np.asarray(u)
    if u.shape != (2, 2):
        raise ValidationError(f"gate must be 2x2, got shape {u.shape}")
    err = np.max(np.abs(u.conj().T @ u - I2))
    if err > tol:
        raise ValidationError(f"gate is not unitary (|U^dag U - I| = {err:.3e})")
    return u


def check_lambda(lam: float, strict: bool = True) -> float:
    if not lam > 0:
        raise ValidationError(f"lambda must be positive, got {lam}")
    if lam < 1:
        msg = f"lambda = {lam} < 1 reverses the amplification direction"
        if strict:
            raise ValidationError(msg)
        warnings.warn(msg, stacklevel=3)
    return float(lam)


def normalize_gamma(gamma) -> np.ndarray:
    if isinstance(gamma, (int, np.integer)):
        if gamma not in (0, 1):
            raise ValidationError(f"basis state must be 0 or 1, got {gamma}")
        g = np.zeros(2, dtype=complex)
        g[gamma] = 1.0
        return g
    g = np.asarray(gamma, dtype=complex)
    if g.shape != (2,) or abs(np.linalg.norm(g) - 1) > 1e-10:
        raise ValidationError(f"projection state must be a normalized 2-vector, got {gamma}")
    return g


def check_bloch(a) -> tuple[float, float, float]:
    a = tuple(float(x) for x in a)
    if len(a) != 3 or abs(np.dot(a, a) - 1) > NORM_TOL:
        raise ValidationError(f"boundary vector must have unit length, got {a}")
    return a


def bloch_state(a) -> np.ndarray:
    """Null vector of ``I + a.sigma`` (phase fixed: first nonzero entry real positive)."""
    m = sum(ai * s for ai, s in zip(a, PAULI))
    w, v = np.linalg.eigh(m)
    chi = v[:, 0]
    k = int(np.argmax(np.abs(chi) > 1e-12))
    chi = chi * (abs(chi[k]) / chi[k])
    return chi


# ---------------------------------------------------------------- local matrices


def _hop_pair(rows, row_from, row_to, u):
    t = local_transfer(rows, row_from, row_to, u)
    return t + t.conj().T


def local_single(rows: int, j: int, u, eps: float = 1.0) -> sp.csr_matrix:
    m = local_number(rows, j - 1) + local_number(rows, j) - _hop_pair(rows, j - 1, j, u)
    return hilbert._realify(eps * m)


def local_boost(rows: int, j: int, lam: float, eps: float = 1.0) -> sp.csr_matrix:
    m = local_number(rows, j - 1) + local_number(rows, j) / lam**2 - _hop_pair(rows, j - 1, j, I2) / lam
    return sp.csr_matrix(eps * m)


def local_project(rows: int, j: int, gamma, lam: float, eps: float = 1.0, pin_orphan: bool = False):
    g = np.asarray(gamma, dtype=complex)
    chain = sp.lil_matrix((2 * rows, 2 * rows), dtype=complex)
    lo, hi = slice(local_index(j - 1, 0), local_index(j - 1, 0) + 2), slice(local_index(j, 0), local_index(j, 0) + 2)
    gg = np.outer(g, g.conj())
    chain[lo, lo] = gg
    chain[hi, hi] = gg / lam**2
    chain[hi, lo] = -gg / lam
    chain[lo, hi] = -gg / lam
    if pin_orphan:
        perp = np.array([-np.conj(g[1]), np.conj(g[0])])
        chain[hi, hi] = chain[hi, hi].toarray() + np.outer(perp, perp.conj())
    return hilbert._realify(eps * chain.tocsr())


def local_cnot(rows_c: int, rows_t: int, jc: int, jt: int, eps: float = 1.0) -> sp.csr_matrix:
    kron = sp.kron
    m = (
        eps * kron(local_number(rows_c, jc - 1), local_number(rows_t, jt))
        + kron(local_single(rows_c, jc, I2, eps), local_number(rows_t, jt - 1))
        + kron(local_number(rows_c, jc, 0), local_single(rows_t, jt, I2, eps))
        + kron(local_number(rows_c, jc, 1), local_single(rows_t, jt, X, eps))
    )
    return sp.csr_matrix(m)


def local_boundary(rows: int, a, energy: float) -> sp.csr_matrix:
    block = I2 + sum(ai * s for ai, s in zip(a, PAULI))
    m = sp.lil_matrix((2 * rows, 2 * rows), dtype=complex)
    m[0:2, 0:2] = energy * block
    return hilbert._realify(m.tocsr())


def local_prep_boost(rows: int, s: float, eps: float = 1.0) -> sp.csr_matrix:
    m = s**2 * local_number(rows, 0) + local_number(rows, 1) - s * _hop_pair(rows, 0, 1, I2)
    return sp.csr_matrix(eps * m)


# ---------------------------------------------------------------- term constructors


def single_term(qubit, row, u, label="") -> HamiltonianTerm:
    if row < 1:
        raise ConfigurationError("single-qubit terms need row >= 1")
    return HamiltonianTerm("single", (qubit,), (row,), u=check_unitary(u), label=label)


def boost_term(qubit, row, lam, strict=True, shared=True) -> HamiltonianTerm:
    if row < 1:
        raise ConfigurationError("boost terms need row >= 1")
    return HamiltonianTerm("boost", (qubit,), (row,), lam=check_lambda(lam, strict), shared_lambda=shared, label="B")


def project_term(qubit, row, gamma, lam, pin_orphan=False, strict=True, shared=True) -> HamiltonianTerm:
    if row < 1:
        raise ConfigurationError("projection terms need row >= 1")
    g = normalize_gamma(gamma)
    label = "P(0)" if np.allclose(g, [1, 0]) else "P(1)" if np.allclose(g, [0, 1]) else "P(g)"
    return HamiltonianTerm(
        "project", (qubit,), (row,), lam=check_lambda(lam, strict), gamma=tuple(complex(x) for x in g),
        pin_orphan=pin_orphan, shared_lambda=shared, label=label,
    )


def cnot_term(control, target, row, target_row=None) -> HamiltonianTerm:
    if control == target:
        raise ConfigurationError("cnot control and target must differ")
    target_row = row if target_row is None else target_row
    if row < 1 or target_row < 1:
        raise ConfigurationError("cnot rows must be >= 1")
    return HamiltonianTerm("cnot", (control, target), (row, target_row), label="CNOT")


def boundary_term(qubit, a, energy=100.0, eps=1.0) -> HamiltonianTerm:
    EnergyScale(eps, energy)
    return HamiltonianTerm("boundary", (qubit,), (0,), a=check_bloch(a), energy=float(energy), label="h0")


def prep_boost_term(qubit, lam_prime) -> HamiltonianTerm:
    return HamiltonianTerm("prep_boost", (qubit,), (1,), lam=check_lambda(lam_prime), label="B'")


def _embed_term(space, term, eps=1.0):
    cols, m = term.local(space, eps)
    return hilbert.embed(space, cols, m)


def h_single(space: BasisSpace, qubit: int, row: int, u, eps: float = 1.0):
    return _embed_term(space, single_term(qubit, row, u), eps)


def h_boost(space: BasisSpace, qubit: int, row: int, lam: float, eps: float = 1.0, strict: bool = True):
    return _embed_term(space, boost_term(qubit, row, lam, strict), eps)


def h_project(space: BasisSpace, qubit: int, row: int, gamma, lam: float, eps: float = 1.0,
              pin_orphan: bool = False):
    """Projection term.  ``pin_orphan`` adds eps on the row-j state orthogonal to gamma."""
    return _embed_term(space, project_term(qubit, row, gamma, lam, pin_orphan), eps)


def h_cnot(space: BasisSpace, control: int, target: int, row: int, target_row: int | None = None,
           eps: float = 1.0):
    return _embed_term(space, cnot_term(control, target, row, target_row), eps)


def h_boundary(space: BasisSpace, qubit: int, a, energy: float = 100.0, eps: float = 1.0):
    return _embed_term(space, boundary_term(qubit, a, energy, eps), eps)


def h_prep_boost(space: BasisSpace, qubit: int, lam_prime: float, eps: float = 1.0):
    return _embed_term(space, prep_boost_term(qubit, lam_prime), eps)


# ---------------------------------------------------------------- assembly


@dataclass
class Realization:
    """Local operators of a term list in the frame used for assembly.

    In hard-boundary mode the row-0 basis of each bounded column is rotated to
    (chi, chi_perp), where chi is the boundary's null state, the boundary term
    is dropped, and local index 1 (row 0, chi_perp) is excluded from the basis.
    """

    locals: list
    frames: dict = field(default_factory=dict)
    excluded: dict = field(default_factory=dict)
    boundary: str = "penalty"

    def keep_mask(self, space: BasisSpace, states: np.ndarray) -> np.ndarray:
        if not self.excluded:
            return np.ones(len(states), dtype=bool)
        cols = np.array(sorted(self.excluded))
        vals = np.array([self.excluded[c] for c in cols])
        return ~np.any(space.decode(states)[:, cols] == vals[None, :], axis=1)


def _frame_matrix(rows: int, w: np.ndarray) -> sp.csr_matrix:
    f = sp.lil_matrix((2 * rows, 2 * rows), dtype=complex)
    f[0:2, 0:2] = w
    for k in range(2, 2 * rows):
        f[k, k] = 1.0
    return hilbert._realify(f.tocsr())


def realize(space: BasisSpace, terms: Sequence[HamiltonianTerm], boundary: str = "penalty",
            eps: float = 1.0) -> Realization:
    if boundary not in ("penalty", "hard"):
        raise ConfigurationError(f"boundary mode must be 'penalty' or 'hard', got {boundary!r}")
    locals_ = []
    for n, term in enumerate(terms):
        try:
            locals_.append((term, *term.local(space, eps)))
        except (ConfigurationError, ValidationError) as exc:
            raise type(exc)(f"term {n} ({term.kind}): {exc}") from exc
    if boundary == "penalty":
        return Realization([(c, m) for _, c, m in locals_])
    frames = {}
    for term, _, _ in locals_:
        if term.kind == "boundary":
            q = term.qubits[0]
            if q in frames:
                raise ConfigurationError(f"column {q} carries two boundary terms")
            chi = bloch_state(term.a)
            perp = np.array([-np.conj(chi[1]), np.conj(chi[0])])
            frames[q] = np.column_stack([chi, perp])
    out = []
    for term, cols, m in locals_:
        if term.kind == "boundary":
            continue
        if any(c in frames for c in cols):
            f = None
            for c in cols:
                fc = (_frame_matrix(space.columns[c].rows, frames[c]) if c in frames
                      else sp.identity(space.columns[c].local_dim, format="csr"))
                f = fc if f is None else sp.kron(f, fc, format="csr")
            m = hilbert._realify(f.conj().T @ m @ f)
        out.append((cols, m))
    excluded = {q: local_index(0, 1) for q in frames}
    return Realization(out, frames, excluded, "hard")


def assemble(space: BasisSpace, terms: Sequence[HamiltonianTerm], basis=None, boundary: str = "penalty",
             eps: float = 1.0) -> sp.csr_matrix:
    """Sum of the terms as a sparse matrix over ``basis`` (default: the whole space).

    In hard-boundary mode the default basis omits every excluded row-0 state.
    """
    real = realize(space, terms, boundary, eps)
    if basis is None:
        basis = space
        if real.excluded:
            states = space.states
            basis = Subspace(space, states[real.keep_mask(space, states)])
    return hilbert.embed_many(basis, real.locals)


def seed_states(space: BasisSpace, terms: Sequence[HamiltonianTerm], boundary: str = "penalty") -> np.ndarray:
    """Basis state with every column at row 0 in (the support of) its input state."""
    digits = np.zeros(space.n_columns, dtype=np.int64)
    if boundary == "penalty":
        for t in terms:
            if t.kind == "boundary":
                chi = bloch_state(t.a)
                digits[t.qubits[0]] = int(np.argmax(np.abs(chi) > 1e-12))
    return space.encode(digits)


def reachable_basis(space: BasisSpace, terms: Sequence[HamiltonianTerm], boundary: str = "penalty",
                    eps: float = 1.0, cap: int | None = None) -> Subspace:
    """Connected sector of the Hamiltonian graph containing the all-inputs state."""
    real = realize(space, terms, boundary, eps)
    seeds = seed_states(space, terms, boundary)
    states = hilbert.reachable_states(space, real.locals, seeds, real.excluded, cap)
    return Subspace(space, states)


def with_lambda(terms: Sequence[HamiltonianTerm], lam: float) -> list[HamiltonianTerm]:
    """Replace lambda on every shared boost/projection term."""
    check_lambda(lam)
    return [replace(t, lam=float(lam)) if t.kind in ("boost", "project") and t.shared_lambda else t
            for t in terms]


def frame_to_standard(space: BasisSpace, real: Realization, states: np.ndarray, vec: np.ndarray):
    """Rotate a vector expressed in the hard-boundary frame back to the standard basis.

    Returns ``(states, vec)``; the state set may grow when a frame mixes bits.
    """
    states = np.asarray(states, dtype=np.int64)
    vec = np.asarray(vec)
    for q, w in sorted(real.frames.items()):
        f = _frame_matrix(space.columns[q].rows, w)
        src, dst, vals = hilbert.apply_local(space, [q], f, states)
        out_states, inv = np.unique(dst, return_inverse=True)
        out = np.zeros(len(out_states), dtype=np.result_type(vec.dtype, vals.dtype))
        np.add.at(out, inv, vals * vec[src])
        keep = out != 0
        states, vec = out_states[keep], out[keep]
    return states, vec
