"""Product Hilbert space of qubit columns and embedded site operators.

Every qubit is a column of ``rows`` rows, each row holding two sites (bit 0
and bit 1).  Exactly one electron lives on each column, so the local basis of
a column is the set of ``(row, bit)`` positions, indexed ``2*row + bit``.  The
global basis is the tensor product of the columns with column 0 as the most
significant mixed-radix digit.

Operators are ``scipy.sparse.csr_matrix`` objects.  Terms are built once as
small *local* matrices acting on one or two columns and then embedded, either
over the full product basis or over a :class:`Subspace` (a sorted subset of
global indices, e.g. a connected sector of the Hamiltonian graph).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, ConfigurationError

# int64 indexing with headroom for stride arithmetic
MAX_INDEX_DIM = 2**62


@dataclass(frozen=True)
class QubitColumn:
    id: int
    rows: int
    label: str = ""

    def __post_init__(self):
        if self.rows < 1:
            raise ConfigurationError(f"column {self.id} needs at least one row, got {self.rows}")

    @property
    def local_dim(self) -> int:
        return 2 * self.rows


def local_index(row: int, bit: int) -> int:
    return 2 * row + bit


class BasisSpace:
    """Full product basis over an ordered list of columns."""

    def __init__(self, columns: Sequence[QubitColumn]):
        columns = list(columns)
        ids = [c.id for c in columns]
        if len(set(ids)) != len(ids):
            raise ConfigurationError(f"duplicate column ids in {ids}")
        if ids != list(range(len(ids))):
            raise ConfigurationError(f"column ids must be contiguous from 0, got {ids}")
        self.columns = tuple(columns)
        self.dims = np.array([c.local_dim for c in columns], dtype=np.int64)
        dim = 1
        for d in self.dims:
            dim *= int(d)
        if dim > MAX_INDEX_DIM:
            raise CapacityError(
                f"basis dimension {dim} exceeds the index width limit {MAX_INDEX_DIM}",
                required=dim,
                limit=MAX_INDEX_DIM,
            )
        self.dim = dim
        strides = np.ones(len(columns), dtype=np.int64)
        for q in range(len(columns) - 2, -1, -1):
            strides[q] = strides[q + 1] * self.dims[q + 1]
        self.strides = strides

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    @property
    def rows(self) -> tuple[int, ...]:
        return tuple(c.rows for c in self.columns)

    @property
    def space(self) -> "BasisSpace":
        return self

    @property
    def states(self) -> np.ndarray:
        return np.arange(self.dim, dtype=np.int64)

    def encode(self, digits) -> np.ndarray:
        """Global indices from an ``(n, Q)`` array of local indices."""
        digits = np.asarray(digits, dtype=np.int64)
        if digits.ndim == 1:
            digits = digits[None, :]
        return digits @ self.strides if self.n_columns else np.zeros(len(digits), dtype=np.int64)

    def decode(self, indices) -> np.ndarray:
        """``(n, Q)`` array of local indices for the given global indices."""
        indices = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        if self.n_columns == 0:
            return np.zeros((len(indices), 0), dtype=np.int64)
        return (indices[:, None] // self.strides[None, :]) % self.dims[None, :]

    def index_of(self, positions: Sequence[tuple[int, int]]) -> int:
        """Global index of one basis state given ``(row, bit)`` per column."""
        if len(positions) != self.n_columns:
            raise ConfigurationError(f"need {self.n_columns} (row, bit) pairs, got {len(positions)}")
        digits = []
        for col, (row, bit) in zip(self.columns, positions):
            check_row(col, row)
            digits.append(local_index(row, bit))
        return int(self.encode(digits)[0])

    def positions_of(self, index: int) -> list[tuple[int, int]]:
        return [(int(d) // 2, int(d) % 2) for d in self.decode([index])[0]]

    def __repr__(self):
        return f"BasisSpace(rows={self.rows}, dim={self.dim})"


class Subspace:
    """A sorted subset of the global basis of ``space``."""

    def __init__(self, space: BasisSpace, states: Iterable[int]):
        self.space = space
        self.states = np.unique(np.asarray(states, dtype=np.int64))
        if len(self.states) and (self.states[0] < 0 or self.states[-1] >= space.dim):
            raise ConfigurationError("subspace states outside the basis range")

    @property
    def dim(self) -> int:
        return len(self.states)

    def positions(self, indices) -> np.ndarray:
        """Position of each global index in ``states``, -1 when absent."""
        indices = np.asarray(indices, dtype=np.int64)
        pos = np.searchsorted(self.states, indices)
        pos = np.minimum(pos, max(self.dim - 1, 0))
        hit = self.states[pos] == indices if self.dim else np.zeros(indices.shape, dtype=bool)
        return np.where(hit, pos, -1)

    def lift(self, vector) -> np.ndarray:
        """Embed a subspace vector (or column stack) into the full space."""
        vector = np.asarray(vector)
        out = np.zeros((self.space.dim,) + vector.shape[1:], dtype=vector.dtype)
        out[self.states] = vector
        return out

    def restrict(self, vector) -> np.ndarray:
        return np.asarray(vector)[self.states]

    def __repr__(self):
        return f"Subspace(dim={self.dim} of {self.space.dim})"


def full_basis(space: BasisSpace) -> Subspace:
    return Subspace(space, space.states)


def make_basis(columns: Sequence[QubitColumn]) -> BasisSpace:
    if not columns:
        raise ConfigurationError("make_basis needs at least one column")
    return BasisSpace(columns)


def check_row(column: QubitColumn, row: int):
    if not 0 <= row < column.rows:
        raise ConfigurationError(
            f"row {row} out of range for column {column.id} with {column.rows} rows"
        )


def _column(space: BasisSpace, qubit: int) -> QubitColumn:
    if not 0 <= qubit < space.n_columns:
        raise ConfigurationError(f"no column {qubit} in a {space.n_columns}-column space")
    return space.columns[qubit]


# ---------------------------------------------------------------- local operators


def local_transfer(rows: int, row_from: int, row_to: int, u) -> sp.csr_matrix:
    """``sum_ab u[a, b] c^dag_{to,a} c_{from,b}`` on a single column."""
    u = np.asarray(u)
    op = sp.lil_matrix((2 * rows, 2 * rows), dtype=np.result_type(u, float))
    for a in range(2):
        for b in range(2):
            if u[a, b] != 0:
                op[local_index(row_to, a), local_index(row_from, b)] = u[a, b]
    return op.tocsr()


def local_number(rows: int, row: int, bit: int | None = None) -> sp.csr_matrix:
    diag = np.zeros(2 * rows)
    if bit is None:
        diag[local_index(row, 0)] = diag[local_index(row, 1)] = 1.0
    else:
        diag[local_index(row, bit)] = 1.0
    return sp.diags(diag, format="csr")


def local_state_projector(rows: int, row: int, state) -> sp.csr_matrix:
    """``|row, state><row, state|`` for a 2-component state on one row."""
    g = np.asarray(state, dtype=complex)
    block = np.outer(g, g.conj())
    op = sp.lil_matrix((2 * rows, 2 * rows), dtype=complex)
    for a in range(2):
        for b in range(2):
            if block[a, b] != 0:
                op[local_index(row, a), local_index(row, b)] = block[a, b]
    return _realify(op.tocsr())


def _realify(m: sp.spmatrix) -> sp.csr_matrix:
    m = sp.csr_matrix(m)
    if np.iscomplexobj(m.data) and not np.any(m.data.imag):
        m = sp.csr_matrix(m.real)
    return m


# ---------------------------------------------------------------- embedding


def apply_local(space: BasisSpace, cols: Sequence[int], local, states: np.ndarray):
    """Action of a local operator on a batch of basis states.

    Returns ``(src, dst, values)`` where ``src`` indexes into ``states``,
    ``dst`` are global indices, and ``values[n] = <dst[n]| op |states[src[n]]>``.
    """
    cols = list(cols)
    local = sp.csc_matrix(local)
    local.sum_duplicates()
    digits = space.decode(states)[:, cols]
    sub_dims = space.dims[cols]
    sub_strides = np.ones(len(cols), dtype=np.int64)
    for c in range(len(cols) - 2, -1, -1):
        sub_strides[c] = sub_strides[c + 1] * sub_dims[c + 1]
    lidx = digits @ sub_strides
    starts = local.indptr[lidx]
    counts = local.indptr[lidx + 1] - starts
    total = int(counts.sum())
    src = np.repeat(np.arange(len(states), dtype=np.int64), counts)
    offsets = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    flat = np.repeat(starts, counts) + offsets
    new_l = local.indices[flat].astype(np.int64)
    values = local.data[flat]
    new_digits = (new_l[:, None] // sub_strides[None, :]) % sub_dims[None, :]
    delta = (new_digits - digits[src]) @ space.strides[cols]
    dst = states[src] + delta
    return src, dst, values


def embed(basis, cols: Sequence[int], local) -> sp.csr_matrix:
    """Embed a local operator (acting as identity elsewhere) over ``basis``.

    ``basis`` is a :class:`BasisSpace` (full product) or a :class:`Subspace`.
    Entries leaving a subspace are dropped.
    """
    return embed_many(basis, [(cols, local)])


def embed_many(basis, terms, dtype=None) -> sp.csr_matrix:
    space = basis.space
    states = basis.states
    n = len(states)
    if dtype is None:
        dtype = np.result_type(float, *[sp.csr_matrix(t[1]).dtype for t in terms]) if terms else float
    rows, cols_, vals = [], [], []
    for cols, local in terms:
        src, dst, values = apply_local(space, cols, local, states)
        if isinstance(basis, Subspace):
            pos = basis.positions(dst)
            keep = pos >= 0
            src, pos, values = src[keep], pos[keep], values[keep]
        else:
            pos = dst
        rows.append(pos)
        cols_.append(src)
        vals.append(values)
    if not rows:
        return sp.csr_matrix((n, n), dtype=dtype)
    out = sp.coo_matrix(
        (np.concatenate(vals).astype(dtype), (np.concatenate(rows), np.concatenate(cols_))),
        shape=(n, n),
    ).tocsr()
    out.sum_duplicates()
    out.eliminate_zeros()
    out.sort_indices()
    return out


def embed_transfer(space: BasisSpace, qubit: int, row_from: int, row_to: int, u) -> sp.csr_matrix:
    col = _column(space, qubit)
    check_row(col, row_from)
    check_row(col, row_to)
    return embed(space, [qubit], local_transfer(col.rows, row_from, row_to, u))


def embed_number(space: BasisSpace, qubit: int, row: int, bit: int | None = None) -> sp.csr_matrix:
    col = _column(space, qubit)
    check_row(col, row)
    if bit not in (None, 0, 1):
        raise ConfigurationError(f"bit must be 0, 1 or None, got {bit}")
    return embed(space, [qubit], local_number(col.rows, row, bit))


def reachable_states(space: BasisSpace, terms, seeds, excluded=None, cap: int | None = None) -> np.ndarray:
    """Breadth-first closure of ``seeds`` under the off-diagonal graph of ``terms``.

    ``excluded`` maps column -> local index that is removed from the basis
    (hard boundary mode).  The result spans an invariant subspace of the sum
    of the terms restricted to the non-excluded states.
    """
    visited = np.unique(np.asarray(seeds, dtype=np.int64))
    frontier = visited
    ex_cols = np.array(sorted(excluded or {}), dtype=np.int64)
    ex_vals = np.array([excluded[c] for c in ex_cols], dtype=np.int64) if len(ex_cols) else None
    while len(frontier):
        found = []
        for cols, local in terms:
            _, dst, _ = apply_local(space, cols, local, frontier)
            found.append(dst)
        new = np.unique(np.concatenate(found)) if found else np.zeros(0, dtype=np.int64)
        if ex_vals is not None and len(new):
            bad = np.any(space.decode(new)[:, ex_cols] == ex_vals[None, :], axis=1)
            new = new[~bad]
        new = np.setdiff1d(new, visited, assume_unique=True)
        visited = np.union1d(visited, new)
        if cap is not None and len(visited) > cap:
            raise CapacityError(
                f"reachable sector exceeds {cap} states", required=len(visited), limit=cap
            )
        frontier = new
    return visited


def is_hermitian(op, tol: float = 1e-12) -> bool:
    diff = op - op.conj().T
    return diff.nnz == 0 or float(np.max(np.abs(diff.data))) <= tol
