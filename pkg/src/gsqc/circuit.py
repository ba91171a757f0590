"""Circuit graphs: filter boxes, teleportation boxes and full SAT circuits.

A :class:`CircuitBuilder` appends row intervals to qubit columns in program
order.  Each interval ``[r-1, r]`` of a column is coupled by exactly one term;
a column is closed by a boost or projection on its final row.  CNOT terms
couple the next open interval of the control and of the target.  By default
the two intervals need not share a row number (``align_cnot=False``); with
alignment the shorter column is padded with identity rows first.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import hamiltonians as hm
from .errors import CapacityError, ConfigurationError, ValidationError
from .hilbert import BasisSpace, QubitColumn

PLUS = (-1.0, 0.0, 0.0)
ZERO = (0.0, 0.0, -1.0)
ONE = (0.0, 0.0, 1.0)
INPUTS = {"+": PLUS, "0": ZERO, "1": ONE, "-": (1.0, 0.0, 0.0)}

MARGOLUS = "margolus-ry(pi/4):j,ry(pi/4):k,ry(-pi/4):j,ry(-pi/4)"
MAX_TELEPORT_ROWS = 8
TELEPORTS_PER_CLAUSE = 10
FULL_ASSEMBLY_LIMIT = 2_000_000


@dataclass(frozen=True)
class BuildOptions:
    lam: float = 8.0
    teleport: bool = False
    hard_boundary: bool = False
    margolus_order: str = MARGOLUS
    boundary_E: float = 100.0
    pin_orphans: bool = True
    align_cnot: bool = False
    prep_rows: bool = False

    def __post_init__(self):
        hm.check_lambda(self.lam)
        hm.EnergyScale(1.0, self.boundary_E)
        if self.margolus_order != MARGOLUS:
            raise ConfigurationError(f"unknown Margolus sequence {self.margolus_order!r}")

    @property
    def boundary(self) -> str:
        return "hard" if self.hard_boundary else "penalty"


@dataclass
class CircuitGraph:
    columns: list[QubitColumn]
    terms: list[hm.HamiltonianTerm]
    final_rows: dict[int, int]
    data_map: dict[int, list[int]] = field(default_factory=dict)
    roles: dict[int, str] = field(default_factory=dict)
    clause_ancillas: list[tuple[int, int]] = field(default_factory=list)
    options: BuildOptions = field(default_factory=BuildOptions)

    @property
    def space(self) -> BasisSpace:
        return BasisSpace(self.columns)

    @property
    def dim(self) -> int:
        d = 1
        for c in self.columns:
            d *= c.local_dim
        return d

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    @property
    def terminal_data(self) -> dict[int, int]:
        """Problem bit -> column holding its value at the end of the circuit."""
        return {b: chain[-1] for b, chain in self.data_map.items()}

    @property
    def layout_report(self) -> str:
        return layout_table(self)

    def hamiltonian(self, basis=None, boundary: str | None = None, max_dim: int = FULL_ASSEMBLY_LIMIT):
        """Circuit Hamiltonian over ``basis``; the whole space needs dim <= ``max_dim``."""
        if basis is None and self.dim > max_dim:
            raise CapacityError(
                f"full-space assembly of dimension {self.dim} exceeds {max_dim}; pass the reachable basis",
                required=self.dim, limit=max_dim,
            )
        return hm.assemble(self.space, self.terms, basis=basis, boundary=boundary or self.options.boundary)

    def reachable_basis(self, boundary: str | None = None, cap: int | None = None):
        return hm.reachable_basis(self.space, self.terms, boundary=boundary or self.options.boundary, cap=cap)

    def with_lambda(self, lam: float) -> "CircuitGraph":
        return replace(self, terms=hm.with_lambda(self.terms, lam), options=replace(self.options, lam=float(lam)))

    def with_prep(self, s: float) -> "CircuitGraph":
        """Set ``s = 1/lambda'`` on every prep-boost term (``s = 0`` is the lambda' -> inf limit)."""
        if not 0 <= s <= 1:
            raise ValidationError(f"prep parameter s = 1/lambda' must lie in [0, 1], got {s}")
        lam = math.inf if s == 0 else 1.0 / s
        terms = [replace(t, lam=lam) if t.kind == "prep_boost" else t for t in self.terms]
        return replace(self, terms=terms)

    def to_dict(self) -> dict:
        return {
            "columns": [{"id": c.id, "rows": c.rows, "label": c.label} for c in self.columns],
            "terms": hm.terms_to_json(self.terms),
            "final_rows": {str(k): v for k, v in self.final_rows.items()},
            "data_map": {str(k): v for k, v in self.data_map.items()},
            "roles": {str(k): v for k, v in self.roles.items()},
            "clause_ancillas": [list(p) for p in self.clause_ancillas],
            "options": asdict(self.options),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitGraph":
        return cls(
            columns=[QubitColumn(c["id"], c["rows"], c.get("label", "")) for c in d["columns"]],
            terms=hm.terms_from_json(d["terms"]),
            final_rows={int(k): v for k, v in d["final_rows"].items()},
            data_map={int(k): list(v) for k, v in d.get("data_map", {}).items()},
            roles={int(k): v for k, v in d.get("roles", {}).items()},
            clause_ancillas=[tuple(p) for p in d.get("clause_ancillas", [])],
            options=BuildOptions(**d.get("options", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "CircuitGraph":
        return cls.from_dict(json.loads(text))


class CircuitBuilder:
    """Incremental construction of a :class:`CircuitGraph`."""

    def __init__(self, options: BuildOptions | None = None):
        self.options = options or BuildOptions()
        self._rows: list[int] = []
        self._labels: list[str] = []
        self._open: list[bool] = []
        self._cnots: list[int] = []
        self.terms: list[hm.HamiltonianTerm] = []
        self.roles: dict[int, str] = {}
        self.data_map: dict[int, list[int]] = {}
        self.clause_ancillas: list[tuple[int, int]] = []
        self.teleport_count = 0

    # -- columns

    def add_column(self, label: str = "", a=ZERO, role: str = "") -> int:
        q = len(self._rows)
        self._rows.append(1)
        self._labels.append(label or f"q{q}")
        self._open.append(True)
        self._cnots.append(0)
        self.roles[q] = role or label
        if a is not None:
            self.terms.append(hm.boundary_term(q, a, self.options.boundary_E))
        if self.options.prep_rows:
            self._append(q, hm.prep_boost_term(q, 1.0))
        return q

    def is_open(self, q: int) -> bool:
        return self._open[q]

    def _require_open(self, q: int):
        if not 0 <= q < len(self._rows):
            raise ConfigurationError(f"no column {q}")
        if not self._open[q]:
            raise ConfigurationError(f"column {q} ({self._labels[q]}) is closed")

    def _next_row(self, q: int) -> int:
        return self._rows[q]

    def _append(self, q: int, term: hm.HamiltonianTerm):
        self.terms.append(term)
        self._rows[q] += 1

    # -- gates

    def single(self, q: int, u, label: str = "U"):
        self._require_open(q)
        self._append(q, hm.single_term(q, self._next_row(q), u, label))

    def identity(self, q: int):
        self.single(q, hm.I2, "I")

    def cnot(self, c: int, t: int):
        self._require_open(c)
        self._require_open(t)
        if self.options.align_cnot:
            while self._next_row(c) < self._next_row(t):
                self.identity(c)
            while self._next_row(t) < self._next_row(c):
                self.identity(t)
        term = hm.cnot_term(c, t, self._next_row(c), self._next_row(t))
        self.terms.append(term)
        self._rows[c] += 1
        self._rows[t] += 1
        self._cnots[c] += 1
        self._cnots[t] += 1

    def boost(self, q: int, lam: float | None = None):
        self._require_open(q)
        lam_ = self.options.lam if lam is None else lam
        self._append(q, hm.boost_term(q, self._next_row(q), lam_, shared=lam is None))
        self._open[q] = False

    def project(self, q: int, gamma, lam: float | None = None):
        self._require_open(q)
        lam_ = self.options.lam if lam is None else lam
        self._append(q, hm.project_term(q, self._next_row(q), gamma, lam_, pin_orphan=self.options.pin_orphans,
                                        shared=lam is None))
        self._open[q] = False

    # -- gadgets

    def teleport(self, src: int) -> int:
        """Teleport the state of ``src`` onto a fresh column and return its id."""
        self._require_open(src)
        anc = self.add_column(f"tele{self.teleport_count}:bell", ZERO, role="teleport-ancilla")
        out = self.add_column(f"tele{self.teleport_count}:out", ZERO, role="teleport-output")
        self.single(anc, hm.HADAMARD, "H")
        self.cnot(anc, out)
        self.cnot(src, anc)
        self.single(src, hm.HADAMARD, "H")
        self.project(src, 0)
        self.project(anc, 0)
        self.roles.setdefault(out, "teleport-output")
        self.teleport_count += 1
        for chain in self.data_map.values():
            if chain and chain[-1] == src:
                chain.append(out)
        return out

    def _gadget_cnot(self, cols: dict, c: str, t: str):
        if self.options.teleport:
            for name in (c, t):
                if self._cnots_gadget.get(cols[name], 0) >= 1:
                    cols[name] = self.teleport(cols[name])
        self.cnot(cols[c], cols[t])
        self._cnots_gadget[cols[c]] = self._cnots_gadget.get(cols[c], 0) + 1
        self._cnots_gadget[cols[t]] = self._cnots_gadget.get(cols[t], 0) + 1

    def filter_box(self, i: int, j: int, k: int, close: Sequence[bool] = (True, True, True)) -> tuple[int, int, int]:
        """Append the clause gadget for data columns i, j, k.

        Returns the columns now carrying the three data bits.  Data columns are
        closed with a boost where ``close`` is true, otherwise left open (after
        an identity row, or an end-of-box teleport when teleporting).
        """
        if len({i, j, k}) != 3:
            raise ConfigurationError(f"filter box needs three distinct columns, got {(i, j, k)}")
        for q in (i, j, k):
            self._require_open(q)
        n = len(self.clause_ancillas)
        before = self.teleport_count
        self._cnots_gadget = {}
        a1 = self.add_column(f"clause{n}:anc1", ZERO, role="ancilla1")
        a2 = self.add_column(f"clause{n}:anc2", ZERO, role="ancilla2")
        cols = {"i": i, "j": j, "k": k, "a1": a1, "a2": a2}
        # parity triangle onto ancilla 1
        for d in ("i", "j", "k"):
            self._gadget_cnot(cols, d, "a1")
        # relative-phase Toffoli (j AND k) onto ancilla 2
        r = np.pi / 4
        self.single(cols["a2"], hm.ry(r), "Ry+")
        self._gadget_cnot(cols, "j", "a2")
        self.single(cols["a2"], hm.ry(r), "Ry+")
        self._gadget_cnot(cols, "k", "a2")
        self.single(cols["a2"], hm.ry(-r), "Ry-")
        self._gadget_cnot(cols, "j", "a2")
        self.single(cols["a2"], hm.ry(-r), "Ry-")
        self.project(cols["a1"], 1)
        self.project(cols["a2"], 0)
        out = []
        for name, done in zip(("i", "j", "k"), close):
            q = cols[name]
            if self.options.teleport:
                q = self.teleport(q)
            if done:
                self.boost(q)
            elif not self.options.teleport:
                self.identity(q)
            out.append(q)
        if self.options.teleport:
            added = self.teleport_count - before
            if added != TELEPORTS_PER_CLAUSE:
                raise AssertionError(f"filter box used {added} teleportation boxes, expected {TELEPORTS_PER_CLAUSE}")
        self.clause_ancillas.append((a1, a2))
        del self._cnots_gadget
        return tuple(out)

    def build(self) -> CircuitGraph:
        columns = [QubitColumn(q, r, lab) for q, (r, lab) in enumerate(zip(self._rows, self._labels))]
        final_rows = {q: r - 1 for q, r in enumerate(self._rows)}
        return CircuitGraph(
            columns=columns,
            terms=list(self.terms),
            final_rows=final_rows,
            data_map={b: list(c) for b, c in self.data_map.items()},
            roles=dict(self.roles),
            clause_ancillas=list(self.clause_ancillas),
            options=self.options,
        )


def _input_vector(spec) -> tuple:
    if isinstance(spec, str):
        try:
            return INPUTS[spec]
        except KeyError:
            raise ConfigurationError(f"unknown input label {spec!r}; use one of {sorted(INPUTS)}") from None
    return tuple(spec)


def build_filter_box(options: BuildOptions | None = None, inputs: Sequence = ("+", "+", "+")) -> CircuitGraph:
    """One clause gadget on three fresh data columns (bits 0, 1, 2)."""
    b = CircuitBuilder(options)
    data = []
    for bit, spec in enumerate(inputs):
        q = b.add_column(f"data:x{bit}", _input_vector(spec), role="data")
        b.data_map[bit] = [q]
        data.append(q)
    b.filter_box(*data)
    return b.build()


def build_teleport_box(options: BuildOptions | None = None, source_input=(1.0, 0.0, 0.0), chain: int = 1,
                       source_rows: int = 0) -> CircuitGraph:
    """A source column teleported ``chain`` times; the last output ends with a boost.

    ``source_input`` is either a Bloch vector for the source boundary or an
    input label ("0", "1", "+", "-").  ``source_rows`` identity rows precede the
    first box.
    """
    b = CircuitBuilder(options)
    q = b.add_column("data:x0", _input_vector(source_input), role="data")
    b.data_map[0] = [q]
    for _ in range(source_rows):
        b.identity(q)
    for _ in range(chain):
        q = b.teleport(q)
    b.boost(q)
    return b.build()


def input_state(spec) -> np.ndarray:
    """Null state of the boundary term for an input label or Bloch vector."""
    return hm.bloch_state(_input_vector(spec))


def build_chain(gates: Sequence, source_input="0", options: BuildOptions | None = None,
                close: str | None = None) -> CircuitGraph:
    """One column running ``gates`` (2x2 unitaries) in order; ``close`` may be "boost"."""
    b = CircuitBuilder(options)
    q = b.add_column("data:x0", _input_vector(source_input), role="data")
    b.data_map[0] = [q]
    for u in gates:
        b.single(q, u)
    if close == "boost":
        b.boost(q)
    elif close is not None:
        raise ConfigurationError(f"unknown closing term {close!r}")
    return b.build()


def build_cnot_pair(control_input="0", target_input="0", options: BuildOptions | None = None) -> CircuitGraph:
    """Two 2-row columns coupled by a single CNOT."""
    b = CircuitBuilder(options)
    c = b.add_column("data:x0", _input_vector(control_input), role="data")
    t = b.add_column("data:x1", _input_vector(target_input), role="data")
    b.data_map[0], b.data_map[1] = [c], [t]
    b.cnot(c, t)
    return b.build()


def build_pentagon(inputs: Sequence = ("0", "0", "0"), options: BuildOptions | None = None,
                   close: bool = False) -> CircuitGraph:
    """Relative-phase Toffoli on columns (j, k, target); the target starts at ``inputs[2]``."""
    b = CircuitBuilder(options)
    j, k, t = (b.add_column(f"data:x{n}", _input_vector(x), role="data") for n, x in enumerate(inputs))
    for n, q in enumerate((j, k, t)):
        b.data_map[n] = [q]
    r = np.pi / 4
    b.single(t, hm.ry(r), "Ry+")
    b.cnot(j, t)
    b.single(t, hm.ry(r), "Ry+")
    b.cnot(k, t)
    b.single(t, hm.ry(-r), "Ry-")
    b.cnot(j, t)
    b.single(t, hm.ry(-r), "Ry-")
    if close:
        for q in (j, k, t):
            b.boost(q)
    return b.build()


def bloch_of(state) -> tuple[float, float, float]:
    """Boundary vector whose null state is ``state`` (normalized 2-vector)."""
    psi = np.asarray(state, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    n = [float(np.real(np.trace(rho @ s))) for s in hm.PAULI]
    return tuple(-x for x in n)


def build_sat_circuit(instance, options: BuildOptions | None = None, inputs: dict | None = None) -> CircuitGraph:
    """Full circuit: data columns in (|0>+|1>), one filter box per clause in order.

    ``inputs`` optionally pins bits, mapping bit -> label or Bloch vector.
    """
    options = options or BuildOptions()
    for c in instance.clauses:
        if len(c) != 3:
            raise ConfigurationError(f"unsupported clause arity {len(c)}; only 3-bit clauses are built")
    b = CircuitBuilder(options)
    inputs = inputs or {}
    current = {}
    for bit in range(instance.n_bits):
        q = b.add_column(f"data:x{bit}", _input_vector(inputs.get(bit, "+")), role="data")
        b.data_map[bit] = [q]
        current[bit] = q
    last_use = {}
    for n, clause in enumerate(instance.clauses):
        for bit in clause:
            last_use[bit] = n
    for bit in range(instance.n_bits):
        if bit not in last_use:
            b.boost(current[bit])
    for n, clause in enumerate(instance.clauses):
        close = [last_use[bit] == n for bit in clause]
        outs = b.filter_box(*(current[bit] for bit in clause), close=close)
        for bit, q in zip(clause, outs):
            if b.data_map[bit][-1] != q:
                b.data_map[bit].append(q)
            current[bit] = q
    return b.build()


# ---------------------------------------------------------------- layout checks


@dataclass
class LayoutReport:
    violations: list[str]
    table: str
    n_columns: int
    max_rows: int
    pending: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        rows = f"{self.max_rows} rows" if self.n_columns == 1 else f"max {self.max_rows} rows"
        return f"{self.n_columns} column{'s' if self.n_columns != 1 else ''}, {rows}, {self.pending} couplings pending"


def _interval_labels(graph: CircuitGraph) -> dict:
    labels = {}
    for t in graph.terms:
        if t.kind == "cnot":
            c, tg = t.qubits
            labels.setdefault((c, t.rows[0]), []).append(f"C>{tg}")
            labels.setdefault((tg, t.rows[1]), []).append(f"X<{c}")
        else:
            for q, r in t.intervals():
                labels.setdefault((q, r), []).append(t.label or t.kind)
    return labels


def layout_table(graph: CircuitGraph) -> str:
    labels = _interval_labels(graph)
    lines = [f"{'col':>4}  {'label':<18} {'role':<17} {'rows':>4}  intervals (row r-1 -> r)"]
    for c in graph.columns:
        segs = ["/".join(labels.get((c.id, r), ["-"])) for r in range(1, c.rows)]
        lines.append(f"{c.id:>4}  {c.label:<18} {graph.roles.get(c.id, ''):<17} {c.rows:>4}  " + " | ".join(segs))
    lines.append(f"dim = {graph.dim}, terms = {len(graph.terms)}")
    return "\n".join(lines)


def validate_layout(graph: CircuitGraph) -> LayoutReport:
    violations = []
    n = graph.n_columns
    cover = {}
    for idx, t in enumerate(graph.terms):
        if any(not 0 <= q < n for q in t.qubits):
            violations.append(f"term {idx} ({t.kind}): references a missing column")
            continue
        for q, r in zip(t.qubits, t.rows):
            if t.kind != "boundary" and not 1 <= r < graph.columns[q].rows:
                violations.append(f"term {idx} ({t.kind}): row {r} outside column {q}")
        for q, r in t.intervals():
            cover.setdefault((q, r), []).append(idx)
        if t.kind == "cnot" and graph.options.align_cnot and t.rows[0] != t.rows[1]:
            violations.append(f"term {idx}: misaligned cnot rows {t.rows}")
    pending = 0
    for c in graph.columns:
        for r in range(1, c.rows):
            hits = cover.get((c.id, r), [])
            if not hits:
                violations.append(f"column {c.id}: uncoupled interval [{r - 1}, {r}]")
                pending += 1
            elif len(hits) > 1:
                violations.append(f"column {c.id}: interval [{r - 1}, {r}] coupled by terms {hits}")
        if graph.options.teleport and c.rows > MAX_TELEPORT_ROWS:
            violations.append(f"column {c.id}: length bound exceeded ({c.rows} > {MAX_TELEPORT_ROWS} rows)")
    max_rows = max((c.rows for c in graph.columns), default=0)
    return LayoutReport(violations, layout_table(graph), n, max_rows, pending)
