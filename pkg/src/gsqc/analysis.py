"""Physics read off circuit ground states.

Ground states are handled as :class:`CircuitState` objects: amplitudes over an
explicit set of global basis states, always in the standard (row, bit) frame.
That keeps results from hard-boundary solves (which work in a rotated row-0
frame) and from sector solves comparable with each other.

A circuit's ground state is computed inside the *reachable sector*: the
connected component of the Hamiltonian graph that contains the input
configuration.  It is an invariant subspace for every lambda > 0, and it is
the only place where the history state lives; the full product space also
carries zero-energy states whose columns never start at row 0.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.optimize as sopt
import scipy.sparse as sp

from . import hamiltonians as hm
from .circuit import BuildOptions, CircuitGraph, build_sat_circuit
from .eigensolver import DEFAULT_TOL, DEGENERACY_TOL, GroundStateResult, lowest_eigenpairs
from .errors import ConfigurationError, DegenerateConditioningError, ValidationError
from .hilbert import BasisSpace, Subspace
from .instances import ExactCoverInstance, bitstring, satisfies

C_MAX_LENGTH = 8.0
NORM_TOL = 1e-8
CONDITIONING_FLOOR = 1e-12
SUPPORT_TOL = 1e-9
MONOTONE_SLACK = 1e-6


# ---------------------------------------------------------------- states


@dataclass
class CircuitState:
    """Amplitudes on a sorted set of global basis states (standard frame)."""

    space: BasisSpace
    states: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.int64)
        self.amplitudes = np.asarray(self.amplitudes)
        if self.states.shape != self.amplitudes.shape:
            raise ValidationError(
                f"{len(self.states)} states but {self.amplitudes.shape} amplitudes"
            )
        order = np.argsort(self.states, kind="stable")
        self.states, self.amplitudes = self.states[order], self.amplitudes[order]

    @classmethod
    def from_vector(cls, basis, vector) -> "CircuitState":
        """Wrap a vector over a :class:`BasisSpace` or a :class:`Subspace`."""
        vector = np.asarray(vector)
        dim = basis.dim
        if vector.ndim != 1 or len(vector) != dim:
            raise ValidationError(f"vector of shape {vector.shape} does not match basis dimension {dim}")
        space = basis.space if isinstance(basis, Subspace) else basis
        return cls(space, basis.states, vector)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def normalized(self, warn: bool = True) -> "CircuitState":
        n = self.norm
        if n == 0:
            raise ValidationError("zero vector")
        if warn and abs(n - 1) > NORM_TOL:
            warnings.warn(f"state norm {n:.12g} differs from 1; renormalizing", stacklevel=3)
        return CircuitState(self.space, self.states, self.amplitudes / n)

    def digits(self) -> np.ndarray:
        return self.space.decode(self.states)

    def overlap(self, other: "CircuitState") -> complex:
        common, ia, ib = np.intersect1d(self.states, other.states, return_indices=True)
        return complex(np.vdot(self.amplitudes[ia], other.amplitudes[ib]))


def _as_state(graph: CircuitGraph, vector, basis=None) -> CircuitState:
    if isinstance(vector, CircuitState):
        if vector.space.n_columns != graph.n_columns or np.any(vector.space.dims != graph.space.dims):
            raise ValidationError("state does not belong to this circuit's space")
        return vector
    return CircuitState.from_vector(basis if basis is not None else graph.space, vector)


# ---------------------------------------------------------------- solving


@dataclass
class SolvedCircuit:
    graph: CircuitGraph
    basis: Subspace
    result: GroundStateResult
    state: CircuitState
    boundary: str

    @property
    def gap(self):
        return self.result.gap

    @property
    def e0(self) -> float:
        return self.result.ground_energy


def solve_ground_state(H, k: int = 2, k_max: int = 16, **kw) -> GroundStateResult:
    """Lowest eigenpairs with ``k`` grown until the gap above the ground multiplet is resolved."""
    n = H.shape[0]
    k = min(k, n)
    while True:
        res = lowest_eigenpairs(H, k=k, **kw)
        if res.gap is not None or k >= min(k_max, n) or k == 1:
            return res
        k = min(2 * k, k_max, n)


def to_standard(graph: CircuitGraph, basis: Subspace, vector, boundary: str) -> CircuitState:
    """Express a sector vector in the standard frame."""
    if boundary == "penalty":
        return CircuitState.from_vector(basis, vector)
    real = hm.realize(graph.space, graph.terms, boundary)
    states, amps = hm.frame_to_standard(graph.space, real, basis.states, vector)
    return CircuitState(graph.space, states, amps)


def solve_circuit(graph: CircuitGraph, boundary: str | None = None, k: int = 2, tol: float = DEFAULT_TOL,
                  seed: int = 0, sector: bool = True, cap: int | None = None, polish: bool = False,
                  degeneracy_tol: float = DEGENERACY_TOL, method: str = "auto", basis=None) -> SolvedCircuit:
    """Assemble and solve a circuit, by default inside its reachable sector."""
    boundary = boundary or graph.options.boundary
    if basis is None:
        if sector:
            basis = graph.reachable_basis(boundary=boundary, cap=cap)
        else:
            real = hm.realize(graph.space, graph.terms, boundary)
            states = graph.space.states
            basis = Subspace(graph.space, states[real.keep_mask(graph.space, states)])
    H = graph.hamiltonian(basis=basis, boundary=boundary)
    res = solve_ground_state(H, k=k, tol=tol, seed=seed, polish=polish, degeneracy_tol=degeneracy_tol,
                             method=method)
    state = to_standard(graph, basis, res.ground_vector, boundary)
    return SolvedCircuit(graph, basis, res, state, boundary)


# ---------------------------------------------------------------- final rows


def final_requirements(graph: CircuitGraph) -> dict[int, int]:
    """Bit demanded on the final row of every column closed by a computational projection."""
    out = {}
    for t in graph.terms:
        if t.kind != "project":
            continue
        q = t.qubits[0]
        if t.rows[0] != graph.final_rows[q]:
            continue
        g = np.abs(t.gamma_vector())
        if np.isclose(g[0], 1.0) and np.isclose(g[1], 0.0):
            out[q] = 0
        elif np.isclose(g[1], 1.0) and np.isclose(g[0], 0.0):
            out[q] = 1
    return out


def final_mask(graph: CircuitGraph, digits: np.ndarray, projections: bool = True) -> np.ndarray:
    """Rows of ``digits`` (local indices per column) with every electron on its final row,
    optionally also on the projected bit of each projection-closed column."""
    fin = np.array([graph.final_rows[q] for q in range(graph.n_columns)], dtype=np.int64)
    ok = np.all(digits // 2 == fin[None, :], axis=1) if graph.n_columns else np.ones(len(digits), bool)
    if projections:
        for q, bit in final_requirements(graph).items():
            ok &= digits[:, q] % 2 == bit
    return ok


@dataclass
class FinalRowStats:
    p_all_final: float
    predicted: float
    per_qubit: np.ndarray
    n_columns: int
    lam: float
    C: float = C_MAX_LENGTH
    closed_form_estimate: float | None = None  # exp(-20 alpha C / D), for comparison
    estimated_qubits: float | None = None  # 20 alpha N

    def to_dict(self) -> dict:
        return {
            "p_all_final": self.p_all_final,
            "p_predicted": self.predicted,
            "per_qubit": [float(x) for x in self.per_qubit],
            "n_columns": self.n_columns,
            "lambda": self.lam,
            "C": self.C,
            "closed_form_estimate": self.closed_form_estimate,
            "estimated_qubits": self.estimated_qubits,
        }


def predicted_probability(lam: float, n_columns: int, C: float = C_MAX_LENGTH) -> float:
    """(1 - C / lambda^2)^Q; NaN where the expansion is meaningless (lambda^2 <= C)."""
    x = 1.0 - C / lam**2
    return float(x**n_columns) if x > 0 else math.nan


def closed_form_estimate(alpha: float, D: float, C: float = C_MAX_LENGTH) -> float:
    """Asymptotic all-final probability exp(-20 alpha C / D) at lambda^2 = D N."""
    return math.exp(-20.0 * alpha * C / D)


def final_row_stats(graph: CircuitGraph, vector, lam: float | None = None, D: float | None = None,
                    basis=None, C: float = C_MAX_LENGTH) -> FinalRowStats:
    st = _as_state(graph, vector, basis).normalized()
    p = st.probabilities
    digits = st.digits()
    fin = np.array([graph.final_rows[q] for q in range(graph.n_columns)], dtype=np.int64)
    at_final = digits // 2 == fin[None, :]
    per_qubit = (p[:, None] * at_final).sum(axis=0)
    p_all = float(p[np.all(at_final, axis=1)].sum()) if graph.n_columns else 1.0
    lam = float(graph.options.lam if lam is None else lam)
    n_bits = len(graph.data_map)
    n_clauses = len(graph.clause_ancillas)
    est = qubits = None
    if D is not None and n_bits:
        alpha = n_clauses / n_bits
        est = closed_form_estimate(alpha, D, C)
        qubits = 20.0 * alpha * n_bits
    return FinalRowStats(min(p_all, 1.0), predicted_probability(lam, graph.n_columns, C), per_qubit,
                         graph.n_columns, lam, C, est, qubits)


# ---------------------------------------------------------------- conditioning


@dataclass
class ConditionalDistribution:
    probabilities: dict[str, float]
    p_condition: float
    n_bits: int
    low_confidence: bool = False

    def support(self, tol: float = SUPPORT_TOL) -> set[str]:
        return {b for b, p in self.probabilities.items() if p > tol}

    def mass_outside(self, allowed) -> float:
        allowed = set(allowed)
        return float(sum(p for b, p in self.probabilities.items() if b not in allowed))

    def to_dict(self) -> dict:
        return dict(sorted(self.probabilities.items()))


def _assignment_codes(graph: CircuitGraph, digits: np.ndarray) -> np.ndarray:
    code = np.zeros(len(digits), dtype=np.int64)
    for bit, q in graph.terminal_data.items():
        code |= (digits[:, q] % 2) << bit
    return code


def _distribution(graph, codes, weights, p_cond, low_conf_below):
    n_bits = len(graph.data_map)
    if p_cond < CONDITIONING_FLOOR:
        raise DegenerateConditioningError(
            f"conditioning probability {p_cond:.3e} is below {CONDITIONING_FLOOR:g}", probability=p_cond
        )
    agg = Counter()
    for c, w in zip(codes.tolist(), weights.tolist()):
        agg[c] += w
    total = sum(agg.values())
    probs = {bitstring(c, n_bits): w / total for c, w in sorted(agg.items())}
    return ConditionalDistribution(probs, p_cond, n_bits, p_cond < low_conf_below)


def conditional_assignments(graph: CircuitGraph, vector, basis=None, projections: bool = True,
                            low_confidence_below: float = 1e-6) -> ConditionalDistribution:
    """Distribution of terminal data bits given every electron on its final row.

    With ``projections`` the event also requires the projected bit on each
    projection-closed column (the clause ancillas' 1 and 0).  In an exact null
    state those components vanish anyway; requiring them removes round-off.
    """
    if not graph.data_map:
        raise ConfigurationError("graph has no data columns to read")
    st = _as_state(graph, vector, basis).normalized()
    digits = st.digits()
    mask = final_mask(graph, digits, projections)
    p = st.probabilities
    return _distribution(graph, _assignment_codes(graph, digits[mask]), p[mask], float(p[mask].sum()),
                         low_confidence_below)


@dataclass
class MeasurementSamples:
    rows: np.ndarray  # shots x columns
    bits: np.ndarray
    all_final: np.ndarray
    assignments: np.ndarray  # integer assignment per shot (terminal data bits)
    seed: int

    @property
    def shots(self) -> int:
        return len(self.rows)

    def outcomes(self):
        """Per shot, the list of (row, bit) for each column."""
        return [list(zip(r.tolist(), b.tolist())) for r, b in zip(self.rows, self.bits)]

    def summary(self, n_bits: int) -> dict:
        c = Counter(bitstring(int(a), n_bits) for a in self.assignments[self.all_final])
        return {"shots": self.shots, "all_final": int(self.all_final.sum()), "assignments": dict(sorted(c.items()))}


def sample_measurements(graph: CircuitGraph, vector, shots: int, seed: int = 0, basis=None,
                        projections: bool = False) -> MeasurementSamples:
    """I.i.d. position measurements of every electron, drawn from |psi|^2."""
    if shots < 1:
        raise ValidationError(f"shots must be >= 1, got {shots}")
    st = _as_state(graph, vector, basis).normalized()
    p = st.probabilities
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(p), size=shots, p=p / p.sum())
    digits = st.space.decode(st.states[picks])
    mask = final_mask(graph, digits, projections)
    return MeasurementSamples(digits // 2, digits % 2, mask, _assignment_codes(graph, digits), seed)


def sample_conditional(dist: ConditionalDistribution, shots: int, seed: int = 0) -> list[str]:
    rng = np.random.default_rng(seed)
    keys = list(dist.probabilities)
    probs = np.array([dist.probabilities[k] for k in keys])
    return [keys[i] for i in rng.choice(len(keys), size=shots, p=probs / probs.sum())]


# ---------------------------------------------------------------- pinned decomposition


@dataclass
class PinResult:
    assignment: int
    sector_dim: int
    conditional_weight: float
    solved: bool
    residual: float | None = None
    norm_sq: float | None = None


@dataclass
class PinnedDecomposition:
    """Ground state of a circuit with all-(|0>+|1>) data inputs, assembled from pinned inputs.

    The circuit's null state depends linearly on the product input, so the
    state for uniform superposition inputs is the sum over computational
    inputs b of the null state whose input configuration has amplitude
    2^(-N/2).  Data columns only ever act as controls, so the pieces have
    disjoint supports and each all-final reading comes from exactly one pin.
    """

    graph: CircuitGraph
    pins: list[PinResult]
    state: CircuitState | None = None

    def conditional(self, low_confidence_below: float = 1e-6) -> ConditionalDistribution:
        codes = np.array([p.assignment for p in self.pins], dtype=np.int64)
        w = np.array([p.conditional_weight for p in self.pins])
        n_pins = len(self.pins)
        if self.state is not None:
            p_cond = float(w.sum() / n_pins / self.state.norm**2)
        else:
            p_cond = math.nan
        if not w.sum() > 0:
            raise DegenerateConditioningError("no pinned input reaches the final rows", probability=0.0)
        keep = w > 0
        dist = _distribution(self.graph, codes[keep], w[keep], 1.0, 0.0)
        dist.p_condition = p_cond
        dist.low_confidence = bool(p_cond < low_confidence_below) if not math.isnan(p_cond) else False
        return dist


def _seed_position(space: BasisSpace, terms, states: np.ndarray) -> int:
    seed = int(np.ravel(hm.seed_states(space, terms, "penalty"))[0])
    pos = int(np.searchsorted(states, seed))
    if pos >= len(states) or states[pos] != seed:
        raise ValidationError("input configuration missing from the solved support")
    return pos


def pinned_decomposition(instance: ExactCoverInstance, options: BuildOptions | None = None,
                         skip_unreachable: bool = False, tol: float = DEFAULT_TOL, seed: int = 0,
                         cap: int | None = None, polish: bool = True,
                         progress: Callable[[str], None] | None = None) -> PinnedDecomposition:
    """Solve each computational input separately (hard boundary, reachable sector).

    With ``skip_unreachable`` pins whose sector contains no final-row reading
    are recorded with zero conditional weight and not solved; the assembled
    state is then unavailable, but the conditional distribution stays exact.
    """
    options = replace(options or BuildOptions(), hard_boundary=True)
    n = instance.n_bits
    plus_graph = build_sat_circuit(instance, options)
    pins, pieces_s, pieces_a = [], [], []
    scale = 2.0 ** (-n / 2)
    for b in range(2**n):
        graph = build_sat_circuit(instance, options, inputs={i: str((b >> i) & 1) for i in range(n)})
        basis = graph.reachable_basis(boundary="hard", cap=cap)
        reachable_final = bool(np.any(final_mask(graph, basis.space.decode(basis.states))))
        if skip_unreachable and not reachable_final:
            pins.append(PinResult(b, basis.dim, 0.0, False))
            continue
        H = graph.hamiltonian(basis=basis, boundary="hard")
        res = lowest_eigenpairs(H, k=1, tol=tol, seed=seed, polish=polish)
        st = to_standard(graph, basis, res.ground_vector, "hard")
        amp0 = st.amplitudes[_seed_position(graph.space, graph.terms, st.states)]
        amps = st.amplitudes / amp0
        digits = st.digits()
        w = float(np.sum(np.abs(amps[final_mask(graph, digits)]) ** 2))
        pins.append(PinResult(b, basis.dim, w, True, float(res.residuals[0]), float(np.sum(np.abs(amps) ** 2))))
        pieces_s.append(st.states)
        pieces_a.append(amps * scale)
        if progress:
            progress(f"pin {bitstring(b, n)}: sector {basis.dim}, weight {w:.6g}")
    state = None
    if all(p.solved for p in pins):
        states = np.concatenate(pieces_s)
        if len(np.unique(states)) != len(states):
            raise AssertionError("pinned supports overlap")
        state = CircuitState(plus_graph.space, states, np.concatenate(pieces_a))
    return PinnedDecomposition(plus_graph, pins, state)


def check_assignments(instance: ExactCoverInstance, samples: Sequence[str]) -> int:
    """Number of sampled bit strings that violate some clause."""
    return sum(not satisfies(instance, int(s, 2)) for s in samples)


# ---------------------------------------------------------------- sweeps and fits


@dataclass
class PowerLawFit:
    exponent: float  # p in y ~ x^(-p)
    stderr: float
    log_prefactor: float

    def __str__(self):
        return f"p = {self.exponent:.3f} +/- {self.stderr:.3f}"


def fit_power_law(x, y, rel_sigma=None) -> PowerLawFit:
    """Weighted least squares of log y on log x; returns p with y ~ x^(-p)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 4:
        raise ValidationError(f"exponent fit needs at least 4 points, got {len(x)}")
    if x.max() / x.min() < 10 - 1e-12:
        raise ValidationError("exponent fit needs the x values to span at least one decade")
    if np.any(y <= 0):
        raise ValidationError("power-law fit needs positive values")
    w = None if rel_sigma is None else 1.0 / np.maximum(np.asarray(rel_sigma, float), 1e-300)
    coef, cov = np.polyfit(np.log(x), np.log(y), 1, w=w, cov="unscaled" if w is not None else True)
    return PowerLawFit(-float(coef[0]), float(np.sqrt(max(cov[0, 0], 0.0))), float(coef[1]))


def fit_c_eff(lams, p_all_final, n_columns: int) -> tuple[float, np.ndarray]:
    """Best C in p = (1 - C/lambda^2)^Q (least squares in log p); returns (C, relative errors)."""
    lams, p = np.asarray(lams, float), np.asarray(p_all_final, float)
    lo = np.min(lams**2)

    def loss(c):
        return float(np.sum((n_columns * np.log1p(-c / lams**2) - np.log(p)) ** 2))

    r = sopt.minimize_scalar(loss, bounds=(0.0, lo * (1 - 1e-9)), method="bounded",
                             options={"xatol": 1e-12})
    c = float(r.x)
    pred = (1 - c / lams**2) ** n_columns
    return c, np.abs(pred - p) / p


@dataclass
class SweepRow:
    lam: float
    e0: float
    gap: float | None
    p_all_final: float
    p_predicted: float
    residual: float = 0.0


@dataclass
class SweepResult:
    rows: list[SweepRow]
    n_columns: int
    gap_fit: PowerLawFit | None = None
    config: dict = field(default_factory=dict)

    @property
    def lams(self):
        return np.array([r.lam for r in self.rows])

    @property
    def gaps(self):
        return np.array([np.nan if r.gap is None else r.gap for r in self.rows])

    @property
    def p_all_final(self):
        return np.array([r.p_all_final for r in self.rows])

    def p_monotone(self, slack: float = 1e-9) -> bool:
        p = self.p_all_final[np.argsort(self.lams)]
        return bool(np.all(np.diff(p) >= -slack))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "e0", "gap", "p_all_final", "p_predicted"])
        for r in self.rows:
            w.writerow([repr(r.lam), repr(r.e0), "" if r.gap is None else repr(r.gap), repr(r.p_all_final),
                        repr(r.p_predicted)])
        return buf.getvalue()


def lambda_sweep(template, lams: Sequence[float], seed: int = 0, boundary: str | None = None,
                 tol: float = DEFAULT_TOL, degeneracy_tol: float = DEGENERACY_TOL, fit: bool = True,
                 C: float = C_MAX_LENGTH, cap: int | None = None) -> SweepResult:
    """Solve a circuit across lambda values (``template`` is a graph or a lambda -> graph callable)."""
    lams = [float(x) for x in lams]
    make = template if callable(template) else template.with_lambda
    basis = None
    rows = []
    for lam in lams:
        graph = make(lam)
        if basis is None:
            # the reachable sector does not depend on lambda
            basis = graph.reachable_basis(boundary=boundary, cap=cap)
        try:
            sol = solve_circuit(graph, boundary=boundary, tol=tol, seed=seed, basis=basis,
                                degeneracy_tol=degeneracy_tol)
        except Exception as exc:
            raise type(exc)(f"lambda = {lam}: {exc}") from exc
        stats = final_row_stats(graph, sol.state, lam=lam, C=C)
        rows.append(SweepRow(lam, sol.e0, sol.gap, stats.p_all_final, stats.predicted,
                             float(np.max(sol.result.residuals))))
    out = SweepResult(rows, graph.n_columns)
    if fit:
        gaps = out.gaps
        good = np.isfinite(gaps) & (gaps > 0)
        if good.sum() >= 4:
            out.gap_fit = fit_power_law(out.lams[good], gaps[good])
    return out


# ---------------------------------------------------------------- adiabatic schedule


STAGES = ("prep", "open", "boost")


@dataclass
class Schedule:
    """Parameter grids of the three-stage protocol.

    ``prep`` is the single point 1/lambda' = 0 at lambda = 1; ``open`` drives
    s = 1/lambda' from 0 to 1 at lambda = 1; ``boost`` drives s = 1/lambda
    from 1 down to 1/sqrt(D N) at lambda' = 1.
    """

    D: float
    n_bits: int
    open_points: int = 11
    boost_points: int = 11

    def __post_init__(self):
        if self.D <= 0 or self.n_bits < 1:
            raise ValidationError("schedule needs D > 0 and at least one problem bit")
        if self.open_points < 2 or self.boost_points < 2:
            raise ValidationError("each schedule stage needs at least 2 grid points")
        if self.D * self.n_bits < 1:
            raise ValidationError("D N must be at least 1 so that lambda grows")

    @property
    def final_lambda(self) -> float:
        return math.sqrt(self.D * self.n_bits)

    def points(self, stage: str) -> np.ndarray:
        if stage == "prep":
            return np.array([0.0])
        if stage == "open":
            return np.linspace(0.0, 1.0, self.open_points)
        if stage == "boost":
            return np.linspace(1.0, 1.0 / self.final_lambda, self.boost_points)
        raise ConfigurationError(f"unknown stage {stage!r}")


def schedule_graph(graph: CircuitGraph, stage: str, s: float) -> CircuitGraph:
    """Static circuit at one schedule point."""
    if not any(t.kind == "prep_boost" for t in graph.terms):
        raise ValidationError("schedule needs a circuit built with prep rows (prep-boost terms)")
    if stage in ("prep", "open"):
        return graph.with_lambda(1.0).with_prep(s)
    if stage == "boost":
        if not 0 < s <= 1:
            raise ValidationError(f"boost-stage parameter 1/lambda must lie in (0, 1], got {s}")
        return graph.with_lambda(1.0 / s).with_prep(1.0)
    raise ConfigurationError(f"unknown stage {stage!r}")


@dataclass
class ScheduleRow:
    stage: str
    s: float
    e0: float
    gap: float | None
    p_first: float | None = None  # all electrons on row 0


@dataclass
class ScheduleTrace:
    rows: list[ScheduleRow]
    schedule: Schedule
    monotone: bool
    anomalies: list[str]

    @property
    def min_gap(self) -> tuple[float, str, float]:
        best = min((r for r in self.rows if r.gap is not None), key=lambda r: r.gap)
        return best.gap, best.stage, best.s

    @property
    def runtime_scale(self) -> float:
        """T ~ 1 / Delta_min^2 (arbitrary units)."""
        return 1.0 / self.min_gap[0] ** 2

    def stage_rows(self, stage: str):
        return [r for r in self.rows if r.stage == stage]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "s", "e0", "gap"])
        for r in self.rows:
            w.writerow([r.stage, repr(float(r.s)), repr(r.e0), "" if r.gap is None else repr(r.gap)])
        return buf.getvalue()


def first_row_occupation(sol: SolvedCircuit, tol: float = DEFAULT_TOL) -> float:
    """All-first-row probability of the preparation state.

    The preparation point is degenerate, so a returned ground vector is an
    arbitrary member of a large null space.  Instead penalize every
    configuration off the first rows (unit weight) and take the lowest state:
    energy zero with occupation one means the all-first-row state is an exact
    ground state.  Returns 0 when the penalized energy is not zero.
    """
    digits = sol.basis.space.decode(sol.basis.states)
    off = (~np.all(digits // 2 == 0, axis=1)).astype(float)
    H = sol.graph.hamiltonian(basis=sol.basis, boundary=sol.boundary)
    r = lowest_eigenpairs(H + sp.diags(off), k=1, tol=tol)
    if r.ground_energy > max(10 * tol, 1e-9):
        return 0.0
    v = r.ground_vector
    return float(np.sum(np.abs(v[off == 0]) ** 2) / np.vdot(v, v).real)


def schedule_trace(graph: CircuitGraph, D: float, grid: tuple[int, int] = (11, 11), seed: int = 0,
                   boundary: str | None = None, tol: float = DEFAULT_TOL, slack: float = MONOTONE_SLACK,
                   degeneracy_tol: float = DEGENERACY_TOL, cap: int | None = None) -> ScheduleTrace:
    """Ground energy and gap along the three stages; non-monotone boost-stage gaps are reported."""
    n_bits = len(graph.data_map) or 1
    sched = Schedule(D, n_bits, *grid)
    basis = schedule_graph(graph, "open", 1.0).reachable_basis(boundary=boundary, cap=cap)
    rows = []
    for stage in STAGES:
        for s in sched.points(stage):
            g = schedule_graph(graph, stage, float(s))
            sol = solve_circuit(g, boundary=boundary, tol=tol, seed=seed, basis=basis,
                                degeneracy_tol=degeneracy_tol)
            p_first = first_row_occupation(sol, tol) if stage == "prep" else None
            rows.append(ScheduleRow(stage, float(s), sol.e0, sol.gap, p_first))
    boost = [r for r in rows if r.stage == "boost"]
    anomalies = []
    for a, b in zip(boost, boost[1:]):
        if a.gap is None or b.gap is None:
            anomalies.append(f"unresolved gap near 1/lambda = {b.s:.6g}")
        elif b.gap > a.gap + slack:
            anomalies.append(f"gap rises from {a.gap:.6g} to {b.gap:.6g} between 1/lambda = {a.s:.6g} and {b.s:.6g}")
    return ScheduleTrace(rows, sched, not anomalies, anomalies)
