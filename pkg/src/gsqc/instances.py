"""3-bit Exact Cover instances, brute-force oracle and solution-count diagnostics.

Assignments are integers with bit ``b`` of the integer holding problem bit
``b``.  Printed bit strings put bit ``N-1`` first (MSB) and bit 0 last.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import CapacityError, ConfigurationError, ValidationError

MAX_BRUTE_FORCE_BITS = 30


@dataclass(frozen=True)
class ExactCoverInstance:
    n_bits: int
    clauses: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(int(b) for b in c) for c in self.clauses))
        if self.n_bits < 0:
            raise ConfigurationError(f"n_bits must be non-negative, got {self.n_bits}")
        for c in self.clauses:
            if len(set(c)) != len(c):
                raise ConfigurationError(f"clause {c} repeats a bit")
            if any(not 0 <= b < self.n_bits for b in c):
                raise ConfigurationError(f"clause {c} references a bit outside [0, {self.n_bits})")

    @property
    def n_clauses(self) -> int:
        return len(self.clauses)

    @property
    def alpha(self) -> float:
        return self.n_clauses / self.n_bits if self.n_bits else 0.0

    def prefix(self, m: int) -> "ExactCoverInstance":
        return ExactCoverInstance(self.n_bits, self.clauses[:m])

    def reordered(self, order) -> "ExactCoverInstance":
        return ExactCoverInstance(self.n_bits, tuple(self.clauses[i] for i in order))

    def to_dict(self) -> dict:
        return {"n_bits": self.n_bits, "clauses": [list(c) for c in self.clauses]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ExactCoverInstance":
        return cls(int(d["n_bits"]), tuple(tuple(c) for c in d["clauses"]))

    @classmethod
    def from_json(cls, text: str) -> "ExactCoverInstance":
        return cls.from_dict(json.loads(text))


def satisfies(instance: ExactCoverInstance, assignment: int) -> bool:
    return all(sum((assignment >> b) & 1 for b in c) == 1 for c in instance.clauses)


def bitstring(assignment: int, n_bits: int) -> str:
    return format(assignment, f"0{n_bits}b") if n_bits else ""


def from_bitstring(s: str) -> int:
    return int(s, 2) if s else 0


def generate(n_bits: int, n_clauses: int, seed: int | None = None) -> ExactCoverInstance:
    """``n_clauses`` distinct 3-subsets drawn uniformly without replacement."""
    if n_bits < 3:
        raise ConfigurationError(f"need at least 3 bits, got {n_bits}")
    if n_clauses < 0:
        raise ConfigurationError(f"clause count must be non-negative, got {n_clauses}")
    total = math.comb(n_bits, 3)
    if n_clauses > total:
        raise CapacityError(f"{n_clauses} clauses requested but only C({n_bits},3) = {total} exist",
                            required=n_clauses, limit=total)
    rng = np.random.default_rng(seed)
    triples = list(itertools.combinations(range(n_bits), 3))
    picks = rng.choice(total, size=n_clauses, replace=False)
    return ExactCoverInstance(n_bits, tuple(triples[int(p)] for p in picks))


def _check_bound(instance: ExactCoverInstance):
    if instance.n_bits > MAX_BRUTE_FORCE_BITS:
        raise CapacityError(f"brute force limited to {MAX_BRUTE_FORCE_BITS} bits, got {instance.n_bits}",
                            required=instance.n_bits, limit=MAX_BRUTE_FORCE_BITS)


def _clause_masks(instance):
    return [sum(1 << b for b in c) for c in instance.clauses]


def solution_mask(instance: ExactCoverInstance, assignments: np.ndarray | None = None) -> np.ndarray:
    _check_bound(instance)
    if assignments is None:
        assignments = np.arange(2**instance.n_bits, dtype=np.int64)
    ok = np.ones(len(assignments), dtype=bool)
    for c in instance.clauses:
        ones = sum(((assignments >> b) & 1) for b in c)
        ok &= ones == 1
    return ok


def brute_force(instance: ExactCoverInstance) -> list[int]:
    """All satisfying assignments, ascending."""
    _check_bound(instance)
    a = np.arange(2**instance.n_bits, dtype=np.int64)
    return [int(x) for x in a[solution_mask(instance, a)]]


def brute_force_filtered(instance: ExactCoverInstance) -> list[int]:
    """Independent enumeration: extend partial assignments clause by clause."""
    _check_bound(instance)
    fixed = [{}]
    for c in instance.clauses:
        nxt = []
        for part in fixed:
            for one in c:
                want = {b: int(b == one) for b in c}
                if all(part.get(b, v) == v for b, v in want.items()):
                    merged = dict(part)
                    merged.update(want)
                    nxt.append(merged)
        # dedupe identical partial assignments
        fixed = [dict(t) for t in {tuple(sorted(p.items())) for p in nxt}]
    out = set()
    for part in fixed:
        free = [b for b in range(instance.n_bits) if b not in part]
        base = sum(v << b for b, v in part.items())
        for bits in itertools.product((0, 1), repeat=len(free)):
            out.add(base + sum(v << b for v, b in zip(bits, free)))
    return sorted(out)


def backbone(solutions: list[int], n_bits: int) -> dict[int, int]:
    """Bits that take the same value in every solution (empty if no solutions)."""
    if not solutions:
        return {}
    out = {}
    for b in range(n_bits):
        vals = {(s >> b) & 1 for s in solutions}
        if len(vals) == 1:
            out[b] = vals.pop()
    return out


@dataclass
class RatioProfile:
    counts: list[int]
    ratios: list[Fraction | None] = field(default_factory=list)

    @property
    def truncated(self) -> bool:
        return any(r is None for r in self.ratios)

    @property
    def max_ratio(self) -> Fraction | None:
        vals = [r for r in self.ratios if r is not None]
        return max(vals) if vals else None

    def rows(self):
        for j, s in enumerate(self.counts):
            r = self.ratios[j - 1] if j else None
            yield j, s, r


def ratio_profile(instance: ExactCoverInstance) -> RatioProfile:
    _check_bound(instance)
    a = np.arange(2**instance.n_bits, dtype=np.int64)
    alive = np.ones(len(a), dtype=bool)
    counts = [int(alive.sum())]
    for c in instance.clauses:
        alive &= sum(((a >> b) & 1) for b in c) == 1
        counts.append(int(alive.sum()))
    ratios = []
    for s_prev, s_next in zip(counts, counts[1:]):
        if s_next == 0:
            ratios.append(None)
            break
        ratios.append(Fraction(s_prev, s_next))
    return RatioProfile(counts, ratios)


def order_clauses(instance: ExactCoverInstance, strategy: str = "given") -> ExactCoverInstance:
    """Reorder clauses; ``greedy-min-ratio`` picks the smallest S_j/S_{j+1} at each step."""
    if strategy == "given":
        return instance
    if strategy != "greedy-min-ratio":
        raise ConfigurationError(f"unknown ordering strategy {strategy!r}")
    _check_bound(instance)
    a = np.arange(2**instance.n_bits, dtype=np.int64)
    hits = [sum(((a >> b) & 1) for b in c) == 1 for c in instance.clauses]
    alive = np.ones(len(a), dtype=bool)
    remaining = list(range(instance.n_clauses))
    order = []
    while remaining:
        s = int(alive.sum())
        best, best_key = None, None
        for idx in remaining:
            s_next = int((alive & hits[idx]).sum())
            # an emptying clause has an infinite ratio; keep it for last
            key = (Fraction(s, s_next) if s_next else math.inf, idx)
            if best_key is None or key < best_key:
                best, best_key = idx, key
        order.append(best)
        remaining.remove(best)
        alive &= hits[best]
    out = instance.reordered(order)
    if set(brute_force(out)) != set(brute_force(instance)):
        raise AssertionError("clause reordering changed the solution set")
    return out


@dataclass(frozen=True)
class LambdaRequirement:
    lambda_sq: float
    lam: float
    gap_penalty: float  # relative gap factor (base / lambda^2)^4 implied by the lambda^-8 law


def required_lambda(ratio, base: float) -> LambdaRequirement:
    """lambda^2 needed to keep the final-row probability when a clause cuts the count by ``ratio``."""
    ratio = float(ratio)
    if ratio < 1:
        raise ValidationError(f"solution-count ratio must be >= 1, got {ratio}")
    if base <= 0:
        raise ValidationError(f"base lambda^2 must be positive, got {base}")
    lam_sq = base * ratio
    return LambdaRequirement(lam_sq, math.sqrt(lam_sq), (base / lam_sq) ** 4)


# ---------------------------------------------------------------- text format


def read_dimacs(path) -> ExactCoverInstance:
    """Read ``p ec3 N M`` followed by one clause per line (0-based bits; a trailing 0 terminator
    is accepted when the line has four entries)."""
    n_bits = n_clauses = None
    clauses = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if len(parts) != 4 or parts[1] != "ec3":
                raise ConfigurationError(f"line {lineno}: bad problem line {line!r}")
            n_bits, n_clauses = int(parts[2]), int(parts[3])
            continue
        if n_bits is None:
            raise ConfigurationError(f"line {lineno}: clause before problem line")
        vals = [int(x) for x in parts]
        if len(vals) == 4 and vals[-1] == 0:
            vals = vals[:3]
        if len(vals) != 3:
            raise ConfigurationError(f"line {lineno}: expected 3 bits, got {vals}")
        clauses.append(tuple(vals))
    if n_bits is None:
        raise ConfigurationError("missing 'p ec3 N M' header")
    if n_clauses != len(clauses):
        raise ConfigurationError(f"header declares {n_clauses} clauses, found {len(clauses)}")
    return ExactCoverInstance(n_bits, tuple(clauses))


def write_dimacs(instance: ExactCoverInstance, path):
    lines = [f"p ec3 {instance.n_bits} {instance.n_clauses}"]
    lines += [" ".join(str(b) for b in c) for c in instance.clauses]
    Path(path).write_text("\n".join(lines) + "\n")


def load_instance(path) -> ExactCoverInstance:
    path = Path(path)
    if path.suffix == ".json":
        return ExactCoverInstance.from_json(path.read_text())
    return read_dimacs(path)
