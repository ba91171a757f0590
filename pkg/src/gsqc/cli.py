"""Command-line front end: ``python -m gsqc <command> [options]``.

Commands: build, solve, sweep, schedule, oracle, verify.  Every artifact is
written under ``--out`` together with a JSON echo of the run configuration.
Exit codes: 0 success, 2 validation, 3 capacity, 4 convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analysis as an
from . import circuit as cc
from . import instances as inst
from .eigensolver import DEFAULT_TOL, write_eigenvectors
from .errors import CapacityError, ConvergenceError, GSQCError

DEFAULT_CAP = 2_000_000
EXIT_OK, EXIT_VALIDATION, EXIT_CAPACITY, EXIT_CONVERGENCE = 0, 2, 3, 4
CIRCUITS = ("sat", "filter-box", "boosted-qubit", "teleport-chain")


@dataclass
class RunConfig:
    command: str
    instance: str | None = None
    gen: tuple[int, int, int] | None = None
    circuit: str = "sat"
    chain: int = 1
    lam: float | None = None
    lambda_grid: tuple[float, float, int] | None = None
    bigd: float | None = None
    teleport: bool = False
    boundary: str = "penalty"
    tol: float = DEFAULT_TOL
    seed: int = 0
    out: str = "gsqc-out"
    cap: int = DEFAULT_CAP
    pinned: bool = False
    shots: int = 0
    order: str = "given"
    grid: tuple[int, int] = (11, 11)
    dump_vectors: bool = False
    extra: dict = field(default_factory=dict)

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        return d


# ---------------------------------------------------------------- parsing


def _gen(text: str):
    try:
        n, m, s = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--gen expects N,M,SEED, got {text!r}") from None
    return n, m, s


def _grid(text: str):
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--lambda-grid expects a:b:n, got {text!r}") from None
    if not (0 < a < b) or n < 2:
        raise argparse.ArgumentTypeError("--lambda-grid needs 0 < a < b and n >= 2")
    return a, b, n


def _onoff(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def _pair(text: str):
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two integers a,b, got {text!r}") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gsqc", description="Ground-state quantum computation simulator for 3-bit Exact Cover.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--instance", metavar="PATH", help="instance file (.json or 'p ec3 N M' text)")
    src.add_argument("--gen", type=_gen, metavar="N,M,SEED", help="random instance")
    common.add_argument("--circuit", choices=CIRCUITS, default="sat",
                        help="circuit family (default: SAT circuit of the instance)")
    common.add_argument("--chain", type=int, default=1, help="teleport-chain length")
    lam = common.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=float, metavar="X")
    lam.add_argument("--lambda-grid", type=_grid, metavar="a:b:n", help="n log-spaced values from a to b")
    common.add_argument("--bigd", type=float, metavar="D", help="D in lambda^2 = D N")
    common.add_argument("--teleport", type=_onoff, default=False, metavar="on|off")
    common.add_argument("--boundary", choices=("penalty", "hard"), default="penalty")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="eigen-residual bound")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="gsqc-out", metavar="DIR")
    common.add_argument("--cap", type=int, default=DEFAULT_CAP, help="dimension cap for assembly")
    for name, helptext in [
        ("build", "build a circuit and report its layout"),
        ("solve", "ground state, gap and final-row statistics"),
        ("sweep", "lambda sweep with gap-exponent fit"),
        ("schedule", "gap trace along the three-stage adiabatic schedule"),
        ("oracle", "brute-force solutions and solution-count ratios"),
        ("verify", "run the invariant checks on built-in fixtures"),
    ]:
        sp = sub.add_parser(name, parents=[common], help=helptext)
        if name == "solve":
            sp.add_argument("--pinned", action="store_true",
                            help="assemble the state from computational-input solves")
            sp.add_argument("--shots", type=int, default=0, help="conditioned samples to draw")
            sp.add_argument("--dump-vectors", action="store_true", help="write eigenvectors (binary)")
        if name == "oracle":
            sp.add_argument("--order", choices=("given", "greedy-min-ratio"), default="given")
        if name == "schedule":
            sp.add_argument("--grid", type=_pair, default=(11, 11), metavar="OPEN,BOOST")
    return p


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(
        command=args.command, instance=args.instance, gen=args.gen, circuit=args.circuit, chain=args.chain,
        lam=args.lam, lambda_grid=args.lambda_grid, bigd=args.bigd, teleport=args.teleport,
        boundary=args.boundary, tol=args.tol, seed=args.seed, out=args.out, cap=args.cap,
        pinned=getattr(args, "pinned", False), shots=getattr(args, "shots", 0),
        order=getattr(args, "order", "given"), grid=getattr(args, "grid", (11, 11)),
        dump_vectors=getattr(args, "dump_vectors", False),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig):
    from .errors import ValidationError

    if cfg.lam is not None and cfg.lam < 1:
        raise ValidationError(f"lambda must be >= 1, got {cfg.lam}")
    if cfg.lambda_grid is not None and cfg.lambda_grid[0] < 1:
        raise ValidationError("lambda grid must start at >= 1")
    if cfg.bigd is not None and cfg.bigd <= 0:
        raise ValidationError(f"D must be positive, got {cfg.bigd}")
    if cfg.tol <= 0:
        raise ValidationError(f"tolerance must be positive, got {cfg.tol}")
    if cfg.cap < 1:
        raise ValidationError("capacity must be positive")
    if cfg.chain < 1:
        raise ValidationError("teleport chain needs at least one box")
    if cfg.shots < 0:
        raise ValidationError("shots must be non-negative")
    if cfg.circuit == "sat" and cfg.command not in ("verify",) and cfg.instance is None and cfg.gen is None:
        raise ValidationError("the sat circuit needs --instance or --gen")


# ---------------------------------------------------------------- helpers


def load_problem(cfg: RunConfig) -> inst.ExactCoverInstance | None:
    if cfg.instance:
        return inst.load_instance(cfg.instance)
    if cfg.gen:
        n, m, s = cfg.gen
        return inst.generate(n, m, s)
    return None


def default_lambda(cfg: RunConfig, problem) -> float:
    if cfg.lam is not None:
        return cfg.lam
    if cfg.bigd is not None and problem is not None and problem.n_bits:
        return math.sqrt(cfg.bigd * problem.n_bits)
    return 8.0


def lambda_values(cfg: RunConfig) -> list[float]:
    if cfg.lambda_grid is None:
        return [2.0, 4.0, 8.0, 16.0, 32.0]
    a, b, n = cfg.lambda_grid
    return [float(x) for x in np.geomspace(a, b, n)]


def make_graph(cfg: RunConfig, problem, lam: float, prep_rows: bool = False) -> cc.CircuitGraph:
    opts = cc.BuildOptions(lam=lam, teleport=cfg.teleport, hard_boundary=cfg.boundary == "hard",
                           prep_rows=prep_rows)
    if cfg.circuit == "sat":
        return cc.build_sat_circuit(problem, opts)
    if cfg.circuit == "filter-box":
        return cc.build_filter_box(opts)
    if cfg.circuit == "boosted-qubit":
        b = cc.CircuitBuilder(opts)
        q = b.add_column("data:x0", cc.PLUS, role="data")
        b.data_map[0] = [q]
        b.boost(q)
        return b.build()
    return cc.build_teleport_box(opts, chain=cfg.chain)


def check_capacity(dim: int, cap: int, what: str):
    if dim > cap:
        raise CapacityError(
            f"{what} dimension {dim:.4g} exceeds the capacity limit {cap:g}; "
            "try --teleport off, fewer clauses, --pinned, or raise --cap",
            required=dim, limit=cap,
        )


def write_json(path: Path, payload: dict, cfg: RunConfig):
    payload = dict(payload)
    payload["config"] = cfg.echo()
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not serializable: {type(x)}")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands


def cmd_build(cfg: RunConfig) -> int:
    problem = load_problem(cfg)
    graph = make_graph(cfg, problem, default_lambda(cfg, problem))
    report = cc.validate_layout(graph)
    out = _outdir(cfg)
    (out / "circuit.json").write_text(graph.to_json(indent=1) + "\n")
    (out / "layout.txt").write_text(report.table + "\n")
    n_terms = {}
    for t in graph.terms:
        n_terms[t.kind] = n_terms.get(t.kind, 0) + 1
    summary = {
        "n_columns": graph.n_columns,
        "dim": graph.dim,
        "within_capacity": graph.dim <= cfg.cap,
        "capacity": cfg.cap,
        "terms": n_terms,
        "layout": report.summary(),
        "layout_violations": report.violations,
    }
    write_json(out / "build.json", summary, cfg)
    print(f"{graph.n_columns} columns, dimension {graph.dim:.6g}, {sum(n_terms.values())} terms")
    print(report.summary())
    if graph.dim > cfg.cap:
        print(f"dimension exceeds the capacity limit {cfg.cap:g}: solve will refuse this circuit")
    if not report.ok:
        for v in report.violations:
            print(f"layout: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    from .errors import ValidationError

    problem = load_problem(cfg)
    lam = default_lambda(cfg, problem)
    out = _outdir(cfg)
    if cfg.pinned:
        if problem is None or cfg.circuit != "sat":
            raise ValidationError("--pinned needs a sat instance")
        dec = an.pinned_decomposition(problem, cc.BuildOptions(lam=lam, teleport=cfg.teleport),
                                      skip_unreachable=True, tol=cfg.tol, seed=cfg.seed, cap=cfg.cap)
        dist = dec.conditional()
        payload = {
            "lambda": lam,
            "pins": [asdict(p) for p in dec.pins],
            "conditional": dist.to_dict(),
            "solutions": [inst.bitstring(s, problem.n_bits) for s in inst.brute_force(problem)],
        }
        _add_samples(payload, dist, cfg, problem)
        write_json(out / "solve.json", payload, cfg)
        (out / "distribution.json").write_text(json.dumps(dist.to_dict(), indent=2) + "\n")
        print(json.dumps(dist.to_dict()))
        return EXIT_OK
    graph = make_graph(cfg, problem, lam)
    basis = graph.reachable_basis(cap=cfg.cap)
    check_capacity(basis.dim, cfg.cap, "sector")
    sol = an.solve_circuit(graph, tol=cfg.tol, seed=cfg.seed, basis=basis)
    if sol.e0 < -1e-9:
        raise ValidationError(f"ground energy {sol.e0:.3e} is negative: the Hamiltonian is not PSD")
    stats = an.final_row_stats(graph, sol.state, lam=lam, D=cfg.bigd)
    res = sol.result
    payload = {
        "lambda": lam,
        "sector_dim": basis.dim,
        "full_dim": graph.dim,
        "energies": res.energies,
        "gap": res.gap,
        "multiplicity": res.multiplicity,
        "residuals": res.residuals,
        "method": res.method,
        "final_rows": stats.to_dict(),
    }
    if graph.data_map and graph.clause_ancillas:
        try:
            dist = an.conditional_assignments(graph, sol.state)
            payload["conditional"] = dist.to_dict()
            payload["p_condition"] = dist.p_condition
            (out / "distribution.json").write_text(json.dumps(dist.to_dict(), indent=2) + "\n")
            if problem is not None:
                _add_samples(payload, dist, cfg, problem)
        except GSQCError as exc:
            payload["conditional_error"] = str(exc)
    if cfg.dump_vectors:
        write_eigenvectors(out / "eigenvectors.bin", res.vectors)
    write_json(out / "solve.json", payload, cfg)
    print(f"E0 = {sol.e0:.6e}  gap = {res.gap}  multiplicity = {res.multiplicity}  "
          f"p_all_final = {stats.p_all_final:.6f} (predicted {stats.predicted:.6f})")
    if "conditional" in payload:
        print(json.dumps(payload["conditional"]))
    return EXIT_OK


def _add_samples(payload, dist, cfg, problem):
    if cfg.shots:
        draws = an.sample_conditional(dist, cfg.shots, seed=cfg.seed)
        payload["samples"] = {"shots": cfg.shots, "violations": an.check_assignments(problem, draws)}


def cmd_sweep(cfg: RunConfig) -> int:
    problem = load_problem(cfg)
    lams = lambda_values(cfg)
    template = make_graph(cfg, problem, lams[0])
    basis = template.reachable_basis(cap=cfg.cap)
    check_capacity(basis.dim, cfg.cap, "sector")
    result = an.lambda_sweep(template, lams, seed=cfg.seed, tol=cfg.tol, fit=False, cap=cfg.cap)
    out = _outdir(cfg)
    (out / "sweep.csv").write_text(result.to_csv())
    meta = {"n_columns": result.n_columns, "sector_dim": basis.dim, "p_monotone": result.p_monotone()}
    gaps = result.gaps
    good = np.isfinite(gaps) & (gaps > 0)
    try:
        fit = an.fit_power_law(result.lams[good], gaps[good])
        meta["gap_exponent"] = fit.exponent
        meta["gap_exponent_stderr"] = fit.stderr
        print(f"gap exponent: {fit}")
    except GSQCError as exc:
        meta["gap_fit_error"] = str(exc)
        print(f"no exponent fit: {exc}")
    ok = result.lams**2 > an.C_MAX_LENGTH
    if ok.sum() >= 1:
        c_eff, rel = an.fit_c_eff(result.lams[ok], result.p_all_final[ok], result.n_columns)
        meta["C_eff"] = c_eff
        meta["C_eff_rel_errors"] = rel
    write_json(out / "sweep.json", meta, cfg)
    sys.stdout.write(result.to_csv())
    return EXIT_OK


def cmd_schedule(cfg: RunConfig) -> int:
    problem = load_problem(cfg)
    D = cfg.bigd if cfg.bigd is not None else 10.0
    graph = make_graph(cfg, problem, 1.0, prep_rows=True)
    basis = graph.reachable_basis(cap=cfg.cap)
    check_capacity(basis.dim, cfg.cap, "sector")
    trace = an.schedule_trace(graph, D, grid=tuple(cfg.grid), seed=cfg.seed, tol=cfg.tol, cap=cfg.cap)
    out = _outdir(cfg)
    (out / "schedule.csv").write_text(trace.to_csv())
    gap, stage, s = trace.min_gap
    meta = {
        "D": D,
        "final_lambda": trace.schedule.final_lambda,
        "monotone_boost_stage": trace.monotone,
        "anomalies": trace.anomalies,
        "min_gap": gap,
        "min_gap_at": {"stage": stage, "s": s},
        "runtime_scale": trace.runtime_scale,
        "p_first_rows_prep": trace.stage_rows("prep")[0].p_first,
    }
    write_json(out / "schedule.json", meta, cfg)
    sys.stdout.write(trace.to_csv())
    for a in trace.anomalies:
        print(f"anomaly: {a}")
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    problem = load_problem(cfg)
    if problem is None:
        from .errors import ValidationError

        raise ValidationError("oracle needs --instance or --gen")
    problem = inst.order_clauses(problem, cfg.order)
    prof = inst.ratio_profile(problem)
    out = _outdir(cfg)
    lines = ["j,S_j,ratio"]
    for j, s, r in prof.rows():
        lines.append(f"{j},{s},{'' if r is None else r}")
    (out / "ratio_profile.csv").write_text("\n".join(lines) + "\n")
    sols = inst.brute_force(problem)
    write_json(out / "oracle.json", {
        "instance": problem.to_dict(),
        "solutions": [inst.bitstring(s, problem.n_bits) for s in sols],
        "backbone": {str(k): v for k, v in inst.backbone(sols, problem.n_bits).items()},
        "truncated": prof.truncated,
    }, cfg)
    print("\n".join(lines))
    print(f"{len(sols)} solutions")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .checks import run_all

    failures = 0
    for ident, ok, detail in run_all(seed=cfg.seed):
        print(f"{'PASS' if ok else 'FAIL'} {ident}" + (f": {detail}" if detail else ""))
        failures += not ok
    if failures:
        print(f"{failures} invariant(s) failed")
        return EXIT_VALIDATION
    print("all invariants pass")
    return EXIT_OK


COMMANDS = {"build": cmd_build, "solve": cmd_solve, "sweep": cmd_sweep, "schedule": cmd_schedule,
            "oracle": cmd_oracle, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ConvergenceError as exc:
        print(f"convergence: {exc}", file=sys.stderr)
        if exc.residuals is not None:
            print(f"residuals: {np.asarray(exc.residuals).tolist()}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (GSQCError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
