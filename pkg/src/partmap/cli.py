"""Command-line interface.

Subcommands:
    solve   problems -> per-problem hard assignments, labels, markers
    eval    accuracy against ground truth, or human-placement comparison
    synth   deterministic synthetic problem files with ground truth
    ablate  re-solve at several alphas and report accuracy per alpha

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Outputs are written atomically and embed the full run configuration.
PARTMAP_JOBS sets the default worker count for per-problem fan-out.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from .errors import InvalidInputError, NumericalError, ProblemFileError
from .evaluate import (
    EvalReport,
    closest_cluster_distance,
    distance_to_mean,
    evaluate_problems,
    pearson_r,
    synth_generate,
)
from .graph import SolverConfig
from .io import (
    SCHEMA_VERSION,
    LoadedProblem,
    RunConfig,
    atomic_write_json,
    load_placements,
    load_problem_file,
    save_problem_file,
)
from .solver import hard_assignment, solve
from .transfer import map_marker_end_to_end

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; our contract reserves 2 for
    # data errors, so route usage problems through an exception instead.
    def error(self, message):
        raise _UsageError(message)


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("PARTMAP_JOBS", "1")))
    except ValueError:
        return 1


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=None,
                   help="node-vs-edge mixing weight (default 0.9 for 2-D, 0.5 for 3-D)")
    p.add_argument("--beta0", type=float, default=0.1, help="initial inverse temperature")
    p.add_argument("--iters", type=int, default=500, help="annealing iterations")
    p.add_argument("--k", type=int, default=8, help="clusters per 3-D object")
    p.add_argument("--restarts", type=int, default=10, help="clustering restarts")
    p.add_argument("--seed", type=int, default=0, help="clustering rng seed")
    p.add_argument("--jobs", type=int, default=_default_jobs(),
                   help="parallel workers across problems")


def _run_config(args, coord_dim: int) -> RunConfig:
    overrides = {"beta0": args.beta0, "iterations": args.iters}
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    solver = SolverConfig.defaults_for(coord_dim, **overrides)
    return RunConfig(
        solver=solver,
        k=args.k,
        restarts=args.restarts,
        rng_seed=args.seed,
        scheme=getattr(args, "scheme", "pooled"),
        human_k=getattr(args, "human_k", 2),
        jobs=max(1, args.jobs),
        emit_soft=getattr(args, "emit_soft", False),
    )


def _map_problems(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))  # map preserves input order


def _solve_one(lp: LoadedProblem, config: RunConfig) -> dict:
    p = lp.problem
    try:
        mapping, trace = solve(p.source, p.target, config.solver)
    except NumericalError as e:
        raise NumericalError(f"problem '{p.id}': {e}") from e
    hard = hard_assignment(mapping)
    record = {
        "id": p.id,
        "hard_assignment": [int(s) for s in hard],
        "trace": {
            "iterations_run": trace.iterations_run,
            "final_beta": trace.final_beta,
            "final_energy": trace.energies[-1] if trace.energies else None,
            "max_delta_last": trace.max_delta_last,
        },
    }
    source_labels = p.source.labels()
    if all(lbl is not None for lbl in source_labels):
        record["labels"] = [source_labels[s] for s in hard]
    if p.markers and lp.camera is not None:
        centers = (p.source.coords_matrix(), p.target.coords_matrix())
        out_markers = []
        for idx, mk in enumerate(p.markers):
            if mk.coords3d is None:
                continue
            mapped = map_marker_end_to_end(p, mapping, centers, lp.camera, idx)
            out_markers.append(
                {
                    "color": mapped.color,
                    "coords3d": [float(v) for v in mapped.coords3d],
                    "coords2d": [float(v) for v in mapped.coords2d],
                }
            )
        if out_markers:
            record["markers"] = out_markers
    if config.emit_soft:
        record["soft"] = mapping.values.tolist()
    return record


def cmd_solve(args) -> int:
    pf = load_problem_file(args.problems, RunConfig(k=args.k, restarts=args.restarts,
                                                    rng_seed=args.seed))
    config = _run_config(args, pf.coord_dim)
    results = _map_problems(lambda lp: _solve_one(lp, config), pf.problems, config.jobs)
    atomic_write_json(
        args.out,
        {"schema_version": SCHEMA_VERSION, "config": config.to_dict(),
         "results": results},
    )
    print(f"solved {len(results)} problems -> {args.out}")
    return EXIT_OK


def _load_predictions(path) -> dict[str, list[int]]:
    import json

    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ProblemFileError(f"cannot read predictions {path}: {e}") from e
    out = {}
    for record in data.get("results", []):
        if "id" not in record or "hard_assignment" not in record:
            raise ProblemFileError(f"{path}: malformed prediction record")
        out[record["id"]] = record["hard_assignment"]
    if not out:
        raise ProblemFileError(f"{path}: no prediction records")
    return out


def _human_eval(args) -> dict:
    items = load_placements(args.human)
    model_points: dict[str, np.ndarray] = {}
    if args.problems is not None:
        pf = load_problem_file(
            args.problems,
            RunConfig(k=args.k, restarts=args.restarts, rng_seed=args.seed),
        )
        config = _run_config(args, pf.coord_dim)
        by_id = {lp.problem.id: lp for lp in pf.problems}
        needed = {item.problem_id for item in items}
        for pid in sorted(needed):
            if pid not in by_id:
                raise ProblemFileError(f"placements reference unknown problem '{pid}'")
            lp = by_id[pid]
            p = lp.problem
            if not p.markers or lp.camera is None:
                raise ProblemFileError(
                    f"problem '{pid}' lacks markers or camera for human comparison"
                )
            mapping, _ = solve(p.source, p.target, config.solver)
            centers = (p.source.coords_matrix(), p.target.coords_matrix())
            for idx, mk in enumerate(p.markers):
                mapped = map_marker_end_to_end(p, mapping, centers, lp.camera, idx)
                model_points[f"{pid}/{mk.color}"] = mapped.coords2d
    else:
        config = _run_config(args, 3)

    per_item = []
    by_condition: dict[str, dict[str, list[float]]] = {}
    human_dists, model_dists = [], []
    for item in items:
        mean, avg = distance_to_mean(item.points)
        k = min(args.human_k, len(np.unique(item.points, axis=0)))
        cluster_avg = closest_cluster_distance(item.points, k, args.seed)
        row = {
            "problem_id": item.problem_id,
            "marker": item.marker,
            "condition": item.condition,
            "n_placements": int(len(item.points)),
            "human_mean": [float(v) for v in mean],
            "human_mean_distance": avg,
            "human_cluster_distance": cluster_avg,
        }
        bucket = by_condition.setdefault(
            item.condition, {"human": [], "model": [], "cluster": []}
        )
        bucket["human"].append(avg)
        bucket["cluster"].append(cluster_avg)
        if item.key in model_points:
            d = float(np.linalg.norm(model_points[item.key] - mean))
            row["model_point"] = [float(v) for v in model_points[item.key]]
            row["model_distance"] = d
            bucket["model"].append(d)
            human_dists.append(avg)
            model_dists.append(d)
        per_item.append(row)

    per_condition = {}
    for cond, bucket in sorted(by_condition.items()):
        entry = {
            "n_items": len(bucket["human"]),
            "human_mean_distance": float(np.mean(bucket["human"])),
            "human_cluster_distance": float(np.mean(bucket["cluster"])),
        }
        if bucket["model"]:
            entry["model_distance"] = float(np.mean(bucket["model"]))
        per_condition[cond] = entry

    aggregate = {"n_items": len(per_item)}
    if human_dists:
        aggregate["human_mean_distance"] = float(np.mean(human_dists))
        aggregate["model_distance"] = float(np.mean(model_dists))
        if len(model_dists) >= 3:
            aggregate["pearson_r_item_level"] = pearson_r(human_dists, model_dists)
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": "human",
        "config": config.to_dict(),
        "per_item": per_item,
        "per_condition": per_condition,
        "aggregate": aggregate,
        "metadata": {
            "marker_pooling": "each (problem, marker) pair is one independent item",
            "cluster_k": args.human_k,
        },
    }


def cmd_eval(args) -> int:
    if args.human is not None:
        report = _human_eval(args)
        atomic_write_json(args.out, report)
        print(f"human comparison over {report['aggregate']['n_items']} items "
              f"-> {args.out}")
        return EXIT_OK

    if args.problems is None:
        raise _UsageError("eval requires a problem file unless --human is given")
    pf = load_problem_file(
        args.problems, RunConfig(k=args.k, restarts=args.restarts, rng_seed=args.seed)
    )
    config = _run_config(args, pf.coord_dim)
    problems = pf.instances()
    if args.predictions is not None:
        table = _load_predictions(args.predictions)
        missing = [p.id for p in problems if p.id not in table]
        if missing:
            raise ProblemFileError(f"predictions missing for problems: {missing[:5]}")
        predictions = [table[p.id] for p in problems]
    else:
        mappings = _map_problems(
            lambda lp: solve(lp.problem.source, lp.problem.target, config.solver)[0],
            pf.problems,
            config.jobs,
        )
        predictions = [hard_assignment(m) for m in mappings]
    report: EvalReport = evaluate_problems(
        problems, predictions, config.solver, scheme=args.scheme
    )
    payload = {"schema_version": SCHEMA_VERSION, "mode": "accuracy",
               "config": config.to_dict()}
    payload.update(report.to_dict())
    atomic_write_json(args.out, payload)
    print(f"accuracy ({args.scheme}): {report.aggregate['accuracy']:.4f} "
          f"-> {args.out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.count < 1:
        raise _UsageError("--count must be >= 1")
    problems = [
        synth_generate(args.n, args.dim, args.sigma, args.seed + i)
        for i in range(args.count)
    ]
    save_problem_file(args.out, problems)
    print(f"wrote {len(problems)} synthetic problems -> {args.out}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    try:
        alphas = [float(a) for a in args.alphas.split(",") if a.strip() != ""]
    except ValueError as e:
        raise _UsageError(f"bad --alphas list: {e}") from e
    if not alphas:
        raise _UsageError("--alphas must name at least one value")
    pf = load_problem_file(
        args.problems, RunConfig(k=args.k, restarts=args.restarts, rng_seed=args.seed)
    )
    config = _run_config(args, pf.coord_dim)
    problems = pf.instances()

    def _one(alpha: float) -> tuple[str, dict]:
        cfg = config.solver.with_alpha(alpha)
        mappings = _map_problems(
            lambda lp: solve(lp.problem.source, lp.problem.target, cfg)[0],
            pf.problems,
            1,
        )
        predictions = [hard_assignment(m) for m in mappings]
        report = evaluate_problems(problems, predictions, cfg, scheme=args.scheme)
        return repr(alpha), report.to_dict()

    reports = dict(_map_problems(_one, alphas, config.jobs))
    atomic_write_json(
        args.out,
        {"schema_version": SCHEMA_VERSION, "mode": "ablation",
         "config": config.to_dict(), "alphas": alphas, "reports": reports},
    )
    print(f"ablation over alphas {alphas} -> {args.out}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="partmap",
                     description="part-level analogical mapping over attributed graphs")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_solve = sub.add_parser("solve", help="solve problems and transfer labels/markers")
    p_solve.add_argument("problems", help="input problem file")
    p_solve.add_argument("out", help="output mapping file")
    _add_solver_flags(p_solve)
    p_solve.add_argument("--emit-soft", action="store_true",
                         help="include the full soft mapping per problem")
    p_solve.set_defaults(fn=cmd_solve)

    p_eval = sub.add_parser("eval", help="evaluate mappings or human placements")
    p_eval.add_argument("problems", nargs="?", default=None, help="problem file")
    p_eval.add_argument("--out", required=True, help="report output path")
    p_eval.add_argument("--predictions", default=None,
                        help="mapping file from `solve` (otherwise solve in-process)")
    p_eval.add_argument("--scheme", choices=("pooled", "balanced"), default="pooled")
    p_eval.add_argument("--human", default=None, help="human placements file")
    p_eval.add_argument("--human-k", dest="human_k", type=int, default=2,
                        help="cluster count for the placement-mode analysis")
    _add_solver_flags(p_eval)
    p_eval.set_defaults(fn=cmd_eval)

    p_synth = sub.add_parser("synth", help="generate synthetic problems")
    p_synth.add_argument("out", help="output problem file")
    p_synth.add_argument("--n", type=int, default=5, help="nodes per graph")
    p_synth.add_argument("--dim", type=int, default=8, help="embedding dimension")
    p_synth.add_argument("--sigma", type=float, default=0.05, help="noise scale")
    p_synth.add_argument("--count", type=int, default=10, help="number of problems")
    p_synth.add_argument("--seed", type=int, default=0, help="base rng seed")
    p_synth.set_defaults(fn=cmd_synth)

    p_ablate = sub.add_parser("ablate", help="accuracy sweep over alpha values")
    p_ablate.add_argument("problems", help="input problem file")
    p_ablate.add_argument("--out", required=True, help="report output path")
    p_ablate.add_argument("--alphas", default="0,0.9,1",
                          help="comma-separated alpha values")
    p_ablate.add_argument("--scheme", choices=("pooled", "balanced"),
                          default="pooled")
    _add_solver_flags(p_ablate)
    p_ablate.set_defaults(fn=cmd_ablate)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ProblemFileError, InvalidInputError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
