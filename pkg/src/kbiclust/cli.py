"""Command-line interface.

Commands: ``simulate``, ``cluster``, ``bicluster``, ``eval`` (alias
``evaluate``), ``sweep`` and ``rerun``. Every command writes its outputs plus a
``manifest.json`` into ``--out``; ``rerun MANIFEST`` repeats a run from it.

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical degeneracy.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .akkb import AkkbConfig, akkb_fit
from .data import DataError, DegenerateError, SubsetView, transpose_roles
from .evaluation import bandwidth_sweep, bicluster_accuracy, clustering_accuracy
from .kernels import KernelSpec, kernel_from_view, median_heuristic
from .kgroups import kernel_kgroups
from .synth import ScenarioSpec, gen_scenario

logger = logging.getLogger("kbiclust")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3

PATH_ARGS = ("input", "out", "truth_rows", "truth_cols", "pred_rows", "pred_cols", "report")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_sigma(text: str | None) -> tuple[str, float]:
    """``"median"``, ``"median*2.5"`` / ``"median:2.5"`` or an explicit positive value."""
    if text is None:
        return "median", 1.0
    text = text.strip().lower()
    if text.startswith("median"):
        rest = text[len("median"):]
        if not rest:
            return "median", 1.0
        if rest[0] in "*:x":
            try:
                mult = float(rest[1:])
            except ValueError:
                raise UsageError(f"bad bandwidth multiplier in {text!r}") from None
            if not mult > 0:
                raise UsageError("bandwidth multiplier must be positive")
            return "median", mult
        raise UsageError(f"cannot parse bandwidth {text!r}")
    try:
        value = float(text)
    except ValueError:
        raise UsageError(f"cannot parse bandwidth {text!r}") from None
    if not value > 0:
        raise UsageError("bandwidth must be positive")
    return "explicit", value


def parse_multipliers(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse multiplier list {text!r}") from None
    if not values or min(values) <= 0:
        raise UsageError("multiplier lists must be nonempty and positive")
    return values


def _kernel_spec(matrix, axis: str, kernel: str, sigma_text: str | None) -> KernelSpec:
    if kernel == "linear":
        return KernelSpec("linear", provenance="none")
    kind, value = parse_sigma(sigma_text)
    if kind == "explicit":
        return KernelSpec(kernel, value, "explicit")
    return KernelSpec(kernel, value * median_heuristic(matrix, axis), "median", value)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_input(args):
    return io.read_matrix_csv(args.input, args.covariates, args.grid_width, args.header)


# -- commands -----------------------------------------------------------------

def cmd_simulate(args) -> dict:
    out = _out_dir(args)
    t0 = time.perf_counter()
    spec = ScenarioSpec(args.scenario, args.n, args.p, args.seed, args.variance_convention)
    matrix, rows, cols = gen_scenario(spec)
    paths = [out / "matrix.csv", out / "truth_rows.csv", out / "truth_cols.csv"]
    io.write_matrix_csv(paths[0], matrix)
    io.write_labels(paths[1], rows)
    io.write_labels(paths[2], cols)
    return {"outputs": paths, "resolved": {"scenario": spec.__dict__},
            "timings": {"simulate": time.perf_counter() - t0}}


def cmd_cluster(args) -> dict:
    out = _out_dir(args)
    matrix = _read_input(args)
    data = transpose_roles(matrix) if args.axis == "cols" else matrix
    if data.n < args.clusters:
        raise DataError(f"cannot form {args.clusters} clusters from {data.n} items")
    spec = _kernel_spec(data, "rows", args.kernel, args.sigma)
    t0 = time.perf_counter()
    gram = kernel_from_view(SubsetView(data, "rows"), spec)
    res = kernel_kgroups(gram, args.clusters, args.restarts, seed=args.seed, key=(0,),
                         max_sweeps=args.max_sweeps, workers=args.workers)
    labels_path = out / "labels.csv"
    io.write_labels(labels_path, res.labels)
    log_path = out / "restarts.csv"
    io.write_rows_csv(log_path, ["restart", "objective_start", "objective_end", "sweeps",
                                 "moves", "converged"],
                      [{"restart": r.restart, "objective_start": r.objective_start,
                        "objective_end": r.objective_end, "sweeps": r.sweeps, "moves": r.moves,
                        "converged": r.converged} for r in res.log])
    resolved = {"kernel": spec.to_dict(), "objective": res.objective,
                "best_restart": res.best_restart, "converged": res.converged}
    print(f"objective {res.objective:.10g} (restart {res.best_restart}), labels -> {labels_path}")
    return {"outputs": [labels_path, log_path], "resolved": resolved,
            "timings": {"cluster": time.perf_counter() - t0}}


def _akkb_config(args, matrix) -> AkkbConfig:
    if matrix.n < args.clusters or matrix.p < args.clusters:
        raise DataError(f"cannot form {args.clusters} clusters on a {matrix.n} x {matrix.p} matrix")
    return AkkbConfig(
        m=args.clusters, rounds=args.rounds, restarts=args.restarts, kernel=args.kernel,
        sigma_data=_kernel_spec(matrix, "rows", args.kernel, args.sigma_data),
        sigma_variables=_kernel_spec(matrix, "cols", args.kernel, args.sigma_vars),
        seed=args.seed, phase_restarts=not args.no_phase_restarts,
        max_sweeps=args.max_sweeps, workers=args.workers)


HISTORY_FIELDS = ["phase", "round", "objective_before", "objective_after", "score_before",
                  "score_after", "moves", "changed", "clusters_nonempty"]


def _history_rows(result):
    return [{k: getattr(h, k) for k in HISTORY_FIELDS} for h in result.history]


def cmd_bicluster(args) -> dict:
    if (args.input is None) == (args.scenario is None):
        raise UsageError("give exactly one of --input or --scenario")
    if args.scenario is not None:
        return _bicluster_trials(args)
    out = _out_dir(args)
    matrix = _read_input(args)
    cfg = _akkb_config(args, matrix)
    result = akkb_fit(matrix, cfg)
    paths = [out / "rows.csv", out / "cols.csv", out / "history.csv"]
    io.write_labels(paths[0], result.row_labels)
    io.write_labels(paths[1], result.col_labels)
    io.write_rows_csv(paths[2], HISTORY_FIELDS, _history_rows(result))
    resolved = {"kernel_data": result.kernel_data.to_dict(),
                "kernel_variables": result.kernel_variables.to_dict(),
                "converged": result.converged, "rounds_run": result.rounds_run,
                "stopped_by": "convergence" if result.converged else "round limit"}
    if args.truth_rows and args.truth_cols:
        report = bicluster_accuracy(result.bipartition, io.read_labels(args.truth_rows),
                                    io.read_labels(args.truth_cols))
        paths.append(out / "accuracy.json")
        io.dump_json(paths[-1], report.to_dict())
        resolved["accuracy"] = report.to_dict()
        print(f"accuracy rows {report.row_accuracy:.4f} cols {report.col_accuracy:.4f} "
              f"mean {report.mean_accuracy:.4f}")
    print(f"{'converged' if result.converged else 'round limit'} after {result.rounds_run} "
          f"round(s); labels -> {paths[0]}, {paths[1]}")
    return {"outputs": paths, "resolved": resolved, "timings": result.elapsed}


def _bicluster_trials(args) -> dict:
    out = _out_dir(args)
    t0 = time.perf_counter()
    rows = []
    for seed in range(args.seed, args.seed + args.trials):
        spec = ScenarioSpec(args.scenario, args.n, args.p, seed, args.variance_convention)
        matrix, truth_rows, truth_cols = gen_scenario(spec)
        cfg = replace(_akkb_config(args, matrix), seed=seed)
        result = akkb_fit(matrix, cfg)
        rep = bicluster_accuracy(result.bipartition, truth_rows, truth_cols)
        rows.append({"seed": seed, "row_accuracy": rep.row_accuracy,
                     "col_accuracy": rep.col_accuracy, "mean_accuracy": rep.mean_accuracy,
                     "converged": result.converged, "rounds_run": result.rounds_run})
        logger.info("trial seed %d: mean accuracy %.4f", seed, rep.mean_accuracy)
    trials_path, summary_path = out / "trials.csv", out / "summary.csv"
    io.write_rows_csv(trials_path, list(rows[0]), rows)
    summary = []
    for key in ("row_accuracy", "col_accuracy", "mean_accuracy"):
        vals = np.array([r[key] for r in rows])
        sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        summary.append({"metric": key, "mean": float(vals.mean()), "sd": sd, "trials": vals.size})
    io.write_rows_csv(summary_path, ["metric", "mean", "sd", "trials"], summary)
    mean = summary[2]["mean"]
    print(f"scenario {args.scenario}: mean accuracy {mean:.4f} over {args.trials} trial(s)")
    return {"outputs": [trials_path, summary_path], "resolved": {"summary": summary},
            "timings": {"trials": time.perf_counter() - t0}}


def cmd_eval(args) -> dict:
    pred_rows, truth_rows = io.read_labels(args.pred_rows), io.read_labels(args.truth_rows)
    acc, perm = clustering_accuracy(pred_rows, truth_rows)
    report = {"row_accuracy": acc, "row_permutation": list(perm)}
    if (args.pred_cols is None) != (args.truth_cols is None):
        raise UsageError("--pred-cols and --truth-cols go together")
    if args.pred_cols is not None:
        col_acc, col_perm = clustering_accuracy(io.read_labels(args.pred_cols),
                                                io.read_labels(args.truth_cols))
        report.update(col_accuracy=col_acc, col_permutation=list(col_perm),
                      mean_accuracy=(acc + col_acc) / 2)
    else:
        report["mean_accuracy"] = acc
    print(json.dumps(report, sort_keys=True))
    outputs = []
    if args.out is not None:
        out = _out_dir(args)
        outputs.append(out / "accuracy.json")
        io.dump_json(outputs[0], report)
    return {"outputs": outputs, "resolved": report, "timings": {}}


def cmd_sweep(args) -> dict:
    out = _out_dir(args)
    matrix = _read_input(args)
    md, mv = parse_multipliers(args.multipliers_data), parse_multipliers(args.multipliers_vars)
    cfg = AkkbConfig(m=args.clusters, rounds=args.rounds, restarts=args.restarts,
                     seed=args.seed, phase_restarts=not args.no_phase_restarts,
                     max_sweeps=args.max_sweeps)
    t0 = time.perf_counter()
    res = bandwidth_sweep(matrix, io.read_labels(args.truth_rows), io.read_labels(args.truth_cols),
                          cfg, md, mv, workers=args.workers)
    csv_path, json_path = out / "grid.csv", out / "grid.json"
    io.write_rows_csv(csv_path, ["data_multiplier"] + [repr(b) for b in mv],
                      [{"data_multiplier": a, **{repr(b): res.accuracy[i, j]
                                                 for j, b in enumerate(mv)}}
                       for i, a in enumerate(md)])
    io.dump_json(json_path, {"multipliers_data": md, "multipliers_vars": mv,
                             "sigma_data_reference": res.sigma_data_ref,
                             "sigma_vars_reference": res.sigma_vars_ref,
                             "accuracy": res.accuracy})
    print(f"grid {len(md)}x{len(mv)}: accuracy {res.accuracy.min():.3f}..{res.accuracy.max():.3f}")
    return {"outputs": [csv_path, json_path],
            "resolved": {"sigma_data_reference": res.sigma_data_ref,
                         "sigma_vars_reference": res.sigma_vars_ref},
            "timings": {"sweep": time.perf_counter() - t0}}


COMMANDS = {"simulate": cmd_simulate, "cluster": cmd_cluster, "bicluster": cmd_bicluster,
            "eval": cmd_eval, "sweep": cmd_sweep}


# -- parser -------------------------------------------------------------------

def _layout_flags(p):
    p.add_argument("--input", "-i", help="matrix CSV, one data row per line")
    p.add_argument("--covariates", type=int, default=None,
                   help="number of covariates p (default: columns / grid width)")
    p.add_argument("--grid-width", type=int, default=1, help="samples per covariate d")
    p.add_argument("--header", action="store_true", help="skip the first line")


def _fit_flags(p, restarts_default=100):
    p.add_argument("--clusters", "-m", type=int, default=2)
    p.add_argument("--restarts", "-R", type=int, default=restarts_default)
    p.add_argument("--max-sweeps", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kbiclust", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a synthetic scenario")
    p.add_argument("--scenario", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--p", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variance-convention", choices=("sd", "variance"), default="sd")
    p.add_argument("--out", "-o", required=True)

    p = sub.add_parser("cluster", help="kernel k-groups on one axis")
    _layout_flags(p)
    p.add_argument("--axis", choices=("rows", "cols"), default="rows")
    _fit_flags(p)
    p.add_argument("--sigma", default=None, help="value, 'median' or 'median*MULT'")
    p.add_argument("--kernel", choices=("gaussian", "linear"), default="gaussian")
    p.add_argument("--out", "-o", required=True)

    p = sub.add_parser("bicluster", help="alternating kernel biclustering")
    _layout_flags(p)
    p.add_argument("--scenario", type=int, choices=(1, 2, 3), default=None,
                   help="generate data instead of reading --input (use with --trials)")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--p", type=int, default=200)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--variance-convention", choices=("sd", "variance"), default="sd")
    _fit_flags(p)
    p.add_argument("--rounds", "-T", type=int, default=20)
    p.add_argument("--sigma-data", default=None, help="value, 'median' or 'median*MULT'")
    p.add_argument("--sigma-vars", default=None, help="value, 'median' or 'median*MULT'")
    p.add_argument("--kernel", choices=("gaussian", "linear"), default="gaussian")
    p.add_argument("--no-phase-restarts", action="store_true",
                   help="warm start only in the alternating half-steps")
    p.add_argument("--truth-rows", default=None)
    p.add_argument("--truth-cols", default=None)
    p.add_argument("--out", "-o", required=True)

    p = sub.add_parser("eval", aliases=["evaluate"], help="accuracy against true labels")
    p.add_argument("--pred-rows", required=True)
    p.add_argument("--truth-rows", required=True)
    p.add_argument("--pred-cols", default=None)
    p.add_argument("--truth-cols", default=None)
    p.add_argument("--out", "-o", default=None)

    p = sub.add_parser("sweep", help="bandwidth sensitivity grid")
    _layout_flags(p)
    p.add_argument("--truth-rows", required=True)
    p.add_argument("--truth-cols", required=True)
    _fit_flags(p)
    p.add_argument("--rounds", "-T", type=int, default=20)
    p.add_argument("--multipliers-data", default="0.25,0.5,1,2,4")
    p.add_argument("--multipliers-vars", default="0.25,0.5,1,2,4")
    p.add_argument("--no-phase-restarts", action="store_true")
    p.add_argument("--out", "-o", required=True)

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", "-o", default=None, help="write outputs here instead")
    return parser


def _absolute_paths(ns: dict) -> dict:
    return {k: (str(Path(v).resolve()) if k in PATH_ARGS and v is not None else v)
            for k, v in ns.items()}


def run(command: str, ns: dict) -> int:
    """Run ``command`` with resolved arguments ``ns`` and write its manifest."""
    ns = _absolute_paths(ns)
    args = argparse.Namespace(**ns)
    info = COMMANDS[command](args)
    if args.out is not None:
        io.write_manifest(args.out, command, ns, info["resolved"], info["outputs"],
                          info["timings"])
    return EXIT_OK


def _rerun(manifest_path: str, out: str | None) -> int:
    path = Path(manifest_path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    manifest = json.loads(path.read_text())
    ns = dict(manifest["args"])
    if out is not None:
        ns["out"] = out
    return run(manifest["command"], ns)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    command = "eval" if args.command == "evaluate" else args.command
    try:
        if command == "rerun":
            return _rerun(args.manifest, args.out)
        ns = {k: v for k, v in vars(args).items() if k not in ("command", "verbose")}
        return run(command, ns)
    except UsageError as exc:
        print(f"kbiclust: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateError as exc:
        print(f"kbiclust: numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (DataError, OSError) as exc:
        print(f"kbiclust: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
