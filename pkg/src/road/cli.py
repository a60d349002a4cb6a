"""Command-line interface.

Subcommands: ``fit`` (train a classifier from a CSV), ``predict`` (apply
a saved model), ``path`` (export the penalty path), ``screen``
(permutation feature screen), ``theory`` (population error curves),
``simulate`` (Monte-Carlo studies), ``oracle`` (exact small-dimension
solver).  Every output embeds the resolved configuration and seed in
``#`` header lines and is byte-identical across reruns with the same
inputs; exit codes are 0 on success, 2 on input errors, 3 on numerical
failures.

The input data format is delimited text with a header row whose first
column is ``label`` (values 1 or 2); remaining columns are features.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .ccd import CcdConfig, CcdProblem
from .classifiers import (
    LinearClassifier,
    estimate_error,
    fit_droad,
    fit_road,
    fit_sroad,
    predict,
)
from .errors import RoadInputError, RoadNumericalError
from .estimation import LabeledData, estimate, standardize_samples
from .numerics import RngStream
from .oracle_qp import crosscheck_ccd, exact_solve
from .population import figure1_table
from .screening import permutation_screen
from .simulation import (
    METHOD_NAMES,
    BlockDiagonal,
    Equicorrelation,
    FixedSignal,
    LaplaceSignal,
    RandomFactor,
    Scenario,
    SparseFixed,
    fair_like_fit,
    gamma_sensitivity,
    naive_bayes_fit,
    run_experiment,
)

MODEL_FORMAT = "road-model"
MODEL_VERSION = 1


class CliError(RoadInputError):
    """Malformed file or flag combination surfaced to the user."""


def fmt(x) -> str:
    """Numbers with 4 significant digits; integers stay exact."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x != x:  # nan
        return "--"
    return f"{x:.4g}"


def read_labeled_csv(path: str, standardize: bool = False) -> LabeledData:
    """Parse the documented delimited format, with line-numbered errors."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise CliError(f"{path}: cannot read ({exc})") from exc
    rows = [(i + 1, line) for i, line in enumerate(lines) if line.strip()]
    if not rows:
        raise CliError(f"{path}: file is empty")
    header = [c.strip() for c in rows[0][1].split(",")]
    if not header or header[0] != "label":
        raise CliError(f"{path}:1: first column must be named 'label', got {header[:1]}")
    width = len(header)
    if width < 2:
        raise CliError(f"{path}:1: no feature columns")
    labels = []
    feats = []
    for lineno, line in rows[1:]:
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != width:
            raise CliError(f"{path}:{lineno}: expected {width} columns, got {len(cells)}")
        try:
            label = int(float(cells[0]))
            values = [float(c) for c in cells[1:]]
        except ValueError as exc:
            raise CliError(f"{path}:{lineno}: {exc}") from exc
        if label not in (1, 2):
            raise CliError(f"{path}:{lineno}: label must be 1 or 2, got {cells[0]}")
        labels.append(label)
        feats.append(values)
    if not feats:
        raise CliError(f"{path}: no data rows")
    data = LabeledData(np.array(feats), np.array(labels))
    return standardize_samples(data) if standardize else data


def write_labeled_csv(data: LabeledData, path: str):
    names = ["label"] + [f"f{j + 1}" for j in range(data.p)]
    lines = [",".join(names)]
    for i in range(data.n):
        lines.append(",".join([str(int(data.y[i]))] + [repr(float(v)) for v in data.x[i]]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def save_model(clf: LinearClassifier, path: str, seed: int, config: CcdConfig | None):
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "method": clf.method,
        "lambda": clf.chosen_lambda,
        "gamma": clf.gamma,
        "w": clf.w.tolist(),
        "mu_a": clf.mu_a_hat.tolist(),
        "support": clf.support.tolist(),
        "fallback_used": clf.fallback_used,
        "seed": seed,
        "meta": clf.meta,
        "config": None
        if config is None
        else {
            "gamma": config.gamma,
            "tau": config.tau,
            "grid_size": config.grid_size,
            "tol": config.tol,
            "max_cycles": config.max_cycles,
        },
        "screening": None
        if clf.screening is None
        else {
            "threshold": clf.screening.threshold,
            "q": clf.screening.q,
            "selected": clf.screening.selected.tolist(),
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path: str) -> LinearClassifier:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"{path}: cannot read model ({exc})") from exc
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise CliError(f"{path}: not a version-{MODEL_VERSION} {MODEL_FORMAT} file")
    return LinearClassifier(
        w=np.array(doc["w"], dtype=float),
        mu_a_hat=np.array(doc["mu_a"], dtype=float),
        chosen_lambda=doc["lambda"],
        method=doc["method"],
        support=np.array(doc["support"], dtype=int),
        gamma=doc["gamma"],
        fallback_used=bool(doc.get("fallback_used", False)),
        meta=doc.get("meta", {}),
    )


def _emit(lines, out_path: str | None):
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _header(args, command: str, extra: dict | None = None) -> list:
    pairs = {"command": command, "seed": args.seed}
    if extra:
        pairs.update(extra)
    return ["# road " + " ".join(f"{k}={v}" for k, v in pairs.items())]


def _config_from(args) -> CcdConfig:
    return CcdConfig(
        gamma=args.gamma,
        tau=args.tau,
        grid_size=args.grid_size,
        tol=args.tol,
        max_cycles=args.max_cycles,
    )


def _add_solver_flags(sub):
    sub.add_argument("--gamma", type=float, default=10.0, help="affine penalty weight")
    sub.add_argument("--tau", type=float, default=1e-3, help="grid floor ratio")
    sub.add_argument("--grid-size", type=int, default=100, help="penalty grid points")
    sub.add_argument("--tol", type=float, default=1e-7, help="convergence tolerance")
    sub.add_argument("--max-cycles", type=int, default=1000, help="full sweep budget")


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=None,
                     help="master seed (overrides ROAD_SEED; default 0)")
    sub.add_argument("--out", default=None, help="write output here instead of stdout")


# -- subcommand handlers -------------------------------------------------

def cmd_fit(args) -> int:
    data = read_labeled_csv(args.train, standardize=args.standardize_samples)
    config = _config_from(args)
    rng = RngStream(args.seed)
    if args.method == "road":
        clf, cv = fit_road(data, config, args.folds, rng)
    elif args.method == "droad":
        clf, cv = fit_droad(data, config, args.folds, rng)
    elif args.method in ("sroad1", "sroad2"):
        clf, cv = fit_sroad(
            data, int(args.method[-1]), q=args.q, per_feature=args.expand,
            config=config, folds=args.folds, rng=rng,
        )
    elif args.method == "nb":
        clf, cv = naive_bayes_fit(data), None
    elif args.method == "fair":
        clf, cv = fair_like_fit(data, args.folds, rng), None
    else:
        raise CliError(f"unknown method {args.method!r}")
    save_model(clf, args.model, args.seed, config)
    est = estimate(data)
    lines = _header(args, "fit", {"method": args.method, "train": args.train})
    lines.append(f"model written to {args.model}")
    if clf.chosen_lambda is not None:
        lines.append(f"chosen lambda: {fmt(clf.chosen_lambda)}")
    lines.append(f"support size: {clf.support.size}")
    if cv is not None:
        lines.append(f"cv error: {fmt(100.0 * cv.cv_error)}%")
    try:
        lines.append(f"plug-in error estimate: {fmt(100.0 * estimate_error(clf, est))}%")
    except RoadNumericalError:
        lines.append("plug-in error estimate: undefined (degenerate direction)")
    if clf.fallback_used:
        lines.append("warning: screening selected nothing; fell back to best single feature")
    _emit(lines, args.out)
    return 0


def cmd_predict(args) -> int:
    clf = load_model(args.model)
    data = read_labeled_csv(args.data, standardize=args.standardize_samples)
    if data.p != clf.p:
        raise CliError(f"{args.data}: {data.p} features but model expects {clf.p}")
    labels = predict(clf, data.x)
    lines = _header(args, "predict", {"model": args.model, "data": args.data})
    lines.append("row,predicted,actual")
    for i, lab in enumerate(labels):
        lines.append(f"{i + 1},{int(lab)},{int(data.y[i])}")
    confusion = np.zeros((2, 2), dtype=int)
    for actual, pred in zip(data.y, labels):
        confusion[actual - 1, pred - 1] += 1
    lines.append(f"# confusion actual1={confusion[0].tolist()} actual2={confusion[1].tolist()}")
    lines.append(f"# error rate: {fmt(100.0 * float(np.mean(labels != data.y)))}%")
    _emit(lines, args.out)
    return 0


def cmd_path(args) -> int:
    data = read_labeled_csv(args.data, standardize=args.standardize_samples)
    config = _config_from(args)
    est = estimate(data)
    path = CcdProblem(est.sigma_hat, est.mu_d_hat, config).solve_path()
    lines = _header(args, "path", {"data": args.data, "gamma": args.gamma})
    lines.append("index,lambda,support,objective")
    for k, pt in enumerate(path.points):
        lines.append(f"{k + 1},{fmt(pt.lam)},{pt.support_size},{fmt(pt.objective)}")
    unconverged = sum(not pt.converged for pt in path.points)
    if unconverged:
        lines.append(f"# warning: {unconverged} grid points hit the sweep budget")
    _emit(lines, args.out)
    return 0


def cmd_screen(args) -> int:
    data = read_labeled_csv(args.data, standardize=args.standardize_samples)
    result = permutation_screen(data, args.q, RngStream(args.seed), repetitions=args.repetitions)
    lines = _header(args, "screen", {"data": args.data, "q": args.q})
    lines.append(f"threshold: {fmt(result.threshold)}")
    lines.append(f"selected {result.selected.size} of {data.p} features")
    lines.append("feature,abs_t")
    for j in result.selected:
        lines.append(f"{j + 1},{fmt(result.t_abs[j])}")
    _emit(lines, args.out)
    return 0


def cmd_theory(args) -> int:
    grid = np.arange(args.rho_min, args.rho_max + 1e-12, args.rho_step)
    rows = figure1_table(grid)
    lines = _header(args, "theory", {"rho_min": args.rho_min, "rho_max": args.rho_max})
    lines.append("rho,fisher,naive_bayes,sub10,sub20")
    for row in rows:
        lines.append(",".join([fmt(row[0])] + [fmt(100.0 * v) for v in row[1:]]))
    _emit(lines, args.out)
    return 0


def _scenario_from(args) -> Scenario:
    p = args.p if args.p is not None else (1000 if args.full else 500)
    n = args.n if args.n is not None else (300 if args.full else 100)
    if args.scenario == "equicorr":
        cov = Equicorrelation(args.rho)
        sig = SparseFixed(s0=10, value=1.0)
    elif args.scenario == "block":
        cov = BlockDiagonal(sizes=(20, p - 20), rho=args.rho)
        sig = SparseFixed(s0=10, value=1.0)
    elif args.scenario == "negblock":
        if p % 10 != 0:
            raise CliError("negblock scenario needs p divisible by 10")
        cov = BlockDiagonal(sizes=(10,) * (p // 10), rho=-0.1)
        values = np.zeros(p)
        values[:5] = 0.5
        values[10:15] = 0.5
        sig = FixedSignal(values=tuple(values))
    elif args.scenario == "random":
        cov = RandomFactor(m=10, seed=args.seed)
        sig = LaplaceSignal(s0=10)
    else:
        raise CliError(f"unknown scenario {args.scenario!r}")
    return Scenario(p=p, n_per_class=n, covariance=cov, signal=sig, seed=args.seed)


def _report_lines(report, methods) -> list:
    lines = ["method,median_error_pct,error_sd,median_nonzero,nonzero_sd"]
    for name, err, sd, nz, nzsd in report.table_rows():
        lines.append(f"{name},{fmt(err)},{fmt(sd)},{fmt(nz)},{fmt(nzsd)}")
    lines.append(f"# replications completed {report.completed}/{report.replications}"
                 f" (failures {report.failures})")
    return lines


def cmd_simulate(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHOD_NAMES:
            raise CliError(f"unknown method {m!r}; choose from {', '.join(METHOD_NAMES)}")
    reps = args.reps if args.reps is not None else (100 if args.full else 10)
    config = _config_from(args)
    rng = RngStream(args.seed)
    lines = _header(
        args, "simulate",
        {"scenario": args.scenario, "full": args.full, "reps": reps,
         "methods": "+".join(methods), "threads": args.threads},
    )
    if args.scenario == "table1":
        rhos = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
        lines.append("rho," + ",".join(
            f"{m}_err,{m}_sd,{m}_nz" for m in methods) + ",oracle")
        for rho in rhos:
            sub = argparse.Namespace(**vars(args))
            sub.scenario, sub.rho = "equicorr", rho
            report = run_experiment(
                _scenario_from(sub), methods, reps, args.folds,
                rng.substream(int(round(rho * 10))), config=config, threads=args.threads,
            )
            cells = [fmt(rho)]
            for m in methods:
                s = report.summary(m)
                cells += [fmt(s.median_error), fmt(s.error_sd), fmt(s.median_nonzero)]
            cells.append(fmt(report.oracle_median))
            lines.append(",".join(cells))
            print(f"# rho={rho} done in {report.runtime_seconds:.1f}s", file=sys.stderr)
    elif args.scenario == "gamma-study":
        sub = argparse.Namespace(**vars(args))
        sub.scenario = "equicorr"
        gammas = [0.01, 0.1, 1.0, 10.0, 100.0]
        results = gamma_sensitivity(
            _scenario_from(sub), gammas, methods=("road",), replications=reps,
            folds=args.folds, rng=rng, config=config, threads=args.threads,
        )
        lines.append("gamma,road_err,road_sd,road_nz,road_nz_sd,oracle")
        for gamma, report in results:
            s = report.summary("road")
            lines.append(",".join([
                fmt(gamma), fmt(s.median_error), fmt(s.error_sd),
                fmt(s.median_nonzero), fmt(s.nonzero_sd), fmt(report.oracle_median),
            ]))
    else:
        report = run_experiment(
            _scenario_from(args), methods, reps, args.folds, rng,
            config=config, threads=args.threads,
        )
        lines += _report_lines(report, methods)
        print(f"# done in {report.runtime_seconds:.1f}s", file=sys.stderr)
    _emit(lines, args.out)
    return 0


def cmd_oracle(args) -> int:
    gen = RngStream(args.seed).generator()
    a = gen.standard_normal((args.p, args.p))
    sigma = a @ a.T / args.p + 0.5 * np.eye(args.p)
    d = np.sqrt(np.diag(sigma))
    sigma = sigma / np.outer(d, d)
    mu_d = gen.standard_normal(args.p)
    sol = exact_solve(sigma, mu_d, args.c)
    lines = _header(args, "oracle", {"p": args.p, "c": args.c})
    lines.append(f"objective: {fmt(sol.objective)}")
    lines.append(f"l1_active: {sol.active_l1}")
    lines.append("w: " + ",".join(fmt(v) for v in sol.w))
    if args.crosscheck:
        top = 10.0 * float(np.abs(mu_d).max())
        grid = np.geomspace(top, 1e-3 * top, 12)
        rep = crosscheck_ccd(sigma, mu_d, grid, gamma_large=1e6)
        lines.append(f"crosscheck max relative gap: {rep.max_rel_gap:.3e}")
    _emit(lines, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="road",
        description="Sparse linear discriminants via constrained coordinate descent.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a classifier from a labeled CSV")
    p_fit.add_argument("train", help="training CSV (label,feature,...)")
    p_fit.add_argument("--method", default="road",
                       choices=["road", "droad", "sroad1", "sroad2", "nb", "fair"])
    p_fit.add_argument("--model", default="model.json", help="output model file")
    p_fit.add_argument("--folds", type=int, default=5)
    p_fit.add_argument("--q", type=float, default=1.0, help="screening quantile")
    p_fit.add_argument("--expand", type=int, default=1,
                       help="correlated features added per screened feature")
    p_fit.add_argument("--standardize-samples", action="store_true")
    _add_solver_flags(p_fit)
    _add_common(p_fit)
    p_fit.set_defaults(handler=cmd_fit)

    p_pred = sub.add_parser("predict", help="apply a saved model to a CSV")
    p_pred.add_argument("data")
    p_pred.add_argument("--model", default="model.json")
    p_pred.add_argument("--standardize-samples", action="store_true")
    _add_common(p_pred)
    p_pred.set_defaults(handler=cmd_predict)

    p_path = sub.add_parser("path", help="export the penalty path for a dataset")
    p_path.add_argument("data")
    p_path.add_argument("--standardize-samples", action="store_true")
    _add_solver_flags(p_path)
    _add_common(p_path)
    p_path.set_defaults(handler=cmd_path)

    p_scr = sub.add_parser("screen", help="permutation t-statistic feature screen")
    p_scr.add_argument("data")
    p_scr.add_argument("--q", type=float, default=1.0)
    p_scr.add_argument("--repetitions", type=int, default=1)
    p_scr.add_argument("--standardize-samples", action="store_true")
    _add_common(p_scr)
    p_scr.set_defaults(handler=cmd_screen)

    p_thr = sub.add_parser("theory", help="population error curves vs correlation")
    p_thr.add_argument("--rho-min", type=float, default=0.0)
    p_thr.add_argument("--rho-max", type=float, default=0.95)
    p_thr.add_argument("--rho-step", type=float, default=0.05)
    _add_common(p_thr)
    p_thr.set_defaults(handler=cmd_theory)

    p_sim = sub.add_parser("simulate", help="Monte-Carlo study tables")
    p_sim.add_argument("--scenario", default="equicorr",
                       choices=["equicorr", "block", "negblock", "random",
                                "table1", "gamma-study"])
    p_sim.add_argument("--rho", type=float, default=0.5)
    p_sim.add_argument("--full", action="store_true",
                       help="full-scale settings (p=1000, n=300, 100 reps; hours)")
    p_sim.add_argument("--p", type=int, default=None, help="override dimension")
    p_sim.add_argument("--n", type=int, default=None, help="override per-class size")
    p_sim.add_argument("--reps", type=int, default=None, help="override replications")
    p_sim.add_argument("--methods", default="road,sroad1,sroad2,droad,nb,fair")
    p_sim.add_argument("--folds", type=int, default=5)
    p_sim.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="parallel replications; 1 forces serial (same results)")
    _add_solver_flags(p_sim)
    _add_common(p_sim)
    p_sim.set_defaults(handler=cmd_simulate)

    p_orc = sub.add_parser("oracle", help="exact solver on a seeded random instance")
    p_orc.add_argument("--p", type=int, default=4)
    p_orc.add_argument("--c", type=float, default=1.5)
    p_orc.add_argument("--crosscheck", action="store_true",
                       help="also compare the iterative solver against the oracle")
    _add_common(p_orc)
    p_orc.set_defaults(handler=cmd_oracle)

    return parser


def resolve_seed(seed_flag) -> int:
    """Precedence: --seed flag, then ROAD_SEED, then 0."""
    if seed_flag is not None:
        return int(seed_flag)
    env = os.environ.get("ROAD_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise CliError(f"ROAD_SEED must be an integer, got {env!r}") from exc
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.seed = resolve_seed(getattr(args, "seed", None))
        return args.handler(args)
    except RoadInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RoadNumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
