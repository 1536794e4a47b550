"""Command-line interface: ``tdisagg {disaggregate,simulate,benchmark}``.

Exit codes: 0 on success, 2 for invalid input or configuration, 3 for
numerical failures.  Errors are also reported as a JSON record on stderr
and, when the output directory is usable, in ``error.json``.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .aggregation import AggMode, AggregationSpec
from .benchmark import REPLICATE_COLUMNS, SUMMARY_COLUMNS, run_benchmark
from .data import (
    check_panel_rows,
    correlation_filter,
    load_panel,
    load_series,
    write_json,
    write_matrix,
    write_table,
)
from .dgp import DgpConfig, generate
from .errors import DisaggError, DisaggWarning, DomainError, NumericalError
from .gls import Method, check_grid, default_rho_grid, rho_profile
from .sparse import TRACE_COLUMNS, disaggregate

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


@dataclass
class RunConfig:
    command: str
    output_dir: Path
    input: Path | None = None
    indicators: Path | None = None
    method: str = "chow-lin"
    agg_mode: str = "sum"
    ratio: int = 4
    rho_grid: np.ndarray | None = None
    corr_threshold: float | None = None
    seed: int = 0
    intercept: bool = True
    # simulation settings
    n_low: int = 17
    n_high: int | None = None
    dim: int = 1
    beta: float = 1.0
    sparsity: float = 0.0
    rho: float = 0.0
    design_mean: float = 0.0
    design_sd: float = 1.0
    # benchmark settings
    replicates: int = 100
    methods: list[str] = field(default_factory=lambda: ["chow-lin", "sptd", "adaptive-sptd"])
    jobs: int = 1

    def __post_init__(self):
        if self.command not in ("disaggregate", "simulate", "benchmark"):
            raise DomainError(f"unknown command {self.command!r}")
        if int(self.ratio) != self.ratio or self.ratio < 1:
            raise DomainError(f"ratio must be a positive integer, got {self.ratio!r}")
        if self.corr_threshold is not None and not 0.0 < self.corr_threshold <= 1.0:
            raise DomainError(f"correlation threshold must lie in (0, 1], got {self.corr_threshold!r}")
        AggMode(self.agg_mode)
        Method(self.method)
        if self.rho_grid is not None:
            self.rho_grid = check_grid(self.rho_grid)

    def dgp_config(self) -> DgpConfig:
        return DgpConfig(
            n_low=self.n_low,
            n_high=self.n_high if self.n_high is not None else self.n_low * self.ratio,
            ratio=self.ratio,
            d=self.dim,
            beta_magnitude=self.beta,
            sparsity=self.sparsity,
            error_method=self.method,
            rho=self.rho,
            agg_mode=self.agg_mode,
            design_mean=self.design_mean,
            design_sd=self.design_sd,
            seed=self.seed,
        )


def parse_rho_grid(text: str) -> np.ndarray:
    """``"start:stop:num"`` for an evenly spaced grid, or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            grid = np.round(np.linspace(float(start), float(stop), int(num)), 10)
        else:
            grid = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise DomainError(f"cannot parse rho grid {text!r}") from None
    return check_grid(grid)


def _disaggregate(cfg: RunConfig) -> dict:
    out = cfg.output_dir
    method = Method(cfg.method)
    series = load_series(cfg.input)
    n_low = len(series)
    if cfg.indicators is not None:
        panel = load_panel(cfg.indicators)
        check_panel_rows(panel, n_low, cfg.ratio)
        X, names, dates = panel.values, panel.columns, panel.dates
    else:
        X, names, dates = None, None, None
    n_high = X.shape[0] if X is not None else n_low * cfg.ratio
    spec = AggregationSpec(cfg.agg_mode, cfg.ratio, n_low, n_high)

    summary = {"n_columns_in": 0 if X is None else X.shape[1]}
    if X is not None and cfg.corr_threshold is not None:
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always", DisaggWarning)
            X, kept, dropped = correlation_filter(X, cfg.corr_threshold)
        write_table(
            out / "filter_audit.csv",
            ["dropped", "kept", "corr", "reason"],
            ([names[d.dropped], "" if d.kept is None else names[d.kept], d.corr, d.reason] for d in dropped),
        )
        names = [names[j] for j in kept]
    summary["n_columns_used"] = 0 if X is None else X.shape[1]

    grid = cfg.rho_grid if cfg.rho_grid is not None else default_rho_grid()
    kwargs = {"intercept": cfg.intercept} if method.is_sparse else {}
    result = disaggregate(series.values, X, spec, method, grid=grid, names=names, **kwargs)
    fit = result.fit

    labels = dates if dates is not None and len(dates) == n_high else None
    write_matrix(out / "y_high.csv", result.y_high, ["y_hat"], labels)
    coef_rows = [(name, b) for name, b in zip(result.columns, result.beta)]
    if method.is_sparse and cfg.intercept:
        coef_rows.insert(0, ("(intercept)", fit.intercept))
    write_table(out / "coefficients.csv", ["name", "beta"], coef_rows)

    if method.is_sparse:
        write_table(out / "bic_trace.csv", list(TRACE_COLUMNS), fit.trace)
    else:
        write_table(
            out / "bic_trace.csv",
            ["rho", "loglik", "bic"],
            rho_profile(series.values, X, spec, method, grid),
        )

    aggregated = result.aggregated()
    abs_res = np.abs(aggregated - series.values)
    scale = max(np.abs(series.values).max(), 1e-300)
    write_table(
        out / "consistency.csv",
        ["period", "y_low", "aggregated", "abs_residual", "rel_residual"],
        zip(range(1, n_low + 1), series.values, aggregated, abs_res, abs_res / scale),
    )
    summary.update(
        {
            "method": method.value,
            "agg_mode": spec.mode.value,
            "ratio": spec.ratio,
            "n_low": n_low,
            "n_high": n_high,
            "rho": fit.rho,
            "lambda": getattr(fit, "lambda_", None),
            "bic": getattr(fit, "bic", None),
            "sigma2": fit.sigma2,
            "loglik": fit.loglik,
            "selected": result.selected_columns,
            "max_rel_residual": float(abs_res.max() / scale),
        }
    )
    write_json(out / "summary.json", summary)
    return summary


def _simulate(cfg: RunConfig) -> dict:
    data = generate(cfg.dgp_config())
    out = cfg.output_dir
    names = [f"x{j + 1}" for j in range(data.X.shape[1])]
    write_matrix(out / "y_low.csv", data.y_low, ["y"])
    write_matrix(out / "y_high.csv", data.y_high, ["y"])
    write_matrix(out / "X.csv", data.X, names)
    write_matrix(out / "beta_true.csv", data.beta_true, ["beta"])
    write_matrix(out / "errors.csv", data.errors, ["u"])
    return {"n_low": data.y_low.size, "n_high": data.y_high.size, "d": data.X.shape[1]}


def _benchmark(cfg: RunConfig) -> dict:
    dgp_method = cfg.method if not Method(cfg.method).is_sparse else "chow-lin"
    config = DgpConfig(**{**cfg.dgp_config().__dict__, "error_method": dgp_method})
    rows, summary = run_benchmark(
        config, cfg.methods, cfg.replicates, seed=cfg.seed, grid=cfg.rho_grid, jobs=cfg.jobs
    )
    write_table(cfg.output_dir / "benchmark_replicates.csv", REPLICATE_COLUMNS, rows)
    write_table(cfg.output_dir / "benchmark_summary.csv", SUMMARY_COLUMNS, summary)
    return {"replicates": cfg.replicates}


def run(cfg: RunConfig) -> int:
    """Execute one command and return its exit status."""
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        handler = {"disaggregate": _disaggregate, "simulate": _simulate, "benchmark": _benchmark}
        handler[cfg.command](cfg)
    except NumericalError as exc:
        return _fail(cfg, exc, EXIT_NUMERICAL)
    except (DisaggError, ValueError, OSError) as exc:
        return _fail(cfg, exc, EXIT_VALIDATION)
    return EXIT_OK


def _fail(cfg: RunConfig, exc: Exception, code: int) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    try:
        write_json(cfg.output_dir / "error.json", record)
    except OSError:
        pass
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdisagg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", type=Path, required=True)
    common.add_argument("--agg-mode", choices=[m.value for m in AggMode], default="sum")
    common.add_argument("--ratio", type=int, default=4)
    common.add_argument("--rho-grid", type=str, default=None,
                        help='"start:stop:num" or comma-separated values (default -0.99:0.99:199)')
    common.add_argument("--seed", type=int, default=0)

    dis = sub.add_parser("disaggregate", parents=[common], help="disaggregate a low-frequency series")
    dis.add_argument("--input", type=Path, required=True, help="low-frequency series file")
    dis.add_argument("--indicators", type=Path, help="high-frequency indicator panel file")
    dis.add_argument("--method", choices=[m.value for m in Method], default="chow-lin")
    dis.add_argument("--corr-threshold", type=float, default=None,
                     help="drop indicators correlated above this with an earlier one")
    dis.add_argument("--no-intercept", action="store_true", help="sparse methods: omit the constant")

    sim_args = argparse.ArgumentParser(add_help=False)
    sim_args.add_argument("--n-low", type=int, default=17)
    sim_args.add_argument("--n-high", type=int, default=None)
    sim_args.add_argument("--dim", type=int, default=1, help="number of indicators")
    sim_args.add_argument("--beta", type=float, default=1.0, help="magnitude of nonzero coefficients")
    sim_args.add_argument("--sparsity", type=float, default=0.0, help="fraction of zero coefficients")
    sim_args.add_argument("--rho", type=float, default=0.0)
    sim_args.add_argument("--design-mean", type=float, default=0.0)
    sim_args.add_argument("--design-sd", type=float, default=1.0)

    sim = sub.add_parser("simulate", parents=[common, sim_args], help="write a synthetic data bundle")
    sim.add_argument("--method", choices=["chow-lin", "fernandez", "litterman"], default="chow-lin",
                     help="error process")

    bench = sub.add_parser("benchmark", parents=[common, sim_args], help="Monte-Carlo method comparison")
    bench.add_argument("--method", choices=["chow-lin", "fernandez", "litterman"], default="chow-lin",
                       help="error process of the simulated data")
    bench.add_argument("--methods", type=str, default="chow-lin,sptd,adaptive-sptd")
    bench.add_argument("--replicates", type=int, default=100)
    bench.add_argument("--jobs", type=int, default=1)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {
        "command": args.command,
        "output_dir": args.output_dir,
        "agg_mode": args.agg_mode,
        "ratio": args.ratio,
        "seed": args.seed,
        "method": args.method,
        "rho_grid": parse_rho_grid(args.rho_grid) if args.rho_grid else None,
    }
    if args.command == "disaggregate":
        values.update(
            input=args.input,
            indicators=args.indicators,
            corr_threshold=args.corr_threshold,
            intercept=not args.no_intercept,
        )
    else:
        values.update(
            n_low=args.n_low,
            n_high=args.n_high,
            dim=args.dim,
            beta=args.beta,
            sparsity=args.sparsity,
            rho=args.rho,
            design_mean=args.design_mean,
            design_sd=args.design_sd,
        )
    if args.command == "benchmark":
        values.update(
            methods=[m.strip() for m in args.methods.split(",") if m.strip()],
            replicates=args.replicates,
            jobs=args.jobs,
        )
    return RunConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (DisaggError, ValueError) as exc:
        record = {"error": type(exc).__name__, "message": str(exc), "exit_code": EXIT_VALIDATION}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return EXIT_VALIDATION
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
