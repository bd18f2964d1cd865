"""Command-line front end.

    qreduce trajectory run.cfg [key=value ...] [--workers N]
    qreduce ensemble   run.cfg ...
    qreduce sweep      run.cfg ...
    qreduce oracle-check [run.cfg] ...

Config files are flat ``key = value`` lines with ``#`` comments; command-line
``key=value`` pairs override the file.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import checks
from .analytic import BranchSpec
from .errors import ConfigError, QReduceError
from .experiment import ExperimentSpec, run_ensemble, run_trajectory, sweep_g
from .hilbert import FockCutoff, ModelParams
from .sde import IntegratorConfig
from .stats import gaussian_kde, power_law_fit, summarize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4
EXIT_ORACLE = 5

OUT_DIR_ENV = "QREDUCE_OUT_DIR"

TRAJECTORY_COLUMNS = ["t", "re_a", "im_a", "var_a", "re_da2", "im_da2", "sx",
                      "cov_sx_field", "norm_drift", "trunc_top5"]
PATHS_COLUMNS = ["path_index", "stopping_time", "outcome"]
SWEEP_COLUMNS = ["g", "n_paths", "n_reduced", "mean_tau", "std_tau", "stderr_tau"]


@dataclass
class RunConfig:
    omega: float = 0.5
    nu: float = 0.5
    g: float = 4.0
    lambda_: float = 0.2
    alpha_re: float = 4.0
    alpha_im: float = 0.0
    c1_re: float = 1.0
    c1_im: float = 0.0
    c2_re: float = 1.0
    c2_im: float = 0.0
    dt: float = 1e-4
    sample_interval: float = 0.01
    t_max: float = 3.0
    n_max: str = "auto"
    threshold: float = 0.99
    n_paths: int = 100
    seed: int = 0
    out_dir: str = ""
    g_list: str = "2,3,4,6,8"

    @staticmethod
    def key(name: str) -> str:
        return "lambda" if name == "lambda_" else name

    @classmethod
    def keys(cls):
        return [cls.key(f.name) for f in fields(cls)]

    def set(self, key: str, raw: str):
        key = key.strip()
        name = "lambda_" if key == "lambda" else key
        if key not in self.keys():
            raise ConfigError(f"unknown config key {key!r}")
        raw = raw.strip()
        kind = {f.name: f.type for f in fields(self)}[name]
        try:
            if kind == "float":
                value = float(raw)
                if not math.isfinite(value):
                    raise ValueError
            elif kind == "int":
                value = int(raw)
            else:
                value = raw
        except ValueError:
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
        setattr(self, name, value)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{self.key(f.name)} = {v!r}" if isinstance(v, float) else f"{self.key(f.name)} = {v}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {self.key(f.name): getattr(self, f.name) for f in fields(self)}

    # -- conversion -----------------------------------------------------

    def n_max_value(self):
        if self.n_max.strip().lower() == "auto":
            return None
        try:
            n = int(self.n_max)
        except ValueError:
            raise ConfigError(f"n_max must be an integer or 'auto', got {self.n_max!r}") from None
        if n < 1:
            raise ConfigError("n_max must be >= 1")
        return n

    def g_values(self):
        try:
            gs = [float(x) for x in self.g_list.replace(" ", "").split(",") if x]
        except ValueError:
            raise ConfigError(f"bad g_list {self.g_list!r}") from None
        if len(gs) < 1 or any(not g > 0 for g in gs):
            raise ConfigError("g_list needs positive couplings")
        return gs

    def to_spec(self) -> ExperimentSpec:
        """ExperimentSpec for this config; branch amplitudes are rescaled to unit total probability."""
        if self.n_paths < 1:
            raise ConfigError("n_paths must be >= 1")
        c1 = complex(self.c1_re, self.c1_im)
        c2 = complex(self.c2_re, self.c2_im)
        total = math.sqrt(abs(c1) ** 2 + abs(c2) ** 2)
        if total == 0:
            raise ConfigError("c1 and c2 cannot both vanish")
        n_max = self.n_max_value()
        try:
            return ExperimentSpec(
                params=ModelParams(self.omega, self.nu, self.g, self.lambda_),
                branch=BranchSpec(c1 / total, c2 / total, complex(self.alpha_re, self.alpha_im)),
                integrator=IntegratorConfig(dt=self.dt, sample_interval=self.sample_interval),
                t_max=self.t_max,
                threshold=self.threshold,
                n_paths=self.n_paths,
                seed=self.seed,
                cutoff=FockCutoff(n_max) if n_max is not None else None,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def parse_config(text: str, overrides=()) -> RunConfig:
    cfg = RunConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        k, v = line.split("=", 1)
        cfg.set(k, v)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        cfg.set(k, v)
    return cfg


# -- output ---------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, int)) and not isinstance(x, float):
        return str(int(x))
    return f"{float(x):.12g}"


def _round(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}") if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _round(obj.tolist())
    return obj


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_json(path: Path, obj):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(json.dumps(_round(obj), indent=2, sort_keys=True) + "\n")


def write_trajectory(rec, out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = zip(rec.times, rec.a_mean.real, rec.a_mean.imag, rec.var_a,
               rec.delta_a_sq.real, rec.delta_a_sq.imag, rec.sx_mean,
               rec.cov_current_field, rec.norm_drift, rec.trunc_top)
    path = out / "trajectory.csv"
    _write_csv(path, TRAJECTORY_COLUMNS, rows)
    return [path]


def ensemble_summary(result) -> dict:
    taus = result.stopping_times
    d = {
        "n_paths": result.n_paths,
        "n_plus": result.n_plus,
        "n_minus": result.n_minus,
        "n_unreduced": result.n_unreduced,
        "mean_tau": result.mean_tau,
        "std_tau": result.std_tau,
        "stderr_tau": result.stderr_tau,
    }
    if len(taus):
        s = summarize(taus)
        d["median_tau"] = s.median
        d["histogram"] = {"edges": s.edges, "counts": s.counts}
    return d


def write_ensemble(result, out_dir, config: dict | None = None) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "paths.csv", out / "summary.json"]
    _write_csv(written[0], PATHS_COLUMNS,
               ((p.path_index, p.stopping_time, p.outcome) for p in result.paths))
    summary = ensemble_summary(result)
    taus = result.stopping_times
    kde = None
    if len(taus) >= 2 and taus.std() > 0:
        kde = gaussian_kde(taus)
        summary["kde_bandwidth"] = kde.bandwidth
    if config is not None:
        summary["config"] = config
    _write_json(written[1], summary)
    if kde is not None:
        written.append(out / "kde.csv")
        _write_csv(written[2], ["tau", "density"], zip(kde.grid, kde.density))
    return written


def write_sweep(points, out_dir, config: dict | None = None) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sweep_path, fit_path = out / "sweep.csv", out / "fit.json"
    _write_csv(sweep_path, SWEEP_COLUMNS,
               ((p.g, p.n_paths, p.n_reduced, p.mean_tau, p.std_tau, p.stderr_tau)
                for p in points))
    usable = [(p.g, p.mean_tau) for p in points if p.mean_tau is not None]
    fit = {"points": usable}
    if len(usable) >= 3:
        r = power_law_fit(usable)
        fit.update(k=r.k, exponent=r.exponent, k_fixed_exponent=r.k_fixed_exponent,
                   fixed_exponent=r.fixed_exponent, residual=r.residual)
    if config is not None:
        fit["config"] = config
    _write_json(fit_path, fit)
    return [sweep_path, fit_path]


def write_report(results, out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    _write_json(path, {
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
    })
    return [path]


def write_outputs(obj, out_dir, config: dict | None = None) -> list:
    """Write the artifacts for a trajectory record, ensemble result,
    list of sweep points or list of oracle check results."""
    from .experiment import EnsembleResult, SweepPoint
    from .sde import TrajectoryRecord

    if isinstance(obj, TrajectoryRecord):
        return write_trajectory(obj, out_dir)
    if isinstance(obj, EnsembleResult):
        return write_ensemble(obj, out_dir, config)
    if isinstance(obj, list) and obj and isinstance(obj[0], SweepPoint):
        return write_sweep(obj, out_dir, config)
    if isinstance(obj, list) and obj and isinstance(obj[0], checks.CheckResult):
        return write_report(obj, out_dir)
    raise TypeError(f"don't know how to write {type(obj).__name__}")


# -- entry point ----------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="qreduce", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["trajectory", "ensemble", "sweep", "oracle-check"])
    p.add_argument("config", nargs="?", help="flat key = value config file")
    p.add_argument("overrides", nargs="*", metavar="key=value")
    p.add_argument("--workers", type=int, default=1, help="parallel path workers")
    p.add_argument("--path-index", type=int, default=0, help="trajectory: which path")
    p.add_argument("--out-dir", help=f"output directory (else config out_dir, ${OUT_DIR_ENV}, '.')")
    return p


def _load(args) -> RunConfig:
    overrides = list(args.overrides)
    text = ""
    if args.config is not None:
        if "=" in args.config and not os.path.exists(args.config):
            overrides.insert(0, args.config)
        else:
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    return parse_config(text, overrides)


def _out_dir(args, cfg) -> Path:
    return Path(args.out_dir or cfg.out_dir or os.environ.get(OUT_DIR_ENV) or ".")


def run_command(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        out = _out_dir(args, cfg)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if args.command == "oracle-check":
            results = checks.run_all()
            write_report(results, out)
            for r in results:
                print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.value:.3g} (limit {r.threshold:.3g})")
            return EXIT_OK if all(r.passed for r in results) else EXIT_ORACLE

        spec = cfg.to_spec()
        meta = cfg.as_dict()
        if args.command == "trajectory":
            rec = run_trajectory(spec, args.path_index)
            write_trajectory(rec, out)
            if not rec.valid:
                print("truncation monitor tripped; record is invalid", file=sys.stderr)
                return EXIT_NUMERIC
        elif args.command == "ensemble":
            res = run_ensemble(spec.replace(stop_after=0.0), workers=args.workers,
                               keep_records=False)
            write_ensemble(res, out, meta)
            print(f"+1: {res.n_plus}  -1: {res.n_minus}  unreduced: {res.n_unreduced}  "
                  f"mean tau: {_fmt(res.mean_tau)}")
        else:
            points = sweep_g(spec, cfg.g_values(), workers=args.workers)
            write_sweep(points, out, meta)
            for p in points:
                print(f"g={_fmt(p.g)} mean tau={_fmt(p.mean_tau)} std={_fmt(p.std_tau)}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QReduceError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
