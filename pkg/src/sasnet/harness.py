"""Command line runner: single runs, parameter sweeps and CSV artifacts."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from .baselines import AlgorithmTag, Grids, Solution, solve
from .problems import Segment, build_problems, check_feasibility
from .scenario import ConfigError, ScenarioConfig, config_from_dict, generate_scenario, load_config

RESULT_COLUMNS = ("scenario_hash", "algorithm", "seed", "eta_abs", "eta_sat", "eta_cbs",
                  "eta_total", "iters", "wall_ms", "converged")
TRACE_COLUMNS = ("segment", "iteration", "eta_ub", "eta_lb", "gap", "wall_ms", "j", "eta", "F")
RESIDUAL_COLUMNS = ("segment", "t", "primal_res", "dual_res")
DEPLOYMENT_COLUMNS = ("slot", "abs_id", "x", "y", "h", "served_lue_ids")
SWEEP_COLUMNS = ("variable", "value", "algorithm", "runs",
                 "mean_eta_abs", "mean_eta_sat", "mean_eta_cbs", "mean_eta_total", "std_eta_total")
SWEEP_VARIABLES = ("lue_count", "hue_count", "abs_count")

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3


@dataclass
class RunRecord:
    scenario_hash: str
    algorithm: str
    seed: int
    eta_abs: float
    eta_sat: float
    eta_cbs: float
    eta_total: float
    iters: int
    wall_ms: float
    converged: bool
    violations: int
    config: dict
    solution: Solution | None = field(default=None, repr=False)

    def row(self) -> list[str]:
        return [self.scenario_hash, self.algorithm, str(self.seed),
                *(_num(v) for v in (self.eta_abs, self.eta_sat, self.eta_cbs, self.eta_total)),
                str(self.iters), _num(self.wall_ms), str(int(self.converged))]


def _num(v) -> str:
    if v is None or v == "":
        return ""
    return repr(float(v))


def parse_algorithm(name: str) -> AlgorithmTag:
    for tag in AlgorithmTag:
        if name.lower() in (tag.value, tag.name.lower()):
            return tag
    raise ConfigError(f"unknown algorithm '{name}'", ["algorithm"])


def with_overrides(cfg: ScenarioConfig, **overrides: Any) -> ScenarioConfig:
    """Apply overrides, then re-run the config checks."""
    values = cfg.to_dict()
    values.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(values)


# ------------------------------------------------------------------------ run

def execute(cfg: ScenarioConfig, algorithm: AlgorithmTag | str, seed: int,
            grids: Grids | None = None) -> RunRecord:
    """Generate the scenario, run one allocator and check its output."""
    tag = parse_algorithm(algorithm) if isinstance(algorithm, str) else algorithm
    s = generate_scenario(cfg, seed)
    grids = grids or Grids(cfg.power_levels, None, cfg.grid_points)
    t0 = time.perf_counter()
    sol = solve(tag, s, seed, grids)
    wall = (time.perf_counter() - t0) * 1e3 if cfg.record_wall_time else 0.0
    problems = build_problems(s)
    violations = sum(len(check_feasibility(problems[seg], sol.association, sol.allocation))
                     for seg in Segment)
    if violations:
        raise RuntimeError(f"{tag.value} emitted an infeasible solution ({violations} violations)")
    r = sol.report
    return RunRecord(s.digest, tag.value, seed, r.eta_u, r.eta_s, r.eta_c, r.eta_total,
                     sol.iterations, wall, sol.converged, violations, cfg.to_dict(), sol)


def _write_rows(path: Path, columns, rows, append=False) -> None:
    new = not (append and path.exists())
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(columns)
        w.writerows(rows)


def trace_rows(rec: RunRecord) -> list[list[str]]:
    rows = []
    bd = rec.solution.details.get("benders", {}) if rec.solution else {}
    for seg, res in bd.items():
        for i, ub, lb, gap, wall in res.trace:
            rows.append([seg.value, str(i), _num(ub), _num(lb), _num(gap), _num(wall), "", "", ""])
        for i, j, eta, F in res.dinkelbach_trace:
            rows.append([seg.value, str(i), "", "", "", "", str(j), _num(eta), _num(F)])
    return rows


def residual_rows(rec: RunRecord) -> list[list[str]]:
    rows = []
    bd = rec.solution.details.get("benders", {}) if rec.solution else {}
    for seg, res in bd.items():
        for _, t, primal, dual in res.admm_trace:
            rows.append([seg.value, str(t), _num(primal), _num(dual)])
    return rows


def emit_deployment(rec: RunRecord, path: str | Path | None = None) -> list[list[str]]:
    """Per-slot ABS positions with the LUEs each one serves."""
    if rec.solution is None:
        raise ValueError("record carries no solution")
    a, x = rec.solution.association, rec.solution.allocation
    U, N = x.deploy.shape[:2]
    rows = []
    for n in range(N):
        for u in range(U):
            px, py, h = x.deploy[u, n]
            served = ";".join(str(m) for m in a.served_lues(u))
            rows.append([str(n), str(u), _num(px), _num(py), _num(h), served])
    if path is not None:
        _write_rows(Path(path), DEPLOYMENT_COLUMNS, rows)
    return rows


def run(config_path: str | Path, algorithm: str, seed: int, out_dir: str | Path,
        trace: bool = True, **overrides: Any) -> RunRecord:
    """One run; appends to results.csv and writes per-run artifacts."""
    cfg = with_overrides(load_config(config_path), **overrides)
    rec = execute(cfg, algorithm, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{rec.algorithm}_s{seed}"
    _write_rows(out / "results.csv", RESULT_COLUMNS, [rec.row()], append=True)
    (out / f"config_{stem}.yaml").write_text(yaml.safe_dump(rec.config, sort_keys=True))
    if trace:
        _write_rows(out / f"trace_{stem}.csv", TRACE_COLUMNS, trace_rows(rec))
        _write_rows(out / f"residuals_{stem}.csv", RESIDUAL_COLUMNS, residual_rows(rec))
    emit_deployment(rec, out / f"deployment_{stem}.csv")
    return rec


# ---------------------------------------------------------------------- sweep

def _sweep_job(args):
    cfg, variable, value, algorithm, seed = args
    rec = execute(dataclasses.replace(cfg, **{variable: value}), algorithm, seed)
    rec.solution = None
    return rec


def sweep(config: ScenarioConfig | str | Path, variable: str, values: Sequence,
          seeds: Sequence[int], algorithms: Sequence[str] = ("proposed",),
          out: str | Path | None = None, workers: int = 1) -> list[list[str]]:
    """Cross product of values, algorithms and seeds; mean/std per (algorithm, value)."""
    if variable not in SWEEP_VARIABLES:
        raise ConfigError(f"cannot sweep '{variable}'", [variable])
    cfg = config if isinstance(config, ScenarioConfig) else load_config(config)
    for v in values:
        with_overrides(cfg, **{variable: v})
    jobs = [(cfg, variable, v, alg, sd) for v in values for alg in algorithms for sd in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            records = list(ex.map(_sweep_job, jobs))
    else:
        records = [_sweep_job(j) for j in jobs]
    rows = []
    for v in values:
        for alg in algorithms:
            tag = parse_algorithm(alg).value
            group = [r for (_, _, jv, ja, _), r in zip(jobs, records) if jv == v and ja == alg]
            etas = np.array([[r.eta_abs, r.eta_sat, r.eta_cbs, r.eta_total] for r in group])
            mean = etas.mean(axis=0)
            rows.append([variable, str(v), tag, str(len(group)), *(_num(m) for m in mean),
                         _num(etas[:, 3].std())])
    if out is not None:
        _write_rows(Path(out), SWEEP_COLUMNS, rows)
    return rows


# ------------------------------------------------------------------------ CLI

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sasnet", description="Run one allocator on a generated scenario.")
    p.add_argument("--config", required=True)
    p.add_argument("--algorithm", default="proposed", choices=[t.value for t in AlgorithmTag])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--upsilon", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--max-benders-iter", type=int, dest="max_benders_iter")
    p.add_argument("--trace", choices=("on", "off"), default="on")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = dict(epsilon=args.epsilon, upsilon=args.upsilon, rho=args.rho,
                     max_benders_iter=args.max_benders_iter)
    try:
        rec = run(args.config, args.algorithm, args.seed, args.out, args.trace == "on", **overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print(",".join(RESULT_COLUMNS))
    print(",".join(rec.row()))
    return EXIT_OK if rec.converged else EXIT_NOT_CONVERGED
