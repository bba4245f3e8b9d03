"""Parameter sampling, eta sweeps and result files."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .audit import validate_schedule
from .cloud import CloudSystem, default_cloud, load_cloud
from .errors import InfeasibleError, PoolExhaustedError
from .ingest import parse_workflow
from .schedulers import SchedulerConfig, run_pipeline
from .security import RC6_TABLE, CipherTable, SecurityConstraints, max_vulnerability
from .synthetic import generate, is_bundled
from .workflow import Workflow, augment

ALGORITHMS = {
    "lbs": ("lbs", False),
    "lbs+ls": ("lbs", True),
    "greedy": ("greedy", False),
    "random": ("random", False),
}
DEFAULT_ETAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)


@dataclass(frozen=True)
class ExperimentConfig:
    workflow: str = "epigenomics-24"  # file path or bundled generator name
    format: str | None = None
    cloud: str | None = None  # JSON config path; None uses the built-in six-provider cloud
    algorithms: tuple[str, ...] = ("lbs", "lbs+ls")
    etas: tuple[float, ...] = DEFAULT_ETAS
    reps: int = 15
    base_seed: int = 0
    scale_digits: int = 1
    weight_range: tuple[float, float] = (0.1, 1.0)
    fail_rate_range: tuple[float, float] = (1e-8, 1e-7)
    paired_etas: bool = True  # same weights, caps and rates at every eta for a given rep
    num_iter: int = 10
    frozen_ciphers: bool = False
    reference_mips: float = 1.0  # only used when parsing a DAX file
    out: str | None = None
    json: bool = False
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "etas", tuple(float(e) for e in self.etas))
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not self.etas or any(not 0 < e <= 1 for e in self.etas):
            raise ValueError("eta values must lie in (0, 1]")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")
        lo, hi = self.weight_range
        if not 0 <= lo <= hi:
            raise ValueError("weight_range must satisfy 0 <= low <= high")


@dataclass(frozen=True)
class RunParams:
    workflow: Workflow  # augmented, with sampled weights and caps
    system: CloudSystem  # with sampled failure rates
    constraints: SecurityConstraints
    v_max: float
    seed: int


@dataclass
class ResultRow:
    workflow: str
    n: int
    algorithm: str
    eta: float
    rep: int
    seed: int
    makespan: float
    cost: float
    reliability: float
    wall_ms: float
    feasible: bool
    status: str = "ok"


# wall-clock time goes to its own file so the raw results are reproducible byte for byte
RAW_COLUMNS = [f.name for f in fields(ResultRow) if f.name != "wall_ms"]


def load_workflow(cfg: ExperimentConfig) -> Workflow:
    if is_bundled(cfg.workflow) and not Path(cfg.workflow).exists():
        w = generate(cfg.workflow)
    else:
        w = parse_workflow(cfg.workflow, cfg.format, cfg.reference_mips)
    return augment(w)


def load_system(cfg: ExperimentConfig) -> CloudSystem:
    return default_cloud() if cfg.cloud is None else load_cloud(cfg.cloud)


def sample_run_params(
    cfg: ExperimentConfig,
    w: Workflow,
    system: CloudSystem,
    table: CipherTable,
    eta: float,
    eta_index: int,
    rep: int,
) -> RunParams:
    """Draw edge weights, edge caps and failure rates for one run; the budget is ``eta * V_max``.

    The stream is PCG64 seeded from ``(base_seed, rep)``, or from
    ``(base_seed, eta_index, rep)`` when ``cfg.paired_etas`` is off.
    """
    w = augment(w)
    key = (rep,) if cfg.paired_etas else (eta_index, rep)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.base_seed, spawn_key=key)))
    lo, hi = cfg.weight_range
    vuls = [c.vulnerability for c in table.ciphers]
    weights, caps = {}, {}
    for e in w.edges:
        if w.is_virtual(e.src) or w.is_virtual(e.dst):
            weights[e.key], caps[e.key] = 0.0, None
            continue
        weights[e.key] = round(float(rng.uniform(lo, hi)), cfg.scale_digits)
        caps[e.key] = vuls[int(rng.integers(len(vuls)))]
    w = w.with_security(weights, caps)
    system = system.sample_failure_rates(rng, *cfg.fail_rate_range)
    seed = int(rng.integers(2**63 - 1))
    v_max = max_vulnerability(w, table)
    return RunParams(w, system, SecurityConstraints(eta * v_max, cfg.scale_digits), v_max, seed)


def _run_cell(args) -> list[ResultRow]:
    cfg, w, system, table, ei, rep = args
    eta = cfg.etas[ei]
    p = sample_run_params(cfg, w, system, table, eta, ei, rep)
    n = len(p.workflow.real_tasks)
    rows = []
    for name in cfg.algorithms:
        allocator, use_ls = ALGORITHMS[name]
        sc = SchedulerConfig(num_iter=cfg.num_iter, seed=p.seed, frozen_ciphers=cfg.frozen_ciphers)
        t0 = time.perf_counter()
        try:
            s = run_pipeline(p.workflow, p.system, table, p.constraints, sc, use_ls=use_ls, allocator=allocator)
        except (InfeasibleError, PoolExhaustedError) as exc:
            ms = (time.perf_counter() - t0) * 1e3
            rows.append(ResultRow(w.name, n, name, eta, rep, p.seed, math.nan, math.nan, math.nan, ms, False,
                                  type(exc).__name__))
            continue
        ms = (time.perf_counter() - t0) * 1e3
        report = validate_schedule(s, p.constraints)
        status = "ok" if report.passed else "audit:" + "+".join(c.name for c in report.failed())
        rows.append(ResultRow(w.name, n, name, eta, rep, p.seed, s.makespan, s.cost, s.reliability, ms,
                              report.passed, status))
    return rows


def run_sweep(cfg: ExperimentConfig, table: CipherTable = RC6_TABLE) -> list[ResultRow]:
    """Every algorithm x eta x repetition; rows ordered by (algorithm, eta, rep).

    Files are written when ``cfg.out`` names a directory.
    """
    w = load_workflow(cfg)
    system = load_system(cfg)
    cells = [(cfg, w, system, table, ei, rep) for ei in range(len(cfg.etas)) for rep in range(cfg.reps)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            batches = list(ex.map(_run_cell, cells))
    else:
        batches = [_run_cell(c) for c in cells]
    alg_pos = {a: i for i, a in enumerate(cfg.algorithms)}
    eta_pos = {e: i for i, e in enumerate(cfg.etas)}
    rows = sorted((r for b in batches for r in b), key=lambda r: (alg_pos[r.algorithm], eta_pos[r.eta], r.rep))
    if cfg.out is not None:
        write_results(rows, cfg.out, cfg.json)
    return rows


def aggregate(rows: list[ResultRow]) -> list[dict]:
    """Mean and sample standard deviation of the feasible runs per (algorithm, eta)."""
    groups: dict[tuple[str, float], list[ResultRow]] = {}
    for r in rows:
        groups.setdefault((r.algorithm, r.eta), []).append(r)
    out = []
    for (alg, eta), rs in groups.items():
        ok = [r for r in rs if r.feasible]
        rec = {"workflow": rs[0].workflow, "algorithm": alg, "eta": eta, "runs": len(rs), "feasible": len(ok)}
        for metric in ("makespan", "cost", "reliability"):
            vals = [getattr(r, metric) for r in ok]
            rec[f"{metric}_mean"] = statistics.fmean(vals) if vals else math.nan
            rec[f"{metric}_std"] = statistics.stdev(vals) if len(vals) > 1 else 0.0
        out.append(rec)
    return out


def _csv_text(columns: list[str], records: list[dict]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for rec in records:
        wr.writerow([repr(v) if isinstance(v, float) else v for v in (rec[c] for c in columns)])
    return buf.getvalue()


def raw_csv(rows: list[ResultRow]) -> str:
    return _csv_text(RAW_COLUMNS, [asdict(r) for r in rows])


def aggregate_csv(rows: list[ResultRow]) -> str:
    agg = aggregate(rows)
    return _csv_text(list(agg[0]) if agg else ["algorithm", "eta"], agg)


def write_results(rows: list[ResultRow], out: str | Path, with_json: bool = False) -> None:
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / "raw.csv").write_text(raw_csv(rows))
    (d / "aggregate.csv").write_text(aggregate_csv(rows))
    timing = [{"algorithm": r.algorithm, "eta": r.eta, "rep": r.rep, "wall_ms": r.wall_ms} for r in rows]
    (d / "timings.csv").write_text(_csv_text(["algorithm", "eta", "rep", "wall_ms"], timing))
    if with_json:
        def clean(rec):
            return {k: None if isinstance(v, float) and math.isnan(v) else v for k, v in rec.items()}

        doc = {
            "raw": [clean({c: getattr(r, c) for c in RAW_COLUMNS}) for r in rows],
            "aggregate": [clean(a) for a in aggregate(rows)],
        }
        (d / "results.json").write_text(json.dumps(doc, indent=2) + "\n")
