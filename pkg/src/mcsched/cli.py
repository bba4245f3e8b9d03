"""Command line entry point: ``mcsched run|sweep|validate|gen``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .audit import validate_schedule
from .errors import InfeasibleError, PoolExhaustedError, WorkflowError
from .experiment import ALGORITHMS, DEFAULT_ETAS, ExperimentConfig, load_system, load_workflow, run_sweep, sample_run_params
from .export import load_schedule, save_schedule
from .ingest import save_native
from .schedulers import SchedulerConfig, run_pipeline
from .security import RC6_TABLE
from .synthetic import generate

EXIT_OK, EXIT_FAIL, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workflow", default="epigenomics-24", help="workflow file (JSON or DAX) or bundled name, e.g. cybershake-30")
    p.add_argument("--format", choices=["json", "dax"], help="workflow file format (default: from suffix)")
    p.add_argument("--cloud", help="cloud config JSON (default: built-in six-provider cloud)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frozen-ciphers", action="store_true", help="reuse the incumbent ciphers during local search")
    p.add_argument("--num-iter", type=int, default=10, help="local search round limit")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mcsched", description="Security-aware multi-cloud workflow scheduling.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="schedule one workflow and print its objectives")
    _common(run)
    run.add_argument("--algo", choices=list(ALGORITHMS), default="lbs")
    run.add_argument("--eta", type=float, default=0.3, help="budget as a fraction of the maximum vulnerability")
    run.add_argument("--out", help="write the schedule as JSON here")

    sw = sub.add_parser("sweep", help="run the eta sweep and write raw and aggregate CSVs")
    _common(sw)
    sw.add_argument("--algo", action="append", choices=list(ALGORITHMS), help="repeatable (default: lbs and lbs+ls)")
    sw.add_argument("--eta", type=float, action="append", help="repeatable (default: 0.1 .. 0.7)")
    sw.add_argument("--reps", type=int, default=15)
    sw.add_argument("--out", default="results", help="output directory")
    sw.add_argument("--json", action="store_true", help="also write results.json")
    sw.add_argument("--jobs", type=int, default=1)

    va = sub.add_parser("validate", help="audit an exported schedule")
    va.add_argument("schedule")

    gen = sub.add_parser("gen", help="write a bundled synthetic workflow as native JSON")
    gen.add_argument("name", help="e.g. epigenomics-24 or cybershake-100")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    return ap


def _cmd_run(a) -> int:
    cfg = ExperimentConfig(workflow=a.workflow, format=a.format, cloud=a.cloud, algorithms=(a.algo,), etas=(a.eta,),
                           reps=1, base_seed=a.seed, num_iter=a.num_iter, frozen_ciphers=a.frozen_ciphers)
    p = sample_run_params(cfg, load_workflow(cfg), load_system(cfg), RC6_TABLE, a.eta, 0, 0)
    allocator, use_ls = ALGORITHMS[a.algo]
    sc = SchedulerConfig(num_iter=a.num_iter, seed=p.seed, frozen_ciphers=a.frozen_ciphers)
    s = run_pipeline(p.workflow, p.system, RC6_TABLE, p.constraints, sc, use_ls=use_ls, allocator=allocator)
    report = validate_schedule(s, p.constraints)
    print(f"workflow={p.workflow.name} n={len(p.workflow.real_tasks)} algo={a.algo} eta={a.eta}")
    print(f"makespan={s.makespan:.6f} s cost={s.cost:.6f} USD reliability={s.reliability:.9f}")
    print(f"instances={len(s.lease_order)} cross_edges={len(s.ciphers.choices)} audit={'pass' if report.passed else 'FAIL'}")
    if a.out:
        save_schedule(s, a.out, p.constraints)
        print(f"schedule written to {a.out}")
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_sweep(a) -> int:
    cfg = ExperimentConfig(
        workflow=a.workflow, format=a.format, cloud=a.cloud,
        algorithms=tuple(a.algo or ("lbs", "lbs+ls")), etas=tuple(a.eta or DEFAULT_ETAS),
        reps=a.reps, base_seed=a.seed, num_iter=a.num_iter, frozen_ciphers=a.frozen_ciphers,
        out=a.out, json=a.json, jobs=a.jobs,
    )
    rows = run_sweep(cfg)
    bad = sum(not r.feasible for r in rows)
    print(f"{len(rows)} runs, {bad} infeasible or failing audit; results in {Path(a.out).resolve()}")
    return EXIT_OK if bad == 0 else EXIT_INFEASIBLE


def _cmd_validate(a) -> int:
    s, cons = load_schedule(a.schedule)
    if cons is None:
        print("schedule carries no constraints block", file=sys.stderr)
        return EXIT_IO
    report = validate_schedule(s, cons)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_gen(a) -> int:
    save_native(generate(a.name, a.seed), a.out)
    print(f"wrote {a.name} to {a.out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    a = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "validate": _cmd_validate, "gen": _cmd_gen}[a.cmd]
    try:
        return handler(a)
    except (InfeasibleError, PoolExhaustedError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, WorkflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
