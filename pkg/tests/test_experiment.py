import csv
import io
import json
import math

import pytest

from mcsched import experiment
from mcsched.cloud import default_cloud
from mcsched.errors import InfeasibleError
from mcsched.experiment import (
    RAW_COLUMNS,
    ExperimentConfig,
    aggregate,
    load_workflow,
    raw_csv,
    run_sweep,
    sample_run_params,
)
from mcsched.security import RC6_TABLE


@pytest.fixture
def single_edge(tmp_path):
    p = tmp_path / "pair.json"
    doc = {"name": "pair", "tasks": [{"id": "a", "work_mi": 10}, {"id": "b", "work_mi": 10}],
           "edges": [{"src": "a", "dst": "b", "size_mb": 5}]}
    p.write_text(json.dumps(doc))
    return str(p)


def params(cfg, eta=0.3, ei=0, rep=0):
    return sample_run_params(cfg, load_workflow(cfg), default_cloud(), RC6_TABLE, eta, ei, rep)


def test_single_edge_budget(single_edge):
    cfg = ExperimentConfig(workflow=single_edge, weight_range=(1.0, 1.0))
    p = params(cfg)
    assert p.v_max == 98
    assert p.constraints.system_cap == pytest.approx(29.4)
    assert params(cfg, eta=0.0).constraints.system_cap == 0.0


def test_sampling_is_deterministic_and_in_range():
    cfg = ExperimentConfig(workflow="cybershake-30")
    a, b = params(cfg, rep=3), params(cfg, rep=3)
    assert a == b
    assert params(cfg, rep=4).workflow != a.workflow
    w = a.workflow
    vuls = {c.vulnerability for c in RC6_TABLE.ciphers}
    for e in w.edges:
        if w.is_virtual(e.src) or w.is_virtual(e.dst):
            assert (e.sec_weight, e.vuln_cap) == (0.0, None)
        else:
            assert 0.1 <= e.sec_weight <= 1.0 and round(e.sec_weight, 1) == e.sec_weight
            assert e.vuln_cap in vuls
    rates = [t.fail_rate for t in a.system.vm_types]
    assert all(1e-8 <= r <= 1e-7 for r in rates)


def test_paired_etas_share_samples():
    cfg = ExperimentConfig(workflow="cybershake-30")
    assert params(cfg, 0.1, 0).workflow == params(cfg, 0.7, 6).workflow
    unpaired = ExperimentConfig(workflow="cybershake-30", paired_etas=False)
    assert params(unpaired, 0.1, 0).workflow != params(unpaired, 0.7, 6).workflow


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(etas=(0.0,))
    with pytest.raises(ValueError):
        ExperimentConfig(reps=0)
    with pytest.raises(ValueError):
        ExperimentConfig(algorithms=("gsa",))


def test_sweep_counts_and_files(tmp_path):
    cfg = ExperimentConfig(workflow="cybershake-24", algorithms=("lbs", "greedy"), out=str(tmp_path), json=True)
    rows = run_sweep(cfg)
    assert len(rows) == 210
    assert all(r.feasible and r.status == "ok" for r in rows)
    assert [(r.algorithm, r.eta, r.rep) for r in rows] == sorted(
        ((r.algorithm, r.eta, r.rep) for r in rows), key=lambda k: (("lbs", "greedy").index(k[0]), k[1], k[2])
    )
    agg = list(csv.DictReader(io.StringIO((tmp_path / "aggregate.csv").read_text())))
    assert len(agg) == 14
    assert all(int(a["runs"]) == 15 for a in agg)
    raw = list(csv.reader(io.StringIO((tmp_path / "raw.csv").read_text())))
    assert raw[0] == RAW_COLUMNS and len(raw) == 211
    assert "wall_ms" not in raw[0]
    assert len((tmp_path / "timings.csv").read_text().splitlines()) == 211
    doc = json.loads((tmp_path / "results.json").read_text())
    assert len(doc["raw"]) == 210 and len(doc["aggregate"]) == 14


def test_raw_csv_is_reproducible(tmp_path):
    cfg = ExperimentConfig(workflow="epigenomics-24", algorithms=("lbs", "random"), etas=(0.1, 0.5), reps=3)
    assert raw_csv(run_sweep(cfg)) == raw_csv(run_sweep(cfg))


def test_parallel_sweep_matches_serial():
    cfg = ExperimentConfig(workflow="cybershake-24", algorithms=("lbs",), etas=(0.2, 0.6), reps=3)
    par = ExperimentConfig(**{**cfg.__dict__, "jobs": 2})
    assert raw_csv(run_sweep(cfg)) == raw_csv(run_sweep(par))


def test_failed_run_becomes_infeasible_row(monkeypatch, tmp_path):
    calls = []

    def boom(*args, **kwargs):
        calls.append(1)
        if len(calls) == 2:
            raise InfeasibleError("system budget")
        return real(*args, **kwargs)

    real = experiment.run_pipeline
    monkeypatch.setattr(experiment, "run_pipeline", boom)
    cfg = ExperimentConfig(workflow="cybershake-24", algorithms=("lbs",), etas=(0.3,), reps=3, out=str(tmp_path), json=True)
    rows = run_sweep(cfg)
    assert len(rows) == 3
    bad = [r for r in rows if not r.feasible]
    assert len(bad) == 1 and bad[0].status == "InfeasibleError" and math.isnan(bad[0].makespan)
    (agg,) = aggregate(rows)
    assert agg["runs"] == 3 and agg["feasible"] == 2 and not math.isnan(agg["cost_mean"])
    doc = json.loads((tmp_path / "results.json").read_text())
    assert doc["raw"][1]["makespan"] is None
