import math
import random

import numpy as np
import pytest

from mcsched.audit import validate_schedule
from mcsched.cipher_dp import assign_ciphers_dp
from mcsched.cloud import build_resource_pool, default_cloud
from mcsched.evaluate import ScheduleModel, evaluate, process_task
from mcsched.security import RC6_TABLE, CipherAssignment, SecurityConstraints, max_vulnerability
from mcsched.synthetic import generate
from mcsched.workflow import Workflow, augment

from conftest import make_workflow

NONE = CipherAssignment()


def test_hand_trace(tiny_cloud):
    w = augment(make_workflow({"t": 100}, []))
    pool = build_resource_pool(tiny_cloud, w)
    s = evaluate(w, tiny_cloud, pool, RC6_TABLE, NONE, {"t": 0})
    t = s.timings["t"]
    assert (t.start, t.finish) == (97.0, 197.0)
    assert s.makespan == 197.0
    assert s.cost == 0.006
    (lease,) = s.leases
    assert (lease.lease_start, lease.lease_finish) == (0.0, 197.0)
    assert s.timings["exit"].finish == 197.0


def test_same_instance_serializes(tiny_cloud):
    w = augment(make_workflow({"a": 10, "b": 20}, []))
    pool = build_resource_pool(tiny_cloud, w)
    assert len(pool) == 2
    s = evaluate(w, tiny_cloud, pool, RC6_TABLE, NONE, {"a": 0, "b": 0})
    a, b = s.timings["a"], s.timings["b"]
    first, second = sorted((a, b), key=lambda x: x.start)
    assert first.start == 97.0
    assert second.start == first.finish
    assert s.makespan == 127.0
    assert s.lease_order == (0,)


def test_empty_workflow(tiny_cloud):
    w = augment(Workflow((), ()))
    s = evaluate(w, tiny_cloud, build_resource_pool(tiny_cloud, w), RC6_TABLE, NONE, {})
    assert (s.makespan, s.cost, s.reliability) == (0.0, 0.0, 1.0)
    assert s.leases == []


def test_unmapped_and_out_of_range(tiny_cloud):
    w = augment(make_workflow({"t": 1}, []))
    pool = build_resource_pool(tiny_cloud, w)
    with pytest.raises(ValueError, match="not mapped"):
        evaluate(w, tiny_cloud, pool, RC6_TABLE, NONE, {})
    with pytest.raises(ValueError, match="pool has"):
        evaluate(w, tiny_cloud, pool, RC6_TABLE, NONE, {"t": 5})


def test_process_task_co_located(two_clouds, diamond):
    w = augment(diamond)
    pool = build_resource_pool(two_clouds, w)
    mapping = {t: 0 for t in "abcd"}
    for t in "abcd":
        assert process_task(w, two_clouds, pool, RC6_TABLE, NONE, mapping, t) == (0, 0, 0, 0, 1)


def test_process_task_cross_cloud(two_clouds):
    w = augment(make_workflow({"a": 1, "b": 1}, [("a", "b", 100)]))
    pool = build_resource_pool(two_clouds, w)
    assert [p.type_index for p in pool] == [0, 1, 2]
    res = process_task(w, two_clouds, pool, RC6_TABLE, None, {"a": 0, "b": 2}, "a")
    assert res.transfer_time == 1.0
    assert res.rel == pytest.approx(math.exp(-1e-7), rel=1e-15)
    assert (res.enc_time, res.dec_time) == (0.0, 0.0)


def test_process_task_decryption(two_clouds):
    w = augment(make_workflow({"a": 1, "b": 1}, [("a", "b", 1.28)]))
    pool = build_resource_pool(two_clouds, w)
    res = process_task(w, two_clouds, pool, RC6_TABLE, CipherAssignment({("a", "b"): 1}), {"a": 0, "b": 1}, "b")
    assert res.dec_time == pytest.approx(0.0308, rel=1e-12)
    with pytest.raises(ValueError, match="no cipher"):
        process_task(w, two_clouds, pool, RC6_TABLE, NONE, {"a": 0, "b": 1}, "b")


def sampled(name="epigenomics-24", seed=0):
    rng = random.Random(seed)
    w = augment(generate(name))
    weights = {e.key: (0.0 if w.is_virtual(e.src) or w.is_virtual(e.dst) else round(rng.uniform(0.1, 1), 1)) for e in w.edges}
    w = w.with_security(weights, {})
    return w


def random_schedule(w, sys, pool, rng, eta=0.5):
    mapping = {t.id: rng.randrange(len(pool)) for t in w.real_tasks}
    cons = SecurityConstraints(eta * max_vulnerability(w, RC6_TABLE))
    ciphers = assign_ciphers_dp(w, sys, pool, mapping, RC6_TABLE, cons)
    return mapping, ciphers, cons


def test_random_mappings_pass_audit():
    sys = default_cloud().sample_failure_rates(np.random.default_rng(1))
    w = sampled()
    pool = build_resource_pool(sys, w)
    model = ScheduleModel(w, sys, pool, RC6_TABLE)
    rng = random.Random(5)
    for _ in range(25):
        mapping, ciphers, cons = random_schedule(w, sys, pool, rng)
        report = validate_schedule(model.evaluate(mapping, ciphers), cons)
        assert report.passed, report.lines()


def test_simulation_agrees_with_process_task():
    sys = default_cloud()
    w = sampled("cybershake-30")
    pool = build_resource_pool(sys, w)
    model = ScheduleModel(w, sys, pool, RC6_TABLE)
    rng = random.Random(2)
    mapping, ciphers, _ = random_schedule(w, sys, pool, rng)
    s = model.evaluate(mapping, ciphers)
    for t in w.real_tasks:
        pr = process_task(w, sys, pool, RC6_TABLE, ciphers, mapping, t.id)
        tm = s.timings[t.id]
        assert tm.dec == pytest.approx(pr.dec_time, rel=1e-12, abs=1e-15)
        assert tm.enc == pytest.approx(pr.enc_time, rel=1e-12, abs=1e-15)
        assert tm.transfer == pytest.approx(pr.transfer_time, rel=1e-12, abs=1e-15)
        assert tm.finish == pytest.approx(tm.start + tm.processing, rel=1e-12)


def test_zero_crypto_never_slower():
    sys = default_cloud()
    w = sampled()
    pool = build_resource_pool(sys, w)
    model = ScheduleModel(w, sys, pool, RC6_TABLE)
    rng = random.Random(9)
    for _ in range(20):
        mapping, ciphers, _ = random_schedule(w, sys, pool, rng)
        place = model.placement_list(mapping)
        with_crypto = model.simulate(place, model.edge_levels(ciphers, place))
        without = model.simulate(place, None)
        assert without[0] <= with_crypto[0]


def test_deterministic():
    sys = default_cloud()
    w = sampled()
    pool = build_resource_pool(sys, w)
    mapping, ciphers, _ = random_schedule(w, sys, pool, random.Random(4))
    a = evaluate(w, sys, pool, RC6_TABLE, ciphers, mapping)
    b = evaluate(w, sys, pool, RC6_TABLE, ciphers, mapping)
    assert (a.makespan, a.cost, a.reliability, a.timings) == (b.makespan, b.cost, b.reliability, b.timings)


def test_requires_augmented(tiny_cloud):
    w = make_workflow({"t": 1}, [])
    with pytest.raises(ValueError, match="augmented"):
        ScheduleModel(w, tiny_cloud, (), RC6_TABLE)
