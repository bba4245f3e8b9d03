import pytest
from hypothesis import given, settings, strategies as st

from mcsched.errors import WorkflowError
from mcsched.workflow import (
    DataEdge,
    Task,
    Workflow,
    augment,
    level_groups,
    max_parallel_set,
    rank,
    top_level,
)

from conftest import make_workflow


def test_augment_single_task():
    w = augment(make_workflow({"t": 5}, []))
    assert [e.key for e in w.edges] == [("entry", "t"), ("t", "exit")]
    assert all(e.size == 0 for e in w.edges)
    assert w.task_map["entry"].is_virtual and w.task_map["exit"].is_virtual


def test_augment_diamond(diamond):
    w = augment(diamond)
    assert len(w.edges) == 6
    keys = {e.key for e in w.edges}
    assert ("entry", "a") in keys and ("d", "exit") in keys
    assert [e.key for e in w.edges] == sorted(keys)


def test_augment_keeps_original_edges(diamond):
    w = augment(diamond)
    for e in diamond.edges:
        assert w.edge_map[e.key] == e


def test_augment_empty_workflow():
    w = augment(Workflow((), ()))
    assert [e.key for e in w.edges] == [("entry", "exit")]
    assert w.real_tasks == []


def test_augment_avoids_id_clash():
    w = augment(make_workflow({"entry": 1, "x": 1}, [("entry", "x", 0)]))
    assert w.entry_id != "entry"
    assert w.task_map["entry"].work == 1


def test_augment_idempotent(diamond):
    w = augment(diamond)
    assert augment(w) is w


def test_self_loop_rejected():
    with pytest.raises(WorkflowError):
        make_workflow({"x": 1}, [("x", "x", 1)])


def test_cycle_names_member():
    with pytest.raises(WorkflowError, match="cycle"):
        make_workflow({"a": 1, "b": 1, "c": 1}, [("a", "b", 1), ("b", "c", 1), ("c", "a", 1)])


@pytest.mark.parametrize(
    "tasks,edges",
    [
        ({"a": 1}, [("a", "b", 1)]),  # unknown endpoint
        ({"a": 1, "b": 1}, [("a", "b", 1), ("a", "b", 2)]),  # duplicate edge
        ({"a": 1, "b": 1}, [("a", "b", -1)]),  # negative size
    ],
)
def test_structural_errors(tasks, edges):
    with pytest.raises(WorkflowError):
        make_workflow(tasks, edges)


def test_virtual_task_needs_zero_work_and_zero_size_edges():
    with pytest.raises(WorkflowError):
        Task("v", 1.0, True)
    with pytest.raises(WorkflowError):
        Workflow((Task("v", 0.0, True), Task("a", 1.0)), (DataEdge("v", "a", 3.0),))


def test_levels_chain():
    w = augment(make_workflow({"a": 1, "b": 1}, [("a", "b", 0)]))
    assert top_level(w) == {"entry": 0, "a": 1, "b": 2, "exit": 3}


def test_levels_diamond(diamond):
    lv = top_level(augment(diamond))
    assert lv["entry"] == 0 and lv["b"] == lv["c"] == 2 and lv["d"] == 3


def test_level_is_longest_path():
    # a -> c directly and via b: c sits below b
    lv = top_level(augment(make_workflow({"a": 1, "b": 1, "c": 1}, [("a", "b", 0), ("a", "c", 0), ("b", "c", 0)])))
    assert lv["c"] == 3


def test_rank_exit_is_zero(diamond):
    w = augment(diamond)
    r = rank(w, {t.id: t.work for t in w.tasks}, 1.0)
    assert r["exit"] == 0.0


def test_rank_chain():
    w = augment(make_workflow({"a": 1}, []))
    r = rank(w, {"entry": 0.0, "a": 10.0, "exit": 0.0}, 5.0)
    assert r["a"] == 10.0 and r["entry"] == 10.0


def test_rank_fork():
    # comm terms 1 and 3 at bandwidth 2: sizes 2 and 6
    w = augment(make_workflow({"a": 1, "b": 1, "c": 1}, [("a", "b", 2), ("a", "c", 6)]))
    avg = {"entry": 0.0, "exit": 0.0, "a": 2.0, "b": 5.0, "c": 9.0}
    r = rank(w, avg, 2.0)
    assert (r["b"], r["c"]) == (5.0, 9.0)
    assert r["a"] == 15.0


def test_max_parallel_set_examples(diamond):
    chain = augment(make_workflow({"a": 1, "b": 1, "c": 1}, [("a", "b", 0), ("b", "c", 0)]))
    assert len(max_parallel_set(chain)) == 1
    assert max_parallel_set(augment(diamond)) == {"b", "c"}
    fork = augment(make_workflow({"r": 1, **{f"k{i}": 1 for i in range(5)}}, [("r", f"k{i}", 0) for i in range(5)]))
    assert max_parallel_set(fork) == {f"k{i}" for i in range(5)}


def test_max_parallel_set_tie_goes_to_lower_level():
    w = augment(make_workflow({"a": 1, "b": 1, "c": 1, "d": 1}, [("a", "c", 0), ("b", "d", 0)]))
    assert max_parallel_set(w) == {"a", "b"}


@st.composite
def dags(draw, max_n=9):
    n = draw(st.integers(0, max_n))
    ids = [f"t{i}" for i in range(n)]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=14)) if pairs else []
    work = draw(st.lists(st.floats(0, 100), min_size=n, max_size=n))
    sizes = draw(st.lists(st.floats(0, 50), min_size=len(chosen), max_size=len(chosen)))
    return Workflow(
        tuple(Task(ids[i], work[i]) for i in range(n)),
        tuple(DataEdge(ids[i], ids[j], s) for (i, j), s in zip(chosen, sizes)),
    )


def _ancestors(w, tid):
    out, stack = set(), list(w.pred[tid])
    while stack:
        u = stack.pop()
        if u not in out:
            out.add(u)
            stack.extend(w.pred[u])
    return out


@given(dags())
@settings(max_examples=80, deadline=None)
def test_structural_properties(raw):
    w = augment(raw)
    lv = top_level(w)
    for e in w.edges:
        assert lv[e.dst] > lv[e.src]
    avg = {t.id: t.work / 3 for t in w.tasks}
    r = rank(w, avg, 7.0)
    for t in w.tasks:
        assert r[t.id] >= avg[t.id]
    for e in w.edges:
        assert r[e.src] >= r[e.dst] + avg[e.src]
    assert augment(w) == w
    mps = max_parallel_set(w)
    if raw.tasks:
        assert len(mps) >= 1
    for a in mps:
        assert not (_ancestors(w, a) & mps)
    assert sum(len(g) for g in level_groups(w).values()) == len(raw.tasks)
    # every real task reachable from entry and reaching exit
    for t in w.real_tasks:
        assert w.entry_id in _ancestors(w, t.id)
        assert t.id in _ancestors(w, w.exit_id)
