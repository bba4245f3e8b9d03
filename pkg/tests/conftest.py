import math

import pytest

from mcsched.cloud import CloudSystem, InterCloudTariff, Provider, VmType
from mcsched.workflow import DataEdge, Task, Workflow


def make_workflow(tasks, edges, name="wf"):
    """tasks: {id: work}; edges: [(src, dst, size)]."""
    return Workflow(
        tuple(Task(t, float(w)) for t, w in tasks.items()),
        tuple(DataEdge(a, b, float(s)) for a, b, s in edges),
        name=name,
    )


@pytest.fixture
def diamond():
    return make_workflow({"a": 10, "b": 20, "c": 30, "d": 40}, [("a", "b", 8), ("a", "c", 16), ("b", "d", 4), ("c", "d", 4)])


@pytest.fixture
def tiny_cloud():
    """One per-minute provider with a single 1-MIPS type."""
    return CloudSystem((Provider("P", "per-minute", 20.0),), (VmType("P:small", "P", 1.0, 0.0015, 97.0),), ())


@pytest.fixture
def two_clouds():
    """Per-minute provider A and per-hour provider B, linked at 100 Mbps."""
    providers = (
        Provider("A", "per-minute", 20.0, 1e-7, 0.08, "A"),
        Provider("B", "per-hour", 20.0, 1e-7, 0.02, "B"),
    )
    types = (
        VmType("A:slow", "A", 2.0, 0.0015, 97.0, 1e-8),
        VmType("A:fast", "A", 8.0, 0.006, 97.0, 1e-8),
        VmType("B:slow", "B", 4.0, 0.06, 97.0, 1e-8),
    )
    tariffs = (
        InterCloudTariff("A", "B", 100.0, 1e-7, ((100.0, 0.0), (math.inf, 0.11))),
        InterCloudTariff("B", "A", 100.0, 1e-7, ((100.0, 0.0), (math.inf, 0.09))),
    )
    return CloudSystem(providers, types, tariffs)
