"""Workflow DAG model and structural quantities.

Units used throughout the package: work in million instructions (MI),
data in megabits (Mb), time in seconds.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Mapping

from .errors import WorkflowError

ENTRY_ID = "entry"
EXIT_ID = "exit"


@dataclass(frozen=True)
class Task:
    id: str
    work: float
    is_virtual: bool = False

    def __post_init__(self):
        if self.work < 0:
            raise WorkflowError(f"task {self.id!r}: negative work {self.work}")
        if self.is_virtual and self.work != 0:
            raise WorkflowError(f"virtual task {self.id!r} must have zero work")


@dataclass(frozen=True)
class DataEdge:
    """Data dependency ``src -> dst``.

    ``vuln_cap`` of ``None`` means the edge is not individually capped, which
    is the same as capping it at the largest vulnerability in the cipher table.
    """

    src: str
    dst: str
    size: float = 0.0
    sec_weight: float = 1.0
    vuln_cap: float | None = None

    def __post_init__(self):
        if self.src == self.dst:
            raise WorkflowError(f"self-loop on task {self.src!r}")
        if self.size < 0:
            raise WorkflowError(f"edge {self.key}: negative size {self.size}")
        if self.sec_weight < 0:
            raise WorkflowError(f"edge {self.key}: negative security weight")
        if self.vuln_cap is not None and self.vuln_cap < 0:
            raise WorkflowError(f"edge {self.key}: negative vulnerability cap")

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class Workflow:
    """Immutable DAG of tasks and data edges.

    ``entry_id``/``exit_id`` are set once the workflow has been augmented with
    virtual entry and exit tasks (see :func:`augment`).
    """

    tasks: tuple[Task, ...]
    edges: tuple[DataEdge, ...]
    entry_id: str | None = None
    exit_id: str | None = None
    name: str = "workflow"

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "edges", tuple(self.edges))
        ids = [t.id for t in self.tasks]
        seen: set[str] = set()
        for tid in ids:
            if tid in seen:
                raise WorkflowError(f"duplicate task id {tid!r}")
            seen.add(tid)
        pairs: set[tuple[str, str]] = set()
        for e in self.edges:
            if e.src not in seen or e.dst not in seen:
                raise WorkflowError(f"edge {e.key} references an unknown task")
            if e.key in pairs:
                raise WorkflowError(f"duplicate edge {e.key}")
            pairs.add(e.key)
        virtual = {t.id for t in self.tasks if t.is_virtual}
        for e in self.edges:
            if (e.src in virtual or e.dst in virtual) and e.size != 0:
                raise WorkflowError(f"edge {e.key} touches a virtual task but has size {e.size}")
        _check_acyclic(ids, self.edges)
        if self.entry_id is not None:
            if self.pred[self.entry_id]:
                raise WorkflowError("entry task has predecessors")
            if self.succ[self.exit_id]:
                raise WorkflowError("exit task has successors")

    # -- lookups ---------------------------------------------------------
    @cached_property
    def task_map(self) -> dict[str, Task]:
        return {t.id: t for t in self.tasks}

    @cached_property
    def edge_map(self) -> dict[tuple[str, str], DataEdge]:
        return {e.key: e for e in self.edges}

    @cached_property
    def pred(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {t.id: [] for t in self.tasks}
        for e in self.edges:
            out[e.dst].append(e.src)
        return out

    @cached_property
    def succ(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {t.id: [] for t in self.tasks}
        for e in self.edges:
            out[e.src].append(e.dst)
        return out

    @property
    def is_augmented(self) -> bool:
        return self.entry_id is not None

    @property
    def real_tasks(self) -> list[Task]:
        return [t for t in self.tasks if not t.is_virtual]

    def is_virtual(self, task_id: str) -> bool:
        return self.task_map[task_id].is_virtual

    def with_security(
        self,
        weights: Mapping[tuple[str, str], float],
        caps: Mapping[tuple[str, str], float | None],
    ) -> Workflow:
        """Copy of the workflow with per-edge security weights and caps replaced."""
        edges = [
            replace(e, sec_weight=weights.get(e.key, e.sec_weight), vuln_cap=caps.get(e.key, e.vuln_cap))
            for e in self.edges
        ]
        return replace(self, edges=tuple(edges))


def _check_acyclic(ids: Iterable[str], edges: Iterable[DataEdge]) -> None:
    graph: dict[str, set[str]] = {tid: set() for tid in ids}
    for e in edges:
        graph[e.dst].add(e.src)
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        cycle = exc.args[1]
        raise WorkflowError(f"cycle detected through task {cycle[0]!r}: {' -> '.join(cycle)}") from None


def _fresh_id(base: str, taken: set[str]) -> str:
    tid, k = base, 1
    while tid in taken:
        tid = f"{base}_{k}"
        k += 1
    return tid


def augment(raw: Workflow) -> Workflow:
    """Add a virtual entry feeding every source and a virtual exit fed by every sink.

    New edges have zero size and zero security weight (they carry no data).
    Edges are returned in lexicographic ``(src, dst)`` order, which is the
    canonical edge order used by the cipher-assignment DP. Already augmented
    workflows are returned unchanged.
    """
    if raw.is_augmented:
        return raw
    taken = {t.id for t in raw.tasks}
    entry = _fresh_id(ENTRY_ID, taken)
    taken.add(entry)
    exit_ = _fresh_id(EXIT_ID, taken)
    tasks = [Task(entry, 0.0, True), *raw.tasks, Task(exit_, 0.0, True)]
    edges = list(raw.edges)
    for t in raw.tasks:
        if not raw.pred[t.id]:
            edges.append(DataEdge(entry, t.id, 0.0, 0.0, None))
        if not raw.succ[t.id]:
            edges.append(DataEdge(t.id, exit_, 0.0, 0.0, None))
    if not raw.tasks:
        edges.append(DataEdge(entry, exit_, 0.0, 0.0, None))
    edges.sort(key=lambda e: e.key)
    return Workflow(tuple(tasks), tuple(edges), entry, exit_, raw.name)


def top_level(w: Workflow) -> dict[str, int]:
    """Longest-path depth of every task from the sources (BFS / Kahn order)."""
    indeg = {t.id: len(w.pred[t.id]) for t in w.tasks}
    level = {tid: 0 for tid in indeg}
    queue = deque(tid for tid, d in indeg.items() if d == 0)
    while queue:
        u = queue.popleft()
        for v in w.succ[u]:
            level[v] = max(level[v], level[u] + 1)
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return level


def topological_order(w: Workflow) -> list[str]:
    indeg = {t.id: len(w.pred[t.id]) for t in w.tasks}
    queue = deque(tid for tid, d in indeg.items() if d == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in w.succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return order


def rank(w: Workflow, avg_exec: Mapping[str, float], avg_bw: float) -> dict[str, float]:
    """Worst-case remaining processing time from each task to the exit.

    rank(v) = max(rank(s) for s in succ) + avg_exec(v) + sum(size(v, s) / avg_bw),
    and rank(exit) = avg_exec(exit).
    """
    out: dict[str, float] = {}
    for v in reversed(topological_order(w)):
        succ = w.succ[v]
        if not succ:
            out[v] = avg_exec[v]
            continue
        comm = sum(w.edge_map[(v, s)].size / avg_bw for s in succ)
        out[v] = max(out[s] for s in succ) + avg_exec[v] + comm
    return out


def level_groups(w: Workflow, levels: Mapping[str, int] | None = None) -> dict[int, list[str]]:
    levels = levels if levels is not None else top_level(w)
    groups: dict[int, list[str]] = defaultdict(list)
    for t in w.tasks:
        if not t.is_virtual:
            groups[levels[t.id]].append(t.id)
    return dict(groups)


def max_parallel_set(w: Workflow) -> set[str]:
    """Real tasks of the most populous topological level (ties: lowest level)."""
    groups = level_groups(w)
    if not groups:
        return set()
    best = max(sorted(groups), key=lambda lv: len(groups[lv]))
    return set(groups[best])
