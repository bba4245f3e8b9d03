"""Turn a task -> instance mapping and a cipher assignment into a timed, costed schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, NamedTuple, Sequence

from .cloud import (
    MEGABITS_PER_GB,
    CloudSystem,
    VmInstance,
    average_bandwidth,
    average_exec_times,
    comm_time,
    lease_cost,
    link_reliability,
    placement_of,
    transfer_cost,
)
from .security import CipherAssignment, CipherTable, crypto_time
from .workflow import Workflow, rank, top_level


@dataclass(frozen=True)
class TaskTiming:
    task: str
    instance: int | None
    start: float
    finish: float
    dec: float = 0.0
    exec: float = 0.0
    enc: float = 0.0
    transfer: float = 0.0

    @property
    def processing(self) -> float:
        return self.dec + self.exec + self.enc + self.transfer


@dataclass
class Schedule:
    workflow: Workflow
    system: CloudSystem
    table: CipherTable
    pool: tuple[VmInstance, ...]
    mapping: dict[str, int]
    ciphers: CipherAssignment
    timings: dict[str, TaskTiming]
    makespan: float
    cost: float
    reliability: float
    lease_cost: float = 0.0
    transfer_cost: float = 0.0
    lease_order: tuple[int, ...] = field(default=())

    @property
    def leases(self) -> list[VmInstance]:
        return [self.pool[r] for r in self.lease_order]


class ProcessResult(NamedTuple):
    dec_time: float
    transfer_time: float
    transfer_cost: float
    enc_time: float
    rel: float


def process_task(
    w: Workflow,
    sys: CloudSystem,
    pool: Sequence[VmInstance],
    table: CipherTable,
    ciphers: CipherAssignment | None,
    mapping: Mapping[str, int],
    task: str,
) -> ProcessResult:
    """Crypto, transfer and link-reliability terms of one task's processing time.

    Neighbours that are virtual or not yet in ``mapping`` are treated as
    co-located. With ``ciphers=None`` encryption and decryption are taken
    as zero (placement stage, before ciphers are known).
    """
    here = placement_of(sys, pool, mapping[task])
    cap = sys.vm_types[pool[here.instance].type_index].capacity
    dec = enc = ttime = tcost = 0.0
    rel = 1.0
    for p in w.pred[task]:
        if p not in mapping or mapping[p] == here.instance:
            continue
        if ciphers is not None:
            c = table.by_level[ciphers.level((p, task))]
            dec += crypto_time(w.edge_map[(p, task)].size, c, cap, False, table)
    for s in w.succ[task]:
        if s not in mapping or mapping[s] == here.instance:
            continue
        there = placement_of(sys, pool, mapping[s])
        size = w.edge_map[(task, s)].size
        if ciphers is not None:
            c = table.by_level[ciphers.level((task, s))]
            enc += crypto_time(size, c, cap, False, table)
        t = comm_time(sys, size, here, there)
        ttime += t
        tcost += transfer_cost(sys, size, here, there)
        rel *= link_reliability(sys, here, there, t)
    return ProcessResult(dec, ttime, tcost, enc, rel)


class ScheduleModel:
    """Precomputed, index-based view of (workflow, cloud, pool) for repeated evaluation.

    Real tasks are numbered in evaluation order: topological level, then
    decreasing rank, then id.
    """

    def __init__(self, w: Workflow, sys: CloudSystem, pool: Sequence[VmInstance], table: CipherTable):
        if not w.is_augmented:
            raise ValueError("workflow must be augmented before scheduling")
        self.workflow, self.system, self.pool, self.table = w, sys, tuple(pool), table
        self.levels = top_level(w)
        self.avg_exec = average_exec_times(w, sys)
        self.ranks = rank(w, self.avg_exec, average_bandwidth(sys))
        real = [t.id for t in w.real_tasks]
        self.order = sorted(real, key=lambda t: (self.levels[t], -self.ranks[t], t))
        self.pos = {tid: i for i, tid in enumerate(self.order)}
        n = len(self.order)
        tm = w.task_map
        self.work = [tm[t].work for t in self.order]

        # edges between real tasks, numbered in canonical order
        self.edge_keys: list[tuple[str, str]] = []
        self.edge_size: list[float] = []
        self.in_edges: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        self.out_edges: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for e in w.edges:
            if e.src in self.pos and e.dst in self.pos:
                k = len(self.edge_keys)
                self.edge_keys.append(e.key)
                self.edge_size.append(e.size)
                self.in_edges[self.pos[e.dst]].append((self.pos[e.src], k))
                self.out_edges[self.pos[e.src]].append((self.pos[e.dst], k))
        self.edge_index = {key: k for k, key in enumerate(self.edge_keys)}

        pids = [p.id for p in sys.providers]
        pidx = {p: i for i, p in enumerate(pids)}
        self.types = sys.vm_types
        self.type_cap = [t.capacity for t in sys.vm_types]
        self.type_boot = [t.boot_time for t in sys.vm_types]
        self.type_rate = [t.fail_rate for t in sys.vm_types]
        self.type_prov = [pidx[t.provider] for t in sys.vm_types]
        self.crypto_cap = [1.0 if table.capacity_mode == "normalized" else c for c in self.type_cap]
        self.inst_type = [inst.type_index for inst in self.pool]
        self.inst_prov = [self.type_prov[t] for t in self.inst_type]
        m = len(pids)
        self.bw = [[0.0] * m for _ in range(m)]
        self.lrate = [[0.0] * m for _ in range(m)]
        self.tariffs = [[None] * m for _ in range(m)]
        for a, pa in enumerate(pids):
            for b, pb in enumerate(pids):
                if a == b:
                    self.bw[a][b] = sys.providers[a].internal_bw
                    self.lrate[a][b] = sys.providers[a].link_fail_rate
                else:
                    t = sys.tariff(pa, pb)
                    self.bw[a][b] = t.bandwidth
                    self.lrate[a][b] = t.link_fail_rate
                    self.tariffs[a][b] = t
        # per real edge, indexed [src provider][dst provider]
        self.edge_comm = [[[sz / self.bw[a][b] for b in range(m)] for a in range(m)] for sz in self.edge_size]
        self.edge_price = [
            [[0.0 if a == b else self.tariffs[a][b].price(sz / MEGABITS_PER_GB) for b in range(m)] for a in range(m)]
            for sz in self.edge_size
        ]
        # unit-capacity crypto seconds per edge per cipher level
        self.level_pos = {c.level: i for i, c in enumerate(table.ciphers)}
        bs = table.block_size_bits
        self.crypto_base = [[c.block_time * s / bs for c in table.ciphers] for s in self.edge_size]
        self._lease_cost_fns = [self._lease_fn(t) for t in sys.vm_types]

    def _lease_fn(self, t):
        sys = self.system
        return lambda d: lease_cost(sys, t, d)

    def transfer_price(self, pa: int, pb: int, k: int) -> float:
        return self.edge_price[k][pa][pb]

    def placement_list(self, mapping: Mapping[str, int]) -> list[int]:
        place = []
        npool = len(self.pool)
        for t in self.order:
            if t not in mapping:
                raise ValueError(f"task {t!r} is not mapped to an instance")
            r = mapping[t]
            if not 0 <= r < npool:
                raise ValueError(f"task {t!r} mapped to instance {r}, pool has {npool}")
            place.append(r)
        return place

    def edge_levels(self, ciphers: CipherAssignment | None, place: Sequence[int]) -> list[int] | None:
        """Cipher table position per real edge; -1 for same-instance edges."""
        if ciphers is None:
            return None
        out = []
        for k, key in enumerate(self.edge_keys):
            a, b = place[self.pos[key[0]]], place[self.pos[key[1]]]
            out.append(-1 if a == b else self.level_pos[ciphers.level(key)])
        return out

    def simulate(self, place: Sequence[int], levels: Sequence[int] | None, detail: bool = False):
        """Run the list-schedule simulation.

        Returns ``(makespan, cost, reliability)``; with ``detail`` also the
        per-task component lists and lease bookkeeping.
        """
        n = len(self.order)
        ft = [0.0] * n
        lst: dict[int, float] = {}
        lft: dict[int, float] = {}
        lease_order: list[int] = []
        inst_type, inst_prov = self.inst_type, self.inst_prov
        lrate, comm, price = self.lrate, self.edge_comm, self.edge_price
        base = self.crypto_base
        tcost = 0.0
        log_rel = 0.0
        rows = [] if detail else None
        for i in range(n):
            r = place[i]
            ty = inst_type[r]
            p = inst_prov[r]
            st = 0.0
            dec = 0.0
            for j, k in self.in_edges[i]:
                if ft[j] > st:
                    st = ft[j]
                if levels is not None and place[j] != r:
                    dec += base[k][levels[k]]
            enc = tt = 0.0
            for j, k in self.out_edges[i]:
                r2 = place[j]
                if r2 == r:
                    continue
                if levels is not None:
                    enc += base[k][levels[k]]
                p2 = inst_prov[r2]
                c = comm[k][p][p2]
                tt += c
                log_rel -= lrate[p][p2] * c
                tcost += price[k][p][p2]
            cap = self.crypto_cap[ty]
            dec /= cap
            enc /= cap
            ex = self.work[i] / self.type_cap[ty]
            pt = dec + ex + enc + tt
            if r in lft:
                if lft[r] > st:
                    st = lft[r]
            else:
                boot = self.type_boot[ty]
                if boot > st:
                    st = boot
                lst[r] = st - boot
                lease_order.append(r)
            ft[i] = st + pt
            lft[r] = ft[i]
            if rows is not None:
                rows.append((st, ft[i], dec, ex, enc, tt))
        makespan = max(ft, default=0.0)
        lcost = 0.0
        for r in lease_order:
            ty = inst_type[r]
            d = lft[r] - lst[r]
            lcost += self._lease_cost_fns[ty](d)
            log_rel -= self.type_rate[ty] * d
        cost = lcost + tcost
        rel = math.exp(log_rel)
        if not detail:
            return makespan, cost, rel
        return makespan, cost, rel, rows, lst, lft, lease_order, lcost, tcost

    def objectives(self, mapping: Mapping[str, int], ciphers: CipherAssignment | None) -> tuple[float, float, float]:
        place = self.placement_list(mapping)
        return self.simulate(place, self.edge_levels(ciphers, place))

    def evaluate(self, mapping: Mapping[str, int], ciphers: CipherAssignment) -> Schedule:
        place = self.placement_list(mapping)
        levels = self.edge_levels(ciphers, place)
        makespan, cost, rel, rows, lst, lft, lease_order, lcost, tcost = self.simulate(place, levels, detail=True)
        w = self.workflow
        timings = {w.entry_id: TaskTiming(w.entry_id, None, 0.0, 0.0)}
        for tid, r, (st, f, dec, ex, enc, tt) in zip(self.order, place, rows):
            timings[tid] = TaskTiming(tid, r, st, f, dec, ex, enc, tt)
        timings[w.exit_id] = TaskTiming(w.exit_id, None, makespan, makespan)
        pool = list(self.pool)
        for r in lease_order:
            pool[r] = replace(pool[r], lease_start=lst[r], lease_finish=lft[r])
        return Schedule(
            workflow=w,
            system=self.system,
            table=self.table,
            pool=tuple(pool),
            mapping={t: mapping[t] for t in self.order},
            ciphers=ciphers,
            timings=timings,
            makespan=makespan,
            cost=cost,
            reliability=rel,
            lease_cost=lcost,
            transfer_cost=tcost,
            lease_order=tuple(lease_order),
        )


def evaluate(
    w: Workflow,
    sys: CloudSystem,
    pool: Sequence[VmInstance],
    table: CipherTable,
    ciphers: CipherAssignment,
    mapping: Mapping[str, int],
) -> Schedule:
    """Evaluate one mapping. Build a :class:`ScheduleModel` directly when evaluating many."""
    return ScheduleModel(w, sys, pool, table).evaluate(mapping, ciphers)
