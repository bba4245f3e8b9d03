"""Task -> instance allocation: list-based scheduler, local search, baselines, pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cipher_dp import CryptoEdge, DpSolver, assign_ciphers_dp
from .cloud import CloudSystem, VmInstance, build_resource_pool
from .errors import InfeasibleError, PoolExhaustedError
from .evaluate import Schedule, ScheduleModel
from .security import CipherTable, SecurityConstraints, vulnerability_of
from .workflow import Workflow, augment


@dataclass(frozen=True)
class MetricWeights:
    alpha: float  # cost
    beta: float  # processing time / makespan
    gamma: float  # unreliability

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0 or self.alpha + self.beta + self.gamma <= 0:
            raise ValueError(f"invalid metric weights {self}")


LBS_WEIGHTS = MetricWeights(0.7, 0.2, 0.1)
LS_WEIGHTS = MetricWeights(0.6, 0.2, 0.2)


@dataclass(frozen=True)
class SchedulerConfig:
    lbs_weights: MetricWeights = LBS_WEIGHTS
    ls_weights: MetricWeights = LS_WEIGHTS
    num_iter: int = 10
    seed: int = 0
    frozen_ciphers: bool = False

    def __post_init__(self):
        if self.num_iter < 1:
            raise ValueError("num_iter must be at least 1")


def minmax(values: np.ndarray) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant column scales to all zeros."""
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def combined_metric(cost, time, rel, weights: MetricWeights) -> np.ndarray:
    cost, time, rel = (np.asarray(x, dtype=float) for x in (cost, time, rel))
    return weights.alpha * minmax(cost) + weights.beta * minmax(time) + weights.gamma * minmax(-rel)


# -- list-based scheduler -------------------------------------------------

def lbs_order(model: ScheduleModel) -> list[str]:
    """Decreasing topological level, then decreasing rank, then id."""
    return sorted(model.order, key=lambda t: (-model.levels[t], -model.ranks[t], t))


def placement_scores(model: ScheduleModel, i: int, place: Sequence[int | None]):
    """Cost, processing time and reliability of task ``i`` on every pool instance.

    Only successors already in ``place`` are considered; crypto is assumed
    zero. Lease cost and VM reliability are taken over the processing time.
    """
    ntypes = len(model.types)
    succ = [(place[j], k) for j, k in model.out_edges[i] if place[j] is not None]
    size, bw, lrate, inst_prov = model.edge_size, model.bw, model.lrate, model.inst_prov

    def terms(p: int, skip: int):
        tt = tc = lr = 0.0
        for r2, k in succ:
            if r2 == skip:
                continue
            p2 = inst_prov[r2]
            c = size[k] / bw[p][p2]
            tt += c
            lr += lrate[p][p2] * c
            if p2 != p:
                tc += model.transfer_price(p, p2, k)
        return tt, tc, lr

    def score(ty: int, tt: float, tc: float, lr: float):
        pt = model.work[i] / model.type_cap[ty] + tt
        cost = model._lease_cost_fns[ty](pt) + tc
        rel = math.exp(-lr - model.type_rate[ty] * pt)
        return cost, pt, rel

    per_type = np.array([score(ty, *terms(model.type_prov[ty], -1)) for ty in range(ntypes)])
    inst_type = np.asarray(model.inst_type)
    table = per_type[inst_type]
    for r in {r2 for r2, _ in succ}:
        ty = model.inst_type[r]
        table[r] = score(ty, *terms(model.type_prov[ty], r))
    return table[:, 0], table[:, 1], table[:, 2]


def _list_allocate(model: ScheduleModel, weights: MetricWeights, distinct: bool) -> dict[str, int]:
    place: list[int | None] = [None] * len(model.order)
    prev_level, taken = None, set()
    for tid in lbs_order(model):
        i = model.pos[tid]
        level = model.levels[tid]
        if level != prev_level:
            taken = set()
        cost, pt, rel = placement_scores(model, i, place)
        metric = combined_metric(cost, pt, rel, weights)
        for r in np.argsort(metric, kind="stable"):
            r = int(r)
            if not distinct or r not in taken:
                place[i] = r
                taken.add(r)
                break
        else:
            raise PoolExhaustedError(f"no free instance left for task {tid!r} at level {level}")
        prev_level = level
    return {t: place[model.pos[t]] for t in model.order}


def lbs_allocate(model: ScheduleModel, weights: MetricWeights = LBS_WEIGHTS) -> dict[str, int]:
    """List-based allocation, successors first; tasks of one level get distinct instances."""
    return _list_allocate(model, weights, distinct=True)


def baseline_greedy_cost(model: ScheduleModel) -> dict[str, int]:
    """Same task order as LBS, cheapest instance (lease + transfer) per task, no distinctness."""
    return _list_allocate(model, MetricWeights(1.0, 0.0, 0.0), distinct=False)


def baseline_random(w: Workflow, pool: Sequence[VmInstance], seed: int) -> dict[str, int]:
    rng = np.random.default_rng(seed)
    real = [t.id for t in w.real_tasks]
    picks = rng.integers(0, len(pool), size=len(real))
    return {t: int(r) for t, r in zip(real, picks)}


# -- local search ---------------------------------------------------------

class CipherOracle:
    """DP cipher assignments keyed by the set of cross-instance edges, memoized.

    In ``capacity`` crypto mode the key also records the VM capacities at
    both ends, since those change the crypto times.
    """

    def __init__(self, model: ScheduleModel, cons: SecurityConstraints):
        self.model, self.cons = model, cons
        em = model.workflow.edge_map
        universe = [
            CryptoEdge(key, em[key].sec_weight, em[key].vuln_cap, tuple(2 * b for b in model.crypto_base[k]))
            for k, key in enumerate(model.edge_keys)
        ]
        self.solver = DpSolver(universe, model.table, cons)
        self._cache: dict[tuple, list[int] | None] = {}

    def levels(self, place: Sequence[int]) -> list[int] | None:
        m = self.model
        ccap, itype, pos = m.crypto_cap, m.inst_type, m.pos
        cross = []
        for k, (a, b) in enumerate(m.edge_keys):
            ra, rb = place[pos[a]], place[pos[b]]
            if ra != rb:
                cross.append((k, ccap[itype[ra]], ccap[itype[rb]]))
        key = tuple(cross)
        if key in self._cache:
            return self._cache[key]
        times = [tuple(b / ca + b / cb for b in m.crypto_base[k]) for k, ca, cb in cross]
        try:
            assignment, _ = self.solver.solve([k for k, _, _ in cross], times)
        except InfeasibleError:
            out = None
        else:
            out = [-1] * len(m.edge_keys)
            for k, _, _ in cross:
                out[k] = m.level_pos[assignment.choices[m.edge_keys[k]]]
        self._cache[key] = out
        return out


def _frozen_levels(model: ScheduleModel, incumbent: list[int], place: Sequence[int]) -> list[int]:
    # new cross edges take the least vulnerable cipher, which never breaks the budget
    safest = min(range(len(model.table.ciphers)), key=lambda i: (vulnerability_of(model.table.ciphers[i]), i))
    pos = model.pos
    out = []
    for k, (a, b) in enumerate(model.edge_keys):
        if place[pos[a]] == place[pos[b]]:
            out.append(-1)
        else:
            out.append(incumbent[k] if incumbent[k] >= 0 else safest)
    return out


def _candidates(model: ScheduleModel, place: Sequence[int], i: int) -> list[int]:
    """Instances worth trying for task ``i``.

    Every instance hosting another task, the incumbent, and the lowest-index
    idle copy of each VM type. Idle copies of one type yield identical
    schedules, so trying one of them is equivalent to trying all.
    """
    busy = {r for j, r in enumerate(place) if j != i}
    cands = set(busy)
    cands.add(place[i])
    seen_types = set()
    for r, ty in enumerate(model.inst_type):
        if r not in busy and ty not in seen_types:
            seen_types.add(ty)
            cands.add(r)
    return sorted(cands)


def local_search(
    model: ScheduleModel,
    mapping: Mapping[str, int],
    cons: SecurityConstraints,
    config: SchedulerConfig = SchedulerConfig(),
    trace: list | None = None,
) -> dict[str, int]:
    """Iteratively move each task (by decreasing rank) to the instance minimizing the
    weighted, min-max normalized (cost, makespan, unreliability) of the whole schedule.

    Ties keep the incumbent. Stops after ``config.num_iter`` rounds or a
    round without moves. ``trace`` receives one dict per decision.
    """
    w = config.ls_weights
    place = model.placement_list(mapping)
    oracle = CipherOracle(model, cons)
    order = sorted(model.order, key=lambda t: (-model.ranks[t], t))
    for itr in range(config.num_iter):
        changed = False
        for tid in order:
            i = model.pos[tid]
            incumbent = place[i]
            frozen = oracle.levels(place) if config.frozen_ciphers else None
            rows = []
            for r in _candidates(model, place, i):
                place[i] = r
                if config.frozen_ciphers:
                    levels = _frozen_levels(model, frozen, place) if frozen is not None else None
                else:
                    levels = oracle.levels(place)
                if levels is None:
                    continue
                rows.append((r, *model.simulate(place, levels)))
            place[i] = incumbent
            if not rows:
                continue
            cand = np.array([row[0] for row in rows])
            metric = combined_metric([row[2] for row in rows], [row[1] for row in rows], [row[3] for row in rows], w)
            best = metric.min()
            at_inc = np.flatnonzero(cand == incumbent)
            if at_inc.size and metric[at_inc[0]] == best:
                choice = incumbent
            else:
                choice = int(cand[np.flatnonzero(metric == best)[0]])
            if trace is not None:
                trace.append(
                    {
                        "iteration": itr,
                        "task": tid,
                        "incumbent": incumbent,
                        "chosen": choice,
                        "incumbent_metric": float(metric[at_inc[0]]) if at_inc.size else math.inf,
                        "chosen_metric": float(best),
                    }
                )
            if choice != incumbent:
                place[i] = choice
                changed = True
        if not changed:
            break
    return {t: place[model.pos[t]] for t in model.order}


# -- pipeline -------------------------------------------------------------

ALLOCATORS = ("lbs", "greedy", "random")


def allocate(model: ScheduleModel, allocator: str, config: SchedulerConfig) -> dict[str, int]:
    if allocator == "lbs":
        return lbs_allocate(model, config.lbs_weights)
    if allocator == "greedy":
        return baseline_greedy_cost(model)
    if allocator == "random":
        return baseline_random(model.workflow, model.pool, config.seed)
    raise ValueError(f"unknown allocator {allocator!r}")


def run_pipeline(
    w: Workflow,
    sys: CloudSystem,
    table: CipherTable,
    cons: SecurityConstraints,
    config: SchedulerConfig = SchedulerConfig(),
    use_ls: bool = False,
    allocator: str = "lbs",
) -> Schedule:
    """Reduced pool -> allocation -> optional local search -> DP ciphers -> evaluation."""
    w = augment(w)
    pool = build_resource_pool(sys, w)
    model = ScheduleModel(w, sys, pool, table)
    mapping = allocate(model, allocator, config)
    if use_ls:
        mapping = local_search(model, mapping, cons, config)
    ciphers = assign_ciphers_dp(w, sys, pool, mapping, table, cons)
    return model.evaluate(mapping, ciphers)
