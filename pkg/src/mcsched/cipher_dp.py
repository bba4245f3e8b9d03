"""Time-optimal cipher assignment under vulnerability constraints.

Every edge whose endpoints run on different instances gets one cipher. The
objective is the summed encryption + decryption time; constraints are the
weighted system budget ``sum(W * V) <= UV_req`` and the per-edge caps
``V <= cap``. Weights and budget are integerized with ``10**scale_digits``
so the budget dimension of the DP is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numba
import numpy as np

from .cloud import CloudSystem, VmInstance
from .errors import InfeasibleError, ProblemTooLarge
from .security import CipherAssignment, CipherTable, SecurityConstraints, crypto_time, vulnerability_of
from .workflow import Workflow

BRUTE_FORCE_LIMIT = 12


@dataclass(frozen=True)
class CryptoEdge:
    """One cross-instance edge as seen by the assignment problem.

    ``times[i]`` is enc + dec seconds when cipher ``table.ciphers[i]`` is used.
    """

    key: tuple[str, str]
    weight: float
    cap: float | None
    times: tuple[float, ...]


@dataclass(frozen=True)
class ScaledBudget:
    scale: int
    budget: int
    contributions: tuple[tuple[int, ...], ...]
    admissible: tuple[tuple[bool, ...], ...]


@dataclass
class DpTable:
    """``times[h, b]``: least crypto time for the first ``h`` edges within scaled budget ``b``.

    ``choice[h, b]`` is the table index of the cipher picked for edge ``h``
    (row 0 is the empty prefix), or -1 where no assignment fits.
    """

    times: np.ndarray
    choice: np.ndarray


def crypto_edges(
    w: Workflow,
    sys: CloudSystem,
    pool: Sequence[VmInstance],
    mapping: Mapping[str, int],
    table: CipherTable,
) -> list[CryptoEdge]:
    """Cross-instance edges between real tasks, in canonical edge order."""
    out = []
    for e in w.edges:
        if e.src not in mapping or e.dst not in mapping:
            continue
        a, b = mapping[e.src], mapping[e.dst]
        if a == b:
            continue
        cap_a = sys.vm_types[pool[a].type_index].capacity
        cap_b = sys.vm_types[pool[b].type_index].capacity
        times = tuple(
            crypto_time(e.size, c, cap_a, False, table) + crypto_time(e.size, c, cap_b, False, table)
            for c in table.ciphers
        )
        out.append(CryptoEdge(e.key, e.sec_weight, e.vuln_cap, times))
    return out


def scale_problem(edges: Sequence[CryptoEdge], table: CipherTable, cons: SecurityConstraints) -> ScaledBudget:
    scale = 10**cons.scale_digits
    budget = math.floor(round(cons.system_cap * scale, 6))
    contributions, admissible = [], []
    for e in edges:
        qw = round(e.weight * scale)
        contributions.append(tuple(round(qw * vulnerability_of(c)) for c in table.ciphers))
        admissible.append(tuple(e.cap is None or vulnerability_of(c) <= e.cap for c in table.ciphers))
    return ScaledBudget(scale, budget, tuple(contributions), tuple(admissible))


def _check_feasible(edges: Sequence[CryptoEdge], sb: ScaledBudget) -> None:
    if sb.budget < 0:
        raise InfeasibleError(f"system budget: scaled cap {sb.budget} is negative")
    floor_total = 0
    for e, contrib, ok in zip(edges, sb.contributions, sb.admissible):
        allowed = [k for k, a in zip(contrib, ok) if a]
        if not allowed:
            raise InfeasibleError(f"edge {e.key}: no cipher with vulnerability <= cap {e.cap}")
        floor_total += min(allowed)
    if floor_total > sb.budget:
        raise InfeasibleError(
            f"system budget: least achievable weighted vulnerability {floor_total / sb.scale} "
            f"exceeds cap {sb.budget / sb.scale}"
        )


@numba.njit(cache=True)
def _fill_rows(times, contrib, order, reach, start, T, CH):  # pragma: no cover - compiled
    """Fill DP rows ``start+1 ..`` in place.

    Row ``h`` is only stored up to ``reach[h]``, the largest usable total of
    the first ``h`` edges; beyond it the row is constant.
    """
    for h in range(start + 1, times.shape[0] + 1):
        lim = reach[h - 1]
        top = reach[h]
        prev, row, ch = T[h - 1], T[h], CH[h]
        for b in range(top + 1):
            row[b] = np.inf
            ch[b] = -1
        for j in range(order.shape[0]):
            ci = order[j]
            k = contrib[h - 1, ci]
            if k < 0 or k > top:
                continue
            t = times[h - 1, ci]
            hi = min(top, lim + k)
            # strict <: equal times keep the less vulnerable cipher
            for b in range(k, hi + 1):
                v = prev[b - k] + t
                if v < row[b]:
                    row[b] = v
                    ch[b] = ci
            v = prev[lim] + t
            for b in range(hi + 1, top + 1):
                if v < row[b]:
                    row[b] = v
                    ch[b] = ci


REUSE_CELL_LIMIT = 40_000_000


class DpSolver:
    """Exact DP over any subset of a fixed edge universe.

    The budget clip and the gcd reduction are fixed over the whole
    universe, so consecutive solves sharing a leading run of edges reuse
    the stored rows. Results are identical to solving each subset alone:
    every DP row is a step function of the real budget.
    """

    def __init__(self, universe: Sequence[CryptoEdge], table: CipherTable, cons: SecurityConstraints):
        self.universe = list(universe)
        self.table = table
        self.sb = scale_problem(self.universe, table, cons)
        nc = len(table.ciphers)
        if nc > 127:
            raise ValueError("cipher tables are limited to 127 entries")
        contrib = np.full((len(self.universe), nc), -1, dtype=np.int64)
        g = 0
        for i, (c, ok) in enumerate(zip(self.sb.contributions, self.sb.admissible)):
            for ci in range(nc):
                if ok[ci]:
                    contrib[i, ci] = c[ci]
                    g = math.gcd(g, c[ci])
        self.unit = g or 1
        self.contrib = np.where(contrib >= 0, contrib // self.unit, -1)
        ceiling = int(self.contrib.max(axis=1).clip(min=0).sum()) if len(self.universe) else 0
        self.B = -1 if self.sb.budget < 0 else min(self.sb.budget // self.unit, ceiling)
        # equal-time ties go to the less vulnerable cipher
        self.order = np.array(
            sorted(range(nc), key=lambda i: (vulnerability_of(table.ciphers[i]), i)), dtype=np.int64
        )
        self.reuse = (len(self.universe) + 1) * (self.B + 1) <= REUSE_CELL_LIMIT
        self._rows_key: list = []
        self._T = self._CH = None

    def _check(self, idx: Sequence[int]) -> None:
        sb = self.sb
        sub = [self.universe[i] for i in idx]
        _check_feasible(
            sub,
            ScaledBudget(sb.scale, sb.budget, tuple(sb.contributions[i] for i in idx), tuple(sb.admissible[i] for i in idx)),
        )

    def solve(
        self, idx: Sequence[int], times: Sequence[Sequence[float]] | None = None, return_table: bool = False
    ) -> tuple[CipherAssignment, DpTable | None]:
        """Solve for universe edges ``idx`` (ascending); ``times`` overrides their per-cipher times."""
        self._check(idx)
        if times is None:
            times = [self.universe[i].times for i in idx]
        H, B = len(idx), self.B
        contrib = self.contrib[list(idx)] if H else np.zeros((0, len(self.table.ciphers)), np.int64)
        reach = np.zeros(H + 1, dtype=np.int64)
        if H:
            reach[1:] = np.minimum(np.cumsum(contrib.max(axis=1)), B)
        key = [(i, tuple(t)) for i, t in zip(idx, times)]

        if self.reuse and self._T is not None and self._T.shape[0] >= H + 1:
            T, CH = self._T, self._CH
            start = 0
            for a, b in zip(key, self._rows_key):
                if a != b:
                    break
                start += 1
        else:
            rows = len(self.universe) + 1 if self.reuse else H + 1
            T = np.empty((rows, B + 1))
            CH = np.empty((rows, B + 1), dtype=np.int8)
            T[0, 0], CH[0, 0] = 0.0, -1
            start = 0
            if self.reuse:
                self._T, self._CH = T, CH
        if H:
            _fill_rows(np.asarray(times, dtype=float), contrib, self.order, reach, start, T, CH)
        if self.reuse:
            self._rows_key = key

        choices: dict[tuple[str, str], int] = {}
        b = B
        for h in range(H, 0, -1):
            b = min(b, int(reach[h]))
            ci = int(CH[h, b])
            choices[self.universe[idx[h - 1]].key] = self.table.ciphers[ci].level
            b -= int(contrib[h - 1, ci])
        total = float(T[H, min(B, int(reach[H]))])
        dp = None
        if return_table:
            cols = np.arange(self.sb.budget + 1) // self.unit
            full_t = np.empty((H + 1, cols.size))
            full_c = np.empty((H + 1, cols.size), dtype=np.int16)
            for h in range(H + 1):
                at = np.minimum(cols, reach[h])
                full_t[h], full_c[h] = T[h, at], CH[h, at]
            dp = DpTable(full_t, full_c)
        return CipherAssignment(dict(reversed(choices.items())), total), dp


def solve_dp(
    edges: Sequence[CryptoEdge],
    table: CipherTable,
    cons: SecurityConstraints,
    return_table: bool = False,
) -> tuple[CipherAssignment, DpTable | None]:
    """Minimum total crypto time subject to the system budget and per-edge caps.

    Raises :class:`InfeasibleError` when no assignment fits.
    """
    solver = DpSolver(edges, table, cons)
    solver.reuse = False
    return solver.solve(range(len(edges)), return_table=return_table)


def solve_bruteforce(edges: Sequence[CryptoEdge], table: CipherTable, cons: SecurityConstraints) -> CipherAssignment:
    """Enumerate every cipher combination; ties go to the lexicographically smallest level vector.

    The trailing edges are enumerated as a numpy grid and the leading ones
    in a Python loop; sums run edge by edge either way, so the totals are
    the same floats a plain loop would produce.
    """
    n = len(edges)
    if n > BRUTE_FORCE_LIMIT:
        raise ProblemTooLarge(f"{n} cross-instance edges; exhaustive search is capped at {BRUTE_FORCE_LIMIT}")
    sb = scale_problem(edges, table, cons)
    by_level = sorted(range(len(table.ciphers)), key=lambda i: table.ciphers[i].level)
    nc = len(by_level)
    times = np.array([[e.times[ci] for ci in by_level] for e in edges]).reshape(n, nc)
    used = np.array([[sb.contributions[h][ci] for ci in by_level] for h in range(n)], dtype=np.int64).reshape(n, nc)
    ok = np.array([[sb.admissible[h][ci] for ci in by_level] for h in range(n)], dtype=bool).reshape(n, nc)
    head = max(0, n - 8)
    best, best_time = None, math.inf
    for prefix in itertools.product(range(nc), repeat=head):
        total = np.zeros(1)
        spent = np.zeros(1, dtype=np.int64)
        fits = np.ones(1, dtype=bool)
        for h, k in enumerate(prefix):
            total += times[h, k]
            spent += used[h, k]
            fits &= ok[h, k]
        if not fits[0]:
            continue
        for h in range(head, n):
            total = (total[:, None] + times[h]).ravel()
            spent = (spent[:, None] + used[h]).ravel()
            fits = (fits[:, None] & ok[h]).ravel()
        cand = np.where(fits & (spent <= sb.budget), total, np.inf)
        j = int(np.argmin(cand))
        if cand[j] < best_time:
            best_time = float(cand[j])
            best = prefix + tuple(int(d) for d in np.unravel_index(j, (nc,) * (n - head)))
    if best is None:
        raise InfeasibleError("no cipher combination satisfies the constraints")
    choices = {e.key: table.ciphers[by_level[k]].level for e, k in zip(edges, best)}
    return CipherAssignment(choices, best_time, nc**n)


def assign_ciphers_dp(
    w: Workflow,
    sys: CloudSystem,
    pool: Sequence[VmInstance],
    mapping: Mapping[str, int],
    table: CipherTable,
    cons: SecurityConstraints,
) -> CipherAssignment:
    """Minimum-crypto-time cipher per cross-instance edge for a fixed placement."""
    assignment, _ = solve_dp(crypto_edges(w, sys, pool, mapping, table), table, cons)
    return assignment


def assign_ciphers_bruteforce(
    w: Workflow,
    sys: CloudSystem,
    pool: Sequence[VmInstance],
    mapping: Mapping[str, int],
    table: CipherTable,
    cons: SecurityConstraints,
) -> CipherAssignment:
    return solve_bruteforce(crypto_edges(w, sys, pool, mapping, table), table, cons)
