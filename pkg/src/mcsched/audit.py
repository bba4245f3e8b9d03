"""Independent post-hoc checks of a finished schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .cloud import comm_time, lease_cost, link_reliability, placement_of, transfer_cost, vm_reliability
from .evaluate import Schedule
from .security import SecurityConstraints, system_vulnerability, vulnerability_of

VULN_TOL = 1e-9
TIME_TOL = 1e-9
REL_TOL = 1e-12


@dataclass(frozen=True)
class AuditCheck:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass
class AuditReport:
    checks: list[AuditCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[AuditCheck]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> AuditCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        return [
            f"{'PASS' if c.passed else 'FAIL'} {c.name} residual={c.residual:.6g}" + (f" ({c.detail})" if c.detail else "")
            for c in self.checks
        ]


def _rel_diff(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def cross_edges(s: Schedule) -> list[tuple[str, str]]:
    m = s.mapping
    return [e.key for e in s.workflow.edges if e.src in m and e.dst in m and m[e.src] != m[e.dst]]


def validate_schedule(s: Schedule, cons: SecurityConstraints, rel_tol: float = REL_TOL) -> AuditReport:
    """Recompute security, timing, cost and reliability from scratch and compare."""
    w, sys, table = s.workflow, s.system, s.table
    report = AuditReport()
    add = report.checks.append

    # mapping
    bad = [t.id for t in w.real_tasks if not 0 <= s.mapping.get(t.id, -1) < len(s.pool)]
    add(AuditCheck("mapping", not bad, float(len(bad)), ", ".join(bad[:5])))
    if bad:
        return report

    # security
    cross = cross_edges(s)
    missing = [k for k in cross if k not in s.ciphers.choices]
    unknown = [k for k, lv in s.ciphers.choices.items() if lv not in table.by_level]
    add(AuditCheck("cipher_coverage", not missing and not unknown, float(len(missing) + len(unknown)),
                   ", ".join(f"{a}->{b}" for a, b in (missing + unknown)[:5])))
    if unknown:
        return report
    vsys = system_vulnerability(w, s.ciphers, table)
    excess = vsys - cons.system_cap
    add(AuditCheck("system_vulnerability", excess <= VULN_TOL, max(0.0, excess), f"{vsys:.6g} vs cap {cons.system_cap:.6g}"))
    worst, where = 0.0, ""
    for key, level in s.ciphers.choices.items():
        cap = w.edge_map[key].vuln_cap
        if cap is not None:
            over = vulnerability_of(table.by_level[level]) - cap
            if over > worst:
                worst, where = over, f"{key[0]}->{key[1]}"
    add(AuditCheck("edge_caps", worst <= 0.0, worst, where))

    # timing
    tm = s.timings
    worst, where = 0.0, ""
    for t in tm.values():
        parts = (t.dec, t.exec, t.enc, t.transfer)
        gap = max(abs(t.finish - (t.start + t.processing)), -min(0.0, *parts), -min(0.0, t.start))
        if gap > worst:
            worst, where = gap, t.task
    add(AuditCheck("timing_decomposition", worst <= TIME_TOL * max(1.0, s.makespan), worst, where))
    worst, where = 0.0, ""
    for e in w.edges:
        late = tm[e.src].finish - tm[e.dst].start
        if late > worst:
            worst, where = late, f"{e.src}->{e.dst}"
    add(AuditCheck("precedence", worst <= TIME_TOL * max(1.0, s.makespan), worst, where))
    by_inst: dict[int, list] = {}
    for tid, r in s.mapping.items():
        by_inst.setdefault(r, []).append(tm[tid])
    worst, where = 0.0, ""
    for r, ts in by_inst.items():
        ts.sort(key=lambda t: (t.start, t.finish))
        for a, b in zip(ts, ts[1:]):
            if a.finish - b.start > worst:
                worst, where = a.finish - b.start, f"instance {r}: {a.task}/{b.task}"
    add(AuditCheck("instance_overlap", worst <= TIME_TOL * max(1.0, s.makespan), worst, where))
    fin = max((t.finish for t in tm.values()), default=0.0)
    exit_fin = tm[w.exit_id].finish if w.exit_id in tm else fin
    gap = max(abs(s.makespan - exit_fin), abs(s.makespan - fin))
    add(AuditCheck("makespan", gap <= TIME_TOL * max(1.0, s.makespan), gap))

    # leases: one interval per used instance, covering its tasks
    used = set(s.mapping.values())
    leased = set(s.lease_order)
    worst, where = 0.0, ""
    for r in used | leased:
        inst = s.pool[r]
        ts = by_inst.get(r, [])
        if not ts or r not in leased or inst.lease_start is None or inst.lease_finish is None:
            worst, where = math.inf, f"instance {r}"
            continue
        boot = sys.vm_types[inst.type_index].boot_time
        gap = max(
            abs(inst.lease_finish - max(t.finish for t in ts)),
            abs(inst.lease_start - (min(t.start for t in ts) - boot)),
        )
        if gap > worst:
            worst, where = gap, f"instance {r}"
    add(AuditCheck("leases", worst <= TIME_TOL * max(1.0, s.makespan), worst, where))

    # cost: lease charges + egress, recomputed through the pricing primitives
    lease = 0.0
    rel = 1.0
    for r in s.lease_order:
        inst = s.pool[r]
        d = inst.lease_finish - inst.lease_start
        vt = sys.vm_types[inst.type_index]
        lease += lease_cost(sys, vt, d)
        rel *= vm_reliability(vt, d)
    egress = 0.0
    for key in cross:
        e = w.edge_map[key]
        a = placement_of(sys, s.pool, s.mapping[e.src])
        b = placement_of(sys, s.pool, s.mapping[e.dst])
        egress += transfer_cost(sys, e.size, a, b)
        rel *= link_reliability(sys, a, b, comm_time(sys, e.size, a, b))
    cost = lease + egress
    d_cost = _rel_diff(cost, s.cost) if cost or s.cost else 0.0
    add(AuditCheck("cost", d_cost <= rel_tol, d_cost, f"recomputed {cost:.12g} vs {s.cost:.12g}"))
    d_rel = _rel_diff(rel, s.reliability)
    ok = d_rel <= rel_tol and 0.0 < s.reliability <= 1.0
    add(AuditCheck("reliability", ok, d_rel, f"recomputed {rel:.15g} vs {s.reliability:.15g}"))
    return report
