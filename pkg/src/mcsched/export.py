"""Self-contained JSON export of a schedule, re-loadable for a standalone audit."""

from __future__ import annotations

import json
import os
from dataclasses import replace
from pathlib import Path

from .cloud import build_resource_pool, cloud_from_dict, cloud_to_dict
from .errors import IngestionError
from .evaluate import Schedule, TaskTiming
from .ingest import from_native, to_native
from .security import CipherAssignment, CipherTable, SecurityConstraints

FORMAT = "mcsched-schedule/1"


def schedule_to_dict(s: Schedule, cons: SecurityConstraints | None = None) -> dict:
    sys = s.system
    doc: dict = {
        "format": FORMAT,
        "objectives": {
            "makespan": s.makespan,
            "cost": s.cost,
            "reliability": s.reliability,
            "lease_cost": s.lease_cost,
            "transfer_cost": s.transfer_cost,
        },
        "leases": [
            {
                "instance": r,
                "type": sys.vm_types[s.pool[r].type_index].name,
                "provider": sys.vm_types[s.pool[r].type_index].provider,
                "start": s.pool[r].lease_start,
                "finish": s.pool[r].lease_finish,
            }
            for r in s.lease_order
        ],
        "tasks": [
            {
                "task": t.task,
                "instance": t.instance,
                "type": None if t.instance is None else sys.vm_types[s.pool[t.instance].type_index].name,
                "start": t.start,
                "finish": t.finish,
                "dec": t.dec,
                "exec": t.exec,
                "enc": t.enc,
                "transfer": t.transfer,
            }
            for t in s.timings.values()
        ],
        "ciphers": [{"src": a, "dst": b, "level": lv} for (a, b), lv in s.ciphers.choices.items()],
        "cipher_time": s.ciphers.total_time,
        "constraints": None if cons is None else {"system_cap": cons.system_cap, "scale_digits": cons.scale_digits},
        "workflow": to_native(s.workflow),
        "cloud": cloud_to_dict(sys),
        "cipher_table": {
            "block_size_bits": s.table.block_size_bits,
            "capacity_mode": s.table.capacity_mode,
            "rows": s.table.to_rows(),
        },
    }
    return doc


def schedule_from_dict(doc: dict) -> tuple[Schedule, SecurityConstraints | None]:
    """Rebuild a schedule exactly as exported; nothing is re-evaluated."""
    if doc.get("format") != FORMAT:
        raise IngestionError(f"unsupported schedule format {doc.get('format')!r}")
    try:
        w = from_native(doc["workflow"], "<schedule>")
        sys = cloud_from_dict(doc["cloud"])
        tdoc = doc["cipher_table"]
        table = replace(
            CipherTable.from_rows(tdoc["rows"], tdoc.get("capacity_mode", "normalized")),
            block_size_bits=int(tdoc.get("block_size_bits", 128)),
        )
        pool = list(build_resource_pool(sys, w))
        lease_order = []
        for row in doc["leases"]:
            r = int(row["instance"])
            if not 0 <= r < len(pool) or sys.vm_types[pool[r].type_index].name != row["type"]:
                raise IngestionError(f"lease row for instance {r} does not match the rebuilt pool")
            pool[r] = replace(pool[r], lease_start=float(row["start"]), lease_finish=float(row["finish"]))
            lease_order.append(r)
        timings, mapping = {}, {}
        for row in doc["tasks"]:
            inst = None if row["instance"] is None else int(row["instance"])
            timings[row["task"]] = TaskTiming(
                row["task"], inst, float(row["start"]), float(row["finish"]),
                float(row["dec"]), float(row["exec"]), float(row["enc"]), float(row["transfer"]),
            )
            if inst is not None:
                mapping[row["task"]] = inst
        ciphers = CipherAssignment(
            {(c["src"], c["dst"]): int(c["level"]) for c in doc["ciphers"]}, float(doc.get("cipher_time", 0.0))
        )
        obj = doc["objectives"]
        cdoc = doc.get("constraints")
        cons = None if cdoc is None else SecurityConstraints(float(cdoc["system_cap"]), int(cdoc.get("scale_digits", 1)))
        s = Schedule(
            workflow=w,
            system=sys,
            table=table,
            pool=tuple(pool),
            mapping=mapping,
            ciphers=ciphers,
            timings=timings,
            makespan=float(obj["makespan"]),
            cost=float(obj["cost"]),
            reliability=float(obj["reliability"]),
            lease_cost=float(obj.get("lease_cost", 0.0)),
            transfer_cost=float(obj.get("transfer_cost", 0.0)),
            lease_order=tuple(lease_order),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, IngestionError):
            raise
        raise IngestionError(f"malformed schedule document ({exc!r})") from None
    return s, cons


def save_schedule(s: Schedule, path: str | os.PathLike, cons: SecurityConstraints | None = None) -> None:
    Path(path).write_text(json.dumps(schedule_to_dict(s, cons), indent=2) + "\n")


def load_schedule(path: str | os.PathLike) -> tuple[Schedule, SecurityConstraints | None]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return schedule_from_dict(doc)
