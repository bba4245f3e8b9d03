"""Reading and writing workflow files.

Two formats are understood:

* ``native-json``: ``{"tasks": [{"id", "work_mi"}], "edges": [{"src", "dst",
  "size_mb", "sec_weight"?, "vuln_cap"?}]}``
* ``dax-xml``: the Pegasus DAX subset ``<job id= runtime=>`` with nested
  ``<uses file= link= size=>``. Edges come from producer/consumer file
  relationships; workflow-level inputs must be declared with a top-level
  ``<filename file= link="input">`` (or ``<file name=>``) element.
"""

from __future__ import annotations

import json
import os
import xml.etree.ElementTree as ET
from collections import defaultdict
from pathlib import Path

from .errors import IngestionError, WorkflowError
from .workflow import DataEdge, Task, Workflow

FORMATS = ("native-json", "dax-xml")
BYTES_TO_MEGABITS = 8 / 1e6


def parse_workflow(path: str | os.PathLike, format: str | None = None, reference_mips: float = 1.0) -> Workflow:
    """Load an un-augmented workflow from ``path``.

    ``format`` is inferred from the suffix when omitted (``.json`` or
    ``.xml``/``.dax``). DAX job runtimes are converted to work with
    ``work = runtime * reference_mips``.
    """
    path = Path(path)
    if format is None:
        format = "native-json" if path.suffix.lower() == ".json" else "dax-xml"
    aliases = {"json": "native-json", "dax": "dax-xml", "xml": "dax-xml"}
    format = aliases.get(format, format)
    if format not in FORMATS:
        raise IngestionError(f"{path}: unknown workflow format {format!r}")
    try:
        text = path.read_text()
    except OSError as exc:
        raise IngestionError(f"{path}: {exc.strerror}") from None
    if format == "native-json":
        return loads_native(text, source=str(path))
    return loads_dax(text, source=str(path), reference_mips=reference_mips)


# -- native JSON ----------------------------------------------------------

def to_native(w: Workflow) -> dict:
    doc: dict = {"name": w.name, "tasks": [], "edges": []}
    for t in w.tasks:
        row: dict = {"id": t.id, "work_mi": t.work}
        if t.is_virtual:
            row["virtual"] = True
        doc["tasks"].append(row)
    for e in w.edges:
        row = {"src": e.src, "dst": e.dst, "size_mb": e.size, "sec_weight": e.sec_weight}
        if e.vuln_cap is not None:
            row["vuln_cap"] = e.vuln_cap
        doc["edges"].append(row)
    if w.is_augmented:
        doc["entry"] = w.entry_id
        doc["exit"] = w.exit_id
    return doc


def from_native(doc: dict, source: str = "<native>") -> Workflow:
    if not isinstance(doc, dict) or "tasks" not in doc:
        raise IngestionError(f"{source}: missing 'tasks' array")
    try:
        tasks = [Task(str(t["id"]), float(t["work_mi"]), bool(t.get("virtual", False))) for t in doc["tasks"]]
        edges = []
        for e in doc.get("edges", []):
            cap = e.get("vuln_cap")
            edges.append(
                DataEdge(
                    str(e["src"]),
                    str(e["dst"]),
                    float(e["size_mb"]),
                    float(e.get("sec_weight", 1.0)),
                    None if cap is None else float(cap),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, WorkflowError):
            raise IngestionError(f"{source}: {exc}") from None
        raise IngestionError(f"{source}: malformed task or edge entry ({exc!r})") from None
    try:
        return Workflow(tuple(tasks), tuple(edges), doc.get("entry"), doc.get("exit"), doc.get("name", Path(source).stem))
    except WorkflowError as exc:
        raise IngestionError(f"{source}: {exc}") from None


def loads_native(text: str, source: str = "<native>") -> Workflow:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return from_native(doc, source)


def dumps_native(w: Workflow) -> str:
    return json.dumps(to_native(w), indent=2)


def save_native(w: Workflow, path: str | os.PathLike) -> None:
    Path(path).write_text(dumps_native(w) + "\n")


# -- DAX ------------------------------------------------------------------

def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def loads_dax(text: str, source: str = "<dax>", reference_mips: float = 1.0) -> Workflow:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise IngestionError(f"{source}:{line}:{col}: malformed XML") from None

    declared_inputs: set[str] = set()
    for el in root:
        if _local(el.tag) in ("filename", "file") and el.get("link", "input") == "input":
            declared_inputs.add(el.get("file") or el.get("name"))

    tasks: list[Task] = []
    seen: set[str] = set()
    producer: dict[str, str] = {}
    consumers: dict[str, list[str]] = defaultdict(list)
    sizes: dict[str, float] = {}
    for job in root:
        if _local(job.tag) != "job":
            continue
        jid = job.get("id")
        if jid is None:
            raise IngestionError(f"{source}: <job> without id")
        if jid in seen:
            raise IngestionError(f"{source}: duplicate job id {jid!r}")
        seen.add(jid)
        try:
            runtime = float(job.get("runtime", "0"))
        except ValueError:
            raise IngestionError(f"{source}: job {jid!r} has non-numeric runtime") from None
        if runtime < 0:
            raise IngestionError(f"{source}: job {jid!r} has negative runtime")
        tasks.append(Task(jid, runtime * reference_mips))
        for use in job:
            if _local(use.tag) != "uses":
                continue
            fname = use.get("file") or use.get("name")
            link = use.get("link")
            if fname is None or link not in ("input", "output"):
                raise IngestionError(f"{source}: job {jid!r} has a <uses> element without file/link")
            try:
                size = float(use.get("size", "0"))
            except ValueError:
                raise IngestionError(f"{source}: job {jid!r}, file {fname!r}: non-numeric size") from None
            sizes[fname] = max(sizes.get(fname, 0.0), size)
            if link == "output":
                if fname in producer and producer[fname] != jid:
                    raise IngestionError(f"{source}: file {fname!r} produced by both {producer[fname]!r} and {jid!r}")
                producer[fname] = jid
            else:
                consumers[fname].append(jid)

    volume: dict[tuple[str, str], float] = defaultdict(float)
    for fname, jobs in consumers.items():
        src = producer.get(fname)
        if src is None:
            if fname not in declared_inputs:
                raise IngestionError(f"{source}: job {jobs[0]!r} reads {fname!r}, which has no producer and is not declared")
            continue
        for dst in jobs:
            if dst != src:
                volume[(src, dst)] += sizes[fname] * BYTES_TO_MEGABITS
    edges = [DataEdge(s, d, size) for (s, d), size in volume.items()]
    try:
        return Workflow(tuple(tasks), tuple(edges), name=root.get("name", Path(source).stem))
    except WorkflowError as exc:
        raise IngestionError(f"{source}: {exc}") from None
