"""Desk-scale Epigenomics-like and Cybershake-like workflow generators.

Shapes follow the published workflow structures; runtimes (seconds on a
reference VM) and file sizes (MB) are representative values jittered by a
seeded factor in [0.75, 1.25].
"""

from __future__ import annotations

import re

import numpy as np

from .workflow import DataEdge, Task, Workflow

REFERENCE_MIPS = 8.0
MB_TO_MEGABITS = 8.0

EPIGENOMICS_RUNTIME = {
    "fastqSplit": 34.0,
    "filterContams": 2.5,
    "sol2sanger": 0.6,
    "fastq2bfq": 1.4,
    "map": 200.0,
    "mapMerge": 11.0,
    "maqIndex": 43.0,
    "pileup": 55.0,
}
CYBERSHAKE_RUNTIME = {
    "ExtractSGT": 110.0,
    "SeismogramSynthesis": 40.0,
    "PeakValCalc": 1.0,
    "ZipSeis": 1.0,
    "ZipPSA": 1.0,
}


class _Builder:
    def __init__(self, name: str, seed: int, reference_mips: float):
        self.rng = np.random.default_rng(seed)
        self.name = name
        self.mips = reference_mips
        self.tasks: list[Task] = []
        self.edges: list[DataEdge] = []

    def jitter(self) -> float:
        return float(self.rng.uniform(0.75, 1.25))

    def task(self, tid: str, runtime: float) -> str:
        self.tasks.append(Task(tid, round(runtime * self.jitter() * self.mips, 6)))
        return tid

    def edge(self, src: str, dst: str, size_mb: float) -> None:
        self.edges.append(DataEdge(src, dst, round(size_mb * self.jitter() * MB_TO_MEGABITS, 6)))

    def build(self) -> Workflow:
        return Workflow(tuple(self.tasks), tuple(self.edges), name=self.name)


def epigenomics(n: int = 24, seed: int = 0, reference_mips: float = REFERENCE_MIPS) -> Workflow:
    """Split -> four-stage lanes -> merge -> index -> pileup.

    ``n = s + 4k + 3`` with ``k = (n - 4) // 4`` lanes and ``s = 1 + (n - 4) % 4``
    split tasks; lanes are dealt round-robin across the splits.
    """
    lanes, extra = divmod(n - 4, 4)
    if n < 8 or lanes < 1 + extra:
        raise ValueError(f"epigenomics size {n} too small for its split count")
    b = _Builder(f"epigenomics-{n}", seed, reference_mips)
    rt = EPIGENOMICS_RUNTIME
    if extra:
        splits = [b.task(f"fastqSplit_{j}", rt["fastqSplit"]) for j in range(1 + extra)]
    else:
        splits = [b.task("fastqSplit", rt["fastqSplit"])]
    maps = []
    for i in range(lanes):
        f = b.task(f"filterContams_{i:02d}", rt["filterContams"])
        s = b.task(f"sol2sanger_{i:02d}", rt["sol2sanger"])
        q = b.task(f"fastq2bfq_{i:02d}", rt["fastq2bfq"])
        m = b.task(f"map_{i:02d}", rt["map"])
        b.edge(splits[i % len(splits)], f, 20.0)
        b.edge(f, s, 20.0)
        b.edge(s, q, 10.0)
        b.edge(q, m, 5.0)
        maps.append(m)
    merge = b.task("mapMerge", rt["mapMerge"])
    for m in maps:
        b.edge(m, merge, 2.0)
    index = b.task("maqIndex", rt["maqIndex"])
    b.edge(merge, index, 50.0)
    pileup = b.task("pileup", rt["pileup"])
    b.edge(index, pileup, 50.0)
    return b.build()


def cybershake(n: int = 30, seed: int = 0, reference_mips: float = REFERENCE_MIPS) -> Workflow:
    """Two SGT extractions fanning out to ``m`` seismogram/peak pairs, zipped at the end; n = 2m + 4."""
    if n < 6 or n % 2:
        raise ValueError(f"cybershake size must be 2m + 4 with m >= 1, got {n}")
    m = (n - 4) // 2
    b = _Builder(f"cybershake-{n}", seed, reference_mips)
    rt = CYBERSHAKE_RUNTIME
    sgts = [b.task(f"ExtractSGT_{i}", rt["ExtractSGT"]) for i in range(2)]
    seis, peaks = [], []
    for i in range(m):
        s = b.task(f"SeismogramSynthesis_{i:02d}", rt["SeismogramSynthesis"])
        b.edge(sgts[i % 2], s, 40.0)
        p = b.task(f"PeakValCalc_{i:02d}", rt["PeakValCalc"])
        b.edge(s, p, 0.02)
        seis.append(s)
        peaks.append(p)
    zs = b.task("ZipSeis", rt["ZipSeis"])
    zp = b.task("ZipPSA", rt["ZipPSA"])
    for s in seis:
        b.edge(s, zs, 0.02)
    for p in peaks:
        b.edge(p, zp, 0.001)
    return b.build()


FAMILIES = {"epigenomics": epigenomics, "cybershake": cybershake}
_NAME = re.compile(r"^(epigenomics|cybershake)-(\d+)$")


def is_bundled(name: str) -> bool:
    return bool(_NAME.match(name))


def generate(name: str, seed: int = 0) -> Workflow:
    """Build a bundled workflow from a name such as ``epigenomics-24`` or ``cybershake-100``."""
    m = _NAME.match(name)
    if not m:
        raise ValueError(f"unknown bundled workflow {name!r}; expected e.g. 'epigenomics-24'")
    return FAMILIES[m.group(1)](int(m.group(2)), seed)
