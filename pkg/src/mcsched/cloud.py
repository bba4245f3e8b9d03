"""Multi-cloud resource, network, pricing and failure model.

Capacities are in MIPS, bandwidths in Mbps, prices in USD, failure rates are
Poisson rates per second.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .workflow import Task, Workflow, max_parallel_set

SCHEMES = ("per-minute", "per-hour", "hybrid")
MINUTE = 60.0
HOUR = 3600.0
HYBRID_BASE_SECONDS = 600.0
MEGABITS_PER_GB = 8000.0
GB_PER_TB = 1000.0

# ceil() guard against representation noise, e.g. 120.00000000000001 s
_CEIL_DIGITS = 9


@dataclass(frozen=True)
class Provider:
    id: str
    scheme: str
    internal_bw: float
    link_fail_rate: float = 0.0
    center_transfer_price: float = 0.0
    brand: str = ""

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"provider {self.id}: unknown billing scheme {self.scheme!r}")
        if self.internal_bw <= 0:
            raise ValueError(f"provider {self.id}: internal bandwidth must be positive")
        if self.link_fail_rate < 0 or self.center_transfer_price < 0:
            raise ValueError(f"provider {self.id}: negative rate or price")


@dataclass(frozen=True)
class VmType:
    name: str
    provider: str
    capacity: float
    price: float
    boot_time: float = 97.0
    fail_rate: float = 0.0
    hybrid_base_price: float | None = None

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError(f"vm type {self.name}: capacity must be positive")
        if self.price < 0 or self.boot_time < 0 or self.fail_rate < 0:
            raise ValueError(f"vm type {self.name}: negative price, boot time or failure rate")


@dataclass(frozen=True)
class InterCloudTariff:
    """Link between two providers, directional (``src`` sends, ``dst`` receives).

    ``tiers`` are ``(upper_threshold_gb, usd_per_gb)`` rows; thresholds are
    cumulative volumes and the last row may use ``math.inf``.
    """

    src: str
    dst: str
    bandwidth: float
    link_fail_rate: float = 0.0
    tiers: tuple[tuple[float, float], ...] = ((math.inf, 0.0),)

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError(f"tariff {self.src}->{self.dst}: bandwidth must be positive")
        if self.link_fail_rate < 0:
            raise ValueError(f"tariff {self.src}->{self.dst}: negative failure rate")
        object.__setattr__(self, "tiers", tuple((float(a), float(b)) for a, b in self.tiers))
        bounds = [t for t, _ in self.tiers]
        if not bounds or any(b <= a for a, b in zip(bounds, bounds[1:])):
            raise ValueError(f"tariff {self.src}->{self.dst}: tier thresholds must be strictly increasing")
        if any(p < 0 for _, p in self.tiers):
            raise ValueError(f"tariff {self.src}->{self.dst}: negative tier price")

    def price(self, gigabytes: float) -> float:
        """Marginal tiered price of moving ``gigabytes`` over this link."""
        cost, lower = 0.0, 0.0
        for upper, rate in self.tiers:
            if gigabytes <= lower:
                break
            cost += (min(gigabytes, upper) - lower) * rate
            lower = upper
        if gigabytes > lower:
            cost += (gigabytes - lower) * self.tiers[-1][1]
        return cost


@dataclass(frozen=True)
class VmInstance:
    index: int
    type_index: int
    lease_start: float | None = None
    lease_finish: float | None = None

    @property
    def leased(self) -> bool:
        return self.lease_start is not None


@dataclass(frozen=True)
class Placement:
    """Where a task runs: pool instance index and its provider id."""

    instance: int
    provider: str


@dataclass(frozen=True)
class CloudSystem:
    providers: tuple[Provider, ...]
    vm_types: tuple[VmType, ...]
    tariffs: tuple[InterCloudTariff, ...]

    def __post_init__(self):
        object.__setattr__(self, "providers", tuple(self.providers))
        object.__setattr__(self, "vm_types", tuple(self.vm_types))
        object.__setattr__(self, "tariffs", tuple(self.tariffs))
        pmap = {p.id: p for p in self.providers}
        if len(pmap) != len(self.providers):
            raise ValueError("duplicate provider id")
        for t in self.vm_types:
            prov = pmap.get(t.provider)
            if prov is None:
                raise ValueError(f"vm type {t.name}: unknown provider {t.provider!r}")
            if (prov.scheme == "hybrid") != (t.hybrid_base_price is not None):
                raise ValueError(f"vm type {t.name}: hybrid base price must be set exactly for hybrid providers")
        pairs = {(t.src, t.dst) for t in self.tariffs}
        for a in pmap:
            for b in pmap:
                if a != b and (a, b) not in pairs and (b, a) not in pairs:
                    raise ValueError(f"no tariff between providers {a} and {b}")

    @cached_property
    def provider_map(self) -> dict[str, Provider]:
        return {p.id: p for p in self.providers}

    @cached_property
    def _tariff_map(self) -> dict[tuple[str, str], InterCloudTariff]:
        out = {}
        for t in self.tariffs:
            out.setdefault((t.dst, t.src), t)
        for t in self.tariffs:
            out[(t.src, t.dst)] = t
        return out

    def tariff(self, src: str, dst: str) -> InterCloudTariff:
        """Tariff for data sent from provider ``src`` to ``dst`` (falls back to the reverse entry)."""
        return self._tariff_map[(src, dst)]

    def scheme_of(self, t: VmType) -> str:
        return self.provider_map[t.provider].scheme

    def with_failure_rates(
        self,
        vm_rates: Sequence[float],
        provider_rates: Sequence[float],
        tariff_rates: Sequence[float],
    ) -> CloudSystem:
        return CloudSystem(
            tuple(replace(p, link_fail_rate=r) for p, r in zip(self.providers, provider_rates, strict=True)),
            tuple(replace(t, fail_rate=r) for t, r in zip(self.vm_types, vm_rates, strict=True)),
            tuple(replace(t, link_fail_rate=r) for t, r in zip(self.tariffs, tariff_rates, strict=True)),
        )

    def sample_failure_rates(self, rng: np.random.Generator, low: float = 1e-8, high: float = 1e-7) -> CloudSystem:
        """Redraw every failure rate uniformly in ``[low, high]``.

        Draw order is VM types, then providers, then tariffs, each in
        declaration order.
        """
        vm = rng.uniform(low, high, len(self.vm_types))
        prov = rng.uniform(low, high, len(self.providers))
        links = rng.uniform(low, high, len(self.tariffs))
        return self.with_failure_rates(vm.tolist(), prov.tolist(), links.tolist())


# -- timing ---------------------------------------------------------------

def exec_time(task: Task, t: VmType) -> float:
    return task.work / t.capacity


def _same_instance(a: Placement, b: Placement) -> bool:
    return a.instance == b.instance


def link_bandwidth(sys: CloudSystem, src_provider: str, dst_provider: str) -> float:
    if src_provider == dst_provider:
        return sys.provider_map[src_provider].internal_bw
    return sys.tariff(src_provider, dst_provider).bandwidth


def link_fail_rate(sys: CloudSystem, src_provider: str, dst_provider: str) -> float:
    if src_provider == dst_provider:
        return sys.provider_map[src_provider].link_fail_rate
    return sys.tariff(src_provider, dst_provider).link_fail_rate


def comm_time(sys: CloudSystem, size: float, src: Placement, dst: Placement) -> float:
    """Seconds to move ``size`` megabits between two placements."""
    if _same_instance(src, dst):
        return 0.0
    return size / link_bandwidth(sys, src.provider, dst.provider)


def average_bandwidth(sys: CloudSystem) -> float:
    """Mean over every link class: each provider's internal network and each inter-provider link."""
    bws = [p.internal_bw for p in sys.providers]
    ids = [p.id for p in sys.providers]
    bws += [sys.tariff(a, b).bandwidth for a in ids for b in ids if a != b]
    return sum(bws) / len(bws)


def average_exec_times(w: Workflow, sys: CloudSystem) -> dict[str, float]:
    n = len(sys.vm_types)
    return {t.id: sum(exec_time(t, vt) for vt in sys.vm_types) / n for t in w.tasks}


# -- pricing --------------------------------------------------------------

def _periods(duration: float, period: float) -> int:
    return math.ceil(round(duration / period, _CEIL_DIGITS))


def lease_cost(sys: CloudSystem, t: VmType, duration: float) -> float:
    """Rental cost of one lease of ``duration`` seconds under the provider's billing scheme."""
    if duration < 0:
        raise ValueError(f"negative lease duration {duration}")
    scheme = sys.scheme_of(t)
    if scheme == "per-minute":
        return _periods(duration, MINUTE) * t.price
    if scheme == "per-hour":
        return _periods(duration, HOUR) * t.price
    extra = max(0, _periods(duration - HYBRID_BASE_SECONDS, MINUTE))
    return t.hybrid_base_price + extra * t.price


def transfer_cost(sys: CloudSystem, size: float, src: Placement, dst: Placement) -> float:
    """Egress charge for one edge; free inside a provider center."""
    if _same_instance(src, dst) or src.provider == dst.provider:
        return 0.0
    return sys.tariff(src.provider, dst.provider).price(size / MEGABITS_PER_GB)


# -- reliability ----------------------------------------------------------

def link_reliability(sys: CloudSystem, src: Placement, dst: Placement, comm: float) -> float:
    if comm < 0:
        raise ValueError(f"negative communication time {comm}")
    if _same_instance(src, dst):
        return 1.0
    return math.exp(-link_fail_rate(sys, src.provider, dst.provider) * comm)


def vm_reliability(t: VmType, duration: float) -> float:
    if duration < 0:
        raise ValueError(f"negative lease duration {duration}")
    return math.exp(-t.fail_rate * duration)


# -- resource pool --------------------------------------------------------

def build_resource_pool(sys: CloudSystem, w: Workflow) -> tuple[VmInstance, ...]:
    """|P| copies of every VM type, type-major, where P is the widest topological level."""
    copies = max(1, len(max_parallel_set(w)))
    return tuple(
        VmInstance(ti * copies + c, ti) for ti in range(len(sys.vm_types)) for c in range(copies)
    )


def placement_of(sys: CloudSystem, pool: Sequence[VmInstance], index: int) -> Placement:
    return Placement(index, sys.vm_types[pool[index].type_index].provider)


# -- default price list and egress tariffs ------------------------------------

PRICE_LIST = {
    "MA": ("per-minute", [("B2MS", 0.0015, None), ("B4MS", 0.003, None), ("B8MS", 0.006, None), ("B16MS", 0.012, None)]),
    "AWS": ("per-hour", [("m1.small", 0.06, None), ("m1.medium", 0.12, None), ("m1.large", 0.24, None), ("m1.xlarge", 0.45, None)]),
    "GCP": (
        "hybrid",
        [("n1-highcpu-2", 0.0012, 0.014), ("n1-highcpu-4", 0.0023, 0.025), ("n1-highcpu-8", 0.0047, 0.05), ("n1-highcpu-16", 0.0093, 0.1)],
    ),
}
CENTER_PRICE = {"MA": 0.08, "AWS": 0.02, "GCP": 0.05}
EGRESS_TIERS = {
    "MA": ((100.0, 0.0), (10 * GB_PER_TB, 0.11), (50 * GB_PER_TB, 0.075), (150 * GB_PER_TB, 0.07), (500 * GB_PER_TB, 0.06)),
    "AWS": ((100.0, 0.0), (10 * GB_PER_TB, 0.09), (50 * GB_PER_TB, 0.085), (150 * GB_PER_TB, 0.07), (math.inf, 0.05)),
    "GCP": ((1 * GB_PER_TB, 0.19), (10 * GB_PER_TB, 0.18), (math.inf, 0.15)),
}
DEFAULT_CAPACITIES = (4.0, 8.0, 16.0, 32.0)


def default_cloud(
    centers_per_brand: int = 2,
    capacities: Sequence[float] = DEFAULT_CAPACITIES,
    internal_bw: float = 20.0,
    external_bw: float = 100.0,
    boot_time: float = 97.0,
    fail_rate: float = 5e-8,
) -> CloudSystem:
    """Six providers (two centers each of MA, AWS, GCP) with four VM types each.

    Sibling centers of one brand are billed the brand's cross-center rate;
    different brands use the sender's tiered egress table.
    """
    providers, vm_types = [], []
    for brand, (scheme, rows) in PRICE_LIST.items():
        for c in range(1, centers_per_brand + 1):
            pid = f"{brand}-{c}"
            providers.append(Provider(pid, scheme, internal_bw, fail_rate, CENTER_PRICE[brand], brand))
            for (name, price, base), cap in zip(rows, capacities, strict=True):
                vm_types.append(VmType(f"{pid}:{name}", pid, cap, price, boot_time, fail_rate, base))
    tariffs = []
    for a in providers:
        for b in providers:
            if a.id == b.id:
                continue
            tiers = ((math.inf, a.center_transfer_price),) if a.brand == b.brand else EGRESS_TIERS[a.brand]
            tariffs.append(InterCloudTariff(a.id, b.id, external_bw, fail_rate, tiers))
    return CloudSystem(tuple(providers), tuple(vm_types), tuple(tariffs))


# -- config file ----------------------------------------------------------

def _num(x: float) -> float | None:
    return None if x == math.inf else x


def cloud_to_dict(sys: CloudSystem) -> dict:
    return {
        "providers": [
            {
                "id": p.id,
                "brand": p.brand,
                "scheme": p.scheme,
                "internal_bw": p.internal_bw,
                "link_fail_rate": p.link_fail_rate,
                "center_transfer_price": p.center_transfer_price,
            }
            for p in sys.providers
        ],
        "vm_types": [
            {
                "name": t.name,
                "provider": t.provider,
                "capacity": t.capacity,
                "price": t.price,
                "hybrid_base_price": t.hybrid_base_price,
                "boot_time": t.boot_time,
                "fail_rate": t.fail_rate,
            }
            for t in sys.vm_types
        ],
        "tariffs": [
            {
                "src": t.src,
                "dst": t.dst,
                "bandwidth": t.bandwidth,
                "link_fail_rate": t.link_fail_rate,
                "tiers": [[_num(a), b] for a, b in t.tiers],
            }
            for t in sys.tariffs
        ],
    }


def cloud_from_dict(doc: dict) -> CloudSystem:
    providers = [
        Provider(
            p["id"],
            p["scheme"],
            float(p["internal_bw"]),
            float(p.get("link_fail_rate", 0.0)),
            float(p.get("center_transfer_price", 0.0)),
            p.get("brand", ""),
        )
        for p in doc["providers"]
    ]
    vm_types = [
        VmType(
            t["name"],
            t["provider"],
            float(t["capacity"]),
            float(t["price"]),
            float(t.get("boot_time", 97.0)),
            float(t.get("fail_rate", 0.0)),
            t.get("hybrid_base_price"),
        )
        for t in doc["vm_types"]
    ]
    tariffs = [
        InterCloudTariff(
            t["src"],
            t["dst"],
            float(t["bandwidth"]),
            float(t.get("link_fail_rate", 0.0)),
            tuple((math.inf if a is None else float(a), float(b)) for a, b in t.get("tiers", [[None, 0.0]])),
        )
        for t in doc.get("tariffs", [])
    ]
    return CloudSystem(tuple(providers), tuple(vm_types), tuple(tariffs))


def load_cloud(path: str | os.PathLike) -> CloudSystem:
    return cloud_from_dict(json.loads(Path(path).read_text()))


def save_cloud(sys: CloudSystem, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(cloud_to_dict(sys), indent=2) + "\n")
