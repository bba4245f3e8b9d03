"""Cipher catalogue, vulnerability algebra and encryption time model."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .workflow import Workflow

CAPACITY_MODES = ("normalized", "capacity")


@dataclass(frozen=True)
class Cipher:
    level: int
    rounds: int
    plaintexts_log2: float
    vulnerability: float
    block_time: float  # microseconds per block

    def __post_init__(self):
        if self.vulnerability < 0:
            raise ValueError(f"cipher level {self.level}: negative vulnerability")
        if self.block_time <= 0:
            raise ValueError(f"cipher level {self.level}: block time must be positive")


@dataclass(frozen=True)
class CipherTable:
    """Ordered cipher variants plus the crypto-time model settings.

    With ``capacity_mode="normalized"`` crypto runs at unit speed regardless
    of the VM; ``"capacity"`` divides by the VM's MIPS capacity.
    """

    ciphers: tuple[Cipher, ...]
    block_size_bits: int = 128
    capacity_mode: str = "normalized"

    def __post_init__(self):
        object.__setattr__(self, "ciphers", tuple(self.ciphers))
        if not self.ciphers:
            raise ValueError("cipher table is empty")
        if self.capacity_mode not in CAPACITY_MODES:
            raise ValueError(f"unknown crypto capacity mode {self.capacity_mode!r}")
        levels = [c.level for c in self.ciphers]
        if len(set(levels)) != len(levels):
            raise ValueError("duplicate cipher level")

    @cached_property
    def by_level(self) -> dict[int, Cipher]:
        return {c.level: c for c in self.ciphers}

    @property
    def max_vulnerability(self) -> float:
        return max(c.vulnerability for c in self.ciphers)

    def to_rows(self) -> list[dict]:
        return [
            {
                "level": c.level,
                "rounds": c.rounds,
                "plaintexts_log2": c.plaintexts_log2,
                "vul": c.vulnerability,
                "time_us_per_block": c.block_time,
            }
            for c in self.ciphers
        ]

    @classmethod
    def from_rows(cls, rows: Iterable[Mapping], capacity_mode: str = "normalized") -> CipherTable:
        ciphers = [
            Cipher(int(r["level"]), int(r["rounds"]), float(r["plaintexts_log2"]), float(r["vul"]), float(r["time_us_per_block"]))
            for r in rows
        ]
        return cls(tuple(ciphers), capacity_mode=capacity_mode)


# RC6 variants: level, rounds, log2(plaintexts), Vul, us/block
RC6_TABLE = CipherTable(
    (
        Cipher(1, 4, 29, 98, 3.08),
        Cipher(2, 8, 61, 67, 3.58),
        Cipher(3, 12, 94, 34, 4.15),
        Cipher(4, 16, 118, 10, 4.63),
        Cipher(5, 20, 128, 0, 5.21),
    )
)


@dataclass(frozen=True)
class SecurityConstraints:
    """System-wide vulnerability budget; per-edge weights and caps live on the edges."""

    system_cap: float
    scale_digits: int = 1

    def __post_init__(self):
        if self.system_cap < 0:
            raise ValueError("system vulnerability cap must be non-negative")
        if self.scale_digits < 0:
            raise ValueError("scale_digits must be non-negative")


@dataclass(frozen=True)
class CipherAssignment:
    """Chosen cipher level per cross-instance edge and the summed crypto time."""

    choices: dict[tuple[str, str], int] = field(default_factory=dict)
    total_time: float = 0.0
    examined: int = 0

    def level(self, key: tuple[str, str]) -> int:
        try:
            return self.choices[key]
        except KeyError:
            raise ValueError(f"no cipher assigned to cross-instance edge {key}") from None


def vulnerability_of(c: Cipher) -> float:
    """Tabulated vulnerability of a cipher.

    The tabulated column wins over recomputing log2(2^128 / plaintexts): the
    4-round row is listed as 98 where the formula would give 99.
    """
    return c.vulnerability


def system_vulnerability(
    w: Workflow,
    assignment: CipherAssignment,
    table: CipherTable,
    cross_edges: Iterable[tuple[str, str]] | None = None,
) -> float:
    """Weighted vulnerability sum over edges carrying a cipher.

    If ``cross_edges`` is given, every listed edge must have a choice; edges
    not in the assignment (same-instance transfers) contribute nothing.
    """
    if cross_edges is not None:
        for key in cross_edges:
            assignment.level(key)
    total = 0.0
    for key, level in assignment.choices.items():
        total += w.edge_map[key].sec_weight * vulnerability_of(table.by_level[level])
    return total


def max_vulnerability(w: Workflow, table: CipherTable) -> float:
    vmax = table.max_vulnerability
    return sum(e.sec_weight * vmax for e in w.edges)


def crypto_time(size: float, c: Cipher, capacity: float, same_instance: bool, table: CipherTable) -> float:
    """Seconds to encrypt (or decrypt) ``size`` megabits with cipher ``c``."""
    if same_instance:
        return 0.0
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    effective = 1.0 if table.capacity_mode == "normalized" else capacity
    # us/block * (Mb * 1e6 / bits per block) * 1e-6 s/us; the powers of ten cancel
    return c.block_time * size / table.block_size_bits / effective


def is_monotone(table: CipherTable) -> bool:
    """Higher level means slower and no more vulnerable."""
    cs = sorted(table.ciphers, key=lambda c: c.level)
    return all(a.block_time < b.block_time and a.vulnerability >= b.vulnerability for a, b in zip(cs, cs[1:]))
