"""Frequency grids and core/uncore frequency configurations."""

from __future__ import annotations

from dataclasses import dataclass, field


# Default grids span the hardware range the framework targets (1.2-2.5 GHz
# core, 1.2-2.9 GHz uncore); step sizes are a synthetic choice and both grids
# are config-overridable.
DEFAULT_CORE_GRID = (1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4, 2.5)
DEFAULT_UNCORE_GRID = (1.2, 1.5, 1.8, 2.1, 2.4, 2.7, 2.9)
DEFAULT_DRAM_GHZ = 1.6


class OffGridError(ValueError):
    """A frequency value is not a member of its grid."""


def _check_grid(name: str, values: tuple[float, ...]) -> None:
    if len(values) == 0:
        raise ValueError(f"{name} grid must be nonempty")
    if len(values) < 2 or any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} grid must be strictly ascending with min < max")
    if any(v <= 0 for v in values):
        raise ValueError(f"{name} grid values must be positive")


@dataclass(frozen=True)
class FreqGrids:
    """Discrete core and uncore frequency grids plus the fixed DRAM frequency.

    DRAM frequency is constant for a whole experiment; only core and uncore
    are scaled at runtime.
    """

    core_grid: tuple[float, ...] = DEFAULT_CORE_GRID
    uncore_grid: tuple[float, ...] = DEFAULT_UNCORE_GRID
    dram_ghz: float = DEFAULT_DRAM_GHZ

    def __post_init__(self) -> None:
        object.__setattr__(self, "core_grid", tuple(self.core_grid))
        object.__setattr__(self, "uncore_grid", tuple(self.uncore_grid))
        _check_grid("core", self.core_grid)
        _check_grid("uncore", self.uncore_grid)
        if self.dram_ghz <= 0:
            raise ValueError("dram_ghz must be positive")

    @property
    def max_config(self) -> "FreqConfig":
        return FreqConfig(self.core_grid[-1], self.uncore_grid[-1], grids=self)

    @property
    def min_config(self) -> "FreqConfig":
        return FreqConfig(self.core_grid[0], self.uncore_grid[0], grids=self)

    def all_configs(self) -> list["FreqConfig"]:
        """Every (core, uncore) pair, core-major order."""
        return [
            FreqConfig(c, u, grids=self)
            for c in self.core_grid
            for u in self.uncore_grid
        ]


@dataclass(frozen=True)
class FreqConfig:
    """One (core, uncore) frequency pair in GHz, validated against its grids."""

    core_ghz: float
    uncore_ghz: float
    grids: FreqGrids | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.grids is not None:
            if self.core_ghz not in self.grids.core_grid:
                raise OffGridError(f"core frequency {self.core_ghz} not on grid")
            if self.uncore_ghz not in self.grids.uncore_grid:
                raise OffGridError(f"uncore frequency {self.uncore_ghz} not on grid")
        elif self.core_ghz <= 0 or self.uncore_ghz <= 0:
            raise ValueError("frequencies must be positive")
