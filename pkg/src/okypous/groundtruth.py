"""Synthetic ground truth the simulator executes against.

Function latency is generated from per-class cycle counts in three domains
(core, uncore, DRAM), each divided by its domain frequency, with an optional
multiplicative noise draw applied to the whole cycle vector. Counter vectors
are a fixed positive linear map of the cycle vector, so a single latency model
over counters can be exact for every class. All calibration constants are
synthetic and config-overridable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .frequency import FreqConfig, FreqGrids
from .latency_model import PmcVector

# cycles per GHz-millisecond: t_ms = cycles / (f_ghz * CYCLES_PER_GHZ_MS)
CYCLES_PER_GHZ_MS = 1.0e6


@dataclass(frozen=True)
class CycleLaw:
    """cycles(input_size) = slope * size + intercept"""

    slope: float
    intercept: float

    def __call__(self, size: float) -> float:
        return self.slope * size + self.intercept


@dataclass(frozen=True)
class PmcMap:
    """Positive mixing weights turning per-domain cycles into counter values."""

    core: tuple[float, ...]
    uncore: tuple[float, ...]
    dram: tuple[float, ...]

    def vector(
        self, wc: float, wu: float, wd: float, rng: np.random.Generator | None = None,
        sigma: float = 0.0,
    ) -> PmcVector:
        core = np.array(self.core) * wc
        uncore = np.array(self.uncore) * wu
        dram = np.array(self.dram) * wd
        if rng is not None and sigma > 0:
            core = np.maximum(core * (1 + rng.normal(0, sigma, core.shape)), 0.0)
            uncore = np.maximum(uncore * (1 + rng.normal(0, sigma, uncore.shape)), 0.0)
            dram = np.maximum(dram * (1 + rng.normal(0, sigma, dram.shape)), 0.0)
        return PmcVector(tuple(core), tuple(uncore), tuple(dram))


@dataclass(frozen=True)
class FunctionClass:
    """Ground-truth behavior of one function class."""

    id: str
    core_cycles: CycleLaw
    uncore_cycles: CycleLaw
    dram_cycles: CycleLaw
    nominal_size: float
    pmc_map: PmcMap
    variant_multipliers: dict[str, float] = field(default_factory=dict)

    def cycle_vector(self, size: float, variant: str = "") -> tuple[float, float, float]:
        mult = self.variant_multipliers.get(variant, 1.0)
        return (
            self.core_cycles(size) * mult,
            self.uncore_cycles(size) * mult,
            self.dram_cycles(size) * mult,
        )

    def latency_ms(
        self,
        cfg: FreqConfig,
        dram_ghz: float,
        size: float,
        variant: str = "",
        noise_mult: float = 1.0,
    ) -> float:
        wc, wu, wd = self.cycle_vector(size, variant)
        base = (
            wc / cfg.core_ghz + wu / cfg.uncore_ghz + wd / dram_ghz
        ) / CYCLES_PER_GHZ_MS
        return base * noise_mult


@dataclass(frozen=True)
class NoiseParams:
    """Runtime variability knobs; all zeroable for oracle experiments."""

    latency_sigma: float = 0.05
    spike_prob: float = 0.01
    spike_factor: float = 3.0
    pmc_sigma: float = 0.02

    def draw_latency_mult(self, rng: np.random.Generator) -> float:
        mult = 1.0
        if self.latency_sigma > 0:
            mult = float(np.exp(rng.normal(0.0, self.latency_sigma)))
        if self.spike_prob > 0 and rng.random() < self.spike_prob:
            mult *= self.spike_factor
        return mult


# Per-core active power polynomial (a0, a1 Fc, a2 Fu, a3 Fc^2, a4 Fu^2,
# a5 Fc Fu). Calibrated so the uncore axis spans a strictly larger power
# fraction than the core axis and so running near the top of the core grid
# costs more energy per unit of work than the mid grid (diminishing returns
# at high frequency). Values are synthetic, not measurements.
ACTIVE_POWER_COEFFS = (1.3963, -1.0423, -0.5327, 0.30, 0.12, 0.5339)

# Idle draw of a core parked at frequency f: base + slope * f (watts).
IDLE_CORE_BASE_W = 0.30
IDLE_CORE_SLOPE_W = 0.30

# Always-on per-socket draw: base + slope * uncore_ghz (watts).
SOCKET_BASE_W = 5.0
SOCKET_UNCORE_SLOPE_W = 0.9


@dataclass(frozen=True)
class PowerTruth:
    """Ground-truth socket power decomposition."""

    active_coeffs: tuple[float, ...] = ACTIVE_POWER_COEFFS
    idle_core_base_w: float = IDLE_CORE_BASE_W
    idle_core_slope_w: float = IDLE_CORE_SLOPE_W
    socket_base_w: float = SOCKET_BASE_W
    socket_uncore_slope_w: float = SOCKET_UNCORE_SLOPE_W

    def active_core_w(self, core_ghz: float, uncore_ghz: float) -> float:
        a = self.active_coeffs
        c, u = core_ghz, uncore_ghz
        return a[0] + a[1] * c + a[2] * u + a[3] * c * c + a[4] * u * u + a[5] * c * u

    def idle_core_w(self, core_ghz: float) -> float:
        return self.idle_core_base_w + self.idle_core_slope_w * core_ghz

    def socket_static_w(self, uncore_ghz: float) -> float:
        return self.socket_base_w + self.socket_uncore_slope_w * uncore_ghz

    def idle_floor_w(self, grids: FreqGrids, cores_per_socket: int) -> float:
        """Socket power with every core idle at the bottom of both grids."""
        return self.socket_static_w(grids.uncore_grid[0]) + cores_per_socket * (
            self.idle_core_w(grids.core_grid[0])
        )


def generate_classes(
    n_classes: int,
    seed: int,
    n_core: int = 4,
    n_uncore: int = 4,
    n_dram: int = 4,
    grids: FreqGrids | None = None,
) -> list[FunctionClass]:
    """Seeded synthetic class corpus with varied core/memory balance.

    Classes range from compute-bound (core share around 0.8) to memory-bound
    (uncore plus DRAM around 0.55 at max frequency); one class in ten carries
    an "alt" variant with inflated work to exercise ambiguous-input handling.
    """
    grids = grids or FreqGrids()
    rng = np.random.default_rng(seed)
    # one hardware-like mixing map shared by all classes
    pmc_map = PmcMap(
        core=tuple(rng.uniform(0.5, 2.0, n_core)),
        uncore=tuple(rng.uniform(0.5, 2.0, n_uncore)),
        dram=tuple(rng.uniform(0.5, 2.0, n_dram)),
    )
    fmax = grids.max_config
    classes = []
    for i in range(n_classes):
        total_ms = float(rng.uniform(60.0, 320.0))
        core_share = float(rng.uniform(0.45, 0.85))
        uncore_share = float(rng.uniform(0.10, 0.95)) * (1.0 - core_share)
        dram_share = 1.0 - core_share - uncore_share
        nominal = float(rng.uniform(60.0, 140.0))
        laws = []
        for share, ghz in (
            (core_share, fmax.core_ghz),
            (uncore_share, fmax.uncore_ghz),
            (dram_share, grids.dram_ghz),
        ):
            cycles = share * total_ms * ghz * CYCLES_PER_GHZ_MS
            laws.append(CycleLaw(slope=0.8 * cycles / nominal, intercept=0.2 * cycles))
        variants = {"alt": 1.5} if i % 10 == 0 else {}
        classes.append(
            FunctionClass(
                id=f"class-{i:02d}",
                core_cycles=laws[0],
                uncore_cycles=laws[1],
                dram_cycles=laws[2],
                nominal_size=nominal,
                pmc_map=pmc_map,
                variant_multipliers=variants,
            )
        )
    return classes


def dump_classes(classes: list[FunctionClass], path: str) -> None:
    raw = {
        "classes": [
            {
                "id": c.id,
                "core_cycles": [c.core_cycles.slope, c.core_cycles.intercept],
                "uncore_cycles": [c.uncore_cycles.slope, c.uncore_cycles.intercept],
                "dram_cycles": [c.dram_cycles.slope, c.dram_cycles.intercept],
                "nominal_size": c.nominal_size,
                "pmc_map": {
                    "core": list(c.pmc_map.core),
                    "uncore": list(c.pmc_map.uncore),
                    "dram": list(c.pmc_map.dram),
                },
                "variant_multipliers": c.variant_multipliers,
            }
            for c in classes
        ]
    }
    with open(path, "w") as fh:
        json.dump(raw, fh, indent=2)
        fh.write("\n")


def load_classes(path: str) -> list[FunctionClass]:
    with open(path) as fh:
        raw = json.load(fh)
    classes = []
    for c in raw["classes"]:
        classes.append(
            FunctionClass(
                id=c["id"],
                core_cycles=CycleLaw(*c["core_cycles"]),
                uncore_cycles=CycleLaw(*c["uncore_cycles"]),
                dram_cycles=CycleLaw(*c["dram_cycles"]),
                nominal_size=c["nominal_size"],
                pmc_map=PmcMap(
                    core=tuple(c["pmc_map"]["core"]),
                    uncore=tuple(c["pmc_map"]["uncore"]),
                    dram=tuple(c["pmc_map"]["dram"]),
                ),
                variant_multipliers=dict(c.get("variant_multipliers", {})),
            )
        )
    return classes
