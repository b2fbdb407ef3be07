"""Global grey-box latency prediction from hardware-counter vectors.

Latency at a (core, uncore) frequency pair is modeled as a weighted sum of
per-domain counter values, with the core and uncore terms scaled by 1/frequency
and the DRAM term constant (DRAM frequency is fixed). One model covers every
function; counters are always taken at the maximum frequency configuration, so
frequency enters analytically rather than as a feature.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field

import numpy as np

from .frequency import FreqConfig


class NoHistoryError(LookupError):
    """History table has no entries for this key."""


class UntrainedModelError(RuntimeError):
    """The model has no training samples yet."""


class UndefinedSharesError(ZeroDivisionError):
    """Domain shares are undefined because total predicted latency is zero."""


@dataclass(frozen=True)
class PmcVector:
    """Per-domain counter observation, collected at max core/uncore frequency."""

    core: tuple[float, ...]
    uncore: tuple[float, ...]
    dram: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "core", tuple(float(v) for v in self.core))
        object.__setattr__(self, "uncore", tuple(float(v) for v in self.uncore))
        object.__setattr__(self, "dram", tuple(float(v) for v in self.dram))
        if any(v < 0 for v in self.core + self.uncore + self.dram):
            raise ValueError("counter values must be nonnegative")

    def as_array(self) -> np.ndarray:
        return np.array(self.core + self.uncore + self.dram, dtype=float)


class HistoryTable:
    """Counter observations of one (function class, variant) keyed by input size.

    Repeated observations at the same size are averaged component-wise;
    lookups between stored sizes interpolate linearly, lookups outside the
    stored range extrapolate from the two nearest sizes (clamped at zero).
    """

    def __init__(self, key: tuple[str, str] = ("", "")):
        self.key = key
        self._sizes: list[float] = []
        self._vectors: list[np.ndarray] = []
        self._counts: list[int] = []
        self._split: tuple[int, int] = (0, 0)

    def __len__(self) -> int:
        return len(self._sizes)

    def record(self, input_size: float, pmcs: PmcVector) -> None:
        arr = pmcs.as_array()
        self._split = (len(pmcs.core), len(pmcs.uncore))
        i = bisect.bisect_left(self._sizes, input_size)
        if i < len(self._sizes) and self._sizes[i] == input_size:
            n = self._counts[i]
            self._vectors[i] = (self._vectors[i] * n + arr) / (n + 1)
            self._counts[i] = n + 1
        else:
            self._sizes.insert(i, input_size)
            self._vectors.insert(i, arr)
            self._counts.insert(i, 1)

    def interpolate(self, input_size: float) -> np.ndarray:
        if not self._sizes:
            raise NoHistoryError(f"no history for {self.key}")
        if len(self._sizes) == 1:
            return self._vectors[0].copy()
        i = bisect.bisect_left(self._sizes, input_size)
        if i < len(self._sizes) and self._sizes[i] == input_size:
            return self._vectors[i].copy()
        # pick the bracketing pair, or the two nearest knots when outside
        if i == 0:
            lo, hi = 0, 1
        elif i == len(self._sizes):
            lo, hi = len(self._sizes) - 2, len(self._sizes) - 1
        else:
            lo, hi = i - 1, i
        x0, x1 = self._sizes[lo], self._sizes[hi]
        t = (input_size - x0) / (x1 - x0)
        est = self._vectors[lo] + t * (self._vectors[hi] - self._vectors[lo])
        return np.maximum(est, 0.0)


def interpolate_pmcs(table: HistoryTable, input_size: float) -> PmcVector:
    """Estimate the counter vector for an input size from a history table."""
    flat = table.interpolate(input_size)
    nc, nu = table._split
    return PmcVector(tuple(flat[:nc]), tuple(flat[nc : nc + nu]), tuple(flat[nc + nu :]))


@dataclass
class GreyBoxModel:
    """Function-agnostic latency model: per-counter weights for three domains.

    Weights are kept nonnegative so that predicted latency never increases
    with frequency. Fitting is ordinary least squares over a retained sample
    window, with negative estimates clipped to zero and the remaining features
    refit; rank-deficient designs fall back to a tiny ridge penalty.
    """

    n_core: int = 4
    n_uncore: int = 4
    n_dram: int = 4
    window_cap: int = 10_000
    ridge: float = 1e-8
    c: np.ndarray | None = None
    u: np.ndarray | None = None
    d: np.ndarray | None = None
    window: list[tuple[PmcVector, FreqConfig, float]] = field(default_factory=list)

    @property
    def fitted(self) -> bool:
        return self.c is not None

    # -- prediction ---------------------------------------------------------

    def _coeffs(self) -> np.ndarray:
        if not self.fitted:
            raise UntrainedModelError("latency model has no training samples")
        return np.concatenate([self.c, self.u, self.d])

    def _features(self, pmcs: PmcVector, cfg: FreqConfig) -> np.ndarray:
        arr = pmcs.as_array()
        nc, nu = self.n_core, self.n_uncore
        scale = np.concatenate(
            [
                np.full(nc, 1.0 / cfg.core_ghz),
                np.full(nu, 1.0 / cfg.uncore_ghz),
                np.ones(self.n_dram),
            ]
        )
        return arr * scale

    def predict(self, pmcs: PmcVector, cfg: FreqConfig) -> float:
        return float(self._features(pmcs, cfg) @ self._coeffs())

    def predict_grid(self, pmcs: PmcVector, core_grid, uncore_grid) -> np.ndarray:
        """Predicted latency for every (core, uncore) pair; shape (len(core), len(uncore))."""
        coeffs = self._coeffs()
        arr = pmcs.as_array()
        nc, nu = self.n_core, self.n_uncore
        core_term = float(arr[:nc] @ coeffs[:nc])
        uncore_term = float(arr[nc : nc + nu] @ coeffs[nc : nc + nu])
        dram_term = float(arr[nc + nu :] @ coeffs[nc + nu :])
        core = np.asarray(core_grid, dtype=float)
        uncore = np.asarray(uncore_grid, dtype=float)
        return core_term / core[:, None] + uncore_term / uncore[None, :] + dram_term

    def domain_contributions(
        self, pmcs: PmcVector, cfg: FreqConfig
    ) -> tuple[float, float]:
        """(core share, memory share) of the predicted latency.

        Memory covers the uncore and DRAM terms together.
        """
        coeffs = self._coeffs()
        feats = self._features(pmcs, cfg)
        nc = self.n_core
        core_part = float(feats[:nc] @ coeffs[:nc])
        mem_part = float(feats[nc:] @ coeffs[nc:])
        total = core_part + mem_part
        if total <= 0.0:
            raise UndefinedSharesError("total predicted latency is zero")
        return core_part / total, mem_part / total

    # -- fitting -------------------------------------------------------------

    def _design(self) -> tuple[np.ndarray, np.ndarray]:
        rows = [self._features(p, cfg) for p, cfg, _ in self.window]
        y = np.array([lat for _, _, lat in self.window], dtype=float)
        return np.array(rows, dtype=float), y

    def _solve(self, design: np.ndarray, y: np.ndarray) -> np.ndarray:
        sol, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
        if rank < design.shape[1]:
            gram = design.T @ design + self.ridge * np.eye(design.shape[1])
            sol = np.linalg.solve(gram, design.T @ y)
        return sol

    def _refit(self) -> None:
        design, y = self._design()
        n_feat = design.shape[1]
        keep = np.ones(n_feat, dtype=bool)
        coeffs = np.zeros(n_feat)
        # clip-and-refit: drop negative estimates, refit the rest
        for _ in range(n_feat):
            if not keep.any():
                break
            sol = self._solve(design[:, keep], y)
            if (sol >= 0).all():
                coeffs[keep] = sol
                break
            kept_idx = np.flatnonzero(keep)
            keep[kept_idx[sol < 0]] = False
        coeffs = np.maximum(coeffs, 0.0)
        nc, nu = self.n_core, self.n_uncore
        self.c = coeffs[:nc]
        self.u = coeffs[nc : nc + nu]
        self.d = coeffs[nc + nu :]

    def fit(self, samples: list[tuple[PmcVector, FreqConfig, float]]) -> "GreyBoxModel":
        if not samples:
            raise ValueError("need at least one sample")
        if any(lat <= 0 for _, _, lat in samples):
            raise ValueError("sample latencies must be positive")
        self.window = list(samples[-self.window_cap :])
        self._refit()
        return self

    def update(self, sample: tuple[PmcVector, FreqConfig, float]) -> "GreyBoxModel":
        """Append one observation to the window (evicting the oldest at cap) and refit."""
        self.window.append(sample)
        if len(self.window) > self.window_cap:
            self.window = self.window[-self.window_cap :]
        self._refit()
        return self

    # -- persistence ---------------------------------------------------------

    def dump(self, path: str) -> None:
        raw = {
            "c": list(map(float, self.c)) if self.fitted else None,
            "u": list(map(float, self.u)) if self.fitted else None,
            "d": list(map(float, self.d)) if self.fitted else None,
            "window": [
                {
                    "core": list(p.core),
                    "uncore": list(p.uncore),
                    "dram": list(p.dram),
                    "core_ghz": cfg.core_ghz,
                    "uncore_ghz": cfg.uncore_ghz,
                    "latency_ms": lat,
                }
                for p, cfg, lat in self.window
            ],
        }
        with open(path, "w") as fh:
            json.dump(raw, fh)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "GreyBoxModel":
        with open(path) as fh:
            raw = json.load(fh)
        window = [
            (
                PmcVector(tuple(s["core"]), tuple(s["uncore"]), tuple(s["dram"])),
                FreqConfig(s["core_ghz"], s["uncore_ghz"]),
                s["latency_ms"],
            )
            for s in raw["window"]
        ]
        if not window:
            raise UntrainedModelError(f"{path} holds no training window")
        first = window[0][0]
        model = cls(
            n_core=len(first.core), n_uncore=len(first.uncore), n_dram=len(first.dram)
        )
        model.fit(window)
        return model


def fit(
    samples: list[tuple[PmcVector, FreqConfig, float]],
    window_cap: int = 10_000,
    ridge: float = 1e-8,
) -> GreyBoxModel:
    """Fit a fresh model; counter counts are taken from the first sample."""
    first = samples[0][0]
    model = GreyBoxModel(
        n_core=len(first.core),
        n_uncore=len(first.uncore),
        n_dram=len(first.dram),
        window_cap=window_cap,
        ridge=ridge,
    )
    return model.fit(samples)
