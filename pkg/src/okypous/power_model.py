"""Per-core active power as a second-degree polynomial of (core, uncore) GHz."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .frequency import FreqConfig, FreqGrids
from .latency_model import UntrainedModelError


class InsufficientCoverageError(ValueError):
    """Too few samples or too little frequency diversity to fit."""


class NonMonotoneFitError(ValueError):
    """The fitted polynomial violates positivity or monotonicity on the grid."""


def _poly_terms(core: np.ndarray, uncore: np.ndarray) -> np.ndarray:
    return np.stack(
        [np.ones_like(core), core, uncore, core**2, uncore**2, core * uncore],
        axis=-1,
    )


@dataclass(frozen=True)
class PowerModel:
    """Coefficients (a0, a1*Fc, a2*Fu, a3*Fc^2, a4*Fu^2, a5*Fc*Fu) in watts."""

    coeffs: tuple[float, float, float, float, float, float]
    fitted: bool = True

    def predict(self, cfg: FreqConfig) -> float:
        if not self.fitted:
            raise UntrainedModelError("power model is not fitted")
        c, u = cfg.core_ghz, cfg.uncore_ghz
        a = self.coeffs
        return a[0] + a[1] * c + a[2] * u + a[3] * c * c + a[4] * u * u + a[5] * c * u

    def predict_grid(self, core_grid, uncore_grid) -> np.ndarray:
        """Power for every pair; shape (len(core_grid), len(uncore_grid))."""
        if not self.fitted:
            raise UntrainedModelError("power model is not fitted")
        core = np.asarray(core_grid, dtype=float)[:, None]
        uncore = np.asarray(uncore_grid, dtype=float)[None, :]
        return _poly_terms(
            np.broadcast_to(core, (len(core_grid), len(uncore_grid))),
            np.broadcast_to(uncore, (len(core_grid), len(uncore_grid))),
        ) @ np.array(self.coeffs)

    def check_grid(self, grids: FreqGrids) -> None:
        """Raise unless the model is positive and axis-monotone over the grid."""
        table = self.predict_grid(grids.core_grid, grids.uncore_grid)
        if (table <= 0).any():
            raise NonMonotoneFitError("predicted power not positive over the grid")
        if (np.diff(table, axis=0) < -1e-9).any() or (np.diff(table, axis=1) < -1e-9).any():
            raise NonMonotoneFitError("predicted power not nondecreasing over the grid")

    def dump(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump({"coeffs": list(self.coeffs)}, fh)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "PowerModel":
        with open(path) as fh:
            raw = json.load(fh)
        return cls(coeffs=tuple(raw["coeffs"]))


def fit_power(
    samples: list[tuple[FreqConfig, float]], grids: FreqGrids
) -> PowerModel:
    """Least-squares polynomial fit, validated against the grid invariants.

    Requires at least 6 samples spanning at least 3 distinct core and 3
    distinct uncore frequencies so all six terms are identifiable.
    """
    if len(samples) < 6:
        raise InsufficientCoverageError(
            f"need >= 6 samples, got {len(samples)}"
        )
    cores = {cfg.core_ghz for cfg, _ in samples}
    uncores = {cfg.uncore_ghz for cfg, _ in samples}
    if len(cores) < 3 or len(uncores) < 3:
        raise InsufficientCoverageError(
            "need samples spanning >= 3 distinct core and uncore frequencies"
        )
    core = np.array([cfg.core_ghz for cfg, _ in samples])
    uncore = np.array([cfg.uncore_ghz for cfg, _ in samples])
    watts = np.array([w for _, w in samples])
    design = _poly_terms(core, uncore)
    sol, _, rank, _ = np.linalg.lstsq(design, watts, rcond=None)
    if rank < 6:
        raise InsufficientCoverageError("rank-deficient sample set")
    model = PowerModel(coeffs=tuple(float(v) for v in sol))
    model.check_grid(grids)
    return model
