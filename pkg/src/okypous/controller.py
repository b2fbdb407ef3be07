"""Slack-driven budget updates and power-minimal frequency selection.

Between stages the controller turns accumulated slack into a budget correction
through a piecewise proportional gain, then picks the lowest-power (core,
uncore) pair whose predicted latency fits the corrected budget. Negative slack
uses an aggressive constant gain so a deficit is recovered within one stage;
nonnegative slack ramps the gain up with the slack magnitude so small slack is
mostly held back as a cushion against prediction error.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .frequency import FreqConfig, FreqGrids
from .latency_model import GreyBoxModel, PmcVector
from .power_model import PowerModel


@dataclass(frozen=True)
class GainSchedule:
    k_neg: float = 1.0
    k_min: float = 0.2
    k_max: float = 0.9
    ref_budget_ms: float = 100.0

    def __post_init__(self) -> None:
        if not (self.k_neg >= self.k_max >= self.k_min > 0):
            raise ValueError("gain schedule requires k_neg >= k_max >= k_min > 0")
        if self.ref_budget_ms <= 0:
            raise ValueError("ref_budget_ms must be positive")


@dataclass(frozen=True)
class ControlDecision:
    updated_budget_ms: float
    chosen: FreqConfig
    predicted_latency_ms: float
    predicted_power_w: float
    feasible: bool


def gain(schedule: GainSchedule, slack_ms: float) -> float:
    """Proportional gain for the current slack."""
    if slack_ms < 0:
        return schedule.k_neg
    ramp = min(1.0, slack_ms / schedule.ref_budget_ms)
    return schedule.k_min + (schedule.k_max - schedule.k_min) * ramp


def update_budget(
    schedule: GainSchedule,
    slack_ms: float,
    nominal_budget_ms: float,
    floor_ms: float = 0.0,
) -> float:
    """Corrected budget for the next stage, clamped below at ``floor_ms``."""
    if nominal_budget_ms <= 0:
        raise ValueError("nominal budget must be positive")
    corrected = nominal_budget_ms + gain(schedule, slack_ms) * slack_ms
    return max(corrected, floor_ms, 0.0)


def select_config(
    latency_model: GreyBoxModel,
    power_model: PowerModel,
    pmcs: PmcVector,
    budget_ms: float,
    grids: FreqGrids,
    cap_w: float | None = None,
) -> ControlDecision:
    """Lowest-power grid config whose predicted latency fits the budget.

    The whole grid is enumerated. A power cap removes configs whose predicted
    power exceeds it before the latency constraint is applied. Ties break to
    lower predicted latency, then lower core, then lower uncore frequency.
    Fallbacks when nothing qualifies:

    - no config under the cap: the minimum-power config, flagged infeasible;
    - no cap-admissible config meets the budget: the fastest cap-admissible
      config (the max-frequency pair when uncapped), flagged infeasible.
    """
    lat = latency_model.predict_grid(pmcs, grids.core_grid, grids.uncore_grid)
    pow_ = power_model.predict_grid(grids.core_grid, grids.uncore_grid)
    nc, nu = lat.shape

    def decision(i: int, j: int, feasible: bool) -> ControlDecision:
        cfg = FreqConfig(grids.core_grid[i], grids.uncore_grid[j], grids=grids)
        return ControlDecision(
            updated_budget_ms=budget_ms,
            chosen=cfg,
            predicted_latency_ms=float(lat[i, j]),
            predicted_power_w=float(pow_[i, j]),
            feasible=feasible,
        )

    under_cap = np.ones_like(lat, dtype=bool) if cap_w is None else pow_ <= cap_w
    if not under_cap.any():
        best = min(
            ((pow_[i, j], lat[i, j], i, j) for i in range(nc) for j in range(nu))
        )
        return decision(best[2], best[3], False)

    feasible_mask = under_cap & (lat <= budget_ms)
    if feasible_mask.any():
        best = min(
            (pow_[i, j], lat[i, j], grids.core_grid[i], grids.uncore_grid[j], i, j)
            for i in range(nc)
            for j in range(nu)
            if feasible_mask[i, j]
        )
        return decision(best[4], best[5], True)

    # budget unmeetable: fastest admissible config, highest frequencies on ties
    best = min(
        (lat[i, j], -grids.core_grid[i], -grids.uncore_grid[j], i, j)
        for i in range(nc)
        for j in range(nu)
        if under_cap[i, j]
    )
    return decision(best[3], best[4], False)


def pareto_frontier(
    latency_model: GreyBoxModel,
    power_model: PowerModel,
    pmcs: PmcVector,
    grids: FreqGrids,
) -> list[ControlDecision]:
    """Nondominated configs for one counter vector, fastest first.

    Built by sweeping the budget through every achievable predicted latency,
    so each frontier point is exactly what select_config returns when the
    budget equals that point's latency (latency strictly increasing, power
    strictly decreasing along the list).
    """
    lat = latency_model.predict_grid(pmcs, grids.core_grid, grids.uncore_grid)
    points: list[ControlDecision] = []
    for t in sorted(set(lat.flatten().tolist())):
        dec = select_config(latency_model, power_model, pmcs, t, grids)
        if not points or dec.chosen != points[-1].chosen:
            points.append(dec)
    return points


def on_function_boundary(
    slack_ms: float,
    nominal_budget_ms: float,
    pmcs: PmcVector,
    latency_model: GreyBoxModel,
    power_model: PowerModel,
    schedule: GainSchedule,
    grids: FreqGrids,
    cap_w: float | None = None,
) -> ControlDecision:
    """Full control step for the next stage: gain, budget update, selection.

    The gain ramp is normalized by the stage's own nominal budget, and the
    corrected budget is floored at the predicted latency of the fastest
    config so the selection is never asked for the impossible.
    """
    sched = replace(schedule, ref_budget_ms=nominal_budget_ms)
    floor = latency_model.predict(pmcs, grids.max_config)
    budget = update_budget(sched, slack_ms, nominal_budget_ms, floor_ms=floor)
    return select_config(latency_model, power_model, pmcs, budget, grids, cap_w)
