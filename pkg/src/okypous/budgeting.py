"""Pre-deployment latency budgeting and runtime slack accounting.

The end-to-end SLO is projected onto per-function nominal budgets before any
traffic runs. The critical path is the mutually exclusive path with the
highest cumulative best-case latency; any SLO surplus beyond it is spent
greedily on the frequency steps that buy the most predicted power reduction
per millisecond of added latency. At runtime the only state carried across
stages is the cumulative (target, observed, slack) triple.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .controller import ControlDecision, pareto_frontier
from .frequency import FreqConfig, FreqGrids
from .latency_model import GreyBoxModel, PmcVector
from .power_model import PowerModel
from .workflow import ExecutionPath, WorkflowSpec, enumerate_chains, enumerate_paths

_TOL = 1e-6


class MissingBaselineError(ValueError):
    pass


class InfeasibleSLOError(ValueError):
    """The SLO is below the critical-path best-case latency."""


@dataclass(frozen=True)
class NodeProfile:
    """Isolated max-frequency profile of one node: latency plus counters."""

    baseline_latency_ms: float
    pmcs: PmcVector


@dataclass(frozen=True)
class SlackState:
    """Cumulative budget/observation bookkeeping for one in-flight invocation."""

    cumulative_target_ms: float = 0.0
    cumulative_observed_ms: float = 0.0
    slack_ms: float = 0.0
    stage: int = 0


def advance_slack(
    state: SlackState, observed_latency_ms: float, nominal_budget_ms: float
) -> SlackState:
    if observed_latency_ms < 0:
        raise ValueError("observed latency must be nonnegative")
    target = state.cumulative_target_ms + nominal_budget_ms
    observed = state.cumulative_observed_ms + observed_latency_ms
    return SlackState(
        cumulative_target_ms=target,
        cumulative_observed_ms=observed,
        slack_ms=target - observed,
        stage=state.stage + 1,
    )


def compute_critical_path(
    spec: WorkflowSpec, baselines: dict[str, float]
) -> tuple[ExecutionPath, float]:
    """Path with the highest cumulative baseline latency, and that latency."""
    for node in spec.nodes:
        if node.id not in baselines:
            raise MissingBaselineError(f"no baseline latency for node {node.id!r}")
    paths = enumerate_paths(spec, baselines)
    best = max(paths, key=lambda p: p.baseline_sum_ms)
    return best, best.baseline_sum_ms


@dataclass(frozen=True)
class BudgetPlan:
    workflow_id: str
    slo_ms: float
    budgets_ms: dict[str, float]
    configs: dict[str, FreqConfig]
    critical_path: ExecutionPath
    cp_ms: float

    def to_dict(self) -> dict:
        return {
            "workflow_id": self.workflow_id,
            "slo_ms": self.slo_ms,
            "cp_ms": self.cp_ms,
            "critical_path": list(self.critical_path.node_ids),
            "budgets_ms": {k: self.budgets_ms[k] for k in sorted(self.budgets_ms)},
            "configs": {
                k: [self.configs[k].core_ghz, self.configs[k].uncore_ghz]
                for k in sorted(self.configs)
            },
        }

    def dump(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def _chain_budgets(
    chain: tuple[str, ...],
    slo_ms: float,
    baselines: dict[str, float],
    frontiers: dict[str, list[ControlDecision]],
) -> dict[str, tuple[float, FreqConfig]]:
    """Greedy budget split for one chain; returns per-node (budget, config).

    Every node starts at the cheapest frontier point that is still at or below
    its baseline latency (those steps cost no budget). Remaining SLO surplus is
    then granted to whichever node's next frontier step buys the largest power
    drop per millisecond of added latency, until nothing affordable is left.
    """
    pos: dict[str, int] = {}
    for nid in chain:
        frontier = frontiers[nid]
        p = 0
        while (
            p + 1 < len(frontier)
            and frontier[p + 1].predicted_latency_ms <= baselines[nid] + _TOL
        ):
            p += 1
        pos[nid] = p

    def headroom(nid: str, p: int) -> float:
        lat = frontiers[nid][p].predicted_latency_ms
        return max(0.0, lat - baselines[nid])

    spent = sum(headroom(nid, pos[nid]) for nid in chain)
    surplus = slo_ms - sum(baselines[nid] for nid in chain) - spent
    if surplus < 0:
        # model predictions overshoot the baselines and the SLO is tight:
        # fall back to baseline budgets at the starting configs
        return {
            nid: (baselines[nid], frontiers[nid][pos[nid]].chosen) for nid in chain
        }

    while True:
        best_ratio, best_idx, best_cost = 0.0, None, 0.0
        for idx, nid in enumerate(chain):
            frontier, p = frontiers[nid], pos[nid]
            if p + 1 >= len(frontier):
                continue
            cost = headroom(nid, p + 1) - headroom(nid, p)
            if cost <= 0 or cost > surplus + _TOL:
                continue
            drop = (
                frontier[p].predicted_power_w - frontier[p + 1].predicted_power_w
            )
            ratio = drop / cost
            if ratio > best_ratio + _TOL:
                best_ratio, best_idx, best_cost = ratio, idx, cost
        if best_idx is None:
            break
        nid = chain[best_idx]
        pos[nid] += 1
        surplus -= best_cost

    return {
        nid: (
            baselines[nid] + headroom(nid, pos[nid]),
            frontiers[nid][pos[nid]].chosen,
        )
        for nid in chain
    }


def assign_budgets(
    spec: WorkflowSpec,
    profiles: dict[str, NodeProfile],
    slo_ms: float,
    latency_model: GreyBoxModel,
    power_model: PowerModel,
    grids: FreqGrids,
) -> BudgetPlan:
    """Nominal per-function budgets satisfying the SLO along every chain.

    Budgets are computed independently per root-to-sink chain (parallel arms
    of one path overlap in time and must not share a sequential budget), and
    a node appearing on several chains takes the tightest of its candidates.
    """
    baselines = {}
    for node in spec.nodes:
        if node.id not in profiles:
            raise MissingBaselineError(f"no profile for node {node.id!r}")
        baselines[node.id] = profiles[node.id].baseline_latency_ms
    cp, cp_ms = compute_critical_path(spec, baselines)
    if slo_ms < cp_ms - _TOL:
        raise InfeasibleSLOError(
            f"workflow {spec.id}: SLO {slo_ms}ms is below the "
            f"critical-path baseline {cp_ms}ms"
        )

    frontiers = {
        node.id: pareto_frontier(
            latency_model, power_model, profiles[node.id].pmcs, grids
        )
        for node in spec.nodes
    }

    budgets: dict[str, float] = {}
    configs: dict[str, FreqConfig] = {}
    for chain in enumerate_chains(spec):
        for nid, (budget, cfg) in _chain_budgets(
            chain, slo_ms, baselines, frontiers
        ).items():
            if nid not in budgets or budget < budgets[nid] - _TOL:
                budgets[nid] = budget
                configs[nid] = cfg

    for chain in enumerate_chains(spec):
        total = sum(budgets[nid] for nid in chain)
        if total > slo_ms + _TOL:
            raise AssertionError(
                f"workflow {spec.id}: chain {chain} budgets {total} exceed SLO"
            )

    return BudgetPlan(
        workflow_id=spec.id,
        slo_ms=slo_ms,
        budgets_ms=budgets,
        configs=configs,
        critical_path=cp,
        cp_ms=cp_ms,
    )


def equal_split_budgets(spec: WorkflowSpec, baselines: dict[str, float]) -> dict[str, float]:
    """Equal per-stage division of the SLO along each chain, tightest across chains.

    Deliberately ignores per-function cost; used to exercise recovery from
    skewed nominal budgets.
    """
    budgets: dict[str, float] = {}
    for chain in enumerate_chains(spec):
        share = spec.slo_ms / len(chain)
        for nid in chain:
            budgets[nid] = min(budgets.get(nid, share), share)
    return budgets
