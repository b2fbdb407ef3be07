"""Workflow DAGs: nodes, branch-conditional edges, path enumeration, catalog IO.

A workflow is a DAG with a single entry node. A node with several untagged
out-edges fans out in parallel (all arms run, downstream join waits for all of
them); a node whose out-edges carry branch tags is a conditional and exactly
one branch executes per invocation. Mixing tagged and untagged out-edges on
one node is rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class WorkflowStructureError(ValueError):
    """The workflow graph violates a structural requirement."""


_PROB_TOL = 1e-9


@dataclass(frozen=True)
class FunctionNode:
    """One function stage of a workflow."""

    id: str
    class_id: str
    nominal_budget_ms: float = 0.0
    baseline_latency_ms: float = 0.0


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    branch: str | None = None
    prob: float | None = None


@dataclass(frozen=True)
class ExecutionPath:
    """One mutually exclusive execution of a workflow.

    ``node_ids`` lists every node that runs (topological order), including all
    arms of parallel fan-outs; conditionals contribute exactly one branch.
    ``baseline_sum_ms`` is the critical span of the resolved sub-DAG: plain
    sums along sequences, max over parallel arms.
    """

    node_ids: tuple[str, ...]
    baseline_sum_ms: float = 0.0
    branch_choices: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class WorkflowSpec:
    id: str
    nodes: tuple[FunctionNode, ...]
    edges: tuple[Edge, ...]
    slo_ms: float

    _by_id: dict[str, FunctionNode] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.slo_ms <= 0:
            raise WorkflowStructureError(f"workflow {self.id}: slo_ms must be > 0")
        by_id = {}
        for node in self.nodes:
            if node.id in by_id:
                raise WorkflowStructureError(
                    f"workflow {self.id}: duplicate node id {node.id!r}"
                )
            by_id[node.id] = node
        object.__setattr__(self, "_by_id", by_id)
        for e in self.edges:
            for end in (e.src, e.dst):
                if end not in by_id:
                    raise WorkflowStructureError(
                        f"workflow {self.id}: edge references unknown node {end!r}"
                    )
        self._validate_structure()

    # -- structure ---------------------------------------------------------

    def node(self, node_id: str) -> FunctionNode:
        return self._by_id[node_id]

    def out_edges(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.src == node_id]

    def in_edges(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.dst == node_id]

    def parents(self, node_id: str) -> list[str]:
        return [e.src for e in self.in_edges(node_id)]

    @property
    def entry(self) -> str:
        roots = [n.id for n in self.nodes if not self.in_edges(n.id)]
        if len(roots) != 1:
            raise WorkflowStructureError(
                f"workflow {self.id}: expected a single entry node, found {roots}"
            )
        return roots[0]

    def is_conditional(self, node_id: str) -> bool:
        out = self.out_edges(node_id)
        return bool(out) and out[0].branch is not None

    def _validate_structure(self) -> None:
        # acyclicity via Kahn's algorithm
        indeg = {n.id: len(self.in_edges(n.id)) for n in self.nodes}
        frontier = [nid for nid, d in sorted(indeg.items()) if d == 0]
        seen = 0
        queue = list(frontier)
        while queue:
            nid = queue.pop()
            seen += 1
            for e in self.out_edges(nid):
                indeg[e.dst] -= 1
                if indeg[e.dst] == 0:
                    queue.append(e.dst)
        if seen != len(self.nodes):
            raise WorkflowStructureError(f"workflow {self.id}: cycle detected")
        _ = self.entry
        if not any(not self.out_edges(n.id) for n in self.nodes):
            raise WorkflowStructureError(f"workflow {self.id}: no sink node")
        for n in self.nodes:
            out = self.out_edges(n.id)
            tagged = [e for e in out if e.branch is not None]
            if tagged and len(tagged) != len(out):
                raise WorkflowStructureError(
                    f"workflow {self.id}: node {n.id!r} mixes branch and parallel edges"
                )
            if tagged:
                names = [e.branch for e in tagged]
                if len(set(names)) != len(names):
                    raise WorkflowStructureError(
                        f"workflow {self.id}: node {n.id!r} has duplicate branch tags"
                    )
                total = sum(e.prob if e.prob is not None else 0.0 for e in tagged)
                if any(e.prob is None for e in tagged) or abs(total - 1.0) > _PROB_TOL:
                    raise WorkflowStructureError(
                        f"workflow {self.id}: branch probabilities at {n.id!r} "
                        f"must be given and sum to 1 (got {total})"
                    )

    def topo_order(self, subset: set[str] | None = None) -> list[str]:
        ids = subset if subset is not None else {n.id for n in self.nodes}
        indeg = {
            nid: sum(1 for p in self.parents(nid) if p in ids)
            for nid in ids
        }
        ready = sorted(nid for nid, d in indeg.items() if d == 0)
        order: list[str] = []
        while ready:
            nid = ready.pop(0)
            order.append(nid)
            for e in self.out_edges(nid):
                if e.dst in ids:
                    indeg[e.dst] -= 1
                    if indeg[e.dst] == 0:
                        ready.append(e.dst)
                        ready.sort()
        return order


def _reachable(spec: WorkflowSpec, choices: dict[str, str]) -> tuple[set[str], list[str]]:
    """Nodes reachable from the entry under the given branch choices.

    Returns (reached set, conditionals reached but not yet decided). Expansion
    stops below undecided conditionals.
    """
    reached: set[str] = set()
    undecided: list[str] = []
    stack = [spec.entry]
    while stack:
        nid = stack.pop()
        if nid in reached:
            continue
        reached.add(nid)
        out = spec.out_edges(nid)
        if not out:
            continue
        if spec.is_conditional(nid):
            if nid in choices:
                chosen = [e for e in out if e.branch == choices[nid]]
                stack.extend(e.dst for e in chosen)
            else:
                undecided.append(nid)
        else:
            stack.extend(e.dst for e in out)
    return reached, sorted(undecided)


def _span_ms(spec: WorkflowSpec, active: set[str], weight: dict[str, float]) -> float:
    """Critical span of the resolved sub-DAG: longest node-weighted chain."""
    finish: dict[str, float] = {}
    for nid in spec.topo_order(active):
        start = max(
            (finish[p] for p in spec.parents(nid) if p in active), default=0.0
        )
        finish[nid] = start + weight[nid]
    return max(finish.values()) if finish else 0.0


def enumerate_paths(
    spec: WorkflowSpec, baselines: dict[str, float] | None = None
) -> list[ExecutionPath]:
    """All mutually exclusive execution paths of the workflow.

    Each conditional contributes one branch per path; parallel fan-out arms
    are all included. When ``baselines`` gives per-node latencies, each path
    carries its critical span.
    """
    weights = baselines or {n.id: n.baseline_latency_ms for n in spec.nodes}
    paths: list[ExecutionPath] = []

    def expand(choices: dict[str, str]) -> None:
        active, undecided = _reachable(spec, choices)
        if undecided:
            cond = undecided[0]
            for edge in sorted(spec.out_edges(cond), key=lambda e: e.branch or ""):
                expand({**choices, cond: edge.branch or ""})
            return
        order = tuple(spec.topo_order(active))
        span = _span_ms(spec, active, {nid: weights.get(nid, 0.0) for nid in active})
        paths.append(
            ExecutionPath(
                node_ids=order,
                baseline_sum_ms=span,
                branch_choices=tuple(sorted(choices.items())),
            )
        )

    expand({})
    return paths


def enumerate_chains(spec: WorkflowSpec) -> list[tuple[str, ...]]:
    """All root-to-sink chains, resolving both conditionals and fan-outs.

    Chains are the per-sequence feasibility unit for budgeting: along any
    chain the budgets must fit inside the SLO, whereas parallel arms of one
    path overlap in time and must not be summed together.
    """
    chains: list[tuple[str, ...]] = []

    def walk(nid: str, prefix: tuple[str, ...]) -> None:
        prefix = prefix + (nid,)
        out = spec.out_edges(nid)
        if not out:
            chains.append(prefix)
            return
        for e in sorted(out, key=lambda e: (e.branch or "", e.dst)):
            walk(e.dst, prefix)

    walk(spec.entry, ())
    return chains


def branch_probability(spec: WorkflowSpec, path: ExecutionPath) -> float:
    """Probability of one enumerated path under the declared branch odds."""
    prob = 1.0
    active = set(path.node_ids)
    for cond, branch in path.branch_choices:
        if cond not in active:
            continue
        for e in spec.out_edges(cond):
            if e.branch == branch:
                prob *= e.prob if e.prob is not None else 1.0
    return prob


# -- catalog file ----------------------------------------------------------


def load_catalog(path: str) -> list[WorkflowSpec]:
    """Read a workflow catalog JSON file."""
    with open(path) as fh:
        raw = json.load(fh)
    specs = []
    for w in raw["workflows"]:
        nodes = tuple(FunctionNode(id=n["id"], class_id=n["class_id"]) for n in w["nodes"])
        edges = tuple(
            Edge(src=e["from"], dst=e["to"], branch=e.get("branch"), prob=e.get("prob"))
            for e in w["edges"]
        )
        specs.append(WorkflowSpec(id=w["id"], nodes=nodes, edges=edges, slo_ms=w["slo_ms"]))
    return specs


def dump_catalog(specs: list[WorkflowSpec], path: str) -> None:
    raw = {
        "workflows": [
            {
                "id": s.id,
                "slo_ms": s.slo_ms,
                "nodes": [{"id": n.id, "class_id": n.class_id} for n in s.nodes],
                "edges": [
                    {
                        "from": e.src,
                        "to": e.dst,
                        **({"branch": e.branch} if e.branch is not None else {}),
                        **({"prob": e.prob} if e.prob is not None else {}),
                    }
                    for e in s.edges
                ],
            }
            for s in specs
        ]
    }
    with open(path, "w") as fh:
        json.dump(raw, fh, indent=2)
        fh.write("\n")
