"""Synchronous-round sensor network simulation.

A round has two lossless exchange phases with a barrier between them:
phase 1 delivers each node the measurement strips of its neighborhood and
every node computes its corrected set; phase 2 delivers the corrected sets
and every node fuses them (diffusion) and, for the set-membership
observer, propagates in time. Node computations within a phase are
independent, so iteration order cannot affect results.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .observers import (
    NodeState,
    ObserverConfig,
    ObserverKind,
    fuse_update,
    local_update,
)
from .zonotope import Zonotope

__all__ = [
    "Topology",
    "ring_topology",
    "topology_from_json",
    "topology_to_json",
    "RoundTrace",
    "run_round",
    "SimulationResult",
    "run_simulation",
]


@dataclass(frozen=True)
class Topology:
    """Undirected neighbor graph with self-inclusive, ordered neighborhoods."""

    n_nodes: int
    neighbors: tuple

    def __post_init__(self):
        n = int(self.n_nodes)
        if n < 1:
            raise ValueError("topology needs at least one node")
        nbrs = tuple(tuple(int(j) for j in row) for row in self.neighbors)
        if len(nbrs) != n:
            raise ValueError("one neighbor list per node is required")
        for i, row in enumerate(nbrs):
            if i not in row:
                raise ValueError(f"node {i} must be in its own neighborhood")
            if len(set(row)) != len(row):
                raise ValueError(f"node {i} has duplicate neighbors")
            for j in row:
                if not 0 <= j < n:
                    raise ValueError(f"node {i} lists invalid neighbor {j}")
                if i not in nbrs[j]:
                    raise ValueError(
                        f"adjacency must be symmetric: {i} lists {j} but not "
                        f"vice versa"
                    )
        object.__setattr__(self, "n_nodes", n)
        object.__setattr__(self, "neighbors", nbrs)

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])


def ring_topology(n: int, k_neighbors: int) -> Topology:
    """Circulant ring: node ``i`` connects to ``i +- 1 .. i +- k/2`` (mod n).

    ``k_neighbors`` must be even and below ``n``; each neighborhood then has
    ``k_neighbors + 1`` members including the node itself. Neighbor lists
    start with the node and alternate +d, -d so that relabeling by rotation
    maps lists exactly.
    """
    n = int(n)
    k = int(k_neighbors)
    if n < 1:
        raise ValueError("n must be at least 1")
    if k < 0 or k >= n:
        raise ValueError("k_neighbors must satisfy 0 <= k < n")
    if k % 2 != 0:
        raise ValueError("k_neighbors must be even")
    neighbors = []
    for i in range(n):
        row = [i]
        for d in range(1, k // 2 + 1):
            row.append((i + d) % n)
            row.append((i - d) % n)
        neighbors.append(row)
    return Topology(n, tuple(tuple(r) for r in neighbors))


def topology_to_json(topology: Topology) -> dict:
    return {"n": topology.n_nodes,
            "neighbors": [list(row) for row in topology.neighbors]}


def topology_from_json(data: dict) -> Topology:
    return Topology(int(data["n"]), tuple(tuple(r) for r in data["neighbors"]))


@dataclass(frozen=True)
class RoundTrace:
    """Delivered payloads of one round, for tests and export.

    ``strips_delivered[i]`` and ``sets_delivered[i]`` list the
    ``(source, payload)`` pairs node ``i`` received; ``round_estimates[i]``
    is the estimate node ``i`` reported this round (the fused set).
    """

    step: int
    strips_delivered: tuple
    sets_delivered: tuple
    round_estimates: tuple


def run_round(topology: Topology, node_states, measurements,
              cfg: ObserverConfig, f_matrix, q_generators,
              step_index: int = 0) -> tuple[list, RoundTrace]:
    """Execute one synchronous round and return the new node states.

    ``measurements`` holds one :class:`~zonodiff.intersection.Strip` per
    node. The result is deterministic in the inputs and independent of node
    iteration order; per-node wall time is recorded in the trace estimates
    only implicitly (callers time around this function if needed).
    """
    states = list(node_states)
    if len(states) != topology.n_nodes:
        raise ValueError("one NodeState per topology node is required")
    measurements = list(measurements)
    if len(measurements) != topology.n_nodes:
        raise ValueError("one measurement strip per node is required")

    strips_in = tuple(
        tuple((j, measurements[j]) for j in topology.neighbors[i])
        for i in range(topology.n_nodes)
    )
    # Phase 1: every node computes its corrected set from the delivered strips.
    corrected = [
        local_update(states[i], [s for _, s in strips_in[i]], cfg, f_matrix,
                     q_generators)
        for i in range(topology.n_nodes)
    ]
    # Phase 2 barrier: only now are corrected sets exchanged.
    sets_in = tuple(
        tuple((j, corrected[j]) for j in topology.neighbors[i])
        for i in range(topology.n_nodes)
    )
    new_states = []
    estimates = []
    for i in range(topology.n_nodes):
        nxt, fused = fuse_update(states[i], corrected[i], sets_in[i], cfg,
                                 f_matrix, q_generators)
        new_states.append(nxt)
        estimates.append(fused)
    trace = RoundTrace(step_index, strips_in, sets_in, tuple(estimates))
    return new_states, trace


@dataclass
class SimulationResult:
    """Per-step, per-node outputs of a full simulated run.

    ``estimates[k][i]`` is node ``i``'s estimate of the true state at step
    ``k``; ``times_us[k][i]`` is the producing round's wall time averaged
    over nodes, in microseconds (zero when timing is disabled or the
    estimate is the initial set).
    """

    estimates: list
    times_us: list


def run_simulation(model, topology: Topology, cfg: ObserverConfig,
                   trajectory, collect_timing: bool = False) -> SimulationResult:
    """Run one observer over a generated trajectory.

    Step ``k`` of the result estimates the true state ``x_k``. The
    set-membership observer's step-``k`` estimate incorporates the step-``k``
    measurements; the interval-based observer's is the carried set produced
    from measurements up to step ``k - 1`` (its combined update folds the
    propagation in, so the round consuming ``y_k`` outputs the estimate for
    step ``k + 1``).
    """
    n = topology.n_nodes
    steps = trajectory.n_steps
    states = [NodeState(i, model.initial_set) for i in range(n)]
    estimates: list = []
    times: list = []

    def round_at(k: int, current_states):
        strips = [model.strip_for(i, k, trajectory.measurements[k, i])
                  for i in range(n)]
        t0 = time.perf_counter() if collect_timing else 0.0
        new_states, trace = run_round(topology, current_states, strips, cfg,
                                      model.f_matrix, model.q_generators,
                                      step_index=k)
        elapsed = (time.perf_counter() - t0) if collect_timing else 0.0
        per_node = elapsed / n * 1e6
        return new_states, list(trace.round_estimates), [per_node] * n

    if cfg.kind is ObserverKind.SET_MEMBERSHIP:
        for k in range(steps):
            states, ests, ts = round_at(k, states)
            estimates.append(ests)
            times.append(ts)
    else:
        estimates.append([s.estimate for s in states])
        times.append([0.0] * n)
        for k in range(steps - 1):
            states, ests, ts = round_at(k, states)
            estimates.append(ests)
            times.append(ts)
    return SimulationResult(estimates, times)
