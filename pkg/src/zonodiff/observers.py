"""Per-node estimation state machines for the two distributed observers.

Both observers carry one zonotope per node between rounds. Within a round:

* set-membership: measurement update (intersect the prior with the
  neighborhood strips), diffusion update (combine the neighborhood's
  corrected sets, then reduce to ``q`` generators), time update
  (propagate through the dynamics and add process noise);
* interval-based: one combined Luenberger update (gain-corrected
  propagation through the dynamics, reduced to ``q`` generators), then the
  same diffusion combination without a separate time update.

The functions here are pure; the network module enforces the round
barriers and delivers neighborhood inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .intersection import (
    Strip,
    frobenius_optimal_gain,
    intersect_strips,
    intersect_zonotopes,
    optimal_diffusion_weights,
    optimal_strip_gain,
)
from .zonotope import Zonotope, linear_map, minkowski_sum, reduce

__all__ = [
    "ObserverKind",
    "ObserverConfig",
    "NodeState",
    "NeighborhoodInput",
    "sm_measurement_update",
    "sm_diffusion_update",
    "sm_time_update",
    "luenberger_gain",
    "iv_luenberger_update",
    "local_update",
    "fuse_update",
    "step",
]


class ObserverKind(str, Enum):
    SET_MEMBERSHIP = "sm"
    INTERVAL_BASED = "iv"


@dataclass(frozen=True)
class ObserverConfig:
    """Observer selection plus the knobs shared by both algorithms.

    ``q`` is the generator budget for the reduction operator and must be at
    least the state dimension; ``diffusion_enabled = False`` runs the
    ablation where each node keeps its own corrected set.
    """

    kind: ObserverKind = ObserverKind.SET_MEMBERSHIP
    q: int = 20
    diffusion_enabled: bool = True

    def __post_init__(self):
        if int(self.q) < 1:
            raise ValueError("q must be a positive integer")
        object.__setattr__(self, "kind", ObserverKind(self.kind))
        object.__setattr__(self, "q", int(self.q))


@dataclass(frozen=True)
class NodeState:
    """Identity plus the zonotope estimate carried between rounds."""

    node_id: int
    estimate: Zonotope


@dataclass(frozen=True)
class NeighborhoodInput:
    """Everything a node receives during one round.

    ``strips`` holds ``(source_id, Strip)`` pairs from phase 1 and
    ``shared_sets`` holds ``(source_id, Zonotope)`` pairs from phase 2; both
    include the node's own entry.
    """

    strips: tuple
    shared_sets: tuple

    def __post_init__(self):
        object.__setattr__(self, "strips", tuple(self.strips))
        object.__setattr__(self, "shared_sets", tuple(self.shared_sets))


def sm_measurement_update(state: NodeState, strips) -> Zonotope:
    """Corrected set: prior intersected with all strips at the optimal gain."""
    strips = list(strips)
    if not strips:
        raise ValueError("measurement update requires at least one strip")
    gain = optimal_strip_gain(state.estimate, strips)
    return intersect_strips(state.estimate, strips, gain)


def sm_diffusion_update(shared, q: int) -> Zonotope:
    """Combine shared corrected sets at optimal weights, then reduce to ``q``."""
    shared = list(shared)
    if not shared:
        raise ValueError("diffusion update requires at least one shared set")
    combined = intersect_zonotopes(shared, optimal_diffusion_weights(shared))
    return reduce(combined, q)


def sm_time_update(z: Zonotope, f_matrix, q_generators) -> Zonotope:
    """Propagate through the dynamics and add the process-noise zonotope."""
    noise = np.asarray(q_generators, dtype=float)
    if noise.size == 0:
        noise = noise.reshape(z.dim, 0)
    return minkowski_sum(linear_map(f_matrix, z),
                         Zonotope(np.zeros(noise.shape[0]), noise))


def luenberger_gain(prior: Zonotope, strips, f_matrix) -> tuple[np.ndarray, bool]:
    """Closed-form gain for the combined Luenberger update.

    Minimizes the F-radius of
    ``[(F - Lam Gamma) G, -lam_1 r_1, ..., -lam_m r_m, Q]`` over ``Lam``
    (the trailing noise block does not depend on the gain). Returns the
    ``n x m`` gain matrix and a flag marking a pseudo-inverse fallback.
    """
    gamma = np.vstack([s.h for s in strips])
    r = np.array([s.r for s in strips])
    return frobenius_optimal_gain(prior.generators, gamma, r,
                                  front=np.asarray(f_matrix, dtype=float))


def iv_luenberger_update(state: NodeState, strips, f_matrix, q_generators,
                         q: int) -> Zonotope:
    """One combined correct-and-propagate step of the interval-based observer.

    Output center ``(F - Lam Gamma) c + Lam y`` and generators
    ``[(F - Lam Gamma) G, -lam_1 r_1, ..., -lam_m r_m, Q]``, reduced to
    ``q`` generators. Contains ``F x + n`` for every prior member ``x``
    consistent with the strips and every process noise ``n`` bounded by the
    ``Q`` generators.
    """
    strips = list(strips)
    if not strips:
        raise ValueError("Luenberger update requires at least one strip")
    f_mat = np.asarray(f_matrix, dtype=float)
    noise = np.asarray(q_generators, dtype=float)
    if noise.size == 0:
        noise = noise.reshape(state.estimate.dim, 0)
    gamma = np.vstack([s.h for s in strips])
    if gamma.shape[1] != state.estimate.dim:
        raise ValueError("strip dimension does not match the state")
    y = np.array([s.y for s in strips])
    r = np.array([s.r for s in strips])
    lam, _ = luenberger_gain(state.estimate, strips, f_mat)
    shrink = f_mat - lam @ gamma
    center = shrink @ state.estimate.center + lam @ y
    gens = np.hstack([shrink @ state.estimate.generators,
                      -lam * r[None, :], noise])
    return reduce(Zonotope(center, gens), q)


def local_update(state: NodeState, strips, cfg: ObserverConfig, f_matrix,
                 q_generators) -> Zonotope:
    """Phase-1 computation: the set this node shares with its neighbors."""
    if cfg.q < state.estimate.dim:
        raise ValueError("q must be at least the state dimension")
    if cfg.kind is ObserverKind.SET_MEMBERSHIP:
        return sm_measurement_update(state, strips)
    return iv_luenberger_update(state, strips, f_matrix, q_generators, cfg.q)


def fuse_update(state: NodeState, own_corrected: Zonotope, shared_sets,
                cfg: ObserverConfig, f_matrix, q_generators
                ) -> tuple[NodeState, Zonotope]:
    """Phase-2 computation: diffusion (or the no-diffusion identity) plus,
    for the set-membership observer, the time update.

    ``shared_sets`` are ``(source_id, Zonotope)`` pairs including this
    node's own entry, which is replaced by ``own_corrected`` so that the
    node always fuses its freshly computed set. Returns the next carried
    state and the round's reported estimate.
    """
    if cfg.diffusion_enabled:
        ids = [nid for nid, _ in shared_sets]
        if state.node_id not in ids:
            raise ValueError("shared sets must include the node's own entry")
        sets = [own_corrected if nid == state.node_id else z
                for nid, z in shared_sets]
        # Both observers reduce the combined set to q generators. The
        # weighted concatenation spreads the Frobenius mass over many
        # near-parallel columns; carrying it unreduced both grows without
        # bound and starves the next round's gain.
        fused = sm_diffusion_update(sets, cfg.q)
    else:
        if cfg.kind is ObserverKind.SET_MEMBERSHIP:
            fused = reduce(own_corrected, cfg.q)
        else:
            fused = own_corrected  # already reduced by the Luenberger step
    if cfg.kind is ObserverKind.SET_MEMBERSHIP:
        nxt = sm_time_update(fused, f_matrix, q_generators)
    else:
        nxt = fused
    return NodeState(state.node_id, nxt), fused


def step(state: NodeState, inputs: NeighborhoodInput, cfg: ObserverConfig,
         f_matrix, q_generators) -> NodeState:
    """Full per-node round: local update on the delivered strips, then fusion
    with the delivered shared sets."""
    strips = [s for _, s in inputs.strips]
    own = local_update(state, strips, cfg, f_matrix, q_generators)
    nxt, _ = fuse_update(state, own, inputs.shared_sets, cfg, f_matrix,
                         q_generators)
    return nxt
