"""Evaluation metrics: set radius, pairwise Hausdorff distance, center
localization error, plus the micro-benchmark harness for the observer
sub-steps."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .intersection import Strip
from .observers import (
    NodeState,
    iv_luenberger_update,
    sm_diffusion_update,
    sm_measurement_update,
    sm_time_update,
)
from .zonotope import Zonotope, f_radius, interval_hull, vertices_2d

__all__ = [
    "RADIUS_FROBENIUS",
    "RADIUS_HALF_DIAGONAL",
    "radius",
    "hausdorff_2d",
    "SimRecord",
    "StepSummary",
    "RunSummary",
    "build_records",
    "summarize",
    "time_op",
    "bench_observer_updates",
    "BENCH_OPS",
]

RADIUS_FROBENIUS = "frobenius"
RADIUS_HALF_DIAGONAL = "half_diagonal"


def radius(z: Zonotope, kind: str = RADIUS_FROBENIUS) -> float:
    """Scalar size of an estimated set.

    ``frobenius`` (default) is the F-radius; ``half_diagonal`` is half the
    Euclidean diagonal of the interval hull. Both are monotone under
    generator removal.
    """
    if kind == RADIUS_FROBENIUS:
        return f_radius(z)
    if kind == RADIUS_HALF_DIAGONAL:
        lower, upper = interval_hull(z)
        return 0.5 * float(np.linalg.norm(upper - lower))
    raise ValueError(f"unknown radius kind {kind!r}")


def hausdorff_2d(a: Zonotope, b: Zonotope) -> float:
    """Hausdorff distance between the vertex sets of two 2-D zonotopes.

    Computed over the discrete vertex sets (not the filled polygons), which
    is the cross-node agreement measure used in the evaluation tables.
    """
    va = vertices_2d(a)
    vb = vertices_2d(b)
    d = cdist(va, vb)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True)
class SimRecord:
    """One per-step, per-node metrics row."""

    step: int
    node_id: int
    radius: float
    center_error: float
    lower: np.ndarray
    upper: np.ndarray
    step_time_us: float

    def __post_init__(self):
        if self.radius < 0 or self.center_error < 0:
            raise ValueError("radius and center error must be nonnegative")
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)


@dataclass(frozen=True)
class StepSummary:
    """Across-node statistics of one step (Hausdorff over unordered pairs;
    ``None`` when fewer than two nodes exist)."""

    step: int
    radius_mean: float
    radius_std: float
    center_error_mean: float
    center_error_std: float
    hausdorff_mean: float | None
    hausdorff_std: float | None


@dataclass(frozen=True)
class RunSummary:
    """Whole-run aggregates over steps x nodes (pairs for Hausdorff),
    excluding the burn-in steps."""

    burn_in: int
    radius_mean: float
    radius_std: float
    center_error_mean: float
    center_error_std: float
    hausdorff_mean: float | None
    hausdorff_std: float | None


def build_records(result, trajectory, radius_kind: str = RADIUS_FROBENIUS):
    """Turn a :class:`~zonodiff.network.SimulationResult` into metric rows."""
    records = []
    for k, row in enumerate(result.estimates):
        truth = trajectory.states[k]
        for i, est in enumerate(row):
            lower, upper = interval_hull(est)
            records.append(SimRecord(
                step=k,
                node_id=i,
                radius=radius(est, radius_kind),
                center_error=float(np.linalg.norm(est.center - truth)),
                lower=lower,
                upper=upper,
                step_time_us=float(result.times_us[k][i]),
            ))
    return records


def _stats(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())


def _pairwise_hausdorff(zonotopes) -> list[float]:
    verts = [vertices_2d(z) for z in zonotopes]
    out = []
    for i in range(len(verts)):
        for j in range(i + 1, len(verts)):
            d = cdist(verts[i], verts[j])
            out.append(float(max(d.min(axis=1).max(), d.min(axis=0).max())))
    return out


def summarize(records, estimates=None, burn_in: int = 5):
    """Per-step summaries plus the whole-run aggregate.

    ``estimates`` is the optional ``[step][node]`` list of zonotopes; when
    given (and 2-D with at least two nodes) pairwise Hausdorff statistics
    are included. ``burn_in`` steps are excluded from the run aggregate so
    the large initial set does not dominate.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to summarize")
    by_step: dict[int, list[SimRecord]] = {}
    for rec in records:
        by_step.setdefault(rec.step, []).append(rec)

    hausdorff_by_step: dict[int, list[float]] = {}
    if estimates is not None:
        for k, row in enumerate(estimates):
            if len(row) >= 2 and row[0].dim == 2:
                hausdorff_by_step[k] = _pairwise_hausdorff(row)

    step_summaries = []
    for k in sorted(by_step):
        rows = by_step[k]
        r_mean, r_std = _stats([r.radius for r in rows])
        c_mean, c_std = _stats([r.center_error for r in rows])
        if k in hausdorff_by_step:
            h_mean, h_std = _stats(hausdorff_by_step[k])
        else:
            h_mean = h_std = None
        step_summaries.append(StepSummary(k, r_mean, r_std, c_mean, c_std,
                                          h_mean, h_std))

    tail = [r for r in records if r.step >= burn_in]
    if not tail:
        raise ValueError("burn-in leaves no records to aggregate")
    r_mean, r_std = _stats([r.radius for r in tail])
    c_mean, c_std = _stats([r.center_error for r in tail])
    h_tail = [v for k, vals in hausdorff_by_step.items() if k >= burn_in
              for v in vals]
    if h_tail:
        h_mean, h_std = _stats(h_tail)
    else:
        h_mean = h_std = None
    run = RunSummary(burn_in, r_mean, r_std, c_mean, c_std, h_mean, h_std)
    return step_summaries, run


def time_op(op, inputs, repetitions: int) -> float:
    """Mean wall-clock microseconds of ``op(*args)`` over ``repetitions``
    calls, cycling through the pre-built ``inputs`` argument tuples."""
    repetitions = int(repetitions)
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    inputs = list(inputs)
    n = len(inputs)
    start = time.perf_counter()
    for i in range(repetitions):
        op(*inputs[i % n])
    return (time.perf_counter() - start) / repetitions * 1e6


BENCH_OPS = ("measurement", "diffusion", "time", "luenberger")


def _bench_inputs(op: str, m: int, rng: np.random.Generator, q: int,
                  n_gens: int, pool: int):
    f_matrix = np.array([[0.992, -0.1247], [0.1247, 0.992]])
    q_gens = 0.02 * np.eye(2)
    rows = (np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    def rand_zono():
        return Zonotope(rng.uniform(-10, 10, 2),
                        rng.uniform(-1.0, 1.0, (2, n_gens)))

    def rand_strips():
        return [Strip(rows[j % 2], rng.uniform(-10, 10), 0.2)
                for j in range(m)]

    out = []
    for _ in range(pool):
        if op == "measurement":
            out.append((NodeState(0, rand_zono()), rand_strips()))
        elif op == "diffusion":
            out.append(([rand_zono() for _ in range(m)], q))
        elif op == "time":
            out.append((rand_zono(), f_matrix, q_gens))
        elif op == "luenberger":
            out.append((NodeState(0, rand_zono()), rand_strips(), f_matrix,
                        q_gens, q))
        else:
            raise ValueError(f"unknown bench op {op!r}")
    return out


def bench_observer_updates(repetitions: int, k_values=(2, 4, 6), seed=0,
                           q: int = 20, n_generators: int = 20,
                           pool: int = 32) -> dict:
    """Table-shaped timing of the four observer sub-steps.

    Returns ``{op: {k: mean_us}}`` for ``op`` in :data:`BENCH_OPS`, timed on
    randomly generated zonotopes with ``n_generators`` generators and
    ``k + 1``-member neighborhoods.
    """
    ops = {
        "measurement": lambda s, strips: sm_measurement_update(s, strips),
        "diffusion": lambda sets, qq: sm_diffusion_update(sets, qq),
        "time": lambda z, f, qg: sm_time_update(z, f, qg),
        "luenberger": lambda s, strips, f, qg, qq:
            iv_luenberger_update(s, strips, f, qg, qq),
    }
    table: dict = {name: {} for name in BENCH_OPS}
    k_values = tuple(k_values)
    passes = 10 if repetitions >= 1000 else 1
    chunk = max(1, repetitions // passes)
    for op_index, name in enumerate(BENCH_OPS):
        per_k_inputs = {}
        for k in k_values:
            rng = np.random.default_rng(
                np.random.SeedSequence((seed, op_index, k)))
            per_k_inputs[k] = _bench_inputs(name, k + 1, rng, q, n_generators,
                                            pool)
            # Warm caches and CPU clocks before the measured runs.
            time_op(ops[name], per_k_inputs[k], min(200, repetitions))
        # Interleave the neighbor counts in round-robin passes so slow
        # clock drift biases every cell equally.
        totals = {k: 0.0 for k in k_values}
        counts = {k: 0 for k in k_values}
        while min(counts.values()) < repetitions:
            for k in k_values:
                n = min(chunk, repetitions - counts[k])
                if n > 0:
                    totals[k] += time_op(ops[name], per_k_inputs[k], n) * n
                    counts[k] += n
        for k in k_values:
            table[name][k] = totals[k] / counts[k]
    return table
