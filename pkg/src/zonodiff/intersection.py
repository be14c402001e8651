"""Over-approximating intersections used by the observers.

Two primitives live here:

* strips-with-zonotope: intersect a zonotope with a family of measurement
  strips ``|h x - y| <= r`` and over-approximate the result by a zonotope
  parameterized by per-strip gain vectors;
* zonotopes-with-zonotopes: the diffusion combination, a weighted
  center/generator average that over-approximates the common intersection
  of a family of zonotopes.

Both come with the closed-form parameter choice that minimizes the
Frobenius norm (F-radius) of the resulting generator matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .zonotope import Zonotope

__all__ = [
    "Strip",
    "StripIntersectionGain",
    "DiffusionWeights",
    "intersect_strips",
    "optimal_strip_gain",
    "frobenius_optimal_gain",
    "intersect_zonotopes",
    "optimal_diffusion_weights",
]

# Conditioning threshold beyond which the gain solve falls back to a
# pseudo-inverse (redundant strips / point priors make the normal matrix
# effectively singular).
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class Strip:
    """Scalar measurement constraint ``{x : |h . x - y| <= r}``.

    ``h`` is the measurement row (stored as a length-``n`` vector), ``y``
    the observed value and ``r > 0`` the noise bound.
    """

    h: np.ndarray
    y: float
    r: float

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).reshape(-1)
        if not np.all(np.isfinite(h)) or not np.any(h != 0.0):
            raise ValueError("strip direction h must be finite and nonzero")
        y = float(self.y)
        r = float(self.r)
        if not np.isfinite(y) or not np.isfinite(r):
            raise ValueError("strip y and r must be finite")
        if r <= 0.0:
            raise ValueError("strip half-width r must be positive")
        h.flags.writeable = False
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "r", r)

    @property
    def dim(self) -> int:
        return self.h.shape[0]

    def contains(self, x, slack: float = 0.0) -> bool:
        """True if ``x`` satisfies the strip constraint (with optional slack)."""
        return bool(abs(float(self.h @ np.asarray(x, dtype=float)) - self.y)
                    <= self.r * (1.0 + slack))


@dataclass(frozen=True)
class StripIntersectionGain:
    """Per-strip gain vectors, stored as the ``n x m`` matrix whose columns
    are the gains (column ``j`` multiplies the innovation of strip ``j``).

    ``used_pseudo_inverse`` flags that the optimal-gain solve hit an
    ill-conditioned normal matrix and fell back to a pseudo-inverse.
    """

    lambdas: np.ndarray
    used_pseudo_inverse: bool = False

    def __post_init__(self):
        lam = np.atleast_2d(np.asarray(self.lambdas, dtype=float))
        if not np.all(np.isfinite(lam)):
            raise ValueError("gain entries must be finite")
        lam.flags.writeable = False
        object.__setattr__(self, "lambdas", lam)

    @property
    def n_strips(self) -> int:
        return self.lambdas.shape[1]


@dataclass(frozen=True)
class DiffusionWeights:
    """Scalar weights for the diffusion combination.

    The weights may be arbitrary finite reals as long as they do not sum to
    zero; the optimal-weight solver returns weights normalized to sum 1.
    """

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).reshape(-1)
        if w.size == 0:
            raise ValueError("weights must be nonempty")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if abs(w.sum()) <= 1e-15 * max(1.0, np.abs(w).sum()):
            raise ValueError("weights must not sum to zero")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)


def _stack_strips(strips) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gamma = np.vstack([s.h for s in strips])
    y = np.array([s.y for s in strips])
    r = np.array([s.r for s in strips])
    return gamma, y, r


def intersect_strips(z: Zonotope, strips, gain: StripIntersectionGain) -> Zonotope:
    """Zonotope over-approximation of ``z`` intersected with all ``strips``.

    With gains ``lam_j`` the result is
    ``c' = c + sum_j lam_j (y_j - h_j c)`` and
    ``G' = [(I - sum_j lam_j h_j) G, lam_1 r_1, ..., lam_m r_m]``,
    which contains the true intersection for every gain choice.
    """
    strips = list(strips)
    if not strips:
        raise ValueError("at least one strip is required")
    gamma, y, r = _stack_strips(strips)
    if gamma.shape[1] != z.dim:
        raise ValueError("strip dimension does not match the zonotope")
    lam = gain.lambdas
    if lam.shape != (z.dim, len(strips)):
        raise ValueError(
            f"gain shape {lam.shape} does not match (n, m) = ({z.dim}, {len(strips)})"
        )
    shrink = np.eye(z.dim) - lam @ gamma
    center = z.center + lam @ (y - gamma @ z.center)
    gens = np.hstack([shrink @ z.generators, lam * r[None, :]])
    return Zonotope(center, gens)


def frobenius_optimal_gain(prior_generators: np.ndarray, gamma: np.ndarray,
                           r: np.ndarray, front=None) -> tuple[np.ndarray, bool]:
    """Gain matrix minimizing the squared F-radius of the corrected generator
    matrix ``[(front - Lam Gamma) G, lam_1 r_1, ..., lam_m r_m]``.

    Setting the gradient of the trace form to zero gives the normal
    equations ``Lam (Gamma G G' Gamma' + diag(r^2)) = front G G' Gamma'``,
    solved symmetrically; an ill-conditioned normal matrix triggers a
    pseudo-inverse fallback, reported in the second return value.

    ``front`` defaults to the identity (the pure measurement update); the
    Luenberger update passes the state matrix.
    """
    gens = np.asarray(prior_generators, dtype=float)
    n = gens.shape[0]
    front = np.eye(n) if front is None else np.asarray(front, dtype=float)
    gg = gens @ gens.T
    normal = gamma @ gg @ gamma.T + np.diag(np.asarray(r, dtype=float) ** 2)
    rhs = gamma @ gg @ front.T  # transpose of the numerator
    cond = np.linalg.cond(normal)
    if np.isfinite(cond) and cond < _COND_LIMIT:
        try:
            lam = scipy.linalg.solve(normal, rhs, assume_a="pos").T
            return lam, False
        except np.linalg.LinAlgError:
            pass
    return (front @ gg @ gamma.T) @ np.linalg.pinv(normal), True


def optimal_strip_gain(z: Zonotope, strips) -> StripIntersectionGain:
    """F-radius-minimizing gains for :func:`intersect_strips`.

    For a point prior (no generators) the gain is zero: the measurement
    cannot shrink a point.
    """
    strips = list(strips)
    if not strips:
        raise ValueError("at least one strip is required")
    gamma, _, r = _stack_strips(strips)
    if gamma.shape[1] != z.dim:
        raise ValueError("strip dimension does not match the zonotope")
    lam, fallback = frobenius_optimal_gain(z.generators, gamma, r)
    return StripIntersectionGain(lam, fallback)


def intersect_zonotopes(zs, weights: DiffusionWeights) -> Zonotope:
    """Weighted combination over-approximating the intersection of ``zs``.

    ``c' = (sum_j w_j c_j) / (sum_j w_j)`` and
    ``G' = [w_1 G_1, ..., w_m G_m] / (sum_j w_j)``. Sound for any weights
    with nonzero sum; cost is linear in the total generator count
    (O(n * sum_j e_j)).
    """
    zs = list(zs)
    if not zs:
        raise ValueError("at least one zonotope is required")
    w = weights.w
    if w.shape[0] != len(zs):
        raise ValueError(f"{w.shape[0]} weights for {len(zs)} zonotopes")
    dim = zs[0].dim
    if any(z.dim != dim for z in zs):
        raise ValueError("all zonotopes must share one dimension")
    total = w.sum()
    center = sum(wj * z.center for wj, z in zip(w, zs)) / total
    gens = np.hstack([wj * z.generators for wj, z in zip(w, zs)]) / total
    return Zonotope(center, gens)


def optimal_diffusion_weights(zs) -> DiffusionWeights:
    """Weights minimizing the F-radius of :func:`intersect_zonotopes`.

    With ``beta_j = ||G_j||_F^2`` the minimizer of
    ``sum_j beta_j w_j^2`` subject to ``sum_j w_j = 1`` is
    ``w_j = 1 / (beta_j * sum_r 1/beta_r)``. Point sets (``beta = 0``) pin
    the result: all weight is split uniformly over them.
    """
    zs = list(zs)
    if not zs:
        raise ValueError("at least one zonotope is required")
    beta = np.array([float(np.sum(z.generators ** 2)) for z in zs])
    w = np.zeros(len(zs))
    degenerate = beta == 0.0
    if degenerate.any():
        w[degenerate] = 1.0 / degenerate.sum()
    else:
        inv = 1.0 / beta
        w = inv / inv.sum()
    return DiffusionWeights(w)
