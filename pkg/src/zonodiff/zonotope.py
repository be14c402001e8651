"""Zonotope set representation and the exact / over-approximating operations on it.

A zonotope ``Z = <c, G>`` is the set ``{c + G @ b : b in [-1, 1]^e}`` with
center ``c`` (length ``n``) and generator matrix ``G`` (``n x e``). Zonotopes
are closed under linear maps and Minkowski sums, which makes them the working
set representation for every estimation step in this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "Zonotope",
    "minkowski_sum",
    "linear_map",
    "f_radius",
    "reduce",
    "interval_hull",
    "contains_point",
    "vertices_2d",
]


def _finite_array(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


@dataclass(frozen=True)
class Zonotope:
    """Immutable zonotope ``<center, generators>``.

    ``center`` is a length-``n`` vector and ``generators`` an ``n x e`` matrix
    whose columns are the generators. ``e = 0`` is legal and denotes a point
    set. Arrays are copied and frozen at construction, so instances are safe
    to share across threads.
    """

    center: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        c = _finite_array(self.center, "center").reshape(-1)
        g = _finite_array(self.generators, "generators")
        if g.size == 0:
            g = g.reshape(c.shape[0], 0)
        if g.ndim != 2:
            raise ValueError("generators must be a 2-D matrix (n x e)")
        if g.shape[0] != c.shape[0]:
            raise ValueError(
                f"center has dimension {c.shape[0]} but generators have "
                f"{g.shape[0]} rows"
            )
        c.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", g)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def n_generators(self) -> int:
        return self.generators.shape[1]

    @classmethod
    def point(cls, center) -> "Zonotope":
        """Zonotope with no generators (a single point)."""
        c = np.atleast_1d(np.asarray(center, dtype=float))
        return cls(c, np.zeros((c.shape[0], 0)))

    def to_json_dict(self) -> dict:
        """JSON-serializable form: {"center": [...], "generators": [[...]]}.

        ``generators`` is a list of ``n`` rows of length ``e``.
        """
        return {
            "center": self.center.tolist(),
            "generators": self.generators.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Zonotope":
        return cls(np.asarray(data["center"], dtype=float),
                   np.asarray(data["generators"], dtype=float))


def minkowski_sum(a: Zonotope, b: Zonotope) -> Zonotope:
    """Exact Minkowski sum ``<c1 + c2, [G1, G2]>``."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return Zonotope(a.center + b.center,
                    np.hstack([a.generators, b.generators]))


def linear_map(matrix, z: Zonotope) -> Zonotope:
    """Exact image ``L Z = <L c, L G>`` under the linear map ``matrix``."""
    mat = np.atleast_2d(np.asarray(matrix, dtype=float))
    if mat.shape[1] != z.dim:
        raise ValueError(
            f"map has {mat.shape[1]} columns but zonotope has dimension {z.dim}"
        )
    return Zonotope(mat @ z.center, mat @ z.generators)


def f_radius(z: Zonotope) -> float:
    """Frobenius norm of the generator matrix (the F-radius size proxy)."""
    return float(np.linalg.norm(z.generators))


def reduce(z: Zonotope, q: int) -> Zonotope:
    """Over-approximate ``z`` by a zonotope with at most ``q`` generators.

    Girard-style reduction: the ``q - n`` generators with the largest
    ``||g||_1 - ||g||_inf`` score are kept verbatim; the remainder is boxed
    into at most ``n`` axis-aligned generators (the interval hull of their
    partial sum). If ``z`` already has at most ``q`` generators it is
    returned unchanged; zero generator columns are dropped only when a
    reduction actually happens.
    """
    n = z.dim
    q = int(q)
    if q < n:
        raise ValueError(f"q = {q} must be at least the dimension n = {n}")
    if z.n_generators <= q:
        return z
    gens = z.generators
    gens = gens[:, np.any(gens != 0.0, axis=0)]
    e = gens.shape[1]
    if e <= q:
        return Zonotope(z.center, gens)
    score = np.abs(gens).sum(axis=0) - np.abs(gens).max(axis=0)
    order = np.argsort(-score, kind="stable")
    kept = gens[:, order[: q - n]]
    boxed = gens[:, order[q - n:]]
    box = np.diag(np.abs(boxed).sum(axis=1))
    box = box[:, np.any(box != 0.0, axis=0)]
    return Zonotope(z.center, np.hstack([kept, box]))


def interval_hull(z: Zonotope) -> tuple[np.ndarray, np.ndarray]:
    """Tightest axis-aligned box containing ``z`` as ``(lower, upper)``."""
    spread = np.abs(z.generators).sum(axis=1)
    return z.center - spread, z.center + spread


def _contains_lp(gens: np.ndarray, d: np.ndarray, tol: float) -> bool:
    # Feasibility of G b = d with ||b||_inf <= 1 + tol, via min ||b||_inf.
    n, e = gens.shape
    cost = np.zeros(e + 1)
    cost[-1] = 1.0
    a_eq = np.hstack([gens, np.zeros((n, 1))])
    eye = np.eye(e)
    ones = np.ones((e, 1))
    a_ub = np.vstack([np.hstack([eye, -ones]), np.hstack([-eye, -ones])])
    b_ub = np.zeros(2 * e)
    bounds = [(None, None)] * e + [(0.0, None)]
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=d,
                  bounds=bounds, method="highs")
    if not res.success:
        return False
    return bool(res.x[-1] <= 1.0 + tol)


def contains_point(z: Zonotope, x, tol: float = 1e-9) -> bool:
    """Membership test: is there a ``b`` in ``[-1-tol, 1+tol]^e`` with ``c + G b = x``?

    For full-rank 2-D zonotopes the test uses the facet normals of the
    zonogon (each facet is parallel to a generator), which is exact and
    cheap. All other cases go through a small linear program minimizing
    ``||b||_inf`` subject to ``G b = x - c``.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    point = np.asarray(x, dtype=float).reshape(-1)
    if point.shape[0] != z.dim:
        raise ValueError(
            f"point has dimension {point.shape[0]} but zonotope has {z.dim}"
        )
    d = point - z.center
    gens = z.generators
    e = gens.shape[1]
    if e == 0:
        scale = max(1.0, float(np.max(np.abs(z.center), initial=0.0)))
        return bool(np.max(np.abs(d), initial=0.0) <= tol * scale)
    if z.dim == 1:
        # A 1-D zonotope is exactly the interval of its hull.
        return bool(abs(d[0]) <= (1.0 + tol) * np.abs(gens).sum())
    if z.dim == 2 and e >= 2:
        sv = np.linalg.svd(gens, compute_uv=False)
        if sv[0] > 0.0 and sv[1] > 1e-12 * sv[0]:
            # Support test over the zonogon facet normals (perp of each generator).
            normals = np.column_stack([-gens[1], gens[0]])
            lhs = np.abs(normals @ d)
            rhs = np.abs(normals @ gens).sum(axis=1)
            return bool(np.all(lhs <= (1.0 + tol) * rhs))
    return _contains_lp(gens, d, tol)


def _merge_collinear(gens: np.ndarray) -> np.ndarray:
    # Flip generators into the upper half-plane, sort by angle, merge
    # (numerically) parallel neighbors so the boundary walk emits no
    # duplicate vertices.
    flip = (gens[1] < 0) | ((gens[1] == 0) & (gens[0] < 0))
    gens = gens * np.where(flip, -1.0, 1.0)
    angles = np.arctan2(gens[1], gens[0])
    order = np.argsort(angles, kind="stable")
    gens = gens[:, order]
    merged = [gens[:, 0].copy()]
    for j in range(1, gens.shape[1]):
        g = gens[:, j]
        last = merged[-1]
        cross = last[0] * g[1] - last[1] * g[0]
        if abs(cross) <= 1e-14 * np.linalg.norm(last) * np.linalg.norm(g):
            merged[-1] = last + g
        else:
            merged.append(g.copy())
    return np.column_stack(merged)


def vertices_2d(z: Zonotope) -> np.ndarray:
    """Counter-clockwise vertices of a 2-D zonotope (zonogon).

    Returns an array of shape ``(V, 2)``. Collinear generators are merged
    before the angular boundary walk; rank-1 inputs give the 2 endpoints of
    the degenerate segment, a point set gives a single vertex.
    """
    if z.dim != 2:
        raise ValueError(f"vertex enumeration requires dimension 2, got {z.dim}")
    gens = z.generators[:, np.any(z.generators != 0.0, axis=0)]
    if gens.shape[1] == 0:
        return z.center.reshape(1, 2).copy()
    gens = _merge_collinear(gens)
    m = gens.shape[1]
    verts = np.empty((2 * m, 2))
    v = z.center - gens.sum(axis=1)
    verts[0] = v
    for j in range(m):
        v = v + 2.0 * gens[:, j]
        verts[j + 1] = v
    # Remaining vertices by central symmetry about the center.
    for j in range(1, m):
        verts[m + j] = 2.0 * z.center - verts[j]
    if m == 1:
        return verts[:2]
    return verts
