import numpy as np
import pytest

from zonodiff import Zonotope


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_zonotope(rng, dim, n_gens, scale=1.0):
    return Zonotope(rng.normal(size=dim) * scale,
                    rng.normal(size=(dim, n_gens)) * scale)


def sample_members(rng, z, count):
    """Uniform-beta member points of ``z``, shape (count, dim)."""
    betas = rng.uniform(-1.0, 1.0, (count, z.n_generators))
    return z.center + betas @ z.generators.T


def sample_vertices(rng, z, count):
    """Member points at random sign combinations (extreme points)."""
    signs = rng.choice([-1.0, 1.0], (count, z.n_generators))
    return z.center + signs @ z.generators.T


def certified_member(z, x):
    """Cheap sufficient membership test via a least-squares certificate.

    Returns True only when a coefficient vector with infinity norm <= 1
    is exhibited; may return False for boundary members, which makes it
    safe for filtering candidate points without consulting the
    implementation under test.
    """
    if z.n_generators == 0:
        return bool(np.allclose(x, z.center, atol=1e-12))
    beta, residual, *_ = np.linalg.lstsq(z.generators, np.asarray(x) - z.center,
                                         rcond=None)
    fit = z.center + z.generators @ beta
    if not np.allclose(fit, x, atol=1e-9):
        return False
    return bool(np.abs(beta).max() <= 1.0)
