import numpy as np
import pytest

from rigidalign import Matching, RigidGraph


def random_rotation(rng, dim=3):
    """Random proper rotation via QR of a Gaussian matrix."""
    m = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_graph(rng, n, p=0.3, dim=3, scale=3.0):
    """G(n, p) topology with uniform random coordinates."""
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < p
    edges = np.column_stack([iu[mask], ju[mask]])
    return RigidGraph(rng.random((n, dim)) * scale, edges)


def permute_graph(g, perm):
    """Relabel nodes by perm (old index u becomes perm[u]); returns (graph, truth)."""
    perm = np.asarray(perm)
    coords = np.empty_like(g.coords)
    coords[perm] = g.coords
    edges = perm[g.edges] if g.edges.size else g.edges
    truth = Matching(np.column_stack([np.arange(g.n), perm]))
    return RigidGraph(coords, edges), truth


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
