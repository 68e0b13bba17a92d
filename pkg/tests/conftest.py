import itertools

import numpy as np
import pytest

from fkperc.fk_core import BoundaryPartition
from fkperc.geometry import LatticeBox


def rect(w, h, corner=(0, 0)):
    return LatticeBox.from_corner(corner, (w, h))


def random_partition(box, rng):
    """A random partition of the inner boundary."""
    pts = [tuple(map(int, x)) for x in box.coords[box.boundary_mask]]
    k = int(rng.integers(1, len(pts) + 1))
    tags = rng.integers(0, k, size=len(pts))
    classes = {}
    for x, t in zip(pts, tags):
        classes.setdefault(int(t), []).append(x)
    return BoundaryPartition(box, classes.values())


def coarsen(pi, rng):
    """A partition that dominates ``pi`` (random merge of classes)."""
    cls = list(pi.classes)
    if len(cls) < 2:
        return pi
    tags = rng.integers(0, max(1, len(cls) // 2), size=len(cls))
    merged = {}
    for c, t in zip(cls, tags):
        merged.setdefault(int(t), set()).update(c)
    return BoundaryPartition(pi.box, merged.values())


def all_bits(n_edges):
    return np.array(list(itertools.product((0, 1), repeat=n_edges)), dtype=np.uint8)[:, ::-1]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
