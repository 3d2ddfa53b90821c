import numpy as np
import pytest

from circbem.compression import skeletonize
from circbem.geometry import Circle, Ellipse, build_uniform_mesh
from circbem.system import build_system

GEOMETRIES = {
    "ellipse21": lambda: Ellipse(2.0, 1.0),
    "circle1": lambda: Circle(1.0),
}


class SystemCache:
    """Session-wide memo for assembled systems; the heavy tests share k/N."""

    def __init__(self):
        self._geoms = {}
        self._systems = {}
        self._skeletons = {}

    def geometry(self, name):
        if name not in self._geoms:
            self._geoms[name] = GEOMETRIES[name]()
        return self._geoms[name]

    @staticmethod
    def mesh_size(curve, k, ppw):
        return max(int(round(ppw * curve.perimeter * k / (2.0 * np.pi))), 8)

    def system(self, name, k, ppw=10.0):
        key = (name, float(k), float(ppw))
        if key not in self._systems:
            curve = self.geometry(name)
            mesh = build_uniform_mesh(curve, self.mesh_size(curve, k, ppw))
            self._systems[key] = build_system(mesh, float(k))
        return self._systems[key]

    def dense(self, name, k, ppw=10.0):
        return self.system(name, k, ppw).assemble_dense()

    def skeleton(self, name, k, ppw, eps):
        key = (name, float(k), float(ppw), float(eps))
        if key not in self._skeletons:
            system = self.system(name, k, ppw)
            ap, aH = system.difference_apply()
            floor = 1e-13 * float(
                np.max(np.abs(system.circle_counterpart().symbol))
            )
            self._skeletons[key] = skeletonize(
                ap, aH, system.n, eps=float(eps), seed=0, floor=floor
            )
        return self._skeletons[key]


@pytest.fixture(scope="session")
def cache():
    return SystemCache()
