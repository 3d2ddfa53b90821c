"""Dev check: engine element-pair blocks vs adaptive nested quadrature."""
import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from circbem.geometry import Circle, Ellipse, build_uniform_mesh
from circbem.bem import element_pair_integral
from circbem.quadrature import QuadratureConfig
from circbem.specfun import hankel1


class FastGeom:
    """Periodic spline tabulation of position/tangent/normal vs arclength."""

    def __init__(self, geom, npts=20000):
        L = geom.perimeter
        s = np.linspace(0, L, npts + 1)
        p = geom.position(s[:-1])
        p = np.vstack([p, p[:1]])
        self.sx = CubicSpline(s, p[:, 0], bc_type="periodic")
        self.sy = CubicSpline(s, p[:, 1], bc_type="periodic")
        self.L = L

    def frame(self, s):
        s = np.mod(s, self.L)
        x = np.array([self.sx(s), self.sy(s)])
        t = np.array([self.sx(s, 1), self.sy(s, 1)])
        t /= np.hypot(t[0], t[1])
        n = np.array([t[1], -t[0]])
        return x, t, n


def oracle_block(kind, mesh, p, q, k, fg):
    h = mesh.h
    sp, sq = mesh.s[p], mesh.s[q]
    blocks = np.zeros((2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            def f(u, v):
                x, tx, nx = fg.frame(sp + h * u)
                y, ty, ny = fg.frame(sq + h * v)
                d = np.hypot(x[0] - y[0], x[1] - y[1])
                pa = (1 - u, u)[a]
                pb = (1 - v, v)[b]
                if kind == "single_layer":
                    return 0.25j * hankel1(0, k * d) * pa * pb * h * h
                if kind == "double_layer":
                    rd = (x[0] - y[0]) * ny[0] + (x[1] - y[1]) * ny[1]
                    return 0.25j * k * hankel1(1, k * d) * rd / d * pa * pb * h * h
                da = (-1 / h, 1 / h)[a]
                db = (-1 / h, 1 / h)[b]
                tt = tx[0] * ty[0] + tx[1] * ty[1]
                return 0.25j * hankel1(0, k * d) * (da * db - k * k * tt * pa * pb) * h * h

            def inner(u, part):
                if p == q:
                    pts = [u] if 0 < u < 1 else None
                elif (q - p) % mesh.n == 1 and u > 0.999999:
                    pts = None
                else:
                    pts = None
                fn = lambda v: getattr(f(u, v), part)
                val, _ = quad(fn, 0, 1, points=pts, limit=120, epsabs=1e-12, epsrel=1e-11)
                return val

            re, _ = quad(lambda u: inner(u, "real"), 0, 1, limit=120, epsabs=1e-11, epsrel=1e-10)
            im, _ = quad(lambda u: inner(u, "imag"), 0, 1, limit=120, epsabs=1e-11, epsrel=1e-10)
            blocks[a, b] = re + 1j * im
    return blocks


quadcfg = QuadratureConfig()
for geom_name, mesh, k in (
    ("circle", build_uniform_mesh(Circle(1.0), 16), 2.0),
    ("ellipse", build_uniform_mesh(Ellipse(2.0, 1.0), 16), 1.5 + 0.4j),
):
    fg = FastGeom(mesh.geometry)
    for kind in ("single_layer", "double_layer", "hypersingular"):
        for (p, q) in ((3, 3), (3, 4), (4, 3), (3, 8)):
            mine = element_pair_integral(kind, mesh, p, q, k, quadcfg)
            ref = oracle_block(kind, mesh, p, q, k, fg)
            scale = max(np.max(np.abs(ref)), 1e-30)
            err = np.max(np.abs(mine - ref)) / scale
            flag = "" if err < 1e-8 else "   <<< FAIL"
            print(f"{geom_name:7s} {kind:14s} pair ({p},{q}): rel err {err:.2e}{flag}", flush=True)
