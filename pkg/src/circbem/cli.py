"""Batch command-line front end.

Commands
--------
solve            factorize once, sweep incidence angles, emit currents and
                 monostatic far fields (solve.csv, currents.csv)
spectrum         Fourier-ordered singular spectra of the system matrix and
                 its circle-extracted difference (spectrum.csv)
rank-sweep       skeleton ranks and solve errors over a wavenumber list at
                 fixed tolerance (rank_sweep.csv)
validate-circle  solve a circle and compare with the analytic series
bench            wall-clock timing table per phase (bench.csv)

Configuration is a JSON file plus flag overrides; every result file embeds
the resolved configuration as a header comment and runs are deterministic
for a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import solver
from .compression import rank_report, skeletonize
from .geometry import build_uniform_mesh, make_contour
from .physics import (
    MediumParameters,
    PlaneWaveExcitation,
    SurfaceCurrentSolution,
    circle_current_at_angles,
    current_l2_error,
    far_field,
    fourier_ordered_spectrum,
    spectrum_mode_maxima,
)
from .quadrature import QuadratureConfig
from .system import FREE_SPACE_IMPEDANCE, build_system

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


DEFAULT_GEOMETRY = {"kind": "ellipse", "semi_axes": [2.0, 1.0]}


@dataclass
class ExperimentConfig:
    geometry: dict = field(default_factory=lambda: dict(DEFAULT_GEOMETRY))
    k: float | None = 20.0
    k_list: list | None = None
    ppw: float = 10.0
    eps: float = 0.015
    r_max: int | None = None
    quad_order: int = 8
    singular_quad_order: int = 16
    angles_deg: list = field(default_factory=lambda: [0.0])
    seed: int | None = 0
    eta: float = FREE_SPACE_IMPEDANCE
    out: str = "results"
    threads: int | None = None

    def validate(self):
        if self.ppw < 5:
            raise ConfigError(f"ppw must be >= 5, got {self.ppw}")
        if not 0.0 < self.eps < 1.0:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        ks = self.k_list if self.k_list else ([] if self.k is None else [self.k])
        if not ks:
            raise ConfigError("a wavenumber (k or k_list) is required")
        for kk in ks:
            if kk <= 0:
                raise ConfigError(f"wavenumbers must be positive, got {kk}")
        if not self.angles_deg:
            raise ConfigError("angle list must not be empty")
        return self

    def contour(self):
        params = dict(self.geometry)
        kind = params.pop("kind", None)
        if kind is None:
            raise ConfigError("geometry requires a 'kind' entry")
        return make_contour(kind, **params)

    def mesh_size(self, k: float, curve) -> int:
        n = int(round(self.ppw * curve.perimeter * k / (2.0 * np.pi)))
        return max(n, 8)

    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(
            regular_order=self.quad_order,
            singular_gauss_order=self.singular_quad_order,
            singular_log_order=self.singular_quad_order,
        )

    def as_dict(self) -> dict:
        return {
            "geometry": self.geometry,
            "k": self.k,
            "k_list": self.k_list,
            "ppw": self.ppw,
            "eps": self.eps,
            "r_max": self.r_max,
            "quad_order": self.quad_order,
            "singular_quad_order": self.singular_quad_order,
            "angles_deg": list(self.angles_deg),
            "seed": self.seed,
            "eta": self.eta,
        }


def _parse_angles(text: str):
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"angle range must be start:stop[:step], got {text!r}")
        start, stop = float(parts[0]), float(parts[1])
        step = float(parts[2]) if len(parts) == 3 else 1.0
        if step <= 0 or stop <= start:
            raise ConfigError(f"bad angle range {text!r}")
        return list(np.arange(start, stop, step))
    return [float(v) for v in text.split(",") if v.strip()]


def load_config(path: str | None, overrides: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path:
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})"
            ) from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = set(ExperimentConfig.__dataclass_fields__)
        for key, value in raw.items():
            if key not in known:
                raise ConfigError(f"{path}: unknown config key {key!r}")
            if key == "angles_deg" and isinstance(value, dict):
                value = list(
                    np.arange(value["start"], value["stop"], value.get("step", 1.0))
                )
            setattr(cfg, key, value)
    for key in (
        "k", "ppw", "eps", "r_max", "quad_order", "seed", "eta", "out", "threads",
    ):
        val = getattr(overrides, key.replace("-", "_"), None)
        if val is not None:
            setattr(cfg, key, val)
    if getattr(overrides, "k_list", None):
        cfg.k_list = [float(v) for v in overrides.k_list.split(",")]
    if getattr(overrides, "geometry", None):
        try:
            cfg.geometry = json.loads(overrides.geometry)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--geometry: invalid JSON ({exc.msg})") from exc
    if getattr(overrides, "angles", None):
        cfg.angles_deg = _parse_angles(overrides.angles)
    return cfg.validate()


def _limit_threads(threads):
    if threads is None:
        return
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(threads)
    except ImportError:
        logger.warning("threadpoolctl not available; --threads ignored")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------
def _header(command: str, cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.as_dict(), sort_keys=True, separators=(",", ":"))
    return f"# circbem {command}\n# config: {blob}\n"


def _write_csv(path: Path, command, cfg, columns, rows):
    with open(path, "w") as f:
        f.write(_header(command, cfg))
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(
                ",".join(
                    v if isinstance(v, str) else f"{v:.12e}" for v in row
                )
                + "\n"
            )
    logger.info("wrote %s (%d rows)", path, len(rows))


def _write_summary(outdir: Path, command, cfg, payload: dict):
    data = {"command": command, "config": cfg.as_dict(), **payload}
    (outdir / "summary.json").write_text(json.dumps(data, indent=2, sort_keys=True))


def _build(cfg: ExperimentConfig, k: float):
    curve = cfg.contour()
    n = cfg.mesh_size(k, curve)
    mesh = build_uniform_mesh(curve, n)
    system = build_system(mesh, k, eta=cfg.eta, quad=cfg.quadrature())
    return system


def _factorized(cfg: ExperimentConfig, system):
    cc = system.circle_counterpart()
    ap, aH = system.difference_apply()
    floor = 1e-13 * float(np.max(np.abs(cc.symbol)))
    skel = skeletonize(
        ap, aH, system.n, eps=cfg.eps, r_max=cfg.r_max, seed=cfg.seed, floor=floor
    )
    state = solver.factorize(cc, skel)
    return state, skel


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def cmd_solve(cfg: ExperimentConfig, outdir: Path) -> int:
    k = float(cfg.k if cfg.k is not None else cfg.k_list[0])
    t0 = time.perf_counter()
    system = _build(cfg, k)
    state, skel = _factorized(cfg, system)
    setup_s = time.perf_counter() - t0
    medium = MediumParameters.free_space(k)
    angles = np.asarray(cfg.angles_deg, dtype=float)
    excs = [PlaneWaveExcitation(np.deg2rad(a), medium=medium) for a in angles]
    B = np.stack([system.assemble_rhs(e) for e in excs], axis=1)
    t1 = time.perf_counter()
    X = solver.solve_many(state, B)
    solve_s = time.perf_counter() - t1
    rows, current_rows = [], []
    for i, (ang, exc) in enumerate(zip(angles, excs)):
        x = X[:, i]
        resid = np.linalg.norm(system.apply(x) - B[:, i]) / np.linalg.norm(B[:, i])
        sol = SurfaceCurrentSolution(x, system.mesh, k, exc)
        back = far_field(sol, [np.deg2rad(ang) + np.pi])
        rows.append((ang, back.echo_width_dbm[0], resid))
        for node in range(system.n):
            current_rows.append(
                (ang, float(node), system.mesh.s[node], x[node].real, x[node].imag)
            )
    _write_csv(outdir / "solve.csv", "solve", cfg,
               ["angle_deg", "echo_width_dbm", "residual"], rows)
    _write_csv(outdir / "currents.csv", "solve", cfg,
               ["angle_deg", "node", "arclength", "re_j", "im_j"], current_rows)
    # bistatic far field for the first excitation
    obs = np.deg2rad(np.arange(0.0, 360.0, 1.0))
    ff = far_field(SurfaceCurrentSolution(X[:, 0], system.mesh, k, excs[0]), obs)
    _write_csv(outdir / "farfield.csv", "solve", cfg,
               ["angle_deg", "re", "im", "echo_width_dbm"],
               [(np.rad2deg(a), amp.real, amp.imag, db)
                for a, amp, db in zip(obs, ff.amplitude, ff.echo_width_dbm)])
    _write_csv(outdir / "retained_spectrum.csv", "solve", cfg,
               ["index", "sigma"],
               [(float(i), s) for i, s in enumerate(skel.sigmas)])
    _write_summary(outdir, "solve", cfg, {
        "n": system.n, "rank": skel.rank, "setup_s": setup_s,
        "solve_s": solve_s, "per_rhs_ms": 1e3 * solve_s / len(angles),
        "max_residual": float(max(r[2] for r in rows)),
    })
    return 0


def cmd_spectrum(cfg: ExperimentConfig, outdir: Path) -> int:
    k = float(cfg.k if cfg.k is not None else cfg.k_list[0])
    system = _build(cfg, k)
    C = system.assemble_dense()
    Cc = system.circle_counterpart().to_dense()
    modes_c, sig_c = fourier_ordered_spectrum(C)
    modes_d, sig_d = fourier_ordered_spectrum(C - Cc)
    n = system.n
    prof_c = spectrum_mode_maxima(modes_c, sig_c, n)
    prof_d = spectrum_mode_maxima(modes_d, sig_d, n)
    rows = []
    for m in range(n // 2 + 1):
        sc = "" if np.isnan(prof_c[m]) else prof_c[m]
        sd = "" if np.isnan(prof_d[m]) else prof_d[m]
        rows.append((float(m), sc, sd))
    _write_csv(outdir / "spectrum.csv", "spectrum", cfg,
               ["mode_index", "sigma_C", "sigma_CminusCc"], rows)
    _write_summary(outdir, "spectrum", cfg, {"n": n, "k": k})
    return 0


def cmd_rank_sweep(cfg: ExperimentConfig, outdir: Path) -> int:
    ks = cfg.k_list if cfg.k_list else [cfg.k]
    medium_angle = np.deg2rad(cfg.angles_deg[0])
    rows = []
    for k in ks:
        k = float(k)
        t0 = time.perf_counter()
        system = _build(cfg, k)
        state, skel = _factorized(cfg, system)
        setup_s = time.perf_counter() - t0
        exc = PlaneWaveExcitation(medium_angle, medium=MediumParameters.free_space(k))
        b = system.assemble_rhs(exc)
        n_rhs = 32
        B = np.tile(b[:, None], (1, n_rhs))
        t1 = time.perf_counter()
        X = solver.solve_many(state, B)
        per_rhs_ms = 1e3 * (time.perf_counter() - t1) / n_rhs
        x = X[:, 0]
        xd = np.linalg.solve(system.assemble_dense(), b)
        err = np.linalg.norm(x - xd) / np.linalg.norm(xd)
        rows.append((k, float(system.n), float(skel.rank), err, setup_s, per_rhs_ms))
        _write_csv(outdir / f"retained_spectrum_k{k:g}.csv", "rank-sweep", cfg,
                   ["index", "sigma"],
                   [(float(i), s) for i, s in enumerate(skel.sigmas)])
        logger.info("rank-sweep k=%g N=%d rank=%d err=%.3e", k, system.n, skel.rank, err)
    _write_csv(outdir / "rank_sweep.csv", "rank-sweep", cfg,
               ["k", "N", "rank", "rel_err_vs_dense", "setup_s", "per_rhs_ms"], rows)
    ranks = [r[2] for r in rows]
    payload = {"ranks": ranks}
    if len(rows) >= 2:
        lk = np.log([r[0] for r in rows])
        lr = np.log(ranks)
        alpha = float(np.polyfit(lk, lr, 1)[0])
        payload["alpha"] = alpha
    _write_summary(outdir, "rank-sweep", cfg, payload)
    return 0


def cmd_validate_circle(cfg: ExperimentConfig, outdir: Path) -> int:
    geometry = cfg.geometry
    if geometry.get("kind") != "circle":
        geometry = {"kind": "circle", "radius": 1.0}
        cfg.geometry = geometry
    radius = float(geometry.get("radius", 1.0))
    k = float(cfg.k if cfg.k is not None else cfg.k_list[0])
    system = _build(cfg, k)
    state, skel = _factorized(cfg, system)
    exc = PlaneWaveExcitation(
        np.deg2rad(cfg.angles_deg[0]), medium=MediumParameters.free_space(k)
    )
    b = system.assemble_rhs(exc)
    x = solver.solve(state, b)
    ref_fn = lambda s: circle_current_at_angles(radius, k, exc, s / radius)
    err = current_l2_error(x, ref_fn, system.mesh)
    ref_nodal = circle_current_at_angles(
        radius, k, exc, system.mesh.s / radius
    )
    nodal = float(np.linalg.norm(x - ref_nodal) / np.linalg.norm(ref_nodal))
    print(f"validate-circle: k={k:g} N={system.n} rank={skel.rank}")
    print(f"  relative L2(contour) error vs series: {err:.4%}")
    print(f"  nodal-sample l2 distance:             {nodal:.4%}")
    _write_summary(outdir, "validate-circle", cfg, {
        "n": system.n, "rank": skel.rank, "l2_error": err, "nodal_error": nodal,
    })
    return 0 if err <= 0.02 else 1


def cmd_bench(cfg: ExperimentConfig, outdir: Path) -> int:
    k = float(cfg.k if cfg.k is not None else cfg.k_list[0])
    timings = {}
    t0 = time.perf_counter()
    system = _build(cfg, k)
    timings["assemble_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    cc = system.circle_counterpart()
    timings["circle_ops_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    ap, aH = system.difference_apply()
    skel = skeletonize(ap, aH, system.n, eps=cfg.eps, r_max=cfg.r_max, seed=cfg.seed)
    timings["skeletonize_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    state = solver.factorize(cc, skel)
    timings["factorize_s"] = time.perf_counter() - t0
    rng = np.random.default_rng(cfg.seed or 0)
    B = rng.standard_normal((system.n, 100)) + 1j * rng.standard_normal((system.n, 100))
    t0 = time.perf_counter()
    solver.solve_many(state, B)
    timings["per_rhs_ms"] = 1e3 * (time.perf_counter() - t0) / 100
    rows = [(name, val) for name, val in timings.items()]
    _write_csv(outdir / "bench.csv", "bench", cfg, ["phase", "seconds_or_ms"], rows)
    _write_summary(outdir, "bench", cfg, {
        "n": system.n, "rank": skel.rank, **timings,
    })
    for name, val in timings.items():
        print(f"  {name:16s} {val:10.4f}")
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "spectrum": cmd_spectrum,
    "rank-sweep": cmd_rank_sweep,
    "validate-circle": cmd_validate_circle,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="circbem",
        description="Fast direct boundary-element solver for 2D TE scattering",
    )
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--geometry", help='geometry JSON, e.g. \'{"kind":"circle","radius":1}\'')
    p.add_argument("--k", type=float, help="wavenumber (1/m)")
    p.add_argument("--k-list", dest="k_list", help="comma-separated wavenumbers")
    p.add_argument("--ppw", type=float, help="points per wavelength (>= 5)")
    p.add_argument("--eps", type=float, help="compression tolerance in (0, 1)")
    p.add_argument("--r-max", dest="r_max", type=int, help="skeleton rank cap")
    p.add_argument("--angles", help="incidence angles in degrees: list a,b,c or range start:stop:step")
    p.add_argument("--quad-order", dest="quad_order", type=int, help="regular Gauss order")
    p.add_argument("--seed", type=int, help="RNG seed (fixed by default)")
    p.add_argument("--eta", type=float, help="medium impedance (ohm)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="cap BLAS/FFT worker threads")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _limit_threads(cfg.threads)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, outdir)
    except (ValueError, RuntimeError) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
