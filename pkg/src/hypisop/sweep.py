"""Sweep driver: V x A tables, isoperimetric curve, turning points, gaps.

A sweep evolves one candidate family over a grid of shape parameters and
records (volume, area) pairs plus run diagnostics.  Records are written to
CSV with a fixed column order so downstream tooling can rely on the schema.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import dblquad

from hypisop import candidates as cand
from hypisop import evolve as ev
from hypisop import functionals as fn
from hypisop import geometry as geo

log = logging.getLogger(__name__)

CSV_HEADER = [
    "case", "epsilon", "volume_target", "volume", "area",
    "facets", "iterations", "status", "ortho_deficit",
]


@dataclass
class SweepRecord:
    case: str
    epsilon: float
    volume_target: float
    volume: float
    area: float
    facets: int
    iterations: int
    status: str
    ortho_deficit: float

    def row(self) -> list:
        return [
            self.case,
            repr(float(self.epsilon)),
            repr(float(self.volume_target)),
            repr(float(self.volume)),
            repr(float(self.area)),
            str(self.facets),
            str(self.iterations),
            self.status,
            repr(float(self.ortho_deficit)),
        ]


def run_sweep(case: str, eps_values, config: ev.EvolveConfig | None = None,
              resolution: int | None = None) -> list[SweepRecord]:
    """Evolve one family over a parameter grid; keep failures as records."""
    eps_values = list(eps_values)
    if not eps_values:
        raise ValueError("empty parameter grid")
    lo, hi = cand.admissible_range(case)
    records = []
    for eps in eps_values:
        if not (lo <= eps <= hi):
            raise ValueError(f"{case}: eps {eps} outside admissible range "
                             f"({lo}, {hi})")
        m = cand.initial_mesh(case, eps, resolution=resolution)
        res = ev.evolve(m, config)
        records.append(SweepRecord(
            case=case,
            epsilon=eps,
            volume_target=m.target_volume,
            volume=res.volume,
            area=res.area,
            facets=res.mesh.n_facets,
            iterations=res.iterations,
            status=res.status,
            ortho_deficit=res.ortho_deficit,
        ))
        log.info("%s eps=%.5f V=%.6f A=%.6f %s",
                 case, eps, res.volume, res.area, res.status)
    return records


def eps_grid(case: str, n: int, pad: float = 1e-6) -> np.ndarray:
    """Evenly spaced admissible parameters, endpoints pulled inward."""
    lo, hi = cand.admissible_range(case)
    span = hi - lo
    return np.linspace(lo + pad * span, hi - pad * span, n)


def write_csv(records, path_or_file) -> None:
    if hasattr(path_or_file, "write"):
        _write_csv(records, path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write_csv(records, fh)


def _write_csv(records, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(rec.row())


def read_csv(path_or_file) -> list[SweepRecord]:
    if hasattr(path_or_file, "read"):
        return _read_csv(path_or_file)
    with open(path_or_file, newline="") as fh:
        return _read_csv(fh)


def _read_csv(fh) -> list[SweepRecord]:
    reader = csv.reader(fh)
    header = next(reader)
    if header != CSV_HEADER:
        raise ValueError(f"unexpected CSV header: {header}")
    out = []
    for row in reader:
        out.append(SweepRecord(
            case=row[0], epsilon=float(row[1]), volume_target=float(row[2]),
            volume=float(row[3]), area=float(row[4]), facets=int(row[5]),
            iterations=int(row[6]), status=row[7], ortho_deficit=float(row[8]),
        ))
    return out


def csv_text(records) -> str:
    buf = io.StringIO()
    _write_csv(records, buf)
    return buf.getvalue()


# ----------------------------------------------------------------------
# V x A curves


def _curve(records) -> tuple[np.ndarray, np.ndarray]:
    """Converged records as sorted (V, A) arrays."""
    pts = sorted((r.volume, r.area) for r in records
                 if r.status == ev.CONVERGED)
    if len(pts) < 2:
        raise ValueError("need at least two converged records for a curve")
    v = np.array([p[0] for p in pts])
    a = np.array([p[1] for p in pts])
    keep = np.concatenate([[True], np.diff(v) > 1e-12])
    return v[keep], a[keep]


def interp_area(records, v: float) -> float:
    """Piecewise-linear area at volume v; NaN outside the sampled range."""
    vs, as_ = _curve(records)
    if v < vs[0] or v > vs[-1]:
        return float("nan")
    return float(np.interp(v, vs, as_))


@dataclass
class IsopCurve:
    """Pointwise minimum over competing V x A curves."""

    volumes: np.ndarray
    areas: np.ndarray
    winners: list = field(default_factory=list)

    def area_at(self, v) -> np.ndarray:
        return np.interp(v, self.volumes, self.areas)

    def winner_at(self, v: float) -> str:
        idx = int(np.searchsorted(self.volumes, v))
        idx = min(max(idx, 0), len(self.winners) - 1)
        return self.winners[idx]


def isop_curve(records_by_case: dict) -> IsopCurve:
    """Lower envelope of the given families' V x A curves.

    Samples at the union of every family's volume knots, restricted to
    volumes covered by at least one family; each sample is the minimum
    over the families whose range contains it.
    """
    curves = {case: _curve(recs) for case, recs in records_by_case.items()
              if sum(r.status == ev.CONVERGED for r in recs) >= 2}
    if not curves:
        raise ValueError("no usable curves")
    knots = np.unique(np.concatenate([vs for vs, _ in curves.values()]))
    volumes, areas, winners = [], [], []
    for v in knots:
        best_a, best_c = np.inf, None
        for case, (vs, as_) in curves.items():
            if vs[0] - 1e-12 <= v <= vs[-1] + 1e-12:
                a = float(np.interp(v, vs, as_))
                if a < best_a:
                    best_a, best_c = a, case
        if best_c is not None:
            volumes.append(float(v))
            areas.append(best_a)
            winners.append(best_c)
    return IsopCurve(np.array(volumes), np.array(areas), winners)


def turning_points(records_a, records_b) -> list[tuple[float, float]]:
    """Crossings of two V x A curves as (volume, half-grid uncertainty)."""
    va, aa = _curve(records_a)
    vb, ab = _curve(records_b)
    lo = max(va[0], vb[0])
    hi = min(va[-1], vb[-1])
    if hi <= lo:
        raise ValueError("curves do not overlap in volume")
    knots = np.unique(np.concatenate([va, vb]))
    knots = knots[(knots >= lo) & (knots <= hi)]
    if knots[0] > lo:
        knots = np.concatenate([[lo], knots])
    if knots[-1] < hi:
        knots = np.concatenate([knots, [hi]])
    diff = np.interp(knots, va, aa) - np.interp(knots, vb, ab)
    out = []
    sgn = np.sign(diff)
    nz = np.nonzero(sgn)[0]
    for i, j in zip(nz[:-1], nz[1:]):
        if sgn[i] * sgn[j] < 0.0:
            # sign change, possibly across knots where the curves touch
            d0, d1 = diff[i], diff[j]
            t = d0 / (d0 - d1)
            v = knots[i] + t * (knots[j] - knots[i])
            out.append((float(v), 0.5 * float(knots[j] - knots[i])))
    return out


def gap_report(records, isop: IsopCurve) -> float:
    """Minimum of A_case(V) / A_isop(V) over the overlapping volumes."""
    vs, as_ = _curve(records)
    lo = max(vs[0], isop.volumes[0])
    hi = min(vs[-1], isop.volumes[-1])
    if hi <= lo:
        raise ValueError("no volume overlap with the isoperimetric curve")
    grid = np.linspace(lo, hi, 200)
    ratio = np.interp(grid, vs, as_) / isop.area_at(grid)
    return float(ratio.min())


def ratio_range(records_a, records_b) -> tuple[float, float]:
    """(min, max) of A_a(V) / A_b(V) over the shared volume range."""
    va, aa = _curve(records_a)
    vb, ab = _curve(records_b)
    lo = max(va[0], vb[0])
    hi = min(va[-1], vb[-1])
    if hi <= lo:
        raise ValueError("curves do not overlap in volume")
    grid = np.linspace(lo, hi, 200)
    ratio = np.interp(grid, va, aa) / np.interp(grid, vb, ab)
    return float(ratio.min()), float(ratio.max())


# ----------------------------------------------------------------------
# Cell volume


def _volume_z_antiderivative(z: float, a2: float) -> float:
    """Antiderivative in z of 8 / (1 - x^2 - y^2 - z^2)^3 at a2 = 1-x^2-y^2."""
    a = np.sqrt(a2)
    u = a2 - z * z
    return 8.0 * (z / (4.0 * a2 * u * u)
                  + 3.0 * z / (8.0 * a2 * a2 * u)
                  + 3.0 / (16.0 * a2 * a2 * a) * np.log((a + z) / (a - z)))


def cell_volume(epsrel: float = 1e-8) -> tuple[float, float]:
    """Hyperbolic volumes (V_eighth, V_cell) of the fundamental domain.

    The eighth is the positive octant cut by the three near face spheres;
    the z-integral of the volume density is closed-form, leaving a 2-D
    adaptive quadrature over the bottom footprint.
    """
    c, r = geo.CELL_C, geo.CELL_R
    r2 = r * r

    def column(y: float, x: float) -> float:
        a2 = 1.0 - x * x - y * y
        z_hi = c - np.sqrt(max(r2 - x * x - y * y, 0.0))
        z_lo2 = max(r2 - (c - x) ** 2 - y * y, r2 - x * x - (c - y) ** 2, 0.0)
        z_lo = np.sqrt(z_lo2)
        if z_hi <= z_lo:
            return 0.0
        return (_volume_z_antiderivative(z_hi, a2)
                - _volume_z_antiderivative(z_lo, a2))

    # corner of the cell where the three face spheres meet, on x = y = z
    t_max = (c - np.sqrt(c * c - 3.0 * (c * c - r2))) / 3.0
    v_eighth, _ = dblquad(column, 0.0, t_max * 1.001,
                          0.0, t_max * 1.001, epsabs=1e-10, epsrel=epsrel)
    return v_eighth, 8.0 * v_eighth


# ----------------------------------------------------------------------
# Built-in validation suite


def validate(rng: np.random.Generator | None = None) -> list[tuple[str, bool, float]]:
    """Closed-form oracle checks; returns (name, passed, residual) rows."""
    rng = rng or np.random.default_rng(7)
    checks = []

    r = geo.solve_cube_radius(2.0 * np.pi / 5.0)
    checks.append(("cube_radius", abs(r * r - (1.0 + np.sqrt(5.0))) <= 1e-10,
                   abs(r * r - (1.0 + np.sqrt(5.0)))))

    res = abs(geo.quarter_square_area() - np.pi / 10.0)
    checks.append(("quarter_square_area", res <= 1e-8, res))

    # small-radius expansions of the metric sphere area and volume
    eps = 1e-3
    res = abs(geo.sphere_area_exact(eps) - 16.0 * np.pi * eps * eps) / (eps ** 4)
    checks.append(("area_taylor", res <= 300.0, res))
    res = abs(geo.sphere_volume_exact(eps) - 32.0 * np.pi * eps ** 3 / 3.0) / (eps ** 5)
    checks.append(("volume_taylor", res <= 700.0, res))

    # divergence of the flux field equals the volume density
    worst = 0.0
    for _ in range(100):
        p = rng.uniform(-0.55, 0.55, 3)
        if np.dot(p, p) > 0.8:
            continue
        div = np.trace(fn.flux_jacobian(p[None, :])[0])
        dens = 8.0 / (1.0 - np.dot(p, p)) ** 3
        worst = max(worst, abs(div - dens) / dens)
    checks.append(("divergence_identity", worst <= 1e-6, worst))

    # discrete gradients vs central differences on a coarse seed
    m = cand.initial_mesh("aaa", 0.15)
    worst = 0.0
    for grad, total in ((fn.grad_area, fn.total_area),
                        (fn.grad_volume, fn.total_volume)):
        g = grad(m, "mid3")
        scale = max(np.abs(g).max(), 1e-30)
        idx = rng.choice(m.n_vertices, size=min(8, m.n_vertices), replace=False)
        h = 1e-6
        for vi in idx:
            for k in range(3):
                mp = m.copy()
                mp.positions[vi, k] += h
                mm = m.copy()
                mm.positions[vi, k] -= h
                fd = (total(mp, "mid3") - total(mm, "mid3")) / (2.0 * h)
                worst = max(worst, abs(fd - g[vi, k]) / scale)
    checks.append(("gradient_check", worst <= 1e-6, worst))

    # flux volume of a refined sphere matches the closed form
    import hypisop.mesh as msh
    m = cand.initial_mesh("aaa", 0.2)
    for _ in range(3):
        m = msh.refine(m)
        norms = np.linalg.norm(m.positions, axis=1)
        m.positions *= (0.2 / norms)[:, None]
        m.project_all()
    vol = fn.total_volume(m, "deg4")
    exact = geo.sphere_volume_exact(0.2) / 8.0
    res = abs(vol - exact) / exact
    checks.append(("flux_volume", res <= 1e-3, res))

    return checks
