"""Constrained gradient descent: minimize area at fixed enclosed volume.

Each step projects the area and volume gradients onto the per-vertex
constraint tangent spaces, removes the volume-gradient component from the
area gradient (Lagrange style), moves along the result with a quadratic-fit
line search, and restores the target volume by a scalar Newton iteration
along the projected volume gradient.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from hypisop import functionals as fn
from hypisop import mesh as msh
from hypisop.mesh import SurfaceMesh

log = logging.getLogger(__name__)

VOL_TOL = 1e-9
# volume restoration leaves an O(lambda * VOL_TOL) uncertainty in restored
# areas; steps inside this band are neutral (tangential drift), not uphill
AREA_NOISE = 3e-8

CONVERGED = "CONVERGED"
DEGENERATE = "DEGENERATE"
MAX_ITER = "MAX_ITER"


@dataclass
class EvolveConfig:
    """Knobs of the area minimization loop."""

    max_iter: int = 400
    step0: float = 0.05
    quad_rule: str = "mid3"
    window: int = 50               # convergence window, iterations
    rel_area_tol: float = 2e-5     # relative area decrease over the window
    refine_area_per_facet: float = 0.01   # refine while A / F above this
    max_refines: int = 3
    average_every: int = 25
    equiangulate_every: int = 25
    collapse_edge_tol: float = 1e-4   # heal vertex crowding below this length
    class_exit_tol: float = 5e-3   # wall-edge contact distance ending the family
    precondition: bool = True      # scale the descent by inverse vertex mass
    check_degeneracy: bool = True
    trace_every: int = 0           # 0 disables per-iteration tracing

    @classmethod
    def from_mapping(cls, items: dict) -> "EvolveConfig":
        cfg = cls()
        for key, raw in items.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config key: {key}")
            cur = getattr(cfg, key)
            setattr(cfg, key, type(cur)(raw) if not isinstance(cur, bool)
                    else raw in ("1", "true", "True", True))
        return cfg


@dataclass
class EvolveResult:
    mesh: SurfaceMesh
    status: str
    iterations: int
    area: float
    volume: float
    ortho_deficit: float
    trace: list = field(default_factory=list)


def _project_rows(g: np.ndarray, m: SurfaceMesh) -> np.ndarray:
    out = g.copy()
    for vi, ids in enumerate(m.vertex_constraints):
        if ids:
            out[vi] = msh.tangent_project(g[vi], m.positions[vi], ids)
    return out


def restore_volume(m: SurfaceMesh, rule: str = "mid3", max_newton: int = 20) -> bool:
    """Newton steps along the projected volume gradient to hit target volume.

    Mutates positions in place.  Returns False if Newton stalls, in which
    case positions are left re-projected but off target.
    """
    target = m.target_volume
    for _ in range(max_newton):
        vol = fn.total_volume(m, rule)
        err = vol - target
        if abs(err) <= VOL_TOL:
            return True
        gV = _project_rows(fn.grad_volume(m, rule), m)
        denom = float(np.sum(gV * gV))
        if denom < 1e-30:
            return False
        m.positions -= (err / denom) * gV
        m.project_all()
    return abs(fn.total_volume(m, rule) - target) <= VOL_TOL


def _vertex_mass(m: SurfaceMesh) -> np.ndarray:
    """Lumped hyperbolic vertex areas (one third of the adjacent facets)."""
    p = m.positions[m.facets]
    cent = p.mean(axis=1)
    phi = 4.0 / (1.0 - np.sum(cent * cent, axis=1)) ** 2
    fa = m.euclidean_areas() * phi
    w = np.zeros(m.n_vertices)
    for k in range(3):
        np.add.at(w, m.facets[:, k], fa / 3.0)
    return np.maximum(w, 1e-300)


def descent_direction(m: SurfaceMesh, rule: str = "mid3",
                      precondition: bool = True) -> np.ndarray:
    """Volume-preserving area descent direction.

    Area gradient with its volume-gradient component removed (so the move
    is volume neutral to first order).  With preconditioning the result is
    scaled by the inverse lumped vertex area, which approximates mean
    curvature and makes step sizes resolution-independent; without it the
    motion is the plain projected gradient, whose slower boundary drift
    preserves shallow equilibria better.
    """
    gA = _project_rows(fn.grad_area(m, rule), m)
    gV = _project_rows(fn.grad_volume(m, rule), m)
    if precondition:
        minv = 1.0 / _vertex_mass(m)[:, None]
    else:
        minv = np.ones((m.n_vertices, 1))
    denom = float(np.sum(gV * minv * gV))
    lam = float(np.sum(gA * minv * gV)) / denom if denom > 1e-30 else 0.0
    return -minv * (gA - lam * gV)


def constrained_step(m: SurfaceMesh, step: float, rule: str = "mid3") -> bool:
    """One descent step of the given size; True if volume was restored."""
    m.positions += step * descent_direction(m, rule)
    m.project_all()
    return restore_volume(m, rule)


def _try_step(m: SurfaceMesh, d: np.ndarray, normals0: np.ndarray, step: float, rule: str):
    trial = m.copy()
    trial.positions += step * d
    trial.project_all()
    if not restore_volume(trial, rule):
        return None, np.inf
    dots = np.einsum("fd,fd->f", trial.euclidean_normals(), normals0)
    if np.any(dots <= 0.0):
        return None, np.inf
    return trial, fn.total_area(trial, rule)


def line_search_step(m: SurfaceMesh, step: float, rule: str = "mid3",
                     precondition: bool = True, area0: float | None = None):
    """Quadratic-fit line search over step sizes {s/2, s, 2s}.

    Volume restoration is part of each trial evaluation, so the fit sees
    the true constrained area.  Trials that invert a facet are rejected,
    and so is any trial that raises the area above `area0` (when given)
    by more than the restoration noise band, keeping the flow monotone up
    to AREA_NOISE while still allowing neutral tangential drift.  Returns
    (mesh, area, next step) or (None, inf, smaller step) when every
    trial fails.
    """
    d = descent_direction(m, rule, precondition)
    normals0 = m.euclidean_normals()
    # keep displacements below a fraction of the shortest edge
    edges = m.edge_array()
    h_min = float(
        np.linalg.norm(m.positions[edges[:, 0]] - m.positions[edges[:, 1]], axis=1).min()
    )
    d_max = float(np.linalg.norm(d, axis=1).max())
    if d_max > 1e-300:
        step = min(step, 2.0 * h_min / d_max)
    sizes = np.array([0.5 * step, step, 2.0 * step])
    trials = [_try_step(m, d, normals0, s, rule) for s in sizes]
    areas = np.array([a for _, a in trials])
    cap = area0 + AREA_NOISE if area0 is not None else np.inf
    if not (areas < cap).any():
        return None, np.inf, 0.5 * step
    best = int(np.nanargmin(np.where(areas < cap, areas, np.nan)))
    if np.isfinite(areas).all():
        # vertex of the parabola through the three samples, in log-step
        x = np.log(sizes)
        d1 = (areas[2] - areas[0]) / (x[2] - x[0])
        d2 = (areas[0] - 2 * areas[1] + areas[2]) / ((x[1] - x[0]) ** 2)
        if d2 > 0:
            arg = x[1] - d1 / d2
            s_opt = float(np.exp(arg)) if x[0] < arg < x[2] else np.inf
            if sizes[0] < s_opt < sizes[2] and abs(np.log(s_opt / sizes[best])) > 1e-3:
                extra, a_extra = _try_step(m, d, normals0, s_opt, rule)
                if extra is not None and a_extra < areas[best]:
                    return extra, a_extra, s_opt
    return trials[best][0], float(areas[best]), float(sizes[best])


def orthogonality_deficit(m: SurfaceMesh) -> float:
    """Worst angle (radians) between boundary facets and their constraints.

    For a converged free boundary the facets meet the constraint surfaces
    orthogonally, i.e. facet normals are tangent to the walls; the deficit
    is max over boundary edges of |asin(n_facet . n_wall)|.
    """
    worst = 0.0
    emap = m.edge_map()
    normals = m.euclidean_normals()
    areas = np.linalg.norm(normals, axis=1)
    for (a, b), uses in emap.items():
        if len(uses) != 1:
            continue
        common = m.vertex_constraints[a] & m.vertex_constraints[b]
        if not common:
            continue
        fi, _ = uses[0]
        if m.clear[fi] or areas[fi] < msh.TOL_DEG:
            continue
        nf = normals[fi] / areas[fi]
        mid = 0.5 * (m.positions[a] + m.positions[b])
        for ident in common:
            nw = msh.CONSTRAINTS[ident].normal(mid)
            worst = max(worst, abs(float(np.arcsin(np.clip(nf @ nw, -1, 1)))))
    return worst


_WALLS = ("s1", "s2", "s3")


def class_exit(m: SurfaceMesh, tol: float) -> bool:
    """Detect contact-structure change: free vertices reaching a wall edge.

    A surface leaves its boundary class when material not attached to a
    pair of face spheres reaches the circle where those spheres meet; past
    that point the evolution continues inside a different class and its
    records no longer belong to this family.  Tangency with a single face
    sphere is allowed - one-sided contact can vanish again and several
    families end in exactly such a tangency.  A wall pair with vertices
    already bound to both of its spheres is exempt: families whose
    boundary graph contains that wall-edge contact keep free mesh
    vertices crowding the contact line, which is a meshing effect, not
    an exit.
    """
    if tol <= 0.0:
        return False
    near = {}
    bound = {}
    for ident in _WALLS:
        near[ident] = msh.CONSTRAINTS[ident].violation(m.positions) < tol
        bound[ident] = np.array([ident in c for c in m.vertex_constraints])
    for i, wi in enumerate(_WALLS):
        for wj in _WALLS[i + 1:]:
            if (bound[wi] & bound[wj]).any():
                continue
            hits = near[wi] & near[wj] & ~bound[wi] & ~bound[wj]
            if hits.any():
                return True
    return False


def _heal_crowding(cur: SurfaceMesh, area: float, cfg: EvolveConfig):
    """Collapse crowding micro-edges so they cannot stall the line search.

    Vertices sliding tangentially pile up at cell corners; the resulting
    micro-edges are a meshing artifact, not a physical pinch, and they cap
    the step size through the shortest-edge bound.  A genuine neck pinch
    is still reported by the girth test afterwards.
    """
    if not cfg.collapse_edge_tol:
        return cur, area
    edges = cur.edge_array()
    if len(edges) == 0:
        return cur, area
    lens = cur.riemannian_edge_lengths(edges)
    constrained = np.array([bool(m) for m in map(len, cur.vertex_constraints)])
    crowded = lens < cfg.collapse_edge_tol
    crowded &= constrained[edges[:, 0]] & constrained[edges[:, 1]]
    if not crowded.any():
        return cur, area
    try:
        cand = msh.collapse_short_edges(cur, cfg.collapse_edge_tol,
                                        constrained_only=True)
    except Exception:
        return cur, area
    if cand.n_facets < 4 or not restore_volume(cand, cfg.quad_rule):
        return cur, area
    return cand, fn.total_area(cand, cfg.quad_rule)


def evolve(m: SurfaceMesh, config: EvolveConfig | None = None) -> EvolveResult:
    """Run the area minimization to convergence, refining as needed."""
    cfg = config or EvolveConfig()
    cur = m.copy()
    cur.project_all()
    if not restore_volume(cur, cfg.quad_rule):
        log.warning("initial volume restoration failed")
    area = fn.total_area(cur, cfg.quad_rule)
    step = cfg.step0
    refines = 0
    history = [area]
    trace = []
    status = MAX_ITER
    it = 0
    for it in range(1, cfg.max_iter + 1):
        nxt, a_new, step = line_search_step(cur, step, cfg.quad_rule,
                                            cfg.precondition, area)
        tries = 0
        while nxt is None and tries < 30:
            step *= 0.5
            nxt, a_new, step = line_search_step(cur, step, cfg.quad_rule,
                                                cfg.precondition, area)
            tries += 1
        if nxt is None:
            # no decreasing step exists at any scale: the discrete area
            # floor is reached, so refine if still coarse, else converge
            if (area / cur.n_facets > cfg.refine_area_per_facet
                    and refines < cfg.max_refines):
                cur = msh.equiangulate(msh.refine(cur))
                restore_volume(cur, cfg.quad_rule)
                area = fn.total_area(cur, cfg.quad_rule)
                history = [area]
                refines += 1
                step = cfg.step0
                continue
            status = CONVERGED
            break
        cur, area = nxt, a_new
        if cfg.average_every and it % cfg.average_every == 0:
            cand = msh.vertex_average(cur)
            if restore_volume(cand, cfg.quad_rule):
                a_cand = fn.total_area(cand, cfg.quad_rule)
                if a_cand <= area + AREA_NOISE:
                    cur, area = cand, a_cand
        if cfg.equiangulate_every and it % cfg.equiangulate_every == 0:
            cand = msh.equiangulate(cur)
            if restore_volume(cand, cfg.quad_rule):
                a_cand = fn.total_area(cand, cfg.quad_rule)
                if a_cand <= area + AREA_NOISE:
                    cur, area = cand, a_cand
        history.append(area)
        if cfg.trace_every and it % cfg.trace_every == 0:
            trace.append((it, area, fn.total_volume(cur, cfg.quad_rule)))
        if cfg.check_degeneracy and it % 10 == 0:
            cur, area = _heal_crowding(cur, area, cfg)
            if msh.degeneracy_report(cur) == msh.DEGENERATE:
                status = DEGENERATE
                break
            if class_exit(cur, cfg.class_exit_tol):
                status = DEGENERATE
                break
        if len(history) > cfg.window:
            past = history[-cfg.window - 1]
            if past - area <= cfg.rel_area_tol * abs(past):
                per_facet = area / cur.n_facets
                if per_facet > cfg.refine_area_per_facet and refines < cfg.max_refines:
                    cur = msh.equiangulate(msh.refine(cur))
                    restore_volume(cur, cfg.quad_rule)
                    area = fn.total_area(cur, cfg.quad_rule)
                    history = [area]
                    refines += 1
                    step = cfg.step0
                else:
                    status = CONVERGED
                    break
    if status != DEGENERATE and cfg.check_degeneracy:
        if msh.degeneracy_report(cur) == msh.DEGENERATE:
            status = DEGENERATE
    vol = fn.total_volume(cur, cfg.quad_rule)
    return EvolveResult(
        mesh=cur,
        status=status,
        iterations=it,
        area=fn.total_area(cur, cfg.quad_rule),
        volume=vol,
        ortho_deficit=orthogonality_deficit(cur),
        trace=trace,
    )
