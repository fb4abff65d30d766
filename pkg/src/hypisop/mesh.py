"""Oriented triangulated surfaces with constraint bindings.

A mesh lives in the fundamental eighth of the tesselation cell.  Vertices
may be bound to constraint surfaces (coordinate planes, cell face spheres);
facets carry a CLEAR flag marking wall pieces that close the volume flux
but do not count toward area.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hypisop.geometry import CELL_C, CELL_R

TOL_CON = 1e-12
TOL_FLIP = 1e-9
TOL_DEG = 1e-14       # Euclidean facet area
TOL_DEG_EDGE = 1e-6   # Riemannian edge length
TOL_NECK = 1e-3       # Riemannian vertex-star girth

HEALTHY = "HEALTHY"
DEGENERATE = "DEGENERATE"


class MeshError(ValueError):
    """Invalid mesh topology, geometry or constraint binding."""


@dataclass(frozen=True)
class Constraint:
    """A constraint surface: coordinate plane x_axis = 0 or a face sphere."""

    ident: str
    kind: str  # "plane" | "sphere"
    axis: int = 0
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 0.0

    def project(self, p: np.ndarray) -> np.ndarray:
        q = np.array(p, dtype=float, copy=True)
        if self.kind == "plane":
            q[..., self.axis - 1] = 0.0
            return q
        cen = np.asarray(self.center)
        d = q - cen
        n = np.linalg.norm(d, axis=-1, keepdims=True)
        return cen + self.radius * d / n

    def normal(self, p: np.ndarray) -> np.ndarray:
        """Unit normal of the constraint surface at (or near) p."""
        if self.kind == "plane":
            n = np.zeros(np.shape(p))
            n[..., self.axis - 1] = 1.0
            return n
        d = np.asarray(p) - np.asarray(self.center)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def violation(self, p: np.ndarray) -> np.ndarray:
        if self.kind == "plane":
            return np.abs(np.asarray(p)[..., self.axis - 1])
        d = np.asarray(p) - np.asarray(self.center)
        return np.abs(np.linalg.norm(d, axis=-1) - self.radius)


def _build_constraints() -> dict[str, Constraint]:
    out = {}
    for axis in (1, 2, 3):
        out[f"p{axis}"] = Constraint(ident=f"p{axis}", kind="plane", axis=axis)
    for axis in (1, 2, 3):
        for sign, tag in ((1, ""), (-1, "m")):
            cen = [0.0, 0.0, 0.0]
            cen[axis - 1] = sign * CELL_C
            ident = f"s{axis}{tag}"
            out[ident] = Constraint(
                ident=ident, kind="sphere", center=tuple(cen), radius=CELL_R
            )
    return out


#: Registry of the nine constraint surfaces of the cell (3 planes, 6 spheres).
CONSTRAINTS: dict[str, Constraint] = _build_constraints()

#: Mirror image of each constraint under reflection in plane x_axis = 0.
_MIRROR_MAP = {
    1: {"s1": "s1m", "s1m": "s1"},
    2: {"s2": "s2m", "s2m": "s2"},
    3: {"s3": "s3m", "s3m": "s3"},
}


def project_to_constraints(p: np.ndarray, idents, rounds: int = 60) -> np.ndarray:
    """Project a point onto the intersection of its constraints.

    Single constraints project in closed form; multiple constraints use
    alternating projection, which converges geometrically for the
    transversal plane/sphere intersections of the cell.
    """
    ids = sorted(idents)
    if not ids:
        return np.asarray(p, dtype=float)
    q = np.array(p, dtype=float, copy=True)
    if len(ids) == 1:
        return CONSTRAINTS[ids[0]].project(q)
    for _ in range(rounds):
        for ident in ids:
            q = CONSTRAINTS[ident].project(q)
    return q


def tangent_project(g: np.ndarray, p: np.ndarray, idents) -> np.ndarray:
    """Project a gradient row onto the tangent space of the constraint set."""
    if not idents:
        return g
    normals = []
    for ident in sorted(idents):
        n = CONSTRAINTS[ident].normal(p)
        for m in normals:
            n = n - (n @ m) * m
        nn = np.linalg.norm(n)
        if nn > 1e-12:
            normals.append(n / nn)
    out = np.array(g, dtype=float, copy=True)
    for n in normals:
        out -= (out @ n) * n
    return out


@dataclass
class SurfaceMesh:
    """Triangulated oriented surface with per-vertex constraint bindings."""

    positions: np.ndarray                 # (n, 3) float
    facets: np.ndarray                    # (m, 3) int, outward orientation
    clear: np.ndarray                     # (m,) bool
    vertex_constraints: list              # n frozensets of constraint idents
    target_volume: float | None = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.facets = np.asarray(self.facets, dtype=np.int64)
        if self.facets.size == 0:
            self.facets = self.facets.reshape(0, 3)
        self.clear = np.asarray(self.clear, dtype=bool)
        self.vertex_constraints = [frozenset(s) for s in self.vertex_constraints]

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    def copy(self) -> "SurfaceMesh":
        return SurfaceMesh(
            positions=self.positions.copy(),
            facets=self.facets.copy(),
            clear=self.clear.copy(),
            vertex_constraints=list(self.vertex_constraints),
            target_volume=self.target_volume,
        )

    # -- adjacency ---------------------------------------------------------

    def edge_map(self) -> dict:
        """Map sorted vertex pair -> list of (facet index, local edge slot)."""
        out: dict[tuple, list] = {}
        for fi, (a, b, c) in enumerate(self.facets):
            for slot, (u, v) in enumerate(((a, b), (b, c), (c, a))):
                key = (u, v) if u < v else (v, u)
                out.setdefault(key, []).append((fi, slot))
        return out

    def edge_array(self) -> np.ndarray:
        """Unique undirected edges as an (e, 2) int array."""
        f = self.facets
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def boundary_edges(self) -> list:
        return [k for k, v in self.edge_map().items() if len(v) == 1]

    # -- metric quantities ---------------------------------------------------

    def euclidean_normals(self) -> np.ndarray:
        """Per-facet (un-normalized) outward normals, 0.5 * (e1 x e2)."""
        p = self.positions
        v0, v1, v2 = (p[self.facets[:, k]] for k in range(3))
        return 0.5 * np.cross(v1 - v0, v2 - v0)

    def euclidean_areas(self) -> np.ndarray:
        return np.linalg.norm(self.euclidean_normals(), axis=1)

    def riemannian_edge_lengths(self, edges: np.ndarray | None = None) -> np.ndarray:
        """Euclidean edge lengths scaled by the conformal factor at midpoints."""
        if edges is None:
            edges = self.edge_array()
        a = self.positions[edges[:, 0]]
        b = self.positions[edges[:, 1]]
        mid = 0.5 * (a + b)
        scale = 2.0 / (1.0 - np.sum(mid * mid, axis=1))
        return np.linalg.norm(a - b, axis=1) * scale

    # -- validation ----------------------------------------------------------

    def validate(self, tol: float = 1e-9) -> None:
        """Raise MeshError on broken topology, orientation or constraints.

        The constraint tolerance is looser than TOL_CON here because
        validation is also applied to imported meshes; evolution keeps
        bindings at TOL_CON via explicit projection.
        """
        if self.n_facets and self.facets.max() >= self.n_vertices:
            raise MeshError("facet references missing vertex")
        n2 = np.sum(self.positions ** 2, axis=1)
        if np.any(n2 >= 1.0):
            raise MeshError("vertex outside the unit ball")
        for key, uses in self.edge_map().items():
            if len(uses) > 2:
                raise MeshError(f"edge {key} shared by {len(uses)} facets")
            if len(uses) == 2:
                d0 = self._directed(key, *uses[0])
                d1 = self._directed(key, *uses[1])
                if d0 == d1:
                    raise MeshError(f"inconsistent orientation at edge {key}")
            else:
                a, b = key
                common = self.vertex_constraints[a] & self.vertex_constraints[b]
                if not common:
                    raise MeshError(f"boundary edge {key} not on a constraint")
        for vi, ids in enumerate(self.vertex_constraints):
            for ident in ids:
                if CONSTRAINTS[ident].violation(self.positions[vi]) > tol:
                    raise MeshError(f"vertex {vi} violates constraint {ident}")

    def _directed(self, key, fi, slot):
        a, b, c = self.facets[fi]
        edge = ((a, b), (b, c), (c, a))[slot]
        return edge == key

    def project_all(self) -> None:
        """Re-project every constrained vertex onto its constraint set."""
        for vi, ids in enumerate(self.vertex_constraints):
            if ids:
                self.positions[vi] = project_to_constraints(self.positions[vi], ids)


# ---------------------------------------------------------------------------
# Refinement
# ---------------------------------------------------------------------------


def refine(m: SurfaceMesh) -> SurfaceMesh:
    """Split every facet 4-to-1 at edge midpoints.

    Midpoints inherit the constraints common to both edge endpoints and are
    projected onto them; CLEAR flags are inherited by all four children.
    """
    pos = [p for p in m.positions]
    cons = list(m.vertex_constraints)
    mid_index: dict[tuple, int] = {}

    def midpoint(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        if key in mid_index:
            return mid_index[key]
        common = m.vertex_constraints[a] & m.vertex_constraints[b]
        p = 0.5 * (m.positions[a] + m.positions[b])
        if common:
            p = project_to_constraints(p, common)
        pos.append(p)
        cons.append(common)
        mid_index[key] = len(pos) - 1
        return mid_index[key]

    new_facets = []
    new_clear = []
    for fi, (a, b, c) in enumerate(m.facets):
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        for tri in ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)):
            new_facets.append(tri)
            new_clear.append(m.clear[fi])
    return SurfaceMesh(
        positions=np.array(pos),
        facets=np.array(new_facets, dtype=np.int64),
        clear=np.array(new_clear, dtype=bool),
        vertex_constraints=cons,
        target_volume=m.target_volume,
    )


# ---------------------------------------------------------------------------
# Equiangulation
# ---------------------------------------------------------------------------


def _riemannian_length(p: np.ndarray, q: np.ndarray) -> float:
    mid = 0.5 * (p + q)
    return float(np.linalg.norm(p - q) * 2.0 / (1.0 - mid @ mid))


def _opposite_angle(pa, pb, pc) -> float:
    """Angle at pc of the geodesic triangle, from Riemannian edge lengths."""
    a = _riemannian_length(pb, pc)
    b = _riemannian_length(pa, pc)
    c = _riemannian_length(pa, pb)
    cosv = (a * a + b * b - c * c) / (2.0 * a * b)
    return float(np.arccos(np.clip(cosv, -1.0, 1.0)))


def equiangulate(m: SurfaceMesh, max_passes: int = 20) -> SurfaceMesh:
    """Flip interior edges failing the Delaunay angle criterion.

    An edge flips while the sum of the two opposite angles (Riemannian
    lengths) exceeds pi + TOL_FLIP.  Flips never cross the CLEAR/area
    boundary and never create degenerate facets.
    """
    out = m.copy()
    pos = out.positions
    facets = out.facets
    for _ in range(max_passes):
        flips = 0
        emap = out.edge_map()
        touched = np.zeros(len(facets), dtype=bool)
        for key in sorted(emap):
            uses = emap[key]
            if len(uses) != 2:
                continue
            (f1, s1), (f2, s2) = uses
            if touched[f1] or touched[f2]:
                continue
            if out.clear[f1] != out.clear[f2]:
                continue
            a, b = key
            c = int(np.setdiff1d(facets[f1], [a, b])[0])
            d = int(np.setdiff1d(facets[f2], [a, b])[0])
            if c == d:
                continue
            cd = (c, d) if c < d else (d, c)
            if cd in emap:
                continue
            ang = _opposite_angle(pos[a], pos[b], pos[c]) + _opposite_angle(
                pos[a], pos[b], pos[d]
            )
            if ang <= np.pi + TOL_FLIP:
                continue
            t1, t2 = _flip_orient(facets[f1], a, b, c, d)
            if _euc_area(pos, t1) < TOL_DEG or _euc_area(pos, t2) < TOL_DEG:
                continue
            facets[f1] = t1
            facets[f2] = t2
            touched[f1] = touched[f2] = True
            flips += 1
        if flips == 0:
            break
    return out


def _flip_orient(f1, a, b, c, d):
    """New facet pair after flipping edge (a, b) to (c, d).

    f1 contains {a, b, c}; its directed order fixes the orientation of
    both replacement triangles.
    """
    la, lb, lc = f1
    # rotate so that triangle reads (x, y, c) with (x, y) the directed a-b edge
    tri = [int(la), int(lb), int(lc)]
    while tri[2] != c:
        tri = [tri[1], tri[2], tri[0]]
    x, y = tri[0], tri[1]  # directed edge of f1 between a and b
    return (x, d, c), (d, y, c)


def _euc_area(pos, tri) -> float:
    v0, v1, v2 = pos[tri[0]], pos[tri[1]], pos[tri[2]]
    return 0.5 * float(np.linalg.norm(np.cross(v1 - v0, v2 - v0)))


# ---------------------------------------------------------------------------
# Vertex averaging
# ---------------------------------------------------------------------------


def vertex_average(m: SurfaceMesh) -> SurfaceMesh:
    """Move vertices to the area-weighted average of adjacent facet centroids.

    Constrained vertices are re-projected afterwards, so they slide within
    their constraint surfaces.  A move is reverted if it would flip or
    degenerate an adjacent facet.  The enclosed volume is restored later by
    the evolution volume step, not here.
    """
    out = m.copy()
    pos = out.positions
    p = pos[out.facets]
    cent = p.mean(axis=1)
    scale2 = (2.0 / (1.0 - np.sum(cent * cent, axis=1))) ** 2
    w = out.euclidean_areas() * scale2
    acc = np.zeros_like(pos)
    wsum = np.zeros(len(pos))
    for k in range(3):
        np.add.at(acc, out.facets[:, k], w[:, None] * cent)
        np.add.at(wsum, out.facets[:, k], w)
    normals0 = out.euclidean_normals()
    vfacets: list[list[int]] = [[] for _ in range(len(pos))]
    for fi, tri in enumerate(out.facets):
        for v in tri:
            vfacets[v].append(fi)
    order = np.argsort(-wsum)  # deterministic, heaviest stars first
    for vi in order:
        if wsum[vi] <= 0.0:
            continue
        target = acc[vi] / wsum[vi]
        ids = out.vertex_constraints[vi]
        if ids:
            target = project_to_constraints(target, ids)
        old = pos[vi].copy()
        pos[vi] = target
        ok = True
        for fi in vfacets[vi]:
            tri = out.facets[fi]
            n = 0.5 * np.cross(pos[tri[1]] - pos[tri[0]], pos[tri[2]] - pos[tri[0]])
            if np.linalg.norm(n) < TOL_DEG or n @ normals0[fi] <= 0.0:
                ok = False
                break
        if not ok:
            pos[vi] = old
    return out


def collapse_short_edges(m: SurfaceMesh, tol: float = 1e-3,
                         constrained_only: bool = False) -> SurfaceMesh:
    """Contract every edge shorter than tol (Riemannian length).

    The surviving endpoint keeps the union of the two constraint sets and
    is re-projected.  Used to clean up seed meshes whose construction
    compresses many vertices onto a small wall cap.  With constrained_only
    an edge is contracted only when both endpoints carry constraints, so
    interior necks are never touched.
    """
    pos = [p.copy() for p in m.positions]
    cons = list(m.vertex_constraints)
    facets = [tuple(t) for t in m.facets]
    clear = list(m.clear)
    alias = list(range(len(pos)))

    def root(i):
        while alias[i] != i:
            alias[i] = alias[alias[i]]
            i = alias[i]
        return i

    changed = True
    while changed:
        changed = False
        for fi, tri in enumerate(facets):
            tri = tuple(root(v) for v in tri)
            facets[fi] = tri
            if len(set(tri)) < 3:
                continue
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                if constrained_only and (not cons[a] or not cons[b]):
                    continue
                if _riemannian_length(pos[a], pos[b]) < tol:
                    keep, drop = (a, b) if len(cons[a]) >= len(cons[b]) else (b, a)
                    merged = cons[a] | cons[b]
                    p = 0.5 * (pos[a] + pos[b])
                    pos[keep] = project_to_constraints(p, merged) if merged else p
                    cons[keep] = merged
                    alias[drop] = keep
                    changed = True
                    break
    facets = [tuple(root(v) for v in tri) for tri in facets]
    live = [fi for fi, tri in enumerate(facets) if len(set(tri)) == 3]
    used = sorted({v for fi in live for v in facets[fi]})
    index = {v: i for i, v in enumerate(used)}
    return SurfaceMesh(
        positions=np.array([pos[v] for v in used]),
        facets=np.array([[index[v] for v in facets[fi]] for fi in live], dtype=np.int64),
        clear=np.array([clear[fi] for fi in live], dtype=bool),
        vertex_constraints=[cons[v] for v in used],
        target_volume=m.target_volume,
    )


# ---------------------------------------------------------------------------
# Symmetry replication
# ---------------------------------------------------------------------------


def mirror_mesh(m: SurfaceMesh, axis: int) -> SurfaceMesh:
    """Union of the mesh and its mirror image across plane x_axis = 0.

    On-plane vertices are shared; mirrored facets are reversed to keep the
    orientation globally consistent.  Sphere constraints are remapped to
    their mirror-image spheres.
    """
    n = m.n_vertices
    onplane = np.abs(m.positions[:, axis - 1]) <= TOL_CON
    index_map = np.arange(n)
    new_pos = [p for p in m.positions]
    new_cons = list(m.vertex_constraints)
    remap = _MIRROR_MAP[axis]
    for vi in range(n):
        if onplane[vi]:
            continue
        q = m.positions[vi].copy()
        q[axis - 1] *= -1.0
        index_map[vi] = len(new_pos)
        new_pos.append(q)
        new_cons.append(frozenset(remap.get(i, i) for i in m.vertex_constraints[vi]))
    mirrored = index_map[m.facets][:, ::-1]
    facets = np.concatenate([m.facets, mirrored])
    clear = np.concatenate([m.clear, m.clear])
    return SurfaceMesh(
        positions=np.array(new_pos),
        facets=facets,
        clear=clear,
        vertex_constraints=new_cons,
        target_volume=None if m.target_volume is None else 2.0 * m.target_volume,
    )


def reflect_to_full_cell(m: SurfaceMesh) -> SurfaceMesh:
    """Union of the eight mirror images across the coordinate planes."""
    if np.any(m.positions < -TOL_CON):
        raise MeshError("mesh leaves the fundamental eighth")
    out = m
    for axis in (1, 2, 3):
        out = mirror_mesh(out, axis)
    return out


# ---------------------------------------------------------------------------
# Degeneracy detection
# ---------------------------------------------------------------------------


def degeneracy_report(m: SurfaceMesh) -> str:
    """DEGENERATE if an edge or any vertex-star girth collapsed, else HEALTHY.

    The star girth (total Riemannian length of the link polygon of an
    interior vertex) approximates the smallest tube cross-section, which
    shrinks to zero when a neck pinches.
    """
    edges = m.edge_array()
    if len(edges) == 0:
        return HEALTHY
    lengths = m.riemannian_edge_lengths(edges)
    if lengths.min() < TOL_DEG_EDGE:
        return DEGENERATE
    elen = {(int(a), int(b)): float(l) for (a, b), l in zip(edges, lengths)}
    boundary = set()
    girth = np.zeros(m.n_vertices)
    count = np.zeros(m.n_vertices, dtype=int)
    emap = m.edge_map()
    for key, uses in emap.items():
        if len(uses) == 1:
            boundary.update(key)
    for a, b, c in m.facets:
        girth[a] += elen[(b, c) if b < c else (c, b)]
        girth[b] += elen[(a, c) if a < c else (c, a)]
        girth[c] += elen[(a, b) if a < b else (b, a)]
        count[a] += 1
        count[b] += 1
        count[c] += 1
    interior = (count > 0) & ~np.isin(np.arange(m.n_vertices), sorted(boundary))
    if np.any(girth[interior] < TOL_NECK):
        return DEGENERATE
    return HEALTHY


# ---------------------------------------------------------------------------
# OFF import/export
# ---------------------------------------------------------------------------


def write_off(m: SurfaceMesh, path) -> None:
    """ASCII OFF export; CLEAR facets carry a trailing `# clear` token."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{m.n_vertices} {m.n_facets} 0\n")
        for p in m.positions:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        for tri, cl in zip(m.facets, m.clear):
            line = f"3 {tri[0]} {tri[1]} {tri[2]}"
            if cl:
                line += "  # clear"
            fh.write(line + "\n")


def read_off(path, bind_tol: float = 1e-9) -> SurfaceMesh:
    """Read an ASCII OFF file; constraints are re-bound geometrically.

    A vertex is bound to every registry constraint it satisfies within
    bind_tol.
    """
    with open(path) as fh:
        lines = [ln for ln in (s.strip() for s in fh) if ln]
    if lines[0] != "OFF":
        raise MeshError("not an OFF file")
    nv, nf, _ = (int(t) for t in lines[1].split())
    pos = np.array([[float(t) for t in lines[2 + i].split()[:3]] for i in range(nv)])
    facets = []
    clear = []
    for i in range(nf):
        raw = lines[2 + nv + i]
        clear.append("# clear" in raw)
        toks = raw.split("#", 1)[0].split()
        if toks[0] != "3":
            raise MeshError("only triangular facets are supported")
        facets.append([int(toks[1]), int(toks[2]), int(toks[3])])
    cons = []
    for p in pos:
        ids = {
            ident
            for ident, con in CONSTRAINTS.items()
            if con.violation(p) <= bind_tol
        }
        cons.append(frozenset(ids))
    return SurfaceMesh(
        positions=pos,
        facets=np.array(facets, dtype=np.int64),
        clear=np.array(clear, dtype=bool),
        vertex_constraints=cons,
    )
