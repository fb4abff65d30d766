"""Exact geometry of the Poincare ball and of the cubic tesselation cell.

The hyperbolic 3-space is represented by the open unit ball with the
conformal metric ``4 I / (1 - |x|^2)^2``.  The tesselation cell is the
unique non-ideal hyperbolic cube with dihedral angle ``2*pi/5``; its faces
are carried by six spheres of Euclidean radius ``r = sqrt(sqrt(5)+1)``
centred at distance ``c = sqrt(sqrt(5)+2)`` from the origin along the
coordinate axes, together with the three coordinate mirror planes.

All constants are evaluated from their radical closed forms, never from
hard-coded decimals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

# Guard for admissible chart points: reject |p| >= 1 - DELTA_BALL.
DELTA_BALL = 1e-9

_SQRT5 = math.sqrt(5.0)

#: Euclidean distance of the face-sphere centres from the origin.
CELL_C = math.sqrt(_SQRT5 + 2.0)
#: Euclidean radius of the face spheres.
CELL_R = math.sqrt(_SQRT5 + 1.0)
#: Largest Euclidean sphere radius fitting inside the cell, eps = c - r.
EPS_MAX = CELL_C - CELL_R
#: Chart coordinate of the corner of the central square of the {4,5} tiling.
CORNER = (CELL_C - 5.0 ** 0.25) / 2.0


class GeometryError(ValueError):
    """Raised for points outside the admissible chart region or bad arguments."""


def _as_points(p) -> np.ndarray:
    a = np.asarray(p, dtype=float)
    if a.shape[-1] != 3:
        raise GeometryError(f"expected 3-vectors, got shape {a.shape}")
    return a


def check_in_ball(p) -> np.ndarray:
    """Validate that points are strictly inside the unit ball (with guard)."""
    a = _as_points(p)
    n2 = np.sum(a * a, axis=-1)
    if np.any(n2 >= (1.0 - DELTA_BALL) ** 2):
        raise GeometryError("point outside the admissible region of the ball")
    return a


def metric_scale(p) -> float | np.ndarray:
    """Length scale 2/(1-|p|^2) of the conformal metric at chart point(s) p.

    The area density is its square and the volume density its cube,
    8/(1-|p|^2)^3.
    """
    a = check_in_ball(p)
    n2 = np.sum(a * a, axis=-1)
    return 2.0 / (1.0 - n2)


def sphere_area_exact(eps: float) -> float:
    """Hyperbolic area of the sphere of Euclidean radius eps about the origin."""
    if not 0.0 < eps < 1.0:
        raise GeometryError("sphere radius must lie in (0, 1)")
    return 16.0 * math.pi * eps * eps / (1.0 - eps * eps) ** 2


def sphere_volume_exact(eps: float) -> float:
    """Hyperbolic volume enclosed by the sphere of Euclidean radius eps."""
    if not 0.0 < eps < 1.0:
        raise GeometryError("sphere radius must lie in (0, 1)")
    e2 = eps * eps
    return 2.0 * math.pi * (
        2.0 * eps * (1.0 + e2) / (1.0 - e2) ** 2 + math.log((1.0 - eps) / (1.0 + eps))
    )


def sphere_radius_for_volume(volume: float) -> float:
    """Invert sphere_volume_exact by bisection on (0, 1)."""
    if volume <= 0.0:
        raise GeometryError("volume must be positive")
    lo, hi = 1e-12, 1.0 - 1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sphere_volume_exact(mid) < volume:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Isometries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Mirror:
    """Reflection in the coordinate plane x_axis = 0 (axis in {1, 2, 3})."""

    axis: int

    def apply(self, p: np.ndarray) -> np.ndarray:
        q = np.array(p, dtype=float, copy=True)
        q[..., self.axis - 1] *= -1.0
        return q


@dataclass(frozen=True)
class SphereInversion:
    """Inversion in the sphere of given centre and radius.

    Cell isometries satisfy |centre|^2 = 1 + radius^2, which keeps the
    unit ball invariant.
    """

    center: tuple[float, float, float]
    radius: float

    def apply(self, p: np.ndarray) -> np.ndarray:
        q = np.asarray(p, dtype=float)
        cen = np.asarray(self.center, dtype=float)
        d = q - cen
        n2 = np.sum(d * d, axis=-1, keepdims=True)
        if np.any(n2 < 1e-300):
            raise GeometryError("inversion applied at its own centre")
        return self.radius ** 2 * d / n2 + cen

    def keeps_unit_ball(self, tol: float = 1e-12) -> bool:
        cen = np.asarray(self.center, dtype=float)
        return abs(float(cen @ cen) - (1.0 + self.radius ** 2)) <= tol


@dataclass(frozen=True)
class Composition:
    """Composition of isometries; parts[0] is applied first."""

    parts: tuple

    def apply(self, p: np.ndarray) -> np.ndarray:
        q = np.asarray(p, dtype=float)
        for g in self.parts:
            q = g.apply(q)
        return q


Isometry = Mirror | SphereInversion | Composition


def apply_isometry(g: Isometry, p) -> np.ndarray:
    """Apply an isometry to one point or an array of points."""
    return g.apply(_as_points(p))


def face_inversion(axis: int, sign: int = 1) -> SphereInversion:
    """Inversion in the face sphere centred at sign*c along the given axis."""
    if axis not in (1, 2, 3):
        raise GeometryError("axis must be 1, 2 or 3")
    cen = [0.0, 0.0, 0.0]
    cen[axis - 1] = sign * CELL_C
    return SphereInversion(center=tuple(cen), radius=CELL_R)


def lattice_translation(axis: int) -> Composition:
    """Hyperbolic translation T_i = tau_i o sigma_i generating the lattice.

    sigma_i is the inversion in the face sphere on the positive side of the
    axis, tau_i the mirror reflection in the coordinate plane; the composite
    has no fixed point inside the ball.
    """
    if axis not in (1, 2, 3):
        raise GeometryError("axis must be 1, 2 or 3")
    return Composition(parts=(face_inversion(axis), Mirror(axis)))


def hyperbolic_distance(p, q) -> float | np.ndarray:
    """Geodesic distance between chart points of the Poincare ball."""
    a = check_in_ball(p)
    b = check_in_ball(q)
    d2 = np.sum((a - b) ** 2, axis=-1)
    na = 1.0 - np.sum(a * a, axis=-1)
    nb = 1.0 - np.sum(b * b, axis=-1)
    return np.arccosh(1.0 + 2.0 * d2 / (na * nb))


# ---------------------------------------------------------------------------
# Cell constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellGeometry:
    """Constants of the tesselation cell and its bounding surfaces."""

    c: float
    r: float
    corner: float
    eps_max: float
    face_spheres: tuple = field(default=())
    mirror_planes: tuple = (1, 2, 3)


def cell_geometry() -> CellGeometry:
    """Constants of the non-ideal cube: face spheres at (+-c, 0, 0) etc."""
    spheres = []
    for axis in (1, 2, 3):
        for sign in (1, -1):
            cen = [0.0, 0.0, 0.0]
            cen[axis - 1] = sign * CELL_C
            spheres.append((tuple(cen), CELL_R))
    return CellGeometry(
        c=CELL_C,
        r=CELL_R,
        corner=CORNER,
        eps_max=EPS_MAX,
        face_spheres=tuple(spheres),
    )


def dihedral_angle(r_face: float) -> float:
    """Interior dihedral angle of the hyperbolic cube with face-sphere radius r_face.

    Adjacent face spheres have centres at mutual distance sqrt(2(1+r_face^2)),
    so the angle between the spheres follows from the law of cosines; it is
    strictly decreasing as r_face decreases toward sqrt(2), with limits pi/2
    (r_face -> inf) and pi/3 (r_face -> sqrt(2)+).
    """
    if r_face <= math.sqrt(2.0):
        raise GeometryError("face-sphere radius must exceed sqrt(2)")
    return math.pi - math.acos(-1.0 / (r_face * r_face))


def solve_cube_radius(target_angle: float) -> float:
    """Face-sphere radius whose cube has the given interior dihedral angle.

    Bisection on the monotone dihedral_angle over a fixed bracket; the
    residual is at most 1e-12 in angle.
    """
    if not math.pi / 3.0 < target_angle < math.pi / 2.0:
        raise GeometryError("target angle must lie strictly between pi/3 and pi/2")
    lo, hi = math.sqrt(2.0) + 1e-6, 1e3
    # dihedral_angle is increasing in r_face on this bracket.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if dihedral_angle(mid) < target_angle:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Exact reference families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactFamily:
    """Closed-form reference surface: sphere, vertical unduloid or hypersphere."""

    kind: str  # "sphere" | "vertical_unduloid" | "hypersphere"
    eps: float

    def __post_init__(self):
        if self.kind not in ("sphere", "vertical_unduloid", "hypersphere"):
            raise GeometryError(f"unknown family kind {self.kind!r}")
        if self.kind == "sphere" and not 0.0 < self.eps < EPS_MAX:
            raise GeometryError("sphere parameter must lie in (0, eps_max)")
        if self.kind != "sphere" and not 0.0 < self.eps < 1.0:
            raise GeometryError("shape parameter must lie in (0, 1)")


def top_wall_height(x1: float) -> float:
    """Height of the top face sphere above the axis plane at radius x1."""
    return CELL_C - math.sqrt(CELL_R ** 2 - x1 * x1)


def exact_family_point(f: ExactFamily, t1: float, t2: float) -> np.ndarray:
    """Chart point on an exact family surface.

    sphere:             t1 = polar angle, t2 = azimuth in [0, pi/2].
    vertical_unduloid:  t1 = meridian angle (0 at the x3 = 0 waist),
                        t2 = rotation angle about Ox3 in [0, pi/2].
    hypersphere:        (t1, t2) = (x1, x2) in the quarter square.
    """
    e = f.eps
    if f.kind == "sphere":
        p = e * np.array(
            [math.sin(t1) * math.cos(t2), math.sin(t1) * math.sin(t2), math.cos(t1)]
        )
        return check_in_ball(p)
    half_diff = 0.5 * (1.0 / e - e)
    half_sum = 0.5 * (1.0 / e + e)
    if f.kind == "vertical_unduloid":
        if not 0.0 <= t2 <= math.pi / 2.0 + 1e-12:
            raise GeometryError("rotation angle outside [0, pi/2]")
        x1 = -half_diff + half_sum * math.cos(t1)
        x3 = half_sum * math.sin(t1)
        if x3 < -1e-12 or x1 < 0.0:
            raise GeometryError("meridian parameter outside the chart domain")
        if x3 > top_wall_height(x1) + 1e-9:
            raise GeometryError("meridian point above the top cell face")
        p = np.array([x1 * math.cos(t2), x1 * math.sin(t2), x3])
        return check_in_ball(p)
    # hypersphere: Euclidean sphere centred below the origin on Ox3.
    rad2 = half_sum ** 2 - t1 * t1 - t2 * t2
    if t1 < 0.0 or t2 < 0.0 or rad2 <= 0.0:
        raise GeometryError("hypersphere parameters outside the chart domain")
    x3 = -half_diff + math.sqrt(rad2)
    if x3 < -1e-12:
        raise GeometryError("hypersphere point below the base plane")
    p = np.array([t1, t2, x3])
    return check_in_ball(p)


# ---------------------------------------------------------------------------
# Quarter-square area (the V -> 0 limit of the hypersphere family)
# ---------------------------------------------------------------------------


def _quarter_integrand(theta: float) -> float:
    cc = CELL_C * math.cos(theta)
    return 2.0 / (1.0 - cc * cc + cc * math.sqrt(cc * cc - 1.0))


def quarter_square_area(n_panels: int | None = None) -> float:
    """Hyperbolic area of one quarter of the central square of the tiling.

    Computed as the polar-coordinate integral over (0, pi/4) minus pi; the
    closed-form value of the integral is 11*pi/10.  With n_panels set, a
    fixed composite Simpson rule is used instead of adaptive quadrature.
    """
    if n_panels is None:
        val, _ = quad(_quarter_integrand, 0.0, math.pi / 4.0, epsabs=1e-12, epsrel=1e-12)
    else:
        x = np.linspace(0.0, math.pi / 4.0, 2 * n_panels + 1)
        y = np.array([_quarter_integrand(t) for t in x])
        h = x[1] - x[0]
        val = h / 3.0 * (y[0] + y[-1] + 4.0 * y[1::2].sum() + 2.0 * y[2:-1:2].sum())
    return val - math.pi
