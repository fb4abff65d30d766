"""Hyperbolic area and enclosed-volume functionals with analytic gradients.

Area integrates the conformal area density over non-CLEAR facets.  Volume
uses the divergence theorem with a vector field q whose divergence equals
the hyperbolic volume density, so the integral of q . n over the closed
facet list equals the enclosed volume.  Coordinate-plane pieces of the
boundary contribute nothing to the flux (q is tangent there), which is why
meshes only need CLEAR facets on the face spheres.
"""

from __future__ import annotations

import numpy as np

from hypisop.mesh import SurfaceMesh

# Quadrature rules on the reference triangle, as (barycentric coords, weights).
# "mid3": degree-2 edge-midpoint rule.  "deg4": 6-point degree-4 rule.
_MID3 = (
    np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
    np.array([1.0, 1.0, 1.0]) / 3.0,
)
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
_DEG4 = (
    np.array(
        [
            [1 - 2 * _A1, _A1, _A1],
            [_A1, 1 - 2 * _A1, _A1],
            [_A1, _A1, 1 - 2 * _A1],
            [1 - 2 * _A2, _A2, _A2],
            [_A2, 1 - 2 * _A2, _A2],
            [_A2, _A2, 1 - 2 * _A2],
        ]
    ),
    np.array([_W1, _W1, _W1, _W2, _W2, _W2]),
)
QUADRATURES = {"mid3": _MID3, "deg4": _DEG4}


def flux_field(p: np.ndarray) -> np.ndarray:
    """Vector field q with div q = 8 / (1 - |x|^2)^3, symmetrized over axes.

    p may be a single point or an (n, 3) batch; points must lie strictly
    inside the unit ball.
    """
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    x = np.atleast_2d(p)
    out = np.empty_like(x)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        w = 1.0 - x[:, j] ** 2 - x[:, k] ** 2
        out[:, i] = _g_component(w, x[:, i])
    out /= 3.0
    return out[0] if single else out


def _g_component(w, t):
    """Scalar profile G(w, t): the axis component of the flux field."""
    u = w - t * t
    s = np.sqrt(w)
    l = 2.0 * np.arctanh(t / s)
    return 2.0 * t / (u * u * w) + 3.0 * t / (u * w * w) + 1.5 * w ** -2.5 * l


def flux_jacobian(p: np.ndarray) -> np.ndarray:
    """Jacobian d q_i / d x_j of the flux field, shape (..., 3, 3)."""
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    x = np.atleast_2d(p)
    n = len(x)
    J = np.zeros((n, 3, 3))
    u_full = 1.0 - np.sum(x * x, axis=1)
    diag = 8.0 / (3.0 * u_full ** 3)
    for i in range(3):
        J[:, i, i] = diag
        j, k = (i + 1) % 3, (i + 2) % 3
        w = 1.0 - x[:, j] ** 2 - x[:, k] ** 2
        gw = _dG_dw(w, x[:, i]) / 3.0
        J[:, i, j] = gw * (-2.0 * x[:, j])
        J[:, i, k] = gw * (-2.0 * x[:, k])
    return J[0] if single else J


def _dG_dw(w, t):
    u = w - t * t
    s = np.sqrt(w)
    l = 2.0 * np.arctanh(t / s)
    return (
        2.0 * t * (-2.0 / (u ** 3 * w) - 1.0 / (u ** 2 * w ** 2))
        + 3.0 * t * (-1.0 / (u ** 2 * w ** 2) - 2.0 / (u * w ** 3))
        - 3.75 * w ** -3.5 * l
        - 1.5 * t / (w ** 3 * u)
    )


def _area_density(p: np.ndarray) -> np.ndarray:
    return 4.0 / (1.0 - np.sum(p * p, axis=-1)) ** 2


def _area_density_grad(p: np.ndarray) -> np.ndarray:
    u = 1.0 - np.sum(p * p, axis=-1, keepdims=True)
    return 16.0 * p / u ** 3


def _facet_frames(m: SurfaceMesh):
    p = m.positions
    v = p[m.facets]                      # (m, 3, 3)
    N = 0.5 * np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    return v, N


def total_area(m: SurfaceMesh, rule: str = "mid3") -> float:
    """Hyperbolic area of the non-CLEAR facets."""
    lam, wts = QUADRATURES[rule]
    v, N = _facet_frames(m)
    keep = ~m.clear
    aE = np.linalg.norm(N[keep], axis=1)
    pts = np.einsum("qk,fkd->fqd", lam, v[keep])
    phi = _area_density(pts)             # (f, q)
    return float(np.sum(aE * (phi @ wts)))


def total_volume(m: SurfaceMesh, rule: str = "mid3") -> float:
    """Enclosed hyperbolic volume via the flux of q over all facets."""
    lam, wts = QUADRATURES[rule]
    v, N = _facet_frames(m)
    pts = np.einsum("qk,fkd->fqd", lam, v)
    q = flux_field(pts.reshape(-1, 3)).reshape(pts.shape)
    fluxes = np.einsum("fqd,fd,q->f", q, N, wts)
    return float(np.sum(fluxes))


def grad_area(m: SurfaceMesh, rule: str = "mid3") -> np.ndarray:
    """d(total_area)/d(positions), shape (n, 3); CLEAR facets excluded."""
    lam, wts = QUADRATURES[rule]
    v, N = _facet_frames(m)
    keep = np.nonzero(~m.clear)[0]
    v = v[keep]
    N = N[keep]
    aE = np.linalg.norm(N, axis=1)
    nhat = N / aE[:, None]
    pts = np.einsum("qk,fkd->fqd", lam, v)
    phi = _area_density(pts)
    phibar = phi @ wts                                  # (f,)
    dphi = _area_density_grad(pts)                      # (f, q, 3)
    out = np.zeros_like(m.positions)
    facets = m.facets[keep]
    for j in range(3):
        j1, j2 = (j + 1) % 3, (j + 2) % 3
        # shape term: d a_E / d v_j = 0.5 (v_{j+1} - v_{j+2}) x nhat
        dA = 0.5 * np.cross(v[:, j1] - v[:, j2], nhat)
        term = dA * phibar[:, None]
        # density term: a_E * sum_k w_k lam_kj grad(phi)(p_k)
        term += aE[:, None] * np.einsum("q,q,fqd->fd", wts, lam[:, j], dphi)
        np.add.at(out, facets[:, j], term)
    return out


def grad_volume(m: SurfaceMesh, rule: str = "mid3") -> np.ndarray:
    """d(total_volume)/d(positions), shape (n, 3); all facets included."""
    lam, wts = QUADRATURES[rule]
    v, N = _facet_frames(m)
    pts = np.einsum("qk,fkd->fqd", lam, v)
    flat = pts.reshape(-1, 3)
    q = flux_field(flat).reshape(pts.shape)             # (f, q, 3)
    Jq = flux_jacobian(flat).reshape(pts.shape + (3,))  # (f, q, 3, 3)
    qbar = np.einsum("q,fqd->fd", wts, q)
    out = np.zeros_like(m.positions)
    for j in range(3):
        j1, j2 = (j + 1) % 3, (j + 2) % 3
        # normal term: 0.5 (v_{j+1} - v_{j+2}) x qbar
        term = 0.5 * np.cross(v[:, j1] - v[:, j2], qbar)
        # field term: sum_k w_k lam_kj Jq(p_k)^T N
        term += np.einsum("q,q,fqab,fa->fb", wts, lam[:, j], Jq, N)
        np.add.at(out, m.facets[:, j], term)
    return out
