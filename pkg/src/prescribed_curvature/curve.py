"""
Closed curves on the unit sphere sampled at N uniform parameter values.

Node ``k`` sits at parameter ``theta_k = k / N`` of the circle R/Z; derivatives
are cyclic central differences with step ``h = 1 / N`` (five-point, fourth
order, by default). Consecutive nodes are
joined by great arcs of the round metric; that polyline is what the
intersection test, the final resampling passes and the enclosed-area
computation see.

Orientation: the enclosed disc is to the left of the velocity, i.e. on the
side of ``n = p x T``; positive geodesic curvature bends toward it.
"""

from dataclasses import dataclass, field
from math import pi
from typing import List, Tuple

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import DegenerateCurveError, DomainError, UndefinedRegionError
from .geometry import ConformalMetric
from .harmonics import equal_area_grid

MIN_NODES = 16
UNIT_TOL = 1e-10
DEFAULT_CLEARANCE = 1e-4


def _normalize(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _dot(a, b):
    return np.sum(a * b, axis=-1)


class DiscreteCurve:
    """Immutable closed curve given by ``N`` cyclically ordered unit 3-vectors."""

    __slots__ = ("_nodes",)

    def __init__(self, nodes, normalize: bool = False):
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 3:
            raise DomainError(f"nodes must have shape (N, 3), got {nodes.shape}")
        if nodes.shape[0] < MIN_NODES:
            raise DomainError(f"a discrete curve needs at least {MIN_NODES} nodes")
        if normalize:
            nodes = _normalize(nodes)
        if np.any(np.abs(np.linalg.norm(nodes, axis=1) - 1.0) > UNIT_TOL):
            raise DomainError("curve nodes must be unit vectors")
        if np.min(np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)) <= 0.0:
            raise DegenerateCurveError("consecutive nodes coincide")
        nodes.setflags(write=False)
        self._nodes = nodes

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes

    @property
    def N(self) -> int:
        return self._nodes.shape[0]

    @property
    def h(self) -> float:
        return 1.0 / self.N

    def __len__(self):
        return self.N

    def __repr__(self):
        return f"DiscreteCurve(N={self.N})"

    def shift(self, m: int) -> "DiscreteCurve":
        """The S^1 action ``(m/N) * gamma``: node k becomes node k + m."""
        return DiscreteCurve(np.roll(self._nodes, -m, axis=0))

    def reversed(self) -> "DiscreteCurve":
        return DiscreteCurve(self._nodes[(-np.arange(self.N)) % self.N])


# ---------------------------------------------------------------------------
# local differential quantities


STENCIL_ORDER = 4


def cyclic_differences(x, order: int = STENCIL_ORDER):
    """Cyclic central first and second differences of rows of ``x`` w.r.t. theta = k / N."""
    n = x.shape[0]
    p1, m1 = np.roll(x, -1, axis=0), np.roll(x, 1, axis=0)
    if order == 2:
        return (p1 - m1) * (0.5 * n), (p1 - 2.0 * x + m1) * float(n * n)
    if order == 4:
        p2, m2 = np.roll(x, -2, axis=0), np.roll(x, 2, axis=0)
        d1 = (8.0 * (p1 - m1) - (p2 - m2)) * (n / 12.0)
        d2 = (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * x) * (n * n / 12.0)
        return d1, d2
    raise ValueError(f"unsupported stencil order {order}")


def derivatives(curve: DiscreteCurve, order: int = STENCIL_ORDER):
    """Raw cyclic central differences ``(velocity, acceleration)``, not projected.

    ``order=2`` is the three-point stencil; the default fourth-order
    five-point stencil is what the solver and all diagnostics use.
    """
    return cyclic_differences(curve.nodes, order)


def tangent_velocity(p, vel):
    return vel - _dot(vel, p)[:, None] * p


def frames(curve: DiscreteCurve):
    """Per-node orthonormal tangent frames ``(T, n)`` with ``n = p x T``."""
    vel, _ = derivatives(curve)
    vt = tangent_velocity(curve.nodes, vel)
    speed = np.linalg.norm(vt, axis=1)
    if np.any(speed <= 0.0):
        raise DegenerateCurveError("zero velocity at a node")
    T = vt / speed[:, None]
    return T, np.cross(curve.nodes, T)


def arc_angles(curve: DiscreteCurve) -> np.ndarray:
    """Round great-arc length of segment k (node k to node k+1)."""
    p = curve.nodes
    q = np.roll(p, -1, axis=0)
    return 2.0 * np.arcsin(np.clip(0.5 * np.linalg.norm(q - p, axis=1), 0.0, 1.0))


def segment_lengths(curve: DiscreteCurve, metric: ConformalMetric) -> np.ndarray:
    """Per-segment g_t-lengths, trapezoidal in the weight exp(t phi / 2)."""
    w = metric.speed_weight(curve.nodes)
    return arc_angles(curve) * 0.5 * (w + np.roll(w, -1))


def speed_variation(curve: DiscreteCurve, metric: ConformalMetric) -> float:
    """(max - min) / mean of the per-segment g_t-speeds."""
    seg = segment_lengths(curve, metric)
    return float((seg.max() - seg.min()) / seg.mean())


def length(curve: DiscreteCurve, metric: ConformalMetric) -> float:
    """g_t-length ``h * sum_k exp(t phi_k / 2) |gamma'_k|`` (periodic trapezoid rule)."""
    p = curve.nodes
    vel, _ = derivatives(curve)
    speed = np.linalg.norm(tangent_velocity(p, vel), axis=1)
    return float(np.sum(metric.speed_weight(p) * speed) / curve.N)


def polyline_length(curve: DiscreteCurve, metric: ConformalMetric) -> float:
    """Great-arc polyline length weighted at arc midpoints (second order)."""
    p = curve.nodes
    mid = _normalize(p + np.roll(p, -1, axis=0))
    return float(np.sum(arc_angles(curve) * metric.speed_weight(mid)))


def geodesic_curvature(curve: DiscreteCurve, metric: ConformalMetric, order: int = STENCIL_ORDER) -> np.ndarray:
    """Per-node geodesic curvature with respect to g_t.

    ``kappa_t = exp(-t phi / 2) (kappa_can - (t/2) d phi(n))`` where ``n`` is
    the left normal. This is the same combination the residual's normal
    component measures, so a zero residual means exactly ``kappa_t = s c``.
    """
    p = curve.nodes
    vel, acc = derivatives(curve, order)
    vt = tangent_velocity(p, vel)
    speed2 = _dot(vt, vt)
    if np.any(speed2 <= 0.0):
        raise DegenerateCurveError("zero velocity at a node")
    n = np.cross(p, vt) / np.sqrt(speed2)[:, None]
    kappa_can = _dot(acc, n) / speed2
    if metric.t == 0.0:
        return kappa_can
    phi = metric.phi
    dphi_n = _dot(phi.gradient(p), n)
    return np.exp(-0.5 * metric.t * phi.value(p)) * (kappa_can - 0.5 * metric.t * dphi_n)


# ---------------------------------------------------------------------------
# reparametrization


def _slerp(a, b, f):
    omega = 2.0 * np.arcsin(np.clip(0.5 * np.linalg.norm(b - a, axis=1), 0.0, 1.0))
    so = np.sin(omega)
    small = so < 1e-300
    so = np.where(small, 1.0, so)
    wa = np.where(small, 1.0 - f, np.sin((1.0 - f) * omega) / so)
    wb = np.where(small, f, np.sin(f * omega) / so)
    return _normalize(wa[:, None] * a + wb[:, None] * b)


def _resample_pass(p, metric):
    n = p.shape[0]
    w = metric.speed_weight(p)
    q = np.roll(p, -1, axis=0)
    arc = 2.0 * np.arcsin(np.clip(0.5 * np.linalg.norm(q - p, axis=1), 0.0, 1.0))
    seg = arc * 0.5 * (w + np.roll(w, -1))
    total = seg.sum()
    if total < 1e-8:
        raise DegenerateCurveError(f"curve length {total:.3g} below 1e-8")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    stations = np.arange(n) * (total / n)
    k = np.clip(np.searchsorted(cum, stations, side="right") - 1, 0, n - 1)
    f = np.clip((stations - cum[k]) / seg[k], 0.0, 1.0)
    return _slerp(p[k], q[k], f), seg


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)
SPLINE_SUBDIV = 8


def _spline_pass(p, metric):
    """Redistribute nodes by g_t-arclength of the periodic cubic spline through them.

    Length-preserving to the spline's accuracy, unlike chord interpolation,
    so it does the coarse work when the parametrization is far from uniform.
    """
    n = p.shape[0]
    theta = np.arange(n + 1) / n
    spl = CubicSpline(theta, np.vstack([p, p[:1]]), bc_type="periodic")
    fine = np.arange(n * SPLINE_SUBDIV + 1) / (n * SPLINE_SUBDIV)
    half = 0.5 / (n * SPLINE_SUBDIV)
    mids = 0.5 * (fine[:-1] + fine[1:])
    x = (mids[:, None] + half * _GAUSS_X[None, :]).ravel()
    s, ds = spl(x), spl(x, 1)
    r = np.linalg.norm(s, axis=1)
    u = s / r[:, None]
    speed = np.linalg.norm(ds - _dot(ds, u)[:, None] * u, axis=1) / r
    piece = (metric.speed_weight(u) * speed).reshape(-1, len(_GAUSS_W)) @ _GAUSS_W * half
    cum = np.concatenate([[0.0], np.cumsum(piece)])
    total = cum[-1]
    if total < 1e-8:
        raise DegenerateCurveError(f"curve length {total:.3g} below 1e-8")
    stations = np.arange(n) * (total / n)
    return _normalize(spl(PchipInterpolator(cum, fine)(stations)))


def resample_constant_speed(curve: DiscreteCurve, metric: ConformalMetric,
                            tol: float = 1e-12, max_passes: int = 100,
                            spline_threshold: float = 1e-4) -> DiscreteCurve:
    """Re-place nodes at N equal g_t-arclength stations (node 0 stays put).

    While the per-segment speeds spread by more than ``spline_threshold``
    the nodes are redistributed along a periodic cubic spline; the remaining
    passes interpolate along the great arcs of the current polyline until the
    per-segment g_t-speeds agree to ``tol`` relative.
    """
    p = np.array(curve.nodes)
    seg = segment_lengths(curve, metric)
    if seg.sum() < 1e-8:
        raise DegenerateCurveError(f"curve length {seg.sum():.3g} below 1e-8")
    for _ in range(max_passes):
        spread = (seg.max() - seg.min()) / seg.mean()
        if spread <= tol:
            break
        if spread > spline_threshold:
            p = _spline_pass(p, metric)
        else:
            p, _ = _resample_pass(p, metric)
        w = metric.speed_weight(p)
        seg = 2.0 * np.arcsin(np.clip(0.5 * np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1), 0.0, 1.0)) \
            * 0.5 * (w + np.roll(w, -1))
        if seg.sum() < 1e-8:
            raise DegenerateCurveError("curve collapsed during resampling")
    return DiscreteCurve(p)


# ---------------------------------------------------------------------------
# embeddedness


@dataclass
class IntersectionReport:
    embedded: bool
    pairs: List[Tuple[int, int]] = field(default_factory=list)
    min_distance: float = float("inf")


def _point_arc_distance(q, a0, a1):
    """Chord distance from points q to great arcs (a0, a1), row-wise."""
    nrm = np.cross(a0, a1)
    nn = np.linalg.norm(nrm, axis=1)
    nhat = nrm / np.where(nn > 0, nn, 1.0)[:, None]
    qn = _dot(q, nhat)
    proj = q - qn[:, None] * nhat
    inside = (_dot(np.cross(a0, proj), nhat) >= 0) & (_dot(np.cross(proj, a1), nhat) >= 0) \
        & (_dot(proj, a0 + a1) > 0) & (nn > 0)
    perp = 2.0 * np.sin(0.5 * np.arcsin(np.clip(np.abs(qn), 0.0, 1.0)))
    ends = np.minimum(np.linalg.norm(q - a0, axis=1), np.linalg.norm(q - a1, axis=1))
    return np.where(inside, np.minimum(perp, ends), ends)


def arc_pair_distances(a0, a1, b0, b1):
    """Chord distance between great arcs (a0, a1) and (b0, b1); 0 when they cross."""
    na = np.cross(a0, a1)
    nb = np.cross(b0, b1)
    s1, s2 = _dot(na, b0), _dot(na, b1)
    s3, s4 = _dot(nb, a0), _dot(nb, a1)
    crossing = (s1 * s2 <= 0) & (s3 * s4 <= 0) & (_dot(a0 + a1, b0 + b1) > 0) \
        & ((s1 != 0) | (s2 != 0))
    d = np.minimum.reduce([
        _point_arc_distance(b0, a0, a1),
        _point_arc_distance(b1, a0, a1),
        _point_arc_distance(a0, b0, b1),
        _point_arc_distance(a1, b0, b1),
    ])
    return np.where(crossing, 0.0, d)


def _nonadjacent_pairs(n):
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    return i[keep], j[keep]


def self_intersects(curve: DiscreteCurve, clearance: float = DEFAULT_CLEARANCE) -> IntersectionReport:
    """Brute-force test of all non-adjacent great-arc segment pairs.

    A pair offends when the arcs cross or come closer than ``clearance``
    (chord units). Segments sharing a node are never compared.
    """
    if clearance <= 0:
        raise DomainError("clearance must be positive")
    p = curve.nodes
    q = np.roll(p, -1, axis=0)
    i, j = _nonadjacent_pairs(curve.N)
    # cheap bounding-sphere prefilter
    centre = _normalize(p + q)
    rad = 2.0 * np.sin(0.25 * arc_angles(curve))  # arc lies within this chord radius of its midpoint
    gap = np.linalg.norm(centre[i] - centre[j], axis=1) - rad[i] - rad[j]
    close = gap < clearance
    i, j = i[close], j[close]
    if i.size == 0:
        return IntersectionReport(True, [], float(np.min(gap)) if gap.size else float("inf"))
    d = arc_pair_distances(p[i], q[i], p[j], q[j])
    hit = d < clearance
    pairs = [(int(a), int(b)) for a, b in zip(i[hit], j[hit])]
    return IntersectionReport(not pairs, pairs, float(d.min()))


# ---------------------------------------------------------------------------
# S^1-orbit distance


def aligned_distance(a: DiscreteCurve, b: DiscreteCurve) -> float:
    """min over cyclic shifts and both orientations of max_k |a_k - b_(k+shift)|."""
    if a.N != b.N:
        raise DomainError("aligned_distance needs equal node counts; resample first")
    n = a.N
    k = np.arange(n)
    idx = (k[None, :] + k[:, None]) % n          # [shift, k]
    best = np.inf
    for nodes in (b.nodes, b.nodes[(-k) % n]):
        diff = a.nodes[None, :, :] - nodes[idx]
        best = min(best, float(np.min(np.max(np.linalg.norm(diff, axis=2), axis=1))))
    return best


# ---------------------------------------------------------------------------
# enclosed area and curvature integral


def _fan_sum(q, p):
    """Sum of signed round areas of the triangles (q, p_k, p_k+1) for each row of q.

    For a simple closed curve with left region Omega and q away from the
    antipodal image of the curve, the result is ``A(Omega)`` when ``-q`` is
    outside Omega and ``A(Omega) - 4 pi`` when it is inside.
    """
    a = p
    b = np.roll(p, -1, axis=0)
    axb = np.cross(a, b)
    ab = _dot(a, b)
    num = q @ axb.T
    den = 1.0 + q @ a.T + ab[None, :] + q @ b.T
    return 2.0 * np.sum(np.arctan2(num, den), axis=1)


def _reference_direction(p):
    """A direction far from the antipodal image of the curve."""
    golden = pi * (3.0 - np.sqrt(5.0))
    k = np.arange(200) + 0.5
    z = 1.0 - 2.0 * k / 200
    r = np.sqrt(1.0 - z * z)
    cand = np.stack([r * np.cos(golden * k), r * np.sin(golden * k), z], axis=1)
    clearance = np.min(np.linalg.norm(cand[:, None, :] + p[None, :, :], axis=2), axis=1)
    return cand[np.argmax(clearance)]


def enclosed_area(curve: DiscreteCurve) -> float:
    """Round area of the great-arc polygon's left region."""
    q = _reference_direction(curve.nodes)
    s = float(_fan_sum(q[None, :], curve.nodes)[0])
    return s + 4.0 * pi if s < 0.0 else s


def inside_mask(curve: DiscreteCurve, points, chunk: int = 4096) -> np.ndarray:
    """Spherical winding test: is each point in the left region of the curve?"""
    points = np.asarray(points, dtype=float)
    out = np.empty(points.shape[0], dtype=bool)
    for start in range(0, points.shape[0], chunk):
        s = _fan_sum(-points[start:start + chunk], curve.nodes)
        out[start:start + chunk] = s < 0.0
    return out


def _require_embedded(curve):
    report = self_intersects(curve)
    if not report.embedded:
        raise UndefinedRegionError(
            f"curve is not embedded ({len(report.pairs)} offending segment pairs); enclosed region undefined")


def enclosed_gauss_integral(curve: DiscreteCurve, metric: ConformalMetric,
                            grid_resolution: int = 128, method: str = "boundary") -> float:
    """Integral of K_t dA_t over the disc to the left of the curve.

    Uses ``K_t exp(t phi) = 1 - (t/2) lap phi`` so only round areas appear.

    ``method="boundary"`` (default): exact round area of the great-arc polygon
    plus the divergence-theorem flux ``(t/2) * int d phi(n) ds``; second order
    in N, ``grid_resolution`` unused.
    ``method="grid"``: sum of ``(1 - (t/2) lap phi) * cell area`` over the
    equal-area cells whose centres pass the winding test. First order in the
    cell size; kept as an independent cross-check.
    """
    _require_embedded(curve)
    if method == "boundary":
        area = enclosed_area(curve)
        if metric.t == 0.0 or metric.phi.is_zero:
            return area
        p = curve.nodes
        _, n = frames(curve)
        arc = arc_angles(curve)
        ds = 0.5 * (arc + np.roll(arc, 1))
        flux = float(np.sum(_dot(metric.phi.gradient(p), n) * ds))
        return area + 0.5 * metric.t * flux
    if method == "grid":
        pts, cell = equal_area_grid(grid_resolution)
        mask = inside_mask(curve, pts)
        dens = 1.0 - 0.5 * metric.t * metric.phi.laplacian(pts[mask])
        return float(np.sum(dens) * cell)
    raise ValueError(f"unknown method {method!r}")
