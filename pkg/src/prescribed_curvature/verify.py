"""
Certification of computed curves.

The checks mirror what can be asserted from curve data alone: the length
bound ``L <= 2 pi sqrt(2) (inf K)^(-1/2)`` for embedded curves with
nonnegative geodesic curvature on a convex sphere, its equivalent form
``inf K <= 2 lambda_1`` with ``lambda_1 = 4 pi^2 / L^2``, Gauss-Bonnet closure
for the enclosed disc, curvature matching, embeddedness and constant speed.
"""

from dataclasses import asdict, dataclass, field
from math import pi, sqrt
from typing import Dict, Optional

import numpy as np

from .curve import (
    DEFAULT_CLEARANCE,
    DiscreteCurve,
    derivatives,
    enclosed_gauss_integral,
    geodesic_curvature,
    length,
    self_intersects,
    speed_variation,
    tangent_velocity,
)
from .errors import DegenerateCurveError, DomainError, UndefinedRegionError
from .geometry import DEFAULT_GRID, ConformalMetric
from .solver import CurvatureSpec

BOUND_SLACK = 1e-8
NEGATIVE_CURVATURE_TOL = 1e-6
SPEED_TOL = 1e-8
GAUSS_BONNET_TOL = 5e-3
GB_GRID = 128


def first_eigenvalue(length_: float) -> float:
    """First nonzero eigenvalue ``4 pi^2 / L^2`` of the Laplacian on a circle of length L."""
    if not length_ > 0:
        raise DomainError(f"length must be positive, got {length_}")
    return 4.0 * pi ** 2 / length_ ** 2


def length_bound(min_k: float) -> float:
    if not min_k > 0:
        return float("inf")
    return 2.0 * pi * sqrt(2.0) / sqrt(min_k)


@dataclass
class LengthBoundCheck:
    length: float
    bound: float
    ok: bool
    preconditions_ok: bool = True
    note: str = ""


@dataclass
class ReillyCheck:
    two_lambda1: float
    min_K: float
    ok: bool
    preconditions_ok: bool = True
    note: str = ""


def _preconditions(curve, metric, embedded=None):
    notes = []
    kappa = geodesic_curvature(curve, metric)
    if np.min(kappa) < -NEGATIVE_CURVATURE_TOL:
        notes.append(f"geodesic curvature reaches {np.min(kappa):.3e} < 0")
    if embedded is None:
        embedded = self_intersects(curve).embedded
    if not embedded:
        notes.append("curve is not embedded")
    return not notes, "; ".join(notes)


def check_length_bound(curve: DiscreteCurve, metric: ConformalMetric, min_K: Optional[float] = None,
                       grid_resolution: int = DEFAULT_GRID, embedded: Optional[bool] = None) -> LengthBoundCheck:
    """``L <= 2 pi sqrt(2) (min K)^(-1/2) + 1e-8`` with min K over the grid at the metric's t.

    ``min_K`` overrides the grid value (comparator tests).
    """
    if min_K is None:
        min_K = metric.min_curvature_at_t(grid_resolution)
    pre_ok, note = _preconditions(curve, metric, embedded)
    L = length(curve, metric)
    bound = length_bound(min_K)
    return LengthBoundCheck(L, bound, bool(L <= bound + BOUND_SLACK), pre_ok, note)


def check_reilly_corollary(curve: DiscreteCurve, metric: ConformalMetric, min_K: Optional[float] = None,
                           grid_resolution: int = DEFAULT_GRID, embedded: Optional[bool] = None,
                           length_: Optional[float] = None) -> ReillyCheck:
    """``min K <= 2 lambda_1(L)``, the eigenvalue form of the length bound."""
    if min_K is None:
        min_K = metric.min_curvature_at_t(grid_resolution)
    pre_ok, note = _preconditions(curve, metric, embedded)
    L = length(curve, metric) if length_ is None else length_
    two_l1 = 2.0 * first_eigenvalue(L)
    # tolerance transported from the length form: d(2 lambda_1) = -16 pi^2 / L^3 dL
    slack = 16.0 * pi ** 2 / L ** 3 * BOUND_SLACK
    return ReillyCheck(two_l1, float(min_K), bool(min_K <= two_l1 + slack), pre_ok, note)


def reference_circle(curve: DiscreteCurve, kappa: float) -> DiscreteCurve:
    """Latitude circle of radius ``arccot(kappa)`` registered to ``curve``.

    Round-sphere solutions come in a rotation family, so "the" circle is the
    one whose axis is the normal of the curve's best-fit plane (oriented to
    keep the curve counter-clockwise about it), sampled uniformly starting at
    the azimuth of node 0.
    """
    p = curve.nodes
    _, _, vt = np.linalg.svd(p - p.mean(axis=0))
    axis = vt[2]
    if np.sum(np.cross(p, np.roll(p, -1, axis=0)) @ axis) < 0:
        axis = -axis
    u1 = p[0] - (p[0] @ axis) * axis
    u1 /= np.linalg.norm(u1)
    u2 = np.cross(axis, u1)
    r = np.arctan2(1.0, kappa)
    th = 2.0 * pi * np.arange(curve.N) / curve.N
    nodes = np.cos(r) * axis + np.sin(r) * (np.cos(th)[:, None] * u1 + np.sin(th)[:, None] * u2)
    return DiscreteCurve(nodes, normalize=True)


def curvature_line_integral(curve: DiscreteCurve, metric: ConformalMetric) -> float:
    """``int kappa_t ds_t`` by the periodic trapezoid rule in theta."""
    p = curve.nodes
    vel, _ = derivatives(curve)
    ds = metric.speed_weight(p) * np.linalg.norm(tangent_velocity(p, vel), axis=1) / curve.N
    return float(np.sum(geodesic_curvature(curve, metric) * ds))


def check_gauss_bonnet(curve: DiscreteCurve, metric: ConformalMetric, grid_resolution: int = GB_GRID,
                       method: str = "boundary") -> float:
    """``|int kappa_t ds_t + int_Omega K_t dA_t - 2 pi|`` for the disc left of the curve."""
    enclosed = enclosed_gauss_integral(curve, metric, grid_resolution, method=method)
    return abs(curvature_line_integral(curve, metric) + enclosed - 2.0 * pi)


@dataclass
class Diagnostics:
    length: float = float("nan")
    lambda1: float = float("nan")
    min_gauss_curvature: float = float("nan")
    length_bound: float = float("nan")
    gauss_bonnet_residual: Optional[float] = None
    max_curvature_error: float = float("nan")
    embedded: bool = False
    speed_variation: float = float("nan")
    length_ok: bool = False
    reilly_ok: bool = False
    nonnegative_curvature: bool = False
    notes: Dict[str, str] = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        return (self.embedded and self.length_ok and self.reilly_ok and self.nonnegative_curvature
                and self.speed_variation < SPEED_TOL
                and self.gauss_bonnet_residual is not None and self.gauss_bonnet_residual < GAUSS_BONNET_TOL
                and not self.notes)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def certify(curve: DiscreteCurve, metric: ConformalMetric, spec: Optional[CurvatureSpec] = None,
            grid_resolution: int = DEFAULT_GRID, gauss_bonnet_resolution: int = GB_GRID,
            clearance: float = DEFAULT_CLEARANCE) -> Diagnostics:
    """Populate every diagnostic; failures of individual checks are recorded in ``notes``."""
    d = Diagnostics()
    try:
        d.embedded = self_intersects(curve, clearance).embedded
        d.min_gauss_curvature = metric.min_curvature_at_t(grid_resolution)
        d.length_bound = length_bound(d.min_gauss_curvature)
        d.length = length(curve, metric)
        d.lambda1 = first_eigenvalue(d.length)
        d.speed_variation = speed_variation(curve, metric)
        kappa = geodesic_curvature(curve, metric)
        d.nonnegative_curvature = bool(np.min(kappa) >= -NEGATIVE_CURVATURE_TOL)
        if spec is not None:
            d.max_curvature_error = float(np.max(np.abs(kappa - spec(curve.nodes))))
        lb = check_length_bound(curve, metric, d.min_gauss_curvature, embedded=d.embedded)
        rc = check_reilly_corollary(curve, metric, d.min_gauss_curvature, embedded=d.embedded, length_=d.length)
        d.length_ok, d.reilly_ok = lb.ok, rc.ok
    except (DegenerateCurveError, DomainError) as exc:
        d.notes["geometry"] = str(exc)
        return d
    if d.embedded:
        try:
            d.gauss_bonnet_residual = check_gauss_bonnet(curve, metric, gauss_bonnet_resolution)
        except UndefinedRegionError as exc:
            d.notes["gauss_bonnet"] = str(exc)
    else:
        d.notes["gauss_bonnet"] = "not applicable: curve is not embedded"
    return d
