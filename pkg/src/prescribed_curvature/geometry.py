"""
Conformal metric family ``g_t = exp(t phi) g_can`` on the unit sphere.

Points are unit vectors in R^3 and tangent vectors are ambient vectors
orthogonal to their base point, so no chart is ever needed.

With ``u = t phi / 2`` the metric is ``exp(2u) g_can`` and the standard
conformal-change formulas give::

    K_t       = exp(-t phi) (1 - (t/2) lap phi)
    |v|_t     = exp(t phi / 2) |v|
    J_t       = J_can = p x .        (quarter turns are conformally invariant)
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ConvexityError, DomainError
from .harmonics import HarmonicSum, equal_area_grid

UNIT_TOL = 1e-12
TANGENT_TOL = 1e-10
DEFAULT_GRID = 64
T_GRID = np.linspace(0.0, 1.0, 21)


def check_unit(p, tol=UNIT_TOL):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 3:
        raise DomainError(f"expected 3-vectors, got shape {p.shape}")
    if np.any(np.abs(np.linalg.norm(p, axis=-1) - 1.0) > tol):
        raise DomainError("point is not on the unit sphere")
    return p


def check_tangent(p, v, tol=TANGENT_TOL):
    v = np.asarray(v, dtype=float)
    scale = np.maximum(np.linalg.norm(v, axis=-1), 1.0)
    if np.any(np.abs(np.sum(p * v, axis=-1)) > tol * scale):
        raise DomainError("vector is not tangent to the sphere at its base point")
    return v


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


@lru_cache(maxsize=64)
def _grid_fields(phi: HarmonicSum, resolution: int):
    pts, _ = equal_area_grid(resolution)
    return phi.value(pts), phi.laplacian(pts)


def _curvature_from_fields(phi_vals, lap_vals, t):
    return np.exp(-t * phi_vals) * (1.0 - 0.5 * t * lap_vals)


@dataclass(frozen=True)
class ConformalMetric:
    """``exp(t phi) g_can`` with ``phi`` a finite real spherical-harmonic sum.

    The constructor rejects conformal exponents whose Gauss curvature is not
    positive on the validation grid for some t in {0, 1/20, ..., 1}.
    """

    harmonic_terms: Tuple[Tuple[int, int, float], ...] = ()
    t: float = 1.0
    grid_resolution: int = field(default=DEFAULT_GRID, compare=False)
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        phi = HarmonicSum(self.harmonic_terms)
        object.__setattr__(self, "harmonic_terms", phi.terms)
        object.__setattr__(self, "t", float(self.t))
        if not 0.0 <= self.t <= 1.0:
            raise DomainError(f"homotopy parameter t={self.t} outside [0, 1]")
        if self.validate:
            kmin = min_curvature(self, self.grid_resolution)
            if not kmin > 0.0:
                raise ConvexityError(
                    f"convexity gate failed: min Gauss curvature {kmin:.6g} <= 0 on the "
                    f"{self.grid_resolution}x{2 * self.grid_resolution} grid"
                )

    @classmethod
    def round(cls, t: float = 0.0) -> "ConformalMetric":
        return cls((), t=t, validate=False)

    @property
    def phi(self) -> HarmonicSum:
        return HarmonicSum(self.harmonic_terms)

    @property
    def is_round(self) -> bool:
        return self.t == 0.0 or self.phi.is_zero

    def at(self, t: float) -> "ConformalMetric":
        """Same conformal exponent at another homotopy parameter (no re-validation)."""
        return replace(self, t=t, validate=False)

    # vectorized evaluators; inputs (..., 3), no domain checks
    def conformal_exponent(self, p):
        """u = t phi / 2, so that g_t = exp(2u) g_can."""
        return 0.5 * self.t * self.phi.value(p)

    def speed_weight(self, p):
        return np.exp(0.5 * self.t * self.phi.value(p))

    def curvature(self, p):
        phi = self.phi
        return _curvature_from_fields(phi.value(p), phi.laplacian(p), self.t)

    def min_curvature_at_t(self, resolution: int = DEFAULT_GRID) -> float:
        phi_vals, lap_vals = _grid_fields(self.phi, resolution)
        return float(np.min(_curvature_from_fields(phi_vals, lap_vals, self.t)))

    def max_curvature_at_t(self, resolution: int = DEFAULT_GRID) -> float:
        phi_vals, lap_vals = _grid_fields(self.phi, resolution)
        return float(np.max(_curvature_from_fields(phi_vals, lap_vals, self.t)))


def eval_phi(metric: ConformalMetric, p):
    p = check_unit(p)
    return _scalar(metric.phi.value(p))


def laplace_phi(metric: ConformalMetric, p):
    p = check_unit(p)
    return _scalar(metric.phi.laplacian(p))


def gauss_curvature(metric: ConformalMetric, p):
    p = check_unit(p)
    return _scalar(metric.curvature(p))


def min_curvature(metric: ConformalMetric, grid_resolution: int = DEFAULT_GRID,
                  t_values: Optional[Sequence[float]] = None) -> float:
    """Minimum of K_t over the equal-area grid and the homotopy grid t in {0, 1/20, ..., 1}."""
    if grid_resolution < 16:
        raise DomainError("grid_resolution must be >= 16")
    ts = T_GRID if t_values is None else np.asarray(t_values, dtype=float)
    phi_vals, lap_vals = _grid_fields(metric.phi, grid_resolution)
    return float(min(np.min(_curvature_from_fields(phi_vals, lap_vals, t)) for t in ts))


def rotate90(p, v):
    """Positive quarter turn ``J v = p x v`` in the tangent plane at ``p``."""
    p = check_unit(p)
    v = check_tangent(p, v)
    return np.cross(p, v)


def metric_speed(metric: ConformalMetric, p, v):
    p = check_unit(p)
    v = check_tangent(p, v)
    return _scalar(metric.speed_weight(p) * np.linalg.norm(v, axis=-1))
