"""
Residual of the prescribed geodesic curvature equation and the corrector.

For a closed curve gamma on (S^2, g_t) and target curvature ``s c``::

    R = D_t gamma' - |gamma'|_t s c(gamma) J gamma'

with the conformal connection of ``g_t = exp(t phi) g_can``::

    D_t gamma' = D_can gamma' + t (d phi(gamma') gamma' - |gamma'|^2 grad phi / 2)

Tangent fields are plain ``(N, 3)`` arrays, row k tangent at node k.
"""

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .curve import (
    DiscreteCurve,
    _dot,
    _normalize,
    STENCIL_ORDER,
    cyclic_differences,
    derivatives,
    frames,
    length,
    resample_constant_speed,
    self_intersects,
    speed_variation,
    tangent_velocity,
)
from .errors import (
    DegenerateCurveError,
    DegenerationError,
    DomainError,
    EmbeddingLossError,
    NonConvergenceError,
)
from .geometry import ConformalMetric
from .harmonics import HarmonicSum, equal_area_grid
from .tridiag import solve_cyclic_tridiagonal


@dataclass(frozen=True)
class CurvatureSpec:
    """Target curvature ``scale * base(p)``; ``base`` is a harmonic sum plus offset."""

    base: HarmonicSum
    scale: float = 1.0

    def __post_init__(self):
        if not isinstance(self.base, HarmonicSum):
            object.__setattr__(self, "base", HarmonicSum(offset=float(self.base)))
        object.__setattr__(self, "scale", float(self.scale))
        if self.scale < 0 or not np.isfinite(self.scale):
            raise DomainError(f"curvature scale must be finite and >= 0, got {self.scale}")
        if self.scale > 0 and self.min_value() < 0:
            raise DomainError("effective curvature s*c must be nonnegative on the validation grid")

    @classmethod
    def constant(cls, value: float, scale: float = 1.0) -> "CurvatureSpec":
        return cls(HarmonicSum(offset=value), scale)

    def with_scale(self, scale: float) -> "CurvatureSpec":
        return CurvatureSpec(self.base, scale)

    def __call__(self, p):
        return self.scale * self.base.value(p)

    def gradient(self, p):
        return self.scale * self.base.ambient_gradient(p)

    def _grid_values(self, resolution=64):
        pts, _ = equal_area_grid(resolution)
        return self.scale * self.base.value(pts)

    def min_value(self, resolution: int = 64) -> float:
        if self.base.is_constant:
            return self.scale * float(self.base.value(np.array([0.0, 0.0, 1.0])))
        return float(np.min(self._grid_values(resolution)))

    def max_value(self, resolution: int = 64) -> float:
        if self.base.is_constant:
            return self.scale * float(self.base.value(np.array([0.0, 0.0, 1.0])))
        return float(np.max(self._grid_values(resolution)))


def check_tangent_field(curve: DiscreteCurve, field_, tol=1e-10):
    field_ = np.asarray(field_, dtype=float)
    if field_.shape != curve.nodes.shape:
        raise DomainError(f"tangent field shape {field_.shape} does not match curve {curve.nodes.shape}")
    mag = np.linalg.norm(field_, axis=1)
    if np.any(np.abs(_dot(field_, curve.nodes)) > tol * np.maximum(mag, 1e-300)):
        raise DomainError("field is not tangent to the curve's nodes")
    return field_


# ---------------------------------------------------------------------------
# residual and its linearization


def residual(curve: DiscreteCurve, metric: ConformalMetric, spec: CurvatureSpec) -> np.ndarray:
    p = curve.nodes
    vel, acc = derivatives(curve)
    v = tangent_velocity(p, vel)
    a = tangent_velocity(p, acc)
    speed = np.linalg.norm(v, axis=1)
    if np.any(speed <= 0.0):
        raise DegenerateCurveError("zero velocity at a node")
    cov = a
    t = metric.t
    if t != 0.0:
        grad = metric.phi.gradient(p)
        cov = a + t * (_dot(grad, v)[:, None] * v - 0.5 * (speed ** 2)[:, None] * grad)
    if spec.scale == 0.0:
        return cov
    w = metric.speed_weight(p)
    return cov - (w * speed * spec(p))[:, None] * np.cross(p, v)


def residual_jvp(curve: DiscreteCurve, metric: ConformalMetric, spec: CurvatureSpec, delta) -> np.ndarray:
    """Exact directional derivative of ``residual`` along node displacements ``delta``.

    Nodes move as ``normalize(p + eps * delta)``; ``delta`` must be tangent.
    """
    p = curve.nodes
    d = np.asarray(delta, dtype=float)
    n = curve.N
    vel, acc = derivatives(curve)
    dvel, dacc = cyclic_differences(d)

    def proj(x, dx):
        xp = _dot(x, p)
        return dx - (_dot(dx, p) + _dot(x, d))[:, None] * p - xp[:, None] * d

    v = tangent_velocity(p, vel)
    dv = proj(vel, dvel)
    da = proj(acc, dacc)
    q = _dot(v, v)
    dq = 2.0 * _dot(v, dv)
    out = da
    t = metric.t
    if t != 0.0:
        phi = metric.phi
        grad = phi.gradient(p)
        dgrad = phi.gradient_jvp(p, d)
        e = _dot(grad, v)
        de = _dot(dgrad, v) + _dot(grad, dv)
        out = out + t * (de[:, None] * v + e[:, None] * dv - 0.5 * dq[:, None] * grad - 0.5 * q[:, None] * dgrad)
    if spec.scale == 0.0:
        return out
    speed = np.sqrt(q)
    dspeed = _dot(v, dv) / speed
    w = metric.speed_weight(p)
    dw = w * 0.5 * t * _dot(metric.phi.ambient_gradient(p), d) if t != 0.0 else np.zeros(n)
    c = spec(p)
    dc = _dot(spec.gradient(p), d)
    jv = np.cross(p, v)
    djv = np.cross(d, v) + np.cross(p, dv)
    coef = w * speed * c
    dcoef = dw * speed * c + w * dspeed * c + w * speed * dc
    return out - dcoef[:, None] * jv - coef[:, None] * djv


def curvature_errors(curve: DiscreteCurve, metric: ConformalMetric, spec: CurvatureSpec, r=None):
    """Normal and tangential residual components divided by ``|gamma'|_t |gamma'|``.

    The normal part is exactly ``kappa_t - s c`` per node.
    """
    p = curve.nodes
    if r is None:
        r = residual(curve, metric, spec)
    vel, _ = derivatives(curve)
    v = tangent_velocity(p, vel)
    q = _dot(v, v)
    T = v / np.sqrt(q)[:, None]
    nrm = np.cross(p, T)
    scale = metric.speed_weight(p) * q
    return _dot(r, nrm) / scale, _dot(r, T) / scale


# ---------------------------------------------------------------------------
# Sobolev preconditioner


def transport_angles(curve: DiscreteCurve, T=None, nrm=None) -> np.ndarray:
    """Angle of the frame at node k+1 parallel-transported back to node k, in frame k."""
    p = curve.nodes
    if T is None:
        T, nrm = frames(curve)
    q = np.roll(p, -1, axis=0)
    Tq = np.roll(T, -1, axis=0)
    axis = np.cross(q, p)
    s = np.linalg.norm(axis, axis=1)
    c = _dot(q, p)
    ax = axis / np.where(s > 0, s, 1.0)[:, None]
    # Rodrigues rotation taking q to p, applied to the frame vector at q
    moved = Tq * c[:, None] + np.cross(ax, Tq) * s[:, None] + ax * (_dot(ax, Tq) * (1.0 - c))[:, None]
    return np.arctan2(_dot(moved, nrm), _dot(moved, T))


def sobolev_operator(curve: DiscreteCurve, T=None, nrm=None):
    """Cyclic tridiagonal coefficients of ``-D_h^2 + I`` in complex frame coordinates."""
    n = curve.N
    alpha = transport_angles(curve, T, nrm)
    inv_h2 = float(n * n)
    upper = -inv_h2 * np.exp(1j * alpha)
    lower = -inv_h2 * np.exp(-1j * np.roll(alpha, 1))
    diag = np.full(n, 2.0 * inv_h2 + 1.0, dtype=complex)
    return lower, diag, upper


def sobolev_field(curve: DiscreteCurve, r) -> np.ndarray:
    """Solve ``(-D_h^2 + I) X = r`` for a tangent field, coupling nodes through parallel transport."""
    T, nrm = frames(curve)
    r = np.asarray(r, dtype=float)
    z = _dot(r, T) + 1j * _dot(r, nrm)
    lower, diag, upper = sobolev_operator(curve, T, nrm)
    x = solve_cyclic_tridiagonal(lower, diag, upper, z)
    assert np.all(np.isfinite(x)), "positive-definite cyclic solve produced non-finite values"
    return x.real[:, None] * T + x.imag[:, None] * nrm


def vector_field(curve: DiscreteCurve, metric: ConformalMetric, spec: CurvatureSpec) -> np.ndarray:
    """The zero-finding field ``X = (-D^2 + 1)^{-1} (-R)``; flowing along ``-X`` decreases R."""
    return sobolev_field(curve, -residual(curve, metric, spec))


# ---------------------------------------------------------------------------
# Jacobians in per-node tangent frames


BAND = STENCIL_ORDER // 2  # residual at node k depends on nodes k-BAND..k+BAND


def _colouring(n: int, width: int = 2 * BAND + 1):
    """Groups of nodes at cyclic distance >= width, for banded Jacobian probing."""
    full = (n // width) * width
    groups = [np.arange(c, full, width) for c in range(width)]
    groups += [np.array([k]) for k in range(full, n)]
    return groups


def _banded_jacobian(curve, probe, directions):
    """Assemble a dense Jacobian from probes that perturb a colour class at a time.

    ``probe(delta)`` returns the (linearized) residual change for the node
    displacement field ``delta``; ``directions`` is a list of (N, 3) unit
    tangent fields, one per input coordinate per node.
    """
    n = curve.N
    nd = len(directions)
    jac = np.zeros((2 * n, nd * n))
    T, nrm = frames(curve)
    for group in _colouring(n):
        for di, dirs in enumerate(directions):
            delta = np.zeros((n, 3))
            delta[group] = dirs[group]
            dr = probe(delta)
            rows = np.stack([_dot(dr, T), _dot(dr, nrm)], axis=1)
            for j in group:
                for k in (j + np.arange(-BAND, BAND + 1)) % n:
                    jac[2 * k:2 * k + 2, nd * j + di] = rows[k]
    return jac


def jacobian_fd(curve: DiscreteCurve, metric: ConformalMetric, spec: CurvatureSpec, h_fd: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian, ``2N x 2N``, in the frames (T_k, n_k).

    Row ``2k + i`` is component i of R_k; column ``2j + i`` moves node j along
    frame vector i through ``normalize(p + h e)``.
    """
    if not 1e-8 <= h_fd <= 1e-4:
        raise DomainError("h_fd must lie in [1e-8, 1e-4]")
    T, nrm = frames(curve)
    p = curve.nodes

    def probe(delta):
        plus = DiscreteCurve(_normalize(p + h_fd * delta))
        minus = DiscreteCurve(_normalize(p - h_fd * delta))
        return (residual(plus, metric, spec) - residual(minus, metric, spec)) / (2.0 * h_fd)

    return _banded_jacobian(curve, probe, [T, nrm])


def jacobian(curve: DiscreteCurve, metric: ConformalMetric, spec: CurvatureSpec) -> np.ndarray:
    """Analytic counterpart of ``jacobian_fd`` assembled from ``residual_jvp``."""
    T, nrm = frames(curve)
    return _banded_jacobian(curve, lambda d: residual_jvp(curve, metric, spec, d), [T, nrm])


# ---------------------------------------------------------------------------
# corrector


@dataclass
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 500
    damping: float = 1.0
    backtrack: float = 0.5
    min_damping: float = 1e-6
    newton_on: bool = True
    newton_threshold: float = 1e-3
    rcond: float = 1e-8
    embeddedness_monitor: bool = True
    clearance: float = 1e-4
    degeneration_factor: float = 0.1


@dataclass
class SolveDiagnostics:
    iterations: int = 0
    newton_steps: int = 0
    descent_steps: int = 0
    curvature_error: float = float("inf")
    tangential_error: float = float("inf")
    residual_inf: float = float("inf")
    speed_variation: float = float("inf")

    def to_dict(self):
        return asdict(self)


@dataclass
class SolveResult:
    curve: DiscreteCurve
    diagnostics: SolveDiagnostics


def length_lower_estimate(metric: ConformalMetric, spec: CurvatureSpec) -> float:
    """Heuristic lower length scale ``2 pi / (max s c + sqrt(max K))`` for the degeneration guard."""
    kmax = max(metric.max_curvature_at_t(), 1e-12)
    return 2.0 * np.pi / (max(spec.max_value(), 0.0) + np.sqrt(kmax))


def _measure(curve, metric, spec):
    r = residual(curve, metric, spec)
    normal, tangential = curvature_errors(curve, metric, spec, r)
    return r, normal, tangential


def _newton_step(curve, metric, spec, normal_err, rcond):
    """Minimum-norm Newton correction along the node normals.

    Tangential node motion is left to the constant-speed retraction; the S^1
    shift and round-sphere rotations show up as (near) null directions and are
    truncated by ``rcond``.
    """
    T, nrm = frames(curve)
    p = curve.nodes
    w = metric.speed_weight(p)
    vel, _ = derivatives(curve)
    q = _dot(tangent_velocity(p, vel), tangent_velocity(p, vel))
    jac = _banded_jacobian(curve, lambda d: residual_jvp(curve, metric, spec, d), [nrm])[1::2]
    # rows scaled to curvature units so the target is -normal_err
    jac = jac / (w * q)[:, None]
    step, *_ = np.linalg.lstsq(jac, -normal_err, rcond=rcond)
    return step[:, None] * nrm


def _retract(p, metric):
    # chord passes only: iterates are near-uniform, and a spline pass would
    # re-discretize the candidate and break the monotone line search
    return resample_constant_speed(DiscreteCurve(_normalize(p)), metric, spline_threshold=np.inf)


def solve_zero(initial: DiscreteCurve, metric: ConformalMetric, spec: CurvatureSpec,
               opts: Optional[SolverOptions] = None) -> SolveResult:
    """Drive the curve to a zero of the residual.

    Each iteration takes either a Sobolev descent step ``gamma - alpha X`` or,
    once the curvature error is below ``opts.newton_threshold``, a Newton step
    in normal displacements; ``alpha`` backtracks on the max curvature error.
    Every candidate is retracted to the sphere and re-sampled at constant
    g_t-speed. Convergence is ``max_k |kappa_t - s c| < opts.tol``.
    """
    opts = opts or SolverOptions()
    diag = SolveDiagnostics()
    try:
        curve = _retract(initial.nodes, metric)
    except DegenerateCurveError as exc:
        raise DegenerationError(str(exc), curve=initial) from exc
    lmin = opts.degeneration_factor * length_lower_estimate(metric, spec)
    if opts.embeddedness_monitor and not self_intersects(curve, opts.clearance).embedded:
        raise EmbeddingLossError("initial curve is not embedded", curve=curve)

    r, normal, tangential = _measure(curve, metric, spec)
    err = float(np.max(np.abs(normal)))

    def finish():
        diag.curvature_error = err
        diag.tangential_error = float(np.max(np.abs(tangential)))
        diag.residual_inf = float(np.max(np.linalg.norm(r, axis=1)))
        diag.speed_variation = speed_variation(curve, metric)
        return SolveResult(curve, diag)

    stalled = 0
    for it in range(opts.max_iter):
        if err < opts.tol:
            return finish()
        diag.iterations = it + 1
        use_newton = opts.newton_on and (err < opts.newton_threshold or stalled > 0)
        if use_newton:
            direction = _newton_step(curve, metric, spec, normal, opts.rcond)
        else:
            direction = -sobolev_field(curve, -r)
        alpha = opts.damping
        accepted = None
        while alpha >= opts.min_damping:
            try:
                cand = _retract(curve.nodes + alpha * direction, metric)
                c_r, c_normal, c_tan = _measure(cand, metric, spec)
            except DegenerateCurveError:
                alpha *= opts.backtrack
                continue
            c_err = float(np.max(np.abs(c_normal)))
            if np.isfinite(c_err) and c_err < err:
                accepted = (cand, c_r, c_normal, c_tan, c_err)
                break
            alpha *= opts.backtrack
        if accepted is None:
            if opts.newton_on and not use_newton:
                stalled += 1
                continue
            diag.curvature_error = err
            raise NonConvergenceError(
                f"line search failed at iteration {it + 1} (curvature error {err:.3e})",
                curve=curve, diagnostics=diag.to_dict())
        curve, r, normal, tangential, err = accepted
        if use_newton:
            diag.newton_steps += 1
        else:
            diag.descent_steps += 1
            stalled = 0
        if length(curve, metric) < lmin:
            raise DegenerationError(
                f"curve length fell below {lmin:.3g} (degeneration guard)", curve=curve,
                diagnostics=diag.to_dict())
        if opts.embeddedness_monitor and not self_intersects(curve, opts.clearance).embedded:
            raise EmbeddingLossError("curve lost embeddedness during iteration", curve=curve,
                                     diagnostics=diag.to_dict())
    if err < opts.tol:
        return finish()
    diag.curvature_error = err
    raise NonConvergenceError(
        f"no convergence after {diag.iterations} iterations (curvature error {err:.3e})",
        curve=curve, diagnostics=diag.to_dict())
